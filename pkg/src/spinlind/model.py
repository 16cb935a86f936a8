"""Spin-system domain types and the JSON file formats that carry them.

A spin-system file looks like::

    {"name": "demo",
     "field": {"magnitude_T": 0.35, "direction": [0, 0, 1]},
     "electron": {"g": 2.0023, "position_angstrom": [0, 0, 0]},
     "nuclei": [{"id": 0, "isotope": "1H", "spin": 0.5,
                 "position_angstrom": [3, 0, 0], "hyperfine_MHz": 1.2}, ...]}

An ensemble file wraps an equilibrium system and a list of displaced
geometries that override only positions and hyperfine couplings.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .constants import CODATA2018, PhysicalConstants, mhz_to_rad_s
from .errors import ParseError, ValidationError

Vector3 = tuple[float, float, float]

UNIT_TOLERANCE = 1e-12


def _vec3(value: Any, what: str) -> Vector3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValidationError(f"{what} must be a list of 3 numbers, got {value!r}")
    out = tuple(_number(v, what) for v in value)
    if not all(math.isfinite(v) for v in out):
        raise ValidationError(f"{what} must be finite, got {value!r}")
    return out  # type: ignore[return-value]


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{what} must be a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class NuclearSpinSite:
    id: int
    isotope: str
    position: Vector3  # Angstrom
    gamma: float  # rad s^-1 T^-1
    spin_I: float = 0.5
    hyperfine_MHz: float = 0.0

    def __post_init__(self):
        if self.spin_I != 0.5:
            raise ValidationError(f"nucleus {self.id}: only spin 1/2 is supported, got {self.spin_I}")
        if self.gamma == 0 or not math.isfinite(self.gamma):
            raise ValidationError(f"nucleus {self.id}: gamma must be finite and non-zero")
        if len(self.position) != 3 or not all(math.isfinite(x) for x in self.position):
            raise ValidationError(f"nucleus {self.id}: position must be 3 finite numbers")
        if not math.isfinite(self.hyperfine_MHz):
            raise ValidationError(f"nucleus {self.id}: hyperfine coupling must be finite")

    @property
    def hyperfine_rad_s(self) -> float:
        return mhz_to_rad_s(self.hyperfine_MHz)


@dataclass(frozen=True)
class SpinSystem:
    """Electron, nuclei and static field for one molecular geometry.

    ``field_magnitude`` is carried for provenance only; the dynamics work in
    the rotating frame and never read it.
    """

    name: str
    nuclei: tuple[NuclearSpinSite, ...]
    field_direction: Vector3 = (0.0, 0.0, 1.0)
    field_magnitude: float = 0.0
    electron_g: float = 2.0023193
    electron_position: Vector3 | None = None

    def __post_init__(self):
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        norm = math.sqrt(sum(c * c for c in self.field_direction))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise ValidationError(
                f"{self.name}: field direction must be a unit vector (|d| = {norm!r})"
            )
        ids = [site.id for site in self.nuclei]
        if ids != list(range(len(ids))):
            raise ValidationError(
                f"{self.name}: nucleus ids must be unique and contiguous from 0 in order, got {ids}"
            )

    @property
    def n_nuclei(self) -> int:
        return len(self.nuclei)

    @property
    def positions(self) -> np.ndarray:
        """(N, 3) array of nuclear positions in Angstrom."""
        return np.array([site.position for site in self.nuclei], dtype=float).reshape(-1, 3)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([site.gamma for site in self.nuclei], dtype=float)

    @property
    def hyperfine_rad_s(self) -> np.ndarray:
        return np.array([site.hyperfine_rad_s for site in self.nuclei], dtype=float)

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(self.field_direction, dtype=float)

    def with_geometry(
        self,
        positions: Sequence[Sequence[float]],
        hyperfine_MHz: Sequence[float] | None = None,
        name: str | None = None,
    ) -> SpinSystem:
        """Copy of this system with new nuclear positions (and optionally couplings)."""
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (self.n_nuclei, 3):
            raise ValidationError(
                f"{self.name}: expected {self.n_nuclei} positions, got array of shape {positions.shape}"
            )
        if hyperfine_MHz is None:
            hyperfine_MHz = [site.hyperfine_MHz for site in self.nuclei]
        if len(hyperfine_MHz) != self.n_nuclei:
            raise ValidationError(
                f"{self.name}: expected {self.n_nuclei} hyperfine values, got {len(hyperfine_MHz)}"
            )
        nuclei = tuple(
            replace(site, position=tuple(float(x) for x in pos), hyperfine_MHz=float(a))
            for site, pos, a in zip(self.nuclei, positions, hyperfine_MHz)
        )
        return replace(self, nuclei=nuclei, name=self.name if name is None else name)


@dataclass(frozen=True)
class EnsembleInput:
    equilibrium: SpinSystem
    geometries: tuple[SpinSystem, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "geometries", tuple(self.geometries))
        if not self.geometries:
            raise ValidationError("ensemble must contain at least one geometry")
        ref = self.equilibrium.nuclei
        for geom in self.geometries:
            if geom.n_nuclei != len(ref):
                raise ValidationError(
                    f"geometry {geom.name!r} has {geom.n_nuclei} nuclei, equilibrium has {len(ref)}"
                )
            for a, b in zip(ref, geom.nuclei):
                if (a.id, a.isotope, a.gamma) != (b.id, b.isotope, b.gamma):
                    raise ValidationError(
                        f"geometry {geom.name!r}: nucleus {b.id} differs from equilibrium in id/isotope/gamma"
                    )

    @property
    def labels(self) -> list[str]:
        return [g.name for g in self.geometries]


# -- ingestion --------------------------------------------------------------


def system_from_dict(data: Any, constants: PhysicalConstants = CODATA2018) -> SpinSystem:
    if not isinstance(data, dict):
        raise ValidationError("spin system must be a JSON object")
    try:
        name = data["name"]
        fld = data["field"]
        raw_nuclei = data["nuclei"]
    except KeyError as exc:
        raise ValidationError(f"missing key {exc.args[0]!r}") from None
    if not isinstance(name, str):
        raise ValidationError("name must be a string")
    if not isinstance(fld, dict) or "direction" not in fld:
        raise ValidationError("field must be an object with a direction")
    direction = _vec3(fld["direction"], "field.direction")
    magnitude = _number(fld.get("magnitude_T", 0.0), "field.magnitude_T")

    electron = data.get("electron") or {}
    g = _number(electron.get("g", 2.0023193), "electron.g")
    e_pos = electron.get("position_angstrom")
    e_pos = None if e_pos is None else _vec3(e_pos, "electron.position_angstrom")

    if not isinstance(raw_nuclei, list):
        raise ValidationError("nuclei must be a list")
    nuclei = []
    for k, raw in enumerate(raw_nuclei):
        if not isinstance(raw, dict):
            raise ValidationError(f"nuclei[{k}] must be an object")
        try:
            nid = raw["id"]
            isotope = raw["isotope"]
            pos = _vec3(raw["position_angstrom"], f"nuclei[{k}].position_angstrom")
            a_mhz = _number(raw["hyperfine_MHz"], f"nuclei[{k}].hyperfine_MHz")
        except KeyError as exc:
            raise ValidationError(f"nuclei[{k}]: missing key {exc.args[0]!r}") from None
        if isinstance(nid, bool) or not isinstance(nid, int):
            raise ValidationError(f"nuclei[{k}].id must be an integer")
        if "gamma_rad_per_s_T" in raw:
            gamma = _number(raw["gamma_rad_per_s_T"], f"nuclei[{k}].gamma_rad_per_s_T")
        else:
            try:
                gamma = constants.gamma(isotope)
            except KeyError:
                raise ValidationError(
                    f"nuclei[{k}]: unknown isotope {isotope!r}; supply gamma_rad_per_s_T"
                ) from None
        spin = _number(raw.get("spin", 0.5), f"nuclei[{k}].spin")
        nuclei.append(NuclearSpinSite(nid, str(isotope), pos, gamma, spin, a_mhz))

    nuclei.sort(key=lambda s: s.id)
    return SpinSystem(
        name=name,
        nuclei=tuple(nuclei),
        field_direction=direction,
        field_magnitude=magnitude,
        electron_g=g,
        electron_position=e_pos,
    )


def ensemble_from_dict(data: Any, constants: PhysicalConstants = CODATA2018) -> EnsembleInput:
    if not isinstance(data, dict) or "equilibrium" not in data or "geometries" not in data:
        raise ValidationError("ensemble must be an object with 'equilibrium' and 'geometries'")
    eq = system_from_dict(data["equilibrium"], constants)
    raw_geoms = data["geometries"]
    if not isinstance(raw_geoms, list) or not raw_geoms:
        raise ValidationError("ensemble must contain at least one geometry")
    geoms = []
    for k, raw in enumerate(raw_geoms):
        if not isinstance(raw, dict):
            raise ValidationError(f"geometries[{k}] must be an object")
        try:
            positions = raw["positions_angstrom"]
            hyperfine = raw["hyperfine_MHz"]
        except KeyError as exc:
            raise ValidationError(f"geometries[{k}]: missing key {exc.args[0]!r}") from None
        label = str(raw.get("label", f"geometry_{k}"))
        if not isinstance(positions, list) or len(positions) != eq.n_nuclei:
            raise ValidationError(
                f"geometry {label!r}: expected {eq.n_nuclei} positions, got "
                f"{len(positions) if isinstance(positions, list) else positions!r}"
            )
        if not isinstance(hyperfine, list) or len(hyperfine) != eq.n_nuclei:
            raise ValidationError(f"geometry {label!r}: expected {eq.n_nuclei} hyperfine values")
        pos = [_vec3(p, f"geometry {label!r} position") for p in positions]
        hf = [_number(a, f"geometry {label!r} hyperfine") for a in hyperfine]
        geoms.append(eq.with_geometry(pos, hf, name=label))
    return EnsembleInput(eq, tuple(geoms))


def _read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from None


def load_system(path: str | Path, constants: PhysicalConstants = CODATA2018) -> SpinSystem:
    """Read and validate a spin-system JSON file."""
    return system_from_dict(_read_json(path), constants)


def load_ensemble(path: str | Path, constants: PhysicalConstants = CODATA2018) -> EnsembleInput:
    """Read and validate an ensemble JSON file."""
    return ensemble_from_dict(_read_json(path), constants)


# -- serialization ----------------------------------------------------------


def system_to_dict(system: SpinSystem) -> dict:
    electron: dict[str, Any] = {"g": system.electron_g}
    if system.electron_position is not None:
        electron["position_angstrom"] = list(system.electron_position)
    return {
        "name": system.name,
        "field": {
            "magnitude_T": system.field_magnitude,
            "direction": list(system.field_direction),
        },
        "electron": electron,
        "nuclei": [
            {
                "id": site.id,
                "isotope": site.isotope,
                "gamma_rad_per_s_T": site.gamma,
                "spin": site.spin_I,
                "position_angstrom": list(site.position),
                "hyperfine_MHz": site.hyperfine_MHz,
            }
            for site in system.nuclei
        ],
    }


def ensemble_to_dict(ensemble: EnsembleInput) -> dict:
    return {
        "equilibrium": system_to_dict(ensemble.equilibrium),
        "geometries": [
            {
                "label": geom.name,
                "positions_angstrom": [list(site.position) for site in geom.nuclei],
                "hyperfine_MHz": [site.hyperfine_MHz for site in geom.nuclei],
            }
            for geom in ensemble.geometries
        ],
    }


def save_system(system: SpinSystem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(system), indent=2) + "\n", encoding="utf-8")


def save_ensemble(ensemble: EnsembleInput, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(ensemble), indent=1) + "\n", encoding="utf-8")
