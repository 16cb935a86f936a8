"""Displaced-geometry ensembles from normal modes.

Each mode contributes two geometries, displaced by ``+q`` and ``-q`` along
its (unit-normalized) displacement vector. With the ``zero-point`` rule the
amplitude is the classical turning point of the harmonic ground state,
``q = sqrt(hbar / (2 mu omega))``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .constants import AMU, ANGSTROM, CODATA2018, PhysicalConstants, wavenumber_to_rad_s
from .errors import ParseError, ValidationError
from .model import EnsembleInput, SpinSystem

NORM_TOLERANCE = 1e-10

HyperfineProvider = Callable[[SpinSystem], Sequence[float]]


@dataclass(frozen=True)
class NormalMode:
    index: int
    frequency_cm1: float
    displacement: np.ndarray  # (N, 3), Frobenius norm 1
    reduced_mass_amu: float = 1.0

    def __post_init__(self):
        disp = np.asarray(self.displacement, dtype=float)
        if disp.ndim != 2 or disp.shape[1] != 3:
            raise ValidationError(f"mode {self.index}: displacement must be an (N, 3) array")
        object.__setattr__(self, "displacement", disp)
        if not self.frequency_cm1 > 0:
            raise ValidationError(
                f"mode {self.index}: frequency must be positive (got {self.frequency_cm1}); "
                "imaginary modes are rejected"
            )
        if not self.reduced_mass_amu > 0:
            raise ValidationError(f"mode {self.index}: reduced mass must be positive")
        norm = float(np.linalg.norm(disp))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(f"mode {self.index}: displacement norm is {norm!r}, expected 1")

    def zero_point_amplitude(self, constants: PhysicalConstants = CODATA2018) -> float:
        """Ground-state classical turning point in Angstrom."""
        omega = wavenumber_to_rad_s(self.frequency_cm1)
        mu = self.reduced_mass_amu * AMU
        return math.sqrt(constants.hbar / (2.0 * mu * omega)) / ANGSTROM


def parse_amplitude_rule(rule: str | float | None) -> str | float:
    """Accept ``"zero-point"``, ``"fixed:<angstrom>"`` or a bare number."""
    if rule is None or rule == "zero-point":
        return "zero-point"
    if isinstance(rule, (int, float)) and not isinstance(rule, bool):
        return float(rule)
    if isinstance(rule, str) and rule.startswith("fixed:"):
        try:
            return float(rule.split(":", 1)[1])
        except ValueError:
            pass
    raise ValidationError(f"amplitude rule must be 'zero-point' or 'fixed:<angstrom>', got {rule!r}")


def generate_ensemble(
    equilibrium: SpinSystem,
    modes: Sequence[NormalMode],
    amplitude_rule: str | float = "zero-point",
    hyperfine_provider: HyperfineProvider | None = None,
    constants: PhysicalConstants = CODATA2018,
) -> EnsembleInput:
    """Build the two-geometries-per-mode ensemble around ``equilibrium``.

    Without a ``hyperfine_provider`` every geometry keeps the equilibrium
    hyperfine couplings, so only the dipolar couplings vary.
    """
    rule = parse_amplitude_rule(amplitude_rule)
    n = equilibrium.n_nuclei
    if not modes:
        raise ValidationError("at least one normal mode is required")
    expected = 3 * n - 6
    if len(modes) < expected:
        warnings.warn(
            f"{equilibrium.name}: {len(modes)} modes supplied, 3N-6 = {expected}", stacklevel=2
        )
    eq_pos = equilibrium.positions
    geometries = []
    for mode in sorted(modes, key=lambda m: m.index):
        if mode.displacement.shape != (n, 3):
            raise ValidationError(
                f"mode {mode.index}: displacement has shape {mode.displacement.shape}, "
                f"system has {n} nuclei"
            )
        q = mode.zero_point_amplitude(constants) if rule == "zero-point" else rule
        for sign, tag in ((1.0, "+"), (-1.0, "-")):
            pos = eq_pos + sign * q * mode.displacement
            geom = equilibrium.with_geometry(pos, name=f"mode{mode.index}{tag}")
            if hyperfine_provider is not None:
                geom = geom.with_geometry(pos, list(hyperfine_provider(geom)))
            geometries.append(geom)
    return EnsembleInput(equilibrium, tuple(geometries))


def modes_from_dict(data) -> list[NormalMode]:
    if not isinstance(data, dict) or not isinstance(data.get("modes"), list):
        raise ValidationError("normal-mode file must be an object with a 'modes' list")
    modes = []
    for k, raw in enumerate(data["modes"]):
        try:
            modes.append(
                NormalMode(
                    index=int(raw["index"]),
                    frequency_cm1=float(raw["frequency_cm1"]),
                    displacement=np.asarray(raw["displacement"], dtype=float),
                    reduced_mass_amu=float(raw.get("reduced_mass_amu", 1.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"modes[{k}]: {exc}") from None
    return modes


def modes_to_dict(modes: Sequence[NormalMode]) -> dict:
    return {
        "modes": [
            {
                "index": m.index,
                "frequency_cm1": m.frequency_cm1,
                "reduced_mass_amu": m.reduced_mass_amu,
                "displacement": m.displacement.tolist(),
            }
            for m in modes
        ]
    }


def load_modes(path: str | Path) -> list[NormalMode]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from None
    return modes_from_dict(data)


def save_modes(modes: Sequence[NormalMode], path: str | Path) -> None:
    Path(path).write_text(json.dumps(modes_to_dict(modes)) + "\n", encoding="utf-8")


def random_modes(
    n_nuclei: int,
    seed: int = 0,
    freq_range: tuple[float, float] = (400.0, 3200.0),
    reduced_mass_amu: float = 1.0,
) -> list[NormalMode]:
    """Deterministic synthetic set of 3N-6 orthonormal modes (for demos and tests)."""
    n_modes = 3 * n_nuclei - 6
    if n_modes < 1:
        raise ValidationError("need at least 3 nuclei for 3N-6 > 0 modes")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((3 * n_nuclei, n_modes)))
    freqs = np.linspace(*freq_range, n_modes)
    return [
        NormalMode(k, float(freqs[k]), q[:, k].reshape(n_nuclei, 3) / np.linalg.norm(q[:, k]), reduced_mass_amu)
        for k in range(n_modes)
    ]
