"""Synthetic point-dipole spin systems for demos and self-contained tests.

The ladder series mimics a family of ligands of increasing size: rung k
places the same proton motif (scaled up slightly with k) further from the
electron, so hyperfine detunings shrink quickly down the series while the
internuclear couplings shrink slowly.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .constants import CODATA2018, PhysicalConstants
from .ensemble import generate_ensemble, random_modes
from .errors import ValidationError
from .model import EnsembleInput, NuclearSpinSite, SpinSystem
from .rates import point_dipole_provider

# two geminal H-H pairs (1.78 A apart), Angstrom, centred near the origin
PROTON_MOTIF = np.array(
    [
        [0.00, 0.00, 0.00],
        [1.60, 0.45, 0.62],
        [-0.70, 2.35, 0.95],
        [0.85, 3.05, 1.70],
    ]
)
LADDER_AXIS = np.array([1.0, 0.35, 1.6]) / np.linalg.norm([1.0, 0.35, 1.6])
LADDER_DISTANCES = (3.4, 6.5, 9.5)  # electron to motif centre, Angstrom
LADDER_SCALES = (1.0, 1.12, 1.24)
LADDER_AMPLITUDE = 0.012  # Angstrom per mode displacement


def point_dipole_system(
    name: str,
    positions,
    electron_position=(0.0, 0.0, 0.0),
    isotopes=None,
    field_direction=(0.0, 0.0, 1.0),
    field_magnitude: float = 0.35,
    electron_g: float = 2.0023193,
    constants: PhysicalConstants = CODATA2018,
) -> SpinSystem:
    """Spin system whose hyperfine couplings come from the point-dipole model."""
    positions = np.asarray(positions, dtype=float)
    if isotopes is None:
        isotopes = ["1H"] * len(positions)
    nuclei = tuple(
        NuclearSpinSite(k, iso, tuple(float(x) for x in pos), constants.gamma(iso))
        for k, (iso, pos) in enumerate(zip(isotopes, positions))
    )
    system = SpinSystem(
        name,
        nuclei,
        tuple(float(x) for x in field_direction),
        field_magnitude,
        electron_g,
        tuple(float(x) for x in electron_position),
    )
    hf = point_dipole_provider(system, constants)
    return replace(
        system, nuclei=tuple(replace(s, hyperfine_MHz=a) for s, a in zip(system.nuclei, hf))
    )


def point_dipole_ensemble(
    system: SpinSystem,
    amplitude: float | str = LADDER_AMPLITUDE,
    seed: int = 0,
    constants: PhysicalConstants = CODATA2018,
) -> EnsembleInput:
    modes = random_modes(system.n_nuclei, seed=seed)
    return generate_ensemble(
        system,
        modes,
        amplitude,
        hyperfine_provider=lambda g: point_dipole_provider(g, constants),
        constants=constants,
    )


def ladder(n: int, seed: int = 7) -> list[EnsembleInput]:
    """``n`` ensembles with the motif progressively further from the electron."""
    if n < 1:
        raise ValidationError("ladder needs at least one rung")
    out = []
    centre = PROTON_MOTIF.mean(axis=0)
    for k in range(n):
        if k < len(LADDER_DISTANCES):
            dist, scale = LADDER_DISTANCES[k], LADDER_SCALES[k]
        else:
            extra = k - len(LADDER_DISTANCES) + 1
            dist = LADDER_DISTANCES[-1] + 3.0 * extra
            scale = LADDER_SCALES[-1] + 0.12 * extra
        pos = (PROTON_MOTIF - centre) * scale + dist * LADDER_AXIS
        system = point_dipole_system(f"ladder_{k + 1}", pos)
        out.append(point_dipole_ensemble(system, LADDER_AMPLITUDE, seed=seed))
    return out


def barrier_demo(seed: int = 3) -> EnsembleInput:
    """Four protons: one pair straddles the electron's near field (delta >> kappa),
    the other sits further out where both members see equal couplings."""
    # the outer pair shares r and polar angle, so both members see the same coupling
    radius, height = 4.0, 3.5
    phi = 2.0 * np.arcsin(0.89 / radius)
    pos = np.array(
        [
            [0.0, 0.0, 2.6],  # strongly coupled, on the field axis
            [1.75, 0.0, 2.9],  # its partner, near the magic angle
            [radius * np.cos(0.7), radius * np.sin(0.7), height],
            [radius * np.cos(0.7 + phi), radius * np.sin(0.7 + phi), height],
        ]
    )
    system = point_dipole_system("barrier_demo", pos)
    return point_dipole_ensemble(system, LADDER_AMPLITUDE, seed=seed)


def random_molecule(n_nuclei: int, seed: int = 0, min_sep: float = 1.7, radius: float = 6.0) -> SpinSystem:
    """Random proton cloud around the electron (no two nuclei closer than ``min_sep``)."""
    rng = np.random.default_rng(seed)
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < n_nuclei:
        tries += 1
        if tries > 100000:
            raise ValidationError("could not place nuclei; increase radius")
        p = rng.uniform(-radius, radius, 3)
        r = np.linalg.norm(p)
        if not 2.5 <= r <= radius:
            continue
        if all(np.linalg.norm(p - q) >= min_sep for q in pts):
            pts.append(p)
    return point_dipole_system(f"random_{n_nuclei}_{seed}", np.array(pts))


def parse_template(template: str) -> tuple[str, int]:
    """``barrier-demo``, ``ladder:N`` or ``random:N`` -> (kind, N)."""
    if template == "barrier-demo":
        return "barrier-demo", 4
    kind, _, count = template.partition(":")
    if kind in ("ladder", "random") and count.strip().isdigit() and int(count) > 0:
        return kind, int(count)
    raise ValidationError(
        f"unknown template {template!r}; use barrier-demo, ladder:N or random:N"
    )


def synthesize(template: str, seed: int = 0) -> list[EnsembleInput]:
    kind, n = parse_template(template)
    if kind == "barrier-demo":
        return [barrier_demo()]
    if kind == "ladder":
        return ladder(n)
    system = random_molecule(n, seed=seed)
    return [point_dipole_ensemble(system, LADDER_AMPLITUDE, seed=seed)]
