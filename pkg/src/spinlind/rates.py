"""Nuclear flip-flop rates and their ensemble spread.

For every nuclear pair (i, j) of one geometry this module computes

* the dipolar coupling ``J_ij``,
* the dipolar broadening ``kappa_ij`` of the pair's lineshape due to all
  other nuclei,
* the hyperfine detuning ``delta_ij = |A_i - A_j|`` (or 0 in ``zero`` mode),
* the flip-flop rate
  ``T_ij = 2 sqrt(2 pi) norm_a J^2/kappa exp(-delta^2 / (8 kappa^2))``,

and, over an ensemble of geometries, the population standard deviation of
``T_ij`` that later serves as the dephasing rate of the pair's channel.
All frequencies are angular (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .constants import ANGSTROM, CODATA2018, PhysicalConstants, rad_s_to_mhz
from .errors import DegenerateGeometryError, DivergentRateError, PhysicsError, ValidationError
from .model import EnsembleInput, NuclearSpinSite, SpinSystem
from .parallel import ordered_map

DELTA_MODES = ("ab-initio", "zero")
CONVENTIONS = ("verbatim", "si")
KAPPA_FLOOR = 1e-6  # rad/s
MIN_SEPARATION = 1e-3  # Angstrom


def _check_mode(delta_mode: str) -> None:
    if delta_mode not in DELTA_MODES:
        raise ValidationError(f"delta_mode must be one of {DELTA_MODES}, got {delta_mode!r}")


def _dipolar_prefactor(constants: PhysicalConstants, convention: str) -> float:
    if convention == "verbatim":
        return -0.25 * constants.hbar * constants.mu0
    if convention == "si":
        return -0.25 * constants.hbar * constants.mu0 / (4.0 * math.pi)
    raise ValidationError(f"convention must be one of {CONVENTIONS}, got {convention!r}")


def dipolar_coupling(
    site_i: NuclearSpinSite,
    site_j: NuclearSpinSite,
    field_direction,
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
) -> float:
    """Dipolar coupling between two nuclei in rad/s.

    ``J = -(1/4) g_i g_j hbar mu0 (1 - 3 cos^2 theta) / r^3`` with theta the
    angle between the internuclear vector and the field. The ``si``
    convention replaces ``mu0`` by ``mu0 / 4 pi``.
    """
    r_vec = (np.asarray(site_j.position, dtype=float) - np.asarray(site_i.position, dtype=float))
    r = float(np.linalg.norm(r_vec))
    if r < MIN_SEPARATION:
        raise DegenerateGeometryError(
            f"nuclei {site_i.id} and {site_j.id} are coincident (r = {r:.3g} A)"
        )
    cos_theta = float(np.dot(r_vec, np.asarray(field_direction, dtype=float))) / r
    r_m = r * ANGSTROM
    pref = _dipolar_prefactor(constants, convention)
    return pref * site_i.gamma * site_j.gamma * (1.0 - 3.0 * cos_theta**2) / r_m**3


def coupling_matrix(
    system: SpinSystem,
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
) -> np.ndarray:
    """Symmetric (N, N) matrix of dipolar couplings; zero diagonal, NaN for coincident pairs."""
    pos = system.positions
    gam = system.gammas
    r_vec = pos[None, :, :] - pos[:, None, :]
    r = np.linalg.norm(r_vec, axis=-1)
    n = system.n_nuclei
    off = ~np.eye(n, dtype=bool)
    degenerate = off & (r < MIN_SEPARATION)
    safe_r = np.where(off & ~degenerate, r, 1.0)
    cos_theta = (r_vec @ system.direction) / safe_r
    pref = _dipolar_prefactor(constants, convention)
    J = pref * np.outer(gam, gam) * (1.0 - 3.0 * cos_theta**2) / (safe_r * ANGSTROM) ** 3
    J[~off] = 0.0
    J[degenerate] = np.nan
    return J


def kappa_from_couplings(J: np.ndarray, i: int, j: int, spin_I: float = 0.5) -> float:
    """Broadening of pair (i, j) from a precomputed coupling matrix.

    The sum ``(16/3) I(I+1) sum_n (J_in - J_jn)^2`` has units of
    frequency squared, so its square root is returned as the linewidth.
    """
    mask = np.ones(J.shape[0], dtype=bool)
    mask[[i, j]] = False
    diff = J[i, mask] - J[j, mask]
    total = (16.0 / 3.0) * spin_I * (spin_I + 1.0) * float(np.sum(diff * diff))
    return math.sqrt(total)


def kappa(
    pair: tuple[int, int],
    system: SpinSystem,
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
) -> float:
    i, j = pair
    if system.n_nuclei < 2:
        raise ValidationError(f"{system.name}: at least 2 nuclei are required")
    J = coupling_matrix(system, constants, convention)
    value = kappa_from_couplings(J, i, j, system.nuclei[i].spin_I)
    if math.isnan(value):
        raise DegenerateGeometryError(f"pair ({i}, {j}): coincident nuclei in the broadening sum")
    return value


def flipflop_rate(
    J: float,
    kappa: float,
    delta: float,
    norm_a: float = 1.0,
    kappa_floor: float = KAPPA_FLOOR,
) -> float:
    """Flip-flop rate of one pair in rad/s.

    Returns 0 for an unbroadened (``kappa <= kappa_floor``) detuned pair and
    raises :class:`DivergentRateError` for an unbroadened resonant one.
    """
    if kappa < 0 or delta < 0:
        raise ValidationError("kappa and delta must be non-negative")
    if norm_a <= 0:
        raise ValidationError("normalization factor must be positive")
    if kappa <= kappa_floor:
        if delta > 0:
            return 0.0
        raise DivergentRateError(
            f"resonant pair with no dipolar broadening (kappa = {kappa:.3g} rad/s)"
        )
    return 2.0 * math.sqrt(2.0 * math.pi) * norm_a * J * J / kappa * math.exp(
        -(delta * delta) / (8.0 * kappa * kappa)
    )


@dataclass(frozen=True)
class FlipFlopPair:
    i: int
    j: int
    J: float
    kappa: float
    delta: float
    rate_T: float


@dataclass(frozen=True)
class RateTable:
    label: str
    pairs: tuple[FlipFlopPair, ...]

    def rates(self) -> np.ndarray:
        return np.array([p.rate_T for p in self.pairs])


@dataclass
class _PairEval:
    i: int
    j: int
    J: float
    kappa: float
    delta: float
    rate_T: float
    error: PhysicsError | None = None


def _evaluate_pairs(
    system: SpinSystem,
    delta_mode: str,
    norm_a: float,
    constants: PhysicalConstants,
    convention: str,
    kappa_floor: float,
) -> list[_PairEval]:
    _check_mode(delta_mode)
    if system.n_nuclei < 2:
        raise ValidationError(f"{system.name}: at least 2 nuclei are required for pair rates")
    J = coupling_matrix(system, constants, convention)
    A = system.hyperfine_rad_s
    out = []
    for i, j in combinations(range(system.n_nuclei), 2):
        k = kappa_from_couplings(J, i, j, system.nuclei[i].spin_I)
        delta = abs(A[i] - A[j]) if delta_mode == "ab-initio" else 0.0
        item = _PairEval(i, j, float(J[i, j]), k, delta, math.nan)
        if math.isnan(item.J) or math.isnan(k):
            item.error = DegenerateGeometryError(
                f"{system.name}: pair ({i}, {j}): coincident nuclei"
            )
        else:
            try:
                item.rate_T = flipflop_rate(item.J, k, delta, norm_a, kappa_floor)
            except DivergentRateError as exc:
                item.error = DivergentRateError(f"{system.name}: pair ({i}, {j}): {exc}")
        out.append(item)
    return out


def pair_table(
    system: SpinSystem,
    delta_mode: str = "ab-initio",
    norm_a: float = 1.0,
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
    kappa_floor: float = KAPPA_FLOOR,
) -> RateTable:
    """Per-pair couplings, broadenings, detunings and rates for one geometry."""
    evals = _evaluate_pairs(system, delta_mode, norm_a, constants, convention, kappa_floor)
    for e in evals:
        if e.error is not None:
            raise e.error
    return RateTable(
        system.name,
        tuple(FlipFlopPair(e.i, e.j, e.J, e.kappa, e.delta, e.rate_T) for e in evals),
    )


@dataclass
class EnsembleRates:
    """Per-pair rates over an ensemble and their population standard deviation.

    Array fields have shape ``(n_geometries, n_pairs)``; entries of a pair
    that failed in some geometry are NaN there and the pair is flagged.
    """

    pairs: list[tuple[int, int]]
    labels: list[str]
    delta_mode: str
    J: np.ndarray
    kappa: np.ndarray
    delta: np.ndarray
    rates: np.ndarray
    sigma: np.ndarray
    flagged: np.ndarray
    messages: dict[tuple[int, int], str] = field(default_factory=dict)

    def sigma_of(self, i: int, j: int) -> float:
        return float(self.sigma[self.pairs.index((min(i, j), max(i, j)))])


def rate_spread(rates: np.ndarray) -> np.ndarray:
    """Population standard deviation (divisor = number of geometries) down axis 0."""
    rates = np.asarray(rates, dtype=float)
    if rates.ndim == 1:
        rates = rates[:, None]
    # shifting by the first sample keeps identical inputs at exactly zero
    shifted = rates - rates[0]
    dev = shifted - np.sum(shifted, axis=0) / rates.shape[0]
    return np.sqrt(np.sum(dev * dev, axis=0) / rates.shape[0])


def ensemble_rates(
    ensemble: EnsembleInput,
    delta_mode: str = "ab-initio",
    norm_a: float = 1.0,
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
    kappa_floor: float = KAPPA_FLOOR,
    workers: int | None = None,
) -> EnsembleRates:
    _check_mode(delta_mode)
    evals = ordered_map(
        lambda geom: _evaluate_pairs(geom, delta_mode, norm_a, constants, convention, kappa_floor),
        ensemble.geometries,
        workers,
    )
    pairs = [(e.i, e.j) for e in evals[0]]
    J = np.array([[e.J for e in row] for row in evals])
    K = np.array([[e.kappa for e in row] for row in evals])
    D = np.array([[e.delta for e in row] for row in evals])
    T = np.array([[e.rate_T for e in row] for row in evals])

    messages: dict[tuple[int, int], str] = {}
    for row in evals:
        for e in row:
            if e.error is not None and (e.i, e.j) not in messages:
                messages[(e.i, e.j)] = str(e.error)
    flagged = np.array([p in messages for p in pairs], dtype=bool)
    sigma = np.zeros(len(pairs))
    ok = ~flagged
    if ok.any():
        sigma[ok] = rate_spread(T[:, ok])
    return EnsembleRates(pairs, ensemble.labels, delta_mode, J, K, D, T, sigma, flagged, messages)


def point_dipole_hyperfine(
    site: NuclearSpinSite,
    electron_position,
    electron_g: float = 2.0023193,
    field_direction=(0.0, 0.0, 1.0),
    constants: PhysicalConstants = CODATA2018,
) -> float:
    """Secular point-dipole hyperfine coupling in MHz (synthetic data generator)."""
    if electron_position is None:
        raise ValidationError("point-dipole hyperfine needs an electron position")
    r_vec = np.asarray(site.position, dtype=float) - np.asarray(electron_position, dtype=float)
    r = float(np.linalg.norm(r_vec))
    if r < MIN_SEPARATION:
        raise DegenerateGeometryError(f"nucleus {site.id} coincides with the electron")
    cos_theta = float(np.dot(r_vec, np.asarray(field_direction, dtype=float))) / r
    gamma_e = constants.electron_gamma(electron_g)
    a = (constants.mu0 / (4.0 * math.pi)) * gamma_e * site.gamma * constants.hbar
    a *= (1.0 - 3.0 * cos_theta**2) / (r * ANGSTROM) ** 3
    return rad_s_to_mhz(a)


def point_dipole_provider(system: SpinSystem, constants: PhysicalConstants = CODATA2018) -> list[float]:
    """Hyperfine values (MHz) for every nucleus of ``system`` from the point-dipole model."""
    return [
        point_dipole_hyperfine(
            site, system.electron_position, system.electron_g, system.field_direction, constants
        )
        for site in system.nuclei
    ]
