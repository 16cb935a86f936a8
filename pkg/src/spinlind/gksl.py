"""Spin-1/2 operator algebra and GKSL propagation for small electron-nuclear clusters.

Conventions
-----------
* Site 0 is the electron; sites 1.. are nuclei.
* Hamiltonians are in rad/s, so the generator is ``-i[H, rho] + D(rho)``.
* Superoperators act on row-major vectorized density matrices
  (``rho.reshape(-1)``), for which ``vec(A rho B) = (A kron B^T) vec(rho)``.
* Public time grids are in milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import InvariantViolation, ValidationError

MAX_SPINS = 12
TRACE_TOL = 1e-10
HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = 1e-10

_SZ = np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex)
_SP = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_SM = _SP.T.copy()


def _embed(op: np.ndarray, site: int, n_spins: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, op if k == site else np.eye(2, dtype=complex))
    return out


@dataclass(frozen=True)
class SpinOperatorSet:
    n_spins: int
    sz: tuple[np.ndarray, ...]
    sp: tuple[np.ndarray, ...]
    sm: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def sx(self, site: int) -> np.ndarray:
        return 0.5 * (self.sp[site] + self.sm[site])


def build_operators(n_spins: int) -> SpinOperatorSet:
    """S_z, S_+ and S_- of every site embedded in the 2^n product space."""
    if not 1 <= n_spins <= MAX_SPINS:
        raise ValidationError(f"n_spins must be in [1, {MAX_SPINS}], got {n_spins}")
    return SpinOperatorSet(
        n_spins,
        tuple(_embed(_SZ, k, n_spins) for k in range(n_spins)),
        tuple(_embed(_SP, k, n_spins) for k in range(n_spins)),
        tuple(_embed(_SM, k, n_spins) for k in range(n_spins)),
    )


@dataclass(frozen=True)
class ClusterHamiltonian:
    matrix: np.ndarray
    provenance: Mapping[str, object] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_hamiltonian(
    hyperfine: Sequence[float],
    couplings: Mapping[tuple[int, int], float],
    ops: SpinOperatorSet,
) -> ClusterHamiltonian:
    """Secular electron-nuclear Hamiltonian for an arbitrary number of nuclei.

    ``hyperfine[n]`` couples the electron to nucleus ``n`` (site ``n + 1``)
    through ``A_n S_z I_z``; each coupled pair contributes
    ``J (2 I_z I_z - (I_+ I_- + I_- I_+) / 2)``. Everything in rad/s.
    """
    n_nuc = ops.n_spins - 1
    if len(hyperfine) != n_nuc:
        raise ValidationError(f"expected {n_nuc} hyperfine couplings, got {len(hyperfine)}")
    H = np.zeros((ops.dim, ops.dim), dtype=complex)
    for n, a in enumerate(hyperfine):
        if a:
            H += a * ops.sz[0] @ ops.sz[n + 1]
    for (i, j), J in sorted(couplings.items()):
        if not (0 <= i < n_nuc and 0 <= j < n_nuc and i != j):
            raise ValidationError(f"invalid nuclear pair ({i}, {j})")
        if J:
            si, sj = i + 1, j + 1
            H += J * (
                2.0 * ops.sz[si] @ ops.sz[sj]
                - 0.5 * (ops.sp[si] @ ops.sm[sj] + ops.sm[si] @ ops.sp[sj])
            )
    return ClusterHamiltonian(H, {"hyperfine": tuple(hyperfine), "couplings": dict(couplings)})


def build_cluster_hamiltonian(A_i: float, A_j: float, J_ij: float, ops: SpinOperatorSet) -> ClusterHamiltonian:
    """Electron plus one nuclear pair (3 spins)."""
    if ops.n_spins != 3:
        raise ValidationError("a pair cluster needs operators for exactly 3 spins")
    H = build_hamiltonian([A_i, A_j], {(0, 1): J_ij}, ops)
    return ClusterHamiltonian(H.matrix, {"A_i": A_i, "A_j": A_j, "J_ij": J_ij})


@dataclass(frozen=True)
class DecayChannel:
    operator: np.ndarray
    rate: float  # rad/s

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValidationError(f"decay rate must be >= 0, got {self.rate}")


def electron_dephasing(ops: SpinOperatorSet, rate: float) -> DecayChannel:
    return DecayChannel(ops.sz[0], float(rate))


def build_liouvillian(H: ClusterHamiltonian | np.ndarray, channels: Sequence[DecayChannel] = ()) -> np.ndarray:
    """Row-major vectorized GKSL generator (d^2 x d^2)."""
    Hm = H.matrix if isinstance(H, ClusterHamiltonian) else np.asarray(H, dtype=complex)
    d = Hm.shape[0]
    eye = np.eye(d, dtype=complex)
    L = -1j * (np.kron(Hm, eye) - np.kron(eye, Hm.T))
    for ch in channels:
        C = np.asarray(ch.operator, dtype=complex)
        if C.shape != (d, d):
            raise ValidationError(f"channel operator shape {C.shape} does not match H dimension {d}")
        if ch.rate == 0:
            continue
        CdC = C.conj().T @ C
        L += ch.rate * (
            np.kron(C, C.conj()) - 0.5 * np.kron(CdC, eye) - 0.5 * np.kron(eye, CdC.T)
        )
    return L


def initial_state(ops: SpinOperatorSet) -> np.ndarray:
    """Electron in |+x><+x|, every nucleus maximally mixed."""
    rho = np.full((2, 2), 0.5, dtype=complex)
    for _ in range(ops.n_spins - 1):
        rho = np.kron(rho, 0.5 * np.eye(2, dtype=complex))
    return rho


def check_density_matrix(rho: np.ndarray, where: str = "", positivity: bool = True) -> None:
    """Raise :class:`InvariantViolation` if ``rho`` is not a physical state within tolerance."""
    tr = np.trace(rho)
    if abs(tr - 1.0) >= TRACE_TOL:
        raise InvariantViolation(f"{where}trace deviates from 1: Tr(rho) = {tr!r}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm >= HERMITIAN_TOL:
        raise InvariantViolation(f"{where}Hermiticity error {herm:.3e}")
    if positivity:
        lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if lam < -POSITIVITY_TOL:
            raise InvariantViolation(f"{where}negative eigenvalue {lam:.3e}")


def time_grid(t_max_ms: float = 0.1, n_steps: int = 400) -> np.ndarray:
    """Uniform grid of ``n_steps`` points on [0, t_max_ms]."""
    if not t_max_ms > 0:
        raise ValidationError("t_max must be positive")
    if n_steps < 2:
        raise ValidationError("need at least 2 grid points")
    return np.linspace(0.0, t_max_ms, n_steps)


def _grid_step_seconds(t_ms: np.ndarray) -> float:
    t_ms = np.asarray(t_ms, dtype=float)
    if t_ms.ndim != 1 or t_ms.size < 1:
        raise ValidationError("time grid must be a non-empty 1-D array")
    if t_ms.size == 1:
        return 0.0
    steps = np.diff(t_ms)
    dt = (t_ms[-1] - t_ms[0]) / (t_ms.size - 1)
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ValidationError("time grid must be uniform and strictly increasing")
    return dt * 1e-3


def propagate(
    L: np.ndarray,
    rho0: np.ndarray,
    t_ms: np.ndarray,
    check: bool = True,
) -> np.ndarray:
    """Density matrices on a uniform grid; returns an array of shape (n_t, d, d).

    The one-step propagator ``expm(L dt)`` is formed once and reused.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if L.shape != (d * d, d * d):
        raise ValidationError(f"Liouvillian shape {L.shape} does not match state dimension {d}")
    if check:
        check_density_matrix(rho0, "initial state: ")
    dt = _grid_step_seconds(t_ms)
    step = expm(L * dt)
    n_t = len(t_ms)
    out = np.empty((n_t, d, d), dtype=complex)
    v = rho0.reshape(-1).copy()
    out[0] = rho0
    for k in range(1, n_t):
        v = step @ v
        out[k] = v.reshape(d, d)
        if check:
            check_density_matrix(out[k], f"t = {t_ms[k]:.6g} ms: ")
    return out


@dataclass(frozen=True)
class CoherenceProfile:
    """Normalized electron coherence ``L(t)`` on a time grid in ms."""

    t_ms: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.t_ms, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValidationError("time grid and values must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("time grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValidationError("coherence values must be finite")
        object.__setattr__(self, "t_ms", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.t_ms.size

    def relabel(self, label: str) -> CoherenceProfile:
        return CoherenceProfile(self.t_ms, self.values, label)


def coherence(
    trajectory: np.ndarray,
    ops: SpinOperatorSet,
    t_ms: np.ndarray | None = None,
    label: str = "",
) -> CoherenceProfile:
    """Free-induction coherence ``|Tr(rho(t) S_+)| / |Tr(rho(0) S_+)|``."""
    trajectory = np.asarray(trajectory)
    if trajectory.ndim != 3 or trajectory.shape[0] == 0:
        raise ValidationError("trajectory must be a non-empty stack of density matrices")
    # Tr(rho S+) without forming the products
    sp_t = ops.sp[0].T
    raw = np.abs(np.einsum("kab,ab->k", trajectory, sp_t))
    if raw[0] == 0:
        raise ValidationError("initial state carries no electron coherence")
    values = raw / raw[0]
    if t_ms is None:
        t_ms = np.arange(len(values), dtype=float)
    return CoherenceProfile(np.asarray(t_ms, dtype=float), values, label)


def echo_coherence(
    L: np.ndarray,
    rho0: np.ndarray,
    t_ms: np.ndarray,
    ops: SpinOperatorSet,
    check: bool = True,
    label: str = "",
) -> CoherenceProfile:
    """Hahn-echo coherence with an ideal instantaneous pi_x pulse on the electron.

    ``L(t) = |Tr(S_+ e^{L t/2} X e^{L t/2}[rho0] X)|``, normalized to 1 at
    t = 0. The observable is propagated backwards (adjoint generator) in
    step with the forward state, so the cost is linear in the grid size.
    The forward half-time trajectory is checked for trace, Hermiticity and
    positivity like :func:`propagate`.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if L.shape != (d * d, d * d):
        raise ValidationError(f"Liouvillian shape {L.shape} does not match state dimension {d}")
    if check:
        check_density_matrix(rho0, "initial state: ")
    half = expm(L * (0.5 * _grid_step_seconds(t_ms)))
    half_t = half.T
    X = 2.0 * ops.sx(0)
    v = rho0.reshape(-1).copy()
    # Tr(O sigma) = vec(O^T) . vec(sigma) in row-major order
    w = ops.sp[0].T.reshape(-1).copy()
    raw = np.empty(len(t_ms))
    for k in range(len(t_ms)):
        if k:
            v = half @ v
            w = half_t @ w
            if check:
                check_density_matrix(v.reshape(d, d), f"t = {0.5 * t_ms[k]:.6g} ms: ")
        flipped = X @ v.reshape(d, d) @ X
        raw[k] = abs(w @ flipped.reshape(-1))
    if raw[0] == 0:
        raise ValidationError("initial state carries no electron coherence")
    return CoherenceProfile(np.asarray(t_ms, dtype=float), raw / raw[0], label)


OBSERVABLES = ("echo", "fid")


def simulate_coherence(
    H: ClusterHamiltonian,
    rates: Sequence[float],
    ops: SpinOperatorSet,
    t_ms: np.ndarray,
    observable: str = "echo",
    check: bool = True,
    label: str = "",
) -> CoherenceProfile:
    """Electron coherence of a cluster with one electron S_z channel per rate."""
    channels = [electron_dephasing(ops, g) for g in rates]
    L = build_liouvillian(H, channels)
    rho0 = initial_state(ops)
    if observable == "echo":
        return echo_coherence(L, rho0, t_ms, ops, check=check, label=label)
    if observable == "fid":
        return coherence(propagate(L, rho0, t_ms, check=check), ops, t_ms, label)
    raise ValidationError(f"observable must be one of {OBSERVABLES}, got {observable!r}")
