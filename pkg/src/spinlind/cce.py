"""Pair cluster-correlation expansion of the electron coherence.

Every nuclear pair forms a three-spin cluster (electron + pair) that carries
the pair's equilibrium hyperfine and dipolar parameters and one electron
S_z dephasing channel whose rate is the ensemble spread of the pair's
flip-flop rate. The total coherence is the pointwise product of the cluster
coherences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .constants import CODATA2018, PhysicalConstants
from .errors import ValidationError
from .gksl import (
    CoherenceProfile,
    build_cluster_hamiltonian,
    build_hamiltonian,
    build_operators,
    simulate_coherence,
)
from .model import SpinSystem
from .parallel import ordered_map
from .rates import EnsembleRates, coupling_matrix

CLUSTER_ORDER = 2
ORACLE_MAX_NUCLEI = 5


@dataclass(frozen=True)
class PairCluster:
    i: int
    j: int
    A_i: float  # rad/s
    A_j: float  # rad/s
    J_ij: float  # rad/s
    gamma_K: float  # rad/s
    flagged: bool = False

    def __post_init__(self):
        if not self.i < self.j:
            raise ValidationError(f"cluster ids must satisfy i < j, got ({self.i}, {self.j})")
        if not self.gamma_K >= 0:
            raise ValidationError(f"gamma_K must be >= 0, got {self.gamma_K}")

    @property
    def label(self) -> str:
        return f"{self.i}-{self.j}"


def enumerate_clusters(
    equilibrium: SpinSystem,
    rates: EnsembleRates,
    order: int = CLUSTER_ORDER,
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
) -> list[PairCluster]:
    """One cluster per nuclear pair with equilibrium Hamiltonian parameters."""
    if order != CLUSTER_ORDER:
        raise ValidationError(f"only pair clusters (order 2) are supported, got order {order}")
    n = equilibrium.n_nuclei
    expected = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if list(rates.pairs) != expected:
        raise ValidationError(
            f"rate table pairs do not match the {n}-nucleus equilibrium system"
        )
    J = coupling_matrix(equilibrium, constants, convention)
    A = equilibrium.hyperfine_rad_s
    clusters = []
    for k, (i, j) in enumerate(rates.pairs):
        flagged = bool(rates.flagged[k]) or not np.isfinite(J[i, j])
        clusters.append(
            PairCluster(
                i,
                j,
                float(A[i]),
                float(A[j]),
                0.0 if flagged else float(J[i, j]),
                0.0 if flagged else float(rates.sigma[k]),
                flagged,
            )
        )
    return clusters


_PAIR_OPS = build_operators(3)


def cluster_coherence(
    cluster: PairCluster,
    t_ms: np.ndarray,
    observable: str = "echo",
    check: bool = True,
) -> CoherenceProfile:
    if cluster.flagged:
        return CoherenceProfile(np.asarray(t_ms, dtype=float), np.ones(len(t_ms)), cluster.label)
    H = build_cluster_hamiltonian(cluster.A_i, cluster.A_j, cluster.J_ij, _PAIR_OPS)
    return simulate_coherence(
        H, [cluster.gamma_K], _PAIR_OPS, t_ms, observable=observable, check=check, label=cluster.label
    )


def combine(profiles: Sequence[CoherenceProfile], label: str = "") -> CoherenceProfile:
    """Pointwise product of cluster profiles, multiplied in the given order."""
    if not profiles:
        raise ValidationError("nothing to combine")
    t = profiles[0].t_ms
    total = np.ones_like(t)
    for p in profiles:
        if p.t_ms.shape != t.shape or not np.array_equal(p.t_ms, t):
            raise ValidationError(f"profile {p.label!r} is on a different time grid")
        total = total * p.values
    return CoherenceProfile(t, total, label)


def cce_coherence(
    clusters: Sequence[PairCluster],
    t_ms: np.ndarray,
    observable: str = "echo",
    workers: int | None = None,
    label: str = "",
) -> tuple[CoherenceProfile, list[CoherenceProfile]]:
    """Simulate every cluster (in parallel) and return (product, per-cluster profiles)."""
    ordered = sorted(clusters, key=lambda c: (c.i, c.j))
    profiles = ordered_map(lambda c: cluster_coherence(c, t_ms, observable), ordered, workers)
    return combine(profiles, label), profiles


def full_oracle(
    system: SpinSystem,
    gammas: Mapping[tuple[int, int], float],
    t_ms: np.ndarray,
    couplings: Mapping[tuple[int, int], float] | None = None,
    observable: str = "echo",
    constants: PhysicalConstants = CODATA2018,
    convention: str = "verbatim",
) -> CoherenceProfile:
    """Unfactorized simulation of the electron with all nuclei.

    Every pair's dipolar term is included (``couplings`` overrides the
    geometric values, missing pairs default to the geometry) together with
    one electron S_z channel per entry of ``gammas``.
    """
    n = system.n_nuclei
    if n > ORACLE_MAX_NUCLEI:
        raise ValidationError(
            f"full oracle limited to {ORACLE_MAX_NUCLEI} nuclei (got {n})"
        )
    ops = build_operators(n + 1)
    Jm = coupling_matrix(system, constants, convention)
    J = {(i, j): float(Jm[i, j]) for i in range(n) for j in range(i + 1, n)}
    if couplings:
        for (i, j), value in couplings.items():
            J[(min(i, j), max(i, j))] = float(value)
    H = build_hamiltonian(list(system.hyperfine_rad_s), J, ops)
    rates = [float(gammas[key]) for key in sorted(gammas)]
    return simulate_coherence(H, rates, ops, t_ms, observable=observable, label=f"{system.name} oracle")
