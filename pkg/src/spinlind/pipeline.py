"""End-to-end runs: ensemble -> rates -> cluster simulations -> fitted T2."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .cce import PairCluster, cce_coherence, enumerate_clusters
from .constants import CODATA2018, PhysicalConstants
from .errors import ValidationError
from .fitting import FitResult, fit_stretched_exp
from .gksl import OBSERVABLES, CoherenceProfile, time_grid
from .model import EnsembleInput
from .rates import CONVENTIONS, DELTA_MODES, EnsembleRates, ensemble_rates


@dataclass
class RunConfig:
    delta_mode: str = "ab-initio"
    t_max_ms: float = 0.1
    n_steps: int = 400
    norm_a: float = 1.0
    out_dir: Path = field(default_factory=lambda: Path("."))
    convention: str = "verbatim"
    observable: str = "echo"
    workers: int | None = None

    def __post_init__(self):
        if self.delta_mode not in DELTA_MODES:
            raise ValidationError(f"delta mode must be one of {DELTA_MODES}")
        if not self.t_max_ms > 0:
            raise ValidationError("t_max must be positive")
        if self.n_steps < 10:
            raise ValidationError("n_steps must be at least 10")
        if not self.norm_a > 0:
            raise ValidationError("norm_a must be positive")
        if self.convention not in CONVENTIONS:
            raise ValidationError(f"convention must be one of {CONVENTIONS}")
        if self.observable not in OBSERVABLES:
            raise ValidationError(f"observable must be one of {OBSERVABLES}")
        self.out_dir = Path(self.out_dir)

    def grid(self):
        return time_grid(self.t_max_ms, self.n_steps)


@dataclass
class SimulationResult:
    name: str
    delta_mode: str
    rates: EnsembleRates
    clusters: list[PairCluster]
    profile: CoherenceProfile
    cluster_profiles: list[CoherenceProfile]

    def fit(self) -> FitResult:
        return fit_stretched_exp(self.profile)


def simulate_ensemble(
    ensemble: EnsembleInput,
    config: RunConfig,
    delta_mode: str | None = None,
    constants: PhysicalConstants = CODATA2018,
) -> SimulationResult:
    mode = delta_mode or config.delta_mode
    rates = ensemble_rates(
        ensemble, mode, config.norm_a, constants, config.convention, workers=config.workers
    )
    clusters = enumerate_clusters(ensemble.equilibrium, rates, constants=constants, convention=config.convention)
    name = ensemble.equilibrium.name
    total, per_cluster = cce_coherence(
        clusters, config.grid(), config.observable, config.workers, label=f"{name} ({mode})"
    )
    return SimulationResult(name, mode, rates, clusters, total, per_cluster)
