"""Low-temperature T2 trends of molecular spin ensembles.

Nuclear flip-flop rates are computed per geometry from dipolar couplings and
hyperfine detunings; their spread over a vibrational ensemble sets the rates
of electron dephasing channels in a pair-cluster GKSL simulation.
"""

__version__ = "0.1.0"

from .cce import PairCluster, cluster_coherence, combine, enumerate_clusters, full_oracle
from .constants import CODATA2018, PhysicalConstants
from .ensemble import NormalMode, generate_ensemble, load_modes
from .errors import (
    DegenerateGeometryError,
    DivergentRateError,
    InvariantViolation,
    ParseError,
    PhysicsError,
    ValidationError,
)
from .fitting import FitResult, fit_stretched_exp
from .gksl import CoherenceProfile, build_liouvillian, build_operators, propagate
from .model import EnsembleInput, NuclearSpinSite, SpinSystem, load_ensemble, load_system
from .pipeline import RunConfig, simulate_ensemble
from .rates import dipolar_coupling, ensemble_rates, flipflop_rate, kappa, pair_table
from .report import compare_modes, emit_svg
