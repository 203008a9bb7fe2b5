"""Self-creating random-walk protocol simulator and analysis toolkit.

Subpackages cover topology and transition-matrix construction (graph),
the absorbing-chain view of adversarial termination (adversary), the
discrete-time population simulator and baselines (engine), the
survival-conditioned spectral machinery (spectral), the decentralized
SGD payload (learn), executable bound checks (verify), and the
experiment CLI (cli).
"""

__version__ = "0.1.0"

from .adversary import AdversaryConfig, AugmentedChain, augment, hitting_constants
from .engine import (
    CilConfig,
    DecaforkConfig,
    PopulationTrace,
    Simulation,
    WalkToken,
    extinction_intervals,
    extract_chain,
    replicate,
    run,
    run_decafork_baseline,
    run_dominated_single,
    run_with_learning,
    spanning_chain,
)
from .graph import GraphSpec, generate_topology, metropolis_hastings, stationary_check
from .learn import (
    LearnProblem,
    OptimaReport,
    SgdConfig,
    optima_report,
    run_gossip_baseline,
    sgd_update,
    solve_weighted_optimum,
    synthetic_regression,
)
from .spectral import QsdResult, chain_stationary, qsd, total_variation, yaglom_oracle
from .verify import (
    BoundReport,
    DriftConstants,
    check_boundedness,
    check_drift,
    check_iteration_rate,
    check_peak,
    iteration_rate_bound,
    peak_bound,
    peak_envelope,
)

__all__ = [
    "AdversaryConfig",
    "AugmentedChain",
    "BoundReport",
    "CilConfig",
    "DecaforkConfig",
    "DriftConstants",
    "GraphSpec",
    "LearnProblem",
    "OptimaReport",
    "PopulationTrace",
    "QsdResult",
    "SgdConfig",
    "Simulation",
    "WalkToken",
    "augment",
    "chain_stationary",
    "check_boundedness",
    "check_drift",
    "check_iteration_rate",
    "check_peak",
    "extinction_intervals",
    "extract_chain",
    "generate_topology",
    "hitting_constants",
    "iteration_rate_bound",
    "metropolis_hastings",
    "optima_report",
    "peak_bound",
    "peak_envelope",
    "qsd",
    "replicate",
    "run",
    "run_decafork_baseline",
    "run_dominated_single",
    "run_gossip_baseline",
    "run_with_learning",
    "sgd_update",
    "solve_weighted_optimum",
    "spanning_chain",
    "stationary_check",
    "synthetic_regression",
    "total_variation",
    "yaglom_oracle",
]
