"""Desk-scale simulator for distributed stochastic optimization over graphs.

Gossip-based methods with probabilistic communication skipping, control
variates, and the usual local-update baselines, plus an experiment harness
that reproduces the convergence / communication-savings / linear-speedup
phenomenology on synthetic least squares and LIBSVM logistic regression.
"""

from pskip.topology import (
    Graph,
    MixingMatrix,
    AugmentedMixing,
    ring,
    random_connected,
    metropolis,
    augment,
    gamma_bound,
    theory_optimal_p,
)
from pskip.problems import (
    Dataset,
    QuadraticProblem,
    LogisticProblem,
    make_quadratic,
    make_logistic,
    parse_libsvm,
    partition,
    smoothness_constant,
)
from pskip.algorithms import (
    HyperParams,
    CoinSequence,
    AlgorithmState,
    RunTrace,
    DivergenceError,
    proxskip_step,
    proxskip_run,
    proxskip_run_dual_form,
    local_dsgd_run,
    count_comms_to_accuracy,
)
from pskip.reference import (
    ReferenceSolution,
    solve_quadratic,
    solve_descent,
    relative_error,
)
from pskip.harness import (
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
    steady_state_floor,
    sweep,
    preset,
)

__version__ = "0.1.0"
