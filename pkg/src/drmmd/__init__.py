"""De-regularized MMD particle descent.

Closed-form Gram-matrix witness functions, adaptive de-regularization
schedules, and flow simulation transporting source particles toward a target
known only through samples, with exact-assignment W2 and plug-in MMD^2
evaluation, a benchmark harness, and a CLI (``drmmd``).
"""

from .datasets import (
    StudentTeacherSetup,
    gen_gaussian,
    gen_gaussian_mixture,
    gen_three_rings,
    setup_student_teacher,
)
from .config import ExperimentConfig, parse_config, parse_config_file, serialize_config
from .exceptions import ConfigError, NumericalAbort
from .experiment import build_scenario, run_experiment
from .flow import (
    AdaptiveLambda,
    FixedLambda,
    FlowConfig,
    IterationRow,
    RunRecord,
    ScheduleState,
    run,
    schedule_lambda,
    step,
    step_mmd_baseline,
)
from .kernels import (
    GaussianKernel,
    InverseMultiquadric,
    NeuralFeatureKernel,
    kernel_from_name,
)
from .metrics import MetricReport, report, w2_exact
from .particles import ParticleSystem
from .regsolve import GramCache, build_cache, factorization_count, solve_shifted
from .witness import (
    WitnessModel,
    drmmd_estimate,
    drmmd_from_witness,
    fit_witness,
    mmd2_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveLambda",
    "ConfigError",
    "ExperimentConfig",
    "FixedLambda",
    "FlowConfig",
    "GaussianKernel",
    "GramCache",
    "InverseMultiquadric",
    "IterationRow",
    "MetricReport",
    "NeuralFeatureKernel",
    "NumericalAbort",
    "ParticleSystem",
    "RunRecord",
    "ScheduleState",
    "StudentTeacherSetup",
    "WitnessModel",
    "build_cache",
    "build_scenario",
    "drmmd_estimate",
    "drmmd_from_witness",
    "factorization_count",
    "fit_witness",
    "gen_gaussian",
    "gen_gaussian_mixture",
    "gen_three_rings",
    "kernel_from_name",
    "mmd2_estimate",
    "parse_config",
    "parse_config_file",
    "report",
    "run",
    "run_experiment",
    "schedule_lambda",
    "serialize_config",
    "setup_student_teacher",
    "solve_shifted",
    "step",
    "step_mmd_baseline",
    "w2_exact",
]
