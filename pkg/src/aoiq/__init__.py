"""Average age of information for single-slot status-update queues.

Closed-form calculators and optimizers (``analysis``), service-time laws
(``distributions``), erasure-coded retransmission schemes (``harq``), and
a seeded discrete-event simulator (``simulator``) that cross-checks the
formulas. ``kernels.BACKEND`` says whether the compiled simulation core
or the pure-Python twin is in use.
"""

from ._codes import Discipline
from .analysis import (
    AgeReport,
    OptimumReport,
    SweepResult,
    age_blocking,
    age_blocking_fr,
    age_blocking_iir,
    age_preemptive,
    age_preemptive_fr,
    age_preemptive_iir,
    min_age_blocking_fr,
    min_age_blocking_iir,
    optimal_blocking,
    optimal_preemptive_fr,
    optimal_preemptive_iir,
    preemptive_interdeparture_moments,
    preemptive_system_time_mean,
    sweep_codeword_length,
)
from .distributions import (
    Deterministic,
    Exponential,
    Gamma,
    HyperExponential,
    NegBinomial,
    ScaledNegBinomial,
    ServiceDistribution,
)
from .harq import (
    FR,
    IIR,
    ErasureChannel,
    packet_erasure_prob,
    packet_success_prob,
    sample_service_symbolwise,
    service_distribution,
)
from .kernels import BACKEND
from .simulator import BatchRunError, SimConfig, SimResult, batch_run, estimate_effective_rate, run

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BACKEND",
    "Discipline",
    "AgeReport",
    "OptimumReport",
    "SweepResult",
    "age_blocking",
    "age_blocking_fr",
    "age_blocking_iir",
    "age_preemptive",
    "age_preemptive_fr",
    "age_preemptive_iir",
    "min_age_blocking_fr",
    "min_age_blocking_iir",
    "optimal_blocking",
    "optimal_preemptive_fr",
    "optimal_preemptive_iir",
    "preemptive_interdeparture_moments",
    "preemptive_system_time_mean",
    "sweep_codeword_length",
    "ServiceDistribution",
    "Deterministic",
    "Exponential",
    "Gamma",
    "HyperExponential",
    "NegBinomial",
    "ScaledNegBinomial",
    "ErasureChannel",
    "IIR",
    "FR",
    "packet_erasure_prob",
    "packet_success_prob",
    "service_distribution",
    "sample_service_symbolwise",
    "SimConfig",
    "SimResult",
    "BatchRunError",
    "run",
    "batch_run",
    "estimate_effective_rate",
]
