"""Closed-form average age of information for M/G/1/1 status updating.

A source emits fresh updates as a Poisson process of rate lam into a
single-server, bufferless queue. Under ``blocking`` an arrival that finds
the server busy is discarded; under ``preemptive`` it replaces the update
in service. The age of information at the monitor is the time since the
generation instant of the newest delivered update; all formulas below are
its long-run time average.

Blocking, any service law S (mean E, squared coefficient of variation C,
utilization ratio rho = lam*E, beta = rho/(rho+1)):

    age = E * (beta*(C+1)/2 + 1/beta)

Preemptive, any service law with Laplace transform P(lam) = E[exp(-lam*S)]:

    age = 1 / (lam * P(lam))

and the delivered-update system time and interdeparture moments follow
from P and its derivative. The HARQ-specialized functions evaluate the
same quantities through numerically safer logarithmic forms and add the
optimal-rate solvers.
"""

import math
import sys
from dataclasses import dataclass

from ._codes import Discipline
from .distributions import ServiceDistribution
from .harq import packet_success_prob

__all__ = [
    "Discipline",
    "AgeReport",
    "OptimumReport",
    "SweepResult",
    "age_blocking",
    "optimal_blocking",
    "age_blocking_iir",
    "min_age_blocking_iir",
    "age_blocking_fr",
    "min_age_blocking_fr",
    "age_preemptive",
    "preemptive_system_time_mean",
    "preemptive_interdeparture_moments",
    "age_preemptive_iir",
    "optimal_preemptive_iir",
    "age_preemptive_fr",
    "optimal_preemptive_fr",
    "sweep_codeword_length",
]

_MAX_LOG = math.log(sys.float_info.max)


@dataclass(frozen=True)
class AgeReport:
    """Average age plus the operating point it was computed at."""

    avg_age: float
    effective_rate: float
    utilization_beta: float | None
    notes: str


@dataclass(frozen=True)
class OptimumReport:
    """Result of optimizing the arrival rate.

    ``optimal_rate`` is None when the age is minimized only in the limit
    lam -> infinity; ``optimal_age`` is then that finite limit. Callers
    never see a fake huge rate.
    """

    optimal_rate: float | None
    optimal_age: float
    method: str
    bound_lower: float | None = None
    approx_rate: float | None = None

    @property
    def unbounded(self) -> bool:
        return self.optimal_rate is None


@dataclass(frozen=True)
class SweepResult:
    """Ages over a grid of codeword lengths, plus the argmin."""

    entries: tuple[tuple[int, float], ...]
    best_n_s: int
    best_age: float


def _require_rate(lam, name="lam"):
    if not (isinstance(lam, (int, float)) and math.isfinite(lam) and lam > 0.0):
        raise ValueError(f"{name} must be a positive finite number, got {lam}")
    return float(lam)


def _require_dist(dist):
    if not isinstance(dist, ServiceDistribution):
        raise TypeError(f"expected a ServiceDistribution, got {type(dist).__name__}")
    return dist


def _require_pos_int(value, name):
    if not (isinstance(value, int) and value >= 1):
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return value


def _require_delta(delta):
    if not (isinstance(delta, (int, float)) and 0.0 <= delta < 1.0):
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    return float(delta)


# ---------------------------------------------------------------------------
# blocking discipline


def age_blocking(dist: ServiceDistribution, lam: float) -> AgeReport:
    """Average age when busy-period arrivals are discarded."""
    _require_dist(dist)
    lam = _require_rate(lam)
    es = dist.mean()
    cs = dist.scv()
    rho = lam * es
    beta = rho / (rho + 1.0)
    age = es * (0.5 * beta * (cs + 1.0) + 1.0 / beta)
    eff = 1.0 / (1.0 / lam + es)
    return AgeReport(age, eff, beta, "blocking/general")


def optimal_blocking(dist: ServiceDistribution) -> OptimumReport:
    """Arrival rate minimizing the blocking age.

    A finite optimum exists only for service variability above exponential
    (C > 1); at C <= 1 the age decreases in lam and the infimum is reached
    in the lam -> infinity limit.
    """
    _require_dist(dist)
    es = dist.mean()
    cs = dist.scv()
    if cs > 1.0:
        beta = math.sqrt(2.0 / (cs + 1.0))
        rate = beta / ((1.0 - beta) * es)
        age = es * math.sqrt(2.0 * (cs + 1.0))
        return OptimumReport(rate, age, "closed_form")
    age = es * (0.5 * (cs + 1.0) + 1.0)
    return OptimumReport(None, age, "closed_form")


def age_blocking_iir(k_s: int, delta: float, lam: float) -> AgeReport:
    """Blocking age with incremental-redundancy HARQ service.

    Identical to ``age_blocking(NegBinomial(k_s, 1 - delta), lam)``; kept
    in the expanded form whose terms (generation wait, transit, staleness)
    are individually meaningful.
    """
    _require_pos_int(k_s, "k_s")
    delta = _require_delta(delta)
    lam = _require_rate(lam)
    q = 1.0 - delta
    age = 1.0 / lam + k_s / q + lam * k_s * (k_s + delta) / (
        2.0 * q * (lam * k_s + q)
    )
    eff = 1.0 / (1.0 / lam + k_s / q)
    beta = lam * k_s / (lam * k_s + q)
    return AgeReport(age, eff, beta, "blocking/iir")


def min_age_blocking_iir(k_s: int, delta: float) -> OptimumReport:
    """Limiting (lam -> infinity) blocking age for IIR: (3 k_s + delta) / (2 (1-delta))."""
    _require_pos_int(k_s, "k_s")
    delta = _require_delta(delta)
    age = (3.0 * k_s + delta) / (2.0 * (1.0 - delta))
    return OptimumReport(None, age, "closed_form")


def age_blocking_fr(k_s: int, n_s: int, k_p: int, delta: float, lam: float) -> AgeReport:
    """Blocking age with fixed-redundancy HARQ service (packets of n_s symbols)."""
    _require_pos_int(k_p, "k_p")
    lam = _require_rate(lam)
    q = packet_success_prob(n_s, k_s, delta)  # validates n_s, k_s, delta
    eps = 1.0 - q
    age = 1.0 / lam + n_s * k_p / q + lam * n_s * n_s * k_p * (k_p + eps) / (
        2.0 * q * (lam * n_s * k_p + q)
    )
    eff = 1.0 / (1.0 / lam + n_s * k_p / q)
    beta = lam * n_s * k_p / (lam * n_s * k_p + q)
    return AgeReport(age, eff, beta, "blocking/fr")


def min_age_blocking_fr(k_s: int, n_s: int, k_p: int, delta: float) -> OptimumReport:
    """Limiting (lam -> infinity) blocking age for FR: n_s (3 k_p + eps) / (2 (1-eps))."""
    _require_pos_int(k_p, "k_p")
    q = packet_success_prob(n_s, k_s, delta)
    eps = 1.0 - q
    age = n_s * (3.0 * k_p + eps) / (2.0 * q)
    return OptimumReport(None, age, "closed_form")


# ---------------------------------------------------------------------------
# preemptive discipline


def age_preemptive(dist: ServiceDistribution, lam: float) -> AgeReport:
    """Average age when a fresh arrival replaces the update in service."""
    _require_dist(dist)
    lam = _require_rate(lam)
    p = dist.laplace(lam)
    if not p > 0.0:
        raise OverflowError(
            "E[exp(-lam*S)] underflowed to zero at this arrival rate; "
            "the average age exceeds the float range"
        )
    eff = lam * p
    age = 1.0 / eff
    if math.isinf(age):
        raise OverflowError("average age exceeds the float range")
    return AgeReport(age, eff, None, "preemptive/laplace")


def preemptive_system_time_mean(dist: ServiceDistribution, lam: float) -> float:
    """Mean system time of delivered updates: -P'(lam) / P(lam).

    Deliveries survive a race against preemption, so their system time is
    the service law exponentially tilted by exp(-lam*s); its mean never
    exceeds the unconditional mean service time.
    """
    _require_dist(dist)
    lam = _require_rate(lam)
    p = dist.laplace(lam)
    if not p > 0.0:
        raise OverflowError("E[exp(-lam*S)] underflowed to zero at this arrival rate")
    return -dist.laplace_deriv(lam) / p


def preemptive_interdeparture_moments(dist: ServiceDistribution, lam: float) -> tuple[float, float]:
    """(E[Y], E[Y^2]) of the time Y between consecutive deliveries.

    E[Y] = 1/(lam*P) and E[Y^2] = 2 (1 + lam*P') / (lam*P)^2; the first is
    also the reciprocal of the effective update rate.
    """
    _require_dist(dist)
    lam = _require_rate(lam)
    p = dist.laplace(lam)
    if not p > 0.0:
        raise OverflowError("E[exp(-lam*S)] underflowed to zero at this arrival rate")
    dp = dist.laplace_deriv(lam)
    rate = lam * p
    ey = 1.0 / rate
    ey2 = 2.0 * (1.0 + lam * dp) / (rate * rate)
    return ey, ey2


def _preemptive_age_from_log(log_age: float, notes: str) -> AgeReport:
    if log_age > _MAX_LOG:
        raise OverflowError(
            f"average age exceeds the float range (log age {log_age:.3f}); "
            "lower the arrival rate"
        )
    age = math.exp(log_age)
    # preemptive age equals the mean interdeparture time, so the effective
    # rate is exactly its reciprocal
    return AgeReport(age, math.exp(-log_age), None, notes)


def age_preemptive_iir(k_s: int, delta: float, lam: float) -> AgeReport:
    """Preemptive age with IIR service, evaluated in log space.

    Equal to ``age_preemptive(NegBinomial(k_s, 1 - delta), lam)`` wherever
    the linear-space transform is representable, but stays finite-safe up
    to log-age ~ 709 for large lam * k_s.
    """
    _require_pos_int(k_s, "k_s")
    delta = _require_delta(delta)
    lam = _require_rate(lam)
    # log of (e^lam - delta)/(1 - delta), written via 1 - delta*e^-lam
    log_ratio = lam + math.log(
        -math.expm1(-lam) + (1.0 - delta) * math.exp(-lam)
    ) - math.log1p(-delta)
    return _preemptive_age_from_log(k_s * log_ratio - math.log(lam), "preemptive/iir")


def age_preemptive_fr(k_s: int, n_s: int, k_p: int, delta: float, lam: float) -> AgeReport:
    """Preemptive age with FR service, evaluated in log space."""
    _require_pos_int(k_p, "k_p")
    lam = _require_rate(lam)
    q = packet_success_prob(n_s, k_s, delta)
    x = lam * n_s
    log_ratio = x + math.log(-math.expm1(-x) + q * math.exp(-x)) - math.log(q)
    return _preemptive_age_from_log(k_p * log_ratio - math.log(lam), "preemptive/fr")


def _bisect_root(g, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Root of increasing g with g(lo) < 0 <= g(hi), to absolute tolerance."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_preemptive_iir(k_s: int, delta: float) -> OptimumReport:
    """Arrival rate minimizing the preemptive IIR age.

    The stationarity condition exp(lam)*(k_s*lam - 1) = -delta has a unique
    root in (0, 1/k_s], found by bisection to 1e-12. Also reports the
    closed-form quadratic approximation of that root and the lower bound
    obtained from exp(lam) > 1 + lam evaluated at the approximate rate.
    """
    _require_pos_int(k_s, "k_s")
    delta = _require_delta(delta)
    if delta == 0.0:
        rate = 1.0 / k_s
    else:
        rate = _bisect_root(
            lambda lam: math.exp(lam) * (k_s * lam - 1.0) + delta, 0.0, 1.0 / k_s
        )
    age = age_preemptive_iir(k_s, delta, rate).avg_age
    approx = (1.0 - k_s + math.sqrt((k_s + 1.0) ** 2 - 4.0 * k_s * delta)) / (2.0 * k_s)
    bound = math.exp(k_s * math.log1p(approx / (1.0 - delta)) - math.log(approx))
    return OptimumReport(rate, age, "root_solve", bound_lower=bound, approx_rate=approx)


def optimal_preemptive_fr(k_s: int, n_s: int, k_p: int, delta: float) -> OptimumReport:
    """Arrival rate minimizing the preemptive FR age (root in (0, 1/(n_s*k_p)])."""
    _require_pos_int(k_p, "k_p")
    q = packet_success_prob(n_s, k_s, delta)
    eps = 1.0 - q
    if eps == 0.0:
        rate = 1.0 / (n_s * k_p)
    else:
        rate = _bisect_root(
            lambda lam: math.exp(lam * n_s) * (k_p * n_s * lam - 1.0) + eps,
            0.0,
            1.0 / (n_s * k_p),
        )
    age = age_preemptive_fr(k_s, n_s, k_p, delta, rate).avg_age
    approx = (1.0 - k_p + math.sqrt((k_p + 1.0) ** 2 - 4.0 * k_p * eps)) / (
        2.0 * n_s * k_p
    )
    bound = math.exp(k_p * math.log1p(approx * n_s / q) - math.log(approx))
    return OptimumReport(rate, age, "root_solve", bound_lower=bound, approx_rate=approx)


# ---------------------------------------------------------------------------
# codeword-length sweeps


def sweep_codeword_length(
    k_s: int,
    k_p: int,
    delta: float,
    lam: float,
    discipline: Discipline | str,
    n_values,
) -> SweepResult:
    """FR age over a grid of codeword lengths n_s, with the argmin.

    Ties break toward the shorter codeword. ``n_values`` must be nonempty
    and every length must be at least k_s.
    """
    discipline = Discipline(discipline)
    ns = sorted(set(int(n) for n in n_values))
    if not ns:
        raise ValueError("n_values must be nonempty")
    if ns[0] < k_s:
        raise ValueError(f"codeword lengths must be >= k_s={k_s}, got {ns[0]}")
    if discipline is Discipline.BLOCKING:
        age_fn = age_blocking_fr
    else:
        age_fn = age_preemptive_fr
    entries = []
    best_n = ns[0]
    best_age = math.inf
    for n in ns:
        age = age_fn(k_s, n, k_p, delta, lam).avg_age
        entries.append((n, age))
        if age < best_age:
            best_age = age
            best_n = n
    return SweepResult(tuple(entries), best_n, best_age)
