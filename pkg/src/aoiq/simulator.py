"""Discrete-event simulator for the single-slot status-update queue.

Events are Poisson arrivals and service completions; the server holds at
most one update. The kernel (compiled when available, pure Python
otherwise; see ``kernels.BACKEND``) advances the two-event system and
accumulates the area under the instantaneous-age sawtooth together with
interdeparture and system-time sums, all over a measurement window that
opens at the ``warmup_deliveries``-th delivery and closes at the last
delivery. Batch means over that window give standard errors.

Every run is reproducible from its seed: the kernel draws nothing but
uniforms from a PCG64 stream, in an order fixed by the event sequence.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._codes import Discipline
from .distributions import ServiceDistribution
from .harq import FR, IIR, ErasureChannel

__all__ = [
    "Discipline",
    "SimConfig",
    "SimResult",
    "BatchRunError",
    "run",
    "estimate_effective_rate",
    "batch_run",
]

_DEFAULT_EVENT_CAP = 10**9


@dataclass(frozen=True)
class SimConfig:
    """One simulation: discipline, arrival rate, service law, stopping rule.

    ``service`` is either a ServiceDistribution or an (IIR | FR,
    ErasureChannel) pair, in which case the kernel plays out the channel
    symbol by symbol rather than sampling the service time in one piece.
    ``stop_rule`` counts total deliveries; measurement starts at delivery
    number ``warmup_deliveries``.
    """

    discipline: Discipline
    lam: float
    service: object
    stop_rule: int
    seed: int
    warmup_deliveries: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "discipline", Discipline(self.discipline))
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be a positive finite number, got {self.lam}")
        if not isinstance(self.service, ServiceDistribution):
            ok = (
                isinstance(self.service, tuple)
                and len(self.service) == 2
                and isinstance(self.service[0], (IIR, FR))
                and isinstance(self.service[1], ErasureChannel)
            )
            if not ok:
                raise TypeError(
                    "service must be a ServiceDistribution or an "
                    "(IIR | FR, ErasureChannel) pair"
                )
        if not (isinstance(self.stop_rule, int) and self.stop_rule >= 3):
            raise ValueError(f"stop_rule must be an integer >= 3, got {self.stop_rule}")
        if not (isinstance(self.warmup_deliveries, int) and self.warmup_deliveries >= 0):
            raise ValueError(
                f"warmup_deliveries must be a nonnegative integer, got {self.warmup_deliveries}"
            )
        if self.stop_rule < self.warmup_deliveries + 2:
            raise ValueError(
                f"stop_rule={self.stop_rule} leaves no measurement window after "
                f"warmup_deliveries={self.warmup_deliveries}; need at least warmup + 2"
            )


def _batch_ratio_stderr(num, den, count=None):
    """Standard error of a ratio estimate from per-batch (numerator, denominator).

    Treats the per-batch ratios as i.i.d.; returns NaN with fewer than two
    usable batches.
    """
    mask = den > 0
    if count is not None:
        mask &= count > 0
    num = num[mask]
    den = den[mask]
    nb = num.size
    if nb < 2:
        return math.nan
    ratios = num / den
    return float(np.std(ratios, ddof=1) / math.sqrt(nb))


@dataclass(frozen=True)
class SimResult:
    """Point estimates with batch-means standard errors.

    ``avg_age`` is measured area over measured elapsed time; the
    interdeparture and system-time moments are per-delivery averages over
    the same window. ``stderr_*`` fields are NaN when the window yields
    fewer than two batches.
    """

    config: SimConfig
    measured_deliveries: int
    elapsed: float
    total_area: float
    avg_age: float
    eff_rate: float
    mean_interdeparture: float
    mean_sq_interdeparture: float
    mean_system_time: float
    stderr_age: float
    stderr_eff_rate: float
    stderr_interdeparture: float
    stderr_sq_interdeparture: float
    stderr_system_time: float
    arrivals: int
    deliveries: int
    events: int
    backend: str = field(default=kernels.BACKEND)


def run(config: SimConfig, event_cap: int = _DEFAULT_EVENT_CAP) -> SimResult:
    """Simulate one configuration to completion."""
    # the kernel's window-opening logic needs at least one warmup delivery
    # to anchor the opening age, so warmup 0 is bumped to 1
    warmup = max(1, config.warmup_deliveries)
    raw = kernels.simulate_raw(
        config.discipline.code,
        config.lam,
        config.service,
        config.stop_rule,
        warmup,
        50,
        event_cap,
        config.seed,
    )
    if not raw["ok"]:
        raise RuntimeError(
            f"event cap {event_cap} hit after {raw['deliveries']} of "
            f"{config.stop_rule} deliveries; the offered load lam*E[S] is "
            "likely too small for this stopping rule"
        )
    measured = raw["measured"]
    elapsed = raw["elapsed"]
    area = raw["area"]
    sum_y = raw["sum_y"]
    sum_y2 = raw["sum_y2"]
    sum_y4 = raw["sum_y4"]
    sum_t = raw["sum_t"]
    sum_t2 = raw["sum_t2"]

    mean_y = sum_y / measured
    mean_y2 = sum_y2 / measured
    mean_t = sum_t / measured

    b_area = raw["batch_area"]
    b_el = raw["batch_elapsed"]
    b_count = raw["batch_count"].astype(np.float64)

    def iid_stderr(total, total_sq):
        if measured < 2:
            return math.nan
        var = (total_sq - total * total / measured) / (measured - 1)
        return math.sqrt(max(var, 0.0) / measured)

    return SimResult(
        config=config,
        measured_deliveries=measured,
        elapsed=elapsed,
        total_area=area,
        avg_age=area / elapsed,
        eff_rate=measured / elapsed,
        mean_interdeparture=mean_y,
        mean_sq_interdeparture=mean_y2,
        mean_system_time=mean_t,
        stderr_age=_batch_ratio_stderr(b_area, b_el),
        stderr_eff_rate=_batch_ratio_stderr(b_count, b_el),
        stderr_interdeparture=iid_stderr(sum_y, sum_y2),
        stderr_sq_interdeparture=iid_stderr(sum_y2, sum_y4),
        stderr_system_time=iid_stderr(sum_t, sum_t2),
        arrivals=raw["arrivals"],
        deliveries=raw["deliveries"],
        events=raw["events"],
    )


def estimate_effective_rate(result: SimResult) -> tuple[float, float]:
    """(effective update rate, stderr) from a finished run.

    Requires at least 100 measured deliveries; below that the batch-means
    error bar is not meaningful.
    """
    if result.measured_deliveries < 100:
        raise ValueError(
            f"need at least 100 measured deliveries, got {result.measured_deliveries}"
        )
    return result.eff_rate, result.stderr_eff_rate


class BatchRunError(RuntimeError):
    """One or more configurations in a batch failed.

    ``failures`` holds (index, exception) pairs; ``results`` has the
    successful SimResult at every other index and None at failed ones.
    """

    def __init__(self, failures, results):
        self.failures = failures
        self.results = results
        detail = "; ".join(f"[{i}] {type(e).__name__}: {e}" for i, e in failures)
        super().__init__(f"{len(failures)} of {len(results)} runs failed: {detail}")


def batch_run(configs, max_workers: int | None = None, event_cap: int = _DEFAULT_EVENT_CAP):
    """Run many configurations, returning results in input order.

    Uses threads: the compiled kernel releases the GIL, so runs overlap.
    Each run draws from its own seeded stream, so results are independent
    of both worker count and completion order. If any run fails the rest
    still complete, then a BatchRunError carrying every failure is raised.
    """
    configs = list(configs)
    results: list[SimResult | None] = [None] * len(configs)
    failures = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(run, cfg, event_cap) for cfg in configs]
        for i, fut in enumerate(futures):
            try:
                results[i] = fut.result()
            except Exception as exc:
                failures.append((i, exc))
    if failures:
        raise BatchRunError(failures, results)
    return results
