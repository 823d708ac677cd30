"""Pure-Python simulation kernel.

This is the reference implementation of the event loop and of the service
samplers; ``aoiq._kernel`` is its compiled twin. Both draw nothing from the
underlying PCG64 stream except raw uniforms, one ``next_double`` at a time,
and apply the same IEEE-754 operations in the same order, so on a given
platform the two backends return bit-identical results. Keep every
expression here in sync with ``_kernel.pyx``.

Uniform consumption per draw:

* exponential(rate):        1 uniform, ``-log1p(-u)/rate``
* deterministic:            0 uniforms
* gamma (Marsaglia-Tsang):  3 uniforms per inner trial (two for the
  Box-Muller normal, one for the squeeze), plus 1 boost uniform when
  shape < 1
* hyperexponential:         2 uniforms (branch pick, then exponential)
* negative binomial:        ``total`` uniforms via Bernoulli counting when
  q >= 1/2, else k uniforms via a sum of inverted geometrics
* symbol-level HARQ:        1 uniform per channel use
"""

import math

import numpy as np

from ._codes import (
    BLOCKING,
    DETERMINISTIC,
    EXPONENTIAL,
    GAMMA,
    HYPEREXPONENTIAL,
    NEGBINOMIAL,
    PREEMPTIVE,
    SCALED_NEGBINOMIAL,
    SYMBOL_FR,
    SYMBOL_IIR,
)

_TWO_PI = 6.283185307179586476925287
_INF = math.inf


def _exp_draw(nxt, rate):
    return -math.log1p(-nxt()) / rate


def _normal_draw(nxt):
    # Box-Muller, second variate discarded so the stream stays one
    # uniform pair per normal regardless of caller state.
    u1 = nxt()
    u2 = nxt()
    return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(_TWO_PI * u2)


def _gamma_core(nxt, shape):
    # Marsaglia-Tsang for shape >= 1, unit scale.
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _normal_draw(nxt)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = nxt()
        if u <= 0.0:
            continue
        xx = x * x
        if u < 1.0 - 0.0331 * xx * xx:
            return d * v
        if math.log(u) < 0.5 * xx + d * (1.0 - v + math.log(v)):
            return d * v


def _gamma_draw(nxt, shape, scale):
    if shape >= 1.0:
        return _gamma_core(nxt, shape) * scale
    # boost: gamma(a) = gamma(a+1) * U^(1/a)
    while True:
        g = _gamma_core(nxt, shape + 1.0)
        u = nxt()
        if u > 0.0:
            return g * u ** (1.0 / shape) * scale


def negbin_counting(nxt, k, q):
    """Trials until the k-th success, counting one Bernoulli per uniform."""
    total = 0.0
    succ = 0
    while succ < k:
        total += 1.0
        if nxt() < q:
            succ += 1
    return total


def negbin_geometric(nxt, k, q):
    """Sum of k inverted-CDF geometric draws; cheap when q is small."""
    lq = math.log1p(-q)
    total = 0.0
    for _ in range(k):
        total += math.floor(math.log1p(-nxt()) / lq) + 1.0
    return total


def _negbin_draw(nxt, k, q):
    if q >= 0.5:
        return negbin_counting(nxt, k, q)
    return negbin_geometric(nxt, k, q)


def _symbol_iir_draw(nxt, ks, delta):
    total = 0.0
    succ = 0
    while succ < ks:
        total += 1.0
        if nxt() >= delta:
            succ += 1
    return total


def _symbol_fr_draw(nxt, ks, ns, kp, delta):
    # Every block consumes all ns channel uses even once decodable.
    total = 0.0
    packets = 0
    while packets < kp:
        survived = 0
        for _ in range(ns):
            total += 1.0
            if nxt() >= delta:
                survived += 1
        if survived >= ks:
            packets += 1
    return total


def sample_one(nxt, kind, p0, p1, p2, p3, cumw, rates):
    """One service duration; ``nxt`` yields uniforms on [0, 1)."""
    if kind == DETERMINISTIC:
        return p0
    if kind == EXPONENTIAL:
        return _exp_draw(nxt, p0)
    if kind == GAMMA:
        return _gamma_draw(nxt, p0, p1)
    if kind == HYPEREXPONENTIAL:
        u = nxt()
        i = 0
        last = len(cumw) - 1
        while i < last and u >= cumw[i]:
            i += 1
        return _exp_draw(nxt, rates[i])
    if kind == NEGBINOMIAL:
        return _negbin_draw(nxt, int(p0), p1)
    if kind == SCALED_NEGBINOMIAL:
        return p0 * _negbin_draw(nxt, int(p1), p2)
    if kind == SYMBOL_IIR:
        return _symbol_iir_draw(nxt, int(p0), p1)
    if kind == SYMBOL_FR:
        return _symbol_fr_draw(nxt, int(p0), int(p1), int(p2), p3)
    raise ValueError(f"unknown service kind {kind}")


def sample_bulk(kind, p0, p1, p2, p3, cumw, rates, n, seed):
    """n service draws from a fresh PCG64(seed) stream."""
    nxt = np.random.Generator(np.random.PCG64(seed)).random
    out = np.empty(n)
    for i in range(n):
        out[i] = sample_one(nxt, kind, p0, p1, p2, p3, cumw, rates)
    return out


def simulate(
    discipline,
    lam,
    kind,
    p0,
    p1,
    p2,
    p3,
    cumw,
    rates,
    stop_rule,
    warmup,
    n_batches,
    event_cap,
    seed,
):
    """Run the event loop; returns raw accumulators (see simulator.run).

    ``warmup`` must be >= 1: the measurement window opens at the warmup-th
    delivery so that every measured age trapezoid is bounded by two
    deliveries. Statistics cover deliveries warmup+1 .. stop_rule.
    """
    if not 1 <= warmup < stop_rule:
        raise ValueError("need 1 <= warmup < stop_rule")
    nxt = np.random.Generator(np.random.PCG64(seed)).random
    preemptive = discipline == PREEMPTIVE
    if not preemptive and discipline != BLOCKING:
        raise ValueError(f"unknown discipline {discipline}")

    total_measured = stop_rule - warmup
    nb = min(n_batches, total_measured)
    batch_area = np.zeros(nb)
    batch_elapsed = np.zeros(nb)
    batch_count = np.zeros(nb, dtype=np.int64)

    t = 0.0
    t_arr = _exp_draw(nxt, lam)
    t_done = _INF
    busy = False
    gen_time = 0.0

    deliveries = 0
    arrivals = 0
    events = 0
    measured = 0
    measuring = False
    m_start = 0.0
    prev_t = 0.0
    prev_age = 0.0
    area = 0.0
    sum_y = 0.0
    sum_y2 = 0.0
    sum_y4 = 0.0
    sum_t = 0.0
    sum_t2 = 0.0
    hit_cap = False

    while deliveries < stop_rule:
        events += 1
        if events > event_cap:
            hit_cap = True
            break
        if busy and t_done <= t_arr:
            t = t_done
            busy = False
            t_done = _INF
            deliveries += 1
            sys_time = t - gen_time
            if measuring:
                dt = t - prev_t
                piece = prev_age * dt + 0.5 * dt * dt
                area += piece
                dt2 = dt * dt
                sum_y += dt
                sum_y2 += dt2
                sum_y4 += dt2 * dt2
                sum_t += sys_time
                sum_t2 += sys_time * sys_time
                b = measured * nb // total_measured
                batch_area[b] += piece
                batch_elapsed[b] += dt
                batch_count[b] += 1
                measured += 1
                prev_t = t
                prev_age = sys_time
            elif deliveries == warmup:
                measuring = True
                m_start = t
                prev_t = t
                prev_age = sys_time
        else:
            t = t_arr
            arrivals += 1
            t_arr = t + _exp_draw(nxt, lam)
            if preemptive or not busy:
                busy = True
                gen_time = t
                t_done = t + sample_one(nxt, kind, p0, p1, p2, p3, cumw, rates)

    return {
        "ok": not hit_cap,
        "measured": measured,
        "elapsed": prev_t - m_start,
        "area": area,
        "sum_y": sum_y,
        "sum_y2": sum_y2,
        "sum_y4": sum_y4,
        "sum_t": sum_t,
        "sum_t2": sum_t2,
        "arrivals": arrivals,
        "deliveries": deliveries,
        "events": events,
        "batch_area": batch_area,
        "batch_elapsed": batch_elapsed,
        "batch_count": batch_count,
    }
