# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernel.

Twin of ``aoiq._pykernel``; see that module for the stream contract. Any
change to a sampler or to the event loop must be applied to both files in
lockstep, keeping operation order identical, or the backends stop being
bit-compatible (the parity tests will catch it).
"""

from libc.math cimport cos, floor, log, log1p, pow, sqrt

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

from numpy.random import PCG64

# keep in sync with aoiq._codes
cdef int K_DETERMINISTIC = 0
cdef int K_EXPONENTIAL = 1
cdef int K_GAMMA = 2
cdef int K_HYPEREXPONENTIAL = 3
cdef int K_NEGBINOMIAL = 4
cdef int K_SCALED_NEGBINOMIAL = 5
cdef int K_SYMBOL_IIR = 6
cdef int K_SYMBOL_FR = 7

cdef int D_BLOCKING = 0
cdef int D_PREEMPTIVE = 1

cdef double TWO_PI = 6.283185307179586476925287
cdef double INF = float("inf")

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef inline double _next(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef inline double _exp_draw(bitgen_t *bg, double rate) noexcept nogil:
    return -log1p(-_next(bg)) / rate


cdef inline double _normal_draw(bitgen_t *bg) noexcept nogil:
    cdef double u1 = _next(bg)
    cdef double u2 = _next(bg)
    return sqrt(-2.0 * log1p(-u1)) * cos(TWO_PI * u2)


cdef double _gamma_core(bitgen_t *bg, double shape) noexcept nogil:
    cdef double d = shape - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double x, v, u, xx
    while True:
        x = _normal_draw(bg)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = _next(bg)
        if u <= 0.0:
            continue
        xx = x * x
        if u < 1.0 - 0.0331 * xx * xx:
            return d * v
        if log(u) < 0.5 * xx + d * (1.0 - v + log(v)):
            return d * v


cdef double _gamma_draw(bitgen_t *bg, double shape, double scale) noexcept nogil:
    cdef double g, u
    if shape >= 1.0:
        return _gamma_core(bg, shape) * scale
    while True:
        g = _gamma_core(bg, shape + 1.0)
        u = _next(bg)
        if u > 0.0:
            return g * pow(u, 1.0 / shape) * scale


cdef double _negbin_counting(bitgen_t *bg, long k, double q) noexcept nogil:
    cdef double total = 0.0
    cdef long succ = 0
    while succ < k:
        total += 1.0
        if _next(bg) < q:
            succ += 1
    return total


cdef double _negbin_geometric(bitgen_t *bg, long k, double q) noexcept nogil:
    cdef double lq = log1p(-q)
    cdef double total = 0.0
    cdef long i
    for i in range(k):
        total += floor(log1p(-_next(bg)) / lq) + 1.0
    return total


cdef inline double _negbin_draw(bitgen_t *bg, long k, double q) noexcept nogil:
    if q >= 0.5:
        return _negbin_counting(bg, k, q)
    return _negbin_geometric(bg, k, q)


cdef double _symbol_iir_draw(bitgen_t *bg, long ks, double delta) noexcept nogil:
    cdef double total = 0.0
    cdef long succ = 0
    while succ < ks:
        total += 1.0
        if _next(bg) >= delta:
            succ += 1
    return total


cdef double _symbol_fr_draw(bitgen_t *bg, long ks, long ns, long kp,
                            double delta) noexcept nogil:
    cdef double total = 0.0
    cdef long packets = 0
    cdef long survived, j
    while packets < kp:
        survived = 0
        for j in range(ns):
            total += 1.0
            if _next(bg) >= delta:
                survived += 1
        if survived >= ks:
            packets += 1
    return total


cdef double _sample_service(bitgen_t *bg, int kind, double p0, double p1,
                            double p2, double p3, double[::1] cumw,
                            double[::1] rates) noexcept nogil:
    cdef double u
    cdef Py_ssize_t i, last
    if kind == K_DETERMINISTIC:
        return p0
    elif kind == K_EXPONENTIAL:
        return _exp_draw(bg, p0)
    elif kind == K_GAMMA:
        return _gamma_draw(bg, p0, p1)
    elif kind == K_HYPEREXPONENTIAL:
        u = _next(bg)
        i = 0
        last = cumw.shape[0] - 1
        while i < last and u >= cumw[i]:
            i += 1
        return _exp_draw(bg, rates[i])
    elif kind == K_NEGBINOMIAL:
        return _negbin_draw(bg, <long> p0, p1)
    elif kind == K_SCALED_NEGBINOMIAL:
        return p0 * _negbin_draw(bg, <long> p1, p2)
    elif kind == K_SYMBOL_IIR:
        return _symbol_iir_draw(bg, <long> p0, p1)
    else:
        return _symbol_fr_draw(bg, <long> p0, <long> p1, <long> p2, p3)


cdef bitgen_t *_acquire(object bitgen):
    capsule = bitgen.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


def sample_bulk(kind, p0, p1, p2, p3, cumw, rates, n, seed):
    """n service draws from a fresh PCG64(seed) stream."""
    if kind == K_HYPEREXPONENTIAL and (cumw is None or rates is None):
        raise ValueError("hyperexponential sampling needs weight/rate arrays")
    bitgen = PCG64(seed)
    cdef bitgen_t *bg = _acquire(bitgen)
    out = np.empty(n)
    cdef double[::1] out_v = out
    cdef double[::1] cumw_v = np.ascontiguousarray(cumw if cumw is not None else np.empty(0))
    cdef double[::1] rates_v = np.ascontiguousarray(rates if rates is not None else np.empty(0))
    cdef int ckind = kind
    cdef double c0 = p0, c1 = p1, c2 = p2, c3 = p3
    cdef Py_ssize_t i, cn = n
    with nogil:
        for i in range(cn):
            out_v[i] = _sample_service(bg, ckind, c0, c1, c2, c3, cumw_v, rates_v)
    return out


def simulate(discipline, lam, kind, p0, p1, p2, p3, cumw, rates, stop_rule,
             warmup, n_batches, event_cap, seed):
    """Run the event loop; same contract as aoiq._pykernel.simulate."""
    if not 1 <= warmup < stop_rule:
        raise ValueError("need 1 <= warmup < stop_rule")
    if discipline not in (D_BLOCKING, D_PREEMPTIVE):
        raise ValueError(f"unknown discipline {discipline}")

    bitgen = PCG64(seed)
    cdef bitgen_t *bg = _acquire(bitgen)

    cdef long long total_measured = stop_rule - warmup
    cdef long long nb = min(n_batches, total_measured)
    batch_area = np.zeros(nb)
    batch_elapsed = np.zeros(nb)
    batch_count = np.zeros(nb, dtype=np.int64)
    cdef double[::1] b_area = batch_area
    cdef double[::1] b_elapsed = batch_elapsed
    cdef long long[::1] b_count = batch_count

    cdef double[::1] cumw_v = np.ascontiguousarray(cumw if cumw is not None else np.empty(0))
    cdef double[::1] rates_v = np.ascontiguousarray(rates if rates is not None else np.empty(0))

    cdef bint preemptive = discipline == D_PREEMPTIVE
    cdef int ckind = kind
    cdef double c0 = p0, c1 = p1, c2 = p2, c3 = p3
    cdef double clam = lam
    cdef long long stop = stop_rule
    cdef long long warm = warmup
    cdef long long cap = event_cap

    cdef double t = 0.0
    cdef double t_arr, t_done
    cdef bint busy = False
    cdef double gen_time = 0.0

    cdef long long deliveries = 0
    cdef long long arrivals = 0
    cdef long long events = 0
    cdef long long measured = 0
    cdef bint measuring = False
    cdef double m_start = 0.0
    cdef double prev_t = 0.0
    cdef double prev_age = 0.0
    cdef double area = 0.0
    cdef double sum_y = 0.0, sum_y2 = 0.0, sum_y4 = 0.0
    cdef double sum_t = 0.0, sum_t2 = 0.0
    cdef bint hit_cap = False
    cdef double sys_time, dt, dt2, piece
    cdef long long b

    with nogil:
        t_arr = _exp_draw(bg, clam)
        t_done = INF
        while deliveries < stop:
            events += 1
            if events > cap:
                hit_cap = True
                break
            if busy and t_done <= t_arr:
                t = t_done
                busy = False
                t_done = INF
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
                    b_area[b] += piece
                    b_elapsed[b] += dt
                    b_count[b] += 1
                    measured += 1
                    prev_t = t
                    prev_age = sys_time
                elif deliveries == warm:
                    measuring = True
                    m_start = t
                    prev_t = t
                    prev_age = sys_time
            else:
                t = t_arr
                arrivals += 1
                t_arr = t + _exp_draw(bg, clam)
                if preemptive or not busy:
                    busy = True
                    gen_time = t
                    t_done = t + _sample_service(bg, ckind, c0, c1, c2, c3,
                                                 cumw_v, rates_v)

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
