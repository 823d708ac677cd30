"""HARQ schemes over a symbol erasure channel.

Two retransmission strategies for a K-symbol status update:

* ``IIR`` (incremental redundancy): symbols are sent one at a time and the
  update decodes as soon as k_s of them get through. Service time is
  NegBinomial(k_s, 1 - delta).
* ``FR`` (fixed redundancy): the update is split into k_p packets of k_s
  information symbols, each transmitted as an n_s-symbol codeword; a packet
  decodes when at least k_s of its n_s symbols survive, and failed packets
  are retransmitted whole. Service time is n_s * NegBinomial(k_p, q) with
  q the per-packet success probability.

A packet always occupies the channel for its full n_s symbol slots, even
when enough symbols already arrived to decode it.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .distributions import NegBinomial, ScaledNegBinomial, ServiceDistribution

__all__ = [
    "ErasureChannel",
    "IIR",
    "FR",
    "packet_erasure_prob",
    "packet_success_prob",
    "service_distribution",
    "sample_service_symbolwise",
    "sample_service_symbolwise_many",
]


@dataclass(frozen=True)
class ErasureChannel:
    """Memoryless channel erasing each symbol independently with prob ``delta``."""

    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")


@dataclass(frozen=True)
class IIR:
    """Incremental redundancy: decode after k_s received symbols."""

    k_s: int

    def __post_init__(self):
        if not (isinstance(self.k_s, int) and self.k_s >= 1):
            raise ValueError(f"k_s must be a positive integer, got {self.k_s}")

    @property
    def total_information_symbols(self) -> int:
        return self.k_s


@dataclass(frozen=True)
class FR:
    """Fixed redundancy: k_p packets, each k_s symbols coded into n_s."""

    k_s: int
    n_s: int
    k_p: int

    def __post_init__(self):
        for name in ("k_s", "n_s", "k_p"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ValueError(f"{name} must be a positive integer, got {v}")
        if self.n_s < self.k_s:
            raise ValueError(
                f"n_s must be >= k_s, got n_s={self.n_s} < k_s={self.k_s}"
            )

    @property
    def total_information_symbols(self) -> int:
        return self.k_s * self.k_p


HarqScheme = IIR | FR


def _check_packet_args(n_s, k_s, delta):
    if not (isinstance(n_s, int) and n_s >= 1):
        raise ValueError(f"n_s must be a positive integer, got {n_s}")
    if not (isinstance(k_s, int) and k_s >= 1):
        raise ValueError(f"k_s must be a positive integer, got {k_s}")
    if n_s < k_s:
        raise ValueError(f"n_s must be >= k_s, got n_s={n_s} < k_s={k_s}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")


@lru_cache(maxsize=65536)
def _binomial_tail_log(n_s: int, k_s: int, delta: float, upper: bool) -> float:
    """log P(Bin(n_s, 1-delta) >= k_s) if upper else log P(< k_s)."""
    if upper:
        i = np.arange(k_s, n_s + 1)
    else:
        i = np.arange(0, k_s)
    # i counts received symbols; terms stay finite up to n_s ~ 1e4 and beyond
    log_c = gammaln(n_s + 1.0) - gammaln(i + 1.0) - gammaln(n_s - i + 1.0)
    log_terms = log_c + i * math.log1p(-delta) + (n_s - i) * math.log(delta)
    return float(logsumexp(log_terms))


def packet_erasure_prob(n_s: int, k_s: int, delta: float) -> float:
    """Probability an n_s-symbol packet fails to decode: fewer than k_s survive."""
    _check_packet_args(n_s, k_s, delta)
    if delta == 0.0:
        return 0.0
    if n_s == k_s:
        # every symbol must survive; avoids the log-sum roundtrip
        return -math.expm1(k_s * math.log1p(-delta))
    return min(1.0, math.exp(_binomial_tail_log(n_s, k_s, delta, upper=False)))


def packet_success_prob(n_s: int, k_s: int, delta: float) -> float:
    """Probability an n_s-symbol packet decodes: at least k_s survive.

    Equals 1 - packet_erasure_prob up to rounding, but is computed from its
    own tail sum so it stays meaningful (tiny but positive) even when the
    erasure probability rounds to 1.0 in double precision.
    """
    _check_packet_args(n_s, k_s, delta)
    if delta == 0.0:
        return 1.0
    if n_s == k_s:
        return (1.0 - delta) ** k_s
    return min(1.0, math.exp(_binomial_tail_log(n_s, k_s, delta, upper=True)))


def service_distribution(scheme: HarqScheme, channel: ErasureChannel) -> ServiceDistribution:
    """Exact service-time law of one update under the given scheme."""
    if isinstance(scheme, IIR):
        return NegBinomial(scheme.k_s, 1.0 - channel.delta)
    if isinstance(scheme, FR):
        q = packet_success_prob(scheme.n_s, scheme.k_s, channel.delta)
        if q <= 0.0:
            raise ValueError(
                "packet success probability underflowed to 0; "
                f"n_s={scheme.n_s}, k_s={scheme.k_s}, delta={channel.delta}"
            )
        return ScaledNegBinomial(scheme.n_s, scheme.k_p, q)
    raise TypeError(f"unknown scheme type {type(scheme).__name__}")


def sample_service_symbolwise(
    scheme: HarqScheme, channel: ErasureChannel, rng: np.random.Generator
) -> int:
    """One service time drawn symbol by symbol.

    Independent oracle for ``service_distribution``: no negative-binomial
    shortcut, just Bernoulli erasures per channel use.
    """
    delta = channel.delta
    if isinstance(scheme, IIR):
        uses = 0
        got = 0
        while got < scheme.k_s:
            uses += 1
            if rng.random() >= delta:
                got += 1
        return uses
    if isinstance(scheme, FR):
        uses = 0
        packets = 0
        while packets < scheme.k_p:
            survived = 0
            for _ in range(scheme.n_s):
                uses += 1
                if rng.random() >= delta:
                    survived += 1
            if survived >= scheme.k_s:
                packets += 1
        return uses
    raise TypeError(f"unknown scheme type {type(scheme).__name__}")


def _trials_until(n, needed, success_chunk, chunk):
    """Vectorized count of trials until the needed-th success, per row."""
    out = np.zeros(n, dtype=np.int64)
    prior = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    base = 0
    while active.size:
        hits = success_chunk(active.size, chunk)
        cum = prior[active, None] + np.cumsum(hits, axis=1)
        reached = cum >= needed
        done = reached.any(axis=1)
        idx = reached.argmax(axis=1)
        out[active[done]] = base + idx[done] + 1
        prior[active[~done]] = cum[~done, -1]
        active = active[~done]
        base += chunk
    return out


def sample_service_symbolwise_many(
    scheme: HarqScheme, channel: ErasureChannel, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n symbol-level service draws, vectorized.

    Distributionally identical to ``sample_service_symbolwise`` (per-symbol
    erasures for IIR; per-packet survivor counts, i.e. binomial draws over
    the n_s symbols, for FR) but fast enough for 1e5-draw test batteries.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    delta = channel.delta
    if isinstance(scheme, IIR):
        width = max(64, int(scheme.k_s / (1.0 - delta) * 1.25) + 8)
        uses = _trials_until(
            n,
            scheme.k_s,
            lambda r, c: rng.random((r, c)) >= delta,
            width,
        )
        return uses.astype(np.float64)
    if isinstance(scheme, FR):
        blocks = _trials_until(
            n,
            scheme.k_p,
            lambda r, c: rng.binomial(scheme.n_s, 1.0 - delta, (r, c)) >= scheme.k_s,
            64,
        )
        return blocks.astype(np.float64) * scheme.n_s
    raise TypeError(f"unknown scheme type {type(scheme).__name__}")
