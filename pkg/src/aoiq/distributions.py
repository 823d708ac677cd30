"""Service-time distributions.

Every law lives on the nonnegative reals; the discrete ones (negative
binomial and its scaled variant) are treated as distributions on the
continuous time axis whose mass sits on integer multiples of the symbol
time, so expectations such as the Laplace transform E[exp(-lam*S)] are
plain sums over the pmf. One channel use equals one time unit throughout.

All objects are immutable and safe to share across threads. ``sample``
draws nothing from the generator except raw uniforms (see ``_pykernel``
for the exact consumption contract), which keeps scalar sampling, bulk
sampling and the simulator backends on identical streams.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import _codes, _pykernel

__all__ = [
    "ServiceDistribution",
    "Deterministic",
    "Exponential",
    "Gamma",
    "HyperExponential",
    "NegBinomial",
    "ScaledNegBinomial",
]


class ServiceDistribution(ABC):
    """A positive service-time law with analytic transform and sampler."""

    @abstractmethod
    def mean(self) -> float:
        """E[S]."""

    @abstractmethod
    def variance(self) -> float:
        """Var[S]."""

    def scv(self) -> float:
        """Squared coefficient of variation, Var[S] / E[S]**2."""
        m = self.mean()
        return self.variance() / (m * m)

    @abstractmethod
    def laplace(self, lam: float) -> float:
        """E[exp(-lam * S)] evaluated analytically."""

    @abstractmethod
    def laplace_deriv(self, lam: float) -> float:
        """d/d(lam) of E[exp(-lam * S)], analytic (never a finite difference)."""

    @abstractmethod
    def _encoded(self) -> tuple:
        """(kind, p0, p1, p2, p3, cumw, rates) for the simulation kernels."""

    def sample(self, rng: np.random.Generator) -> float:
        """One draw, consuming only uniforms from ``rng``."""
        kind, p0, p1, p2, p3, cumw, rates = self._encoded()
        return _pykernel.sample_one(rng.random, kind, p0, p1, p2, p3, cumw, rates)

    @staticmethod
    def _check_rate(lam: float) -> None:
        if not lam >= 0.0:
            raise ValueError(f"transform argument must be >= 0, got {lam}")


@dataclass(frozen=True)
class Deterministic(ServiceDistribution):
    """Unit mass at ``duration``."""

    duration: float

    def __post_init__(self):
        if not self.duration > 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")

    def mean(self):
        return self.duration

    def variance(self):
        return 0.0

    def laplace(self, lam):
        self._check_rate(lam)
        if lam == 0.0:
            return 1.0
        return math.exp(-lam * self.duration)

    def laplace_deriv(self, lam):
        self._check_rate(lam)
        return -self.duration * math.exp(-lam * self.duration)

    def _encoded(self):
        return (_codes.DETERMINISTIC, self.duration, 0.0, 0.0, 0.0, None, None)


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    """Exponential law with rate ``mu`` (mean 1/mu)."""

    mu: float

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError(f"rate must be positive, got {self.mu}")

    def mean(self):
        return 1.0 / self.mu

    def variance(self):
        return 1.0 / (self.mu * self.mu)

    def laplace(self, lam):
        self._check_rate(lam)
        if lam == 0.0:
            return 1.0
        return self.mu / (self.mu + lam)

    def laplace_deriv(self, lam):
        self._check_rate(lam)
        d = self.mu + lam
        return -self.mu / (d * d)

    def _encoded(self):
        return (_codes.EXPONENTIAL, self.mu, 0.0, 0.0, 0.0, None, None)


@dataclass(frozen=True)
class Gamma(ServiceDistribution):
    """Gamma law with given ``shape`` and ``scale`` (mean shape*scale)."""

    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape > 0.0:
            raise ValueError(f"shape must be positive, got {self.shape}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def mean(self):
        return self.shape * self.scale

    def variance(self):
        return self.shape * self.scale * self.scale

    def laplace(self, lam):
        self._check_rate(lam)
        if lam == 0.0:
            return 1.0
        return math.exp(-self.shape * math.log1p(self.scale * lam))

    def laplace_deriv(self, lam):
        self._check_rate(lam)
        return -self.shape * self.scale * math.exp(
            -(self.shape + 1.0) * math.log1p(self.scale * lam)
        )

    def _encoded(self):
        return (_codes.GAMMA, self.shape, self.scale, 0.0, 0.0, None, None)


@dataclass(frozen=True)
class HyperExponential(ServiceDistribution):
    """Mixture of exponentials: rate ``rates[i]`` with probability ``weights[i]``.

    The workhorse high-variability law: with distinct rates its squared
    coefficient of variation always exceeds 1, which makes it the natural
    test case for the bounded-optimal-rate regime of the blocking queue.
    """

    weights: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.weights) != len(self.rates) or not self.weights:
            raise ValueError("weights and rates must be equal-length, nonempty")
        if any(w <= 0.0 for w in self.weights):
            raise ValueError("weights must be positive")
        if any(r <= 0.0 for r in self.rates):
            raise ValueError("rates must be positive")
        if abs(math.fsum(self.weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {math.fsum(self.weights)}")

    def mean(self):
        return math.fsum(w / r for w, r in zip(self.weights, self.rates))

    def variance(self):
        second = math.fsum(2.0 * w / (r * r) for w, r in zip(self.weights, self.rates))
        m = self.mean()
        return second - m * m

    def laplace(self, lam):
        self._check_rate(lam)
        if lam == 0.0:
            return 1.0
        return math.fsum(w * r / (r + lam) for w, r in zip(self.weights, self.rates))

    def laplace_deriv(self, lam):
        self._check_rate(lam)
        return -math.fsum(
            w * r / ((r + lam) * (r + lam)) for w, r in zip(self.weights, self.rates)
        )

    def _encoded(self):
        cumw = np.cumsum(np.asarray(self.weights))
        cumw[-1] = 1.0  # close the scan interval regardless of rounding
        return (
            _codes.HYPEREXPONENTIAL,
            0.0,
            0.0,
            0.0,
            0.0,
            cumw,
            np.asarray(self.rates),
        )


@dataclass(frozen=True)
class NegBinomial(ServiceDistribution):
    """Trials needed for ``k`` successes at success probability ``q``.

    Support {k, k+1, ...}; mean k/q, variance k(1-q)/q**2. This is the
    service time of incremental-redundancy HARQ over an erasure channel:
    one decodable symbol arrives per channel use with probability q, and
    the update is done after the k-th one.
    """

    k: int
    q: float

    def __post_init__(self):
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0, 1], got {self.q}")

    def mean(self):
        return self.k / self.q

    def variance(self):
        return self.k * (1.0 - self.q) / (self.q * self.q)

    def laplace(self, lam):
        self._check_rate(lam)
        if lam == 0.0:
            return 1.0
        return math.exp(self.k * self._log_term(lam))

    def laplace_deriv(self, lam):
        self._check_rate(lam)
        return -self.k * self.laplace(lam) / self._denom(lam)

    def _log_term(self, lam):
        # log of e^{-lam} q / (1 - (1-q) e^{-lam}), the per-success factor
        return -lam + math.log(self.q) - math.log(self._denom(lam))

    def _denom(self, lam):
        # 1 - (1-q) e^{-lam} as a sum of positives; the direct form
        # cancels to zero once q and lam both drop below one ulp of 1
        return -math.expm1(-lam) + self.q * math.exp(-lam)

    def _encoded(self):
        return (_codes.NEGBINOMIAL, float(self.k), self.q, 0.0, 0.0, None, None)


@dataclass(frozen=True)
class ScaledNegBinomial(ServiceDistribution):
    """``n`` time units per trial, ``k`` successes needed: S = n * NegBinomial(k, q).

    Models fixed-redundancy HARQ: each attempt is a whole n-symbol packet,
    decodable with probability q, and k decodable packets finish an update.
    """

    n: int
    k: int
    q: float

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not 0.0 < self.q <= 1.0:
            raise ValueError(f"q must be in (0, 1], got {self.q}")

    def mean(self):
        return self.n * self.k / self.q

    def variance(self):
        return self.n * self.n * self.k * (1.0 - self.q) / (self.q * self.q)

    def laplace(self, lam):
        self._check_rate(lam)
        if lam == 0.0:
            return 1.0
        return math.exp(self.k * self._log_term(lam))

    def laplace_deriv(self, lam):
        self._check_rate(lam)
        return -self.k * self.n * self.laplace(lam) / self._denom(lam)

    def _log_term(self, lam):
        return -lam * self.n + math.log(self.q) - math.log(self._denom(lam))

    def _denom(self, lam):
        x = lam * self.n
        return -math.expm1(-x) + self.q * math.exp(-x)

    def _encoded(self):
        return (
            _codes.SCALED_NEGBINOMIAL,
            float(self.n),
            float(self.k),
            self.q,
            0.0,
            None,
            None,
        )
