"""Simulation backend selection.

Prefers the compiled extension (``aoiq._kernel``) and falls back to the
pure-Python twin when it is not built. Both produce bit-identical output
for the same seed, so the choice affects speed only. Set the environment
variable ``AOIQ_PURE_PYTHON=1`` before import to force the fallback;
``benchmarks/kernel_bench.py`` times one against the other.
"""

import os

from . import _codes
from .distributions import ServiceDistribution
from .harq import FR, IIR, ErasureChannel

__all__ = ["BACKEND", "encode_service", "sample_bulk", "simulate_raw"]


def _select_backend(force_python: bool = False):
    if not force_python:
        try:
            from . import _kernel

            return _kernel, "compiled"
        except ImportError:
            pass
    from . import _pykernel

    return _pykernel, "python"


_impl, BACKEND = _select_backend(os.environ.get("AOIQ_PURE_PYTHON", "") not in ("", "0"))


def encode_service(service):
    """Kernel encoding for a distribution or a (scheme, channel) pair."""
    if isinstance(service, ServiceDistribution):
        return service._encoded()
    if isinstance(service, tuple) and len(service) == 2:
        scheme, channel = service
        if isinstance(channel, ErasureChannel):
            if isinstance(scheme, IIR):
                return (
                    _codes.SYMBOL_IIR,
                    float(scheme.k_s),
                    channel.delta,
                    0.0,
                    0.0,
                    None,
                    None,
                )
            if isinstance(scheme, FR):
                return (
                    _codes.SYMBOL_FR,
                    float(scheme.k_s),
                    float(scheme.n_s),
                    float(scheme.k_p),
                    channel.delta,
                    None,
                    None,
                )
    raise TypeError(
        "service must be a ServiceDistribution or an (IIR|FR, ErasureChannel) "
        f"pair, got {service!r}"
    )


def sample_bulk(service, n: int, seed: int):
    """n service draws through the active backend."""
    kind, p0, p1, p2, p3, cumw, rates = encode_service(service)
    return _impl.sample_bulk(kind, p0, p1, p2, p3, cumw, rates, n, seed)


def simulate_raw(
    discipline: int,
    lam: float,
    service,
    stop_rule: int,
    warmup: int,
    n_batches: int,
    event_cap: int,
    seed: int,
) -> dict:
    """Raw accumulator dict from the active backend's event loop."""
    kind, p0, p1, p2, p3, cumw, rates = encode_service(service)
    return _impl.simulate(
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
    )
