"""Codes shared across modules.

The integer constants are the service-model and discipline codes consumed
by the two simulation kernels; the compiled kernel (_kernel.pyx) hardcodes
the same values, and the parity tests exercise every code through both
backends. ``Discipline`` is the public face of the two queue disciplines.
"""

from enum import Enum


class Discipline(Enum):
    """How the single-update server treats arrivals while busy."""

    BLOCKING = "blocking"
    PREEMPTIVE = "preemptive"

    @property
    def code(self) -> int:
        return BLOCKING if self is Discipline.BLOCKING else PREEMPTIVE


# service model kinds
DETERMINISTIC = 0
EXPONENTIAL = 1
GAMMA = 2
HYPEREXPONENTIAL = 3
NEGBINOMIAL = 4
SCALED_NEGBINOMIAL = 5
SYMBOL_IIR = 6
SYMBOL_FR = 7

# queue disciplines
BLOCKING = 0
PREEMPTIVE = 1
