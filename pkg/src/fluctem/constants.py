"""Physical constants threaded through every formula.

The default unit system sets hbar = c = k_B = 1, so every quantity is a pure
number and all expressions keep their factors of hbar, c and k_B symbolic.
Passing an SI-valued Constants instance turns the same code into an SI run.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Constants:
    hbar: float = 1.0
    c: float = 1.0
    k_B: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.c <= 0 or self.k_B <= 0:
            raise ValueError("hbar, c and k_B must all be positive")


DEFAULT = Constants()

SI = Constants(hbar=1.054571817e-34, c=299792458.0, k_B=1.380649e-23)
