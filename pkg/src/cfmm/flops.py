"""Operation tallies for the benchmark harness.

Counted quantities are arithmetic operations on the working scalar field
(complex where the data is complex), tallied alongside the arithmetic of the
pure-Python kernels.  Counting never changes any numerical result; passing
``tally=None`` runs the identical code without bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class FlopCounter:
    adds: int = 0
    muls: int = 0
    divs: int = 0
    special: int = 0

    def count(self, adds: int = 0, muls: int = 0, divs: int = 0,
              special: int = 0) -> None:
        self.adds += adds
        self.muls += muls
        self.divs += divs
        self.special += special

    @property
    def total(self) -> int:
        return self.adds + self.muls + self.divs + self.special

    def __add__(self, other: "FlopCounter") -> "FlopCounter":
        return FlopCounter(self.adds + other.adds, self.muls + other.muls,
                           self.divs + other.divs, self.special + other.special)

    def scaled(self, factor: float) -> "FlopCounter":
        """Tally with every field divided by ``factor`` (amortization)."""
        return FlopCounter(int(self.adds / factor), int(self.muls / factor),
                           int(self.divs / factor), int(self.special / factor))
