"""Constant-coefficient scalar differential operators.

A :class:`PdeOperator` is a map from derivative multi-indices to complex
coefficients; its order is the largest total order carrying a nonzero
coefficient.  Operators can be read from a small text format::

    # comment
    dimension 2
    [2 0] = 1
    [0 2] = 1
    [0 0] = 2.5+0.5i

Coefficients are written as ``re`` or ``re+im i`` / ``re-im i``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .multiindex import total_order


class PdeFormatError(ValueError):
    """Raised for malformed PDE files; carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class PdeOperator:
    """Sum of a_m * D^m over multi-indices m with |m| <= order."""

    dimension: int
    coefficients: dict[tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        coeffs = {tuple(m): complex(a)
                  for m, a in self.coefficients.items() if a != 0}
        if not coeffs:
            raise ValueError("degenerate PDE: all coefficients are zero")
        for m in coeffs:
            if len(m) != self.dimension:
                raise ValueError(
                    f"coefficient multi-index {m} does not match "
                    f"dimension {self.dimension}")
            if any(mi < 0 for mi in m):
                raise ValueError(f"negative derivative order in {m}")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def order(self) -> int:
        return max(total_order(m) for m in self.coefficients)

    def is_equal_order(self) -> bool:
        """True when every term has total order equal to the PDE order."""
        c = self.order
        return all(total_order(m) == c for m in self.coefficients)

    def pure_axis_coefficient_axes(self) -> list[int]:
        """1-based axes k with a nonzero pure c-th derivative a_{c e_k}."""
        c = self.order
        out = []
        for k in range(1, self.dimension + 1):
            m = tuple(c if i == k - 1 else 0 for i in range(self.dimension))
            if m in self.coefficients:
                out.append(k)
        return out

    def __hash__(self):
        return hash((self.dimension, tuple(sorted(self.coefficients.items()))))


def laplace_operator(dimension: int) -> PdeOperator:
    coeffs = {}
    for k in range(dimension):
        m = tuple(2 if i == k else 0 for i in range(dimension))
        coeffs[m] = 1.0
    return PdeOperator(dimension, coeffs)


def helmholtz_operator(dimension: int, kappa: float) -> PdeOperator:
    coeffs = dict(laplace_operator(dimension).coefficients)
    coeffs[(0,) * dimension] = kappa**2
    return PdeOperator(dimension, coeffs)


def biharmonic_operator(dimension: int) -> PdeOperator:
    """Squared Laplacian: sum over axis pairs of D^{2e_a + 2e_b}."""
    coeffs: dict[tuple[int, ...], complex] = {}
    for a in range(dimension):
        for b in range(dimension):
            m = [0] * dimension
            m[a] += 2
            m[b] += 2
            key = tuple(m)
            coeffs[key] = coeffs.get(key, 0) + 1.0
    return PdeOperator(dimension, coeffs)


_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^\s*(?P<re>{_FLOAT})\s*"
    rf"(?:(?P<sign>[+-])\s*(?P<im>{_FLOAT})\s*[ij])?\s*$")


def parse_coefficient(text: str) -> complex:
    """Parse ``re`` or ``re+im i`` (also ``j``) into a complex number."""
    m = _COMPLEX_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse coefficient {text!r}")
    try:
        real = float(m.group("re"))
        imag = float(m.group("im")) if m.group("im") is not None else 0.0
    except ValueError as exc:
        raise ValueError(f"cannot parse coefficient {text!r}") from exc
    if m.group("sign") == "-":
        imag = -imag
    return complex(real, imag)


def parse_pde(text: str) -> PdeOperator:
    """Parse the PDE text format; raises PdeFormatError with line numbers."""
    dimension = None
    coeffs: dict[tuple[int, ...], complex] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dimension is None:
            parts = line.replace("=", " ").replace(":", " ").split()
            if len(parts) != 2 or parts[0].lower() not in ("dimension", "dim"):
                raise PdeFormatError(
                    "expected 'dimension <d>' before coefficient entries",
                    lineno)
            try:
                dimension = int(parts[1])
            except ValueError:
                raise PdeFormatError(
                    f"bad dimension {parts[1]!r}", lineno) from None
            if dimension < 1:
                raise PdeFormatError(f"dimension must be >= 1, got {dimension}",
                                     lineno)
            continue
        m = re.match(r"^\[([\d\s,]*)\]\s*=\s*(.+)$", line)
        if not m:
            raise PdeFormatError(
                "expected '[exponents..] = coefficient'", lineno)
        try:
            exps = tuple(int(t) for t in m.group(1).replace(",", " ").split())
        except ValueError:
            raise PdeFormatError(
                f"bad exponent list {m.group(1)!r}", lineno) from None
        if len(exps) != dimension:
            raise PdeFormatError(
                f"multi-index {exps} has {len(exps)} entries, "
                f"expected {dimension}", lineno)
        try:
            coeff = parse_coefficient(m.group(2))
        except ValueError as exc:
            raise PdeFormatError(str(exc), lineno) from None
        if exps in coeffs:
            raise PdeFormatError(f"duplicate entry for {exps}", lineno)
        coeffs[exps] = coeff
    if dimension is None:
        raise PdeFormatError("empty PDE file: missing dimension line")
    try:
        return PdeOperator(dimension, coeffs)
    except ValueError as exc:
        raise PdeFormatError(str(exc)) from None


def load_pde(path) -> PdeOperator:
    with open(path, encoding="utf-8") as fh:
        return parse_pde(fh.read())
