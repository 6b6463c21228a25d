"""Bit-exact arithmetic for linear cellular automata over GF(2).

An automaton is a Laurent polynomial in the shift, stored as a packed
bitmask.  Convention used everywhere in the package: the stencil reads to
the right, ``(Phi a)_z = sum_{v in V} a_{z+v}``.  The Ledrappier automaton
``1 + sigma`` is therefore the support ``{0, 1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import WindowTooShortError, ZeroPolynomialError

__all__ = [
    "ShiftPolynomial",
    "BitWindow",
    "CyclicConfig",
    "BinaryExpansion",
    "LEDRAPPIER",
    "poly_add",
    "poly_mul",
    "poly_pow",
    "lucas_binomial",
    "lucas_support",
    "apply",
    "apply_power",
    "cyclic_apply_power",
]


def _bit_positions(mask: int) -> np.ndarray:
    """Indices of the set bits of a non-negative int, ascending."""
    if mask == 0:
        return np.zeros(0, dtype=np.int64)
    raw = mask.to_bytes((mask.bit_length() + 7) // 8, "little")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return np.flatnonzero(bits).astype(np.int64)


def _mask_from_positions(positions: np.ndarray) -> int:
    if positions.size == 0:
        return 0
    bits = np.zeros(int(positions.max()) + 1, dtype=np.uint8)
    bits[positions] = 1
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _clmul(a: int, b: int) -> int:
    """Carry-less product of two bitmasks (GF(2)[x] multiplication)."""
    if a.bit_count() < b.bit_count():
        a, b = b, a
    out = 0
    for i in _bit_positions(b).tolist():
        out ^= a << i
    return out


@dataclass(frozen=True)
class ShiftPolynomial:
    """An element of GF(2)[sigma, sigma^-1].

    ``mask`` bit ``i`` is set iff the offset ``low + i`` is in the support.
    The canonical form has bit 0 set; the zero polynomial is ``(0, 0)``.
    """

    low: int = 0
    mask: int = 1

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("mask must be non-negative")
        if self.mask == 0:
            if self.low != 0:
                raise ValueError("zero polynomial must have low == 0")
        elif not self.mask & 1:
            raise ValueError("non-canonical mask: bit 0 must be set")

    @classmethod
    def from_support(cls, offsets: Iterable[int]) -> "ShiftPolynomial":
        offs = [int(v) for v in offsets]
        if len(set(offs)) != len(offs):
            raise ValueError(f"duplicate offsets in support {sorted(offs)}")
        if not offs:
            raise ZeroPolynomialError("support must be non-empty; use ShiftPolynomial.zero()")
        low = min(offs)
        mask = 0
        for v in offs:
            mask |= 1 << (v - low)
        return cls(low, mask)

    @classmethod
    def zero(cls) -> "ShiftPolynomial":
        return cls(0, 0)

    @classmethod
    def _normalized(cls, low: int, mask: int) -> "ShiftPolynomial":
        if mask == 0:
            return cls.zero()
        tz = (mask & -mask).bit_length() - 1
        return cls(low + tz, mask >> tz)

    @property
    def is_zero(self) -> bool:
        return self.mask == 0

    @property
    def support(self) -> tuple[int, ...]:
        return tuple((_bit_positions(self.mask) + self.low).tolist())

    def offsets(self) -> np.ndarray:
        """Support as an int64 array (no tuple materialisation)."""
        return _bit_positions(self.mask) + self.low

    @property
    def min_offset(self) -> int:
        return self.low

    @property
    def max_offset(self) -> int:
        return self.low + self.mask.bit_length() - 1

    @property
    def span(self) -> int:
        if self.is_zero:
            return 0
        return self.mask.bit_length() - 1

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __add__(self, other: "ShiftPolynomial") -> "ShiftPolynomial":
        return poly_add(self, other)

    def __mul__(self, other: "ShiftPolynomial") -> "ShiftPolynomial":
        return poly_mul(self, other)

    def __pow__(self, n: int) -> "ShiftPolynomial":
        return poly_pow(self, n)

    def __repr__(self) -> str:
        if self.is_zero:
            return "ShiftPolynomial.zero()"
        supp = self.support
        shown = ", ".join(map(str, supp[:8])) + (", ..." if len(supp) > 8 else "")
        return f"ShiftPolynomial({{{shown}}})"


LEDRAPPIER = ShiftPolynomial(0, 0b11)


def poly_add(p: ShiftPolynomial, q: ShiftPolynomial) -> ShiftPolynomial:
    if p.is_zero:
        return q
    if q.is_zero:
        return p
    low = min(p.low, q.low)
    mask = (p.mask << (p.low - low)) ^ (q.mask << (q.low - low))
    return ShiftPolynomial._normalized(low, mask)


def poly_mul(p: ShiftPolynomial, q: ShiftPolynomial) -> ShiftPolynomial:
    if p.is_zero or q.is_zero:
        raise ZeroPolynomialError("poly_mul does not accept the zero polynomial")
    return ShiftPolynomial._normalized(p.low + q.low, _clmul(p.mask, q.mask))


def _square(p: ShiftPolynomial) -> ShiftPolynomial:
    # Frobenius: (sum sigma^v)^2 = sum sigma^{2v} over GF(2).
    return ShiftPolynomial(2 * p.low, _mask_from_positions(2 * _bit_positions(p.mask)))


def poly_pow(p: ShiftPolynomial, n: int) -> ShiftPolynomial:
    """``p**n`` by square-and-multiply; squaring doubles every offset."""
    if n < 0:
        raise ValueError("exponent must be non-negative")
    if p.is_zero:
        raise ZeroPolynomialError("poly_pow does not accept the zero polynomial")
    result = ShiftPolynomial()
    base = p
    while n:
        if n & 1:
            result = poly_mul(result, base)
        n >>= 1
        if n:
            base = _square(base)
    return result


@dataclass(frozen=True)
class BinaryExpansion:
    """Little-endian binary digits of a non-negative integer."""

    digits: tuple[int, ...]

    @classmethod
    def of(cls, n: int) -> "BinaryExpansion":
        if n < 0:
            raise ValueError("n must be non-negative")
        return cls(tuple((n >> i) & 1 for i in range(n.bit_length())))

    @property
    def value(self) -> int:
        return sum(d << i for i, d in enumerate(self.digits))

    def digit(self, i: int) -> int:
        return self.digits[i] if 0 <= i < len(self.digits) else 0

    def dominated_by(self, other: "BinaryExpansion") -> bool:
        """The relation ``self << other``: every digit of self is <= other's."""
        return all(d <= other.digit(i) for i, d in enumerate(self.digits))


def lucas_binomial(N: int, n: int) -> int:
    """``C(N, n) mod 2`` by Lucas' theorem."""
    if N < 0 or n < 0:
        raise ValueError("arguments must be non-negative")
    return int(n & ~N == 0)


def lucas_support(n: int) -> tuple[int, ...]:
    """All ``l`` with ``l << n``, i.e. subset sums of the set bits of ``n``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    sums = [0]
    bit = 1
    while bit <= n:
        if n & bit:
            sums += [s + bit for s in sums]
        bit <<= 1
    return tuple(sorted(sums))


def _as_bits(cells) -> np.ndarray:
    arr = np.array(cells, dtype=np.uint8).reshape(-1)
    if arr.size and arr.max() > 1:
        raise ValueError("cells must be 0/1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BitWindow:
    """Cells ``cells[i]`` observe coordinate ``base + i`` of a point of A^Z."""

    base: int
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", _as_bits(self.cells))
        if self.cells.size < 1:
            raise ValueError("a window holds at least one cell")

    @classmethod
    def from_bits(cls, bits: str | Iterable[int], base: int = 0) -> "BitWindow":
        if isinstance(bits, str):
            bits = [int(c) for c in bits]
        return cls(base, bits)

    def __len__(self) -> int:
        return int(self.cells.size)

    @property
    def stop(self) -> int:
        """One past the last observed coordinate."""
        return self.base + len(self)

    def covers(self, coords) -> bool:
        c = np.asarray(coords)
        return c.size == 0 or (c.min() >= self.base and c.max() < self.stop)

    def at(self, z: int) -> int:
        if not self.base <= z < self.stop:
            raise IndexError(f"coordinate {z} outside [{self.base}, {self.stop})")
        return int(self.cells[z - self.base])

    def restrict(self, start: int, stop: int) -> "BitWindow":
        if start < self.base or stop > self.stop or start >= stop:
            raise IndexError(f"[{start}, {stop}) not inside [{self.base}, {self.stop})")
        return BitWindow(start, self.cells[start - self.base:stop - self.base])

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitWindow):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.base, self.cells.tobytes()))

    def __repr__(self) -> str:
        bits = "".join(map(str, self.cells[:64].tolist()))
        return f"BitWindow(base={self.base}, cells={bits}{'...' if len(self) > 64 else ''})"


@dataclass(frozen=True, eq=False)
class CyclicConfig:
    """A configuration on Z/N; indices wrap."""

    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", _as_bits(self.cells))
        if self.cells.size < 1:
            raise ValueError("a cyclic configuration holds at least one cell")

    def __len__(self) -> int:
        return int(self.cells.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CyclicConfig):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash(self.cells.tobytes())


def apply(p: ShiftPolynomial, w: BitWindow) -> BitWindow:
    """One step of ``p`` on a window; the window shrinks by ``span(p)``.

    Only coordinates whose whole stencil is visible are emitted, so the
    result starts at ``w.base - min(support)``.
    """
    if p.is_zero:
        return BitWindow(w.base, np.zeros(len(w), dtype=np.uint8))
    span = p.span
    out_len = len(w) - span
    if out_len < 1:
        raise WindowTooShortError(f"window of length {len(w)} cannot carry a stencil of span {span}")
    out = np.zeros(out_len, dtype=np.uint8)
    for i in _bit_positions(p.mask).tolist():
        out ^= w.cells[i:i + out_len]
    return BitWindow(w.base - p.low, out)


def apply_power(p: ShiftPolynomial, n: int, w: BitWindow) -> BitWindow:
    return apply(poly_pow(p, n), w)


def cyclic_apply_power(p: ShiftPolynomial, n: int, c: CyclicConfig) -> CyclicConfig:
    size = len(c)
    offsets = poly_pow(p, n).offsets() % size
    # offsets that collide mod N cancel in pairs
    odd = np.flatnonzero(np.bincount(offsets, minlength=size) & 1)
    out = np.zeros(size, dtype=np.uint8)
    for ell in odd.tolist():
        out ^= np.roll(c.cells, -ell)
    return CyclicConfig(out)
