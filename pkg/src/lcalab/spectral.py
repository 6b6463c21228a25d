"""Characters of A^Z, their pullbacks through automaton powers, and decay analysis."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .core import BitWindow, ShiftPolynomial, lucas_support, poly_mul, poly_pow
from .errors import SupportOutsideWindowError
from .measures import (
    ALPHA,
    HierarchicalMeasure,
    conditional_char,
    stratified_char_expectation,
)

DEFAULT_BETA = 2.0 ** 0.225
DEFAULT_EPS = 0.05


class WindowSampler(Protocol):
    def sample(self, rng: np.random.Generator, count: int, length: int, base: int = 1) -> np.ndarray: ...


@dataclass(frozen=True)
class Character:
    """``chi(a) = prod_{k in support} (-1)^{a_k}``; the empty support is the trivial character."""

    support: tuple[int, ...] = ()

    def __post_init__(self):
        pts = tuple(int(k) for k in self.support)
        if len(set(pts)) != len(pts):
            raise ValueError("character support must not repeat coordinates")
        object.__setattr__(self, "support", tuple(sorted(pts)))

    @classmethod
    def of(cls, *coords: int) -> "Character":
        return cls(coords)

    @property
    def is_trivial(self) -> bool:
        return not self.support

    @property
    def rank(self) -> int:
        return len(self.support)

    @property
    def diam(self) -> int:
        if self.is_trivial:
            return 0
        return self.support[-1] - self.support[0] + 1

    def shifted(self, k: int) -> "Character":
        return Character(tuple(x + k for x in self.support))

    def as_polynomial(self) -> ShiftPolynomial:
        if self.is_trivial:
            return ShiftPolynomial.zero()
        return ShiftPolynomial.from_support(self.support)


def char_eval(chi: Character, w: BitWindow) -> int:
    if chi.is_trivial:
        return 1
    if not w.covers(chi.support):
        raise SupportOutsideWindowError(
            f"support [{chi.support[0]}, {chi.support[-1]}] not inside window [{w.base}, {w.stop})"
        )
    idx = np.asarray(chi.support) - w.base
    return -1 if int(w.cells[idx].sum()) & 1 else 1


def pullback(chi: Character, p: ShiftPolynomial, n: int) -> Character:
    """``chi o p^n``: translates of ``chi`` by every offset of ``p^n``, reduced mod 2.

    This is the support of the product polynomial, so the pairwise
    cancellation comes for free from carry-less multiplication.
    """
    if chi.is_trivial:
        return chi
    prod = poly_mul(chi.as_polynomial(), poly_pow(p, n))
    return Character(tuple(prod.offsets().tolist()))


def exact_mu_char(chi: Character, mu) -> float:
    """Exact integral of ``chi`` against a measure exposing ``char_expectation``."""
    if chi.is_trivial:
        return 1.0
    return mu.char_expectation(chi.support)


def enumerated_mu_char(chi: Character, mu: HierarchicalMeasure) -> float:
    """Literal average over every shift ``k in [0, 2**depth)``; for small depth only."""
    if chi.is_trivial:
        return 1.0
    total = math.fsum(conditional_char(chi.support, k, mu.depth) for k in range(2 ** mu.depth))
    return total / 2 ** mu.depth


def stratified_mu_char(
    chi: Character,
    mu: HierarchicalMeasure,
    rng: np.random.Generator,
    strata: int = 64,
    per_stratum: int = 8,
) -> tuple[float, float]:
    """Stratified shift sampling; returns ``(estimate, standard error)``."""
    if chi.is_trivial:
        return 1.0, 0.0
    return stratified_char_expectation(chi.support, mu.depth, rng, strata, per_stratum)


def mc_char(
    sampler: WindowSampler,
    chi: Character,
    p: ShiftPolynomial,
    n: int,
    samples: int,
    rng: np.random.Generator,
    length: Optional[int] = None,
    chunk: int = 1 << 22,
) -> tuple[float, float]:
    """Monte-Carlo estimate of ``<p^n mu, chi>`` and its standard error.

    Windows start at the leftmost pulled-back coordinate and by default are
    just wide enough to hold the pulled-back support.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pulled = pullback(chi, p, n)
    if pulled.is_trivial:
        return 1.0, 0.0
    base = pulled.support[0]
    need = pulled.diam
    if length is None:
        length = need
    elif length < need:
        raise SupportOutsideWindowError(
            f"window length {length} cannot hold pulled-back support of diameter {need}"
        )
    cols = np.asarray(pulled.support) - base
    per_chunk = max(1, chunk // length)
    total = 0
    done = 0
    while done < samples:
        m = min(per_chunk, samples - done)
        windows = sampler.sample(rng, m, length, base=base)
        parity = windows[:, cols].sum(axis=1, dtype=np.int64) & 1
        total += m - 2 * int(parity.sum())
        done += m
    est = total / samples
    return est, math.sqrt(max(0.0, 1.0 - est * est) / samples)


# ---------------------------------------------------------------------------
# genericity of iterates


@dataclass(frozen=True)
class GenericityWitness:
    n: int
    I: int
    J: Optional[int]
    M: Optional[int]
    g1: bool
    g2: bool
    g3: bool

    @property
    def satisfied(self) -> bool:
        return self.g1 and self.g2 and self.g3


def genericity_check(n: int, N: int, eps: float = DEFAULT_EPS) -> GenericityWitness:
    """Find the smallest ``J`` with ``N+2 < J < I/2`` and digits ``J-2, J-1`` of
    ``n`` both zero, then test ``#{j in [J..I] : n_j = 1} >= (I-J)/2 - eps``."""
    if n < 2 or N < 0 or eps < 0:
        raise ValueError("need n >= 2, N >= 0, eps >= 0")
    I = n.bit_length() - 1
    candidates = [J for J in range(N + 3, I + 1) if 2 * J < I]
    for J in candidates:
        if not (n >> (J - 2)) & 1 and not (n >> (J - 1)) & 1:
            card = bin(n >> J).count("1")
            return GenericityWitness(n, I, J, card - 1, True, True, card >= 0.5 * (I - J) - eps)
    return GenericityWitness(n, I, None, None, bool(candidates), False, False)


def genericity_pass_mask(ns: np.ndarray, N: int, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Vectorised ``genericity_check(n, N, eps).satisfied`` over an int array."""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size and ns.min() < 2:
        raise ValueError("need n >= 2")
    I = np.zeros(ns.shape, dtype=np.int64)
    for bit in range(63):
        I[(ns >> bit) > 0] = bit
    found = np.zeros(ns.shape, dtype=bool)
    J = np.zeros(ns.shape, dtype=np.int64)
    for j in range(N + 3, int(I.max(initial=0)) + 1):
        hit = ~found & (2 * j < I) & (((ns >> (j - 2)) & 3) == 0)
        J[hit] = j
        found |= hit
    high = np.where(found, ns >> J, 0)
    card = np.zeros(ns.shape, dtype=np.int64)
    while high.any():
        card += high & 1
        high >>= 1
    return found & (card >= 0.5 * (I - J) - eps)


def product_of_translates(chi: Character, n: int, J: int) -> tuple[Character, tuple[int, ...]]:
    """Split ``chi o Phi^n`` (Ledrappier) as translates of ``xi_0 = chi o Phi^{n0}``.

    ``n = n0 + 2**J n1`` with ``n0 < 2**(J-2)``; the translates are by
    ``2**J * l`` for ``l`` in the Lucas support of ``n1``.
    """
    n0 = n & ((1 << (J - 2)) - 1)
    if n0 != n & ((1 << J) - 1):
        raise ValueError(f"digits J-2, J-1 of n={n} are not both zero for J={J}")
    xi0 = pullback(chi, ShiftPolynomial(0, 0b11), n0)
    return xi0, tuple((1 << J) * ell for ell in lucas_support(n >> J))


def genericity_scale(chi: Character) -> int:
    """``N = ceil(log2 diam chi)``, the smallest admissible ``N`` for ``chi``."""
    if chi.is_trivial:
        raise ValueError("the trivial character has no scale")
    return (chi.diam - 1).bit_length()


def lemma3_bound(rank: int, I: int, beta: float = DEFAULT_BETA) -> float:
    """Upper bound ``-(r/2) (alpha beta)^I`` on ``log |<mu, chi o Phi^n>|``."""
    if not 1.0 / ALPHA < beta < 2.0 ** 0.25:
        raise ValueError(f"beta={beta} outside (1/alpha, 2**(1/4))")
    if rank < 1:
        raise ValueError("rank must be positive")
    return -(rank / 2.0) * (ALPHA * beta) ** I


def decay_bound_violations(
    chi: Character,
    mu: HierarchicalMeasure,
    ns: Iterable[int],
    beta: float = DEFAULT_BETA,
    eps: float = DEFAULT_EPS,
    slack: Optional[float] = None,
) -> list[tuple[int, float, float]]:
    """Generic ``n`` (for ``N = genericity_scale(chi)``) where
    ``|<mu, chi o Phi^n>| > exp(bound) + slack``, as ``(n, value, exp(bound))``.

    ``slack`` defaults to the depth-truncation budget of ``mu``.
    """
    N = genericity_scale(chi)
    slack = mu.tolerance if slack is None else slack
    led = ShiftPolynomial(0, 0b11)
    bad = []
    for n in ns:
        w = genericity_check(int(n), N, eps)
        if not w.satisfied:
            continue
        value = exact_mu_char(pullback(chi, led, int(n)), mu)
        limit = math.exp(lemma3_bound(chi.rank, w.I, beta))
        if abs(value) > limit + slack:
            bad.append((int(n), value, limit))
    return bad


# ---------------------------------------------------------------------------
# decay series


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class DecaySeries:
    """Sampled trajectory ``n -> <Phi^n mu, chi>``; ``stderr`` is None for exact values."""

    n: np.ndarray
    value: np.ndarray
    stderr: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.int64)
        v = np.asarray(self.value, dtype=float)
        if n.shape != v.shape:
            raise ValueError("n and value must have equal length")
        if n.size > 1 and not (np.diff(n) > 0).all():
            raise ValueError("iterate indices must be strictly increasing")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "value", v)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "DecaySeries":
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    def __len__(self) -> int:
        return int(self.n.size)

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value", "stderr"])
        for i in range(len(self)):
            se = "" if self.stderr is None else _fmt(self.stderr[i])
            w.writerow([int(self.n[i]), _fmt(self.value[i]), se])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "DecaySeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        n = [int(r["n"]) for r in rows]
        v = [float(r["value"]) for r in rows]
        se = [r["stderr"] for r in rows]
        stderr = None if all(s == "" for s in se) else [float(s) for s in se]
        return cls(n, v, stderr)


def cesaro_density(series: DecaySeries, threshold: float, horizon: int) -> float:
    """Fraction of ``n in [1..horizon]`` with ``|value_n| > threshold``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    lookup = dict(zip(series.n.tolist(), series.value.tolist()))
    missing = [k for k in range(1, horizon + 1) if k not in lookup]
    if missing:
        raise ValueError(f"series has gaps in [1..{horizon}], first missing n={missing[0]}")
    vals = np.array([lookup[k] for k in range(1, horizon + 1)])
    return float(np.mean(np.abs(vals) > threshold))
