"""Samplers and exact representations of the measures under study.

Hierarchical measure
    Level ``n >= 0`` is a ``2**(n+1)``-periodic layer: coordinate ``j`` (1-based)
    carries the generator ``p^n_m`` with ``m = ((j-1) mod 2**n) + 1`` iff bit ``n``
    of ``j-1`` is set.  Each ``p^n_m`` is Bernoulli(``alpha**n``) with
    ``alpha = 2**(-1/5)``; level 0 is deterministic (``alpha**0 = 1``) and is
    carried as a constant parity.  The measure is the law of
    ``a_x = a^inf_{k+x}`` for ``k`` uniform on ``[0, 2**depth)``, where the
    levels ``>= depth`` are dropped.

Block-code measure
    Independent uniform codewords of an ``R``-dimensional subspace of
    ``GF(2)^Q``, concatenated, optionally shifted by a uniform phase.

Every measure here exposes ``sample(rng, count, length, base=1)`` returning a
``(count, length)`` uint8 array of cells at coordinates ``base .. base+length-1``
and ``char_expectation(support)`` giving the exact integral of the character
``prod_{x in support} (-1)**a_x``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import gf2
from .core import BitWindow
from .errors import ConfigError, WindowTooShortError

ALPHA = 2.0 ** -0.2

DEFAULT_TOLERANCE = 1e-9


def rho_one(level: int) -> float:
    """Probability that a level-``level`` generator equals 1."""
    if level < 0:
        raise ValueError("level must be non-negative")
    return ALPHA ** level


@dataclass(frozen=True)
class LevelDistribution:
    level: int

    @property
    def p_one(self) -> float:
        return rho_one(self.level)

    @property
    def p_zero(self) -> float:
        return 1.0 - self.p_one


def tail_bound(depth: int) -> float:
    """Truncation budget ``2 alpha^D / (1 - alpha)`` for dropping levels >= D."""
    return 2.0 * ALPHA ** depth / (1.0 - ALPHA)


def depth_for_tolerance(tolerance: float) -> int:
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    depth = max(1, math.ceil(math.log(tolerance * (1.0 - ALPHA) / 2.0) / math.log(ALPHA)))
    while tail_bound(depth) > tolerance:
        depth += 1
    while depth > 1 and tail_bound(depth - 1) <= tolerance:
        depth -= 1
    return depth


@lru_cache(maxsize=None)
def level_factors(depth: int) -> np.ndarray:
    """``E[(-1)^p]`` for one generator at each level: ``1 - 2 alpha^n``; level 0 gives -1."""
    f = 1.0 - 2.0 * ALPHA ** np.arange(depth, dtype=float)
    f[0] = -1.0
    f.setflags(write=False)
    return f


def _signed_product(factors: Sequence[float]) -> float:
    # log-space accumulation keeps long products from drifting
    if len(factors) <= 64:
        return math.prod(factors)
    if any(f == 0.0 for f in factors):
        return 0.0
    sign = -1.0 if sum(f < 0 for f in factors) % 2 else 1.0
    return sign * math.exp(math.fsum(math.log(abs(f)) for f in factors))


# ---------------------------------------------------------------------------
# generator algebra


@dataclass(frozen=True, order=True)
class VariableId:
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be non-negative")
        if not 1 <= self.index <= 2 ** self.level:
            raise ValueError(f"index {self.index} outside [1, 2**{self.level}]")

    @property
    def p_one(self) -> float:
        return rho_one(self.level)


@dataclass(frozen=True)
class VariableSet:
    """A GF(2) linear form over the generators plus a constant parity bit."""

    members: frozenset = frozenset()
    parity: int = 0

    def toggle(self, var: VariableId) -> "VariableSet":
        return VariableSet(self.members ^ {var}, self.parity)

    def __xor__(self, other: "VariableSet") -> "VariableSet":
        return VariableSet(self.members ^ other.members, self.parity ^ other.parity)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, var) -> bool:
        return var in self.members

    def levels(self) -> list[int]:
        return sorted(v.level for v in self.members)

    def expectation(self) -> float:
        """``E[(-1)^form]`` under independent generators."""
        value = _signed_product([1.0 - 2.0 * v.p_one for v in self.members])
        return -value if self.parity else value

    def p_odd(self) -> float:
        return 0.5 * (1.0 - self.expectation())

    def evaluate(self, assignment: Mapping[VariableId, int]) -> int:
        bit = self.parity
        for v in self.members:
            bit ^= assignment[v]
        return bit


def expand_coordinate(j: int, depth: int) -> VariableSet:
    """Generators feeding coordinate ``j`` of ``a^inf`` (1-based), levels ``< depth``."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    t = j - 1
    members = []
    for n in range(1, depth):
        if (t >> n) & 1:
            members.append(VariableId(n, (t % (1 << n)) + 1))
    return VariableSet(frozenset(members), t & 1)


def conditional_char(support: Iterable[int], k: int, depth: int) -> float:
    """Character integral given the shift ``k`` (only the generators are random)."""
    form = VariableSet()
    for x in support:
        form ^= expand_coordinate(k + x, depth)
    return form.expectation()


def stationary_char_expectation(support: Iterable[int], depth: int) -> float:
    """Exact ``E_mu[prod_{x in support} (-1)^{a_x}]`` for the depth-truncated measure.

    The uniform shift is processed digit by digit.  Put
    ``s = k - 1 + min(support)`` and let ``2**b`` cover the diameter.  Below bit
    ``b`` the state is the carry pattern of the support points, which is a
    threshold set in ``s mod 2**m``, so at most ``|support| + 1`` segments are
    tracked; points in the same residue class mod ``2**(m+1)`` share their
    level-``m`` generator and cancel in pairs.  At levels ``>= b`` each point
    reads the bits of ``u`` or ``u + 1`` (``u`` the high digits of ``s``,
    depending on its carry into bit ``b``), and the average over uniform ``u``
    has a closed form in the number of trailing ones.
    """
    K = np.unique(np.fromiter((int(x) for x in support), dtype=np.int64))
    if K.size == 0:
        return 1.0
    K = K - K[0]
    size = int(K.size)
    diam = int(K[-1]) + 1
    if diam >= 1 << 62:
        raise ValueError("support diameter must be below 2**62")
    b = min(depth, (diam - 1).bit_length())
    f = level_factors(depth)

    lo = np.zeros(1, dtype=np.int64)  # segment starts of s mod 2**m
    weight = np.ones(1)               # P(segment) * product of lower-level factors
    for m in range(b):
        period = 1 << (m + 1)
        resid = K & (period - 1)
        _, first, counts = np.unique(resid, return_index=True, return_counts=True)
        reps = K[first[counts & 1 == 1]]
        xbit = (reps >> m) & 1
        tau = (1 << m) - (reps & ((1 << m) - 1))
        # number of reps whose bit m of (s + x) is 1 when s_m = 0
        ones = np.zeros(lo.size, dtype=np.int64)
        for xb in (0, 1):
            grp = np.sort(tau[xbit == xb])
            carried = np.searchsorted(grp, lo, side="right")
            ones += carried if xb == 0 else grp.size - carried
        cand_lo = np.concatenate((lo, lo + (1 << m)))
        cand_w = 0.5 * np.concatenate(
            (weight * np.power(f[m], ones), weight * np.power(f[m], reps.size - ones))
        )
        tau_next = np.unique(period - resid[resid > 0])
        seg = np.searchsorted(tau_next, cand_lo, side="right")
        starts = np.concatenate(([0], np.flatnonzero(np.diff(seg)) + 1))
        lo = cand_lo[starts]
        weight = np.add.reduceat(cand_w, starts)

    n_high = depth - b
    if n_high == 0:
        return float(weight.sum())

    # points that do not carry into bit b, per segment
    carry_free = np.searchsorted(K, (1 << b) - lo, side="left")
    uniq, inv = np.unique(carry_free, return_inverse=True)
    g = f[b:]
    pow_a = np.power(g[None, :], uniq[:, None])
    prefix = np.concatenate((np.ones((uniq.size, 1)), np.cumprod(pow_a, axis=1)), axis=1)
    pow_b = np.power(g[None, :], (size - uniq)[:, None])
    tail_fac = 0.5 * (1.0 + np.power(g, size))
    tail = np.ones(n_high + 1)
    tail[:n_high] = np.cumprod(tail_fac[::-1])[::-1]
    probs = 0.5 ** np.arange(1, n_high + 1)
    high = (prefix[:, :n_high] * pow_b * tail[1:] * probs).sum(axis=1)
    high += 0.5 ** n_high * prefix[:, n_high]
    return float((weight * high[inv]).sum())


def _random_shift(rng: np.random.Generator, depth: int) -> int:
    words = rng.integers(0, 1 << 32, size=(depth + 31) // 32, dtype=np.uint64)
    k = 0
    for w in words.tolist():
        k = (k << 32) | int(w)
    return k & ((1 << depth) - 1)


@dataclass(frozen=True)
class HierarchicalMeasure:
    """Depth-``depth`` truncation of the zero-entropy shift-averaged measure."""

    depth: int
    tolerance: Optional[float] = None

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.tolerance is None:
            object.__setattr__(self, "tolerance", tail_bound(self.depth))
        elif self.tolerance <= 0:
            raise ConfigError("tolerance must be positive")
        elif tail_bound(self.depth) > self.tolerance * (1 + 1e-12):
            raise ConfigError(
                f"depth/tolerance mismatch: tail bound {tail_bound(self.depth):.3g} "
                f"exceeds tolerance {self.tolerance:.3g}"
            )

    @classmethod
    def from_tolerance(cls, tolerance: float = DEFAULT_TOLERANCE) -> "HierarchicalMeasure":
        return cls(depth_for_tolerance(tolerance), tolerance)

    @property
    def name(self) -> str:
        return f"hierarchical(depth={self.depth})"

    def char_expectation(self, support: Iterable[int]) -> float:
        return stationary_char_expectation(support, self.depth)

    def sample(self, rng: np.random.Generator, count: int, length: int, base: int = 1) -> np.ndarray:
        """Batch sampler; distributionally identical to :func:`sample_window`.

        Levels ``< n0`` (``2**n0 >= length``) may share a generator across the
        window and are drawn explicitly; at higher levels every cell sees its
        own generators, so their XOR is a single Bernoulli whose bias is the
        product of level factors over the set bits of the high shift digits.
        """
        del base  # stationary
        if count < 0 or length < 1:
            raise ValueError("count >= 0 and length >= 1 required")
        D = self.depth
        n0 = min(D, (length - 1).bit_length())
        c = rng.integers(0, 1 << n0, size=count, dtype=np.int64)
        t = c[:, None] + np.arange(length, dtype=np.int64)[None, :]
        out = np.zeros((count, length), dtype=np.uint8)
        if n0 >= 1:
            out ^= (t & 1).astype(np.uint8)
        rows = np.arange(count)[:, None]
        for n in range(1, n0):
            gens = rng.random((count, 1 << n)) < ALPHA ** n
            present = ((t >> n) & 1).astype(bool)
            out ^= (present & gens[rows, t & ((1 << n) - 1)]).astype(np.uint8)
        n_high = D - n0
        if n_high:
            g = level_factors(D)[n0:]
            bits = rng.integers(0, 2, size=(count, n_high), dtype=np.uint8)
            trailing = np.cumprod(bits, axis=1)
            r = trailing.sum(axis=1)
            bits1 = bits.copy()
            bits1[trailing == 1] = 0
            ok = r < n_high
            bits1[np.flatnonzero(ok), r[ok]] = 1
            prod0 = np.prod(np.where(bits == 1, g, 1.0), axis=1)
            prod1 = np.prod(np.where(bits1 == 1, g, 1.0), axis=1)
            carry = (t >> n0).astype(bool)
            bias = np.where(carry, prod1[:, None], prod0[:, None])
            out ^= (rng.random((count, length)) < 0.5 * (1.0 - bias)).astype(np.uint8)
        return out


def window_at_shift(mu: HierarchicalMeasure, k: int, length: int, rng: np.random.Generator) -> BitWindow:
    """``[a^inf_{k+1}, ..., a^inf_{k+length}]`` as a window at base 1.

    Generators are drawn lazily in coordinate order, so the result is a pure
    function of ``(rng state, k)``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    values: dict[VariableId, int] = {}
    cells = np.zeros(length, dtype=np.uint8)
    for i in range(length):
        form = expand_coordinate(k + i + 1, mu.depth)
        for v in sorted(form.members):
            if v not in values:
                values[v] = int(rng.random() < v.p_one)
        cells[i] = form.evaluate(values)
    return BitWindow(1, cells)


def sample_window(mu: HierarchicalMeasure, length: int, rng: np.random.Generator) -> BitWindow:
    k = _random_shift(rng, mu.depth)
    return window_at_shift(mu, k, length, rng)


def sample_by_duplication(levels: int, rng: np.random.Generator) -> BitWindow:
    """``w^{n+1} = w^n (w^n + errors)``, errors at level n Bernoulli(alpha^n)."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    w = np.zeros(1, dtype=np.uint8)
    for n in range(levels):
        errors = (rng.random(w.size) < ALPHA ** n).astype(np.uint8)
        w = np.concatenate((w, w ^ errors))
    return BitWindow(1, w)


def _enumerate_forms(forms: Sequence[VariableSet]) -> dict[tuple[int, ...], float]:
    variables = sorted(set().union(*(f.members for f in forms)))
    dist: dict[tuple[int, ...], float] = {}
    for bits in itertools.product((0, 1), repeat=len(variables)):
        assignment = dict(zip(variables, bits))
        prob = math.prod(v.p_one if b else 1.0 - v.p_one for v, b in assignment.items())
        outcome = tuple(f.evaluate(assignment) for f in forms)
        dist[outcome] = dist.get(outcome, 0.0) + prob
    return dist


def layered_distribution(depth: int, k: int, length: int) -> dict[tuple[int, ...], float]:
    """Exact law of ``[a^inf_{k+1} .. a^inf_{k+length}]`` by enumeration."""
    return _enumerate_forms([expand_coordinate(k + i + 1, depth) for i in range(length)])


def duplication_distribution(levels: int) -> dict[tuple[int, ...], float]:
    """Exact law of the duplication-with-error word of length ``2**levels``."""
    forms = [VariableSet()]
    for n in range(levels):
        copies = []
        for m, form in enumerate(forms, start=1):
            if n == 0:
                copies.append(VariableSet(form.members, form.parity ^ 1))
            else:
                copies.append(form.toggle(VariableId(n, m)))
        forms = forms + copies
    return _enumerate_forms(forms)


def _check_delta_args(m: int, n: int, depth: int) -> None:
    if n < 0:
        raise ValueError("level n must be non-negative")
    if not 1 <= m <= 2 ** n:
        raise ValueError(f"m={m} outside [1, 2**{n}]")
    if not n < depth:
        raise ValueError(f"need 2**n < 2**depth (n={n}, depth={depth})")


def delta_form(m: int, k: int, n: int, depth: int) -> VariableSet:
    """Linear form of ``d_m = a_{m+2^n} + a_m`` given the shift ``k``."""
    _check_delta_args(m, n, depth)
    return expand_coordinate(k + m + 2 ** n, depth) ^ expand_coordinate(k + m, depth)


def delta_distribution(m: int, k: int, n: int, depth: int) -> float:
    """``P(d_m = 1 | shift k)``."""
    return delta_form(m, k, n, depth).p_odd()


def delta_distribution_averaged(m: int, n: int, depth: int, method: str = "exact") -> float:
    """``P(d_m = 1)`` averaged over all shifts ``k`` in ``[0, 2**depth)``.

    ``method="exact"`` uses the factored shift average (by linearity the mean
    of ``p_odd`` is ``(1 - E[chi]) / 2`` for the two-point character);
    ``method="enumerate"`` loops over every ``k`` and is meant for small depth.
    Stationarity makes the result independent of ``m``.
    """
    _check_delta_args(m, n, depth)
    if method == "exact":
        return 0.5 * (1.0 - stationary_char_expectation((m, m + 2 ** n), depth))
    if method == "enumerate":
        total = math.fsum(delta_distribution(m, k, n, depth) for k in range(2 ** depth))
        return total / 2 ** depth
    raise ValueError(f"unknown method {method!r}")


def stratified_char_expectation(
    support: Sequence[int],
    depth: int,
    rng: np.random.Generator,
    strata: int = 64,
    per_stratum: int = 8,
) -> tuple[float, float]:
    """Stratified Monte-Carlo over the shift; returns ``(estimate, standard error)``.

    ``[0, 2**depth)`` is cut into ``strata`` equal intervals and ``per_stratum``
    shifts are drawn uniformly inside each; the integrand given the shift is
    evaluated exactly.
    """
    if strata < 1 or strata & (strata - 1) or strata > 2 ** depth:
        raise ValueError("strata must be a power of two not exceeding 2**depth")
    if per_stratum < 2:
        raise ValueError("per_stratum must be >= 2")
    width_bits = depth - (strata.bit_length() - 1)
    means, variances = [], []
    for st in range(strata):
        vals = []
        for _ in range(per_stratum):
            k = (st << width_bits) | _random_shift(rng, width_bits) if width_bits else st
            vals.append(conditional_char(support, k, depth))
        means.append(float(np.mean(vals)))
        variances.append(float(np.var(vals, ddof=1)))
    estimate = float(np.mean(means))
    stderr = math.sqrt(sum(variances) / (strata ** 2 * per_stratum))
    return estimate, stderr


def stratified_delta(
    m: int, n: int, depth: int, rng: np.random.Generator, strata: int = 64, per_stratum: int = 8
) -> tuple[float, float]:
    """Stratified estimate of :func:`delta_distribution_averaged` with its standard error."""
    _check_delta_args(m, n, depth)
    est, se = stratified_char_expectation((m, m + 2 ** n), depth, rng, strata, per_stratum)
    return 0.5 * (1.0 - est), 0.5 * se


# ---------------------------------------------------------------------------
# block codes


def _parse_rows(rows, width: Optional[int], what: str) -> np.ndarray:
    parsed = []
    for row in rows:
        if isinstance(row, str):
            if set(row) - {"0", "1"}:
                raise ConfigError(f"{what} row {row!r} is not a bit-string")
            parsed.append([int(c) for c in row])
        else:
            parsed.append([int(c) for c in row])
    M = np.array(parsed, dtype=np.uint8)
    if M.ndim != 2 or (width is not None and M.shape[1] != width):
        raise ConfigError(f"{what} rows must all have length Q={width}")
    if M.size and M.max() > 1:
        raise ConfigError(f"{what} entries must be 0/1")
    return M


@dataclass(frozen=True, eq=False)
class BlockCode:
    """An ``R``-dimensional subspace of ``GF(2)^Q`` given by generator and check matrices."""

    Q: int
    R: int
    generator: np.ndarray = field(repr=False)
    check: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        Q, R = self.Q, self.R
        if Q < 2 or Q & (Q - 1):
            raise ConfigError(f"Q={Q} is not a power of two >= 2")
        if not 1 <= R < Q:
            raise ConfigError(f"R={R} must satisfy 1 <= R < Q")
        G = _parse_rows(self.generator, Q, "generator")
        if G.shape[0] != R:
            raise ConfigError(f"generator has {G.shape[0]} rows, expected R={R}")
        if gf2.rank(G) != R:
            raise ConfigError("generator rows are linearly dependent (rank < R)")
        if self.check is None:
            H = gf2.nullspace(G)
        else:
            H = _parse_rows(self.check, Q, "check")
        if H.shape[0] != Q - R or gf2.rank(H) != Q - R:
            raise ConfigError(f"check matrix must have rank Q-R={Q - R}")
        if ((G.astype(np.int64) @ H.T.astype(np.int64)) & 1).any():
            raise ConfigError("generator * check^T != 0")
        G.setflags(write=False)
        H.setflags(write=False)
        object.__setattr__(self, "generator", G)
        object.__setattr__(self, "check", H)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "BlockCode":
        try:
            Q, R, gen = int(data["Q"]), int(data["R"]), data["generator"]
        except KeyError as exc:
            raise ConfigError(f"block code config missing field {exc.args[0]!r}") from None
        return cls(Q, R, _parse_rows(gen, Q, "generator"), data.get("check"))

    @classmethod
    def default(cls) -> "BlockCode":
        return cls(4, 2, [[1, 1, 0, 0], [0, 0, 1, 1]])

    @classmethod
    def repetition(cls) -> "BlockCode":
        return cls(2, 1, [[1, 1]])

    def encode(self, coefficients: np.ndarray) -> np.ndarray:
        """Map ``(..., R)`` coefficient vectors to ``(..., Q)`` codewords."""
        c = np.asarray(coefficients, dtype=np.int64)
        return ((c @ self.generator.astype(np.int64)) & 1).astype(np.uint8)

    def syndrome(self, blocks: np.ndarray) -> np.ndarray:
        b = np.asarray(blocks, dtype=np.int64)
        return ((b @ self.check.T.astype(np.int64)) & 1).astype(np.uint8)

    def contains(self, block) -> bool:
        return not self.syndrome(np.asarray(block).reshape(1, -1)).any()

    def codewords(self) -> np.ndarray:
        coeffs = np.array(list(itertools.product((0, 1), repeat=self.R)), dtype=np.uint8)
        return self.encode(coeffs)

    def annihilates(self, pattern) -> bool:
        """True iff the indicator ``pattern`` is orthogonal to every codeword."""
        v = np.asarray(pattern, dtype=np.int64)
        return not ((self.generator.astype(np.int64) @ v) & 1).any()


def load_block_code(path) -> BlockCode:
    """Read a block code from a TOML file with keys ``Q``, ``R``, ``generator``."""
    from .harness.config import read_toml

    data = read_toml(path)
    return BlockCode.from_mapping(data.get("code", data))


@dataclass(frozen=True)
class BlockCodeMeasure:
    code: BlockCode
    phase_averaged: bool = True

    @property
    def name(self) -> str:
        avg = "phase-averaged" if self.phase_averaged else "aligned"
        return f"block-code(Q={self.code.Q},R={self.code.R},{avg})"

    def _phases(self) -> range:
        return range(1, self.code.Q + 1) if self.phase_averaged else range(0, 1)

    def sample(self, rng: np.random.Generator, count: int, length: int, base: int = 1) -> np.ndarray:
        """Coordinate ``j`` reads concatenation index ``j - 1 + q`` for phase ``q``."""
        Q, R = self.code.Q, self.code.R
        if self.phase_averaged:
            q = rng.integers(1, Q + 1, size=count)
        else:
            q = np.zeros(count, dtype=np.int64)
        first = base - 1  # concatenation index of ``base`` before the phase shift
        blk0 = first // Q
        nblocks = (first + length - 1 + Q) // Q - blk0 + 1
        coeffs = rng.integers(0, 2, size=(count, nblocks, R), dtype=np.uint8)
        seq = self.code.encode(coeffs).reshape(count, nblocks * Q)
        start = first - blk0 * Q + q
        idx = start[:, None] + np.arange(length)[None, :]
        return seq[np.arange(count)[:, None], idx]

    def char_expectation(self, support: Iterable[int]) -> float:
        """Exact: given the phase, the character factorises over blocks and each
        block integrates to 1 if its pattern lies in the dual code, else 0."""
        pts = np.unique(np.fromiter((int(x) for x in support), dtype=np.int64))
        if pts.size == 0:
            return 1.0
        Q = self.code.Q
        phases = list(self._phases())
        hits = 0
        for q in phases:
            idx = pts - 1 + q
            blocks, pos = np.divmod(idx, Q)
            ok = True
            for blk in np.unique(blocks):
                pattern = np.zeros(Q, dtype=np.uint8)
                pattern[pos[blocks == blk]] = 1
                if not self.code.annihilates(pattern):
                    ok = False
                    break
            hits += ok
        return hits / len(phases)


def code_sample(meas: BlockCodeMeasure, num_blocks: int, rng: np.random.Generator) -> BitWindow:
    """Concatenate ``num_blocks`` random codewords; with phase averaging, drop a
    uniform phase ``q`` in ``[1..Q]`` and keep ``(num_blocks - 1) * Q`` cells."""
    if num_blocks < 1:
        raise ValueError("num_blocks must be >= 1")
    Q, R = meas.code.Q, meas.code.R
    coeffs = rng.integers(0, 2, size=(num_blocks, R), dtype=np.uint8)
    seq = meas.code.encode(coeffs).reshape(-1)
    if meas.phase_averaged:
        if num_blocks < 2:
            raise ValueError("phase-averaged samples need num_blocks >= 2")
        q = int(rng.integers(1, Q + 1))
        seq = seq[q:q + (num_blocks - 1) * Q]
    return BitWindow(1, seq)


def code_membership(w: BitWindow, code: BlockCode) -> Optional[int]:
    """Least array offset ``q`` in ``[0, Q)`` at which every complete aligned
    ``Q``-block of the window is a codeword, or ``None``."""
    Q = code.Q
    if len(w) < 2 * Q:
        raise WindowTooShortError(f"membership needs at least 2Q={2 * Q} cells, got {len(w)}")
    for q in range(Q):
        nfull = (len(w) - q) // Q
        blocks = w.cells[q:q + nfull * Q].reshape(nfull, Q)
        if not code.syndrome(blocks).any():
            return q
    return None


@dataclass(frozen=True)
class BernoulliMeasure:
    """I.i.d. cells with ``P(1) = p``; ``p = 1/2`` is the Haar measure."""

    p: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"Bernoulli parameter {self.p} outside [0, 1]")

    @property
    def name(self) -> str:
        return f"bernoulli(p={self.p})"

    def sample(self, rng: np.random.Generator, count: int, length: int, base: int = 1) -> np.ndarray:
        del base
        return (rng.random((count, length)) < self.p).astype(np.uint8)

    def char_expectation(self, support: Iterable[int]) -> float:
        rank = len(set(int(x) for x in support))
        return (1.0 - 2.0 * self.p) ** rank
