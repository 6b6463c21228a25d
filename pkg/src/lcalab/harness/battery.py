"""Property batteries behind ``verify-core``; each check reports a counterexample on failure."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import (
    LEDRAPPIER,
    BitWindow,
    ShiftPolynomial,
    apply,
    apply_power,
    lucas_binomial,
    lucas_support,
    poly_add,
    poly_mul,
    poly_pow,
)
from ..measures import duplication_distribution, layered_distribution
from ..spectral import Character, char_eval, pullback


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"PASS {self.name}" if self.ok else f"FAIL {self.name}: {self.detail}"


def pascal_parity_rows(top: int) -> list[list[int]]:
    """Rows ``0..top`` of Pascal's triangle with exact big integers, reduced mod 2."""
    rows, row = [], [1]
    for _ in range(top + 1):
        rows.append([c & 1 for c in row])
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return rows


def random_polynomial(rng: np.random.Generator, lo: int = -3, hi: int = 3, max_terms: int = 4) -> ShiftPolynomial:
    size = int(rng.integers(1, max_terms + 1))
    offs = rng.choice(np.arange(lo, hi + 1), size=min(size, hi - lo + 1), replace=False)
    return ShiftPolynomial.from_support(offs.tolist())


def random_window(rng: np.random.Generator, length: int, base_range: int = 20) -> BitWindow:
    base = int(rng.integers(-base_range, base_range + 1))
    return BitWindow(base, rng.integers(0, 2, size=length))


def check_lucas_equivalence(n_max: int, mutate_at: Optional[int] = None) -> Check:
    for n in range(n_max + 1):
        power = poly_pow(LEDRAPPIER, n)
        if n == mutate_at:
            flip = power.max_offset + 1
            power = poly_add(power, ShiftPolynomial.from_support([flip]))
        if power.support != lucas_support(n):
            return Check("lucas_equivalence", False,
                         f"n={n}: power support {power.support} != L(n) {lucas_support(n)}")
    return Check("lucas_equivalence", True)


def check_binomial_oracle(top: int) -> Check:
    rows = pascal_parity_rows(top)
    for N in range(top + 1):
        for n in range(top + 1):
            expect = rows[N][n] if n <= N else 0
            if lucas_binomial(N, n) != expect:
                return Check("binomial_parity_oracle", False, f"C({N},{n}) mod 2 = {expect}")
    return Check("binomial_parity_oracle", True)


def check_lucas_support_membership(n_max: int) -> Check:
    for n in range(n_max + 1):
        supp = set(lucas_support(n))
        for ell in range(n + 1):
            if (lucas_binomial(n, ell) == 1) != (ell in supp):
                return Check("lucas_support_membership", False, f"n={n}, l={ell}")
    return Check("lucas_support_membership", True)


def check_power_iterate(rng: np.random.Generator, trials: int, max_power: int) -> Check:
    for t in range(trials):
        p = random_polynomial(rng)
        n = int(rng.integers(0, max_power + 1))
        w = random_window(rng, n * p.span + int(rng.integers(1, 40)))
        fast = apply_power(p, n, w)
        slow = w
        for _ in range(n):
            slow = apply(p, slow)
        if fast != slow:
            return Check("power_iterate_agreement", False, f"trial {t}: p={p}, n={n}, w={w}")
    return Check("power_iterate_agreement", True)


def check_ring_laws(rng: np.random.Generator, trials: int) -> Check:
    one = ShiftPolynomial()
    for t in range(trials):
        p, q, r = (random_polynomial(rng, -6, 6, 6) for _ in range(3))
        if poly_mul(poly_mul(p, q), r) != poly_mul(p, poly_mul(q, r)):
            return Check("ring_laws", False, f"associativity fails for {p}, {q}, {r}")
        if poly_mul(p, q) != poly_mul(q, p):
            return Check("ring_laws", False, f"commutativity fails for {p}, {q}")
        if not poly_add(p, p).is_zero:
            return Check("ring_laws", False, f"p + p != 0 for {p}")
        if poly_mul(one, p) != p:
            return Check("ring_laws", False, f"identity fails for {p}")
    return Check("ring_laws", True)


def check_base_bookkeeping(rng: np.random.Generator, trials: int) -> Check:
    for t in range(trials):
        p, q = random_polynomial(rng), random_polynomial(rng)
        w = random_window(rng, p.span + q.span + int(rng.integers(1, 30)))
        if apply(q, apply(p, w)) != apply(poly_mul(p, q), w):
            return Check("base_bookkeeping", False, f"p={p}, q={q}, w={w}")
    return Check("base_bookkeeping", True)


def check_pullback(rng: np.random.Generator, trials: int, max_power: int) -> Check:
    for t in range(trials):
        p = random_polynomial(rng)
        n = int(rng.integers(0, max_power + 1))
        chi = Character(tuple(sorted(set(rng.integers(-5, 6, size=int(rng.integers(1, 4))).tolist()))))
        w = random_window(rng, chi.diam + n * p.span + int(rng.integers(0, 10)))
        # place chi so that its image fits the shrunken window
        image = apply_power(p, n, w)
        chi = chi.shifted(image.base - chi.support[0])
        if char_eval(pullback(chi, p, n), w) != char_eval(chi, image):
            return Check("pullback_consistency", False, f"chi={chi.support}, p={p}, n={n}")
    return Check("pullback_consistency", True)


def check_layered_duplication(levels: tuple[int, ...] = (1, 2, 3), tol: float = 1e-12) -> Check:
    for n in levels:
        lay = layered_distribution(n + 1, 0, 2 ** n)
        dup = duplication_distribution(n)
        keys = set(lay) | set(dup)
        worst = max(abs(lay.get(k, 0.0) - dup.get(k, 0.0)) for k in keys)
        if worst > tol:
            return Check("layered_duplication_equivalence", False, f"levels={n}: max deviation {worst:.3g}")
    return Check("layered_duplication_equivalence", True)


def run_battery(rng: np.random.Generator, lucas_max: int = 512, binom_max: int = 64,
                trials: int = 200, max_power: int = 64, mutate: bool = False) -> list[Check]:
    mutate_at = lucas_max // 2 + 1 if mutate else None
    steps: list[Callable[[], Check]] = [
        lambda: check_lucas_equivalence(lucas_max, mutate_at),
        lambda: check_binomial_oracle(binom_max),
        lambda: check_lucas_support_membership(min(lucas_max, 128)),
        lambda: check_power_iterate(rng, trials, max_power),
        lambda: check_ring_laws(rng, trials),
        lambda: check_base_bookkeeping(rng, trials),
        lambda: check_pullback(rng, trials, max_power),
        lambda: check_layered_duplication(),
    ]
    return [step() for step in steps]
