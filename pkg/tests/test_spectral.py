from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcalab.core import LEDRAPPIER, BitWindow, ShiftPolynomial, apply_power, lucas_support
from lcalab.errors import SupportOutsideWindowError
from lcalab.measures import (
    ALPHA,
    BernoulliMeasure,
    HierarchicalMeasure,
    delta_distribution_averaged,
)
from lcalab.spectral import (
    Character,
    DecaySeries,
    cesaro_density,
    char_eval,
    enumerated_mu_char,
    exact_mu_char,
    genericity_check,
    genericity_pass_mask,
    genericity_scale,
    lemma3_bound,
    decay_bound_violations,
    mc_char,
    product_of_translates,
    pullback,
    stratified_mu_char,
)

chars = st.sets(st.integers(-6, 6), min_size=1, max_size=4).map(lambda s: Character(tuple(s)))
polys = st.sets(st.integers(-3, 3), min_size=1, max_size=3).map(ShiftPolynomial.from_support)


def naive_pullback(chi, offsets):
    c = Counter(k + l for k in chi.support for l in offsets)
    return tuple(sorted(z for z, m in c.items() if m % 2))


def test_character_basics():
    chi = Character.of(5, 1, 3)
    assert chi.support == (1, 3, 5) and chi.rank == 3 and chi.diam == 5
    assert Character().is_trivial
    assert chi.shifted(-1).support == (0, 2, 4)
    with pytest.raises(ValueError):
        Character((1, 1))


def test_char_eval():
    w = BitWindow(2, [1, 0, 1, 1])
    assert char_eval(Character.of(2), w) == -1
    assert char_eval(Character.of(2, 4), w) == 1
    assert char_eval(Character(), w) == 1
    with pytest.raises(SupportOutsideWindowError):
        char_eval(Character.of(6), w)


@given(chars, polys, st.integers(0, 20))
def test_pullback_is_translates_mod_two(chi, p, n):
    pulled = pullback(chi, p, n)
    assert pulled.support == naive_pullback(chi, poly_offsets(p, n))


def poly_offsets(p, n):
    c = Counter({0: 1})
    for _ in range(n):
        nxt = Counter()
        for a, m in c.items():
            for b in p.support:
                nxt[a + b] += m
        c = Counter({z: 1 for z, m in nxt.items() if m % 2})
    return sorted(c)


@settings(max_examples=50)
@given(chars, polys, st.integers(0, 16), st.integers(0, 2 ** 31))
def test_pullback_duality(chi, p, n, seed):
    rng = np.random.default_rng(seed)
    w = BitWindow(-30, rng.integers(0, 2, 60 + n * p.span))
    image = apply_power(p, n, w)
    chi = chi.shifted(image.base + 6)
    assert char_eval(pullback(chi, p, n), w) == char_eval(chi, image)


def test_pullback_ledrappier_rank_one():
    for n in (1, 5, 64, 100):
        assert pullback(Character.of(0), LEDRAPPIER, n).support == lucas_support(n)


def test_exact_matches_enumeration_small_depth():
    mu = HierarchicalMeasure(9)
    for n in (1, 3, 6):
        pulled = pullback(Character.of(0, 1), LEDRAPPIER, n)
        assert exact_mu_char(pulled, mu) == pytest.approx(enumerated_mu_char(pulled, mu), abs=1e-13)


def test_stratified_matches_exact():
    mu = HierarchicalMeasure(14)
    chi = pullback(Character.of(0), LEDRAPPIER, 8)
    est, se = stratified_mu_char(chi, mu, np.random.default_rng(9), strata=128, per_stratum=4)
    assert abs(est - exact_mu_char(chi, mu)) < 5 * se + 1e-12


def test_mc_against_exact():
    mu = HierarchicalMeasure(20)
    chi = Character.of(0)
    exact = exact_mu_char(pullback(chi, LEDRAPPIER, 4), mu)
    est, se = mc_char(mu, chi, LEDRAPPIER, 4, 200_000, np.random.default_rng(8))
    assert abs(est - exact) < 5 * se


@pytest.mark.parametrize("n", [1, 7, 64])
def test_mc_bernoulli_is_centred(n):
    est, se = mc_char(BernoulliMeasure(), Character.of(0, 2), LEDRAPPIER, n, 100_000, np.random.default_rng(n))
    assert abs(est) < 4 * se


def test_mc_rejects_short_window():
    with pytest.raises(SupportOutsideWindowError):
        mc_char(BernoulliMeasure(), Character.of(0, 5), LEDRAPPIER, 3, 10, np.random.default_rng(0), length=4)


def test_dyadic_iterates_are_two_point_characters():
    # chi o Phi^{2^k} = chi_{0, 2^k}, so the integral is 1 - 2 delta(k)
    mu = HierarchicalMeasure.from_tolerance(1e-6)
    for k in range(3, 13):
        value = exact_mu_char(pullback(Character.of(0), LEDRAPPIER, 2 ** k), mu)
        assert value == pytest.approx(1 - 2 * delta_distribution_averaged(1, k, mu.depth), abs=1e-14)


# --- genericity --------------------------------------------------------------


def test_genericity_example():
    # digits 5 and 6 are the first zero pair above N + 2, so J = 7 with seven ones above it
    n = sum(1 << b for b in (20, 19, 18, 17, 16, 15, 8, 0))
    w = genericity_check(n, 4, 0.05)
    assert w.I == 20 and w.J == 7 and w.M == 6
    assert w.g1 and w.g2 and w.g3 and w.satisfied


def test_genericity_small_n_fails():
    w = genericity_check(1000, 4, 0.05)
    assert not w.g1 and not w.satisfied


def test_pass_mask_matches_scalar():
    ns = np.arange(2, 1 << 16)
    mask = genericity_pass_mask(ns, 2, 0.05)
    scalar = np.array([genericity_check(int(n), 2, 0.05).satisfied for n in ns])
    assert (mask == scalar).all()


@given(st.integers(2, 2 ** 30), st.sampled_from([2, 4]))
def test_pass_mask_scalar_property(n, N):
    assert bool(genericity_pass_mask(np.array([n]), N)[0]) == genericity_check(n, N).satisfied


@settings(max_examples=50)
@given(st.integers(2 ** 12, 2 ** 18), st.sampled_from([1, 2]))
def test_product_of_translates(n, N):
    w = genericity_check(n, N)
    if w.J is None:
        return
    chi = Character.of(0, 1)
    xi0, shifts = product_of_translates(chi, n, w.J)
    rebuilt = naive_pullback(xi0, shifts)
    assert rebuilt == pullback(chi, LEDRAPPIER, n).support


def test_decay_bound():
    assert lemma3_bound(2, 10) < 0
    beta = 2 ** 0.225
    assert lemma3_bound(1, 3) == pytest.approx(-0.5 * (ALPHA * beta) ** 3)
    with pytest.raises(ValueError):
        lemma3_bound(1, 3, beta=1.1)
    with pytest.raises(ValueError):
        lemma3_bound(1, 3, beta=2 ** 0.3)


# --- decay series ------------------------------------------------------------


def test_decay_series_roundtrip():
    s = DecaySeries([1, 2, 3], [0.1, -1 / 3, 1e-20], [0.01, 0.02, 0.03])
    text = s.to_csv()
    assert text.splitlines()[0] == "n,value,stderr"
    back = DecaySeries.from_csv(text)
    assert (back.n == s.n).all() and (back.value == s.value).all() and (back.stderr == s.stderr).all()
    assert DecaySeries.from_csv(DecaySeries([1], [0.5]).to_csv()).stderr is None


def test_decay_series_validation():
    with pytest.raises(ValueError):
        DecaySeries([2, 1], [0.0, 0.0])


def test_cesaro_density():
    s = DecaySeries.from_pairs([(1, 0.5), (2, 0.01), (3, -0.2), (4, 0.0)])
    assert cesaro_density(s, 0.05, 4) == 0.5
    with pytest.raises(ValueError):
        cesaro_density(DecaySeries([1, 3], [0.0, 0.0]), 0.05, 3)


# --- worked examples and structural properties -----------------------------------


def test_char_eval_examples():
    assert char_eval(Character.of(0), BitWindow(0, [1, 0])) == -1
    assert char_eval(Character.of(0, 1), BitWindow(0, [1, 1, 0])) == 1


def test_pullback_examples():
    assert pullback(Character.of(0), LEDRAPPIER, 1).support == (0, 1)
    assert pullback(Character.of(0), LEDRAPPIER, 5).support == (0, 1, 4, 5)
    assert pullback(Character.of(0, 1), LEDRAPPIER, 1).support == (0, 2)


@given(chars, polys, st.integers(0, 20), st.integers(0, 20))
def test_pullback_composition(chi, p, a, b):
    assert pullback(pullback(chi, p, a), p, b) == pullback(chi, p, a + b)


def test_exact_trivial_and_cancelling():
    mu = HierarchicalMeasure(10)
    assert exact_mu_char(Character(), mu) == 1.0
    # coordinates 2^(D+1) apart see identical generators below depth D
    assert exact_mu_char(Character.of(3, 3 + 2 ** 11), mu) == 1.0


def test_mc_rejects_zero_samples():
    with pytest.raises(ValueError):
        mc_char(BernoulliMeasure(), Character.of(0), LEDRAPPIER, 1, 0, np.random.default_rng(0))


def test_exact_mc_battery():
    mu = HierarchicalMeasure(24)
    rng = np.random.default_rng(31)
    for _ in range(20):
        chi = Character(tuple(sorted(rng.choice(np.arange(0, 12), size=int(rng.integers(1, 4)), replace=False).tolist())))
        for n in (1, 6):
            exact = exact_mu_char(pullback(chi, LEDRAPPIER, n), mu)
            est, se = mc_char(mu, chi, LEDRAPPIER, n, 20_000, rng)
            assert abs(est - exact) <= 4 * max(se, 1e-3)


def test_single_bit_fails_g3():
    # J = 7 is the first candidate and needs I > 14
    for k in range(15, 40):
        w = genericity_check(2 ** k, 4, 0.05)
        assert w.g1 and w.g2 and not w.g3


def test_density_example_value():
    # the scan value is far from the 0.9 the density-one heuristic suggests; eps 0.05 and 0.1 coincide
    ns = np.arange(2, 2 ** 20 + 1)
    for eps in (0.05, 0.1):
        assert genericity_pass_mask(ns, 4, eps).mean() == pytest.approx(0.32498199938011113, abs=1e-12)


def test_genericity_scale():
    assert genericity_scale(Character.of(0)) == 0
    assert genericity_scale(Character.of(0, 1)) == 1
    assert genericity_scale(Character.of(0, 15)) == 4
    assert genericity_scale(Character.of(0, 16)) == 5


@settings(max_examples=40)
@given(st.sets(st.integers(0, 15), min_size=1, max_size=4), st.integers(2 ** 14, 2 ** 22))
def test_translates_do_not_overlap(support, n):
    chi = Character(tuple(support))
    N = max(genericity_scale(chi), 1)
    w = genericity_check(n, N)
    if w.J is None:
        return
    xi0, shifts = product_of_translates(chi, n, w.J)
    ranges = sorted((s + xi0.support[0], s + xi0.support[-1]) for s in shifts)
    assert all(a[1] < b[0] for a, b in zip(ranges, ranges[1:]))
    assert pullback(chi, LEDRAPPIER, n).rank == len(shifts) * xi0.rank


def test_decay_bound_examples():
    assert lemma3_bound(1, 0) == -0.5
    assert lemma3_bound(3, 9) < lemma3_bound(3, 8)
    assert lemma3_bound(2, 7) == pytest.approx(2 * lemma3_bound(1, 7))


def test_decay_bound_consistency():
    mu = HierarchicalMeasure.from_tolerance(1e-6)
    ns = range(2 ** 15, 2 ** 15 + 1024)
    assert genericity_pass_mask(np.array(ns), 0).sum() > 0
    assert decay_bound_violations(Character.of(0), mu, ns) == []
    assert decay_bound_violations(Character.of(0, 1), mu, ns) == []


def test_cesaro_examples():
    zeros = DecaySeries(np.arange(1, 11), np.zeros(10))
    ones = DecaySeries(np.arange(1, 11), np.ones(10))
    assert cesaro_density(zeros, 1e-9, 10) == 0.0
    assert cesaro_density(ones, 0.5, 10) == 1.0
