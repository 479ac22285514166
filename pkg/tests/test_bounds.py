import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import exact
from authverif import bounds, oracle, states
from authverif.bounds import ProtocolConfig
from authverif.errors import ContractViolation, UndefinedBoundError

EDGE = states.GraphSpec.from_edges(2, [(1, 2)])


def rel_close(a, b, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


# -- eigenvalue_g --------------------------------------------------------------

@pytest.mark.parametrize("S", [2, 7, 101])
def test_perfect_measurement_eigenvalues(S):
    cfg = ProtocolConfig(S)
    for k in range(1, min(S, 30) + 1):
        assert rel_close(bounds.eigenvalue_g(cfg, k), k / (3 ** (k - 1) * S), 1e-12)
    assert bounds.eigenvalue_g(cfg, 0) == 0


def test_k1_at_s101():
    assert bounds.eigenvalue_g(ProtocolConfig(101), 1) == pytest.approx(1 / 101, rel=1e-14)
    assert bounds.eigenvalue_g(ProtocolConfig(101), 1) == pytest.approx(0.009901, abs=5e-7)


def test_eigenvalue_matches_enumeration_oracle():
    cfg = ProtocolConfig(4, 1, 0.8)
    assert bounds.eigenvalue_g(cfg, 2) == pytest.approx(
        oracle.enumerate_q_eigenvalues(cfg).by_k()[2], abs=1e-12)


def test_eigenvalue_range_error():
    with pytest.raises(ContractViolation):
        bounds.eigenvalue_g(ProtocolConfig(3), 4)


# -- soundness ------------------------------------------------------------------

@pytest.mark.parametrize("S", [2, 3, 5, 101, 10_000])
def test_perfect_measurement_soundness_is_one_over_s(S):
    res = bounds.soundness(ProtocolConfig(S))
    assert res.completeness == 1.0
    assert abs(res.soundness - 1 / S) <= 1e-12
    assert res.argmax_k == 1


def test_graph_soundness_tie_at_s101():
    res = bounds.soundness(ProtocolConfig(101, graph=EDGE))
    assert res.soundness == pytest.approx(1 / 101, rel=1e-12)
    assert res.argmax_k == 1
    table = res.table()
    assert table[2] == pytest.approx(table[1], rel=1e-12)
    for k in range(3, 102):
        assert table[k] == pytest.approx(k / (2 ** (k - 1) * 101), rel=1e-10)


def test_pinned_s101_p09_d10():
    # frozen from an exhaustive exact-rational k-scan (tests/exact.py)
    best, k, _ = exact.soundness(101, 10, Fraction(9, 10))
    assert k == 8
    assert float(best) == pytest.approx(0.056481701057706134, rel=1e-14)
    res = bounds.soundness(ProtocolConfig(101, 10, 0.9))
    assert res.argmax_k == 8
    assert res.soundness == pytest.approx(0.056481701057706134, rel=1e-10)
    assert res.soundness == pytest.approx(max(res.eigenvalue_table), rel=1e-15)


def test_p0_soundness_is_max_at_k_equal_s():
    res = bounds.soundness(ProtocolConfig(101, 0, 0.0))
    assert res.argmax_k == 101
    assert res.soundness == pytest.approx(2.0**-100, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(S=st.integers(2, 14), data=st.data(), p_num=st.integers(0, 20),
       family=st.sampled_from(["bell", "graph"]))
def test_soundness_matches_exact_rational(S, data, p_num, family):
    delta = data.draw(st.integers(0, S - 1))
    p = Fraction(p_num, 20)
    graph = None if family == "bell" else EDGE
    cfg = ProtocolConfig(S, delta, float(p), graph)
    best, _, table = exact.soundness(S, delta, p, family)
    res = bounds.soundness(cfg)
    assert rel_close(res.soundness, float(best), 1e-10)
    for k in range(S + 1):
        assert rel_close(res.eigenvalue_table[k], float(table[k]), 1e-10)
    assert res.completeness == pytest.approx(float(exact.completeness(S, delta, p)), abs=1e-12)


# -- completeness ---------------------------------------------------------------

def test_completeness_examples():
    assert bounds.completeness(ProtocolConfig(101)) == 1.0
    assert bounds.completeness(ProtocolConfig(3, 0, 0.5)) == pytest.approx(0.5625, abs=1e-15)
    for p in (0.0, 0.3, 0.77):
        assert bounds.completeness(ProtocolConfig(9, 8, p)) == pytest.approx(1, abs=1e-12)


def test_completeness_same_for_both_families():
    for p in (0.2, 0.9):
        assert bounds.completeness(ProtocolConfig(20, 4, p)) == \
            bounds.completeness(ProtocolConfig(20, 4, p, EDGE))


def test_completeness_and_soundness_monotone():
    S = 12
    ps = np.linspace(0, 1, 21)
    for p in ps:
        cs = [bounds.completeness(ProtocolConfig(S, d, p)) for d in range(S)]
        ss = [bounds.soundness(ProtocolConfig(S, d, p)).soundness for d in range(S)]
        assert all(b >= a - 1e-12 for a, b in zip(cs, cs[1:]))
        assert all(b >= a - 1e-12 for a, b in zip(ss, ss[1:]))
    for d in range(S):
        cs = [bounds.completeness(ProtocolConfig(S, d, p)) for p in ps]
        assert all(b >= a - 1e-12 for a, b in zip(cs, cs[1:]))


def test_eigenvalues_nonnegative():
    for p in (0, 0.5, 1):
        for d in (0, 3, 9):
            table = bounds.eigenvalue_table(ProtocolConfig(10, d, p))
            assert table[0] == 0 and np.all(table >= 0)


def test_large_s_finite():
    res = bounds.soundness(ProtocolConfig(10_000, 500, 0.99))
    assert np.isfinite(res.soundness) and 0 <= res.soundness <= 1
    assert np.isfinite(res.completeness) and 0 <= res.completeness <= 1
    assert np.all(np.isfinite(res.eigenvalue_table))


# -- Werner acceptance and fidelity -------------------------------------------------

def test_werner_pass_probability_forms():
    for v in (0, 0.4, 1):
        assert bounds.werner_pass_probability(v, 0, 1) == pytest.approx((1 + v) / 2)
    assert bounds.werner_pass_probability(0.8, 0.3, 0.9) == pytest.approx(
        (3 + 3 * 0.72 - 4 * 0.72 * 0.3) / 6)


def test_werner_ideal_acceptance_is_one():
    for d in range(5):
        assert bounds.werner_acceptance(ProtocolConfig(5, d), 1.0, 0.0) == 1.0


def test_werner_pinned_s101_d20():
    expected = float(exact.werner_acceptance(101, 20, Fraction(9, 10)))
    assert expected == pytest.approx(0.9999999791893923, rel=1e-15)
    got = bounds.werner_acceptance(ProtocolConfig(101, 20), 0.9, 0.0)
    assert got == pytest.approx(expected, rel=1e-12)


def test_werner_eta_equals_zero_is_noisy_completeness():
    # per-test pass (1+v)/2 is the completeness formula with v in place of p
    for v in (0.6, 0.95):
        assert bounds.werner_acceptance(ProtocolConfig(30, 3), v) == pytest.approx(
            bounds.completeness(ProtocolConfig(30, 3, v)), rel=1e-12)


def test_werner_rejects_graph_family():
    with pytest.raises(ContractViolation):
        bounds.werner_acceptance(ProtocolConfig(3, graph=EDGE), 0.9)


def test_fidelity_direct_substitution():
    assert bounds.fidelity_lower_bound(ProtocolConfig(101), 1.0) == pytest.approx(1 - 1 / 101, abs=1e-12)
    assert bounds.fidelity_lower_bound(ProtocolConfig(101), 1.0) == pytest.approx(0.990099, abs=1e-6)


def test_fidelity_tends_to_one():
    fs = [bounds.evaluate(ProtocolConfig(S), v=1.0).fidelity_lower_bound for S in (10, 100, 1000, 10_000)]
    assert all(b > a for a, b in zip(fs, fs[1:]))
    assert fs[-1] == pytest.approx(1 - 1e-4, abs=1e-12)


def test_werner_fidelity_pinned_s101_d5():
    # numerator term by term with 0**0 == 1, denominator by direct summation
    S, delta = 101, 5
    numer = max(
        Fraction(k, S) * sum(math.comb(S - k, x) * math.comb(k - 1, y) * Fraction(1) ** (S - k - x)
                             * Fraction(0) ** x * Fraction(1, 3) ** (k - 1 - y) * Fraction(2, 3) ** y
                             for x in range(delta + 1) for y in range(delta - x + 1)
                             if x <= S - k and y <= k - 1)
        for k in range(1, S + 1))
    v = Fraction(95, 100)
    denom = sum(math.comb(S - 1, x) * ((1 + v) / 2) ** (S - 1 - x) * ((1 - v) / 2) ** x
                for x in range(delta + 1))
    expected = float(1 - numer / denom)
    res = bounds.evaluate(ProtocolConfig(S, delta, 1.0), v=0.95)
    assert res.fidelity_lower_bound == pytest.approx(expected, rel=1e-12)
    assert res.fidelity_lower_bound == pytest.approx(0.9341491349814419, rel=1e-12)
    assert res.informative


def test_negative_fidelity_not_clamped():
    res = bounds.evaluate(ProtocolConfig(101, 0, 1.0), v=0.8)
    assert res.fidelity_lower_bound < 0
    assert not res.informative


def test_fidelity_zero_acceptance():
    with pytest.raises(UndefinedBoundError):
        bounds.fidelity_lower_bound(ProtocolConfig(5), 0.0)


# -- adversarial acceptance -----------------------------------------------------------

def _poisson_binomial_cdf(fail_probs, delta):
    dist = np.array([1.0])
    for q in fail_probs:
        dist = np.convolve(dist, [1 - q, q])
    return dist[: delta + 1].sum()


@pytest.mark.parametrize("family", ["bell", "graph"])
@pytest.mark.parametrize("S,delta,p,k", [(5, 0, 1.0, 1), (6, 2, 0.7, 2), (8, 3, 0.9, 8), (4, 1, 0.5, 0)])
def test_adversarial_acceptance_by_convolution(family, S, delta, p, k):
    cfg = ProtocolConfig(S, delta, p, None if family == "bell" else EDGE)
    a, b, c, d = cfg.test_rates()
    kinds = [1] * k + [0] * (S - k)
    total = 0.0
    for r in range(S):
        fails = [d if kinds[i] else b for i in range(S) if i != r]
        total += _poisson_binomial_cdf(fails, delta) / S
    assert bounds.adversarial_acceptance(cfg, k) == pytest.approx(total, abs=1e-12)


def test_config_validation():
    with pytest.raises(ContractViolation):
        ProtocolConfig(1)
    with pytest.raises(ContractViolation):
        ProtocolConfig(3, 3)
    with pytest.raises(ContractViolation):
        ProtocolConfig(3, 0, 1.2)
