import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from mpmath import mp, mpc, mpf

from modholder import modforms as mf
from modholder.errors import TailBoundFailure


def _sigma_by_enumeration(e, n):
    return sum(d ** e for d in range(1, n + 1) if n % d == 0)


def test_sigma_table_small_values():
    t = mf.sigma_table(3, 6)
    assert t[1] == 1
    assert t[2] == 9 == _sigma_by_enumeration(3, 2)
    assert t[6] == 252 == _sigma_by_enumeration(3, 6)


@pytest.mark.parametrize("e", [1, 3, 5, 11])
def test_sigma_table_matches_sympy(e):
    t = mf.sigma_table(e, 300)
    assert all(t[n] == sympy.divisor_sigma(n, e) for n in range(1, 301))


@pytest.mark.parametrize("k,expected", [(2, Fraction(1, 6)), (4, Fraction(-1, 30)), (12, Fraction(-691, 2730))])
def test_bernoulli_small(k, expected):
    assert mf.bernoulli(k) == expected


def test_bernoulli_matches_sympy():
    for k in range(2, 41, 2):
        b = sympy.bernoulli(k)
        assert mf.bernoulli(k) == Fraction(int(b.p), int(b.q))


def test_eisenstein_coefficients():
    e4 = mf.make_eisenstein(4, 10)
    assert list(e4.coeffs[:4]) == [1, 240, 2160, 6720]
    assert all(e4.coeffs[n] == 240 * _sigma_by_enumeration(3, n) for n in range(1, 11))
    assert mf.make_eisenstein(6, 4).coeffs[1] == -504
    for k in (2, 4, 6, 8, 10, 12):
        assert mf.make_eisenstein(k, 4).r0 == 1
    assert mf.eisenstein_multiplier(4) == 240


def test_delta_coefficients_two_paths():
    d = mf.make_delta(200)
    assert d.coeffs[0] == 0 and d.is_cusp
    assert d.coeffs[1] == 1 and d.coeffs[2] == -24
    assert list(d.coeffs[1:201]) == mf.tau_eta_product(200)[1:201]
    # Ramanujan's tau(3) and tau(4), values that are also produced by the eta product above.
    assert d.coeffs[3] == 252 and d.coeffs[4] == -1472


def test_delta_envelope_dominates():
    C, e = mf.make_delta(500).envelope()
    d = mf.make_delta(500)
    assert all(abs(d.coeffs[n]) <= C * n ** e for n in range(1, 501))


def test_eisenstein_envelope_dominates():
    for k in (2, 4, 6):
        f = mf.make_eisenstein(k, 400)
        C, e = f.envelope()
        assert all(abs(float(f.coeffs[n])) <= C * n ** e for n in range(1, 401))


def test_parse_form():
    assert mf.parse_form("eisenstein:4").form_id == "eisenstein:4"
    assert mf.parse_form("delta").form_id == "delta"
    assert mf.parse_form("E2").quasimodular


def test_unimodular_matrix():
    with pytest.raises(ValueError):
        mf.UnimodularMatrix(1, 1, 1, 1)
    rng = np.random.default_rng(3)
    for _ in range(50):
        g = mf.random_unimodular(rng)
        assert g.a * g.d - g.b * g.c == 1
        assert abs(g.c) <= 20 and abs(g.d) <= 20


def test_reduction_already_reduced():
    red = mf.reduce_to_fundamental_domain(mpc("0.3", 2))
    assert red.gamma == mf.UnimodularMatrix.identity()
    assert red.z == mpc("0.3", 2)


def test_reduction_translation():
    red = mf.reduce_to_fundamental_domain(mpc("5.3", 2))
    assert red.gamma == mf.UnimodularMatrix(1, -5, 0, 1)
    assert abs(red.z - mpc("0.3", 2)) < 1e-14


def test_reduction_near_real_axis_and_cross_evaluation():
    mp.prec = 256
    z = mpc("0.001", "0.001")
    red = mf.reduce_to_fundamental_domain(z)
    tol = mpf(2) ** -40
    assert red.z.imag >= mpmath.sqrt(3) / 2 - tol
    assert abs(red.z.real) <= mpf(1) / 2 + tol and abs(red.z) >= 1 - tol
    e4 = mf.make_eisenstein(4)
    direct = mf.eval_form(e4, z, reduce=False)
    reduced = mf.q_series(e4, red.z)[0] / red.gamma.j(z) ** 4
    assert abs(reduced - direct) / abs(direct) < mpf(10) ** -20


def test_e4_high_in_the_half_plane():
    mp.prec = 200
    v = mf.eval_form(mf.make_eisenstein(4), mpc(0, 10))
    two_terms = 1 + 240 * mpmath.exp(-20 * mp.pi)
    assert abs(v - two_terms) < mpf(10) ** -25
    assert abs(v - 1) < 1e-25 + 241 * math.exp(-20 * math.pi)


def test_e4_invariance_random_gamma():
    mp.prec = 256
    rng = np.random.default_rng(11)
    e4 = mf.make_eisenstein(4)
    for _ in range(10):
        g = mf.random_unimodular(rng)
        z = mpc(rng.uniform(-0.5, 0.5), rng.uniform(0.3, 2))
        lhs = mf.eval_form(e4, z, reduce=False)
        rhs = mf.eval_form(e4, g.act(z)) / g.j(z) ** 4
        assert abs(lhs - rhs) / abs(lhs) < mpf(10) ** -20


def test_delta_two_paths_at_i():
    mp.prec = 128
    z = mpc(0, 1)
    e4 = mf.eval_form(mf.make_eisenstein(4), z)
    e6 = mf.eval_form(mf.make_eisenstein(6), z)
    delta = mf.eval_form(mf.make_delta(), z)
    lhs = e4 ** 3 - e6 ** 2
    assert abs(lhs - 1728 * delta) / abs(lhs) < 1e-15


def test_e2_high_in_the_half_plane():
    mp.prec = 200
    v = mf.eval_E2(mpc(0, 10))
    assert abs(v - (1 - 24 * mpmath.exp(-20 * mp.pi))) < mpf(10) ** -25


def test_e2_identity_gamma_has_no_correction():
    assert mf.e2_correction(mf.UnimodularMatrix.identity(), mpc(0.2, 1)) == 0
    assert mf.e2_correction(mf.UnimodularMatrix(1, 7, 0, 1), mpc(0.2, 1)) == 0
    z = mpc("0.2", "1.5")
    assert abs(mf.eval_E2(z) - mf.q_series(mf.make_eisenstein(2), z)[0]) < 1e-14


def test_e2_near_real_axis_against_float_brute_force():
    """Numpy divisor sieve and a float sum of 10^6 terms, independent of all package code."""
    N = 10 ** 6
    sigma = np.zeros(N + 1)
    for d in range(1, N + 1):
        sigma[d::d] += d
    z = 0.3 + 0.001j
    n = np.arange(N + 1)
    q = np.exp(2j * np.pi * n * z)
    oracle = 1 - 24 * math.fsum((sigma[1:] * q[1:]).real) - 24j * math.fsum((sigma[1:] * q[1:]).imag)
    mp.prec = 128
    v = complex(mf.eval_E2(mpc("0.3", "0.001")))
    assert abs(v - oracle) / abs(oracle) < 1e-8


def test_raw_form_cannot_grow():
    raw = mf.make_raw([0, 1, 2], 4)
    with pytest.raises(TailBoundFailure):
        raw.with_length(10)


def test_eval_is_deterministic():
    z = mpc("0.123", "0.0456")
    f = mf.make_delta()
    assert mf.eval_form(f, z) == mf.eval_form(f, z)


def test_log_abs_matches_value():
    mp.prec = 128
    z = mpc("0.3", "0.02")
    f = mf.make_eisenstein(4)
    v = mf.eval_form(f, z)
    assert abs(mf.eval_form_log_abs(f, z) - mpmath.log(abs(v))) < 1e-25
    assert abs(mf.eval_form_log_abs(f, z, subtract_r0=True) - mpmath.log(abs(v - 1))) < 1e-20


def test_coefficients_export():
    f = mf.make_eisenstein(4, 5)
    js = mf.coefficients_json(f)
    assert js["weight"] == 4 and js["is_cusp"] is False
    assert js["coefficients"][:3] == ["1", "240", "2160"]
    csv = mf.coefficients_csv(f)
    assert "240" in csv


def test_claim_bounds_for_delta_scaled_by_im_power():
    """|Delta(z)| Im(z)^7 stays bounded on a grid reaching Im z = 1e-4."""
    mp.prec = 128
    d = mf.make_delta()
    vals = []
    for y in (1e-4, 1e-3, 1e-2, 0.1, 1, 10):
        for x in (0.0, 0.1234, 0.5, math.sqrt(2) - 1):
            vals.append(float(abs(mf.eval_form(d, mpc(x, y))) * mpf(y) ** 7))
    assert max(vals) < 1.0
