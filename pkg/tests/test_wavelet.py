import math

import mpmath
import pytest
from mpmath import mp, mpc, mpf

from modholder import contfrac as cf
from modholder import modforms as mf
from modholder import wavelet as wv
from modholder.errors import NonIntegrable
from modholder.series import SeriesSpec

E4 = mf.make_eisenstein(4)
DELTA = mf.make_delta()


def rel(a, b):
    return abs(a - b) / abs(b)


def test_psi_exact_powers():
    assert abs(wv.psi(1, 0) - (-1)) < 1e-15
    assert abs(wv.psi(3, 0) - 1) < 1e-15
    assert abs(wv.psi(7, 1) - mpf(1) / 16) < 1e-15


def test_psi_principal_branch_non_integer():
    z = mpc(-2, 1)
    expected = mpmath.exp(-3.5 * (mpmath.log(abs(z)) + 1j * mpmath.arg(z)))
    assert abs(wv.psi(2.5, -2) - expected) < 1e-14
    assert abs(wv.psi_conj(2.5, -2) - mpmath.conj(expected)) < 1e-14


def test_psi_hat_vanishes_on_negative_axis():
    for s in (1.5, 2, 7, 11):
        assert wv.psi_hat(s, -1) == 0


def test_psi_hat_magnitude_at_one():
    assert abs(abs(wv.psi_hat(7, 1)) - 2 * math.pi * math.exp(-1) / 5040) < 1e-16


@pytest.mark.parametrize("s,xi", [(5, 2.0), (7, 1.0), (2.5, 0.5), (5, -2.0)])
def test_psi_hat_against_numeric_fourier_integral(s, xi):
    num = wv.fourier_numeric(s, xi)
    closed = complex(wv.psi_hat(s, xi))
    if xi < 0:
        assert abs(num) < 1e-8
    else:
        assert rel(num, closed) < 1e-6


def test_admissibility_closed_form_s2():
    assert abs(wv.admissibility(2) - mp.pi ** 2 * 6 / 16) < 1e-14


@pytest.mark.parametrize("s", [1.5, 2, 7, 11])
def test_admissibility_positive_and_numeric(s):
    v = wv.admissibility(s)
    assert v > 0
    assert rel(wv.admissibility_numeric(s), v) < 1e-6


@pytest.mark.parametrize("s,m", [(7, 0), (7, 6), (2.5, 2), (11, 10), (3, 1)])
def test_moments_vanish(s, m):
    assert abs(wv.moments(s, m)) < 1e-6


def test_nonintegrable_moment():
    with pytest.raises(NonIntegrable):
        wv.moments(2.5, 3)
    with pytest.raises(NonIntegrable):
        wv.moments(7, 7)


def test_wavelet_params():
    assert wv.WaveletParams(7).m_max == 6
    assert wv.WaveletParams(2.5).m_max == 2
    with pytest.raises(ValueError):
        wv.WaveletParams(1)


def test_l1_norm_against_quadrature():
    num = mpmath.quad(lambda x: abs(wv.psi(3.5, x)), [-mpmath.inf, 0, mpmath.inf])
    assert rel(wv.psi_l1_norm(3.5), float(num)) < 1e-10


@pytest.mark.parametrize("rho", [2, 3.5])
@pytest.mark.parametrize("z", [1j, 1 + 2j])
def test_sine_integral(rho, z):
    assert rel(wv.sine_integral_numeric(rho, z), complex(wv.sine_integral_closed(rho, z))) < 1e-5


def test_c_hat_magnitude():
    assert rel(abs(wv.c_hat(7)), (2 * mp.pi) ** 7 * mp.pi / 5040) < 1e-14


def test_cwt_closed_delta():
    c = wv.cwt_closed(DELTA, 11, 0.5, 0)
    d = mf.eval_form(DELTA, mpc(0, 0.5))
    assert abs(d) > 0
    assert rel(c.value, wv.c_hat(11) * mpf(0.5) ** 11 * d) < 1e-14


def test_cwt_closed_e4_large_scale_trend():
    vals = [abs(wv.cwt_closed(E4, 7, a, 0.3).value) / a ** 7 for a in (0.5, 0.7, 0.9)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_cwt_scaling_identity():
    for a, b in ((0.05, 0.1), (0.3, 0.77), (0.01, 0.5)):
        c = wv.cwt_closed(E4, 7, a, b)
        lhs = abs(c.value) * mpf(a) ** -7 / abs(wv.c_hat(7))
        rhs = abs(mf.eval_form(E4, mpc(b, a)) - 1)
        assert rel(lhs, rhs) < 1e-12


def test_cwt_closed_log_matches():
    logc, _ = wv.cwt_closed_log(E4, 7, 0.02, 0.3)
    assert abs(logc - mpmath.log(abs(wv.cwt_closed(E4, 7, 0.02, 0.3).value))) < 1e-12


def test_quadrature_e4():
    mp.prec = 64
    sp = SeriesSpec(E4, 7)
    q = wv.cwt_quadrature(sp, 0.2, 0.3)
    c = wv.cwt_closed(E4, 7, 0.2, 0.3)
    assert rel(q.value, complex(c.value)) < 1e-4
    assert q.err <= 1e-6 * abs(q.value)


def test_quadrature_delta():
    b = cf.sqrt(2).render(64) - 1
    q = wv.cwt_quadrature(SeriesSpec(DELTA, 11), 0.3, b)
    c = wv.cwt_closed(DELTA, 11, 0.3, b)
    assert rel(q.value, complex(c.value)) < 1e-4


def test_quadrature_linearity():
    e6 = mf.make_eisenstein(6)
    s1, s2 = SeriesSpec(E4, 7), SeriesSpec(e6, 7)
    both = wv.cwt_quadrature([s1, s2], 0.25, 0.1, terms=512, K=16).value
    parts = wv.cwt_quadrature(s1, 0.25, 0.1, terms=512, K=16).value + \
        wv.cwt_quadrature(s2, 0.25, 0.1, terms=512, K=16).value
    assert rel(both, parts) < 1e-10


def test_quadrature_sum_rejects_mixed_s():
    with pytest.raises(ValueError):
        wv.cwt_quadrature([SeriesSpec(E4, 7), SeriesSpec(E4, 8)], 0.2, 0.1)


def test_coefficient_requires_positive_scale():
    with pytest.raises(ValueError):
        wv.cwt_closed(E4, 7, 0, 0.1)


def test_csv_export():
    text = wv.coefficients_csv([wv.cwt_closed(E4, 7, 0.2, 0.3)])
    head, row = text.strip().splitlines()
    assert head == "a,b,log10_a,re,im,abs,method"
    assert row.endswith("closed_form")
