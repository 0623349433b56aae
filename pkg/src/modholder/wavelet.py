"""The analyzing wavelet psi_s(x) = (x+i)^-(s+1) and the wavelet transform of M_{k,s}.

The closed form C(a,b) = Chat a^s (M(b+ia) - r_0) is the fast path.  An
independent quadrature of the defining integral is kept alongside as an
oracle, together with numerical checks of the Fourier transform, moments and
admissibility constant.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf
from scipy import integrate

from .errors import NonIntegrable, QuadratureBudgetExceeded
from .modforms import ModularForm, _to_mpf, eval_form
from .series import SeriesSpec, series_coefficients, tail_bound, terms_needed


# ---------------------------------------------------------------- constants

@lru_cache(maxsize=256)
def _c_tilde_cached(rho: str, prec: int):
    with mp.workprec(prec):
        r = mpf(rho)
        return 2 * mp.pi * mpmath.expjpi(r / 2) / mpmath.gamma(r)


def c_tilde(rho) -> mpc:
    """2 pi e^{i pi rho/2} / Gamma(rho)."""
    return +_c_tilde_cached(str(mpf(rho)), mp.prec)


@lru_cache(maxsize=256)
def _c_hat_cached(s: str, prec: int):
    with mp.workprec(prec):
        sv = mpf(s)
        return (2 * mp.pi) ** sv * mp.pi * mpmath.expjpi(sv / 2) / mpmath.gamma(sv + 1)


def c_hat(s) -> mpc:
    """The prefactor (2 pi)^s pi e^{i pi s/2} / Gamma(s+1) of the closed-form transform."""
    return +_c_hat_cached(str(mpf(s)), mp.prec)


@dataclass(frozen=True)
class WaveletParams:
    s: float

    def __post_init__(self):
        if self.s <= 1:
            raise ValueError("wavelet parameter s must exceed 1")

    @property
    def m_max(self) -> int:
        """Highest moment order that vanishes."""
        return math.ceil(self.s) - 1

    @property
    def admissibility(self) -> mpf:
        return admissibility(self.s)


# ---------------------------------------------------------------- the wavelet

def psi(s, x) -> mpc:
    """psi_s(x) = 1/(x+i)^(s+1), principal branch."""
    return mpmath.power(mpc(x, 1), -(mpf(s) + 1))


def psi_conj(s, u) -> mpc:
    """Complex conjugate of psi_s at real u, i.e. 1/(u-i)^(s+1)."""
    return mpmath.power(mpc(u, -1), -(mpf(s) + 1))


def psi_hat(s, xi) -> mpc:
    """Fourier transform int psi_s(x) e^{-i x xi} dx.  Zero for xi < 0."""
    xi = mpf(xi)
    if xi <= 0:
        return mpc(0)
    s = mpf(s)
    return mpmath.expjpi(-(s + 1)) * xi ** s * c_tilde(s + 1) * mpmath.exp(-xi)


def admissibility(s) -> mpf:
    """|c~(s+1)|^2 2^{-2s} Gamma(2s) = int_0^inf |psi_hat(xi)|^2 dxi / xi."""
    s = mpf(s)
    return abs(c_tilde(s + 1)) ** 2 * mpf(2) ** (-2 * s) * mpmath.gamma(2 * s)


def admissibility_numeric(s) -> mpf:
    return mpmath.quad(lambda t: abs(psi_hat(s, t)) ** 2 / t, [0, 1, 2 * s, mpmath.inf])


def _qawf(f, omega: float, weight: str) -> float:
    # QUADPACK warns when far-out cycles are already below epsabs; the result is still fine
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, 0, np.inf, weight=weight, wvar=omega, limlst=200, epsabs=1e-15)
    return val


def fourier_numeric(s: float, xi: float) -> complex:
    """Numerical int_R psi_s(x) e^{-i x xi} dx via oscillatory Fourier quadrature.

    The integral is folded onto [0, inf) into even and odd parts so that
    QUADPACK's Fourier-weight routine handles the slow |x|^-(s+1) decay.
    """
    p = -(s + 1.0)
    f = lambda x: complex(x, 1.0) ** p  # noqa: E731
    g = lambda x: complex(-x, 1.0) ** p  # noqa: E731
    w = abs(xi)
    sign = 1.0 if xi > 0 else -1.0
    even_re = _qawf(lambda x: (f(x) + g(x)).real, w, "cos")
    even_im = _qawf(lambda x: (f(x) + g(x)).imag, w, "cos")
    odd_re = _qawf(lambda x: (f(x) - g(x)).real, w, "sin")
    odd_im = _qawf(lambda x: (f(x) - g(x)).imag, w, "sin")
    even = complex(even_re, even_im)
    odd = complex(odd_re, odd_im)
    return even - 1j * sign * odd


def sine_integral_closed(rho, z) -> mpc:
    """pi e^{i pi (rho-1)/2} e^{iz} / Gamma(rho), the value of int sin t /(t-z)^rho dt."""
    rho = mpf(rho)
    z = mpc(z)
    return mp.pi * mpmath.expjpi((rho - 1) / 2) * mpmath.exp(1j * z) / mpmath.gamma(rho)


def sine_integral_numeric(rho: float, z: complex) -> complex:
    """Numerical int_R sin(t)/(t-z)^rho dt for Im z > 0."""
    z = complex(z)
    h = lambda t: (complex(t) - z) ** (-rho) - (complex(-t) - z) ** (-rho)  # noqa: E731
    re = _qawf(lambda t: h(t).real, 1.0, "sin")
    im = _qawf(lambda t: h(t).imag, 1.0, "sin")
    return complex(re, im)


def moments(s, m: int, X: float = 16.0, tail_terms: int = 120):
    """Numerical int_R x^m psi_s(x) dx; the exact value is 0 for m < s.

    The integral is truncated to [-X, X] and the two tails are added from the
    convergent binomial expansion of (1 +- i/x)^-(s+1), valid for X > 1.
    Returns the residual as a diagnostic.
    """
    s = mpf(s)
    if m < 0 or m >= s:
        raise NonIntegrable(f"moment of order {m} diverges for s = {s}")
    p = -(s + 1)
    X = mpf(X)
    nodes = [-X, -4, -1, 0, 1, 4, X]
    core = mpmath.quad(lambda x: x ** m * psi(s, x), nodes, maxdegree=10)
    right = mpc(0)
    left = mpc(0)
    for j in range(tail_terms):
        c = mpmath.binomial(p, j)
        w = X ** (m - s - j) / (s + j - m)
        right += c * mpc(0, 1) ** j * w
        left += c * mpc(0, -1) ** j * w
    left *= (-1) ** m * mpmath.expjpi(-(s + 1))
    return core + right + left


def psi_l1_norm(s: float) -> float:
    """int_R |psi_s| = sqrt(pi) Gamma(s/2) / Gamma((s+1)/2)."""
    return math.sqrt(math.pi) * math.gamma(s / 2) / math.gamma((s + 1) / 2)


# ---------------------------------------------------------------- transforms

@dataclass(frozen=True)
class WaveletCoefficient:
    a: float
    b: float
    value: complex
    method: str
    form_id: str
    s: float
    err: Optional[float] = None

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("scale a must be positive")


def _mpf_of(v):
    if hasattr(v, "render"):
        return v.render(mp.prec)
    return mpf(v)


def cwt_closed(form: ModularForm, s, a, b, eps=None) -> WaveletCoefficient:
    """Chat a^s (M(b+ia) - r_0)."""
    av, bv = _mpf_of(a), _mpf_of(b)
    if not av > 0:
        raise ValueError("scale a must be positive")
    m = eval_form(form, mpc(bv, av), eps=eps)
    value = c_hat(s) * av ** mpf(s) * (m - _to_mpf(form.r0))
    return WaveletCoefficient(float(av), float(bv), value, "closed_form", form.form_id, float(s))


def cwt_closed_log(form: ModularForm, s, a, b, eps=None):
    """(log|C|, M(b+ia) - r_0), with log|C| assembled in log space to avoid underflow."""
    av, bv = _mpf_of(a), _mpf_of(b)
    m = eval_form(form, mpc(bv, av), eps=eps) - _to_mpf(form.r0)
    logc = mpmath.log(abs(c_hat(s))) + mpf(s) * mpmath.log(av) + mpmath.log(abs(m))
    return logc, m


def _periodized_wavelet(s: float, a: float, b: float, t: np.ndarray, K: int) -> np.ndarray:
    G = np.zeros(len(t), dtype=complex)
    for m in range(-K, K + 1):
        G += ((t + m - b) / a - 1j) ** (-(s + 1.0))
    return G / a


def _quadrature_once(coeffs: np.ndarray, s: float, a: float, b: float, K: int):
    N = len(coeffs) - 1
    L = 1 << max(2 * N + 2, int(math.ceil(30.0 / a)), 16).bit_length()
    c = np.zeros(L)
    c[: N + 1] = coeffs
    # M_N(t_j) = sum c_n sin(2 pi n j/L) = Im(L * ifft(c))
    samples = (L * np.fft.ifft(c)).imag
    t = np.arange(L) / L
    G = _periodized_wavelet(s, a, b, t, K)
    return complex(np.sum(samples * G) / L), L


def cwt_quadrature(spec: Union[SeriesSpec, Sequence[SeriesSpec]], a, b, rtol: float = 1e-6,
                   terms: Optional[int] = None, K: Optional[int] = None,
                   max_terms: int = 1 << 18) -> WaveletCoefficient:
    """(1/a) int_R M_{k,s}(t) conj(psi_s)((t-b)/a) dt by periodized trapezoid quadrature.

    Because M_{k,s} has period 1, the integral equals int_0^1 M(t) G(t) dt
    with G the 1-periodized rescaled wavelet.  M is replaced by its N-term
    partial sum (sampled exactly on an FFT grid) and G by 2K+1 images, K
    starting at 8 and doubling while the dropped images dominate.  The error
    bound adds the series tail times ||psi||_1 and the dropped images.
    With L > 2N grid points the trapezoid rule is exact for the partial sum
    up to aliasing of G, which decays like exp(-pi a L) and is negligible for
    L >= 30/a.  If ``terms`` is None, N doubles until the bound meets rtol.
    A list of specs sharing s is transformed as the sum of their series.
    """
    specs = [spec] if isinstance(spec, SeriesSpec) else list(spec)
    s = float(specs[0].s)
    if any(float(sp.s) != s for sp in specs):
        raise ValueError("all series in a sum must share s")
    a, b = float(_mpf_of(a)), float(_mpf_of(b))
    if not a > 0:
        raise ValueError("scale a must be positive")
    l1 = psi_l1_norm(s)

    def build(N):
        tot = np.zeros(N + 1)
        tail = 0.0
        sup = 0.0
        for sp in specs:
            co = series_coefficients(sp.form, s, N)
            tot += co
            tail += tail_bound(sp.form, s, N, sp.mode)
            sup += float(np.abs(co).sum()) + tail_bound(sp.form, s, 1, sp.mode)
        return tot, tail, sup

    def evaluate(N):
        co, tail, sup = build(N)
        k_img = K or 8
        while True:
            val, L = _quadrature_once(co, s, a, b, k_img)
            # images with |m| > K: sum_j>=K j^-(s+1) <= (K-1)^-s / s on each side
            image_tail = sup * 2 * a ** s * (k_img - 1) ** (-s) / s
            if K is not None or image_tail <= 0.25 * rtol * abs(val) or k_img >= 512:
                break
            k_img *= 2
        # FFT and dot-product rounding grow like log2(L), not L
        rounding = 8 * np.finfo(float).eps * math.log2(L) * sup * l1
        return val, tail * l1 + image_tail + rounding

    if terms is not None:
        val, err = evaluate(terms)
    else:
        N = max(64, *(min(terms_needed(sp.form, s, 1e-3, sp.mode), 4096) for sp in specs))
        prev = math.inf
        while True:
            val, err = evaluate(N)
            if err <= rtol * abs(val):
                break
            N *= 2
            if N > max_terms or err >= prev:
                raise QuadratureBudgetExceeded(
                    f"error bound {err:.3g} above rtol*|C| = {rtol * abs(val):.3g} at N = {N // 2}")
            prev = err
    form_id = "+".join(sp.form.form_id for sp in specs)
    return WaveletCoefficient(a, b, complex(val), "quadrature", form_id, s, float(err))


def coefficients_csv(coeffs: Sequence[WaveletCoefficient]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "log10_a", "re", "im", "abs", "method"])
    for c in coeffs:
        v = complex(c.value)
        w.writerow([repr(c.a), repr(c.b), repr(math.log10(c.a)), repr(v.real), repr(v.imag),
                    repr(abs(v)), c.method])
    return buf.getvalue()
