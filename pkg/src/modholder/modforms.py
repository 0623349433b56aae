"""q-expansions of level-one modular forms and their evaluation on the upper half-plane.

Coefficients are exact (``Fraction`` for Eisenstein series, ``int`` for the
normalized discriminant).  Evaluation reduces the argument to the standard
fundamental domain, where |q| <= exp(-pi*sqrt(3)), sums a short q-series and
undoes the reduction with the automorphy factor (cz+d)^k.  For E_2 the extra
quasimodular term -(6/(i*pi)) * c/(cz+d) is added.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf

from .errors import PrecisionExhausted, TailBoundFailure

DELTA_NORMALIZATION = "Delta(z) / (2*pi)^12 = sum tau(n) q^n"
COEFF_BUDGET = 200_000


# ---------------------------------------------------------------------------
# arithmetic


def sigma_table(k_minus_1: int, N: int) -> list[int]:
    """sigma_{k-1}(n) for n = 0..N (entry 0 is 0), by a divisor sieve."""
    if N < 1:
        raise ValueError("N must be >= 1")
    sig = [0] * (N + 1)
    for d in range(1, N + 1):
        dp = d ** k_minus_1
        for m in range(d, N + 1, d):
            sig[m] += dp
    return sig


@lru_cache(maxsize=None)
def bernoulli(k: int) -> Fraction:
    """B_k from sum_{j<=m} C(m+1, j) B_j = 0 (so B_1 = -1/2)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    B = [Fraction(1)]
    for m in range(1, k + 1):
        acc = sum(math.comb(m + 1, j) * B[j] for j in range(m))
        B.append(-acc / (m + 1))
    return B[k]


def eisenstein_multiplier(k: int) -> Fraction:
    """-2k/B_k: 240 for k=4, -504 for k=6, -24 for k=2."""
    return Fraction(-2 * k) / bernoulli(k)


def series_mul(f: Sequence[int], g: Sequence[int], N: int) -> list:
    """Product of two exact power series truncated after q^N."""
    out = np.convolve(np.array(f[: N + 1], dtype=object), np.array(g[: N + 1], dtype=object))
    return list(out[: N + 1])


@lru_cache(maxsize=16)
def _eisenstein_coeffs(k: int, N: int) -> tuple:
    m = eisenstein_multiplier(k)
    sig = sigma_table(k - 1, N)
    return (Fraction(1),) + tuple(m * s for s in sig[1:])


@lru_cache(maxsize=16)
def tau_table(N: int) -> tuple[int, ...]:
    """tau(0..N) from (E_4^3 - E_6^2) / 1728 in exact integer arithmetic."""
    e4 = [1] + [240 * s for s in sigma_table(3, N)[1:]]
    e6 = [1] + [-504 * s for s in sigma_table(5, N)[1:]]
    cube = series_mul(series_mul(e4, e4, N), e4, N)
    square = series_mul(e6, e6, N)
    out = []
    for c, d in zip(cube, square):
        v, r = divmod(c - d, 1728)
        assert r == 0
        out.append(int(v))
    return tuple(out)


def tau_eta_product(N: int) -> list[int]:
    """tau(0..N) from q * prod (1 - q^n)^24; independent of ``tau_table``."""
    series = [0] * (N + 1)
    series[0] = 1
    for n in range(1, N + 1):
        for _ in range(24):
            # multiply by (1 - q^n) in place, high degrees first
            for m in range(N, n - 1, -1):
                series[m] -= series[m - n]
    return [0] + series[:N]


# ---------------------------------------------------------------------------
# forms


@dataclass(frozen=True)
class ModularForm:
    """A q-expansion sum r_n e^{2 pi i n z}.

    ``kind`` is ``eisenstein`` (weight ``k``), ``delta`` or ``raw``.  Raw forms
    are finite coefficient tables; they are treated as trigonometric
    polynomials and cannot be evaluated through modular reduction.
    """

    kind: str
    weight: int
    coeffs: tuple
    normalization: str = ""

    @property
    def is_cusp(self) -> bool:
        return self.coeffs[0] == 0

    @property
    def r0(self):
        return self.coeffs[0]

    @property
    def quasimodular(self) -> bool:
        return self.kind == "eisenstein" and self.weight == 2

    @property
    def form_id(self) -> str:
        if self.kind == "eisenstein":
            return "e2" if self.weight == 2 else f"eisenstein:{self.weight}"
        return self.kind

    def __len__(self):
        return len(self.coeffs)

    def with_length(self, N: int) -> "ModularForm":
        """The same form with coefficients r_0..r_N (exact kinds only)."""
        if N + 1 <= len(self.coeffs):
            return self
        if self.kind == "eisenstein":
            return make_eisenstein(self.weight, _round_up(N))
        if self.kind == "delta":
            return make_delta(_round_up(N))
        raise TailBoundFailure(f"raw form has only {len(self.coeffs)} coefficients")

    def envelope(self) -> tuple[float, int]:
        """(C, e) with |r_n| <= C * n^e for every n >= 1."""
        k = self.weight
        if self.kind == "eisenstein":
            m = abs(float(eisenstein_multiplier(k)))
            if k == 2:
                return m, 2  # sigma_1(n) <= n * H_n <= n^2
            return m * float(mpmath.zeta(k - 1)), k - 1  # sigma_{k-1}(n) <= zeta(k-1) n^{k-1}
        if self.kind == "delta":
            return 2.0, 6  # |tau(n)| <= d(n) n^{11/2} and d(n) <= 2 sqrt(n)
        e = max(k - 1, 0)
        ratios = [abs(float(r)) / n ** e for n, r in enumerate(self.coeffs) if n]
        return 2.0 * max(ratios, default=0.0), e

    def to_rows(self) -> list[dict]:
        return [{"n": n, "r_n": _exact_str(r)} for n, r in enumerate(self.coeffs)]


def _round_up(N: int) -> int:
    return 1 << max(5, (N - 1).bit_length())


def _exact_str(r) -> str:
    r = Fraction(r)
    return str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"


def make_eisenstein(k: int, N: int = 64) -> ModularForm:
    """E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n, coefficients exact up to q^N."""
    if k < 2 or k % 2:
        raise ValueError("Eisenstein weight must be even and >= 2")
    note = "constant term 1" + ("; quasimodular" if k == 2 else "")
    return ModularForm("eisenstein", k, _eisenstein_coeffs(k, N), note)


def make_delta(N: int = 64) -> ModularForm:
    """The normalized discriminant sum tau(n) q^n (the (2 pi)^12 factor is dropped)."""
    return ModularForm("delta", 12, tau_table(N), DELTA_NORMALIZATION)


def make_raw(coeffs: Sequence, weight: int, label: str = "raw") -> ModularForm:
    return ModularForm("raw", weight, tuple(Fraction(c) for c in coeffs), label)


def parse_form(spec: str, N: int = 64) -> ModularForm:
    """``eisenstein:k``, ``e2`` or ``delta``."""
    spec = spec.strip().lower()
    if spec == "delta":
        return make_delta(N)
    if spec == "e2":
        return make_eisenstein(2, N)
    head, _, body = spec.partition(":")
    if head == "eisenstein" and body:
        return make_eisenstein(int(body), N)
    raise ValueError(f"unknown form spec {spec!r}")


def coefficients_csv(form: ModularForm) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "r_n", "kind", "weight", "normalization"])
    for n, r in enumerate(form.coeffs):
        w.writerow([n, _exact_str(r), form.kind, form.weight, form.normalization])
    return buf.getvalue()


def coefficients_json(form: ModularForm) -> dict:
    return {
        "kind": form.kind,
        "weight": form.weight,
        "is_cusp": form.is_cusp,
        "normalization": form.normalization,
        "coefficients": [_exact_str(r) for r in form.coeffs],
    }


# ---------------------------------------------------------------------------
# the modular group


@dataclass(frozen=True)
class UnimodularMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("determinant must be 1")

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        return UnimodularMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def act(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def j(self, z):
        """Automorphy factor cz + d."""
        return self.c * z + self.d

    @classmethod
    def identity(cls):
        return cls(1, 0, 0, 1)


def random_unimodular(rng, bound: int = 20) -> UnimodularMatrix:
    """Random element of SL_2(Z) with |c|, |d| <= bound and gcd(c, d) = 1."""
    while True:
        c = int(rng.integers(-bound, bound + 1))
        d = int(rng.integers(-bound, bound + 1))
        if (c, d) != (0, 0) and math.gcd(c, d) == 1:
            break
    if c == 0:
        return UnimodularMatrix(d, int(rng.integers(-bound, bound + 1)), 0, d)
    # a d - b c = 1 via the extended Euclidean algorithm
    g, x, y = _ext_gcd(d, -c)  # x d + y (-c) = 1
    a, b = x, y
    t = int(rng.integers(-3, 4))
    return UnimodularMatrix(a + t * c, b + t * d, c, d)


def _ext_gcd(u: int, v: int):
    if v == 0:
        return (u, 1, 0) if u >= 0 else (-u, -1, 0)
    g, x, y = _ext_gcd(v, u % v)
    return g, y, x - (u // v) * y


@dataclass(frozen=True)
class Reduction:
    z: mpc
    gamma: UnimodularMatrix
    steps: int


def upper_point(re, im, prec: Optional[int] = None) -> mpc:
    with mp.workprec(prec or mp.prec):
        z = mpc(re, im)
    if not z.imag > 0:
        raise ValueError("point must lie in the upper half-plane")
    return z


def reduce_to_fundamental_domain(z, max_steps: int = 10_000) -> Reduction:
    """Find gamma in SL_2(Z) with gamma*z in the standard fundamental domain.

    The matrix is built from T^n / S steps on a working copy; the image point
    is then recomputed from the original ``z`` in one step, so rounding does
    not accumulate across the walk.  Needs ``mp.prec`` large enough to resolve
    Im z against c^2 |z|^2.
    """
    z = mpc(z)
    if not z.imag > 0:
        raise PrecisionExhausted("Im z is not positive at working precision")
    g = UnimodularMatrix.identity()
    w = z
    tol = mpf(2) ** -40
    half = mpf(1) / 2
    for step in range(max_steps):
        n = int(mpmath.nint(w.real))
        if n:
            g = UnimodularMatrix(1, -n, 0, 1) @ g
            w = g.act(z) if abs(n) > 1 << 20 else w - n
        if abs(w) < 1 - tol:
            g = UnimodularMatrix(0, -1, 1, 0) @ g
            w = g.act(z)
            if not w.imag > 0:
                raise PrecisionExhausted("Im z underflowed during reduction")
            continue
        w = g.act(z)
        if abs(w.real) <= half + tol and abs(w) >= 1 - tol:
            return Reduction(w, g, step)
    raise PrecisionExhausted("reduction did not terminate")


# ---------------------------------------------------------------------------
# evaluation


def _tail_bound(C: float, e: int, y: mpf, N: int) -> mpf:
    """Bound on sum_{n>N} C n^e y^n for 0 < y < 1."""
    n1 = N + 1
    ratio = (mpf(n1 + 1) / n1) ** e * y
    if ratio >= 1:
        return mpf("inf")
    return C * mpf(n1) ** e * y ** n1 / (1 - ratio)


def q_series(form: ModularForm, z, eps=None, budget: int = COEFF_BUDGET):
    """Direct sum r_n q^n at z, truncated where the envelope tail drops below eps*scale.

    ``eps`` is relative to max(|r_0|, |partial sum|).  Returns (value, N, tail_bound).
    """
    z = mpc(z)
    if eps is None:
        eps = mpf(2) ** (-mp.prec + 4)
    y_abs = mpmath.exp(-2 * mp.pi * z.imag)
    if form.kind == "raw":
        N = len(form.coeffs) - 1
        tail = mpf(0)
    else:
        C, e = form.envelope()
        # geometric-growth estimate for the first N, then verify
        N = max(4, int((-mpmath.log(eps) + e * 10) / (2 * mp.pi * z.imag)) + 8)
        scale = max(abs(_to_mpf(form.r0)), mpf(C) * y_abs) if not form.is_cusp else mpf(C) * y_abs
        while True:
            tail = _tail_bound(C, e, y_abs, N)
            if tail <= eps * scale or N > budget:
                break
            N = int(N * 1.5) + 1
        if N > budget:
            raise TailBoundFailure(f"needs more than {budget} coefficients")
        form = form.with_length(N)
    q = mpmath.expjpi(2 * z)
    with mp.extraprec(16 + N.bit_length()):
        acc = mpc(0)
        for r in reversed(form.coeffs[: N + 1]):
            acc = acc * q + _to_mpf(r)
    return +acc, N, tail


def _to_mpf(r):
    if isinstance(r, Fraction):
        return mpf(r.numerator) / r.denominator if r.denominator != 1 else mpf(r.numerator)
    return mpf(r)


def e2_correction(gamma: UnimodularMatrix, z) -> mpc:
    """The quasimodular term -(6/(i*pi)) * c / (cz + d)."""
    if gamma.c == 0:
        return mpc(0)
    return -6 / (mpc(0, 1) * mp.pi) * gamma.c / gamma.j(z)


def eval_form(form: ModularForm, z, eps=None, reduce: bool = True) -> mpc:
    """Value of the q-expansion at z (normalization as stored in the form).

    With ``reduce`` the point is first mapped into the fundamental domain and
    the automorphy factor is applied; ``reduce=False`` sums the series at z
    directly, which is only sensible for moderate Im z.
    """
    z = mpc(z)
    if not reduce or form.kind == "raw":
        return q_series(form, z, eps)[0]
    if form.quasimodular:
        return eval_E2(z, eps)
    red = reduce_to_fundamental_domain(z)
    value, _, _ = q_series(form, red.z, eps)
    if red.gamma.c == 0:
        return value
    return value / red.gamma.j(z) ** form.weight


def eval_E2(z, eps=None) -> mpc:
    """E_2 via reduction: E_2(z) = E_2(gz)/(cz+d)^2 - (6/(i pi)) c/(cz+d)."""
    z = mpc(z)
    red = reduce_to_fundamental_domain(z)
    form = make_eisenstein(2)
    value, _, _ = q_series(form, red.z, eps)
    if red.gamma.c == 0:
        return value
    return value / red.gamma.j(z) ** 2 + e2_correction(red.gamma, z)


def eval_form_log_abs(form: ModularForm, z, subtract_r0: bool = False, eps=None) -> mpf:
    """log|f(z) - r_0| (or log|f(z)|) evaluated without forming huge powers explicitly."""
    z = mpc(z)
    if form.quasimodular:
        v = eval_E2(z, eps)
        if subtract_r0:
            v -= 1
        return mpmath.log(abs(v))
    red = reduce_to_fundamental_domain(z)
    value, _, _ = q_series(form, red.z, eps)
    j = red.gamma.j(z)
    if subtract_r0 and form.r0 != 0:
        full = value / j ** form.weight if red.gamma.c else value
        return mpmath.log(abs(full - _to_mpf(form.r0)))
    return mpmath.log(abs(value)) - form.weight * mpmath.log(abs(j))
