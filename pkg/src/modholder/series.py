"""Direct summation of M_{k,s}(x) = sum r_n n^-s sin(2 pi n x) with a certified tail."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np
from mpmath import mp, mpf

from .contfrac import RealPoint
from .errors import NonConvergent, NotCertifiable
from .modforms import ModularForm, _to_mpf

FLAVORS = ("sine", "cosine")
HEURISTIC_SLACK = 0.1


@dataclass(frozen=True)
class SeriesSpec:
    """Which series to sum and how accurately.

    ``mode="certified"`` uses proven coefficient bounds.  ``mode="heuristic"``
    assumes |r_n| <= C n^((k-1)/2 + 0.1) for cusp forms with C read off the
    table; its error bounds are not guaranteed and results are flagged.
    """

    form: ModularForm
    s: float
    flavor: str = "sine"
    tol: float = 1e-12
    mode: str = "certified"

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.mode not in ("certified", "heuristic"):
            raise ValueError("mode must be 'certified' or 'heuristic'")
        check_convergence(self.form, self.s, self.mode)

    @property
    def certified(self) -> bool:
        return self.mode == "certified" or self.form.kind == "raw"


def check_convergence(form: ModularForm, s: float, mode: str = "certified") -> None:
    """Raise NonConvergent / NotCertifiable if (form, s) cannot be summed with a bound."""
    k = form.weight
    if form.kind == "raw":
        return
    if not form.is_cusp:
        if s <= k:
            raise NonConvergent(f"non-cusp form of weight {k} needs s > {k} (got {s})")
        return
    if s <= k / 2:
        raise NonConvergent(f"cusp form of weight {k} needs s > {k / 2} (got {s})")
    if mode == "heuristic":
        if s <= (k - 1) / 2 + HEURISTIC_SLACK + 1:
            raise NotCertifiable(f"heuristic envelope needs s > {(k + 1) / 2 + HEURISTIC_SLACK}")
        return
    _, e = form.envelope()
    if s <= e + 1:
        raise NotCertifiable(f"no explicit tail bound for s <= {e + 1} (got {s})")


def _heuristic_envelope(form: ModularForm) -> tuple[float, float]:
    e = (form.weight - 1) / 2 + HEURISTIC_SLACK
    table = form.with_length(256).coeffs
    C = 2 * max(abs(float(r)) / n ** e for n, r in enumerate(table) if n)
    return C, e


def tail_bound(form: ModularForm, s: float, N: int, mode: str = "certified") -> float:
    """Upper bound on sum_{n>N} |r_n| n^-s."""
    if form.kind == "raw":
        return 0.0 if N >= len(form.coeffs) - 1 else math.inf
    N = max(N, 1)
    if form.quasimodular:
        # sigma_1(n) <= n (1 + ln n); integral of t^{1-s}(1 + ln t) from N
        m = s - 2
        return 24 * N ** (-m) / m * (1 + math.log(N) + 1 / m)
    if mode == "heuristic" and form.is_cusp:
        C, e = _heuristic_envelope(form)
    else:
        C, e = form.envelope()
    p = s - e
    if p <= 1:
        return math.inf
    return C * N ** (1 - p) / (p - 1)


def terms_needed(form: ModularForm, s: float, tol: float, mode: str = "certified") -> int:
    if form.kind == "raw":
        return len(form.coeffs) - 1
    lo, hi = 1, 2
    while tail_bound(form, s, hi, mode) > tol:
        lo, hi = hi, hi * 2
        if hi > 1 << 40:
            raise NotCertifiable("tail bound does not reach the tolerance")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(form, s, mid, mode) > tol:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass(frozen=True)
class SeriesValue:
    value: mpf
    err_bound: float
    terms_used: int
    certified: bool = True


def periodize(x):
    """Fractional part in [0, 1)."""
    x = _as_mpf(x)
    return x - mpmath.floor(x)


def _as_mpf(x):
    if isinstance(x, RealPoint):
        return x.render(mp.prec)
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpf(x)


def eval_series(spec: SeriesSpec, x) -> SeriesValue:
    """Sum the series at x to within ``spec.tol``.

    Each phase n*x is reduced modulo 1 at (working precision + log2 N) bits
    before the sine is taken, so large n do not lose the argument.
    """
    form, s = spec.form, spec.s
    # tail takes 3/4 of the budget, rounding the rest
    N = terms_needed(form, s, 0.75 * spec.tol, spec.mode)
    prec = max(mp.prec, 64 + math.ceil(-math.log2(spec.tol)))
    guard = 32 + N.bit_length()
    with mp.workprec(prec + guard):
        xv = periodize(x)
        if spec.flavor == "sine" and (2 * xv) == mpmath.floor(2 * xv):
            return SeriesValue(mpf(0), 0.0, 0, spec.certified)
        form = form.with_length(N) if form.kind != "raw" else form
        trig = mpmath.sinpi if spec.flavor == "sine" else mpmath.cospi
        ms = mpf(s)
        acc = mpf(0)
        absacc = mpf(0)
        for n in range(1, N + 1):
            r = form.coeffs[n]
            if r == 0:
                continue
            phase = n * xv
            phase -= mpmath.floor(phase)
            term = _to_mpf(r) * mpf(n) ** (-ms) * trig(2 * phase)
            acc += term
            absacc += abs(term)
        tail = tail_bound(spec.form, s, N, spec.mode)
    rounding = float(absacc) * 2.0 ** (-prec)
    with mp.workprec(prec):
        value = +acc
    return SeriesValue(value, tail + rounding, N, spec.certified)


def series_coefficients(form: ModularForm, s: float, N: int) -> np.ndarray:
    """Float64 array of r_n n^-s for n = 0..N (entry 0 is 0)."""
    form = form.with_length(N) if form.kind != "raw" else form
    out = np.zeros(N + 1)
    n = np.arange(1, N + 1, dtype=float)
    r = np.array([float(form.coeffs[i]) if i < len(form.coeffs) else 0.0 for i in range(1, N + 1)])
    out[1:] = r * n ** (-float(s))
    return out


def series_json(spec: SeriesSpec, x, result: SeriesValue) -> dict:
    return {
        "x": str(x) if not isinstance(x, RealPoint) else x.descriptor(),
        "s": spec.s,
        "k": spec.form.weight,
        "form": spec.form.form_id,
        "flavor": spec.flavor,
        "value": mpmath.nstr(result.value, 30),
        "err_bound": result.err_bound,
        "terms_used": result.terms_used,
        "certified": result.certified,
    }
