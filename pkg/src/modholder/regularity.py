"""Pointwise Hölder exponents of M_{k,s} from the decay of its wavelet transform.

The transform is sampled on half-rings around x indexed by the convergents
of x.  The exponent is read off as the log-log slope at the apex points
(b = x, a = D |x - p_n/q_n|).  Predictions from the continued-fraction
exponents mu and nu are attached to every report with their hypotheses
evaluated, so a measurement can be compared with what should hold.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf
from scipy import stats

from .contfrac import DiophantineProfile, RealPoint, residual, surd_period
from .errors import BisectionFailure, DegenerateFit, RingDegenerate
from .modforms import ModularForm, _to_mpf, eval_form
from .wavelet import WaveletCoefficient, c_hat

DEFAULT_D = 3.0
MU_TWO_TOL = 0.05

CONSTANT_IO = "infinitely_often_constant"
GE7_IO = "infinitely_often_ge7"
QUOTIENT_CONDITIONS = ("none", CONSTANT_IO, GE7_IO)


# ---------------------------------------------------------------- sampling

def _scale_bits(a) -> int:
    """Working precision for a transform evaluated at scale a."""
    return max(mp.prec, 2 * int(-mpmath.log(a, 2)) + 128)


@dataclass(frozen=True)
class RingSample:
    n: int
    a: mpf
    b: mpf
    r_inner: mpf
    r_outer: mpf
    apex: bool
    offset: mpf = mpf(0)  # b - x
    coeff: Optional[WaveletCoefficient] = None
    log_abs: Optional[mpf] = None

    @property
    def local_exponent(self):
        if self.log_abs is None:
            return None
        return self.log_abs / mpmath.log(self.a)

    def in_ring(self, x) -> bool:
        rho = mpmath.hypot(self.b - x, self.a)
        return self.r_inner <= rho <= self.r_outer


def ring_radii(profile: DiophantineProfile, n: int, D: float, prec: Optional[int] = None):
    if n < 1 or n >= profile.depth:
        raise ValueError(f"ring index {n} outside 1..{profile.depth - 1}")
    if D <= 1:
        raise ValueError("D must exceed 1")
    prec = prec or max(mp.prec, profile.precision_bits)
    with mp.workprec(prec):
        r_in = mpf(D) * residual(profile, n, prec)
        r_out = mpf(D) * residual(profile, n - 1, prec)
        if r_in == 0 or not r_in < r_out:
            raise RingDegenerate(f"ring {n} collapses at {prec} bits")
    return r_in, r_out


def ring_points(profile: DiophantineProfile, x: RealPoint, n: int, D: float = DEFAULT_D,
                count: int = 8) -> list[RingSample]:
    """Points of the half-ring of index n, the apex first.

    Non-apex points sit at geometrically spaced radii strictly inside the ring,
    capped at radius 1 so every scale stays below 1, and at angles spread over
    (0, pi).  The placement is deterministic.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    r_in, r_out = ring_radii(profile, n, D)
    prec = max(mp.prec, _scale_bits(r_in))
    out = []
    with mp.workprec(prec):
        xv = x.render(prec)
        r_in, r_out = ring_radii(profile, n, D, prec)
        out.append(RingSample(n, r_in, xv, r_in, r_out, True))
        top = min(r_out, mpf(1))
        ratio = top / r_in
        m = count - 1
        for j in range(m):
            t = mpf(j + 1) / (m + 1)
            rho = r_in * ratio ** t
            theta = mp.pi * (mpf(2 * ((j * 5) % m) + 1) / (2 * m))
            a = rho * mpmath.sin(theta)
            off = rho * mpmath.cos(theta)
            out.append(RingSample(n, a, xv + off, r_in, r_out, False, off))
    return out


def _transform(form: ModularForm, s, sample: RingSample) -> RingSample:
    prec = _scale_bits(min(sample.a, sample.r_inner))
    with mp.workprec(prec):
        m = eval_form(form, mpc(sample.b, sample.a)) - _to_mpf(form.r0)
        if m == 0:
            return sample
        log_abs = mpmath.log(abs(c_hat(s))) + mpf(s) * mpmath.log(sample.a) + mpmath.log(abs(m))
        value = c_hat(s) * sample.a ** mpf(s) * m
    coeff = WaveletCoefficient(float(sample.a), float(sample.b), value, "closed_form",
                               form.form_id, float(s))
    return RingSample(sample.n, sample.a, sample.b, sample.r_inner, sample.r_outer,
                      sample.apex, sample.offset, coeff, +log_abs)


# ---------------------------------------------------------------- predictions

@dataclass(frozen=True)
class Prediction:
    theorem: str
    kind: str  # "value" or "lower_bound"
    value: float
    conditions: dict
    note: str = ""

    @property
    def holds(self) -> bool:
        return all(self.conditions.values())


def _inv(v, infinite: bool) -> float:
    return 0.0 if infinite else 1.0 / float(v)


def predict_exponent(form_kind: str, k: int, s: float, mu, nu,
                     quotient_condition="none", mu_infinite: bool = False,
                     nu_infinite: bool = False, mu_tol: float = MU_TWO_TOL) -> list[Prediction]:
    """Every exponent prediction applicable to the form kind, hypotheses evaluated.

    ``form_kind`` is "eisenstein" (modular, non-cusp), "e2" or "delta".  An
    infinite mu or nu is passed as a flag and read as 1/mu = 0.
    ``quotient_condition`` is one of QUOTIENT_CONDITIONS or a set of them.
    """
    if isinstance(quotient_condition, str):
        qc = {quotient_condition} - {"none"}
    else:
        qc = set(quotient_condition) - {"none"}
    unknown = qc - set(QUOTIENT_CONDITIONS)
    if unknown:
        raise ValueError(f"unknown quotient condition(s): {sorted(unknown)}")
    im, iv = _inv(mu, mu_infinite), _inv(nu, nu_infinite)
    mu_is_two = (not mu_infinite) and abs(float(mu) - 2) <= mu_tol
    out = []
    if form_kind == "eisenstein":
        out.append(Prediction(
            "noncusp_exact", "value", s - k + k * im,
            {f"s > k (= {k})": s > k,
             "s > k + k/nu - k/mu": s > k + k * iv - k * im}))
    elif form_kind == "delta":
        out.append(Prediction(
            "cusp_lower_bound", "lower_bound", s - k / 2 - 1 + 2 * im,
            {f"s > k/2 (= {k / 2})": s > k / 2,
             "s > k/2 + 1 + 2/nu - 2/mu": s > k / 2 + 1 + 2 * iv - 2 * im}))
        out.append(Prediction(
            "cusp_equality", "value", s - k / 2,
            {f"s > k/2 (= {k / 2})": s > k / 2,
             "some a_n = N infinitely often": CONSTANT_IO in qc,
             "mu = 2": mu_is_two}))
        if k == 12:
            out.append(Prediction(
                "delta_ae", "value", s - 6, {"s > 7": s > 7},
                note="almost-every-x statement; not guaranteed at a given point"))
    elif form_kind == "e2":
        cond = {"s > 2": s > 2, "s > 2 + 2/nu - 2/mu": s > 2 + 2 * iv - 2 * im}
        out.append(Prediction("e2_lower_bound", "lower_bound", s - 2 + 2 * im, dict(cond)))
        cond["a_n >= 7 infinitely often"] = GE7_IO in qc
        out.append(Prediction("e2_equality", "value", s - 2 + 2 * im, cond))
    else:
        raise ValueError(f"no predictions for form kind {form_kind!r}")
    return out


def form_kind_of(form: ModularForm) -> str:
    if form.quasimodular:
        return "e2"
    if form.kind == "delta":
        return "delta"
    if form.kind == "eisenstein":
        return "eisenstein"
    raise ValueError("predictions exist only for Eisenstein series and Delta")


def exact_mu(point: RealPoint):
    """(mu, source) when mu is known from how the point was built, else (None, 'estimated').

    Bounded partial quotients give mu = 2; this covers quadratic surds and
    periodic expansions.  e has mu = 2 as well.  Prescribed points carry their
    construction parameter.
    """
    if point.kind == "surd" or point.kind == "e":
        return 2.0, "exact"
    if point.kind == "cf" and point.data[1]:
        return 2.0, "exact"
    if point.kind == "prescribed":
        return float(point.data[0]), "constructed"
    return None, "estimated"


def quotient_conditions(profile: DiophantineProfile, window: Optional[int] = None) -> tuple[set, bool]:
    """The set of quotient conditions met by x, plus whether the decision is exact.

    Exact for periodic expansions (including quadratic surds), e and
    prescribed points; otherwise a
    finite-depth surrogate over the last ``window`` quotients: a value
    repeating at least max(3, window//3) times, or at least as many a_n >= 7.
    """
    point = profile.point
    period = None
    if point.kind == "cf" and point.data[1]:
        period = point.data[1]
    elif point.kind == "surd" and not point.is_rational:
        period = surd_period(*point.data)
    if period:
        conds = {CONSTANT_IO}
        if max(period) >= 7:
            conds.add(GE7_IO)
        return conds, True
    if point.kind == "e":
        return {CONSTANT_IO, GE7_IO}, True
    if point.kind == "prescribed":
        return {GE7_IO}, True
    window = window or profile.window or min(10, profile.depth // 2)
    tail = list(profile.a[-window:])
    need = max(3, window // 3)
    conds = set()
    if tail and max(tail.count(v) for v in set(tail)) >= need:
        conds.add(CONSTANT_IO)
    if sum(1 for v in tail if v >= 7) >= need:
        conds.add(GE7_IO)
    return conds, False


# ---------------------------------------------------------------- measurement

@dataclass(frozen=True)
class ScalingSample:
    n: int
    q_n: int
    kappa_n: Optional[float]
    a: mpf
    log10_a: float
    log10_absC: Optional[float]
    local_exponent: Optional[float]
    underflow: bool = False

    def row(self) -> dict:
        return {"n": self.n, "q_n": str(self.q_n), "kappa_n": self.kappa_n,
                "a": mpmath.nstr(self.a, 20), "log10_a": self.log10_a,
                "log10_absC": self.log10_absC, "local_exponent": self.local_exponent}


@dataclass
class ExponentReport:
    x: str
    form_id: str
    s: float
    measured_alpha: float
    fit_residual: float
    robust_alpha: float
    predicted: list
    scales_used: tuple
    D: float
    mu: Optional[float]
    nu: Optional[float]
    mu_source: str
    quotient_conditions: list
    quotient_conditions_exact: bool
    samples: list = field(default_factory=list)
    underflows: list = field(default_factory=list)

    def prediction(self, theorem: str) -> Prediction:
        for p in self.predicted:
            if p.theorem == theorem:
                return p
        raise KeyError(theorem)

    def to_json(self) -> dict:
        return {
            "x": self.x, "form": self.form_id, "s": self.s,
            "measured_alpha": self.measured_alpha, "fit_residual": self.fit_residual,
            "robust_alpha": self.robust_alpha,
            "predicted": [{"theorem": p.theorem, "kind": p.kind, "value": p.value,
                           "conditions": p.conditions, "holds": p.holds, "note": p.note}
                          for p in self.predicted],
            "scales_used": list(self.scales_used), "D": self.D,
            "mu": self.mu, "nu": self.nu, "mu_source": self.mu_source,
            "quotient_conditions": self.quotient_conditions,
            "quotient_conditions_exact": self.quotient_conditions_exact,
            "samples": [smp.row() for smp in self.samples],
            "underflows": self.underflows,
        }


def default_n_range(profile: DiophantineProfile, q_min: int = 10) -> range:
    """From the first convergent with q_n >= q_min to the last one."""
    start = next((n for n, q in enumerate(profile.q) if q >= q_min and n >= 1), None)
    if start is None:
        return range(0)
    return range(start, profile.depth)


def apex_samples(form: ModularForm, s, profile: DiophantineProfile,
                 n_range: Iterable[int], D: float = DEFAULT_D) -> list[ScalingSample]:
    out = []
    for n in n_range:
        if profile.kappa[n] is None:
            continue
        apex = ring_points(profile, profile.point, n, D, count=1)[0]
        smp = _transform(form, s, apex)
        ln10 = math.log(10)
        log10_a = float(mpmath.log10(smp.a))
        if smp.log_abs is None:
            out.append(ScalingSample(n, profile.q[n], float(profile.kappa[n]), smp.a, log10_a,
                                     None, None, True))
            continue
        out.append(ScalingSample(n, profile.q[n], float(profile.kappa[n]), smp.a, log10_a,
                                 float(smp.log_abs) / ln10, float(smp.local_exponent)))
    return out


def fit_slope(log_a: Sequence[float], log_c: Sequence[float]) -> tuple[float, float, float]:
    """(OLS slope, max |deviation| from the OLS line, Theil-Sen slope)."""
    xa, ya = np.asarray(log_a, float), np.asarray(log_c, float)
    slope, icpt = np.polyfit(xa, ya, 1)
    dev = float(np.max(np.abs(ya - (slope * xa + icpt))))
    robust = stats.theilslopes(ya, xa).slope
    return float(slope), dev, float(robust)


def measure_exponent(form: ModularForm, s, x: RealPoint, profile: DiophantineProfile,
                     n_range: Optional[Iterable[int]] = None, D: float = DEFAULT_D) -> ExponentReport:
    """Least-squares slope of log|C(a_n, x)| against log a_n over apex points."""
    if profile.point != x:
        raise ValueError("profile was built for a different point")
    n_range = list(default_n_range(profile) if n_range is None else n_range)
    if n_range and n_range[-1] >= profile.depth:
        raise ValueError(f"n_range exceeds profile depth {profile.depth}")
    samples = apex_samples(form, s, profile, n_range, D)
    good = [smp for smp in samples if not smp.underflow]
    if len(good) < 3:
        raise DegenerateFit(f"only {len(good)} usable scales")
    slope, dev, robust = fit_slope([smp.log10_a for smp in good], [smp.log10_absC for smp in good])
    mu, source = exact_mu(x)
    nu = mu
    if mu is None:
        mu = float(profile.mu_estimate) if profile.mu_estimate is not None else None
        nu = float(profile.nu_estimate) if profile.nu_estimate is not None else None
    conds, conds_exact = quotient_conditions(profile)
    predicted = []
    if mu is not None:
        try:
            predicted = predict_exponent(form_kind_of(form), form.weight, float(s), mu, nu, conds)
        except ValueError:
            predicted = []
    return ExponentReport(
        x=x.descriptor(), form_id=form.form_id, s=float(s), measured_alpha=slope,
        fit_residual=dev * math.log(10), robust_alpha=robust, predicted=predicted,
        scales_used=(good[0].n, good[-1].n), D=float(D), mu=mu, nu=nu, mu_source=source,
        quotient_conditions=sorted(conds), quotient_conditions_exact=conds_exact,
        samples=samples, underflows=[smp.n for smp in samples if smp.underflow])


# ---------------------------------------------------------------- two-sided bounds

@dataclass
class BoundReport:
    kind: str  # "upper" or "lower"
    per_ring: dict
    overall: float
    passed: bool
    criterion: str
    D: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "per_ring": {str(k): v for k, v in self.per_ring.items()},
                "overall": self.overall, "passed": self.passed, "criterion": self.criterion,
                "D": self.D}


def _log_envelope(log_a, rel, s, k, kappa):
    """log of a^(s-k+k/kappa) (1 + |b-x|/a)^(k/kappa)."""
    return (s - k + k / kappa) * log_a + (k / kappa) * math.log1p(rel)


def _thirds(values: list) -> tuple[list, list]:
    t = max(1, len(values) // 3)
    return values[:t], values[-t:]


def verify_prop32_upper(form: ModularForm, s, x: RealPoint, profile: DiophantineProfile,
                        n_range: Iterable[int], D: float = DEFAULT_D,
                        samples_per_ring: int = 8) -> BoundReport:
    """Ratios |C| / min_m envelope_m over ring points, m in {n-1, n}.

    Passes when the largest ratio over the last third of the rings is at most
    twice the largest over the first third, i.e. no growth across scales.
    """
    if form.is_cusp:
        raise ValueError("the upper-bound family is stated for non-cusp forms")
    k = form.weight
    s = float(s)
    per_ring = {}
    for n in n_range:
        kappas = [float(profile.kappa[m]) for m in (n - 1, n) if m >= 0 and profile.kappa[m] is not None]
        if not kappas:
            continue
        worst = -math.inf
        for smp in ring_points(profile, x, n, D, samples_per_ring):
            smp = _transform(form, s, smp)
            if smp.log_abs is None:
                continue
            log_a = float(mpmath.log(smp.a))
            rel = float(abs(smp.offset) / smp.a)
            env = min(_log_envelope(log_a, rel, s, k, kp) for kp in kappas)
            worst = max(worst, float(smp.log_abs) - env)
        per_ring[n] = math.exp(worst)
    if len(per_ring) < 3:
        raise DegenerateFit("need at least three rings")
    ratios = list(per_ring.values())
    first, last = _thirds(ratios)
    passed = max(last) <= 2 * max(first) and min(ratios) > 0
    return BoundReport("upper", per_ring, max(ratios), passed,
                       "max(last third) <= 2 * max(first third)", float(D))


def verify_prop32_lower(form: ModularForm, s, x: RealPoint, profile: DiophantineProfile,
                        n_range: Iterable[int], D: float = DEFAULT_D) -> BoundReport:
    """Apex constants |C| a^-(s-k+k/kappa) along the rings.

    kappa is kappa_n for non-cusp forms and kappa_{n-1} for cusp forms.  A
    quasimodular E_2 uses k = 2.  Passes when the largest constant over the
    last half is at least half the largest over the first half.
    """
    k = form.weight
    s = float(s)
    per_ring = {}
    for smp in apex_samples(form, s, profile, n_range, D):
        m = smp.n - 1 if form.is_cusp else smp.n
        if smp.underflow or m < 0 or profile.kappa[m] is None:
            continue
        kp = float(profile.kappa[m])
        log_a = smp.log10_a * math.log(10)
        per_ring[smp.n] = math.exp(smp.log10_absC * math.log(10) - (s - k + k / kp) * log_a)
    if len(per_ring) < 2:
        raise DegenerateFit("need at least two rings")
    vals = list(per_ring.values())
    h = len(vals) // 2
    first, last = vals[:h], vals[h:]
    passed = max(last) >= 0.5 * max(first) and min(vals) > 0
    return BoundReport("lower", per_ring, min(vals), passed,
                       "max(last half) >= 0.5 * max(first half)", float(D))


# ---------------------------------------------------------------- claim constants

@dataclass(frozen=True)
class ClaimConstants:
    r: Optional[float]
    c1: float
    c2: Optional[float]
    c3: Optional[float]
    grid: dict
    holdout_size: int
    holdout_violations: int
    seed: int

    def to_json(self) -> dict:
        return asdict(self)


def _abs_coeffs(form: ModularForm, N: int) -> list[float]:
    return [abs(float(c)) for c in form.with_length(N).coeffs]


def solve_r(form: ModularForm, tol: float = 1e-6, N: int = 256) -> float:
    """Solve |r_0| = sum_{n>=1} |r_n| e^(-2 pi n r) for r by bisection."""
    r0 = abs(float(form.r0))
    if r0 == 0:
        raise BisectionFailure("cusp forms have r_0 = 0; r is undefined")
    coeffs = _abs_coeffs(form, N)

    def f(r):
        return math.fsum(c * math.exp(-2 * math.pi * n * r) for n, c in enumerate(coeffs) if n) - r0

    lo, hi = 1e-3, 1.0
    while f(hi) > 0:
        hi *= 2
        if hi > 100:
            raise BisectionFailure("no sign change below Im z = 100")
    if f(lo) < 0:
        raise BisectionFailure("sum already below |r_0| at the lower end")
    # the dropped tail sum_{n>N} matters only if it is comparable to tol * |f'|
    while hi - lo > tol / 4:
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _scan(form, fn, re_pts, im_pts):
    vals = []
    with mp.workprec(80):
        for y in im_pts:
            for xr in re_pts:
                vals.append(fn(float(y), abs(eval_form(form, mpc(xr, y)))))
    return vals


def estimate_claim_constants(form: ModularForm, n_re: int = 48, n_im: int = 40,
                             holdout: int = 1000, seed: int = 20240601,
                             margin: float = 2.0, im_min: float = 1e-4,
                             im_max: float = 10.0) -> ClaimConstants:
    """Grid-scan estimates of the bounding constants, re-checked on fresh samples.

    Non-cusp forms: r from the bisection, c_1 >= Im^k |M| for Im z <= r, and
    c_2 <= |M| <= c_3 for Im z >= r.  Cusp forms: only c_1 >= Im^(k/2+1) |M|
    over the whole scan range.  The scanned extremes are widened by
    ``margin`` before the holdout check.
    """
    k = form.weight
    re_pts = [j / n_re for j in range(n_re)] + [0.5]
    rng = random.Random(seed)
    grid = {"re": [0.0, 1.0, n_re], "im": [im_min, im_max, n_im], "spacing": "log"}
    if form.is_cusp:
        e = k / 2 + 1
        im_pts = np.geomspace(im_min, im_max, n_im)
        c1 = margin * max(_scan(form, lambda y, v: v * y ** e, re_pts, im_pts))
        bad = 0
        with mp.workprec(80):
            for _ in range(holdout):
                y = 10 ** rng.uniform(math.log10(im_min), math.log10(im_max))
                if abs(eval_form(form, mpc(rng.random(), y))) * y ** e > c1:
                    bad += 1
        return ClaimConstants(None, c1, None, None, grid, holdout, bad, seed)
    r = solve_r(form)
    below = np.geomspace(im_min, r, n_im)
    above = np.concatenate([[r], np.geomspace(r, im_max, n_im)[1:]])
    c1 = margin * max(_scan(form, lambda y, v: v * y ** k, re_pts, below))
    vals = _scan(form, lambda y, v: v, re_pts, above)
    c2 = min(vals) / margin
    c3 = max(vals) * margin
    bad = 0
    with mp.workprec(80):
        for i in range(holdout):
            xr = rng.random()
            if i % 2:
                y = 10 ** rng.uniform(math.log10(im_min), math.log10(r))
                if abs(eval_form(form, mpc(xr, y))) * y ** k > c1:
                    bad += 1
            else:
                y = 10 ** rng.uniform(math.log10(r), math.log10(im_max))
                v = abs(eval_form(form, mpc(xr, y)))
                if not c2 <= v <= c3:
                    bad += 1
    grid["r"] = r
    return ClaimConstants(r, c1, c2, c3, grid, holdout, bad, seed)
