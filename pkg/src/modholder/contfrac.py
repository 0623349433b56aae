"""Continued fractions at arbitrary precision.

Points are described symbolically (rationals, quadratic surds, explicit or
rule-generated partial quotients) so that their expansions are exact; floating
point only enters when measuring the approximation exponents

    kappa_n = -log|x - p_n/q_n| / log q_n,

which are evaluated with mpmath at a precision proportional to
``kappa * log2(q_n)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import mpmath
from mpmath import mp, mpf

from .errors import DepthOverflow, InsufficientDepth, PointSpecError, PrecisionExhausted

DEFAULT_KAPPA_CAP = 8
DEFAULT_PREC_CEILING = 1 << 18
DEFAULT_MAX_BITS = 1 << 20
KAPPA_DIGITS = 40


# ---------------------------------------------------------------------------
# exact integer helpers


def iroot(n: int, k: int) -> int:
    """Floor of the k-th root of a non-negative integer."""
    if n < 0:
        raise ValueError("iroot of a negative number")
    if n < 2 or k == 1:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            return x
        x = y


def _round_rational_power(q: int, e: Fraction) -> int:
    """Nearest integer to q**e for rational e >= 0, rounding half up."""
    if e.denominator == 1:
        return q ** e.numerator
    u, v = e.numerator, e.denominator
    if v <= 64:
        target = q ** u
        m = iroot(target, v)
        # m + 1/2 <= root  <=>  (2m + 1)^v <= 2^v * target
        return m + 1 if (2 * m + 1) ** v <= (target << v) else m
    bits = int(q.bit_length() * float(e)) + 96
    with mp.workprec(bits):
        return int(mpmath.nint(mpf(q) ** (mpf(u) / v)))


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


# ---------------------------------------------------------------------------
# quotient generators


def _euclid(num: int, den: int) -> Iterator[int]:
    while den:
        a, r = divmod(num, den)
        yield a
        num, den = den, r


def _surd_quotients(p: int, q: int, r: int, s: int) -> Iterator[int]:
    # x = (P + sqrt(D)) / Q with Q | D - P^2 gives the classical integer recurrence.
    if s < 0:
        p, q, s = -p, -q, -s
    D = q * q * r
    P, Q = (p, s) if q > 0 else (-p, -s)
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    root = math.isqrt(D)
    while True:
        a = (P + root) // Q if Q > 0 else (P + root + 1) // Q
        yield a
        P = a * Q - P
        Q = (D - P * P) // Q


def surd_period(p: int, q: int, r: int, s: int = 1, max_steps: int = 1 << 20) -> tuple[int, ...]:
    """The repeating block of the expansion of (p + q sqrt r)/s, found exactly.

    Runs the same (P, Q) recurrence as the quotient generator and stops at
    the first repeated state; the quotients emitted since that state's first
    visit form the period.
    """
    if math.isqrt(r) ** 2 == r or q == 0:
        raise PointSpecError("rational numbers have no period")
    if s < 0:
        p, q, s = -p, -q, -s
    D = q * q * r
    P, Q = (p, s) if q > 0 else (-p, -s)
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    root = math.isqrt(D)
    seen: dict = {}
    out = []
    for i in range(max_steps):
        if (P, Q) in seen:
            return tuple(out[seen[(P, Q)]:])
        seen[(P, Q)] = i
        a = (P + root) // Q if Q > 0 else (P + root + 1) // Q
        out.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    raise DepthOverflow(f"no period found within {max_steps} steps")


def _e_quotients() -> Iterator[int]:
    yield 2
    n = 1
    while True:
        yield 2 * (n + 1) // 3 if n % 3 == 2 else 1
        n += 1


@lru_cache(maxsize=64)
def _prescribed_prefix(kappa: Fraction, count: int, max_bits: int) -> tuple[int, ...]:
    """First ``count`` quotients of the point with a_{n+1} = max(1, round(q_n^(kappa-2)))."""
    e = kappa - 2
    quotients = [0]
    q_prev, q = 0, 1
    while len(quotients) < count:
        if q.bit_length() > max_bits:
            raise DepthOverflow(
                f"q_{len(quotients) - 1} has {q.bit_length()} bits, budget is {max_bits}"
            )
        a = max(1, _round_rational_power(q, e))
        quotients.append(a)
        q_prev, q = q, a * q + q_prev
    return tuple(quotients)


def _prescribed_quotients(kappa: Fraction, max_bits: int) -> Iterator[int]:
    chunk = 8
    i = 0
    while True:
        prefix = _prescribed_prefix(kappa, chunk, max_bits)
        while i < len(prefix):
            yield prefix[i]
            i += 1
        chunk *= 2


def convergents(quotients: Sequence[int]) -> tuple[list[int], list[int]]:
    """Numerators and denominators from the three-term recurrence."""
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    ps, qs = [], []
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        ps.append(p)
        qs.append(q)
    return ps, qs


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class RealPoint:
    """A real number given by an exact symbolic description.

    ``kind`` is one of ``rational``, ``surd``, ``cf``, ``e`` or ``prescribed``;
    ``data`` holds the kind-specific integers.  Use the module level
    constructors rather than building instances directly.
    """

    kind: str
    data: tuple
    label: str = ""
    precision_bits: int = 256

    def __post_init__(self):
        if self.kind == "cf":
            prefix, period = self.data
            if any(a < 1 for a in list(prefix[1:]) + list(period)):
                raise PointSpecError("partial quotients a_n must be >= 1 for n >= 1")
            if not prefix and period and period[0] < 1:
                raise PointSpecError("partial quotients a_n must be >= 1 for n >= 1")

    # -- structure ---------------------------------------------------------
    @property
    def is_rational(self) -> bool:
        return self.kind == "rational" or (self.kind == "cf" and not self.data[1])

    def exact_value(self) -> Optional[Fraction]:
        if self.kind == "rational":
            return Fraction(*self.data)
        if self.kind == "cf" and not self.data[1]:
            ps, qs = convergents(self.data[0])
            return Fraction(ps[-1], qs[-1])
        return None

    def iter_quotients(self) -> Iterator[int]:
        if self.kind == "rational":
            yield from _euclid(*self.data)
        elif self.kind == "surd":
            yield from _surd_quotients(*self.data)
        elif self.kind == "cf":
            prefix, period = self.data
            first = list(prefix) if prefix else [period[0]]
            rest = period if prefix else period[1:] + period[:1]
            yield from first
            while rest:
                yield from rest
        elif self.kind == "e":
            yield from _e_quotients()
        elif self.kind == "prescribed":
            yield from _prescribed_quotients(*self.data)
        else:
            raise PointSpecError(f"unknown point kind {self.kind!r}")

    def quotients(self, depth: int) -> list[int]:
        out = []
        for a in self.iter_quotients():
            out.append(a)
            if len(out) >= depth:
                break
        return out

    # -- numerics ----------------------------------------------------------
    def render(self, prec: Optional[int] = None) -> mpf:
        """The point as an mpf carrying ``prec`` bits (default: ``precision_bits``)."""
        prec = prec or self.precision_bits
        exact = self.exact_value()
        with mp.workprec(prec + 16):
            if exact is not None:
                return mpf(exact.numerator) / exact.denominator
            if self.kind == "surd":
                p, q, r, s = self.data
                return (p + q * mpmath.sqrt(r)) / s
        # |x - p_n/q_n| < 1/(q_n q_{n+1}), i.e. relative error below 1/(|p_n| q_{n+1}).
        p_prev, p = 0, 1
        q_prev, q = 1, 0
        for a in self.iter_quotients():
            p_old = p
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
            if q_prev and max(abs(p_old), 1).bit_length() + q.bit_length() - 2 > prec + 16:
                break
        with mp.workprec(prec + 16):
            return mpf(p) / q

    def descriptor(self) -> str:
        """A point-spec string that ``parse_point`` maps back to this point."""
        if self.label:
            return self.label
        if self.kind == "rational":
            return f"{self.data[0]}/{self.data[1]}"
        if self.kind == "surd":
            return "surd:" + ",".join(str(v) for v in self.data)
        if self.kind == "cf":
            return format_cf(*self.data)
        if self.kind == "e":
            return "e"
        kappa, _ = self.data
        return f"liouville:{kappa}"

    def __str__(self) -> str:
        return self.descriptor()


def rational(num: int, den: int = 1, label: str = "") -> RealPoint:
    if den == 0:
        raise PointSpecError("zero denominator")
    f = Fraction(num, den)
    return RealPoint("rational", (f.numerator, f.denominator), label)


def surd(p: int, q: int, r: int, s: int = 1, label: str = "") -> RealPoint:
    """The quadratic irrational (p + q*sqrt(r)) / s."""
    if s == 0:
        raise PointSpecError("zero denominator")
    if r < 0:
        raise PointSpecError("negative radicand")
    if q == 0 or _is_square(r):
        root = math.isqrt(r)
        return rational(p + q * root, s, label)
    return RealPoint("surd", (p, q, r, s), label)


def sqrt(d: int) -> RealPoint:
    return surd(0, 1, d, 1, label=f"sqrt:{d}")


def golden() -> RealPoint:
    return surd(1, 1, 5, 2, label="phi")


def euler_e() -> RealPoint:
    return RealPoint("e", (), "e")


def from_quotients(prefix: Sequence[int], period: Sequence[int] = (), label: str = "") -> RealPoint:
    """Point with explicit partial quotients: a finite prefix then a repeating period."""
    prefix, period = tuple(int(a) for a in prefix), tuple(int(a) for a in period)
    if not prefix and not period:
        raise PointSpecError("empty quotient sequence")
    return RealPoint("cf", (prefix, period), label)


def from_decimal(text: str) -> RealPoint:
    """Exact rational value of a decimal literal; its precision is the literal's."""
    try:
        d = Decimal(text)
    except InvalidOperation as exc:
        raise PointSpecError(f"bad decimal literal {text!r}") from exc
    f = Fraction(d)
    digits = len(d.as_tuple().digits)
    pt = RealPoint("rational", (f.numerator, f.denominator), f"dec:{text}",
                   max(64, math.ceil(digits * math.log2(10))))
    return pt


def construct_prescribed(kappa_target, depth: int, max_bits: int = DEFAULT_MAX_BITS) -> RealPoint:
    """Irrational point whose approximation exponents approach ``kappa_target``.

    Partial quotients follow a_0 = 0 and a_{n+1} = max(1, round(q_n^(kappa-2))),
    so |x - p_n/q_n| is close to q_n^-kappa.  Raises DepthOverflow if ``depth``
    terms (plus the two needed to render the point) exceed ``max_bits``.
    """
    kappa = Fraction(str(kappa_target)) if not isinstance(kappa_target, Fraction) else kappa_target
    if kappa < 2:
        raise ValueError("kappa_target must be >= 2")
    _prescribed_prefix(kappa, depth + 2, max_bits)
    return RealPoint("prescribed", (kappa, max_bits), f"liouville:{kappa_target}:{depth}")


# (q) marks the repeating tail, e.g. cf:[1;2,(1,2)] or cf:[0;(7)]
_CF_RE = re.compile(r"^\[\s*(-?\d+)\s*(?:;\s*(.*?))?\s*\]$")


def format_cf(prefix, period) -> str:
    head = list(prefix) if prefix else [period[0]]
    tail = list(period) if prefix else list(period[1:] + period[:1])
    parts = [str(a) for a in head[1:]]
    if tail:
        parts.append("(" + ",".join(str(a) for a in tail) + ")")
    return f"cf:[{head[0]};{','.join(parts)}]" if parts else f"cf:[{head[0]}]"


def _parse_cf(body: str, spec: str) -> RealPoint:
    m = _CF_RE.match(body.strip())
    if not m:
        raise PointSpecError(f"bad continued fraction {spec!r}")
    a0 = int(m.group(1))
    rest = (m.group(2) or "").strip()
    period: tuple = ()
    pm = re.search(r"\(([^)]*)\)\s*$", rest)
    if pm:
        period = tuple(int(t) for t in pm.group(1).split(",") if t.strip())
        rest = rest[: pm.start()].rstrip(", ")
        if not period:
            raise PointSpecError(f"empty period in {spec!r}")
    try:
        prefix = (a0,) + tuple(int(t) for t in rest.split(",") if t.strip())
    except ValueError as exc:
        raise PointSpecError(f"bad continued fraction {spec!r}") from exc
    return from_quotients(prefix, period, label=spec)


def parse_point(spec: str) -> RealPoint:
    """Parse a point descriptor.

    Accepted forms: ``sqrt:d``, ``sqrt2m1``, ``phi``, ``e``, ``dec:<digits>``,
    ``cf:[a0;a1,...,(b1,...)]``, ``liouville:<kappa>:<depth>``,
    ``surd:p,q,r,s`` and plain rationals ``p/q``.
    """
    spec = spec.strip()
    if spec == "phi":
        return golden()
    if spec == "e":
        return euler_e()
    if spec == "sqrt2m1":
        return surd(-1, 1, 2, 1, label="sqrt2m1")
    head, _, body = spec.partition(":")
    try:
        if head == "sqrt" and body:
            d = int(body)
            pt = sqrt(d)
            return pt if pt.kind == "surd" else rational(*pt.data, label=spec)
        if head == "dec" and body:
            return from_decimal(body)
        if head == "cf" and body:
            return _parse_cf(body, spec)
        if head == "surd" and body:
            vals = [int(t) for t in body.split(",")]
            if len(vals) not in (3, 4):
                raise PointSpecError(f"surd needs p,q,r[,s]: {spec!r}")
            return surd(*vals, label=spec)
        if head == "liouville" and body:
            kappa, _, depth = body.partition(":")
            return construct_prescribed(Fraction(kappa), int(depth or 12))
        if re.fullmatch(r"-?\d+(/\d+)?", spec):
            num, _, den = spec.partition("/")
            return rational(int(num), int(den or 1), label=spec)
    except (ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, PointSpecError):
            raise
        raise PointSpecError(f"cannot parse point {spec!r}: {exc}") from exc
    raise PointSpecError(f"unknown point spec {spec!r}")


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class DiophantineProfile:
    """Expansion data for a point.

    ``kappa[n]`` is None where it is undefined: when q_n = 1 (log q_n = 0) and at
    the terminal index of a rational, where the residual vanishes.
    """

    point: RealPoint
    a: tuple
    p: tuple
    q: tuple
    kappa: tuple
    precision_bits: int
    truncated: bool = False
    window: Optional[int] = None
    mu_estimate: Optional[mpf] = None
    nu_estimate: Optional[mpf] = None
    residual_signs: tuple = field(default=(), repr=False)

    @property
    def depth(self) -> int:
        return len(self.a)

    def defined_kappa(self) -> list[tuple[int, mpf]]:
        return [(n, k) for n, k in enumerate(self.kappa) if k is not None]

    def to_json(self) -> dict:
        return profile_to_json(self)


def _kappa_bits(q_last: int, kappa_cap: float) -> int:
    return max(256, math.ceil(kappa_cap * q_last.bit_length()) + 64)


def _measure_kappas(point: RealPoint, ps, qs, prec: int):
    """kappa_n at precision ``prec``; returns None if some residual is unresolved."""
    exact = point.exact_value()
    kappas, signs = [], []
    with mp.workprec(prec):
        xv = point.render(prec) if exact is None else None
        for p, q in zip(ps, qs):
            if exact is not None:
                diff = exact - Fraction(p, q)
                if diff == 0:
                    kappas.append(None)
                    signs.append(0)
                    continue
                res = mpf(diff.numerator) / diff.denominator
            else:
                res = xv - mpf(p) / q
                if res == 0 or mpmath.mag(res) - mpmath.mag(xv) + prec < 32:
                    return None
            signs.append(1 if res > 0 else -1)
            if q == 1:
                kappas.append(None)
            else:
                kappas.append(-mpmath.log(abs(res)) / mpmath.log(q))
    return kappas, signs


def expand(
    x: RealPoint,
    depth: int,
    kappa_cap: float = DEFAULT_KAPPA_CAP,
    prec: Optional[int] = None,
    prec_ceiling: int = DEFAULT_PREC_CEILING,
    window: Optional[int] = None,
) -> DiophantineProfile:
    """Expand ``x`` to ``depth`` partial quotients and measure every kappa_n.

    The working precision starts at ``max(256, kappa_cap*log2(q_depth) + 64)``
    bits (or ``prec``) and doubles until every residual x - p_n/q_n carries at
    least 32 significant bits.  Rational inputs that terminate early come back
    with ``truncated=True``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    a = x.quotients(depth)
    truncated = len(a) < depth
    ps, qs = convergents(a)
    bits = prec or _kappa_bits(qs[-1], kappa_cap)
    while True:
        if bits > prec_ceiling:
            raise PrecisionExhausted(f"kappa evaluation needs more than {prec_ceiling} bits")
        measured = _measure_kappas(x, ps, qs, bits)
        if measured is not None:
            break
        bits *= 2
    kappas, signs = measured
    profile = DiophantineProfile(x, tuple(a), tuple(ps), tuple(qs), tuple(kappas), bits,
                                 truncated, residual_signs=tuple(signs))
    if window is None:
        window = min(10, len(a) // 2)
    if window >= 1:
        try:
            mu, nu = estimate_mu_nu(profile, window)
        except InsufficientDepth:
            return profile
        profile = DiophantineProfile(x, profile.a, profile.p, profile.q, profile.kappa, bits,
                                     truncated, window, mu, nu, profile.residual_signs)
    return profile


def estimate_mu_nu(profile: DiophantineProfile, window: int) -> tuple[mpf, mpf]:
    """Max and min of kappa_n over the last ``window`` indices.

    These are finite-depth stand-ins for limsup and liminf.
    """
    if window < 1 or profile.depth < 2 * window:
        raise InsufficientDepth(f"depth {profile.depth} < 2*window ({2 * window})")
    tail = [k for k in profile.kappa[-window:] if k is not None]
    if not tail:
        raise InsufficientDepth("no defined kappa values in the window")
    return max(tail), min(tail)


def residual(profile: DiophantineProfile, n: int, prec: Optional[int] = None) -> mpf:
    """|x - p_n/q_n| at the profile's working precision."""
    prec = prec or profile.precision_bits
    exact = profile.point.exact_value()
    with mp.workprec(prec):
        if exact is not None:
            diff = abs(exact - Fraction(profile.p[n], profile.q[n]))
            return mpf(diff.numerator) / diff.denominator
        return abs(profile.point.render(prec) - mpf(profile.p[n]) / profile.q[n])


def determinant_defects(profile: DiophantineProfile) -> list[int]:
    """Indices n where q_{n-1} p_n - p_{n-1} q_n != (-1)^(n-1) (should be empty)."""
    bad = []
    p_prev, q_prev = 1, 0
    for n, (p, q) in enumerate(zip(profile.p, profile.q)):
        if q_prev * p - p_prev * q != (-1) ** (n + 1):
            bad.append(n)
        p_prev, q_prev = p, q
    return bad


@dataclass(frozen=True)
class SBPartialSum:
    value: mpf
    partial_sums: tuple
    increments: tuple
    increments_decreasing: bool


def sb_partial_sum(profile: DiophantineProfile, k: int, terms: int) -> SBPartialSum:
    """Partial sums of sum_{n=0}^{terms} log(q_{n+1}) / q_n^k.

    Index ``terms + 1`` must exist in the profile, so ``terms <= depth - 2``.
    """
    if terms < 0 or terms + 1 >= profile.depth:
        raise InsufficientDepth(f"need q_{terms + 1}, profile depth is {profile.depth}")
    incs, sums = [], []
    with mp.workprec(max(128, profile.precision_bits)):
        total = mpf(0)
        for n in range(terms + 1):
            inc = mpmath.log(profile.q[n + 1]) / mpf(profile.q[n]) ** k
            total += inc
            incs.append(inc)
            sums.append(total)
    decreasing = all(b < a for a, b in zip(incs, incs[1:]))
    return SBPartialSum(total, tuple(sums), tuple(incs), decreasing)


def quotient_frequencies(profile: DiophantineProfile, i_max: int = 10) -> dict[int, float]:
    """Empirical frequency of each partial quotient value among a_1..a_n."""
    body = profile.a[1:]
    if not body:
        return {}
    return {i: sum(1 for a in body if a == i) / len(body) for i in range(1, i_max + 1)}


def gauss_kuzmin(i: int) -> float:
    """Almost-everywhere limiting frequency of the value i."""
    return math.log(1 + 1 / (i * (i + 2))) / math.log(2)


# ---------------------------------------------------------------------------
# serialization


def profile_to_json(profile: DiophantineProfile, digits: int = KAPPA_DIGITS) -> dict:
    def fmt(v):
        return None if v is None else mpmath.nstr(v, digits, min_fixed=-5, max_fixed=5)

    return {
        "point": profile.point.descriptor(),
        "depth": profile.depth,
        "precision_bits": profile.precision_bits,
        "kappa_digits": digits,
        "truncated": profile.truncated,
        "window": profile.window,
        "a": [str(v) for v in profile.a],
        "p": [str(v) for v in profile.p],
        "q": [str(v) for v in profile.q],
        "kappa": [fmt(k) for k in profile.kappa],
        "mu_estimate": fmt(profile.mu_estimate),
        "nu_estimate": fmt(profile.nu_estimate),
    }


def profile_from_json(payload: dict) -> DiophantineProfile:
    prec = int(payload["precision_bits"])
    with mp.workprec(prec):
        def num(v):
            return None if v is None else mpf(v)

        return DiophantineProfile(
            parse_point(payload["point"]),
            tuple(int(v) for v in payload["a"]),
            tuple(int(v) for v in payload["p"]),
            tuple(int(v) for v in payload["q"]),
            tuple(num(k) for k in payload["kappa"]),
            prec,
            bool(payload.get("truncated", False)),
            payload.get("window"),
            num(payload.get("mu_estimate")),
            num(payload.get("nu_estimate")),
        )
