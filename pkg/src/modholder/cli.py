"""Command-line front end.

Commands::

    modholder profile  --point sqrt:2 --depth 20
    modholder series   --form eisenstein:4 --s 7 --point dec:0.25
    modholder cwt      --form delta --s 11 --point phi --n-range 3:12
    modholder exponent --form eisenstein:4 --s 7 --point sqrt:2
    modholder verify   lemmas

Exit codes: 0 success, 1 a verification check failed, 2 precision exhausted,
3 empty or degenerate input, 4 usage error.  The precision ceiling for the
continued-fraction layer defaults to 2**18 bits and can be overridden with
the MODHOLDER_PREC_CEILING environment variable or ``--prec-ceiling``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from importlib import resources
from typing import Optional, Sequence

from mpmath import mp

from . import __version__, checks
from .contfrac import DEFAULT_PREC_CEILING, expand, parse_point, profile_to_json
from .errors import (DegenerateFit, InsufficientDepth, ModHolderError, NonConvergent,
                     NotCertifiable, PointSpecError, PrecisionExhausted,
                     QuadratureBudgetExceeded, RingDegenerate)
from .modforms import parse_form
from .regularity import (DEFAULT_D, apex_samples, default_n_range, measure_exponent)
from .series import FLAVORS, SeriesSpec, check_convergence, eval_series, series_json
from .wavelet import coefficients_csv, cwt_closed, cwt_quadrature

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PRECISION = 2
EXIT_EMPTY = 3
EXIT_USAGE = 4

ENV_PREC_CEILING = "MODHOLDER_PREC_CEILING"
CSV_VERSION = "v1"
SCALING_COLUMNS = ["n", "q_n", "kappa_n", "a", "log10_a", "log10_absC", "local_exponent"]
QUAD_COLUMNS = ["quad_status", "quad_rel_diff", "quad_err_bound"]
QUAD_RTOL = 1e-5
COMMANDS = ("profile", "series", "cwt", "exponent", "verify")


class UsageError(ModHolderError, ValueError):
    """A rejected option combination; the message names the violated condition."""


def load_schema(name: str) -> dict:
    """One of the shipped JSON schemas, e.g. ``load_schema("profile")``."""
    text = resources.files("modholder").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def env_prec_ceiling() -> int:
    raw = os.environ.get(ENV_PREC_CEILING)
    if raw is None or raw == "":
        return DEFAULT_PREC_CEILING
    try:
        val = int(raw)
    except ValueError as exc:
        raise UsageError(f"{ENV_PREC_CEILING} must be an integer, got {raw!r}") from exc
    if val < 64:
        raise UsageError(f"{ENV_PREC_CEILING} must be at least 64")
    return val


def parse_n_range(text: Optional[str]):
    """``"3:12"`` (inclusive) to (3, 12)."""
    if text is None:
        return None
    lo, sep, hi = text.partition(":")
    if not sep:
        raise UsageError(f"n range must look like 3:12, got {text!r}")
    try:
        pair = (int(lo), int(hi))
    except ValueError as exc:
        raise UsageError(f"n range must hold integers, got {text!r}") from exc
    if pair[0] < 1:
        raise UsageError("n range must start at 1 or later")
    return pair


def _float_list(text: Optional[str]):
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


@dataclass
class RunConfig:
    command: str
    point: Optional[str] = None
    form: Optional[str] = None
    s: Optional[float] = None
    flavor: str = "sine"
    tol: float = 1e-12
    mode: str = "certified"
    D: float = DEFAULT_D
    depth: int = 30
    n_range: Optional[tuple] = None
    a_values: Optional[list] = None
    b_values: Optional[list] = None
    check_quadrature: bool = False
    prec_ceiling: int = DEFAULT_PREC_CEILING
    output: Optional[str] = None
    format: str = "json"
    suite: Optional[str] = None
    seed: int = checks.SEED

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        if self.depth < 1:
            raise UsageError("depth must be >= 1")
        if not self.D > 1:
            raise UsageError(f"D must satisfy D > 1 (got {self.D})")
        if self.flavor not in FLAVORS:
            raise UsageError(f"flavor must be one of {FLAVORS}")
        if self.command in ("profile", "series", "cwt", "exponent") and not self.point:
            raise UsageError(f"{self.command} needs --point")
        if self.point:
            try:
                parse_point(self.point)
            except (PointSpecError, ValueError) as exc:
                raise UsageError(f"bad point spec: {exc}") from exc
        if self.command in ("series", "cwt", "exponent"):
            if self.form is None or self.s is None:
                raise UsageError(f"{self.command} needs --form and --s")
            try:
                form = parse_form(self.form)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            try:
                check_convergence(form, self.s, self.mode)
            except (NonConvergent, NotCertifiable) as exc:
                raise UsageError(f"invalid (form, s): {exc}") from exc
        if self.n_range is not None:
            lo, hi = self.n_range
            if hi >= self.depth:
                raise UsageError(f"n range end {hi} must be below depth {self.depth}")
        if (self.a_values is None) != (self.b_values is None):
            raise UsageError("--a and --b must be given together")
        return self

    def to_json(self) -> dict:
        d = asdict(self)
        if d["n_range"] is not None:
            d["n_range"] = list(d["n_range"])
        return d

    @classmethod
    def from_json(cls, payload: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        kw = {k: v for k, v in payload.items() if k in known}
        if kw.get("n_range") is not None:
            kw["n_range"] = tuple(kw["n_range"])
        return cls(**kw)

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        prec = ns.prec_ceiling if getattr(ns, "prec_ceiling", None) else env_prec_ceiling()
        return cls(
            command=ns.command,
            point=getattr(ns, "point", None),
            form=getattr(ns, "form", None),
            s=getattr(ns, "s", None),
            flavor=getattr(ns, "flavor", "sine"),
            tol=getattr(ns, "tol", 1e-12),
            mode=getattr(ns, "mode", "certified"),
            D=getattr(ns, "D", DEFAULT_D),
            depth=getattr(ns, "depth", 30),
            n_range=parse_n_range(getattr(ns, "n_range", None)),
            a_values=_float_list(getattr(ns, "a", None)),
            b_values=_float_list(getattr(ns, "b", None)),
            check_quadrature=getattr(ns, "check_quadrature", False),
            prec_ceiling=prec,
            output=getattr(ns, "output", None),
            format=getattr(ns, "format", "json"),
            suite=getattr(ns, "suite", None),
        ).validate()


# ---------------------------------------------------------------- output

def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _csv_text(kind: str, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# modholder {kind} {CSV_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def _profile(cfg: RunConfig):
    x = parse_point(cfg.point)
    return x, expand(x, cfg.depth, prec_ceiling=cfg.prec_ceiling)


def cmd_profile(cfg: RunConfig) -> int:
    _, prof = _profile(cfg)
    payload = profile_to_json(prof)
    if cfg.format == "csv":
        rows = [[n, a, p, q, payload["kappa"][n]]
                for n, (a, p, q) in enumerate(zip(payload["a"], payload["p"], payload["q"]))]
        _emit(cfg, _csv_text("profile", ["n", "a_n", "p_n", "q_n", "kappa_n"], rows))
    else:
        payload["config"] = cfg.to_json()
        _emit(cfg, _json_text(payload))
    return EXIT_OK


def cmd_series(cfg: RunConfig) -> int:
    spec = SeriesSpec(parse_form(cfg.form), cfg.s, cfg.flavor, cfg.tol, cfg.mode)
    x = parse_point(cfg.point)
    with mp.workprec(max(mp.prec, 128)):
        res = eval_series(spec, x)
    payload = series_json(spec, x, res)
    payload["config"] = cfg.to_json()
    _emit(cfg, _json_text(payload))
    return EXIT_OK


def _quad_columns(spec: SeriesSpec, a, b, closed) -> list:
    try:
        q = cwt_quadrature(spec, a, b, rtol=QUAD_RTOL)
    except QuadratureBudgetExceeded:
        return ["unresolved", "", ""]
    rel = abs(complex(closed) - q.value) / abs(complex(closed))
    return ["ok", repr(rel), repr(q.err / abs(q.value))]


def cmd_cwt(cfg: RunConfig) -> int:
    form = parse_form(cfg.form)
    spec = SeriesSpec(form, cfg.s, mode=cfg.mode)
    if cfg.a_values is not None:
        grid = [(a, b) for a in cfg.a_values for b in cfg.b_values]
        if not grid:
            print("empty (a, b) grid", file=sys.stderr)
            return EXIT_EMPTY
        if any(not 0 < a < 1 for a, _ in grid):
            raise UsageError("every scale a must satisfy 0 < a < 1")
        x = parse_point(cfg.point)
        with mp.workprec(max(mp.prec, 128)):
            xv = x.render(mp.prec)
            coeffs = [cwt_closed(form, cfg.s, a, xv + b) for a, b in grid]
        text = coefficients_csv(coeffs)
        if cfg.check_quadrature:
            lines = text.splitlines()
            out = [lines[0] + "," + ",".join(QUAD_COLUMNS)]
            for line, c in zip(lines[1:], coeffs):
                out.append(line + "," + ",".join(_quad_columns(spec, c.a, c.b, c.value)))
            text = "\n".join(out) + "\n"
        _emit(cfg, f"# modholder wavelet-grid {CSV_VERSION}\n" + text)
        return EXIT_OK
    x, prof = _profile(cfg)
    n_range = range(cfg.n_range[0], cfg.n_range[1] + 1) if cfg.n_range else default_n_range(prof)
    if len(n_range) == 0:
        print("empty scale range", file=sys.stderr)
        return EXIT_EMPTY
    with mp.workprec(max(mp.prec, 128)):
        samples = apex_samples(form, cfg.s, prof, n_range, cfg.D)
    if not samples:
        print("no usable scales in range", file=sys.stderr)
        return EXIT_EMPTY
    header = list(SCALING_COLUMNS) + (QUAD_COLUMNS if cfg.check_quadrature else [])
    rows = []
    for smp in samples:
        r = smp.row()
        row = [r[c] for c in SCALING_COLUMNS]
        if cfg.check_quadrature:
            with mp.workprec(max(mp.prec, 128)):
                closed = cwt_closed(form, cfg.s, smp.a, x)
            row += _quad_columns(spec, smp.a, x, closed.value)
        rows.append(row)
    if cfg.format == "json":
        payload = {"rows": [dict(zip(header, row)) for row in rows], "config": cfg.to_json()}
        _emit(cfg, _json_text(payload))
    else:
        _emit(cfg, _csv_text("scaling", header, rows))
    return EXIT_OK


def cmd_exponent(cfg: RunConfig) -> int:
    x, prof = _profile(cfg)
    form = parse_form(cfg.form)
    n_range = range(cfg.n_range[0], cfg.n_range[1] + 1) if cfg.n_range else None
    with mp.workprec(max(mp.prec, 128)):
        rep = measure_exponent(form, cfg.s, x, prof, n_range, cfg.D)
    payload = rep.to_json()
    payload["config"] = cfg.to_json()
    _emit(cfg, _json_text(payload))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    suite = cfg.suite
    if suite not in checks.SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(sorted(checks.SUITES))}",
              file=sys.stderr)
        return EXIT_USAGE
    results = []
    for fn in checks.SUITES[suite]:
        if fn is checks.ring_bounds and (cfg.form or cfg.point or cfg.s):
            kw = {}
            if cfg.form:
                kw["form_spec"] = cfg.form
            if cfg.point:
                kw["points"] = (cfg.point,)
            if cfg.s:
                kw["s"] = cfg.s
            res = fn(**kw)
        else:
            res = fn()
        print(res.summary())
        results.append(res)
    ok = all(r.passed for r in results)
    if cfg.output:
        payload = {"suite": suite, "passed": ok, "criteria": [r.to_json() for r in results],
                   "config": cfg.to_json()}
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(_json_text(payload))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


HANDLERS = {"profile": cmd_profile, "series": cmd_series, "cwt": cmd_cwt,
            "exponent": cmd_exponent, "verify": cmd_verify}


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 means precision, so use 4."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="modholder", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, form=True):
        sp.add_argument("--point", help="point spec: sqrt:d, phi, e, dec:..., cf:[a0;a1,(p)], "
                                        "liouville:kappa:depth, surd:p,q,r[,s], p/q")
        sp.add_argument("--depth", type=int, default=30, help="continued-fraction depth")
        sp.add_argument("--prec-ceiling", type=int, default=None,
                        help=f"bit ceiling for kappa evaluation (env {ENV_PREC_CEILING})")
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")
        if form:
            sp.add_argument("--form", help="eisenstein:k, e2 or delta")
            sp.add_argument("--s", type=float, help="series exponent s")
            sp.add_argument("--mode", choices=("certified", "heuristic"), default="certified")

    sp = sub.add_parser("profile", help="continued-fraction profile as JSON or CSV")
    common(sp, form=False)
    sp.set_defaults(depth=20)
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("series", help="evaluate the series at a point")
    common(sp)
    sp.add_argument("--flavor", choices=FLAVORS, default="sine")
    sp.add_argument("--tol", type=float, default=1e-12)

    sp = sub.add_parser("cwt", help="wavelet coefficients on apex points or an explicit grid")
    common(sp)
    sp.add_argument("--n-range", help="apex indices, inclusive, e.g. 3:12")
    sp.add_argument("--D", type=float, default=DEFAULT_D)
    sp.add_argument("--a", help="explicit scales, comma separated (with --b)")
    sp.add_argument("--b", help="explicit offsets b - x, comma separated (with --a)")
    sp.add_argument("--check-quadrature", action="store_true",
                    help="add the quadrature oracle and its relative difference")
    sp.add_argument("--format", choices=("json", "csv"), default="csv")

    sp = sub.add_parser("exponent", help="measured and predicted exponent report")
    common(sp)
    sp.add_argument("--n-range", help="apex indices, inclusive, e.g. 3:24")
    sp.add_argument("--D", type=float, default=DEFAULT_D)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", help=f"one of {', '.join(sorted(checks.SUITES))}")
    sp.add_argument("--form")
    sp.add_argument("--point")
    sp.add_argument("--s", type=float)
    sp.add_argument("--output", "-o", help="also write a JSON summary here")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_args(ns)
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"modholder: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionExhausted as exc:
        print(f"modholder: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (DegenerateFit, RingDegenerate, InsufficientDepth) as exc:
        print(f"modholder: degenerate input: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (NonConvergent, NotCertifiable, PointSpecError) as exc:
        print(f"modholder: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
