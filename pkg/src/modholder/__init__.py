"""Pointwise regularity of trigonometric series built from modular form coefficients.

Modules:
    contfrac    exact continued fractions and approximation exponents of real points
    modforms    Eisenstein series, Delta, SL2(Z) reduction and evaluation
    series      direct summation of M_{k,s}(x) with a certified tail
    wavelet     the wavelet (x+i)^-(s+1), its transform and numerical oracles
    regularity  exponent measurement, predictions and two-sided ring bounds
    checks      verification suites
    cli         command-line front end
"""

from .contfrac import DiophantineProfile, RealPoint, construct_prescribed, expand, parse_point
from .modforms import ModularForm, eval_form, make_delta, make_eisenstein, parse_form
from .regularity import measure_exponent, predict_exponent
from .series import SeriesSpec, eval_series
from .wavelet import cwt_closed, cwt_quadrature

__version__ = "0.1.0"

__all__ = [
    "DiophantineProfile", "RealPoint", "construct_prescribed", "expand", "parse_point",
    "ModularForm", "eval_form", "make_delta", "make_eisenstein", "parse_form",
    "measure_exponent", "predict_exponent", "SeriesSpec", "eval_series",
    "cwt_closed", "cwt_quadrature", "__version__",
]
