"""Per-scale local exponents at a few points.

The fitted exponent hides how the local slope log|C| / log a settles down.
This prints the apex table for E_4 with s = 7 at sqrt(2), at e and at a
point built with kappa_n = 4, then the fitted slope next to the prediction.

    python demos/local_exponents.py
"""

from mpmath import mp

from modholder import contfrac as cf
from modholder.modforms import make_eisenstein
from modholder.regularity import measure_exponent

POINTS = [("sqrt:2", 30), ("e", 30), ("liouville:4:8", 8)]


def main():
    form = make_eisenstein(4)
    mp.prec = 128
    for spec, depth in POINTS:
        x = cf.parse_point(spec)
        rep = measure_exponent(form, 7, x, cf.expand(x, depth))
        print(f"\n{spec}: mu = {rep.mu} ({rep.mu_source})")
        print(f"{'n':>3} {'log10 q_n':>10} {'kappa_n':>9} {'local':>9}")
        for smp in rep.samples:
            print(f"{smp.n:>3} {len(str(smp.q_n)) - 1:>10} {smp.kappa_n:>9.4f} {smp.local_exponent:>9.4f}")
        pred = rep.prediction("noncusp_exact")
        print(f"fit {rep.measured_alpha:.4f}, Theil-Sen {rep.robust_alpha:.4f}, "
              f"predicted {pred.value:g} (hypotheses hold: {pred.holds})")


if __name__ == "__main__":
    main()
