"""Partial-quotient frequencies against the Gauss-Kuzmin law.

For almost every x the share of partial quotients equal to i tends to
log2(1 + 1/(i(i+2))).  No single named point is known to obey this, so it is
shown here as an illustration and never asserted in the tests.  A random
dyadic rational with many bits stands in for a typical point; its expansion
follows the real number it truncates for a number of quotients that is a
fixed fraction of its bit length, and we stay well inside that.

    python demos/quotient_frequencies.py [bits]
"""

import random
import sys
from collections import Counter

from modholder import contfrac as cf


def main(bits: int = 40000):
    rng = random.Random(7)
    x = cf.rational(rng.getrandbits(bits) | 1, 1 << bits)
    depth = bits // 8
    body = x.quotients(depth)[1:]
    counts = Counter(body)
    print(f"{len(body)} quotients of a random {bits}-bit dyadic rational")
    print(f"{'i':>3} {'observed':>9} {'law':>9}")
    law_total = 0.0
    for i in range(1, 11):
        law = cf.gauss_kuzmin(i)
        law_total += law
        print(f"{i:>3} {counts[i] / len(body):>9.4f} {law:>9.4f}")
    rest = sum(v for k, v in counts.items() if k > 10) / len(body)
    print(f"{'>10':>3} {rest:>9.4f} {1 - law_total:>9.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 40000)
