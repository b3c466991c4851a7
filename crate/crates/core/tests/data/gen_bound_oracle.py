"""Regenerates bound_oracle.csv: the tail bound evaluated with mpmath at
50 significant digits on 1000 seeded random (delta, C, D, n0, n1) points.

    python3 gen_bound_oracle.py > bound_oracle.csv
"""

import random

import mpmath

mpmath.mp.dps = 50


def bound(delta, c, d, n0, n1):
    delta, c, d = mpmath.mpf(delta), mpmath.mpf(c), mpmath.mpf(d)
    pre = (d * delta / (2 * mpmath.sqrt(c))) ** c
    s = sum(mpmath.mpf(n) ** (c / 2) * mpmath.exp(-n * delta**2 / 2) for n in (n0, n1))
    return min(mpmath.mpf(1), pre * s)


def main():
    rng = random.Random(20240611)
    rows = [(0.5, 2.0, 1.0, 100, 100)]
    while len(rows) < 1000:
        c = rng.choice([2.0, 4.0, 6.0, 8.0, 10.0, 16.0, 0.5, 1.5, 2.5, 1.0 / 3.0])
        d = 10 ** rng.uniform(-1, 1)
        n0 = int(10 ** rng.uniform(0, 5))
        n1 = int(10 ** rng.uniform(0, 5))
        mode = (c / min(n0, n1)) ** 0.5
        delta = mode * 10 ** rng.uniform(-0.7, 0.9)
        if max(n0, n1) * delta * delta / 2 > 1500:
            continue
        if bound(delta, c, d, n0, n1) < mpmath.mpf("1e-290"):
            continue
        rows.append((delta, c, d, n0, n1))
    print("delta,C,D,n0,n1,bound")
    for delta, c, d, n0, n1 in rows:
        value = bound(delta, c, d, n0, n1)
        print(f"{delta!r},{c!r},{d!r},{n0},{n1},{mpmath.nstr(value, 20, min_fixed=1, max_fixed=0)}")


if __name__ == "__main__":
    main()
