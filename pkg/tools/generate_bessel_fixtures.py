"""Regenerate src/ehrelay/data/bessel_fixtures.json.

Reference values come from mpmath at 50 digits.  Every seventh point is also
checked against the integral K_n(x) = int_0^inf exp(-x cosh t) cosh(n t) dt.

    python tools/generate_bessel_fixtures.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50

ORDERS = list(range(0, 13)) + [16, 20, 24, 32, 40, 48, 64]
POINTS_PER_ORDER = 10
X_MAX = mp.mpf(50)
VALUE_CAP = mp.mpf("1e300")
OUT = Path(__file__).resolve().parents[1] / "src" / "ehrelay" / "data" / "bessel_fixtures.json"


def smallest_x(n):
    # keep K_{n+1}(x) representable so the recurrence check has a finite top term
    lo, hi = mp.mpf("1e-6"), X_MAX
    if mp.besselk(n + 1, lo) <= VALUE_CAP:
        return lo
    for _ in range(200):
        mid = mp.sqrt(lo * hi)
        if mp.besselk(n + 1, mid) > VALUE_CAP:
            lo = mid
        else:
            hi = mid
    return hi * mp.mpf("1.01")


def integral_k(n, x):
    # integrand exp(n t - x cosh t) peaks at t = asinh(n / x)
    peak = mp.asinh(max(n, 1) / x)
    knots = [0, peak / 2, peak, peak + 1, peak + 4, peak + 12, peak + 60]
    return mp.quad(lambda t: mp.exp(-x * mp.cosh(t)) * mp.cosh(n * t), knots)


def main():
    points = []
    for n in ORDERS:
        lo = smallest_x(n)
        for i in range(POINTS_PER_ORDER):
            x = lo * (X_MAX / lo) ** (mp.mpf(i) / (POINTS_PER_ORDER - 1))
            x = mp.mpf(float(x))  # fixture stores the double actually evaluated
            points.append((n, x, mp.besselk(n, x)))

    for n, x, value in points[::7]:
        check = integral_k(n, x)
        assert abs(check / value - 1) < mp.mpf("1e-25"), (n, x, check, value)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    records = [{"n": n, "x": float(x), "value": mp.nstr(v, 25)} for n, x, v in points]
    OUT.write_text(json.dumps({"digits": 50, "points": records}, indent=1) + "\n")
    print(f"wrote {len(records)} points to {OUT}")


if __name__ == "__main__":
    main()
