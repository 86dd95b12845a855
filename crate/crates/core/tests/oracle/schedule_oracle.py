"""High-precision reference values for the chain schedule.

Run with `python3 schedule_oracle.py`; the printed values are frozen into
`tests/schedule.rs`. Uses 60 decimal digits of working precision.
"""
from mpmath import mp, mpf, log, exp, sqrt, ceil, log1p

mp.dps = 60


def schedule(kbar, delta):
    alpha = delta * log(kbar)
    eps = log(alpha) / (120 * alpha)
    d_real = sqrt(alpha) * exp(80 * alpha * (1 + eps) / 4)
    d = ceil(d_real) if d_real < mpf(2) ** 53 else d_real
    u = alpha / (2 * d * d)
    s_star = ceil(kbar * (1 - u))
    return alpha, eps, d_real, d, u, s_star


def inequalities(kbar, delta):
    alpha, eps, _, d, u, _ = schedule(kbar, delta)
    k = kbar + 1
    i1 = (1 / k <= u) and (u < mpf(1) / 2)
    i2 = d * log(1 + 40 * alpha) >= -2 * log(u)
    i3 = eps > 0 and 1 / kbar <= eps / 9
    i4 = 1 / (80 * d * d) <= (eps / 3) * u
    i5 = u + (eps / 3) * (1 + eps / 3) * u * u <= (eps / 3) ** 2
    return i1, i2, i3, i4, i5


def hoeffding(kbar, delta):
    alpha, eps, d_real, d, u, _ = schedule(kbar, delta)
    rate = 2 * eps ** 2 * u ** 2 / (9 * d ** 2)
    return kbar * rate, exp(-kbar * rate)


for kbar, delta in [(mpf(10) ** 60, mpf(1) / 120), (mpf(10) ** 300, mpf(1) / 120),
                    (mpf(10) ** 300, mpf(1) / 240)]:
    print("kbar =", mp.nstr(kbar, 5), "delta =", mp.nstr(delta, 8))
    for name, v in zip(["alpha", "eps", "delta_real", "delta", "u", "s_star"], schedule(kbar, delta)):
        print("  ", name, mp.nstr(v, 17))
    print("   ineq", inequalities(kbar, delta))
    e, h = hoeffding(kbar, delta)
    print("   exponent", mp.nstr(e, 17), "bound", mp.nstr(h, 17))
