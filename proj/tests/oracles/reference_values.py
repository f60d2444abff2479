"""Independent reference values frozen into the C++ tests.

Uses closed forms (Bernoulli KL divergence for two-level profiles) and
brute-force enumeration; nothing here shares code with the C++ library. Run: python3 tests/oracles/reference_values.py
"""
import itertools
import math

import numpy as np
from scipy.optimize import brentq
from scipy.stats import binom


def kl(b, q):
    out = 0.0
    if b > 0:
        out += b * math.log(b / q)
    if b < 1:
        out += (1 - b) * math.log((1 - b) / (1 - q))
    return out


def lprime_two_level(a, lo, hi, q_hi):
    # 1 - P takes values lo and hi (lo < hi); hi with probability q_hi.
    b = (a - lo) / (hi - lo)
    return kl(b, q_hi)


def lprime_grid(a, vals, probs, n=10_000, span=200.0):
    th = np.linspace(-span, span, n)
    m = np.log(sum(p * np.exp(th * v) for v, p in zip(vals, probs)))
    return float(np.max(th * a - m))


def steady_mean(f, wmax=400):
    P = np.zeros((wmax, wmax))
    for w in range(1, wmax + 1):
        P[w - 1, min(w + 1, wmax) - 1] += 1 - f
        P[w - 1, (w + 1) // 2 - 1] += f
    A = P.T - np.eye(wmax)
    A[-1, :] = 1.0
    rhs = np.zeros(wmax)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    return float(pi @ np.arange(1, wmax + 1))


def fchan_enum(M, C, levels):
    # P[total successes < w], enumerating every level assignment.
    n = M * C
    out = np.zeros(n + 1)
    for combo in itertools.product(levels, repeat=M):
        weight = math.prod(p for _, p in combo)
        pmf = np.array([1.0])
        for p, _ in combo:
            pmf = np.convolve(pmf, binom.pmf(np.arange(C + 1), C, p))
        cdf = np.concatenate([[0.0], np.cumsum(pmf)[:-1]])
        out += weight * cdf
    return out


def beta_root(M, C, rho, p1, q1):
    # Bimodal: P = p1 w.p. q1, else 1. 1 - P in {0, 1 - p1}.
    def lp(a):
        if a <= 0 or a >= 1 - p1:
            return math.inf
        return lprime_two_level(a, 0.0, 1 - p1, q1)

    def g(beta):
        return 1 / beta - math.exp(-M * lp(1 - rho * beta / (M * C)))

    mean = q1 * p1 + (1 - q1)
    lo = p1 * M * C / rho**2
    hi = mean * M * C / rho**2
    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-15), lo, hi


if __name__ == "__main__":
    print("lprime bimodal(0.05@0.5,0.95@0.5) a=0.6 closed:", repr(lprime_two_level(0.6, 0.05, 0.95, 0.5)))
    print("lprime same, 1e4 grid:", repr(lprime_grid(0.6, [0.95, 0.05], [0.5, 0.5])))
    print("lprime bimodal(0.1@0.1,1@0.9) a=0.5:", repr(lprime_two_level(0.5, 0.0, 0.9, 0.1)))
    for f in (0.3, 0.1, 0.01):
        print("E[W] f=%g:" % f, repr(steady_mean(f)))
    tab = fchan_enum(2, 3, [(0.1, 0.1), (1.0, 0.9)])
    print("fchan M=2 C=3 bimodal p1=0.1:", [repr(float(x)) for x in tab])
    for M, C in ((8, 9), (4, 18), (16, 40)):
        try:
            print("beta M=%d C=%d rho=1.2:" % (M, C), repr(beta_root(M, C, 1.2, 0.1, 0.1)))
        except ValueError as e:
            print("beta M=%d C=%d: no root (%s)" % (M, C, e))
