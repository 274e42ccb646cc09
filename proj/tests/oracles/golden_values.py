#!/usr/bin/env python3
"""Independent high-precision recomputation of the frozen expected values
used by the C++ unit and acceptance tests (mpmath, 50 digits)."""
from mpmath import mp, mpf, exp, ln, log1p, ceil, floor, matrix

mp.dps = 50
LN2 = ln(2)


def log2(v):
    return ln(v) / LN2


def exp_block_series(lam, d, t, terms=80):
    # term-by-term series of exp((lam*I + N) t)
    J = matrix(d, d)
    for i in range(d):
        J[i, i] = lam
        if i + 1 < d:
            J[i, i + 1] = 1
    acc = matrix(d, d)
    term = matrix(d, d)
    for i in range(d):
        term[i, i] = 1
    for k in range(terms):
        acc += term
        term = term * J * t / (k + 1)
    return acc


def tt_stopwait(tr, n, sigma, gamma, T):
    return (tr + n * sigma) * (floor(gamma / T) + 1) / LN2


def tt_pipelined(tr, gamma, T):
    return tr / LN2 if gamma < T else tr * (gamma / T) / LN2


def et_necessary(a, sigma, gamma, rho0, nu):
    arg = log2((exp(a * gamma) - 1) / (rho0 * exp(-sigma * gamma)))
    return (a + sigma) / (ln(nu) + ln(2 + exp(sigma * gamma) / rho0)) * max(0, arg)


def et_approx(a, sigma, gamma, rho0):
    br = 1 + log2(exp(a * gamma) - 1) / (-log2(rho0 * exp(-sigma * gamma)))
    return (a + sigma) / LN2 * max(0, br)


def et_sufficient(a, sigma, gamma, rho0, b):
    if gamma == 0:
        return mpf(0)
    br = 1 + log2(b * gamma * (a + sigma) / log1p(rho0 * exp(-(sigma + a) * gamma)))
    return (a + sigma) / (-ln(rho0 * exp(-sigma * gamma))) * max(0, br)


def main():
    M = exp_block_series(mpf(1), 2, mpf(1))
    print("exp_block(1,2,1)", M[0, 0], M[0, 1], M[1, 1])
    print("h(diag(1,2))", 3 / LN2)
    print("h(J(1,2))", 2 / LN2)
    print("closed loop e^-2", exp(-2))
    print("et_trigger scalar 0.5*ln2", ln(2) / 2)
    a, s, g, r, b = mpf(1), mpf("0.5"), mpf(1), mpf("0.5"), mpf(2)
    delta = ln(1 + r * exp(-(s + a) * g)) / (b * (a + s))
    N = ceil(g / delta) + 1
    print("codec delta", delta, "N", N, "g", 1 + ceil(log2(N)))
    delta2 = ln(1 + r * exp(-(s + a) * mpf("0.01"))) / (b * (a + s))
    print("codec gamma=0.01 delta", delta2, "N", ceil(mpf("0.01") / delta2) + 1)
    print("tt_packet scalar", (1 + s) * 3 * mpf("0.5") / LN2)
    print("tt_packet n=2", (3 + 2 * s) * 1 * mpf("0.5") / LN2)
    e15 = exp(mpf("0.15"))
    print("cascade bound", 1 * mpf("1.5") * mpf("0.25") / ((mpf("0.25") + e15) * (e15 - 1)))
    print("bc_lower", 2 * mpf("1.5") / LN2 + log2(2))
    print("tt_pipelined", tt_pipelined(1, mpf("0.3"), mpf("0.5")), tt_pipelined(1, 2, 1))
    print("tt_stopwait", tt_stopwait(1, 1, s, 1, mpf("0.5")))
    print("et_necessary g=0.2", et_necessary(1, 1, mpf("0.2"), r, 1), "g=1", et_necessary(1, 1, 1, r, 1))
    print("et_sufficient", et_sufficient(a, s, g, r, b))
    for gam in ["0", "0.1", "0.5", "1"]:
        gm = mpf(gam)
        print(" et_sufficient gamma", gam, et_sufficient(a, s, gm, r, b),
              "min interevent", -ln(r * exp(-s * gm)) / (a + s))
    print("asymptote a=1 s=0.5", (a + s) / LN2 * (1 + a / s))
    for lam in [mpf("0.5"), mpf(1), mpf(2), LN2]:
        for sig in [mpf("0.5"), mpf(1)]:
            asym = (lam + sig) / LN2 * (1 + lam / sig)
            gm = 50 / lam
            print(" asym lam", float(lam), "sig", float(sig),
                  "approx rel", float(et_approx(lam, sig, gm, r) / asym - 1),
                  "sufficient rel", float(et_sufficient(lam, sig, gm, r, b) / asym - 1))


if __name__ == "__main__":
    main()
