"""Writes golden/golden.json from closed-form oracles for f(x) = 2x.

For f = 2x the model ODE is Legendre's equation of degree 1, whose solutions
are A*r + B*(r*artanh(r) - 1); the disk solution is M*cos(s), so h(M) = M.
"""
import datetime
import json
import sys

import mpmath as mp

mp.mp.dps = 50
F = "affine:2,0"
STAMP = datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def model(R, M):
    R = mp.mpf(R)
    dq = lambda r: mp.atanh(r) + r / (1 - r * r)
    q = lambda r: r * mp.atanh(r) - 1
    # U = A r + B q(r), U'(R) = 0, U(R) = M
    B = M / (q(R) - R * dq(R))
    A = -B * dq(R)
    U = lambda r: A * r + B * q(r)
    dU = lambda r: A + B * dq(r)
    edge = 1 - mp.mpf(10) ** -30
    r2 = mp.findroot(U, (R + mp.mpf(10) ** -20, edge), solver="anderson")
    r1 = mp.findroot(U, (-edge, R - mp.mpf(10) ** -20), solver="anderson")
    grad = lambda r: mp.sqrt(1 - r * r) * abs(dU(r))
    return r1, r2, grad(r1), grad(r2)


def entry(quantity, value, tol, oracle, M=1.0, R=None):
    return {"f": F, "M": M, "R": R, "quantity": quantity, "value": float(value),
            "tolerance": tol, "oracle": oracle, "timestamp": STAMP}


def main(path):
    legendre = "closed form U = A*r + B*(r*artanh r - 1), zeros by 50-digit findroot"
    entries = []
    for R in (0.0, 0.5):
        r1, r2, g1, g2 = model(R, 1)
        entries += [entry("r1", r1, 1e-9, legendre, R=R), entry("r2", r2, 1e-9, legendre, R=R),
                    entry("grad_r1", g1, 1e-8, legendre + "; sqrt(1-r^2)|U'|", R=R),
                    entry("grad_r2", g2, 1e-8, legendre + "; sqrt(1-r^2)|U'|", R=R)]
    _, _, _, g0 = model(0.0, 1)
    for M in (0.5, 1.0, 2.0):
        entries += [entry("h", M, 1e-8, "disk solution M*cos(s) gives h(M) = M", M=M),
                    entry("s_M", mp.pi / 2, 1e-8, "first zero of M*cos(s)", M=M),
                    entry("tau0", g0 ** 2, 1e-8, "grad_r2(R=0)^2 / h^2, invariant under M for linear f", M=M)]
    with open(path, "w") as out:
        json.dump({"version": "0.4.0", "entries": entries}, out, indent=2)
        out.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "golden/golden.json")
