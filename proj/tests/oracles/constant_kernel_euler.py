"""Explicit-Euler reference for the size-capped discrete coagulation system.

Constant kernel K = 2, monodisperse start n_1(0) = 1, absorbing cap (pairs whose
sum exceeds the cap leave the system). Prints the values frozen into
tests/oracles/frozen_values.hpp.
"""
import numpy as np

K = 2.0
CAP = 256
DT = 1e-6
REPORT = [0.5, 1.0, 2.0, 5.0]


def main():
    n = np.zeros(CAP)
    n[0] = 1.0
    t = 0.0
    step = 0
    out = {}
    targets = [int(round(r / DT)) for r in REPORT]
    for target, r in zip(targets, REPORT):
        while step < target:
            m0 = n.sum()
            conv = np.convolve(n, n)[: CAP - 1]
            dn = -K * n * m0
            dn[1:] += 0.5 * K * conv
            n += DT * dn
            step += 1
        out[r] = (n.sum(), n[0], n[1], (np.arange(1, CAP + 1) * n).sum())
    for r, (m0, n1, n2, m1) in out.items():
        print(f"t={r}: M0={m0:.17g} n1={n1:.17g} n2={n2:.17g} M1={m1:.17g}")


if __name__ == "__main__":
    main()
