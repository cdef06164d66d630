"""Hölder in x2 of BMO in x1 against BMO in x1 of Hölder in x2.

The library symbol ``unexpected_order`` stacks bumps so that the first
quantity stays bounded while the second grows with the number of bumps.
The last column is the power-method estimate of the bi-commutator norm for
the EQ/LT exponents at N = 128. At this resolution it still grows with the
bump count, so compare it across resolutions rather than read it as a
plateau.
"""
from bicomm import spaces
from bicomm.commutator import regime_profiles, regime_table
from bicomm.czo import hilbert
from bicomm.grid import symbol_library

BETA = 0.25


def main():
    N = 128
    H = hilbert()
    prof = [p for p in regime_profiles() if p.regimes == ("EQ", "LT")]
    print(f"{'bumps':>5s} {'swapped':>8s} {'naive':>8s} {'operator':>9s}")
    for bumps in (2, 4, 8, 16, 32):
        b = symbol_library("unexpected_order", N, beta=BETA, bumps=bumps)
        swapped = spaces.holder_bmo_norm(b, BETA, axis=2).value
        naive = spaces.bmo_holder_norm(b, BETA).value
        est = regime_table(b, H, H, prof, starts=3, iters=40, seed=1)[0].op_norm
        print(f"{bumps:5d} {swapped:8.3f} {naive:8.3f} {est:9.3f}")


if __name__ == "__main__":
    main()
