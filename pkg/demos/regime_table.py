"""Operator estimates of the bi-commutator against the matching space norms.

Prints one line per exponent pattern for a tensor Hölder symbol at N = 32
and 64. The symbol is tailored to the LT/LT cell; in the other cells the
printed space norm is the estimate that cell uses, so the ratio there only
shows how far a generic symbol sits from that cell's extremisers.
"""
from bicomm.commutator import regime_table
from bicomm.czo import hilbert
from bicomm.grid import symbol_library


def main():
    H = hilbert()
    print(f"{'regime':8s} {'N':>4s} {'operator':>10s} {'space':>10s} {'ratio':>8s}")
    for N in (32, 64):
        b = symbol_library("tensor_holder", N, alpha=0.25, beta=0.25)
        for r in regime_table(b, H, H, starts=3, iters=40, seed=1):
            d = r.to_dict()
            print(f"{d['regime']:8s} {N:4d} {r.op_norm:10.4g} {r.space_norm:10.4g} {r.ratio:8.3f}")


if __name__ == "__main__":
    main()
