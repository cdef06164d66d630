"""Error decay of the bi-parameter weak factorization as ``A`` grows.

Uses a Haar function on a small rectangle at N = 256 and the Hilbert kernel
on both axes. The fitted log-log slope of the error ratio is close to -2
(second order cancellation of the smooth kernel), and ``|h| / (A^2 |f|)``
stays near one.
"""
from bicomm.cli import _sweep_problem
from bicomm.czo import hilbert
from bicomm.factorization import a_sweep


def main():
    As = (4, 8, 16, 32)
    f, R = _sweep_problem(256, As)
    H = hilbert()
    sw = a_sweep(f, R, H, H, As)
    print(f"{'A':>4s} {'error ratio':>12s} {'|h|/(A|f|)':>11s} {'|h|/(A^2|f|)':>13s} {'residual':>10s}")
    for r in sw["rows"]:
        print(f"{r['A']:4.0f} {r['error_ratio']:12.4e} {r['C_h_A']:11.3f} {r['C_h_Ad']:13.3f} {r['residual']:10.1e}")
    print(f"log2 slope of the error ratio: {sw['slope']:.3f}")


if __name__ == "__main__":
    main()
