"""Eigen-residual of the embedded Schrodinger functional for N = 2 and 3 on several tiny grids."""
import argparse
import csv

from wfq.analytic import coherent_state
from wfq.grid import Harmonic, PhysicalParams, SpaceGrid, TimeGrid
from wfq.oracle import build_dense_action, embed
from wfq.schrodinger import SliceState, evolve
from wfq.wavefunctional import MultiplicativeFunctional


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="eigen_residual.csv")
    args = ap.parse_args()
    potential = Harmonic(1.0)
    rows = []
    for M, half_width in [(6, 4.0), (8, 4.0), (8, 5.0)]:
        for N in (2, 3):
            if M ** (N + 1) > 4096:
                continue
            space, time = SpaceGrid(-half_width, half_width, M, "periodic"), TimeGrid(1.0, N)
            params = PhysicalParams(1.0, 1.0, time.eps)
            init = SliceState.from_function(space, lambda x: coherent_state(x, 0.0, 1.0, 0.0))
            psi = MultiplicativeFunctional.from_history(evolve(init, potential, params, time))
            op = build_dense_action(space, time, potential, params)
            tensor = embed(psi)
            res = op.eigen_residual(tensor)
            lam = op.rayleigh_quotient(tensor)
            rows.append((M, half_width, N, res, lam.real, lam.imag))
            print(f"M={M} L=[-{half_width}, {half_width}] N={N}: residual {res:.4f}, rayleigh {lam:.4f}")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "half_width", "N", "residual", "re_rayleigh", "im_rayleigh"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
