"""Bifurcation diagram lambda(rho) for the radial Gelfand problem.

For f(u) = u the branch of regular solutions is parametrised by rho = u(0).
In the oscillatory regime (here the Laplacian in d = 3, i.e. k = 1) the
curve winds around lambda* = 2 with shrinking amplitude; in the node regime
(d = 11) it approaches lambda* monotonically from below.

    python demos/bifurcation_diagram.py [--plot out.png]
"""
import argparse

import numpy as np

from gelfand import (detect_oscillation, lambda_sharp, make_khessian, make_nonlinearity, sweep)


def describe(d, k, rho):
    params = make_khessian(d, k)
    curve = sweep(params, make_nonlinearity("identity"), rho)
    n, amps = detect_oscillation(curve)
    print(f"(d={d}, k={k})  lambda* = {curve.lambda_star:g}")
    print(f"  sign changes of lambda - lambda*: {n}")
    for (a, b), amp in zip(curve.sign_changes, list(amps) + [None]):
        extra = f", next excursion {amp:.3e}" if amp is not None else ""
        print(f"    crossing in rho in [{a:.4f}, {b:.4f}]{extra}")
    print(f"  lambda# (largest lambda with a solution) ~ {lambda_sharp(curve):.6f}")
    print(f"  lambda(rho_max) - lambda* = {curve.lam[-1] - curve.lambda_star:.3e}")
    return curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plot", help="save a figure (needs matplotlib)")
    args = ap.parse_args()

    rho = np.geomspace(0.1, 30, 256)
    curves = [describe(3, 1, rho), describe(11, 1, rho)]

    if args.plot:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for ax, c in zip(axes, curves):
            ax.plot(c.lam, c.rho)
            ax.axvline(c.lambda_star, ls="--", c="gray")
            ax.set_xlabel("lambda")
            ax.set_ylabel("rho = u(0)")
            ax.set_yscale("log")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)
        print(f"wrote {args.plot}")


if __name__ == "__main__":
    main()
