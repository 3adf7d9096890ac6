"""Optimal cross-section aspect ratio versus misfit strain and relaxation.

Starts from the shipped InAs-on-GaAs defaults and varies eps0 and k.

    python3 scripts/shape_sweep.py
"""

import argparse
from dataclasses import replace

import numpy as np

from nwkit.morphology import default_model, minimize_aspect_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=list(np.linspace(0, 0.08, 9)))
    ap.add_argument("--k", type=float, nargs="+", default=[0.1, 0.5, 2.0])
    args = ap.parse_args()

    base = default_model()
    print("eps0    " + "  ".join(f"k={k:<6g}" for k in args.k))
    for eps in args.eps:
        cells = []
        for k in args.k:
            opt = minimize_aspect_ratio(replace(base, misfit_eps0=eps, relaxation_k=k), bracket=(1e-3, 1e3))
            cells.append(f"{opt.aspect_ratio:8.4f}" + ("*" if opt.edge_minimum else " "))
        print(f"{eps:.4f}  " + "  ".join(cells))
    print("* minimum at the bracket edge")


if __name__ == "__main__":
    main()
