#!/usr/bin/env python3
"""Ensemble structure function of baseline screens against 6.88 (r/r0)^(5/3)."""

import argparse

import numpy as np

from revar.kolmogorov import TurbulenceParams, generate_screen, kolmogorov_structure_function, structure_function


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--screens", type=int, default=200)
    ap.add_argument("--r0", type=float, default=0.1)
    ap.add_argument("--dx", type=float, default=0.01)
    ap.add_argument("--subharmonics", type=int, default=6)
    args = ap.parse_args()

    p = TurbulenceParams(r0=args.r0, N=args.n, dx=args.dx)
    max_sep = args.n // 8
    D = np.zeros(max_sep + 1)
    for k in range(args.screens):
        D += structure_function(generate_screen(p, k, args.subharmonics), max_sep)
    D /= args.screens
    print("sep_px  r[m]      D/theory")
    for s in range(1, max_sep + 1):
        print(f"{s:6d}  {s * p.dx:.4f}  {D[s] / kolmogorov_structure_function(s * p.dx, p.r0):.4f}")


if __name__ == "__main__":
    main()
