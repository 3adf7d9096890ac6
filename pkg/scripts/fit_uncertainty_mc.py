"""Monte-Carlo check of the l_phi standard error from the base-model fit.

Fits many noisy synthetic traces and compares the spread of the estimates
with the median reported standard error, for one or more noise levels and
with W fixed or free.

    python3 scripts/fit_uncertainty_mc.py --runs 200 --sigma 0.05e-6 0.2e-6
"""

import argparse

import numpy as np

from nwkit import FitConfig, TransportGeometry, WlParams, fit_wl, simulate_trace


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.05e-6])
    ap.add_argument("--l-phi", type=float, default=130e-9)
    ap.add_argument("--n-parallel", type=int, default=1,
                    help="treat sigma as array noise and fit per-wire values")
    ap.add_argument("--free-w", action="store_true")
    args = ap.parse_args()

    params = WlParams(args.l_phi, TransportGeometry(L=1.25e-6, W=20e-9))
    B = np.linspace(-8, 8, 201)
    fixed = {"L": 1.25e-6} if args.free_w else {"L": 1.25e-6, "W": 20e-9}
    cfg = FitConfig(fixed=fixed, initial={"W": 20e-9} if args.free_w else {})
    print(f"{'sigma_uS':>9} {'mean_nm':>9} {'sd_nm':>8} {'median_se_nm':>13} {'in_3se':>7}")
    for sigma in args.sigma:
        est, se = [], []
        for seed in range(args.runs):
            tr = simulate_trace(params, 0.0, B, sigma * args.n_parallel, seed)
            res = fit_wl(tr, cfg)
            est.append(res.params.l_phi)
            se.append(res.std_errors["l_phi"])
        est, se = np.array(est), np.array(se)
        inside = np.mean(np.abs(est - args.l_phi) < 3 * se)
        print(f"{sigma * 1e6:9.4g} {est.mean() * 1e9:9.3f} {est.std(ddof=1) * 1e9:8.3f} "
              f"{np.median(se) * 1e9:13.3f} {inside:7.2%}")


if __name__ == "__main__":
    main()
