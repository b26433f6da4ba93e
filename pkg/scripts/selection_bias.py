"""Rejection rates of the flagged-events test as suspicion becomes presence-dependent.

Sweeps q_absent downward from q_present (blind) to 0 on the bundled ward and
reports how often the chart of flagged events looks significant although the
underlying events are pure noise.
"""

import argparse

import numpy as np

from roster_forensics.bias_sim import SelectionPolicy, apply_selection
from roster_forensics.cli import fixture
from roster_forensics.config import read_ini, scenario_from_ini


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=fixture("ward.ini"))
    ap.add_argument("--q-present", type=float, default=0.9)
    ap.add_argument("--extra-hunt", type=int, default=0)
    ap.add_argument("--replicates", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    scen = scenario_from_ini(read_ini(args.config), args.seed)
    print("q_absent\treject@0.05_full\treject@0.05_flagged\tmedian_rr_ratio\tdegenerate")
    for qa in np.linspace(args.q_present, 0.0, 7):
        pol = SelectionPolicy(args.q_present, float(qa), args.extra_hunt)
        d = apply_selection(scen, pol, args.replicates, args.threads)
        print(f"{qa:.3f}\t{np.mean(d.full_p <= 0.05):.4f}\t{np.mean(d.flagged_p <= 0.05):.4f}\t"
              f"{np.median(d.apparent_vs_true_ratio):.3f}\t{int(d.flagged_degenerate.sum())}")


if __name__ == "__main__":
    main()
