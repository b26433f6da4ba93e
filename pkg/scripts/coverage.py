"""Coverage of the t = 0 prediction interval, and how wide it is, by sample size.

Regenerates straight-line decay data with Gaussian scatter; reports the share
of intervals holding a fresh decedent's value and the share holding the true
intercept (which a prediction interval over-covers by design).
"""

import argparse

import numpy as np

from roster_forensics.extrapolation import (concentration_at_death_interval, coverage_simulation,
                                            fit_decay, synthetic_decay)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--intercept", type=float, default=5.0)
    ap.add_argument("--slope", type=float, default=1.2)
    ap.add_argument("--sd", type=float, default=0.5)
    ap.add_argument("--first-hour", type=float, default=1.0)
    ap.add_argument("--last-hour", type=float, default=20.0)
    ap.add_argument("--level", type=float, default=0.95)
    ap.add_argument("--regenerations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    print("n\tcover_new\tcover_intercept\tmc_se\tmedian_half_width")
    for n in (5, 10, 20, 40):
        hours = np.linspace(args.first_hour, args.last_hour, n)
        c = coverage_simulation(args.intercept, args.slope, args.sd, hours, args.level, args.seed,
                                args.regenerations)
        widths = []
        for i in range(min(args.regenerations, 200)):
            iv = concentration_at_death_interval(
                fit_decay(synthetic_decay(args.intercept, args.slope, args.sd, hours, args.seed, i)), args.level)
            widths.append((iv.upper - iv.lower) / 2)
        print(f"{n}\t{c.new_observation:.4f}\t{c.true_intercept:.4f}\t{c.se(args.level):.4f}\t"
              f"{np.median(widths):.3f}")


if __name__ == "__main__":
    main()
