"""Spurious attributions from certificate times snapped to handovers.

Varies the clock-in lead / clock-out lag of a day-shift nurse and prints the
mean excess of deaths attributed by recorded time over those by true time.
"""

import argparse

from roster_forensics.timeline import (RecordingRegime, clock_windows, day_night_rota, sign_test,
                                       simulate_ward_deaths)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rate", type=float, default=1.0, help="deaths per day")
    ap.add_argument("--days", type=int, default=28)
    ap.add_argument("--replicates", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--no-midnight", action="store_true")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    regime = RecordingRegime.handovers([420, 1140], midnight=not args.no_midnight)
    shifts = day_night_rota(args.days, {"P": "day", "Q": "night"})
    print("lead_lag_min\tnurse\ttrue_mean\trecorded_mean\texcess_mean\tsign_p")
    for slack in (0, 15, 30, 60, 120):
        rep = simulate_ward_deaths(args.rate, args.days, regime, shifts, clock_windows(shifts, slack, slack),
                                   args.seed, args.replicates, threads=args.threads)
        for j, n in enumerate(rep.nurses):
            ex = rep.spurious_excess[:, j]
            print(f"{slack}\t{n}\t{rep.true_counts[:, j].mean():.2f}\t{rep.recorded_counts[:, j].mean():.2f}\t"
                  f"{ex.mean():+.2f}\t{sign_test(ex):.2g}")


if __name__ == "__main__":
    main()
