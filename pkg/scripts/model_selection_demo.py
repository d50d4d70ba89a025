#!/usr/bin/env python3
"""Model selection demo: simulate a three-regime signal, sweep (K, p) by
BIC, and print the score table with the winning configuration marked."""
import argparse

from rhlpseg.rhlp import select_model
from rhlpseg.simulate import SCENARIOS, simulate_piecewise


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default="situation1",
                        choices=sorted(SCENARIOS))
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--k-max", type=int, default=5)
    parser.add_argument("--p-max", type=int, default=3)
    parser.add_argument("--q", type=int, default=1)
    args = parser.parse_args()

    signal, _ = simulate_piecewise(SCENARIOS[args.scenario], args.n, args.seed)
    best, table = select_model(
        signal,
        K_range=range(1, args.k_max + 1),
        p_range=range(args.p_max + 1),
        q=args.q,
        seed=args.seed,
    )

    print(f"{'K':>3}{'p':>3}{'q':>3}{'BIC':>14}{'log-lik':>14}  note")
    for entry in table:
        note = entry.error or ""
        if entry.bic is not None and entry.K == best.params.K and entry.p == best.params.p:
            note = "<-- selected"
        bic = "failed" if entry.bic is None else f"{entry.bic:.2f}"
        ll = "" if entry.log_likelihood is None else f"{entry.log_likelihood:.2f}"
        print(f"{entry.K:>3}{entry.p:>3}{entry.q:>3}{bic:>14}{ll:>14}  {note}")


if __name__ == "__main__":
    main()
