#!/usr/bin/env python3
"""Divergence walkthrough: three world-vs-mind pairings, one report each.

* optimal: the mind codes symbols at exactly their information content
* unicorn: a near-impossible symbol kept cheaply accessible (unsound)
* malinois: a common symbol behind a long description (incomplete)

Example:

    python scripts/divergence_scenarios.py --tau 2.0
"""

import argparse

from unexpect import (
    CodeLengthTable,
    DiscreteDistribution,
    MachinePair,
    bits_from_probability,
    divergences,
)


def show(name, pair, tau):
    report = divergences(pair, tau=tau)
    print(f"--- {name}")
    print(f"  H={report.h:.4f}  V={report.v:.4f}  V_hat={report.v_hat:.4f}  "
          f"V_star={report.v_star:.4f}  D={report.d:.4f}")
    print(f"  d_wrel={report.d_wrel:+.4f}  d_abs={report.d_abs:+.4f}  "
          f"d_drel={report.d_drel:+.4f}")
    per_symbol = ", ".join(
        f"{sym}={u:+.3f}" for sym, u in zip(report.support, report.per_symbol_u)
    )
    print(f"  u: {per_symbol}")
    print(f"  unsound={list(report.unsound_symbols)}  "
          f"incomplete={list(report.incomplete_symbols)}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tau", type=float, default=2.0,
                        help="easy/hard threshold in bits")
    parser.add_argument("--unicorn-mass", type=float, default=1e-6)
    args = parser.parse_args()

    world = DiscreteDistribution(("cat", "dog", "fox"), (0.5, 0.375, 0.125))
    optimal = CodeLengthTable(
        world.support, tuple(bits_from_probability(m) for m in world.mass)
    )
    show("optimal encoding (every divergence vanishes)",
         MachinePair(world, optimal), args.tau)

    q = args.unicorn_mass
    unicorn_world = DiscreteDistribution(("common", "unicorn"), (1 - q, q))
    unicorn_mind = CodeLengthTable(("common", "unicorn"), (1.0, 1.0))
    show(f"unicorn (world mass {q:g}, one-bit description)",
         MachinePair(unicorn_world, unicorn_mind), args.tau)

    filler = bits_from_probability(1.0 - 2.0 ** -12)
    malinois_world = DiscreteDistribution(("dog", "malinois"), (0.7, 0.3))
    malinois_mind = CodeLengthTable(("dog", "malinois"), (filler, 12.0))
    show("malinois (common in the world, 12-bit description)",
         MachinePair(malinois_world, malinois_mind), args.tau)


if __name__ == "__main__":
    main()
