#!/usr/bin/env python3
"""Regenerates the Geometric weight table: round(1024 * 1.25**-n), halves up.

The output is pasted into tests/sched_core_test.cc as the expected table.
"""
from fractions import Fraction


def weight(nice: int) -> int:
    exact = Fraction(1024) * Fraction(4, 5) ** nice
    return int(exact + Fraction(1, 2))  # floor(x + 1/2); x > 0


def main() -> None:
    weights = [weight(n) for n in range(-20, 20)]
    for i in range(0, 40, 8):
        print("    " + ", ".join(str(w) for w in weights[i:i + 8]) + ",")


if __name__ == "__main__":
    main()
