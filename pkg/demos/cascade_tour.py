"""Walk through the exact frequency cascade and its induction step.

Run: python3 demos/cascade_tour.py [n_max]
"""

import sys

from kvblowup.cascade import (
    T_STAR,
    cascade_sequence,
    constants,
    induction_step_check,
    log2_f_at_t_star,
    series_partial_sums,
    t_grid,
)


def main(n_max=6):
    c = constants()
    print(f"T* = {c.t_star:.12f}   c0 = 2^{c.log2_c0}   c1_min = {c.c1_min}")

    # each level doubles its support and halves (at worst) its L2 mass
    print("\n n  support        L2^2 (exact)           L2^2 * 2^n")
    for lv in cascade_sequence(n_max):
        print(f"{lv.n:2d}  [{int(lv.supp_lo):4d},{int(lv.supp_hi):4d}]  {float(lv.l2sq):.15e}  {float(lv.l2sq) * 2**lv.n:.6f}")

    print("\nlog2 of the lower envelope at T*:")
    print("  " + "  ".join(f"n={n}:{log2_f_at_t_star(n)}" for n in range(0, n_max + 1)))

    half = float(c.c1_min / 2)
    print(f"\ninduction step at gamma1 - gamma2 = {half:g} (the smallest admissible gap)")
    for n in range(1, n_max + 1):
        worst = min(induction_step_check(n, float(t), half - 1, -1.0).min_slack for t in t_grid(8))
        print(f"  n={n}: min slack {worst:7.3f} bits")

    print("\nnorm series at s = 1:")
    for le in (41.0, 42.5, 43.0):
        r = series_partial_sums(1.0, le, 24)
        print(f"  log2 eta^2 = {le:4.1f}: {r.verdict:12s} (above threshold: {r.above_threshold})")
    print(f"\nall checks evaluated at times in [T*, 2T*] = [{T_STAR:.4f}, {2 * T_STAR:.4f}]")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 6)
