"""Contrast the sign-condition regime with the global one.

With gamma1 = 1, gamma2 = -1 larger data escape sooner; with gamma2 = gamma1/2
the same data stay bounded.  Writes dichotomy.svg next to the working directory.

Run: python3 demos/blowup_dichotomy.py
"""

import math

from kvblowup.harness import SweepAxis, emit_plot, run_sweep
from kvblowup.solver import ModelParams, SimConfig
from kvblowup.spectral import build_grid

ETAS = (1.0, 2.0, 4.0, 8.0, 16.0)


def sweep(gamma2):
    cfg = SimConfig(build_grid(512, 16 * math.pi), ModelParams(0.0, 1.0, gamma2), eta=1.0,
                    t_end=1.0, dt=1e-3, rtol=1e-6, output_every=50)
    return run_sweep(cfg, SweepAxis("eta", ETAS, workers=2))


def main():
    escape = sweep(-1.0)
    calm = sweep(0.5)
    print("  eta   gamma2=-1 escape   gamma2=1/2 final L2")
    for (eta, blew, t, _), (_, blew2, _, l2) in zip(escape, calm):
        tag = f"{t:.5f}" if blew else "none"
        print(f"{eta:5g}   {tag:>16s}   {l2:12.4g}{'  (escaped!)' if blew2 else ''}")
    path = emit_plot({"escape time": ([r[0] for r in escape], [r[2] for r in escape])}, "dichotomy.svg",
                     logy=True, xlabel="eta", ylabel="t")
    print(f"\nplot: {path}")


if __name__ == "__main__":
    main()
