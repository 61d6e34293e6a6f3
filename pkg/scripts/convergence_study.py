"""Relative change of c_E and of the ratio when each resolution knob is
doubled on its own, over a grid of (omega*A, H/A) points.

    python3 scripts/convergence_study.py [--omega-A 1 2 3] [--H-over-A 0.2 1 5 20]
"""
import argparse
import math
import time
from dataclasses import replace

from threadpoolctl import threadpool_limits

from casimir_polder.energy import NumericalSettings, energy_ratio
from casimir_polder.profiles import HeightProfile, reduce

KNOBS = {
    "N": lambda s: replace(s, n_nodes=2 * s.n_nodes, nodes_per_wavelength=2 * s.nodes_per_wavelength),
    "L": lambda s: replace(s, half_width=2 * s.half_width, n_nodes=2 * s.n_nodes),
    "q_nodes": lambda s: replace(s, q_nodes=2 * s.q_nodes),
    "q_max": lambda s: replace(s, q_max=2 * s.q_max),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega-A", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--H-over-A", type=float, nargs="+", default=[0.2, 1.0, 5.0])
    ap.add_argument("--knobs", nargs="+", default=list(KNOBS), choices=list(KNOBS))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    base = NumericalSettings(threads=args.threads)
    print(f"{'omega*A':>8} {'H/A':>6} {'knob':>8} {'ratio':>14} {'d c_E':>9} {'d ratio':>9} {'time':>6}")
    with threadpool_limits(limits=1):
        for w in args.omega_A:
            for h in args.H_over_A:
                p = reduce(HeightProfile.sine(1.0, w, -math.pi / 2, reference="local"), h)
                ref = energy_ratio(p, base, autoscale=True)
                for knob in args.knobs:
                    t = time.perf_counter()
                    r = energy_ratio(p, KNOBS[knob](base), autoscale=True)
                    print(f"{w:>8g} {h:>6g} {knob:>8} {ref.ratio:>14.10f} {abs(r.c_E / ref.c_E - 1):>9.1e} "
                          f"{abs(r.ratio / ref.ratio - 1):>9.1e} {time.perf_counter() - t:>5.0f}s", flush=True)


if __name__ == "__main__":
    main()
