"""Compiled vs pure-numpy kernels.

    python benchmarks/bench_kernels.py [--points 16384] [--steps 500] [--repeat 3]

Times both hot loops on every offspring family, reports ns per point-step and
the speedup, and checks that both backends agree to 1e-12 relative.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from gwi import make_pgf
from gwi._kernels import load_backend

FAMILIES = {
    "linear-fractional": (("linear-fractional", [1.0]), ("negative-binomial", [1.0, 1.0])),
    "poisson": (("poisson", [1.0]), ("poisson", [0.5])),
    "finite": (("finite", [0.25, 0.5, 0.25]), ("finite", [0.5, 0.5])),
}


def _specs(name):
    (fa, pa), (fb, pb) = FAMILIES[name]
    return make_pgf(fa, pa).kernel_spec(), make_pgf(fb, pb).kernel_spec()


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def bench(points: int, steps: int, repeat: int):
    backends = {name: load_backend(name) for name in ("compiled", "python")}
    theta = np.linspace(0.0, np.pi, points)
    z = 0.999 * np.exp(1j * theta)
    u = np.geomspace(1e-6, 1.0, points)
    snaps = np.array([steps], dtype=np.int64)
    rows = []
    for fam in FAMILIES:
        (ka, pa, ta), (kb, pb, tb) = _specs(fam)
        jobs = {
            "spectral_values": lambda k: k.spectral_values(ka, pa, kb, pb, z, snaps),
            "real_log_orbit": lambda k: k.real_log_orbit(ka, pa, ta, kb, pb, tb, u, snaps),
        }
        for kernel, job in jobs.items():
            t, out = {}, {}
            for name, mod in backends.items():
                out[name] = job(mod)
                t[name] = min(timeit.repeat(lambda: job(mod), number=1, repeat=repeat))
            first = lambda r: r[0] if isinstance(r, tuple) else r
            err = _rel(first(out["compiled"]), first(out["python"]))
            ns = {k: 1e9 * v / (points * steps) for k, v in t.items()}
            rows.append((fam, kernel, ns["compiled"], ns["python"], t["python"] / t["compiled"], err))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=16384)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    print(f"{'family':<18} {'kernel':<16} {'compiled ns':>12} {'python ns':>10} {'speedup':>8} {'max rel diff':>13}")
    worst = 0.0
    for fam, kernel, c, p, s, e in bench(a.points, a.steps, a.repeat):
        worst = max(worst, e)
        print(f"{fam:<18} {kernel:<16} {c:>12.2f} {p:>10.2f} {s:>8.1f} {e:>13.2e}")
    print(f"backends agree: {worst <= 1e-12} (worst {worst:.2e})")


if __name__ == "__main__":
    main()
