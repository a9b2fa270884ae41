"""``gwi`` command line.

    gwi run --config <path> [--suite <name>] [--parallel] [--out <dir>]
    gwi oracle --family conjugate --sigma <v> --gamma <v> --n <v>

Exit status: 0 when every suite check passes, 2 when a check fails, 1 for a
configuration or model error.  ``GWI_SEED`` overrides the configured seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import _kernels, reports
from .config import SUITES, ConfigError, ExperimentConfig, load_config
from .errors import GwiError
from .suites import CLAIMS, SUITE_FUNCS, SuiteResult

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


def _model_meta(cfg: ExperimentConfig) -> dict:
    m = cfg.model
    return {
        "offspring": cfg.model_spec["offspring"],
        "immigration": cfg.model_spec["immigration"],
        "alpha": m.alpha,
        "beta": m.beta,
        "gamma": m.gamma,
        "sigma": m.sigma,
        "rho": m.rho,
        "R": m.radius,
    }


def write_report(cfg: ExperimentConfig, res: SuiteResult, out: Path) -> list[Path]:
    meta = {
        "suite": res.name,
        "claim": CLAIMS[res.name],
        "model": _model_meta(cfg),
        "K": res.meta.get("K", cfg.K),
        "mass_defect_ceiling": res.meta.get("mass_defect_ceiling"),
        "seed": cfg.seed,
        "passed": res.passed,
    }
    paths = []
    if cfg.fmt in ("csv", "both"):
        p = reports.write_csv(out / f"{res.name}.csv", meta, res.columns, res.rows)
        paths.append(p)
    if cfg.fmt in ("json", "both"):
        p = reports.write_json(out / f"{res.name}.json", {**meta, **res.to_dict()})
        paths.append(p)
    for p in paths:
        reports.write_sidecar(p, {"config": cfg.source, "backend": _kernels.BACKEND})
    return paths


class Mapper:
    """Order-preserving map, on a process pool when ``workers > 1``."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, workers)
        self._pool = ProcessPoolExecutor(max_workers=self.workers) if self.workers > 1 else None

    def __call__(self, fn, items):
        if self._pool is None:
            return [fn(i) for i in items]
        return list(self._pool.map(fn, items))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()


def run(cfg: ExperimentConfig, parallel: bool = False) -> int:
    out = cfg.out
    failed = False
    mapper = Mapper(max(2, os.cpu_count() or 1) if parallel else 1)
    try:
        for name in cfg.suites:
            res = SUITE_FUNCS[name](cfg, cfg.suite(name), mapper)
            write_report(cfg, res, out)
            status = "PASS" if res.passed else "FAIL"
            print(f"{status} {name}: {sum(c.passed for c in res.checks)}/{len(res.checks)} checks")
            for c in res.checks:
                if not c.passed:
                    print(f"    failed: {c.name} {c.detail}".rstrip())
            failed |= not res.passed
    finally:
        mapper.close()
    return EXIT_FAILED if failed else EXIT_OK


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, suite=args.suite, out=args.out)
        return run(cfg, parallel=args.parallel)
    except (ConfigError, GwiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _cmd_oracle(args) -> int:
    from . import oracle

    if args.family != "conjugate":
        print("error: only the conjugate family has a closed form", file=sys.stderr)
        return EXIT_ERROR
    try:
        table = oracle.reference_values(args.sigma, args.gamma, args.n, args.jmax)
    except GwiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(table, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gwi", description="critical branching with immigration: exact laws, limits and bounds")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run verification suites from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--suite", choices=(*SUITES, "all"))
    r.add_argument("--parallel", action="store_true", help="evaluate independent grid points concurrently")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.set_defaults(func=_cmd_run)

    o = sub.add_parser("oracle", help="print closed-form reference values")
    o.add_argument("--family", default="conjugate")
    o.add_argument("--sigma", type=float, required=True)
    o.add_argument("--gamma", type=float, required=True)
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--jmax", type=int, default=10)
    o.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage problems are config errors here
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
