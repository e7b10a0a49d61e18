"""Command-line front end: ``wormcover {prove,minimize,validate,render,shapes}``.

Human-readable text goes to stdout, followed by a ``key=value`` summary block
that is also written to ``--report`` when given.  Exit status is 0 exactly when
every executed check passed.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .bounds import (DEFAULT_CONSTANTS, DEFAULT_DOMAIN, DEFAULT_EPS, Report, check_diameter,
                     check_domain_reduction, check_segment_region, lipschitz_derivations,
                     validate_lipschitz)
from .boxsearch import Box5, SearchError, SearchOptions, run_search
from .checkpoint import CheckpointError
from .configuration import ConfigParams, kernel_data, objective_f
from .render import render_file
from .shapes import SpecFileError, parse_experiment, run_case, write_results

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    threshold: float = 0.1
    workers: int = 1
    epsilon_fp: float = DEFAULT_EPS
    checkpoint_path: Optional[str] = None
    progress_every: int = 10_000_000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.threshold <= 0.2:
            raise UsageError(f"threshold must lie in (0, 0.2], got {self.threshold}")
        if self.workers < 1:
            raise UsageError(f"workers must be >= 1, got {self.workers}")
        if not self.epsilon_fp >= 0:
            raise UsageError(f"eps must be non-negative, got {self.epsilon_fp}")
        if self.progress_every < 1:
            raise UsageError("progress cadence must be >= 1")


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"{what}: not a comma-separated list of numbers: {text!r}") from None
    if len(vals) != n:
        raise UsageError(f"{what}: expected {n} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"{what}: values must be finite")
    return vals


def _fmt_params(p: Optional[ConfigParams]) -> str:
    if p is None:
        return "nan,nan,nan,nan,nan"
    return ",".join(repr(float(t)) for t in p.as_array())


def _emit(kv: list[str], report: Optional[str]):
    print("--- summary ---")
    for line in kv:
        print(line)
    if report:
        Path(report).write_text("\n".join(kv) + "\n")


def local_minimum(start, seed: int = 0) -> tuple[ConfigParams, float]:
    """Nelder-Mead polish of f from ``start``; returns the canonical representative."""
    data = kernel_data()
    x0 = np.ascontiguousarray(np.asarray(start, dtype=float))
    scale = np.array([0.005, 0.005, 0.01, 0.01, 0.05])
    x, fx, _ = _kernels.restarted_nelder_mead(_kernels.config_area_vec, data, x0, scale,
                                              1e-10, 1e-14, 20000, 6)
    p = ConfigParams.from_seq(x).canonical()
    return p, objective_f(p)


def multistart_minimize(starts: int = 50, seed: int = 0) -> tuple[ConfigParams, float]:
    """Seeded multistart of f over Z; the first start is the centre of Z."""
    dom = DEFAULT_DOMAIN
    rng = np.random.default_rng(seed)
    pts = [dom.center().as_array()]
    if starts > 1:
        pts += list(rng.uniform(dom.lo, dom.hi, size=(starts - 1, 5)))
    st = np.ascontiguousarray(np.array(pts))
    scale = np.array([0.01, 0.01, 0.03, 0.03, 0.2])
    xs, vals = _kernels.multistart(_kernels.config_area_vec, kernel_data(), st, scale,
                                   1e-10, 1e-14, 20000, 6)
    i = int(np.argmin(vals))
    p = ConfigParams.from_seq(xs[i]).canonical()
    return p, objective_f(p)


# ---------------------------------------------------------------------------
# commands


def cmd_prove(args) -> int:
    cfg = RunConfig("prove", args.threshold, args.workers, args.eps, args.checkpoint,
                    args.progress_every, args.seed)
    domain = Box5.from_domain(DEFAULT_DOMAIN)
    if args.subbox:
        domain = Box5.from_flat(_floats(args.subbox, 10, "--subbox"))

    pre = Report("preflight")
    pre.extend(check_domain_reduction(eps=cfg.epsilon_fp, threshold=cfg.threshold))
    pre.extend(check_segment_region(eps=cfg.epsilon_fp, threshold=cfg.threshold))
    pre.extend(lipschitz_derivations())
    pre.extend(check_diameter())
    print(pre.to_text())

    opts = SearchOptions(eps=cfg.epsilon_fp, workers=cfg.workers, progress_every=cfg.progress_every,
                         progress_log=args.log, checkpoint_path=cfg.checkpoint_path,
                         max_iterations=args.max_iterations, seed=cfg.seed)
    resume = None
    if cfg.checkpoint_path and Path(cfg.checkpoint_path).exists():
        resume = cfg.checkpoint_path
        print(f"resuming from {resume}")
    res = run_search(domain, cfg.threshold, DEFAULT_CONSTANTS, opts, resume=resume)
    ok = res.proven and pre.passed

    print("== certificate ==")
    print(f"threshold      {cfg.threshold!r}")
    print(f"eps_fp         {cfg.epsilon_fp!r}")
    print(f"proven         {res.proven}")
    print(f"status         {res.status}")
    print(f"iterations     {res.iterations}")
    print(f"best_value     {res.best_value:.12f}")
    print(f"best_params    {_fmt_params(res.best_params)}")
    print(f"volume r       {domain.volume():.15f}")
    print(f"verified       {100 * res.verified_volume_fraction:.10f}%")
    print(f"wall_time      {res.wall_time:.2f}s")

    kv = pre.to_kv() + [
        f"threshold={cfg.threshold!r}", f"eps_fp={cfg.epsilon_fp!r}",
        f"proven={int(res.proven)}", f"status={res.status}", f"iterations={res.iterations}",
        f"best_value={res.best_value!r}", f"best_params={_fmt_params(res.best_params)}",
        f"volume={domain.volume()!r}", f"verified_fraction={res.verified_volume_fraction!r}",
        f"wall_time={res.wall_time!r}",
    ]
    if res.witness is not None:
        w = res.witness
        flat = ",".join(f"{a!r},{b!r}" for a, b in zip(w.lo, w.hi))
        print(f"witness box    {flat}")
        print(f"f(centre)      {res.witness_value:.12f}")
        kv += [f"witness_box={flat}", f"witness_value={res.witness_value!r}"]
        if res.status == "counterexample":
            p, v = local_minimum(w.center)
            print(f"polished       {_fmt_params(p)}  f={v:.12f}")
            kv += [f"witness_polished={_fmt_params(p)}", f"witness_polished_value={v!r}"]
    kv.append(f"passed={int(ok)}")
    _emit(kv, args.report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_minimize(args) -> int:
    if args.starts < 1:
        raise UsageError("--starts must be >= 1")
    t0 = time.perf_counter()
    p, v = multistart_minimize(args.starts, args.seed)
    dt = time.perf_counter() - t0
    print(f"minimum f = {v:.12f} over {args.starts} starts (seed {args.seed})")
    print(f"x1={p.x1!r} y1={p.y1!r} x2={p.x2!r} y2={p.y2!r} theta={p.theta!r}")
    _emit([f"best_value={v!r}", f"best_params={_fmt_params(p)}", f"starts={args.starts}",
           f"seed={args.seed}", f"wall_time={dt!r}"], args.report)
    return EXIT_OK


def cmd_validate(args) -> int:
    if not args.step > 0:
        raise UsageError("--step must be positive")
    eps = args.eps
    rep = Report("validation")
    parts = [check_domain_reduction(eps=eps), check_segment_region(eps=eps),
             lipschitz_derivations(), check_diameter(),
             validate_lipschitz(args.samples, args.step, args.seed),
             validate_lipschitz(args.samples, args.step, args.seed, bounded_extent=True)]
    for part in parts:
        print(part.to_text())
        rep.extend(part)
    names = [c.name for c in rep.checks]
    print(f"{len(names)} checks, {len(rep.failed())} failed" +
          (": " + ", ".join(rep.failed()) if rep.failed() else ""))
    kv = rep.to_kv() + [f"warnings={len(rep.warnings)}", f"passed={int(rep.passed)}"]
    _emit(kv, args.report)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_render(args) -> int:
    p = ConfigParams.from_seq(_floats(args.params, 5, "--params"))
    try:
        out = render_file(p, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    v = objective_f(p)
    print(f"wrote {out} (area {v:.10f})")
    _emit([f"out={out}", f"area={v!r}"], args.report)
    return EXIT_OK


def cmd_shapes(args) -> int:
    try:
        text = Path(args.spec).read_text()
    except OSError as exc:
        print(f"error: cannot read {args.spec}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cases = parse_experiment(text, str(args.spec))
    except SpecFileError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    for case in cases:
        if args.seed is not None and "seed" not in case.explicit:
            case.opts.seed = args.seed
        res = run_case(case)
        print(f"{case.name}: {res.value:.7f} ({res.evaluations} evaluations, {res.wall_time:.1f}s)")
        rows.append((case.name, res))
    try:
        out, dump = write_results(args.out, rows)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    kv = [f"{name}.best_value={res.value!r}" for name, res in rows]
    kv += [f"out={out}", f"shapes={dump}"]
    _emit(kv, args.report)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wormcover",
                                 description="Lower-bound certificate for convex covers of "
                                             "a circle, a rectangle and a segment.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="run the branch-and-bound certificate")
    p.add_argument("--threshold", type=float, default=0.1, help="bound to certify (default 0.1)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS,
                   help="rounding buffer added to the threshold in the margin test")
    p.add_argument("--checkpoint", help="checkpoint file; resumed from if it exists")
    p.add_argument("--subbox", help="a1,b1,...,a5,b5 instead of the full domain")
    p.add_argument("--log", help="append progress rows to this CSV")
    p.add_argument("--report", help="write the key=value summary here")
    p.add_argument("--progress-every", type=int, default=10_000_000,
                   help="iterations between progress rows and checkpoints")
    p.add_argument("--max-iterations", type=int, default=None, help="stop after this many boxes")
    p.add_argument("--seed", type=int, default=0, help="seed of the retired-box sample")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("minimize", help="multistart local minimization of f over Z")
    p.add_argument("--starts", type=int, default=50, help="number of Nelder-Mead starts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the key=value summary here")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("validate", help="check the domain-reduction and Lipschitz bounds")
    p.add_argument("--samples", type=int, default=10_000,
                   help="points for the sampled slope checks; 0 skips them")
    p.add_argument("--step", type=float, default=1e-4, help="forward-difference step")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS, help="required margin of each bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="write the key=value summary here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="draw a configuration as SVG")
    p.add_argument("--params", required=True, help="x1,y1,x2,y2,theta")
    p.add_argument("--out", required=True, help="SVG file to write")
    p.add_argument("--report", help="write the key=value summary here")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("shapes", help="run maximin shape experiments from a spec file")
    p.add_argument("--spec", required=True, help="experiment file, one case per line")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--seed", type=int, default=None, help="seed for cases that do not set one")
    p.add_argument("--report", help="write the key=value summary here")
    p.set_defaults(func=cmd_shapes)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, SearchError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        _emit([f"error={exc}", "passed=0"], getattr(args, "report", None))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
