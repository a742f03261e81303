"""Command-line front end.

Subcommands: ``sample``, ``brute``, ``ea``, ``gp``, ``check-matrix``,
``fixtures``.  Campaign commands sweep every (measure, n, m) cell of the
requested grid and write one report; cells with ``n > m!`` are skipped and
noted in the report.

Exit codes: 0 success, 1 configuration error, 2 some cells failed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .definiteness import DEFAULT_EPSILON, cnsd_check
from .distances import MEASURES, PERMUTATION_MEASURES
from .evolver import SUBMUTATIONS, EaConfig, ea_probe
from .fixtures import export_fixtures, format_matrix, list_fixtures, read_matrix
from .gpverify import rmse_experiment
from .reports import CsvReport, write_json
from .sampler import brute_force_probe, sample_probe

WORKERS_ENV = "KERNELPROBE_WORKERS"
COMMANDS = ("sample", "brute", "ea", "gp", "check-matrix", "fixtures")


class ConfigError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """Parse ``"4..20"``, ``"4-20"``, ``"5"`` or comma-separated mixtures into sorted ints."""
    values: set[int] = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        sep = ".." if ".." in part else ("-" if "-" in part[1:] else None)
        try:
            if sep:
                lo, hi = (int(p) for p in part.split(sep, 1))
                if hi < lo:
                    raise ConfigError(f"empty range {part!r}")
                values.update(range(lo, hi + 1))
            else:
                values.add(int(part))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse range {part!r}") from None
    if not values:
        raise ConfigError(f"range {text!r} is empty")
    return sorted(values)


def parse_measures(text: str) -> list[str]:
    if text == "all":
        return list(PERMUTATION_MEASURES)
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok not in PERMUTATION_MEASURES:
            hint = " (string distances are not searchable)" if tok in MEASURES else ""
            raise ConfigError(f"unknown permutation measure {tok!r}{hint}; choose from {', '.join(PERMUTATION_MEASURES)}")
        out.append(tok)
    return out


@dataclass
class CampaignConfig:
    command: str
    measures: list[str] = field(default_factory=lambda: ["ins"])
    n_values: list[int] = field(default_factory=lambda: [5])
    m_values: list[int] = field(default_factory=lambda: [4])
    t: int = 10_000
    repeats: int = 10
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    out: Path | None = None
    format: str = "csv"
    workers: int = 1
    submutations: list[str] = field(default_factory=lambda: ["swap"])
    population_size: int = 100
    budget: int = 10_000
    recombination_rate: float = 0.5
    mutation_rate: float | None = None
    test_size: int = 1000
    likelihood_budget: int = 1000

    def validate(self) -> None:
        if self.command not in ("sample", "brute", "ea", "gp"):
            raise ConfigError(f"{self.command!r} is not a campaign command")
        if not self.measures or not self.n_values or not self.m_values:
            raise ConfigError("measure, n and m ranges must be non-empty")
        for mm in self.measures:
            if mm not in PERMUTATION_MEASURES:
                raise ConfigError(f"unknown measure {mm!r}")
        if min(self.n_values) < 2:
            raise ConfigError("n must be at least 2")
        if min(self.m_values) < 2:
            raise ConfigError("m must be at least 2")
        if self.t < 1 or self.repeats < 1:
            raise ConfigError("t and repeats must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        for s in self.submutations:
            if s not in SUBMUTATIONS:
                raise ConfigError(f"unknown submutation {s!r}")
        if self.command == "ea":
            try:
                self.ea_config(self.submutations[0], self.seed)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def ea_config(self, submutation: str, seed: int) -> EaConfig:
        return EaConfig(
            population_size=self.population_size,
            budget=self.budget,
            recombination_rate=self.recombination_rate,
            mutation_rate=self.mutation_rate,
            submutation=submutation,
            epsilon=self.epsilon,
            seed=seed,
        )

    def cells(self) -> tuple[list[tuple[str, int, int]], list[tuple[str, int, int]]]:
        run, skip = [], []
        for mm in self.measures:
            for n in self.n_values:
                for m in self.m_values:
                    (skip if n > math.factorial(m) else run).append((mm, n, m))
        return run, skip


# ---------------------------------------------------------------------------
# cell workers (module level so they pickle)


def _sample_cell(cfg: CampaignConfig, measure: str, n: int, m: int) -> dict:
    rep = sample_probe(measure, n, m, cfg.t, cfg.repeats, cfg.epsilon, cfg.seed)
    rows = [
        dict(measure=measure, n=n, m=m, t=cfg.t, seed=cfg.seed, repeat=r.repeat, n_lambda_plus=r.n_lambda_plus, p=r.p, lambda_max=r.lambda_max)
        for r in rep.repeats
    ]
    doc = {
        "measure": measure,
        "n": n,
        "m": m,
        "t": cfg.t,
        "seed": cfg.seed,
        "mean_p": rep.p,
        "lambda_max_overall": rep.lambda_max_overall,
        "repeats": [r.__dict__ for r in rep.repeats],
        "witnesses": [w.tolist() for w in rep.witnesses],
        "argmax_set": None if rep.argmax_set is None else rep.argmax_set.tolist(),
    }
    return {"rows": rows, "doc": doc}


def _brute_cell(cfg: CampaignConfig, measure: str, n: int, m: int) -> dict:
    res = brute_force_probe(measure, n, m, cfg.epsilon)
    row = dict(measure=measure, n=n, m=m, n_sets=res.n_sets, n_lambda_plus=res.n_lambda_plus, p=res.p, lambda_max=res.lambda_max)
    doc = {**row, "witness": None if res.witness is None else res.witness.tolist()}
    return {"rows": [row], "doc": doc}


def _ea_cell(cfg: CampaignConfig, measure: str, n: int, m: int) -> dict:
    rows, hist, docs = [], [], []
    for sub in cfg.submutations:
        for k in range(cfg.repeats):
            seed = cfg.seed + k
            res = ea_probe(measure, n, m, cfg.ea_config(sub, seed))
            rows.append(
                dict(measure=measure, n=n, m=m, submutation=sub, seed=seed, found=res.found, evaluations_used=res.evaluations_used, best_lambda=res.best_lambda)
            )
            hist.extend(
                dict(measure=measure, n=n, m=m, submutation=sub, seed=seed, generation=g, best_lambda=v) for g, v in enumerate(res.history)
            )
            docs.append(res.to_dict())
    return {"rows": rows, "history": hist, "doc": docs}


def _gp_cell(cfg: CampaignConfig, measure: str, n: int, m: int) -> dict:
    rows = []
    for k in range(cfg.repeats):
        run = rmse_experiment(measure, n, m, cfg.test_size, cfg.seed + k, cfg.likelihood_budget)
        rows.append(run.row())
    return {"rows": rows, "doc": rows}


_CELL = {"sample": _sample_cell, "brute": _brute_cell, "ea": _ea_cell, "gp": _gp_cell}


def _iter_results(cfg: CampaignConfig, cells):
    fn = _CELL[cfg.command]
    if cfg.workers == 1 or len(cells) < 2:
        for cell in cells:
            try:
                yield cell, fn(cfg, *cell), None
            except Exception as exc:  # noqa: BLE001 - recorded per cell
                yield cell, None, exc
        return
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [(cell, pool.submit(fn, cfg, *cell)) for cell in cells]
        for cell, fut in futures:
            try:
                yield cell, fut.result(), None
            except Exception as exc:  # noqa: BLE001
                yield cell, None, exc


def default_out(cfg: CampaignConfig) -> Path:
    return Path(f"kernelprobe-{cfg.command}.{cfg.format}")


def run_campaign(cfg: CampaignConfig, log=print) -> int:
    """Run every grid cell and write the report; returns the process exit code."""
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(cfg.out) if cfg.out else default_out(cfg)
    cells, skipped = cfg.cells()
    failures = 0

    if cfg.format == "csv":
        report = CsvReport(out, cfg.command)
        history = CsvReport(out.with_suffix(".history.csv"), "ea-history") if cfg.command == "ea" else None
        for mm, n, m in skipped:
            report.note("skipped", measure=mm, n=n, m=m, reason="n exceeds m!")
        for (mm, n, m), res, exc in _iter_results(cfg, cells):
            if exc is not None:
                failures += 1
                report.note("failed", measure=mm, n=n, m=m, error=str(exc).replace(",", ";"))
                log(f"cell {mm} n={n} m={m} failed: {exc}")
                continue
            for row in res["rows"]:
                report.write(row)
            if history is not None:
                for row in res["history"]:
                    history.write(row)
            log(_summary(cfg.command, mm, n, m, res["rows"]))
        report.close()
        if history is not None:
            history.close()
    else:
        results, failed = [], []
        for (mm, n, m), res, exc in _iter_results(cfg, cells):
            if exc is not None:
                failures += 1
                failed.append({"measure": mm, "n": n, "m": m, "error": str(exc)})
                continue
            results.append(res["doc"])
            log(_summary(cfg.command, mm, n, m, res["rows"]))
            _dump_json(out, cfg, results, skipped, failed)
        _dump_json(out, cfg, results, skipped, failed)
    log(f"wrote {out}")
    return 2 if failures else 0


def _dump_json(out, cfg, results, skipped, failed):
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.__dict__.items()}
    write_json(
        out,
        cfg.command,
        {
            "config": config,
            "cells": results,
            "skipped": [{"measure": a, "n": b, "m": c, "reason": "n exceeds m!"} for a, b, c in skipped],
            "failed": failed,
        },
    )


def _summary(command: str, mm: str, n: int, m: int, rows: list[dict]) -> str:
    if command == "sample":
        p = np.mean([r["p"] for r in rows])
        lam = max(r["lambda_max"] for r in rows)
        return f"{mm} n={n} m={m}: mean p={p:.4f} max lambda={lam:.6g}"
    if command == "brute":
        r = rows[0]
        return f"{mm} n={n} m={m}: p={r['p']:.6f} ({r['n_lambda_plus']}/{r['n_sets']}) max lambda={r['lambda_max']:.6g}"
    if command == "ea":
        hits = sum(r["found"] for r in rows)
        return f"{mm} n={n} m={m}: witness found in {hits}/{len(rows)} runs"
    ok = [r for r in rows if r["fit_status"] == "ok"]
    rmse = np.mean([r["rmse"] for r in ok]) if ok else float("nan")
    return f"{mm} n={n} m={m}: {len(ok)}/{len(rows)} fits, mean rmse={rmse:.4f}"


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kernelprobe", description="Probe distance kernels for (conditional) definiteness.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def grid(p, n_default, m_default):
        p.add_argument("--measure", default="ins", help="comma-separated measure ids, or 'all'")
        p.add_argument("--n", default=n_default, help="set sizes, e.g. 5 or 4..20")
        p.add_argument("--m", default=m_default, help="permutation lengths, e.g. 4 or 4..8")
        p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, default=None, help="report path (default kernelprobe-<command>.<format>)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=_default_workers(), help=f"parallel grid cells (env {WORKERS_ENV})")

    p = sub.add_parser("sample", help="random-sampling estimate of p")
    grid(p, "6", "4")
    p.add_argument("--t", type=int, default=10_000, help="sets per repeat")
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("brute", help="exact p by enumerating all n-subsets")
    grid(p, "5", "4")

    p = sub.add_parser("ea", help="evolutionary search for a witness set")
    grid(p, "5", "4")
    p.add_argument("--repeats", type=int, default=10, help="seeded runs per cell and submutation")
    p.add_argument("--submutation", default="swap", help="comma-separated: swap, interchange, reversal")
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--recombination-rate", type=float, default=0.5)
    p.add_argument("--mutation-rate", type=float, default=None, help="default 1/m")

    p = sub.add_parser("gp", help="GP model RMSE versus lambda_max")
    grid(p, "15", "5..7")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--test-size", type=int, default=1000)
    p.add_argument("--likelihood-budget", type=int, default=1000)

    p = sub.add_parser("check-matrix", help="CNSD check of a matrix file")
    p.add_argument("path", type=Path)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)

    p = sub.add_parser("fixtures", help="list or export the shipped indefinite examples")
    p.add_argument("--export", type=Path, default=None, metavar="DIR")
    p.add_argument("--show", action="store_true", help="print each matrix in file format")
    return parser


def config_from_args(args) -> CampaignConfig:
    cfg = CampaignConfig(
        command=args.command,
        measures=parse_measures(args.measure),
        n_values=parse_range(args.n),
        m_values=parse_range(args.m),
        epsilon=args.epsilon,
        seed=args.seed,
        out=args.out,
        format=args.format,
        workers=args.workers,
    )
    if args.command == "sample":
        cfg.t, cfg.repeats = args.t, args.repeats
    elif args.command == "ea":
        cfg.repeats = args.repeats
        cfg.submutations = [s.strip() for s in args.submutation.split(",") if s.strip()]
        cfg.population_size = args.population
        cfg.budget = args.budget
        cfg.recombination_rate = args.recombination_rate
        cfg.mutation_rate = args.mutation_rate
    elif args.command == "gp":
        cfg.repeats = args.repeats
        cfg.test_size = args.test_size
        cfg.likelihood_budget = args.likelihood_budget
    return cfg


def _check_matrix(path: Path, epsilon: float) -> int:
    try:
        d, meta = read_matrix(path)
        rep = cnsd_check(d, epsilon)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    label = "CNSD" if rep.is_cnsd else "not CNSD"
    print(f"{label}, lambda_max = {rep.lambda_max:.6g} (n={d.shape[0]}, epsilon={epsilon:g})")
    if "expected_lambda" in meta:
        print(f"expected lambda_max = {meta['expected_lambda']}")
    return 0


def _fixtures(export: Path | None, show: bool) -> int:
    for fx in list_fixtures():
        m = "-" if fx.m is None else fx.m
        print(f"{fx.name}: domain={fx.domain} measure={fx.measure} n={fx.n} m={m} expected_lambda={fx.expected_lambda}")
        if show:
            print(format_matrix(fx.matrix, fx.metadata()))
    if export is not None:
        paths = export_fixtures(export)
        print(f"exported {len(paths)} fixtures to {export}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check-matrix":
        return _check_matrix(args.path, args.epsilon)
    if args.command == "fixtures":
        return _fixtures(args.export, args.show)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run_campaign(cfg)


if __name__ == "__main__":
    sys.exit(main())
