"""Command-line interface.

Subcommands::

    stablesde simulate       --config exp.json --out DIR [--seed N]
    stablesde fit            --config exp.json --data data.csv --out DIR [--seed N]
    stablesde reproduce      --rows 'a15_*' --out DIR [--seed N] [--full-scale]
    stablesde estimate-alpha --data samples.csv --out DIR [--residuals] [--config mcmc.json]
    stablesde list

Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import fnmatch
import io
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .alpha_est import McmcConfig, estimate_alpha_mcmc, standardized_group_residuals
from .errors import ConfigError, DomainError, NumericalError
from .estimator import write_report
from .experiments import ROWS, ExperimentConfig, make_dataset, row, run_experiment, start_points
from .fileio import atomic_write_text, csv_text, dump_json
from .sde_sim import available_systems, builtin_system, read_dataset, write_dataset

log = logging.getLogger("stablesde")

MIN_ALPHA_SAMPLES = 100


class _Run:
    """Collects artifacts and warnings and writes ``run_manifest.json``."""

    def __init__(self, command, out, config):
        self.command = command
        self.out = Path(out)
        self.config = config
        self.artifacts = []
        self.warnings = []
        self.results = {}
        self.start = time.perf_counter()

    def add(self, *paths):
        for p in paths:
            self.artifacts.append(Path(p).relative_to(self.out).as_posix())

    def warn(self, message):
        log.warning(message)
        self.warnings.append(message)

    def finish(self):
        body = {
            "command": self.command,
            "config": self.config,
            "artifacts": sorted(self.artifacts),
            "results": self.results,
            "warnings": self.warnings,
            "version": __version__,
            "wall_clock_seconds": time.perf_counter() - self.start,
        }
        return atomic_write_text(self.out / "run_manifest.json", dump_json(body))


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def load_experiment(path, seed=None):
    """Experiment config from JSON.  A ``row`` key starts from a registered
    row and applies the remaining keys as overrides; ``fit`` overrides merge."""
    d = _read_json(path)
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    if "row" in d:
        d = dict(d)
        base = row(d.pop("row"), full_scale=bool(d.pop("full_scale", False))).to_dict()
        base["fit"] = {**base["fit"], **d.pop("fit", {})}
        base.update(d)
        d = base
    cfg = ExperimentConfig.from_dict(d)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def _dataset_paths(out):
    return out / "data.csv", out / "data.json"


def cmd_simulate(args):
    cfg = load_experiment(args.config, args.seed)
    run = _Run("simulate", args.out, cfg.to_dict())
    ds = make_dataset(cfg)
    run.add(*write_dataset(ds, *_dataset_paths(run.out)))
    run.results = {"n_records": len(ds), "n_groups": ds.n_groups}
    run.finish()
    print(f"wrote {len(ds)} records to {run.out / 'data.csv'}")


def cmd_fit(args):
    cfg = load_experiment(args.config, args.seed)
    run = _Run("fit", args.out, cfg.to_dict())
    ds = read_dataset(args.data)
    if np.isnan(ds.alpha):
        run.warn("dataset has no alpha in its sidecar; using the config value")
    elif ds.alpha != cfg.alpha:
        run.warn(f"sidecar alpha {ds.alpha} differs from config alpha {cfg.alpha}; using the config value")
    ds = _grouped(replace(ds, alpha=cfg.alpha))
    _, report = run_experiment(cfg, ds)
    paths = write_report(report, run.out)
    run.add(*paths.values())
    run.results = {"l2_f": report.l2_f, "l2_g": report.l2_g, **_pooled(report)}
    run.finish()
    print(f"l2_f={report.l2_f:.6g} l2_g={report.l2_g:.6g}")


def _grouped(ds):
    """Infer grouping from repeated x0 when the sidecar has none; data with
    no repeats stays ungrouped."""
    if ds.group_bounds is None:
        inferred = ds.with_inferred_groups()
        if inferred.n_groups < len(ds):
            return inferred
    return ds


def _mcmc_config(path):
    if not path:
        return McmcConfig()
    d = _read_json(path)
    try:
        return McmcConfig(**d)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _pooled(report):
    value = report.extras.get("pooled_diffusion")
    return {"pooled_diffusion": value} if value is not None else {}


def select_rows(patterns):
    names = []
    for pat in patterns:
        for part in pat.split(","):
            part = part.strip()
            if not part:
                continue
            hits = [n for n in ROWS if fnmatch.fnmatchcase(n, part)]
            if not hits:
                raise ConfigError(f"no experiment matches {part!r}; available: {', '.join(ROWS)}")
            names += [n for n in hits if n not in names]
    if not names:
        raise ConfigError("no experiments selected")
    return names


def _cell(v):
    return "" if v is None else repr(float(v))


def cmd_reproduce(args):
    names = select_rows(args.rows)
    cfgs = [row(n, full_scale=args.full_scale) for n in names]
    if args.seed is not None:
        cfgs = [replace(c, seed=args.seed) for c in cfgs]
    run = _Run("reproduce", args.out, {"rows": [c.to_dict() for c in cfgs], "full_scale": args.full_scale})
    lines = []
    for cfg in cfgs:
        log.info("running %s", cfg.name)
        _, report = run_experiment(cfg)
        run.add(*write_report(report, run.out / cfg.name).values())
        run.results[cfg.name] = {"l2_f": report.l2_f, "l2_g": report.l2_g, **_pooled(report)}
        lines.append([cfg.name, _cell(cfg.published_l2_f), _cell(report.l2_f), _cell(cfg.published_l2_g), _cell(report.l2_g)])
        print(f"{cfg.name}: l2_f={report.l2_f:.4g} (published {cfg.published_l2_f}) "
              f"l2_g={report.l2_g:.4g} (published {cfg.published_l2_g})")
    header = ["row", "published_l2_f", "l2_f", "published_l2_g", "l2_g"]
    path = atomic_write_text(run.out / "summary.csv", csv_text(header, lines))
    run.add(path)
    run.finish()


def read_samples(path):
    """One-column numeric CSV; a non-numeric first line is taken as a header."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    values = []
    for lineno, rec in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != 1:
            raise ConfigError(f"{path}:{lineno}: expected one column, got {len(rec)}")
        try:
            v = float(rec[0])
        except ValueError:
            if lineno == 1:
                continue
            raise ConfigError(f"{path}:{lineno}: not a number: {rec[0]!r}") from None
        if not np.isfinite(v):
            raise ConfigError(f"{path}:{lineno}: non-finite value")
        values.append(v)
    return np.array(values)


def cmd_estimate_alpha(args):
    mcmc = _mcmc_config(args.config)
    if args.seed is not None:
        mcmc = replace(mcmc, seed=args.seed)
    if args.residuals:
        x = standardized_group_residuals(_grouped(read_dataset(args.data)))
    else:
        x = read_samples(args.data)
    if x.size < MIN_ALPHA_SAMPLES:
        raise ConfigError(f"{args.data}: {x.size} samples; at least {MIN_ALPHA_SAMPLES} are needed")
    run = _Run("estimate-alpha", args.out, {"mcmc": mcmc.__dict__, "residuals": args.residuals})
    result = estimate_alpha_mcmc(x, mcmc)
    for flag in result.flags:
        run.warn(flag)
    body = {**result.to_dict(), "n_samples": int(x.size)}
    run.add(atomic_write_text(run.out / "alpha.json", dump_json(body)))
    rows = [[float(i), a, s, ll] for i, ((a, s), ll) in enumerate(zip(result.chain, result.log_likelihood))]
    trace = csv_text(["iteration", "alpha", "sigma", "log_likelihood"], rows)
    run.add(atomic_write_text(run.out / "trace.csv", trace))
    run.results = {"posterior_mean_alpha": result.posterior_mean_alpha,
                   "acceptance_rate": result.acceptance_rate}
    run.finish()
    print(f"posterior mean alpha={result.posterior_mean_alpha:.4f} "
          f"sigma={result.posterior_mean_sigma:.4f} acceptance={result.acceptance_rate:.3f}")


def cmd_list(args):
    print("experiments:")
    for name, cfg in ROWS.items():
        n_pts = len(start_points(cfg)[1])
        print(f"  {name:26s} {cfg.system:26s} alpha={cfg.alpha:<4g} N={n_pts}x{cfg.reps} h={cfg.h:g}")
    print("systems:")
    for name in available_systems():
        print(f"  {name:26s} {builtin_system(name).description}")


def build_parser():
    p = argparse.ArgumentParser(prog="stablesde", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required):
        sp.add_argument("--config", required=config_required, help="JSON config file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")

    sp = sub.add_parser("simulate", help="generate a snapshot dataset")
    common(sp, True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="fit drift and diffusion to a dataset")
    common(sp, True)
    sp.add_argument("--data", required=True, help="dataset CSV (sidecar JSON alongside)")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("reproduce", help="run registered experiments and tabulate errors")
    common(sp, False)
    sp.add_argument("--rows", nargs="+", required=True, help="row names or glob patterns")
    sp.add_argument("--full-scale", action="store_true", help="use the published sample sizes")
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("estimate-alpha", help="posterior of the stability index")
    common(sp, False)
    sp.add_argument("--data", required=True, help="one-column sample CSV, or a dataset CSV")
    sp.add_argument("--residuals", action="store_true", help="extract residuals from a dataset file")
    sp.set_defaults(func=cmd_estimate_alpha)

    sp = sub.add_parser("list", help="show registered experiments and systems")
    sp.set_defaults(func=cmd_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
