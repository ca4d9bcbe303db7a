"""Command line entry point: ``synthrec generate | analyze | fit``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    EstimationError,
    FitResult,
    category_share,
    config_for,
    degree_histogram,
    fit_power_law,
    grid_search_fit,
    interaction_coords,
    normalize_grid,
)
from .generator import THREADS_ENV, generate_dataset
from .io import (
    IngestionError,
    atomic_write_many,
    build_manifest,
    checksum,
    csv_text,
    dataset_bytes,
    load_config,
    manifest_text,
    matrix_csv,
    read_dataset,
    serialize_config,
)
from .latent import ConfigurationError, build_partitions
from .sampling import ParameterError

log = logging.getLogger("synthrec")

USER_ERRORS = (ConfigurationError, ParameterError, IngestionError, EstimationError, OSError, ValueError)


def cmd_generate(config_path, out_dir, seed=None, dump_factors=False, threads=None) -> int:
    cfg = load_config(config_path)
    if seed is not None:
        cfg = cfg.replace(master_seed=int(seed))
    ds, part, factors, util = generate_dataset(cfg, threads=threads, return_model=True)
    data = dataset_bytes(ds)
    digest = checksum(data)
    manifest = build_manifest(ds, part, digest)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {out / "interactions.csv": data, out / "manifest.json": manifest_text(manifest)}
    if dump_factors:
        files[out / "rho.csv"] = matrix_csv(factors.rho, "k")
        files[out / "alpha.csv"] = matrix_csv(factors.alpha, "k")
        files[out / "V.csv"] = matrix_csv(util.V, "item")
        files[out / "T.csv"] = matrix_csv(util.T, "item")
    atomic_write_many(files)
    log.info("wrote %d interactions (checksum %s) to %s", ds.n_interactions, digest, out)
    return 0


def _fit_line(label, degrees) -> str:
    try:
        fit = fit_power_law(degrees)
    except EstimationError as e:
        return f"{label}: no power-law fit ({e})"
    return (f"{label}: exponent={fit.exponent:.4f} x_min={fit.x_min:g} n_tail={fit.n_tail} "
            f"ks={fit.ks:.4f} excluded_zero={fit.n_excluded}")


def cmd_analyze(dataset_path, out_dir, populations=None, categories=None, n_items=None) -> int:
    dataset_path = Path(dataset_path)
    manifest_path = dataset_path.with_name("manifest.json")
    n_users = None
    if n_items is None and manifest_path.exists():
        summary = json.loads(manifest_path.read_text(encoding="utf-8")).get("summary", {})
        n_users, n_items = summary.get("n_users"), summary.get("n_items")
    ds = read_dataset(dataset_path, n_users=n_users, n_items=n_items)

    files: dict[Path, str] = {}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    users = degree_histogram(ds, "users")
    items = degree_histogram(ds, "items")
    files[out / "user_degrees.csv"] = csv_text("degree,count", users.rows())
    files[out / "item_degrees.csv"] = csv_text("degree,count", items.rows())
    coords = interaction_coords(ds) + 1
    files[out / "interactions_coords.csv"] = csv_text("user,item", map(tuple, coords.tolist()))

    lines = [
        f"users={ds.n_users} items={ds.n_items} interactions={ds.n_interactions}",
        f"user degree: min={users.degrees.min()} mean={users.degrees.mean():.3f} max={users.degrees.max()}",
        f"item degree: min={items.degrees.min()} mean={items.degrees.mean():.3f} max={items.degrees.max()}",
        _fit_line("user degree power law", users.degrees),
        _fit_line("item degree power law", items.degrees),
    ]
    if ds.id_offset:
        lines.append(f"ids were 0-based; shifted by +{ds.id_offset}")

    if populations or categories:
        p, c = int(populations or 1), int(categories or 1)
        part = build_partitions(ds.n_users, ds.n_items, c, p, c)
        for j in range(p):
            h = degree_histogram(ds, "users", f"population:{j}", part)
            files[out / f"user_degrees_pop{j + 1}.csv"] = csv_text("degree,count", h.rows())
            lines.append(_fit_line(f"U{j + 1} user degree power law", h.degrees))
        for k in range(c):
            h = degree_histogram(ds, "items", f"category:{k}", part)
            files[out / f"item_degrees_cat{k + 1}.csv"] = csv_text("degree,count", h.rows())
            lines.append(_fit_line(f"I{k + 1} item degree power law", h.degrees))
        shares = category_share(ds, part, reference_category=0)
        for j in range(p):
            files[out / f"category_share_pop{j + 1}.csv"] = csv_text("share,frequency", shares.frequencies(j))
            lines.append(f"U{j + 1} mean share of I1: {shares.mean_share(j):.4f}")
        if shares.excluded:
            lines.append(f"users with empty history excluded from shares: {shares.excluded}")

    files[out / "summary.txt"] = "\n".join(lines) + "\n"
    atomic_write_many(files)
    print("\n".join(lines))
    return 0


def load_grid(path) -> dict:
    """Grid document: ``{"beta": [..], "lambda": {"start": a, "stop": b, "step": s}, ...}``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or not doc:
        raise ConfigurationError("empty grid")
    grid = {}
    for k, v in doc.items():
        if isinstance(v, dict):
            start, stop, step = float(v["start"]), float(v["stop"]), float(v["step"])
            if step <= 0:
                raise ConfigurationError(f"grid step for {k} must be > 0")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            v = [round(start + i * step, 10) for i in range(max(n, 0))]
        grid[k] = v
    return normalize_grid(grid)


def cmd_fit(reference_path, grid_path, config_path, out_dir, seeds=(0, 1, 2)) -> int:
    grid = load_grid(grid_path)
    base = load_config(config_path)
    ref = read_dataset(reference_path, compact=True)
    result: FitResult = grid_search_fit(ref, grid, base, seeds=seeds)
    best_cfg = config_for(base.replace(n_users=ref.n_users, n_items=ref.n_items),
                          {k: v for k, v in result.best.items() if v is not None})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [tuple("" if v is None else v for v in row) for row in result.table()]
    atomic_write_many({
        out / "grid.csv": csv_text("beta,lambda,delta,tau,objective", rows),
        out / "best_config.json": serialize_config(best_cfg),
    })
    print(f"best {result.best} objective={result.objective:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="synthrec", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic interaction dataset")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--dump-factors", action="store_true", help="also write rho, alpha, V and T as CSV")
    g.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")

    a = sub.add_parser("analyze", help="degree, share and coordinate tables for a dataset")
    a.add_argument("--dataset", required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--populations", type=int)
    a.add_argument("--categories", type=int)
    a.add_argument("--n-items", type=int)

    f = sub.add_parser("fit", help="grid-search generator parameters against a reference dataset")
    f.add_argument("--reference", required=True)
    f.add_argument("--grid", required=True)
    f.add_argument("--config", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            return cmd_generate(args.config, args.out, args.seed, args.dump_factors, args.threads)
        if args.command == "analyze":
            return cmd_analyze(args.dataset, args.out, args.populations, args.categories, args.n_items)
        return cmd_fit(args.reference, args.grid, args.config, args.out, args.seeds)
    except USER_ERRORS as e:
        print(f"synthrec {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (KeyError, json.JSONDecodeError) as e:
        print(f"synthrec {args.command}: error: malformed input: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
