"""Command-line front end.

Subcommands:
  solve     build the tessellation for a scenario, write CSVs + JSON report
  bench     run the built-in benchmark suite (table1)
  verify    check a scenario (or its solved CSV) against the grid oracle
  plotdata  emit centroid scatter + cell boundary files for plotting tools

Scenario files are INI-style key=value sections; see docs/config.md.
``cvt <cmd> fig4`` resolves bundled scenario names as well as paths. The
environment variable CVT_SEED overrides the scenario seed.

Exit codes: 0 success, 1 config error, 2 solver failure, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .cvt1d import SolverConfig, SolverMethod, from_centroids
from .density import Density1D, Interval, SeparableDensity, parse_density
from .energy import (
    METHOD_ANALYTIC,
    METHOD_GRID,
    METHOD_MONTE_CARLO,
    EnergyReport,
    centroidality_residual,
    energy_grid_quadrature,
    energy_monte_carlo,
    energy_separable,
)
from .errors import ConfigError, CvtError
from .oracle import MAX_GRID_NODES, verify_fixed_point
from .product import IndexMatrix, ProductCvt, build_product

RESIDUAL_THRESHOLD = 1e-6
RATIO_ACCEPT = (1.4, 2.6)
DEFAULT_GRID_POINTS = 64
_SAFE_NAME = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-")

# published reference values for the bench table: (dims, energy)
TABLE1_ROWS = [
    (4, (8, 8, 8, 8), 0.68e-3),
    (5, (8, 8, 4, 4, 4), 1.2e-3),
    (8, (3,) * 8, 0.74e-3),
    (12, (2,) * 12, 0.21e-3),
]
TABLE1_MATCH_FACTOR = 3.0


@dataclass
class Scenario:
    """One experiment setup: domain box, per-dimension densities and cell
    counts, solver and energy settings."""

    name: str
    dimension: int
    domains: list[Interval]
    marginal_specs: list[str]
    dims: list[int]
    solver: SolverConfig
    energy_method: str = METHOD_ANALYTIC
    seed: int = 0
    normalized: bool = False
    samples: int = 1_000_000
    grid_points_per_dim: int = DEFAULT_GRID_POINTS
    base_dir: Path = field(default_factory=Path)

    def density(self) -> SeparableDensity:
        marginals = tuple(
            parse_density(spec, dom, self.normalized, self.base_dir)
            for spec, dom in zip(self.marginal_specs, self.domains)
        )
        return SeparableDensity(marginals)


def _dim_keys(section, n: int, what: str) -> list[str]:
    vals = []
    for i in range(1, n + 1):
        key = f"dim{i}"
        if key not in section:
            raise ConfigError(f"missing {key} under [{what}]")
        vals.append(section[key])
    return vals


def load_scenario(path: Path) -> Scenario:
    """Parse a scenario file; raises ConfigError on any defect."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if not cp.read([path], encoding="utf-8"):
            raise ConfigError(f"cannot read scenario file: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed scenario file {path}: {exc}") from exc
    try:
        meta = cp["scenario"]
        name = meta.get("name", "").strip()
        if not name or any(c not in _SAFE_NAME for c in name):
            raise ConfigError(f"scenario name {name!r} is empty or not filesystem-safe")
        n = meta.getint("dimension")
        if n is None or n < 1:
            raise ConfigError("dimension must be a positive integer")
        seed = meta.getint("seed", 0)
        normalized = meta.getboolean("normalized", False)

        domains = []
        for raw in _dim_keys(cp["domain"], n, "domain"):
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 2:
                raise ConfigError(f"domain entry {raw!r} must be 'lo, hi'")
            try:
                domains.append(Interval(float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ConfigError(f"bad domain {raw!r}: {exc}") from exc

        specs = _dim_keys(cp["density"], n, "density")
        dims = []
        for raw in _dim_keys(cp["tessellation"], n, "tessellation"):
            count = int(raw)
            if count < 1:
                raise ConfigError(f"cell count must be >= 1, got {count}")
            dims.append(count)

        solver = SolverConfig()
        if cp.has_section("solver"):
            s = cp["solver"]
            method = SolverMethod(s.get("method", SolverMethod.NEWTON_WITH_LLOYD_FALLBACK.value))
            max_it = s.getint("max_iterations", fallback=None)
            solver = SolverConfig(
                tolerance=s.getfloat("tolerance", 1e-10),
                max_iterations=max_it,
                method=method,
            )

        energy_method = METHOD_ANALYTIC
        samples = 1_000_000
        grid_points = DEFAULT_GRID_POINTS
        if cp.has_section("energy"):
            e = cp["energy"]
            energy_method = e.get("method", METHOD_ANALYTIC).strip()
            if energy_method not in (METHOD_ANALYTIC, METHOD_MONTE_CARLO, METHOD_GRID):
                raise ConfigError(f"unknown energy method {energy_method!r}")
            samples = e.getint("samples", samples)
            grid_points = e.getint("grid_points_per_dim", grid_points)
    except KeyError as exc:
        raise ConfigError(f"scenario file {path} missing section {exc}") from exc
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"scenario file {path}: {exc}") from exc

    return Scenario(
        name=name,
        dimension=n,
        domains=domains,
        marginal_specs=specs,
        dims=dims,
        solver=solver,
        energy_method=energy_method,
        seed=seed,
        normalized=normalized,
        samples=samples,
        grid_points_per_dim=grid_points,
        base_dir=Path(path).resolve().parent,
    )


def resolve_scenario(ref: str) -> Path:
    """A path that exists wins; otherwise try the bundled scenarios."""
    p = Path(ref)
    if p.exists():
        return p
    stem = ref[:-4] if ref.endswith(".cfg") else ref
    bundled = resources.files("gridcvt") / "scenarios" / f"{stem}.cfg"
    try:
        if bundled.is_file():
            with resources.as_file(bundled) as real:
                return Path(real)
    except (FileNotFoundError, ModuleNotFoundError):
        pass
    raise ConfigError(f"no such scenario file or bundled scenario: {ref}")


def _apply_seed_override(sc: Scenario) -> None:
    raw = os.environ.get("CVT_SEED")
    if raw is not None:
        try:
            sc.seed = int(raw)
        except ValueError as exc:
            raise ConfigError(f"CVT_SEED must be an integer, got {raw!r}") from exc


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_centroids_csv(path: Path, p: ProductCvt) -> None:
    n = p.n_dims
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + [f"x_{i + 1}" for i in range(n)])
        for row, point in enumerate(p.materialize(), start=1):
            w.writerow([row] + [_fmt(c) for c in point])


def write_cells_csv(path: Path, p: ProductCvt) -> None:
    n = p.n_dims
    header = ["k"]
    for i in range(n):
        header += [f"lo_{i + 1}", f"hi_{i + 1}"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(1, p.n_cells + 1):
            box = p.cell_of(k)
            row = [k]
            for iv in box.intervals:
                row += [_fmt(iv.lo), _fmt(iv.hi)]
            w.writerow(row)


def _energy_report(sc: Scenario, p: ProductCvt, d: SeparableDensity, threads: int) -> EnergyReport:
    if sc.energy_method == METHOD_MONTE_CARLO:
        return energy_monte_carlo(p, d, sc.samples, sc.seed, threads=threads)
    if sc.energy_method == METHOD_GRID:
        return energy_grid_quadrature(p, d, sc.grid_points_per_dim)
    return energy_separable(p, d)


def _per_dimension_stats(p: ProductCvt) -> list[dict]:
    out = []
    for f in p.factors:
        st = f.stats
        out.append(
            {
                "cells": f.n,
                "method": None if st is None else st.method,
                "iterations": None if st is None else st.iterations,
                "residual": None if st is None else st.residual,
                "fell_back": None if st is None else st.fell_back,
            }
        )
    return out


def cmd_solve(args) -> int:
    sc = load_scenario(resolve_scenario(args.config))
    _apply_seed_override(sc)
    if args.normalized:
        sc.normalized = True
    threads = args.threads or os.cpu_count() or 1
    kernels.set_threads(threads)
    t0 = time.perf_counter()
    d = sc.density()
    p = build_product(d, sc.dims, sc.solver, threads=threads)
    report = _energy_report(sc, p, d, threads)
    out_dir = Path.cwd()
    write_centroids_csv(out_dir / f"{sc.name}.centroids.csv", p)
    write_cells_csv(out_dir / f"{sc.name}.cells.csv", p)
    payload = {
        "scenario": sc.name,
        "dimension": sc.dimension,
        "dims": list(sc.dims),
        "normalized": sc.normalized,
        "seed": sc.seed,
        "backend": kernels.BACKEND,
        "energy": report.to_json_dict(),
        "per_dimension": _per_dimension_stats(p),
        "wall_time_ms": (time.perf_counter() - t0) * 1e3,
    }
    with open(out_dir / f"{sc.name}.report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(
        f"{sc.name}: {p.n_cells} cells, energy {report.value:.6e} ({report.method}), "
        f"residual {report.residual:.3e}"
    )
    if args.verify and report.residual > RESIDUAL_THRESHOLD:
        print(
            f"verification FAILED: residual {report.residual:.3e} > {RESIDUAL_THRESHOLD:g}",
            file=sys.stderr,
        )
        return 3
    return 0


def _load_centroids_csv(path: Path, sc: Scenario, d: SeparableDensity) -> ProductCvt:
    """Rebuild the product structure from a solved centroid file.

    The k column must enumerate the Cartesian product of per-dimension
    centroid sets in last-dimension-fastest order; anything else is
    treated as corruption.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expect = ["k"] + [f"x_{i + 1}" for i in range(sc.dimension)]
        if header != expect:
            raise ConfigError(f"{path}: header {header} does not match {expect}")
        try:
            rows = [[float(v) for v in r] for r in reader if r]
        except ValueError as exc:
            raise ConfigError(f"{path}: non-numeric centroid data: {exc}") from exc
    data = np.asarray(rows, dtype=np.float64)
    n_cells = int(np.prod(sc.dims))
    if data.shape != (n_cells, sc.dimension + 1):
        raise ConfigError(f"{path}: expected {n_cells} rows, found {data.shape[0]}")
    coords = data[:, 1:]
    factors = []
    for i, (marginal, n_i) in enumerate(zip(d.marginals, sc.dims)):
        uniq = np.unique(coords[:, i])
        if uniq.size != n_i:
            raise ConfigError(
                f"{path}: column x_{i + 1} has {uniq.size} distinct values, expected {n_i}"
            )
        try:
            factors.append(from_centroids(marginal, uniq))
        except ValueError as exc:
            raise ConfigError(f"{path}: column x_{i + 1}: {exc}") from exc
    p = ProductCvt(tuple(factors), IndexMatrix(sc.dims))
    if not np.array_equal(p.materialize(), coords):
        raise ConfigError(f"{path}: rows are not the product enumeration of the column values")
    return p


def cmd_verify(args) -> int:
    sc = load_scenario(resolve_scenario(args.config))
    _apply_seed_override(sc)
    if sc.dimension > 3:
        print("verify supports at most 3 dimensions", file=sys.stderr)
        return 1
    if (2 * args.grid_res) ** sc.dimension > MAX_GRID_NODES:
        cap = int((MAX_GRID_NODES ** (1.0 / sc.dimension)) // 2)
        print(
            f"grid {2 * args.grid_res}^{sc.dimension} exceeds the "
            f"{MAX_GRID_NODES}-node cap; use --grid-res <= {cap}",
            file=sys.stderr,
        )
        return 1
    threads = args.threads or os.cpu_count() or 1
    kernels.set_threads(threads)
    d = sc.density()
    csv_path = Path.cwd() / f"{sc.name}.centroids.csv"
    try:
        if csv_path.exists():
            print(f"loading centroids from {csv_path}")
            p = _load_centroids_csv(csv_path, sc, d)
        else:
            p = build_product(d, sc.dims, sc.solver, threads=threads)
    except ConfigError as exc:
        print(f"verification FAILED: {exc}", file=sys.stderr)
        return 3
    residual = centroidality_residual(p, d)
    disp_a = verify_fixed_point(p, d, args.grid_res)
    disp_b = verify_fixed_point(p, d, 2 * args.grid_res)
    ratio = disp_a / disp_b if disp_b > 0 else float("inf")
    lo, hi = RATIO_ACCEPT
    print(f"centroidality residual: {residual:.6e} (threshold {RESIDUAL_THRESHOLD:g})")
    print(f"oracle displacement @{args.grid_res}: {disp_a:.6e}")
    print(f"oracle displacement @{2 * args.grid_res}: {disp_b:.6e}")
    print(f"convergence ratio: {ratio:.3f} (accept [{lo}, {hi}])")
    ok = residual <= RESIDUAL_THRESHOLD and lo <= ratio <= hi
    print("PASS" if ok else "FAIL")
    return 0 if ok else 3


def cmd_bench(args) -> int:
    if args.suite != "table1":
        print(f"unknown benchmark suite {args.suite!r}", file=sys.stderr)
        return 1
    lines = []
    rows_out = []
    print("| n | N | energy (raw) | energy (normalized) | reference | raw/ref | norm/ref | time (ms) |")
    print("|---|---|---|---|---|---|---|---|")
    for n, dims, reference in TABLE1_ROWS:
        t0 = time.perf_counter()
        try:
            domains = [Interval(-1.0, 1.0)] * n
            raw = SeparableDensity(
                tuple(parse_density("expquad(10)", dom, False) for dom in domains)
            )
            norm = SeparableDensity(
                tuple(parse_density("expquad(10)", dom, True) for dom in domains)
            )
            p = build_product(raw, dims, SolverConfig())
            e_raw = energy_separable(p, raw).value
            e_norm = energy_separable(p, norm).value
        except CvtError as exc:
            print(f"row n={n} failed: {exc}", file=sys.stderr)
            return 2
        dt = (time.perf_counter() - t0) * 1e3
        n_cells = p.n_cells
        r_raw = e_raw / reference
        r_norm = e_norm / reference
        print(
            f"| {n} | {n_cells} | {e_raw:.6e} | {e_norm:.6e} | {reference:.2e} "
            f"| {r_raw:.2f} | {r_norm:.2f} | {dt:.0f} |"
        )
        rows_out.append((n, n_cells, e_raw, e_norm, reference, r_raw, r_norm, dt))
    print()
    for n, n_cells, e_raw, e_norm, reference, r_raw, r_norm, _ in rows_out:
        within = min(abs(np.log(r_raw)), abs(np.log(r_norm))) <= np.log(TABLE1_MATCH_FACTOR)
        closest = "raw" if abs(np.log(r_raw)) <= abs(np.log(r_norm)) else "normalized"
        verdict = "matches" if within else "DOES NOT match"
        print(
            f"n={n}: {closest} mode {verdict} the reference within a factor of "
            f"{TABLE1_MATCH_FACTOR:g} (raw/ref {r_raw:.2f}, norm/ref {r_norm:.2f})"
        )
        lines.append((n, n_cells, e_raw, e_norm, reference, r_raw, r_norm))
    out_path = Path(args.out) if args.out else Path.cwd() / "table1.csv"
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["n", "N", "energy_raw", "energy_normalized", "reference", "ratio_raw", "ratio_normalized", "wall_time_ms"]
        )
        for row in rows_out:
            n, n_cells, e_raw, e_norm, reference, r_raw, r_norm, dt = row
            w.writerow(
                [n, n_cells, _fmt(e_raw), _fmt(e_norm), _fmt(reference), _fmt(r_raw), _fmt(r_norm), f"{dt:.3f}"]
            )
    print(f"\nwrote {out_path}")
    return 0


def cmd_plotdata(args) -> int:
    sc = load_scenario(resolve_scenario(args.config))
    _apply_seed_override(sc)
    threads = args.threads or os.cpu_count() or 1
    d = sc.density()
    p = build_product(d, sc.dims, sc.solver, threads=threads)
    out_dir = Path.cwd()
    write_centroids_csv(out_dir / f"{sc.name}.plot_centroids.csv", p)
    bpath = out_dir / f"{sc.name}.plot_boundaries.csv"
    n = p.n_dims
    with open(bpath, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if n == 1:
            # vertical tick segments in a synthetic unit y
            w.writerow(["line_id", "vertex", "x", "y"])
            for j, b in enumerate(p.factors[0].breakpoints):
                w.writerow([j, 0, _fmt(b), _fmt(0.0)])
                w.writerow([j, 1, _fmt(b), _fmt(1.0)])
        elif n == 2:
            w.writerow(["line_id", "vertex", "x_1", "x_2"])
            line = 0
            ylo, yhi = p.factors[1].domain.lo, p.factors[1].domain.hi
            for b in p.factors[0].breakpoints:
                w.writerow([line, 0, _fmt(b), _fmt(ylo)])
                w.writerow([line, 1, _fmt(b), _fmt(yhi)])
                line += 1
            xlo, xhi = p.factors[0].domain.lo, p.factors[0].domain.hi
            for b in p.factors[1].breakpoints:
                w.writerow([line, 0, _fmt(xlo), _fmt(b)])
                w.writerow([line, 1, _fmt(xhi), _fmt(b)])
                line += 1
        else:
            # axis-aligned planes are fully described by per-dimension breakpoints
            w.writerow(["dim", "index", "value"])
            for i, f in enumerate(p.factors, start=1):
                for j, b in enumerate(f.breakpoints):
                    w.writerow([i, j, _fmt(b)])
    print(f"wrote {sc.name}.plot_centroids.csv and {sc.name}.plot_boundaries.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cvt",
        description="Product tessellation solver and verification tools.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a scenario and write its outputs")
    p_solve.add_argument("config", help="scenario file path or bundled scenario name")
    p_solve.add_argument("--verify", action="store_true", help="fail (exit 3) if the centroidality residual exceeds 1e-6")
    p_solve.add_argument("--normalized", action="store_true", help="force normalized density mode")
    p_solve.add_argument("--threads", type=int, default=None, metavar="T")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run a benchmark suite")
    p_bench.add_argument("suite", help="suite name (table1)")
    p_bench.add_argument("--out", default=None, help="CSV output path (default table1.csv)")
    p_bench.set_defaults(func=cmd_bench)

    p_verify = sub.add_parser("verify", help="check a scenario against the grid oracle")
    p_verify.add_argument("config")
    p_verify.add_argument("--grid-res", type=int, default=256, metavar="R")
    p_verify.add_argument("--threads", type=int, default=None, metavar="T")
    p_verify.set_defaults(func=cmd_verify)

    p_plot = sub.add_parser("plotdata", help="emit plotting CSVs for a scenario")
    p_plot.add_argument("config")
    p_plot.add_argument("--threads", type=int, default=None, metavar="T")
    p_plot.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CvtError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
