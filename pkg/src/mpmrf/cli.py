"""Config-driven batch pipeline.

Usage::

    mpmrf <decluster|fit|aggregate|allocate|asymptotics> --config cfg.json
          [--seed N] [--out DIR]

All analysis inputs live in the JSON config so runs are reproducible; the
only flag overrides are the seed and the output directory.  Every output
file starts with a comment line recording the config hash, the seed, and the
package version.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure (a diagnostics file is written in the output directory).
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from .aggregation import aggregate_pmf_fft, var_tvar
from .allocation import (
    covariance_contributions,
    expected_allocations,
    tvar_contributions_euler,
)
from .asymptotics import (
    SplashParams,
    average_loss_distribution,
    homogeneous_params,
    splash_simulate,
    splash_total_pmf,
    variance_of_average,
)
from .errors import ConfigError, MpmrfError
from .estimation import (
    decluster,
    fit_mpmrf,
    implied_correlations,
    pearson_correlation_matrix,
    poisson_gof,
)
from .mrf import MpmrfParams
from .severity import LatticePmf, Gpd, MixedErlang, dgpd_pmf, discrete_pmf
from .trees import Tree, binary_tree, build_tree, kruskal_mst, star_tree

__all__ = ["main"]

MAY_SEP_DAYS = 153  # May 1 through September 30


# -- config plumbing ---------------------------------------------------------

def _load_config(path: str) -> tuple[dict, str]:
    try:
        text = Path(path).read_text()
        cfg = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    canonical = json.dumps(cfg, sort_keys=True).encode()
    return cfg, hashlib.sha256(canonical).hexdigest()[:12]


def _metadata_line(config_hash: str, seed) -> str:
    return f"# config_hash={config_hash} seed={seed} version={__version__}"


def _write_csv(path: Path, header: list[str], rows, meta: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(meta + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _resolve_tree(cfg: dict, counts: np.ndarray | None) -> Tree:
    spec = cfg.get("tree", "mst")
    if spec == "mst":
        if counts is None:
            raise ConfigError("tree 'mst' needs counts data to build from")
        return kruskal_mst(pearson_correlation_matrix(counts))
    if isinstance(spec, dict) and "edges" in spec:
        edges = [(int(u), int(v)) for u, v in spec["edges"]]
        if "num_vertices" in spec:
            d = int(spec["num_vertices"])
        elif edges:
            d = max(max(e) for e in edges)
        else:
            raise ConfigError("tree with no edges needs 'num_vertices'")
        return build_tree(d, edges)
    raise ConfigError("tree must be 'mst' or {'edges': [[u, v], ...]}")


def _resolve_params(cfg: dict) -> tuple[MpmrfParams | None, np.ndarray | None]:
    """Exactly one frequency-parameter source: inline/file params or counts."""
    sources = [k for k in ("params", "params_file", "counts_csv") if k in cfg]
    if len(sources) != 1:
        raise ConfigError(
            f"need exactly one of params / params_file / counts_csv, got {sources}"
        )
    if "params" in cfg:
        return MpmrfParams.from_json(json.dumps(cfg["params"])), None
    if "params_file" in cfg:
        return MpmrfParams.from_json(Path(cfg["params_file"]).read_text()), None
    counts = _read_counts_csv(cfg["counts_csv"])
    return None, counts


def _read_counts_csv(path: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) < 2:
        raise ConfigError(f"{path}: empty counts file")
    # first column is the period label, remaining columns are station counts
    return np.array([[int(x) for x in row[1:]] for row in rows[1:]], dtype=np.int64)


def _severity_from_spec(spec: dict, h: float):
    kind = spec.get("type")
    if kind == "dgpd":
        gpd = Gpd(xi=float(spec["xi"]), sigma=float(spec["sigma"]), u=float(spec["u"]))
        return dgpd_pmf(gpd, h, int(spec["n_cells"]))
    if kind == "discrete":
        points = spec.get("points", spec.get("values"))
        return discrete_pmf(points, spec["masses"], spec.get("h", h))
    if kind == "mixed_erlang":
        return MixedErlang(beta=float(spec["beta"]), weights=np.asarray(spec["weights"]))
    raise ConfigError(f"unknown severity type {kind!r}")


def _resolve_severities(cfg: dict, d: int) -> list[LatticePmf]:
    specs = cfg.get("severities")
    if specs is None:
        raise ConfigError("config needs a 'severities' list")
    if len(specs) == 1 and d > 1:
        specs = specs * d
    if len(specs) != d:
        raise ConfigError(f"need {d} severities, got {len(specs)}")
    h = float(cfg.get("h", 1.0))
    return [_severity_from_spec(s, h) for s in specs]


# -- subcommands -------------------------------------------------------------

def cmd_decluster(cfg: dict, out: Path, seed, meta: str) -> None:
    path = cfg.get("daily_csv")
    if path is None:
        raise ConfigError("decluster needs 'daily_csv'")
    thresholds = cfg.get("thresholds")
    if thresholds is None:
        raise ConfigError("decluster needs 'thresholds' (station -> mm)")
    series: dict[str, list[tuple[dt.date, float]]] = defaultdict(list)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [c.strip() for c in header] != ["station", "date", "precip_mm"]:
            raise ConfigError(f"{path}: expected header station,date,precip_mm")
        for station, date_s, value_s in reader:
            value = float(value_s) if value_s.strip() else np.nan
            series[station].append((dt.date.fromisoformat(date_s), value))

    count_rows = []
    severity_rows = []
    histogram: dict[int, int] = defaultdict(int)
    max_missing = float(cfg.get("max_missing_fraction", 0.1))
    for station in sorted(series):
        u = float(thresholds[station]) if isinstance(thresholds, dict) else float(thresholds)
        by_year: dict[int, list[tuple[dt.date, float]]] = defaultdict(list)
        for date, value in series[station]:
            if 5 <= date.month <= 9:
                by_year[date.year].append((date, value))
        for year in sorted(by_year):
            obs = sorted(by_year[year])
            present = sum(1 for _, v in obs if np.isfinite(v))
            if present < (1.0 - max_missing) * MAY_SEP_DAYS:
                continue
            dates = [d for d, _ in obs]
            values = [v for _, v in obs]
            events = decluster(values, u)
            count_rows.append([station, year, events.n_events])
            for sev, idx in zip(events.severities, events.max_indices):
                severity_rows.append([station, dates[idx].isoformat(), f"{sev:.10g}"])
            for size in events.cluster_sizes:
                histogram[int(size)] += 1
    _write_csv(out / "event_counts.csv", ["station", "year", "count"], count_rows, meta)
    _write_csv(
        out / "event_severities.csv",
        ["station", "event_date", "severity_mm"],
        severity_rows,
        meta,
    )
    _write_csv(
        out / "cluster_size_histogram.csv",
        ["cluster_size", "frequency"],
        [[k, histogram[k]] for k in sorted(histogram)],
        meta,
    )


def cmd_fit(cfg: dict, out: Path, seed, meta: str) -> None:
    params, counts = _resolve_params(cfg)
    if counts is None:
        raise ConfigError("fit needs 'counts_csv' as the parameter source")
    corr = pearson_correlation_matrix(counts)
    tree = _resolve_tree(cfg, counts)
    fit = fit_mpmrf(tree, counts, root=int(cfg.get("root", 1)))
    gof_rows = [
        [v, f"{poisson_gof(counts[:, v - 1]):.6g}"] for v in range(1, tree.num_vertices + 1)
    ]
    with open(out / "fit.json", "w") as fh:
        fh.write(meta + "\n")
        json.dump(fit.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(
        out / "empirical_correlations.csv",
        ["u", "v", "correlation"],
        [
            [u, v, f"{corr.weights[u - 1, v - 1]:.6g}"]
            for u in range(1, corr.num_vertices + 1)
            for v in range(u + 1, corr.num_vertices + 1)
        ],
        meta,
    )
    tree_rows = [[u, v] for u, v in tree.edges]
    _write_csv(out / "tree_edges.csv", ["u", "v"], tree_rows, meta)
    implied = implied_correlations(fit.params, tree)
    _write_csv(
        out / "implied_correlations.csv",
        ["u", "v", "correlation"],
        [
            [u, v, f"{implied.weights[u - 1, v - 1]:.6g}"]
            for u in range(1, tree.num_vertices + 1)
            for v in range(u + 1, tree.num_vertices + 1)
        ],
        meta,
    )
    _write_csv(out / "poisson_gof.csv", ["station", "p_value"], gof_rows, meta)


def cmd_aggregate(cfg: dict, out: Path, seed, meta: str) -> None:
    params, counts = _resolve_params(cfg)
    tree = _resolve_tree(cfg, counts)
    if params is None:
        params = fit_mpmrf(tree, counts).params
    severities = _resolve_severities(cfg, tree.num_vertices)
    if all(isinstance(s, MixedErlang) for s in severities):
        _mixed_erlang_aggregate(cfg, params, tree, severities, out, meta)
        return
    n_fft = cfg.get("n_fft")
    agg = aggregate_pmf_fft(params, tree, severities, n_fft=n_fft)
    pmf = agg.pmf.masses
    keep = pmf > float(cfg.get("pmf_floor", 0.0))
    rows = [
        [f"{k * agg.h:.10g}", f"{pmf[k]:.12e}", f"{agg.cdf[k]:.12e}"]
        for k in np.nonzero(keep)[0]
    ]
    _write_csv(out / "aggregate_pmf.csv", ["x", "pmf", "cdf"], rows, meta)
    risk_rows = [
        ["mean", f"{agg.mean():.10g}"],
        ["variance", f"{agg.variance():.10g}"],
        ["closed_form_mean", f"{agg.diagnostics['closed_form_mean']:.10g}"],
        ["closed_form_variance", f"{agg.diagnostics['closed_form_variance']:.10g}"],
        ["n_fft", agg.diagnostics["n_fft"]],
        ["tail_mass", f"{agg.diagnostics['tail_mass']:.3e}"],
    ]
    for kappa in cfg.get("kappas", [0.9, 0.95, 0.99]):
        v, t = var_tvar(agg, float(kappa))
        risk_rows.append([f"var_{kappa}", f"{v:.10g}"])
        risk_rows.append([f"tvar_{kappa}", f"{t:.10g}"])
    _write_csv(out / "risk_measures.csv", ["measure", "value"], risk_rows, meta)


def _mixed_erlang_aggregate(cfg, params, tree, severities, out: Path, meta: str) -> None:
    from .aggregation import aggregate_cdf_mixed_erlang

    x_grid = np.asarray(cfg.get("x_grid", np.arange(0.0, 100.0, 1.0)), dtype=float)
    n_fft = int(cfg.get("n_fft", 4096))
    cdf = aggregate_cdf_mixed_erlang(params, tree, severities, n_fft, x_grid)
    rows = [[f"{x:.10g}", f"{c:.12g}"] for x, c in zip(x_grid, cdf)]
    _write_csv(out / "aggregate_cdf.csv", ["x", "cdf"], rows, meta)


def cmd_allocate(cfg: dict, out: Path, seed, meta: str) -> None:
    params, counts = _resolve_params(cfg)
    tree = _resolve_tree(cfg, counts)
    if params is None:
        params = fit_mpmrf(tree, counts).params
    severities = _resolve_severities(cfg, tree.num_vertices)
    if not all(isinstance(s, LatticePmf) for s in severities):
        raise ConfigError("allocate needs lattice severities (dgpd or discrete)")
    n_fft = cfg.get("n_fft")
    agg = aggregate_pmf_fft(params, tree, severities, n_fft=n_fft)
    alloc = expected_allocations(params, tree, severities, n_fft=agg.diagnostics["n_fft"])
    rows = []
    for kappa in cfg.get("kappas", [0.0, 0.5, 0.8, 0.9, 0.95, 0.99]):
        kappa = float(kappa)
        euler = tvar_contributions_euler(alloc, agg, kappa)
        covar = covariance_contributions(
            params,
            tree,
            severities,
            agg,
            kappa,
            weighting=cfg.get("covariance_weighting", "full_covariance"),
        )
        _, tvar = var_tvar(agg, kappa)
        for v in range(1, tree.num_vertices + 1):
            rows.append(
                [
                    f"{kappa:g}",
                    v,
                    f"{euler[v - 1]:.10g}",
                    f"{100 * euler[v - 1] / tvar:.6g}",
                    f"{covar[v - 1]:.10g}",
                    f"{100 * covar[v - 1] / tvar:.6g}",
                    f"{euler[v - 1] - covar[v - 1]:.10g}",
                ]
            )
    _write_csv(
        out / "tvar_contributions.csv",
        [
            "kappa",
            "station",
            "euler",
            "euler_share_pct",
            "covariance",
            "covariance_share_pct",
            "difference",
        ],
        rows,
        meta,
    )


def cmd_asymptotics(cfg: dict, out: Path, seed, meta: str) -> None:
    did_something = False
    if "splash" in cfg:
        did_something = True
        s = cfg["splash"]
        sp = SplashParams(
            lambda_r=float(s["lambda_r"]), alpha=float(s["alpha"]), chi=int(s["chi"])
        )
        x_max = int(s.get("x_max", 50))
        n_sim = int(s.get("n_sim", 10 ** 5))
        pmf = splash_total_pmf(sp, x_max)
        sample = splash_simulate(sp, n_sim, seed)
        valid = sample.valid()
        emp = np.bincount(valid, minlength=x_max + 1)[: x_max + 1] / valid.size
        se = np.sqrt(np.maximum(emp * (1 - emp), 1e-30) / valid.size)
        rows = [
            [x, f"{pmf[x]:.12e}", f"{emp[x]:.12e}", f"{se[x]:.6e}"]
            for x in range(x_max + 1)
        ]
        _write_csv(
            out / "splash_pmf.csv", ["x", "pmf_closed_form", "pmf_mc", "se"], rows, meta
        )
    if "lln" in cfg:
        did_something = True
        s = cfg["lln"]
        family = s.get("family", "binary")
        sizes = s["sizes"]
        if family == "binary":
            trees = [binary_tree(int(depth)).base for depth in sizes]
        elif family == "star":
            trees = [star_tree(int(d)).base for d in sizes]
        else:
            raise ConfigError(f"unknown tree family {family!r}")
        severity = _severity_from_spec(s["severity"], float(s.get("h", 1.0)))
        lam, alpha = float(s["lambda"]), float(s["alpha"])
        var_rows = []
        for tree in trees:
            params = homogeneous_params(tree, lam, alpha)
            var_rows.append(
                [
                    tree.num_vertices,
                    f"{variance_of_average(params, tree, [severity] * tree.num_vertices):.10g}",
                ]
            )
        _write_csv(out / "variance_of_average.csv", ["tree_size", "var_avg"], var_rows, meta)
        records = average_loss_distribution(
            trees, lam, alpha, severity, n_fft=s.get("n_fft")
        )
        rows = []
        for rec in records:
            keep = rec["pmf"] > 1e-12
            for g, c in zip(rec["grid"][keep], rec["cdf"][keep]):
                rows.append([rec["d"], f"{g:.10g}", f"{c:.12g}"])
        _write_csv(out / "average_loss_cdf.csv", ["tree_size", "x", "cdf"], rows, meta)
    if not did_something:
        raise ConfigError("asymptotics config needs a 'splash' and/or 'lln' section")


COMMANDS = {
    "decluster": cmd_decluster,
    "fit": cmd_fit,
    "aggregate": cmd_aggregate,
    "allocate": cmd_allocate,
    "asymptotics": cmd_asymptotics,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mpmrf",
        description="Dependent compound-loss portfolio pipeline (batch, config-driven).",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON pipeline configuration")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", default=None, help="override output directory")
    args = parser.parse_args(argv)

    out = Path(".")
    try:
        cfg, config_hash = _load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        out = Path(args.out if args.out is not None else cfg.get("out_dir", "."))
        out.mkdir(parents=True, exist_ok=True)
        meta = _metadata_line(config_hash, seed)
        COMMANDS[args.command](cfg, out, seed, meta)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MpmrfError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        try:
            with open(out / "diagnostics.txt", "w") as fh:
                fh.write(f"{type(exc).__name__}: {exc}\n")
        except OSError:
            pass
        return 3


if __name__ == "__main__":
    sys.exit(main())
