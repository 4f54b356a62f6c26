"""Command line: ``kentropy run <config>``, ``kentropy verify <suite>``, ``kentropy catalog``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    default_profile_grid,
    euler_characteristic,
    fit_short_time_slope,
    genus_bound_check,
    karp_pinsky_coefficient,
    karp_pinsky_fit,
    rigidity_defect,
)
from .config import ConfigError, ExperimentConfig, load_config
from .errors import ComputationError, DomainError
from .functional import EntropySearch, density_time_profile, entropy, gaussian_density
from .kernels import KernelSpec, kernel
from .shapes import CATALOG, shape_catalog
from .submanifold import curvature_at, curvature_field, window_boundary_distance

__all__ = ["execute", "load_result", "main", "write_result"]

RESULT_FORMAT = "kentropy-result/1"
LIGHT_SEARCH = EntropySearch(surface_seeds=16, offset_seeds=8, tau_points=12, refine_top=2)


# -- serialization ----------------------------------------------------------------


def _plain(value):
    """Convert numpy scalars and arrays to plain Python values."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt(value)
    if isinstance(value, list):
        return "[" + " ".join(_cell(v) for v in value) + "]"
    return str(value)


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    if text.startswith("[") and text.endswith("]"):
        return [_parse_cell(v) for v in text[1:-1].split()]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def write_result(path: Path, fmt: str, header: dict, records: list) -> None:
    """Write records atomically so failed runs leave no output file.

    JSON floats use Python's shortest round-trip repr; CSV cells use 17
    significant digits.  Provenance goes into the JSON header or ``# key:``
    comment lines of the CSV.
    """
    header = _plain(header)
    records = _plain(records)
    if fmt == "json":
        text = json.dumps({**header, "records": records}, indent=2, sort_keys=False) + "\n"
    else:
        buf = io.StringIO()
        for key, value in header.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        columns = []
        for rec in records:
            for key in rec:
                if key not in columns:
                    columns.append(key)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            writer.writerow([_cell(rec[c]) if c in rec else "" for c in columns])
        text = buf.getvalue()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".kentropy-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def load_result(path) -> tuple[dict, list]:
    """Read a result file back into ``(header, records)``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        data = json.loads(text)
        records = data.pop("records")
        return data, records
    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = json.loads(value)
        else:
            body.append(line)
    rows = list(csv.reader(body))
    columns = rows[0]
    records = []
    for row in rows[1:]:
        records.append({c: _parse_cell(v) for c, v in zip(columns, row) if v != ""})
    return header, records


# -- tasks ----------------------------------------------------------------------


def _shape(cfg: ExperimentConfig):
    sigma = shape_catalog(cfg.shape_name, cfg.shape_params, terms=cfg.shape_terms or None)
    amb = cfg.ambient
    if amb:
        if "kind" in amb and amb["kind"] != sigma.ambient.kind:
            raise DomainError(f"[ambient] kind {amb['kind']} does not match shape ambient {sigma.ambient.kind}")
        if "dim" in amb and amb["dim"] != sigma.ambient.dim:
            raise DomainError(f"[ambient] dim {amb['dim']} does not match shape ambient dimension {sigma.ambient.dim}")
        if "kappa" in amb and not math.isclose(amb["kappa"], sigma.ambient.kappa, abs_tol=1e-15):
            raise DomainError(f"[ambient] kappa {amb['kappa']} does not match shape kappa {sigma.ambient.kappa}")
    return sigma


def _default_point(sigma):
    lo, hi = sigma.seed_box
    return tuple(0.5 * (lo + hi))


def _window(sigma, x0=None) -> dict:
    info = {"lower": list(sigma.lower), "upper": list(sigma.upper), "compact": sigma.compact}
    if x0 is not None:
        info["boundary_distance"] = window_boundary_distance(sigma, x0)
    return info


def _task_kernel_table(cfg, prov):
    p = cfg.task_params
    spec = KernelSpec(p["n"], p.get("kappa", 0.0))
    prov["grid"] = {"t": p["t"], "r": p["r"]}
    records = []
    for t in p["t"]:
        values = np.atleast_1d(kernel(spec, t, np.asarray(p["r"], dtype=float)))
        for r, v in zip(p["r"], values):
            records.append({"quantity": "kernel", "n": spec.n, "kappa": spec.kappa, "t": t, "r": r, "value": float(v)})
    return records


def _task_entropy(cfg, prov):
    sigma = _shape(cfg)
    p = dict(cfg.task_params)
    if "tau_span" in p:
        if len(p["tau_span"]) != 2:
            raise DomainError("tau_span needs two numbers")
        p["tau_span"] = tuple(p["tau_span"])
    search = EntropySearch(**p, seed_order=cfg.seed_order)
    res = entropy(sigma, sigma.ambient.kappa, search)
    prov["search"] = {k: getattr(search, k) for k in search.__dataclass_fields__}
    prov["window"] = _window(sigma, res.argmax_x0)
    prov["tau_scale"] = res.scale
    return [
        {
            "quantity": "entropy",
            "value": res.lam,
            "argmax_x0": res.argmax_x0,
            "argmax_tau": res.argmax_tau,
            "probes": res.probes,
            "status": res.status,
            "window_tail": res.max_window_tail,
        }
    ]


def _task_short_time(cfg, prov):
    sigma = _shape(cfg)
    p = cfg.task_params
    kappa = sigma.ambient.kappa
    u = np.asarray(p.get("point", _default_point(sigma)), dtype=float)
    data = curvature_at(sigma, u)
    s_values = p.get("s") or default_profile_grid(data, kappa)
    x0 = sigma.position(u)[0]
    profile = density_time_profile(sigma, kappa, x0, s_values, p.get("tol", 1e-11))
    fit = fit_short_time_slope(profile)
    defect = rigidity_defect(sigma, u, kappa)
    prov["grid"] = fit.grid
    prov["residual"] = fit.residual
    prov["window"] = _window(sigma, x0)
    records = [{"quantity": "density", "s": s, "value": v} for s, v in profile]
    records.append(
        {
            "quantity": "short_time_slope",
            "value": fit.coefficient(1.0),
            "expected": defect / 3.0,
            "coefficients": [c for _, c in fit.coefficients],
            "exponents": [e for e, _ in fit.coefficients],
            "residual": fit.residual,
            "point": u,
        }
    )
    return records


def _task_ball_volume(cfg, prov):
    sigma = _shape(cfg)
    p = cfg.task_params
    u = np.asarray(p.get("point", _default_point(sigma)), dtype=float)
    x0 = sigma.position(u)[0]
    fit = karp_pinsky_fit(sigma, x0, p.get("radii"), p.get("tol", 1e-3), u0=u)
    expected = karp_pinsky_coefficient(curvature_at(sigma, u), sigma.dim)
    prov["grid"] = fit.grid
    prov["residual"] = fit.residual
    prov["window"] = _window(sigma, x0)
    return [
        {
            "quantity": "karp_pinsky_A",
            "value": fit.coefficient(2.0),
            "expected": expected,
            "c3": fit.coefficient(3.0),
            "residual": fit.residual,
            "point": u,
        }
    ]


def _task_rigidity(cfg, prov):
    sigma = _shape(cfg)
    p = cfg.task_params
    kappa = sigma.ambient.kappa
    if "points" in p:
        pts = np.array(p["points"], dtype=float)
    else:
        k = p.get("grid", 4)
        lo, hi = sigma.seed_box
        axes = [lo[a] + (np.arange(k) + 0.5) / k * (hi[a] - lo[a]) for a in range(sigma.dim)]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    data = curvature_field(sigma, pts)
    n = sigma.dim
    prov["grid"] = pts
    records = []
    for i, u in enumerate(pts):
        defect = 0.5 * data.normA2[i] + 0.25 * data.normH2[i] - data.scalar[i] - n * (n - 1) * kappa**2
        records.append(
            {
                "quantity": "rigidity_defect",
                "point": u,
                "value": defect,
                "traceless_term": 1.5 * data.traceless2[i],
                "normA2": data.normA2[i],
                "normH2": data.normH2[i],
                "traceless2": data.traceless2[i],
                "scalar": data.scalar[i],
            }
        )
    return records


def _task_genus(cfg, prov):
    sigma = _shape(cfg)
    p = cfg.task_params
    if "lambda" in p:
        lam = p["lambda"]
        prov["lambda_source"] = "config"
    else:
        lam = entropy(sigma, sigma.ambient.kappa, LIGHT_SEARCH).lam
        prov["lambda_source"] = "light entropy search"
    rep = genus_bound_check(sigma, lam, p.get("tol", 1e-6))
    return [
        {"quantity": "euler_characteristic", "value": rep.euler_characteristic, "genus": rep.genus},
        {
            "quantity": "genus_bound",
            "left": rep.left,
            "right": rep.right,
            "right_quarter": rep.right_quarter,
            "lambda": rep.lam,
            "holds": rep.inequality_holds,
            "consistent": rep.consistent,
        },
    ]


TASKS = {
    "kernel-table": _task_kernel_table,
    "entropy": _task_entropy,
    "short-time": _task_short_time,
    "ball-volume": _task_ball_volume,
    "rigidity": _task_rigidity,
    "genus": _task_genus,
}


def execute(cfg: ExperimentConfig) -> Path:
    """Run the configured task and write its result file."""
    prov: dict = {}
    records = TASKS[cfg.task](cfg, prov)
    header = {
        "format": RESULT_FORMAT,
        "version": __version__,
        "config_hash": cfg.config_hash,
        "task": cfg.task,
        "shape": {"name": cfg.shape_name, "params": list(cfg.shape_params), "terms": [list(t) for t in cfg.shape_terms]},
        "seed_order": cfg.seed_order,
        "provenance": prov,
    }
    write_result(cfg.output_path, cfg.output_format, header, records)
    return cfg.output_path


# -- entry point ------------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        path = execute(cfg)
    except (DomainError, ComputationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


def _cmd_verify(args) -> int:
    from .verification import SUITES, run_suite

    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    ok = run_suite(args.suite, out=sys.stdout)
    return 0 if ok else 1


def _cmd_catalog(args) -> int:
    width = max(len(name) for name in CATALOG)
    for name, entry in CATALOG.items():
        print(f"{name:<{width}}  [{entry.parameters}]  {entry.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kentropy", description="kappa-entropy laboratory")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="path to an INI experiment file")
    run.set_defaults(func=_cmd_run)
    verify = sub.add_parser("verify", help="run an acceptance suite")
    verify.add_argument("suite", help="kernels, expansions, entropy or all")
    verify.set_defaults(func=_cmd_verify)
    catalog = sub.add_parser("catalog", help="list catalog shapes")
    catalog.set_defaults(func=_cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
