"""Experiment configuration files.

The format is INI (``configparser``) with these sections::

    [shape]        name, params (space separated), terms (graph only: "i j c; i j c")
    [ambient]      kind (euclidean | hyperbolic), dim, kappa   -- optional cross-check
    [task]         kind plus task keys (see TASK_KEYS)
    [output]       path, format (json | csv; default from the extension)
    [run]          seed_order (integer, default 0)

Lists are whitespace separated; lists of points are ``;`` separated.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ConfigError", "ExperimentConfig", "TASK_KEYS", "load_config", "parse_config"]

TASK_KEYS = {
    "kernel-table": {"n", "kappa", "t", "r"},
    "entropy": {
        "surface_seeds",
        "offset_seeds",
        "tau_points",
        "tau_span",
        "refine_top",
        "max_evaluations",
        "patience",
        "step_tol",
        "screen_tol",
        "refine_tol",
    },
    "short-time": {"point", "s", "tol"},
    "ball-volume": {"point", "radii", "tol"},
    "rigidity": {"points", "grid"},
    "genus": {"lambda", "tol"},
}
REQUIRED_KEYS = {"kernel-table": {"n", "t", "r"}}
SECTIONS = {"shape", "ambient", "task", "output", "run"}
SHAPE_KEYS = {"name", "params", "terms"}
AMBIENT_KEYS = {"kind", "dim", "kappa"}
OUTPUT_KEYS = {"path", "format"}
RUN_KEYS = {"seed_order"}
TOLERANCE_KEYS = {"tol", "step_tol", "screen_tol", "refine_tol"}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based or None."""

    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        where = f"{source}:{line}" if line else source
        super().__init__(f"{where}: {message}")
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    task_params: dict
    output_path: Path
    output_format: str
    shape_name: str | None = None
    shape_params: tuple = ()
    shape_terms: tuple = ()
    ambient: dict = field(default_factory=dict)
    seed_order: int = 0
    config_hash: str = ""
    source: str = "<config>"
    lines: dict = field(default_factory=dict, repr=False, compare=False)

    def line_of(self, section: str, key: str | None = None) -> int | None:
        return self.lines.get((section, key))


def _line_map(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            lines.setdefault((section, None), i)
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), i)
    return lines


def _floats(text: str, what: str, err):
    try:
        return [float(v) for v in text.split()]
    except ValueError:
        raise err(f"{what}: expected numbers, got {text!r}") from None


def _points(text: str, what: str, err):
    return [tuple(_floats(chunk, what, err)) for chunk in text.split(";") if chunk.strip()]


def parse_config(text: str, source: str = "<config>", base: Path | None = None) -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises:
        ConfigError: with the offending line for syntax and value problems.
    """
    lines = _line_map(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("syntax error: content before the first [section]", source, exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"syntax error: {exc.errors[0][1].strip() if exc.errors else exc}", source, line) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], source, getattr(exc, "lineno", None)) from None

    def error_at(section, key=None):
        def make(message):
            return ConfigError(message, source, lines.get((section, key)) or lines.get((section, None)))

        return make

    for section in parser.sections():
        if section.lower() not in SECTIONS:
            raise error_at(section.lower())(f"unknown section [{section}]")
    allowed = {"shape": SHAPE_KEYS, "ambient": AMBIENT_KEYS, "output": OUTPUT_KEYS, "run": RUN_KEYS}
    for section, keys in allowed.items():
        if parser.has_section(section):
            for key in parser[section]:
                if key not in keys:
                    raise error_at(section, key)(f"unknown key {key!r} in [{section}]")

    if not parser.has_section("task") or "kind" not in parser["task"]:
        raise error_at("task")("missing [task] kind")
    task = parser["task"]["kind"].strip()
    if task not in TASK_KEYS:
        raise error_at("task", "kind")(f"unknown task {task!r}; expected one of {', '.join(TASK_KEYS)}")
    params = {}
    for key, value in parser["task"].items():
        if key == "kind":
            continue
        if key not in TASK_KEYS[task]:
            raise error_at("task", key)(f"key {key!r} is not valid for task {task!r}")
        err = error_at("task", key)
        if key in ("point",):
            params[key] = tuple(_floats(value, key, err))
        elif key == "points":
            params[key] = _points(value, key, err)
        elif key in ("t", "r", "s", "radii", "tau_span"):
            params[key] = _floats(value, key, err)
            if not params[key]:
                raise err(f"{key}: empty list")
        elif key in ("n", "surface_seeds", "offset_seeds", "tau_points", "refine_top", "max_evaluations", "patience", "grid"):
            try:
                params[key] = int(value)
            except ValueError:
                raise err(f"{key}: expected an integer, got {value!r}") from None
            if params[key] < (1 if key in ("n", "tau_points", "refine_top", "max_evaluations", "patience", "grid") else 0):
                raise err(f"{key}: out of range")
        else:
            vals = _floats(value, key, err)
            if len(vals) != 1:
                raise err(f"{key}: expected one number")
            params[key] = vals[0]
        if key in TOLERANCE_KEYS and not params[key] > 0:
            raise err(f"{key}: tolerances must be positive")
    for key in REQUIRED_KEYS.get(task, ()):
        if key not in params:
            raise error_at("task")(f"task {task!r} needs key {key!r}")
    if task == "kernel-table":
        if any(t <= 0 for t in params["t"]):
            raise error_at("task", "t")("times must be positive")
        if any(r < 0 for r in params["r"]):
            raise error_at("task", "r")("radii must be nonnegative")
        if params.get("kappa", 0.0) < 0:
            raise error_at("task", "kappa")("kappa must be nonnegative")

    shape_name = None
    shape_params: tuple = ()
    shape_terms: tuple = ()
    if parser.has_section("shape"):
        sec = parser["shape"]
        if "name" not in sec:
            raise error_at("shape")("missing shape name")
        shape_name = sec["name"].strip()
        shape_params = tuple(_floats(sec.get("params", ""), "params", error_at("shape", "params")))
        if "terms" in sec:
            terms = _points(sec["terms"], "terms", error_at("shape", "terms"))
            if any(len(t) != 3 for t in terms):
                raise error_at("shape", "terms")("terms are 'i j c' triples separated by ';'")
            shape_terms = tuple(terms)
    elif task != "kernel-table":
        raise error_at("task", "kind")(f"task {task!r} needs a [shape] section")

    ambient = {}
    if parser.has_section("ambient"):
        sec = parser["ambient"]
        if "kind" in sec:
            kind = sec["kind"].strip()
            if kind not in ("euclidean", "hyperbolic"):
                raise error_at("ambient", "kind")(f"unknown ambient kind {kind!r}")
            ambient["kind"] = kind
        for key in ("dim", "kappa"):
            if key in sec:
                vals = _floats(sec[key], key, error_at("ambient", key))
                if len(vals) != 1:
                    raise error_at("ambient", key)(f"{key}: expected one number")
                ambient[key] = int(vals[0]) if key == "dim" else vals[0]

    if not parser.has_section("output") or "path" not in parser["output"]:
        raise error_at("output")("missing [output] path")
    out = Path(parser["output"]["path"].strip())
    if base is not None and not out.is_absolute():
        out = base / out
    fmt = parser["output"].get("format", out.suffix.lstrip(".")).strip().lower()
    if fmt not in ("json", "csv"):
        raise error_at("output", "format" if "format" in parser["output"] else "path")(
            f"output format must be json or csv, got {fmt!r}"
        )

    seed_order = 0
    if parser.has_section("run") and "seed_order" in parser["run"]:
        try:
            seed_order = int(parser["run"]["seed_order"])
        except ValueError:
            raise error_at("run", "seed_order")("seed_order must be an integer") from None

    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
    return ExperimentConfig(
        task=task,
        task_params=params,
        output_path=out,
        output_format=fmt,
        shape_name=shape_name,
        shape_params=shape_params,
        shape_terms=shape_terms,
        ambient=ambient,
        seed_order=seed_order,
        config_hash=digest,
        source=source,
        lines=lines,
    )


def load_config(path) -> ExperimentConfig:
    """Read a config file; relative output paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), path.parent)
