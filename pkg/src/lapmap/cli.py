"""Command-line interface.

    lapmap decolorize INPUT [-o OUT.png] [flags]
    lapmap daltonize  INPUT [-o OUT.png] [--cvd deutan] [flags]
    lapmap gamutmap   INPUT [-o OUT.lmch] --gamut x0,y0,x1,y1,... [flags]
    lapmap fuse       INPUT [INPUT ...] [-o OUT.png] [--groups 0,1,2;3] [flags]
    lapmap eval       --src A --dst B [--report R.json]

Flags may also come from a config file of ``key = value`` lines
(``--config FILE``); explicit command-line flags win.  A JSON report
(``--report``) captures the resolved configuration, fitted parameters,
cost trace, metrics, timings, and library versions; given the same seed
and inputs, everything in it except the timings is bit-reproducible.

Exit codes: 0 success, 1 configuration error, 2 I/O error,
3 non-finite objective.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .apps import (
    AppOptions,
    AppResult,
    daltonize,
    decolorize,
    evaluate_pair,
    fuse,
    gamut_map,
)
from .graph import GraphParams
from .images import Image, ImageFormatError, load_image, save_image, save_lmch
from .optimize import NonFiniteCostError, SolveOptions


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved configuration of one CLI run."""

    command: str
    inputs: tuple[str, ...] = ()
    output: str | None = None
    report: str | None = None
    sigma_r: float = 1.0
    sigma_s: float = 0.0
    connectivity: str = "four_neighbors"
    knn_k: int = 8
    mu0: tuple[float, ...] | None = None
    mu1: tuple[float, ...] | None = None
    mu2: float | None = None
    mu3: float | None = None
    max_side: int = 300
    max_vertices: int = 10000
    max_iters: int = 500
    seed: int = 0
    restarts: int = 3
    family: str = "gamma"
    cvd: str = "deutan"
    gamut: str | None = None
    groups: str | None = None
    anchors: str | None = None
    src: str | None = None
    dst: str | None = None

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def parse_gamut(text: str) -> np.ndarray:
    """Comma-separated vertex coordinates -> (v, 2) polygon array."""
    try:
        values = [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad --gamut value: {exc}") from exc
    if len(values) < 6 or len(values) % 2 != 0:
        raise ConfigError(
            f"--gamut needs an even number (>= 6) of coordinates, got {len(values)}"
        )
    return np.array(values).reshape(-1, 2)


def parse_groups(text: str) -> tuple[tuple[int, ...], ...]:
    """Semicolon-separated channel groups, e.g. '0,1,2;3'."""
    try:
        groups = tuple(
            tuple(int(c) for c in part.split(",") if c.strip() != "")
            for part in text.split(";")
            if part.strip() != ""
        )
    except ValueError as exc:
        raise ConfigError(f"bad --groups value: {exc}") from exc
    if not groups or any(len(g) == 0 for g in groups):
        raise ConfigError(f"bad --groups value: {text!r}")
    return groups


def parse_anchors_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Anchor lines 'x1 ... xd -> y1 ... yd'."""
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such anchors file: {p}")
    xs, ys = [], []
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ConfigError(f"{p}:{lineno}: expected 'inputs -> outputs'")
        left, right = line.split("->", 1)
        try:
            xs.append([float(t) for t in left.split()])
            ys.append([float(t) for t in right.split()])
        except ValueError as exc:
            raise ConfigError(f"{p}:{lineno}: {exc}") from exc
    if not xs:
        raise ConfigError(f"{p}: no anchor lines")
    if len({len(r) for r in xs}) != 1 or len({len(r) for r in ys}) != 1:
        raise ConfigError(f"{p}: inconsistent anchor dimensions")
    return np.array(xs), np.array(ys)


def parse_config_file(path) -> dict[str, str]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such config file: {p}")
    out = {}
    for lineno, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


_FLOAT_KEYS = {"sigma_r", "sigma_s", "mu2", "mu3"}
_INT_KEYS = {"max_side", "max_vertices", "max_iters", "seed", "restarts", "knn_k"}
_LIST_KEYS = {"mu0", "mu1"}
_STR_KEYS = {
    "connectivity",
    "family",
    "cvd",
    "gamut",
    "groups",
    "anchors",
    "output",
    "report",
    "src",
    "dst",
}


def _convert(key: str, value: str):
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _LIST_KEYS:
            return tuple(float(t) for t in str(value).split(",") if t.strip() != "")
        if key in _STR_KEYS:
            return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc
    raise ConfigError(f"unknown config key: {key}")


def _add_common_flags(sub):
    sub.add_argument("--config", default=None, help="key = value config file")
    sub.add_argument("--report", default=None, help="write a JSON run report")
    sub.add_argument("--sigma-r", dest="sigma_r", type=float, default=None)
    sub.add_argument("--sigma-s", dest="sigma_s", type=float, default=None)
    sub.add_argument(
        "--connectivity",
        choices=["four_neighbors", "eight_neighbors", "knn"],
        default=None,
    )
    sub.add_argument("--knn-k", dest="knn_k", type=int, default=None)
    sub.add_argument("--mu0", default=None, help="scalar or comma list per pair")
    sub.add_argument("--mu1", default=None, help="scalar or comma list per pair")
    sub.add_argument("--mu2", type=float, default=None)
    sub.add_argument("--mu3", type=float, default=None)
    sub.add_argument("--max-side", dest="max_side", type=int, default=None)
    sub.add_argument("--max-vertices", dest="max_vertices", type=int, default=None)
    sub.add_argument("--max-iters", dest="max_iters", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--restarts", type=int, default=None)
    sub.add_argument("--family", choices=["gamma", "linear"], default=None)
    sub.add_argument("--anchors", default=None, help="anchor colors file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lapmap", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name, multi in [
        ("decolorize", False),
        ("daltonize", False),
        ("gamutmap", False),
        ("fuse", True),
    ]:
        sub = subs.add_parser(name)
        if multi:
            sub.add_argument("inputs", nargs="+")
        else:
            sub.add_argument("inputs", nargs=1)
        sub.add_argument("-o", "--output", default=None)
        _add_common_flags(sub)
        if name == "daltonize":
            sub.add_argument(
                "--cvd",
                choices=["protan", "deutan", "tritan"],
                default=None,
            )
        if name == "gamutmap":
            sub.add_argument("--gamut", default=None, help="x0,y0,x1,y1,...")
        if name == "fuse":
            sub.add_argument("--groups", default=None, help="e.g. 0,1,2;3")

    ev = subs.add_parser("eval")
    ev.add_argument("--src", required=True)
    ev.add_argument("--dst", required=True)
    ev.add_argument("--report", default=None)
    ev.add_argument("--config", default=None)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = {
            k: _convert(k, v) for k, v in parse_config_file(args.config).items()
        }
    cfg = RunConfig(command=args.command)
    if hasattr(args, "inputs"):
        cfg.inputs = tuple(args.inputs)
    for f in fields(RunConfig):
        if f.name in ("command", "inputs"):
            continue
        flag = getattr(args, f.name, None)
        if flag is not None:
            if f.name in _LIST_KEYS and isinstance(flag, str):
                flag = _convert(f.name, flag)
            setattr(cfg, f.name, flag)
        elif f.name in file_cfg:
            setattr(cfg, f.name, file_cfg[f.name])
    return cfg


_DEFAULT_SUFFIX = {
    "decolorize": "_gray.png",
    "daltonize": "_daltonized.png",
    "gamutmap": "_gamut.lmch",
    "fuse": "_fused.png",
}


def _app_options(cfg: RunConfig) -> AppOptions:
    graph = GraphParams(
        sigma_r=cfg.sigma_r,
        sigma_s=cfg.sigma_s,
        connectivity=cfg.connectivity,
        knn_k=cfg.knn_k,
    )
    anchors = parse_anchors_file(cfg.anchors) if cfg.anchors else None
    return AppOptions(
        graph=graph,
        max_side=cfg.max_side,
        max_vertices=cfg.max_vertices,
        seed=cfg.seed,
        restarts=cfg.restarts,
        family=cfg.family,
        mu0=cfg.mu0,
        mu1=cfg.mu1,
        mu2=cfg.mu2,
        mu3=cfg.mu3,
        anchors=anchors,
        solver=SolveOptions(max_iters=cfg.max_iters),
    )


def _load_fuse_image(paths: tuple[str, ...]) -> Image:
    images = [load_image(p) for p in paths]
    if len(images) == 1:
        return images[0]
    h, w = images[0].height, images[0].width
    for p, im in zip(paths, images):
        if im.height != h or im.width != w:
            raise ValueError(f"size mismatch for {p}: {im.height}x{im.width} vs {h}x{w}")
    return Image(np.concatenate([im.data for im in images], axis=2))


def _versions() -> dict:
    import platform

    import scipy

    try:
        from importlib.metadata import version

        own = version("lapmap")
    except Exception:
        own = "unknown"
    return {
        "lapmap": own,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _report_payload(cfg: RunConfig, result: AppResult | None, metrics, timings) -> dict:
    payload = {
        "config": cfg.to_dict(),
        "metrics": metrics.to_dict(),
        "timings": timings,
        "versions": _versions(),
    }
    if result is not None:
        payload["theta_star"] = {
            "family": result.family.describe(),
            "n": int(result.family.n_params),
            "values": " ".join(f"{v:.17g}" for v in result.theta),
        }
        payload["cost_trace"] = {
            "costs": result.trace.costs,
            "raw_costs": result.trace.raw_costs,
            "grad_norms": result.trace.grad_norms,
            "step_sizes": result.trace.step_sizes,
            "violations": result.trace.violations,
            "rounds": result.trace.rounds,
            "status": result.trace.status,
        }
    return payload


def _write_report(path, payload) -> None:
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
    )


def _run(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    if cfg.command == "eval":
        src = load_image(cfg.src)
        dst = load_image(cfg.dst)
        report = evaluate_pair(src, dst)
        timings = {"total_s": time.perf_counter() - t0}
        print(f"eval: rwms_mean={report.rwms_mean:.4f}")
        if cfg.report:
            _write_report(cfg.report, _report_payload(cfg, None, report, timings))
        return 0

    options = _app_options(cfg)
    t_solve = time.perf_counter()
    if cfg.command == "decolorize":
        img = load_image(cfg.inputs[0])
        result = decolorize(img, options)
    elif cfg.command == "daltonize":
        img = load_image(cfg.inputs[0])
        result = daltonize(img, kind=cfg.cvd, options=options)
    elif cfg.command == "gamutmap":
        if cfg.gamut is None:
            raise ConfigError("gamutmap requires --gamut x0,y0,x1,y1,...")
        img = load_image(cfg.inputs[0])
        result = gamut_map(img, parse_gamut(cfg.gamut), options)
    elif cfg.command == "fuse":
        img = _load_fuse_image(cfg.inputs)
        groups = parse_groups(cfg.groups) if cfg.groups else None
        result = fuse(img, groups, options)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown command {cfg.command!r}")
    solve_s = time.perf_counter() - t_solve

    out_path = cfg.output
    if out_path is None:
        stem = Path(cfg.inputs[0]).with_suffix("")
        out_path = str(stem) + _DEFAULT_SUFFIX[cfg.command]
    if out_path.lower().endswith(".lmch"):
        save_lmch(result.output, out_path)
    else:
        save_image(result.output, out_path)

    timings = {"total_s": time.perf_counter() - t0, "solve_s": solve_s}
    if cfg.report:
        _write_report(
            cfg.report, _report_payload(cfg, result, result.metrics, timings)
        )
    trace = result.trace
    print(
        f"{cfg.command}: {out_path} | cost {trace.costs[0]:.4g} -> {trace.costs[-1]:.4g} "
        f"({trace.status}, {len(trace.costs) - 1} steps) | "
        f"rwms_mean {result.metrics.rwms_mean:.4f} | {timings['total_s']:.2f}s"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        cfg = _resolve_config(args)
        return _run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NonFiniteCostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ImageFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
