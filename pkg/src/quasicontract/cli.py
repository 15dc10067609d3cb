"""Command-line front end.

    quasicontract <analyze|bounds|regions|simulate|fit> --config FILE [--out DIR] [--seed N]

Each run writes ``report.json`` and ``series.csv`` into ``--out`` (``simulate``
also writes ``envelope.csv``). Exit status: 0 clean, 1 violations found,
2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .bounds import (
    PermanenceQuery,
    bound_closed_form,
    bound_recurrence,
    permanence_index,
    ultimate_bound,
    uniform_iterate_bound,
)
from .constraint import (
    ContractionParams,
    DistanceSample,
    classify_pair,
    classify_regime,
    fit_frontier,
    read_samples_csv,
    verify_pair,
)
from .lti import (
    LtiSystem,
    RandomPerturbation,
    SinusoidalPerturbation,
    ZeroPerturbation,
    contraction_params,
    envelope_fit,
    envelope_series,
    min_sampling_period,
    sampled_map,
)
from .metric import Metric
from .orbits import check_bound_domination, empirical_entry_index, iterate_pair
from .regions import (
    BandParams,
    UnclassifiedBand,
    corollary_verdict,
    feasibility_scan,
    interval_for_36,
    interval_for_37,
    disjointness_check,
    oracle_mismatches,
    xei_radius,
    xhat_threshold,
)

log = logging.getLogger("quasicontract")

SUBCOMMANDS = ("analyze", "bounds", "regions", "simulate", "fit")
EXIT_OK, EXIT_VIOLATIONS, EXIT_CONFIG = 0, 1, 2

_REQ = object()

# subcommand -> table -> key -> (type, default); _REQ marks required keys
SCHEMA: dict[str, dict[str, dict[str, tuple]]] = {
    "analyze": {
        "params": {"K": (float, _REQ), "M": (float, _REQ)},
        "io": {"samples": (str, _REQ)},
        "tolerances": {"verify": (float, 0.0)},
    },
    "bounds": {
        "params": {"K": (float, _REQ), "M": (float, _REQ)},
        "bounds": {
            "R": (float, _REQ),
            "epsilon": (float, _REQ),
            "d0": (float, None),
            "steps": (int, 10),
        },
    },
    "regions": {
        "band": {"K": (float, _REQ), "M": (float, _REQ), "K1": (float, _REQ), "K2": (float, _REQ)},
        "oracle": {"grid_size": (int, 1000), "samples": (int, 1000)},
    },
    "simulate": {
        "system": {
            "A": (list, _REQ),
            "M0": (float, _REQ),
            "norm": (str, "2"),
            "h": (float, None),
            "K_target": (float, None),
            "substeps": (int, 20),
        },
        "perturbation": {
            "kind": (str, "zero"),
            "amplitude": (list, None),
            "frequency": (float, 1.0),
            "shared": (bool, False),
        },
        "orbits": {
            "pairs": (int, 10),
            "steps": (int, 50),
            "x0_scale": (float, 1.0),
            "epsilon": (float, 0.25),
        },
        "envelope": {"horizon": (float, None), "grid": (int, 200)},
        "tolerances": {"verify": (float, 1e-6), "domination": (float, 1e-6)},
    },
    "fit": {
        "io": {"samples": (str, _REQ)},
        "fit": {"k_grid": (list, None)},
    },
}


class ConfigError(Exception):
    def __init__(self, path: Path | str, message: str, line: int | None = None):
        anchor = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{anchor}: {message}")


@dataclass
class RunConfig:
    subcommand: str
    tables: dict
    seed: int
    path: Path
    out: Path


# --- config ------------------------------------------------------------------


def _locate(text: str, table: str | None, key: str | None = None) -> int | None:
    """1-based line of ``[table]`` or of ``key = ...`` inside it."""
    lines = text.splitlines()
    current = None
    for i, raw in enumerate(lines, start=1):
        line = raw.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]$", line)
        if m:
            current = m.group(1)
            if key is None and current == table:
                return i
            continue
        if key is not None and current == table and re.match(rf"^{re.escape(key)}\s*=", line):
            return i
    return None


def _coerce(value, typ, where: str):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{where} must be a number, got {value!r}")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{where} must be an integer, got {value!r}")
        return value
    if typ is str:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return str(value)
        if not isinstance(value, str):
            raise ValueError(f"{where} must be a string, got {value!r}")
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ValueError(f"{where} must be true or false, got {value!r}")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ValueError(f"{where} must be an array, got {value!r}")
        return value
    raise TypeError(typ)


def load_config(subcommand: str, path: Path, seed: int | None, out: Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(path, f"cannot read config: {exc.strerror}") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(path, f"malformed config: {exc}", int(m.group(1)) if m else None) from None

    schema = SCHEMA[subcommand]
    cfg_seed = raw.pop("seed", 0)
    if isinstance(cfg_seed, bool) or not isinstance(cfg_seed, int):
        raise ConfigError(path, f"seed must be an integer, got {cfg_seed!r}", _locate(text, None, "seed"))
    for name, value in raw.items():
        if name not in schema:
            raise ConfigError(path, f"unexpected table or key {name!r} for '{subcommand}'",
                              _locate(text, name) or _locate(text, None, name))
        if not isinstance(value, dict):
            raise ConfigError(path, f"{name!r} must be a table", _locate(text, None, name))

    tables: dict[str, dict] = {}
    for tname, keys in schema.items():
        given = raw.get(tname, {})
        resolved = {}
        for key in given:
            if key not in keys:
                raise ConfigError(path, f"unexpected key {tname}.{key}", _locate(text, tname, key))
        for key, (typ, default) in keys.items():
            if key in given:
                try:
                    resolved[key] = _coerce(given[key], typ, f"{tname}.{key}")
                except ValueError as exc:
                    raise ConfigError(path, str(exc), _locate(text, tname, key)) from None
            elif default is _REQ:
                raise ConfigError(path, f"missing required key {tname}.{key}",
                                  _locate(text, tname))
            else:
                resolved[key] = default
        tables[tname] = resolved

    return RunConfig(
        subcommand=subcommand,
        tables=tables,
        seed=cfg_seed if seed is None else seed,
        path=path,
        out=out,
    )


# --- serialisation -----------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits (byte-stable across runs)."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_csv_cell(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- subcommands -------------------------------------------------------------


def _params(t: dict) -> ContractionParams:
    return ContractionParams(K=t["K"], M=t["M"])


def _regime_dict(params: ContractionParams) -> dict:
    r = classify_regime(params)
    return {"tag": r.tag.value, "interval": r.interval, "value": r.value, "boundary": r.boundary}


def _samples_path(cfg: RunConfig) -> Path:
    p = Path(cfg.tables["io"]["samples"])
    return p if p.is_absolute() else cfg.path.parent / p


def _run_analyze(cfg: RunConfig):
    params = _params(cfg.tables["params"])
    tol = cfg.tables["tolerances"]["verify"]
    samples = read_samples_csv(_samples_path(cfg))
    rows, violations, counts = [], [], {}
    for i, s in enumerate(samples):
        ok = verify_pair(s, params, tol)
        verdict = classify_pair(s.d_xy, params).value if params.K > 0 else None
        counts[verdict] = counts.get(verdict, 0) + 1
        rows.append((i, s.d_xy, s.d_TxTy, params.rhs(s.d_xy), ok, verdict))
        if not ok:
            violations.append({"index": i, "d_xy": s.d_xy, "d_TxTy": s.d_TxTy,
                               "rhs": params.rhs(s.d_xy)})
    results = {
        "regime": _regime_dict(params),
        "threshold": params.threshold,
        "n_samples": len(samples),
        "n_verified": len(samples) - len(violations),
        "verdict_counts": {str(k): v for k, v in sorted(counts.items(), key=lambda kv: str(kv[0]))},
    }
    series = (["i", "d_xy", "d_TxTy", "rhs", "verified", "verdict"], rows)
    return results, violations, {"series.csv": series}


def _run_bounds(cfg: RunConfig):
    params = _params(cfg.tables["params"])
    b = cfg.tables["bounds"]
    d0 = b["R"] if b["d0"] is None else b["d0"]
    steps = b["steps"]
    rows = [(j, bound_recurrence(j, d0, params), bound_closed_form(j, d0, params))
            for j in range(steps + 1)]
    j0 = permanence_index(PermanenceQuery(R=b["R"], epsilon=b["epsilon"], params=params))
    results = {
        "regime": _regime_dict(params),
        "d0": d0,
        "ultimate_bound": ultimate_bound(params),
        "uniform_bound": uniform_iterate_bound(b["R"], params),
        "permanence_index": j0,
        "series": [r[2] for r in rows],
    }
    return results, [], {"series.csv": (["j", "recurrence_j", "bound_j"], rows)}


def _run_regions(cfg: RunConfig):
    t = cfg.tables["band"]
    o = cfg.tables["oracle"]
    b = BandParams(K=t["K"], M=t["M"], K1=t["K1"], K2=t["K2"], relaxed=True)
    violations = []
    try:
        verdict = corollary_verdict(b).value
    except UnclassifiedBand as exc:
        verdict = "Unclassified"
        violations.append({"kind": "unclassified", "message": str(exc)})
    results = {
        "interval_36": _try(interval_for_36, b),
        "interval_37": _try(interval_for_37, b),
        "xei_radius": _try(xei_radius, b),
        "xhat_threshold": _try(xhat_threshold, b),
        "disjoint": _try(disjointness_check, b),
        "verdict": verdict,
    }
    series = None
    if results["interval_36"] is not None or results["interval_37"] is not None:
        top = results["interval_36"][1] if results["interval_36"] else results["interval_37"][1]
        ds = np.linspace(0.0, 2.0 * top, o["samples"])
        bad = oracle_mismatches(b, ds, o["grid_size"])
        n_bad = sum(len(v) for v in bad.values())
        results["oracle"] = {"grid_size": o["grid_size"], "samples": o["samples"],
                             "d_max": 2.0 * top, "mismatches": n_bad}
        for chain, where in bad.items():
            for d in where:
                violations.append({"kind": "oracle_mismatch", "chain": chain, "d": float(d)})
        f36, f37, f35 = feasibility_scan(ds, b, o["grid_size"])
        rows = list(zip(ds, f36, f37, f35))
        series = (["d", "feasible_36", "feasible_37", "feasible_35"], rows)
    outputs = {"series.csv": series} if series else {}
    return results, violations, outputs


def _try(fn, b):
    try:
        return fn(b)
    except ValueError:
        return None


def _make_perturbation(p: dict, dim: int, M0: float, norm: float, rng, x_orbit: bool):
    kind = p["kind"]
    if kind == "zero" or M0 == 0:
        return ZeroPerturbation(dim=dim)
    if kind == "sinusoidal":
        amp = p["amplitude"] if p["amplitude"] is not None else [M0] * dim
        if len(amp) != dim:
            raise ValueError(f"perturbation.amplitude needs {dim} entries, got {len(amp)}")
        phase = 0.0 if (p["shared"] or x_orbit) else float(rng.uniform(0.0, 2 * math.pi))
        return SinusoidalPerturbation(amplitude=np.asarray(amp, dtype=float),
                                      frequency=p["frequency"], radius=M0, p=norm, phase=phase)
    if kind == "random":
        return RandomPerturbation(dim=dim, radius=M0, seed=int(rng.integers(2**31)), p=norm)
    raise ValueError(f"perturbation.kind must be zero, sinusoidal or random, got {kind!r}")


def _run_simulate(cfg: RunConfig):
    s = cfg.tables["system"]
    pt = cfg.tables["perturbation"]
    ob = cfg.tables["orbits"]
    ev = cfg.tables["envelope"]
    tol = cfg.tables["tolerances"]
    if (s["h"] is None) == (s["K_target"] is None):
        raise ValueError("system: give exactly one of h or K_target")
    metric = Metric.norm(s["norm"])
    A = np.asarray(s["A"], dtype=float)
    env = envelope_fit(A, metric, ev["horizon"], ev["grid"])
    h = s["h"] if s["h"] is not None else min_sampling_period(env, s["K_target"])
    params = contraction_params(env, s["M0"], h)
    system = LtiSystem(A=A, M0=s["M0"], metric=metric, h=h)
    n = system.dim
    rng = np.random.default_rng(cfg.seed)

    violations, pairs, first = [], [], None
    for k in range(ob["pairs"]):
        x0 = rng.uniform(-ob["x0_scale"], ob["x0_scale"], n)
        y0 = rng.uniform(-ob["x0_scale"], ob["x0_scale"], n)
        px = _make_perturbation(pt, n, s["M0"], metric.p, rng, True)
        py = px if pt["shared"] else _make_perturbation(pt, n, s["M0"], metric.p, rng, False)
        mx = sampled_map(system, px, s["substeps"])
        my = mx if py is px else sampled_map(system, py, s["substeps"])
        rec = iterate_pair(mx, x0, y0, ob["steps"], metric, y_map=my)
        ds = rec.distances
        bad_verify = [j for j in range(len(ds) - 1)
                      if not verify_pair(DistanceSample(ds[j], ds[j + 1]), params, tol["verify"])]
        dom = check_bound_domination(rec, params, tol["domination"])
        for j in bad_verify:
            violations.append({"kind": "verify_pair", "pair": k, "j": j,
                               "d_j": ds[j], "d_next": ds[j + 1]})
        for v in dom:
            violations.append({"kind": "domination", "pair": k, "j": v.j,
                               "observed": v.observed, "bound": v.bound})
        ratios = rec.step_ratios()
        entry = {
            "pair": k,
            "d0": ds[0],
            "d_final": ds[-1],
            "max_step_ratio": float(ratios.max()) if ratios.size else None,
            "terminal_norm_x": float(np.linalg.norm(rec.x_orbit[-1], ord=metric.p)),
            "terminal_norm_y": float(np.linalg.norm(rec.y_orbit[-1], ord=metric.p)),
        }
        if params.M > 0:
            thr = params.M / params.K + ob["epsilon"]
            entry["empirical_entry_index"] = empirical_entry_index(rec, thr)
            entry["permanence_index"] = permanence_index(
                PermanenceQuery(R=float(ds[0]), epsilon=ob["epsilon"], params=params))
        pairs.append(entry)
        if first is None:
            first = rec

    results = {
        "envelope": {"K0": env.K0, "alpha0": env.alpha0},
        "h": h,
        "derived_params": {"K": params.K, "M": params.M},
        "regime": _regime_dict(params),
        "ultimate_bound": ultimate_bound(params),
        "pairs": pairs,
    }
    d0 = float(first.distances[0])
    series_rows = [(j, d, bound_closed_form(j, d0, params)) for j, d in enumerate(first.distances)]
    horizon = ev["horizon"] if ev["horizon"] is not None else 20.0 / env.alpha0
    ts = np.linspace(0.0, horizon, ev["grid"])
    norms, envl = envelope_series(A, env, metric, ts)
    outputs = {
        "series.csv": (["j", "d_j", "bound_j"], series_rows),
        "envelope.csv": (["t", "norm_expAt", "envelope"], list(zip(ts, norms, envl))),
    }
    return results, violations, outputs


def _run_fit(cfg: RunConfig):
    samples = read_samples_csv(_samples_path(cfg))
    grid = cfg.tables["fit"]["k_grid"]
    frontier = fit_frontier(samples, grid)
    results = {"n_samples": len(samples), "frontier": [list(p) for p in frontier]}
    return results, [], {"series.csv": (["K", "M_hat"], frontier)}


RUNNERS = {
    "analyze": _run_analyze,
    "bounds": _run_bounds,
    "regions": _run_regions,
    "simulate": _run_simulate,
    "fit": _run_fit,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``, write the report files and return the exit code."""
    try:
        results, violations, outputs = RUNNERS[cfg.subcommand](cfg)
    except (ValueError, OSError) as exc:
        print(f"{cfg.path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = {
        "tool": {"name": "quasicontract", "version": __version__},
        "subcommand": cfg.subcommand,
        "seed": cfg.seed,
        "config": cfg.tables,
        "results": results,
        "violations": violations,
    }
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / "report.json").write_text(dumps(report) + "\n", encoding="utf-8")
    for name, (header, rows) in outputs.items():
        write_csv(cfg.out / name, header, rows)
    log.info("%s: %d violation(s); report in %s", cfg.subcommand, len(violations), cfg.out)
    return EXIT_VIOLATIONS if violations else EXIT_OK


def _setup_logging() -> None:
    level = os.environ.get("QUASICONTRACT_LOG", "quiet").lower()
    levels = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="quasicontract", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=Path("."))
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.subcommand, args.config, args.seed, args.out)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
