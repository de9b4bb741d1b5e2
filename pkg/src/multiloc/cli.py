"""Command-line front end: ``multiloc run | sweep | verify``.

Exit codes: 0 pass/consistent, 1 error (including schema violations),
2 a bound was violated, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import re
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import jsonschema
import numpy as np

from . import __version__
from . import geometry as geo
from .acceptance import DEFAULT_SEED, run_all, table_bytes
from .certify import RecursionParams, certificate, recursion_lemma
from .correlator import correlator, dynamical_dominance, gf_from_correlator_bound
from .ensemble import EnsembleSpec, energy_nodes, run_realizations
from .geometry import Region
from .model import DisorderSpec, InteractionSpec
from .moments import fractional_moment, wegner_check
from .spectral import diagonalize, resolvent_sweep

log = logging.getLogger("multiloc")

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED, EXIT_INCONCLUSIVE = 0, 1, 2, 3
STATUS_EXIT = {"pass": EXIT_OK, "violated": EXIT_VIOLATED, "inconclusive": EXIT_INCONCLUSIVE}


class ConfigError(ValueError):
    """Invalid configuration (carries a line-precise message)."""


# --------------------------------------------------------------------------
# configuration

def strip_comments(text: str) -> str:
    """Remove ``//`` and ``/* */`` comments outside strings, keeping line breaks."""
    out, i, n = [], 0, len(text)
    in_str = False
    while i < n:
        c = text[i]
        if in_str:
            out.append(c)
            if c == "\\" and i + 1 < n:
                out.append(text[i + 1])
                i += 2
                continue
            if c == '"':
                in_str = False
            i += 1
        elif c == '"':
            in_str = True
            out.append(c)
            i += 1
        elif text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
        elif text.startswith("/*", i):
            j = text.find("*/", i + 2)
            chunk = text[i:n if j < 0 else j + 2]
            out.append("\n" * chunk.count("\n"))
            i = n if j < 0 else j + 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def load_schema() -> dict:
    return json.loads(resources.files("multiloc").joinpath("schema.json").read_text())


def _line_of(text: str, path: Sequence) -> int:
    """Line of the deepest key of ``path`` found in ``text`` (1-based)."""
    pos, line = 0, 1
    for key in path:
        if not isinstance(key, str):
            continue
        m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(text, pos)
        if m is None:
            break
        pos = m.start()
        line = text.count("\n", 0, pos) + 1
    return line


def parse_config(text: str) -> dict:
    """Strip comments, parse, and validate against the published schema.

    Raises
    ------
    ConfigError
        With the offending line and field.
    """
    clean = strip_comments(text)
    try:
        cfg = json.loads(clean)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from exc
    validator = jsonschema.Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        msgs = []
        for e in errors:
            where = ".".join(str(p) for p in e.absolute_path) or "<root>"
            msgs.append(f"line {_line_of(clean, list(e.absolute_path))}: at {where}: {e.message}")
        raise ConfigError("; ".join(msgs))
    return cfg


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def run_id(cfg: dict) -> str:
    """Hash of the configuration (minus output location and thread count) and the code version."""
    c = {k: v for k, v in cfg.items() if k not in ("output", "threads")}
    blob = json.dumps(c, sort_keys=True, separators=(",", ":")) + "|" + __version__
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _region(block: dict) -> Region:
    if "box" in block:
        b = block["box"]
        return Region.box(int(b["L"]), int(b.get("d", 1)), b.get("center"))
    return Region.explicit(block["sites"])


def build_model(cfg: dict) -> Tuple[Region, int, DisorderSpec, InteractionSpec]:
    m = cfg["model"]
    dis = m["disorder"]
    default = {"uniform": [0.0, 1.0], "gaussian": [0.0, 1.0]}.get(dis["distribution"])
    params = dis.get("params", default)
    if params is None:
        raise ConfigError("model.disorder.params is required for a custom distribution")
    try:
        dspec = DisorderSpec(dis["distribution"], tuple(params), float(dis["lambda"]), int(cfg["seed"]))
        it = m.get("interaction", {})
        ispec = InteractionSpec(tuple(it.get("alphas", ())), float(it.get("ell", 1.0)), it.get("kernel", "indicator"))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    return _region(m["region"]), int(m["n"]), dspec, ispec


def _cfg_tuple(c) -> tuple:
    return tuple(tuple(int(v) for v in site) for site in c)


# --------------------------------------------------------------------------
# experiments: each returns (status, results, tables)

def exp_geometry(cfg, threads, tol_scale):
    b = cfg.get("geometry-suite", {})
    rng = np.random.default_rng(int(cfg["seed"]))
    ns, ds = b.get("n", [2, 3, 4]), b.get("d", [1, 2])
    R = int(b.get("coord_range", 20))
    rows, bad = [], 0
    for k in range(int(b.get("samples", 1000))):
        n, d = int(rng.choice(ns)), int(rng.choice(ds))
        c = rng.integers(-R, R + 1, size=(n, d))
        y = rng.integers(-R, R + 1, size=(n, d))
        dm, lw = geo.diam(c), geo.splitting_width(c)
        a1 = n < 2 or (dm / (n - 1) <= lw + 1e-12 and lw <= dm + 1e-12)
        u, v = c[0], y[0]
        a2 = geo.dist_hausdorff(c, y) >= math.sqrt(float(((u - v) ** 2).sum())) - min(dm, geo.diam(y)) - 1e-12
        ok = bool(a1 and a2)
        bad += not ok
        rows.append({"k": k, "n": n, "d": d, "diam": dm, "splitting_width": lw, "ok": ok})
    return ("pass" if bad == 0 else "violated"), {"violations": bad, "samples": len(rows)}, {"geometry": rows}


def exp_spectrum(cfg, threads, tol_scale):
    region, n, dspec, ispec = build_model(cfg)
    R = int(cfg.get("spectrum", {}).get("realizations", 1))
    ens = EnsembleSpec(region, n, dspec, ispec, M=R)
    tmpl = ens.template()
    spectra = run_realizations(lambda k: diagonalize(ens.operator(k, tmpl)).eigenvalues, R, threads)
    rows = [{"k": k, "index": i, "eigenvalue": float(e)} for k, w in enumerate(spectra) for i, e in enumerate(w)]
    return "pass", {"dim": tmpl.dim, "realizations": R}, {"spectrum": rows}


def exp_green(cfg, threads, tol_scale):
    region, n, dspec, ispec = build_model(cfg)
    b = cfg["green"]
    ens = EnsembleSpec(region, n, dspec, ispec, M=1)
    tmpl = ens.template()
    k = int(b.get("realization", 0))
    op = ens.operator(k, tmpl)
    x, y = _cfg_tuple(b["x"]), _cfg_tuple(b["y"])
    i, j = tmpl.index(x), tmpl.index(y)
    if "z" in b:
        zs = [complex(*b["z"])]
    elif "I" in b:
        zs = [complex(E, 1e-6) for E in energy_nodes(b["I"], int(b.get("nodes_per_unit", 64)))]
    else:
        raise ConfigError("green: give either z or I")
    rows = []
    for z, X in zip(zs, resolvent_sweep(op, [j], zs)):
        g = complex(X[i, 0])
        rows.append({"k": k, "re_z": z.real, "im_z": z.imag, "re_G": g.real, "im_G": g.imag, "abs_G": abs(g)})
    return "pass", {"points": len(rows)}, {"green": rows}


def exp_moments(cfg, threads, tol_scale, rid=""):
    region, n, dspec, ispec = build_model(cfg)
    b = cfg["moments"]
    x, y = _cfg_tuple(b["x"]), _cfg_tuple(b["y"])
    ens = EnsembleSpec(region, n, dspec, ispec, M=int(b.get("M", 100)),
                       nodes_per_unit=int(b.get("nodes_per_unit", 64)), eps=float(b.get("eps", 1e-6)))
    if "z" in b:
        z = complex(*b["z"])
        e = fractional_moment(ens, x, y, float(b["s"]), z=z, threads=threads)
        where = f"z={z.real!r}{z.imag:+}j"
    elif "I" in b:
        e = fractional_moment(ens.with_(energy=tuple(b["I"])), x, y, float(b["s"]), None, threads)
        where = f"I=[{b['I'][0]!r},{b['I'][1]!r}]"
    else:
        raise ConfigError("moments: give either z or I")
    row = {"run_id": rid, "x": json.dumps(b["x"]), "y": json.dumps(b["y"]), "s": float(b["s"]),
           "lambda": dspec.lam, "alphas": json.dumps(list(ispec.alphas)), "E_or_z": where,
           "mean": e.mean, "std_error": e.std_error, "M": e.M}
    return "pass", e.to_json(), {"moments": [row]}


def exp_correlator(cfg, threads, tol_scale):
    region, n, dspec, ispec = build_model(cfg)
    b = cfg["correlator"]
    x, y = _cfg_tuple(b["x"]), _cfg_tuple(b["y"])
    I = tuple(b["I"]) if "I" in b else None
    s = float(b.get("s", 0.5))
    R = int(b.get("realizations", 10))
    ens = EnsembleSpec(region, n, dspec, ispec, M=R)
    tmpl = ens.template()

    def one(k):
        es = diagonalize(ens.operator(k, tmpl))
        row = {"k": k, "Q_s": correlator(es, x, y, I, s), "Q_0": correlator(es, x, y, I, 0.0),
               "Q_1": correlator(es, x, y, I, 1.0)}
        dyn = dynamical_dominance(es, x, y, I, np.linspace(0, 20, 21))
        row["dyn_sup"] = dyn["sup"]
        if I is not None and 0 < s < 1:
            g = gf_from_correlator_bound(es, x, y, I, s)
            row.update({"G_integral": g["lhs"], "G_bound": g["rhs"]})
        return row

    rows = run_realizations(one, R, threads)
    tol = 1e-12 * tol_scale
    ok = all(r["Q_0"] <= 1 + tol and r["Q_1"] <= 1 + tol and r["dyn_sup"] <= r["Q_1"] + tol for r in rows)
    ok &= all(r.get("G_integral", 0.0) <= r.get("G_bound", 0.0) * (1 + 1e-3 * tol_scale) for r in rows)
    return ("pass" if ok else "violated"), {"realizations": R}, {"correlator": rows}


def exp_wegner(cfg, threads, tol_scale):
    region, n, dspec, ispec = build_model(cfg)
    b = cfg["wegner"]
    ens = EnsembleSpec(region, n, dspec, ispec, M=1)
    r = wegner_check(ens, _cfg_tuple(b["x"]), tuple(b["u"]), tuple(b["I"]), int(b.get("backgrounds", 20)),
                     threads=threads, z=3.0 * tol_scale, full_average_M=int(b.get("full_average_M", 0)))
    status = "pass" if r["ok"] else "violated"
    if status == "pass" and "full_status" in r:
        status = r["full_status"]
    rows = [{"background": k, "conditional": v, "rhs": r["rhs"]} for k, v in enumerate(r["conditional"])]
    return status, r, {"wegner": rows}


def exp_certify(cfg, threads, tol_scale):
    region, n, dspec, ispec = build_model(cfg)
    b = cfg.get("certify", {})
    ens = EnsembleSpec(region, n, dspec, ispec, M=int(b.get("M", 200)))
    rep = certificate(ens, float(b.get("s", 0.3)), int(b.get("L", 8)), int(b.get("L0", 2)),
                      int(b.get("k_max", 1)), threads, float(b.get("z", 3.0)) * tol_scale)
    # a ladder that fails to contract contradicts no bound (the constants are existential)
    status = "pass" if rep["status"] == "certified" else "inconclusive"
    B = [{"L": v["L"], "mean": v["mean"], "std_error": v["std_error"], "n_pairs": v["n_pairs"]}
         for v in rep["rescaling"]["B"]]
    return status, rep, {"B_ladder": B, "decay": rep["decay_rows"]}


def exp_recursion(cfg, threads, tol_scale):
    b = cfg["recursion"]
    params = RecursionParams(b["a"], b["b"], b["p"], b["nu"], b["L0"], b["eta"])
    r = recursion_lemma(params, float(b["S0"]), int(b.get("k_max", 40)))
    status = "inconclusive" if r["failed"] else ("pass" if r["ok"] else "violated")
    return status, r, {"recursion": r["sequence"]}


EXPERIMENTS = {
    "geometry-suite": exp_geometry, "spectrum": exp_spectrum, "green": exp_green,
    "moments": exp_moments, "correlator": exp_correlator, "wegner": exp_wegner,
    "certify": exp_certify, "recursion": exp_recursion,
}


# --------------------------------------------------------------------------
# persistence

def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if math.isfinite(v) else repr(v)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    return o


def write_outputs(out: Path, summary: dict, tables: Dict[str, List[dict]]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, rows in tables.items():
        data = table_bytes(rows)
        (out / f"{name}.csv").write_bytes(data)
        files[f"{name}.csv"] = data
    data = (json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n").encode()
    (out / "summary.json").write_bytes(data)
    files["summary.json"] = data
    lines = [f"{hashlib.sha256(v).hexdigest()}  {k}" for k, v in sorted(files.items())]
    (out / "MANIFEST").write_text("\n".join(lines) + "\n")


def execute(cfg: dict, out: Optional[Path], threads: int, tol_scale: float = 1.0) -> Tuple[str, dict, dict]:
    rid = run_id(cfg)
    fn = EXPERIMENTS[cfg["experiment"]]
    t0 = time.perf_counter()
    if cfg["experiment"] == "moments":
        status, results, tables = fn(cfg, threads, tol_scale, rid)
    else:
        status, results, tables = fn(cfg, threads, tol_scale)
    summary = {"run_id": rid, "version": __version__, "experiment": cfg["experiment"], "status": status,
               "config": cfg, "results": results, "timings": {"seconds": time.perf_counter() - t0},
               "tolerance_scale": tol_scale}
    if out is not None:
        write_outputs(out, summary, tables)
    return status, summary, tables


def _apply_overrides(cfg: dict, seed_override: Optional[int]) -> dict:
    cfg = copy.deepcopy(cfg)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    return cfg


def _out_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if "output" in cfg:
        return Path(cfg["output"])
    return Path("runs") / run_id(cfg)


# --------------------------------------------------------------------------
# subcommands

def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args.seed_override)
    threads = args.threads or cfg.get("threads", 1)
    out = _out_dir(args, cfg)
    status, summary, _ = execute(cfg, out, threads, args.tolerance_scale)
    print(json.dumps({"run_id": summary["run_id"], "status": status, "output": str(out)}))
    return STATUS_EXIT[status]


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"sweep parameter {dotted!r} does not address a config field")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep parameter {dotted!r} does not address a config field")
    if isinstance(node[keys[-1]], bool) or not isinstance(node[keys[-1]], (int, float)):
        raise ConfigError(f"sweep parameter {dotted!r} is not numeric")
    node[keys[-1]] = int(value) if isinstance(node[keys[-1]], int) and float(value).is_integer() else float(value)


def cmd_sweep(args) -> int:
    if not args.values:
        raise ConfigError("sweep needs at least one value")
    base = _apply_overrides(load_config(args.config), args.seed_override)
    threads = args.threads or base.get("threads", 1)
    root = _out_dir(args, base)
    merged: Dict[str, List[dict]] = {}
    statuses, records = [], []
    for v in args.values:
        cfg = copy.deepcopy(base)
        _set_path(cfg, args.param, v)
        parse_config(json.dumps(cfg))
        sub = root / f"{args.param}={v:g}"
        status, summary, tables = execute(cfg, sub, threads, args.tolerance_scale)
        statuses.append(status)
        records.append({"value": v, "run_id": summary["run_id"], "status": status})
        for name, rows in tables.items():
            merged.setdefault(name, []).extend({args.param: float(v), **r} for r in rows)
    if "moments" in merged and len(args.values) >= 2:
        vals = np.array([r[args.param] for r in merged["moments"]])
        means = np.array([r["mean"] for r in merged["moments"]])
        if np.all(vals > 0) and np.all(means > 0):
            slope, icpt = np.polyfit(np.log(vals), np.log(means), 1)
            merged["slope"] = [{"parameter": args.param, "slope": float(slope), "intercept": float(icpt)}]
    summary = {"param": args.param, "values": list(args.values), "runs": records}
    write_outputs(root, summary, merged)
    worst = "violated" if "violated" in statuses else ("inconclusive" if "inconclusive" in statuses else "pass")
    print(json.dumps({"status": worst, "output": str(root), "runs": records}))
    return STATUS_EXIT[worst]


def cmd_verify(args) -> int:
    seed = DEFAULT_SEED if args.seed_override is None else args.seed_override
    only = args.only or None
    results = run_all(seed, args.tolerance_scale, args.threads or 1, only, echo=print)
    if args.out:
        out = Path(args.out)
        tables = {name: rows for r in results for name, rows in r.tables.items()}
        write_outputs(out, {"seed": seed, "tolerance_scale": args.tolerance_scale,
                            "criteria": [r.to_json() for r in results]}, tables)
    print(json.dumps({"criteria": {r.number: r.status for r in results}}))
    sts = [r.status for r in results]
    if "fail" in sts:
        return EXIT_VIOLATED
    if "inconclusive" in sts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiloc", description="Multi-particle localization experiments.")
    p.add_argument("--version", action="version", version=f"multiloc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("config", nargs="?", help="JSON config (comments allowed)")
            sp.add_argument("--config", dest="config_flag")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed-override", type=int, default=None)
        sp.add_argument("--tolerance-scale", type=float, default=1.0)

    r = sub.add_parser("run", help="run one experiment")
    common(r)
    s = sub.add_parser("sweep", help="run an experiment over values of one numeric field")
    common(s)
    s.add_argument("--param", required=True, help="dotted path, e.g. model.disorder.lambda")
    s.add_argument("--values", type=float, nargs="*", default=[])
    v = sub.add_parser("verify", help="run the acceptance battery")
    common(v, config=False)
    v.add_argument("--only", type=int, nargs="*", help="criterion numbers")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "config_flag", None):
        args.config = args.config_flag
    if args.command in ("run", "sweep") and not args.config:
        print("error: a config file is required", file=sys.stderr)
        return EXIT_ERROR
    if args.tolerance_scale <= 0:
        print("error: --tolerance-scale must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        return {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
