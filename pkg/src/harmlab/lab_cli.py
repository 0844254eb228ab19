"""Config-driven experiment runner: ``harmlab run | report | validate``.

A config is a JSON object::

    {
      "name": "disc",
      "seed": 7,
      "domain": {"kind": "ball", "params": {"center": [0, 0], "radius": 1}},
      "poles": {"plus": [0, 0], "minus": [3, 0]},
      "source": "exact",                 # or "wos"
      "estimate": {"cells": {"arcs": 16}, "walk": {"n_walks": 100000}},
      "points": [[1, 0]],
      "scales": [0.5, 0.25, 0.125, 0.0625],
      "analyses": {"flatness": true, "lambda": true, "dimension": true,
                   "beurling": true, "theta": true, "gamma": false},
      "resolution": 400,
      "output": {"dir": "runs/disc"}
    }

A ``null`` pole on a half-space means the pole at infinity. Outputs are
``estimate.csv``, ``profiles.csv``, ``classification.json`` and
``manifest.json``; every float is written with 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .domain_kit import BallDomain, HalfSpace, PolyZeroSet, Wedge, boundary_sample, make_domain
from .errors import ConfigError, HarmlabError
from .gmt_analysis import (
    DEFAULT_THRESHOLDS,
    Evaluator,
    PolyPart,
    beurling_check,
    classify_point,
    gamma_profile,
    local_dimension,
    theta_density,
)
from .harmonic_engine import BallCell, WalkConfig, arc_partition, wos_exits, wos_measure
from .measure_kit import Ball
from .sources import DiscSource, EmpiricalSource, HalfSpaceSource, PolySource, WedgeSource

__all__ = ["ExperimentConfig", "RunManifest", "validate", "run", "report", "main"]

EXIT_OK, EXIT_VALIDATION, EXIT_STAGE = 0, 2, 3
ANALYSES = ("gamma", "beurling", "flatness", "lambda", "dimension", "theta")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0.1.0"


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if v is None:
        return ""
    return str(v)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    domain: dict
    poles: dict
    points: list
    scales: list
    source: str = "exact"
    estimate: dict | None = None
    analyses: dict = field(default_factory=lambda: {k: False for k in ANALYSES})
    resolution: int = 400
    thresholds: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"dir": "runs"})

    @property
    def out_dir(self) -> Path:
        return Path(self.output.get("dir", "runs"))

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _writable(path: Path) -> bool:
    p = path.resolve()
    while not p.exists():
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)


def validate(raw: dict, out_override=None, seed_override=None) -> ExperimentConfig:
    """Check a raw config dict; raise :class:`ConfigError` naming every bad field."""
    bad: dict[str, str] = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", {"<root>": "not an object"})
    seed = raw.get("seed") if seed_override is None else seed_override
    if not isinstance(seed, int) or isinstance(seed, bool):
        bad["seed"] = "an integer seed is required"
    dom = None
    try:
        dom = make_domain(raw.get("domain") or {})
    except (HarmlabError, ValueError, KeyError, TypeError) as exc:
        bad["domain"] = str(exc)
    scales = raw.get("scales")
    if not isinstance(scales, list) or not scales or not all(isinstance(s, (int, float)) and s > 0 for s in scales):
        bad["scales"] = "a non-empty list of positive numbers is required"
    elif any(b >= a for a, b in zip(scales, scales[1:])):
        bad["scales"] = "scale grid must be strictly decreasing"
    analyses = dict({k: False for k in ANALYSES}, **(raw.get("analyses") or {}))
    unknown = set(analyses) - set(ANALYSES)
    if unknown:
        bad["analyses"] = f"unknown analyses {sorted(unknown)}"
    if (analyses.get("lambda") or analyses.get("beurling")) and isinstance(scales, list) and len(scales) < 4:
        bad.setdefault("scales", "at least 4 scales are required for lambda/beurling verdicts")
    points = raw.get("points", [])
    if not isinstance(points, list) or (dom is not None and not all(isinstance(p, list) and len(p) == dom.dim for p in points)):
        bad["points"] = "a list of boundary points matching the domain dimension is required"
    poles = raw.get("poles") or {}
    if "plus" not in poles:
        bad["poles.plus"] = "a pole for the domain side is required (null: pole at infinity)"
    if dom is not None and "plus" in poles:
        for key, d in (("plus", dom), ("minus", dom.complement())):
            p = poles.get(key)
            if p is None:
                if key == "plus" and not isinstance(dom, HalfSpace):
                    bad["poles.plus"] = "a pole at infinity is supported only for half-spaces"
                continue
            if not (isinstance(p, list) and len(p) == dom.dim and bool(np.all(d.contains(np.asarray(p, dtype=float))))):
                bad[f"poles.{key}"] = f"pole {p!r} does not lie in the {key} side"
    source = raw.get("source", "exact")
    if source not in ("exact", "wos"):
        bad["source"] = "must be 'exact' or 'wos'"
    elif source == "exact" and dom is not None and not isinstance(dom, (BallDomain, HalfSpace, Wedge, PolyZeroSet)):
        bad["source"] = f"no exact source for domain kind {dom.kind!r}; use 'wos'"
    elif source == "exact" and isinstance(dom, BallDomain) and dom.dim != 2:
        bad["source"] = "exact ball sources are planar; use 'wos'"
    est = raw.get("estimate")
    if est is not None:
        walk = est.get("walk", {})
        try:
            WalkConfig(**{k: v for k, v in walk.items() if k != "seed"})
        except (TypeError, HarmlabError, ValueError) as exc:
            bad["estimate.walk"] = str(exc)
        cells = est.get("cells")
        if not (isinstance(cells, dict) and isinstance(cells.get("arcs"), int)) and not isinstance(cells, list):
            bad["estimate.cells"] = "either {'arcs': k} or a list of {'center', 'radius'} balls"
    if source == "wos" and est is None:
        bad.setdefault("estimate", "wos sources need an 'estimate.walk' section")
    output = raw.get("output") or {"dir": "runs"}
    out_dir = Path(out_override) if out_override is not None else Path(output.get("dir", "runs"))
    if not _writable(out_dir):
        bad["output.dir"] = f"{out_dir} is not writable"
    res = raw.get("resolution", 400)
    if not isinstance(res, int) or res < 10:
        bad["resolution"] = "integer >= 10 required"
    if bad:
        raise ConfigError("invalid config: " + ", ".join(sorted(bad)), bad)
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        seed=int(seed),
        domain=raw["domain"],
        poles={"plus": poles.get("plus"), "minus": poles.get("minus")},
        points=points,
        scales=[float(s) for s in scales],
        source=source,
        estimate=est,
        analyses=analyses,
        resolution=res,
        thresholds=dict(raw.get("thresholds") or {}),
        output={"dir": str(out_dir)},
    )


# ---------------------------------------------------------------- manifest


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    timing: dict = field(default_factory=dict)
    warnings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)  # name -> sha256
    status: str = "ok"
    failed_stage: str | None = None
    error: str | None = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# ---------------------------------------------------------------- stages


def _exact_source(dom, pole):
    if isinstance(dom, BallDomain):
        return DiscSource(dom, pole)
    if isinstance(dom, HalfSpace):
        return HalfSpaceSource(dom, pole)
    if isinstance(dom, Wedge):
        return WedgeSource(dom, pole)
    return PolySource(dom.h, dom.side)


def _build_sources(cfg: ExperimentConfig, dom, walk_kw):
    sides = [("plus", dom, 1)]
    if cfg.poles.get("minus") is not None or (isinstance(dom, HalfSpace) and cfg.poles.get("plus") is None):
        sides.append(("minus", dom.complement(), 2))
    out = {}
    for key, d, stream in sides:
        pole = cfg.poles.get(key)
        if cfg.source == "exact":
            out[key] = _exact_source(d, None if pole is None else np.asarray(pole, dtype=float))
        else:
            wc = WalkConfig(seed=cfg.seed * 1000 + stream, **walk_kw)
            out[key] = EmpiricalSource(wos_exits(d, np.asarray(pole, dtype=float), wc))
    return out


def _cells(spec, dom):
    if isinstance(spec, dict):
        center = spec.get("center", list(getattr(dom, "center", [0.0, 0.0])))
        return arc_partition(int(spec["arcs"]), tuple(center), float(spec.get("start", 0.0)))
    return [BallCell(tuple(float(x) for x in c["center"]), float(c["radius"])) for c in spec]


def _evaluator(src):
    if isinstance(src, PolySource):
        return PolyPart(src.h, src.sign)
    return Evaluator(src.green)


def _analyse_point(cfg: ExperimentConfig, dom, sources, Q):
    """All analyses for one boundary point; returns (record dict, profile rows, warnings)."""
    Q = np.asarray(Q, dtype=float)
    A = cfg.analyses
    plus = sources["plus"]
    minus = sources.get("minus")
    warn: list[str] = []
    rec: dict = {"Q": Q.tolist(), "scales": cfg.scales}
    thresholds = dict(DEFAULT_THRESHOLDS, **cfg.thresholds)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if minus is not None and (A["lambda"] or A["flatness"]):
            cr = classify_point(plus, minus, Q, cfg.scales, thresholds, flatness=A["flatness"], resolution=cfg.resolution)
            rec["classification"] = cr.to_dict()
        elif A["flatness"]:
            from .gmt_analysis import flatness_profile

            prof, verdict = flatness_profile(plus, Q, cfg.scales, cfg.resolution, thresholds["flat_threshold"])
            rec["classification"] = {"flatness": prof, "flatness_verdict": verdict}
        if A["beurling"] and minus is not None:
            rec["beurling"] = beurling_check(plus, minus, Q, cfg.scales).to_dict()
        if A["dimension"]:
            try:
                rec["dimension"] = local_dimension(plus, Q, min(cfg.scales), max(cfg.scales), max(5, len(cfg.scales))).to_dict()
            except HarmlabError as exc:
                warn.append(f"dimension: {exc}")
        if A["theta"]:
            r = max(cfg.scales)
            bs = boundary_sample(dom, Ball(Q, r), 4000, seed=cfg.seed)
            rec["theta"] = {"r": r, "value": theta_density(bs, Q, r)}
        if A["gamma"] and minus is not None:
            try:
                gp = gamma_profile(_evaluator(plus), _evaluator(minus), Q, sorted(cfg.scales))
                rec["gamma"] = gp.to_dict()
            except (HarmlabError, NotImplementedError) as exc:
                warn.append(f"gamma: {exc}")
    warn.extend(str(w.message) for w in caught)
    rows = []
    flat = (rec.get("classification") or {}).get("flatness")
    for j, r in enumerate(cfg.scales):
        mp, sp = plus.mass(Q, r)
        mm, sm = minus.mass(Q, r) if minus is not None else (math.nan, math.nan)
        n = Q.size
        rows.append(
            [
                *Q.tolist(),
                r,
                mp,
                sp,
                mm,
                sm,
                mm / mp if mp > 0 else math.nan,
                mp / r ** (n - 1),
                mp * mm / r ** (2 * (n - 1)),
                flat[j] if flat else None,
            ]
        )
    return rec, rows, warn


def _profiles_csv(dim, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [
            "point",
            *[f"Q_{k}" for k in "xyz"[:dim]],
            "scale",
            "omega_plus",
            "omega_plus_se",
            "omega_minus",
            "omega_minus_se",
            "ratio",
            "density",
            "beurling_product",
            "flatness",
        ]
    )
    for i, prow in rows:
        for row in prow:
            w.writerow([i, *[fmt(v) for v in row]])
    return buf.getvalue()


def run(cfg: ExperimentConfig, threads: int = 1) -> RunManifest:
    """Execute estimate -> sources -> per-point analyses; write artifacts and the manifest."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(cfg.digest(), _version(), cfg.seed)
    (out / "config.json").write_text(_dumps(asdict(cfg)))
    man.files["config.json"] = sha256_file(out / "config.json")
    dom = make_domain(cfg.domain)
    walk_kw = {k: v for k, v in ((cfg.estimate or {}).get("walk") or {}).items() if k != "seed"}
    stage = "estimate"
    try:
        t0 = time.perf_counter()
        if cfg.estimate is not None:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                pole = cfg.poles["plus"]
                if pole is None:
                    raise HarmlabError("the estimate stage needs a finite pole")
                est = wos_measure(dom, np.asarray(pole, dtype=float), _cells(cfg.estimate["cells"], dom), WalkConfig(seed=cfg.seed, **walk_kw))
            man.warnings["estimate"] = [str(w.message) for w in caught]
            (out / "estimate.csv").write_text(est.to_csv())
            man.files["estimate.csv"] = sha256_file(out / "estimate.csv")
        man.timing["estimate"] = time.perf_counter() - t0

        stage = "sources"
        t0 = time.perf_counter()
        sources = _build_sources(cfg, dom, walk_kw)
        lost = {k: s.lost_fraction for k, s in sources.items() if s.lost_fraction > 0.01}
        man.warnings["sources"] = [f"{k}: {100 * v:.2f}% lost walks" for k, v in lost.items()]
        man.timing["sources"] = time.perf_counter() - t0

        stage = "analysis"
        t0 = time.perf_counter()
        if threads > 1:
            with ThreadPoolExecutor(threads) as ex:
                results = list(ex.map(lambda Q: _analyse_point(cfg, dom, sources, Q), cfg.points))
        else:
            results = [_analyse_point(cfg, dom, sources, Q) for Q in cfg.points]
        records = [r for r, _, _ in results]
        man.warnings["analysis"] = [f"point {i}: {m}" for i, (_, _, ws) in enumerate(results) for m in ws]
        (out / "classification.json").write_text(_dumps({"name": cfg.name, "points": records}))
        man.files["classification.json"] = sha256_file(out / "classification.json")
        (out / "profiles.csv").write_text(_profiles_csv(dom.dim, [(i, rows) for i, (_, rows, _) in enumerate(results)]))
        man.files["profiles.csv"] = sha256_file(out / "profiles.csv")
        man.timing["analysis"] = time.perf_counter() - t0
    except Exception as exc:  # noqa: BLE001 - any stage failure is recorded, not raised
        man.status = "failed"
        man.failed_stage = stage
        man.error = f"{type(exc).__name__}: {exc}"
    (out / "manifest.json").write_text(_dumps(man.to_dict()))
    return man


# ---------------------------------------------------------------- report


REPORT_COLUMNS = ["manifest", "point", "Q", "lambda", "gamma_member", "flatness", "gb", "dimension_slope", "theta"]


def report(manifest_paths, csv_path=None, stream=None):
    """Aggregate per-point verdicts from run manifests into a decomposition table.

    Returns ``(rows, counts, missing)``. Missing or unreadable manifests are
    listed and skipped.
    """
    stream = stream or sys.stdout
    rows, missing = [], []
    for mp in manifest_paths:
        mp = Path(mp)
        try:
            man = json.loads(mp.read_text())
            data = json.loads((mp.parent / "classification.json").read_text())
        except (OSError, ValueError) as exc:
            missing.append(f"{mp}: {exc}")
            continue
        if man.get("status") != "ok":
            missing.append(f"{mp}: run status {man.get('status')}")
        for i, rec in enumerate(data.get("points", [])):
            c = rec.get("classification") or {}
            rows.append(
                [
                    str(mp),
                    i,
                    " ".join(fmt(float(x)) for x in rec["Q"]),
                    c.get("lambda_verdict", ""),
                    "" if c.get("gamma_member") is None else str(c["gamma_member"]).lower(),
                    c.get("flatness_verdict") or "",
                    c.get("gb_verdict") or "",
                    fmt((rec.get("dimension") or {}).get("slope")),
                    fmt((rec.get("theta") or {}).get("value")),
                ]
            )
    counts: dict[str, dict[str, int]] = {}
    for col, idx in (("lambda", 3), ("gamma_member", 4), ("flatness", 5), ("gb", 6)):
        counts[col] = {}
        for r in rows:
            if r[idx]:
                counts[col][r[idx]] = counts[col].get(r[idx], 0) + 1
    for m in missing:
        print(f"warning: {m}", file=sys.stderr)
    if not rows:
        print("warning: no classified points", file=sys.stderr)
    n = len(rows)
    print(f"{'column':<14}{'verdict':<16}{'count':>6}{'share':>9}", file=stream)
    for col, cnt in counts.items():
        for verdict, k in sorted(cnt.items()):
            print(f"{col:<14}{verdict:<16}{k:>6}{100 * k / n:>8.1f}%", file=stream)
    if csv_path is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        w.writerows(rows)
        Path(csv_path).write_text(buf.getvalue())
    return rows, counts, missing


# ---------------------------------------------------------------- entry point


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", {"<file>": str(exc)}) from None


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="harmlab", description="Harmonic-measure experiment runner")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    p_run.add_argument("--seed", type=int, default=None, help="override the master seed")
    p_run.add_argument("--threads", type=int, default=1, help="parallel per-point analyses")
    p_rep = sub.add_parser("report", help="aggregate verdicts from manifests")
    p_rep.add_argument("manifests", nargs="*")
    p_rep.add_argument("--csv", default=None)
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    args = ap.parse_args(argv)

    if args.cmd == "report":
        report(args.manifests, args.csv)
        return EXIT_OK
    try:
        raw = _load(args.config)
        cfg = validate(raw, getattr(args, "out", None), getattr(args, "seed", None))
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "fields": exc.fields}, indent=2, sort_keys=True), file=sys.stderr)
        return EXIT_VALIDATION
    if args.cmd == "validate":
        print(f"{args.config}: ok")
        return EXIT_OK
    man = run(cfg, threads=max(1, args.threads))
    print(json.dumps({"status": man.status, "out": str(cfg.out_dir), "files": man.files}, indent=2, sort_keys=True))
    if man.status != "ok":
        print(f"stage {man.failed_stage} failed: {man.error}", file=sys.stderr)
        return EXIT_STAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
