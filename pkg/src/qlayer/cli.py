"""Command-line front end: ``python -m qlayer {analyze,certify,solve,all}``.

A run is configured by one JSON document.  Outputs are ``report.json``,
``summary.txt`` and ``tables/*.csv`` in the output directory, written with
floats rounded to 9 significant digits so identical configs give identical
bytes.  Exit codes: 0 success, 1 hypothesis failure, 2 a certificate
contradicted by the eigensolver, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .certify import CSV_FIELDS, STRATEGIES, SearchBounds, certify_discrete_spectrum, choose_strategy
from .eigensolve import GridSpec, solve_layer
from .geometry import (HypothesisError, check_asymptotic_flatness, check_hypotheses, is_minimal,
                       kappa_split, hartman_identity_residual, total_gauss_curvature,
                       volume_growth_lambda)
from .layer import LayerConfig, build_layer_metric, cached_sup_norm
from .surfaces import make_surface
from .variational import check_weak_kappa_parabolic, log_cutoff_energy_sequence

EXIT_OK, EXIT_HYPOTHESIS, EXIT_INCONSISTENT, EXIT_CONFIG = 0, 1, 2, 3
SOLVE_FIELDS = ("surface", "a", "m", "lambda_min", "sigma_ess", "gap", "count_below", "n_s", "n_t",
                "length", "extrapolated", "certified", "consistent")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n_s: int = 400
    n_t: int = 24
    length: float = 100.0
    richardson: bool = False
    modes: tuple[int, ...] = (0,)


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration; every computation is deterministic (no seeds)."""

    surface: dict
    widths: tuple[float, ...] = ()
    strategy: str = "auto"
    search: SearchBounds = field(default_factory=SearchBounds)
    grid: GridConfig = field(default_factory=GridConfig)
    out: str = "out"

    def canonical(self) -> dict:
        d = asdict(self)
        d.pop("out")
        return d

    @property
    def config_hash(self) -> str:
        blob = json.dumps(_round(self.canonical()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"field {where!r}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"field {where!r}: unknown keys {unknown}; allowed {sorted(known)}")
    kw = {}
    for k, v in data.items():
        kw[k] = tuple(v) if isinstance(v, list) else v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {where!r}: {exc}") from None


def parse_config(data: dict, *, widths=None, max_radius=None, out=None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"surface", "widths", "strategy", "search", "grid", "out"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}; allowed {sorted(allowed)}")
    if "surface" not in data or not isinstance(data["surface"], dict):
        raise ConfigError("field 'surface': required object")
    w = data.get("widths", []) if widths is None else widths
    try:
        w = tuple(sorted(float(x) for x in w))
    except (TypeError, ValueError):
        raise ConfigError("field 'widths': expected a list of numbers") from None
    if any(x <= 0 for x in w):
        raise ConfigError("field 'widths': half-widths must be positive")
    strategy = data.get("strategy", "auto")
    if strategy != "auto" and strategy not in STRATEGIES:
        raise ConfigError(f"field 'strategy': {strategy!r} not in {('auto',) + STRATEGIES}")
    search = dict(data.get("search", {}))
    if max_radius is not None:
        search["R_max"] = float(max_radius)
    bounds = _build(SearchBounds, search, "search")
    grid = _build(GridConfig, data.get("grid", {}), "grid")
    return RunConfig(surface=data["surface"], widths=w, strategy=strategy, search=bounds,
                     grid=grid, out=out or data.get("out", "out"))


def load_config(path, **overrides) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data, **overrides)


# --------------------------------------------------------------------------
# pipelines
# --------------------------------------------------------------------------

def _safe(fn, *args):
    try:
        return fn(*args), None
    except (HypothesisError, ValueError) as exc:
        return None, str(exc)


def run_analyze(config: RunConfig, surface=None) -> dict:
    surface = surface or make_surface(config.surface)
    hyp = check_hypotheses(surface)
    frag = {"surface": surface.label, "hypotheses": {"passed": hyp.passed, "items": hyp.items,
                                                     "notes": hyp.notes}}
    B = cached_sup_norm(surface)
    tot = total_gauss_curvature(surface)
    lam = volume_growth_lambda(surface)
    split = kappa_split(surface)
    hart, hart_err = _safe(hartman_identity_residual, surface)
    geo = {
        "B_inf": B.value, "B_inf_at_s": B.s_at, "width_bound": 1.0 / B.value if B.value else math.inf,
        "total_curvature": tot.total, "total_abs_curvature": tot.total_abs,
        "total_curvature_converged": tot.converged,
        "kappa_positive": split.positive, "kappa_negative": split.negative,
        "lambda": lam.value, "lambda_converged": lam.converged,
        "hartman_residual": None if hart is None else hart.residual,
        "euler_characteristic": surface.profile.euler_characteristic,
    }
    if hart_err:
        geo["hartman_note"] = hart_err
    if B.value > 0:
        fl = check_asymptotic_flatness(surface, 0.1 * B.value)
        geo["flatness"] = {"flat": fl.flat, "radius": fl.radius, "decay_rate": fl.decay_rate}
    frag["geometry"] = geo
    if not hyp.passed:
        frag["skipped"] = "hypotheses fail; parabolicity and downstream steps skipped"
        return frag
    trace = log_cutoff_energy_sequence(surface, 10.0)
    weak = check_weak_kappa_parabolic(surface)
    strategy = config.strategy if config.strategy != "auto" else choose_strategy(surface)
    notes = []
    if weak.verdict != "minimal+parabolic" and weak.verdict != "capacity witness":
        notes.append("not weakly kappa-parabolic by the searched cutoffs")
    if strategy == "annulus_bump":
        notes.append("kappa >= 0 everywhere: annulus-bump route (main4_nonneg)")
    frag["parabolicity"] = {
        "parabolic": trace.monotone and trace.energies[-1] < 1e-2,
        "minimal": is_minimal(surface),
        "log_cutoff": {"R": trace.R, "doublings": len(trace.energies),
                       "final_energy": trace.energies[-1], "monotone": trace.monotone},
        "weak_kappa": weak.to_dict(),
        "strategy": strategy, "notes": notes,
    }
    return frag


def _valid_widths(config, surface):
    B = cached_sup_norm(surface).value
    ok = [a for a in config.widths if a * B < 1.0]
    skipped = [a for a in config.widths if a * B >= 1.0]
    return ok, skipped


def run_certify(config: RunConfig, surface=None) -> dict:
    surface = surface or make_surface(config.surface)
    hyp = check_hypotheses(surface)
    if not hyp.passed:
        raise HypothesisError(f"{surface.label}: hypotheses fail: {', '.join(hyp.failures())}")
    ok, skipped = _valid_widths(config, surface)
    rows = [certify_discrete_spectrum(surface, a, config.strategy, config.search) for a in ok]
    skip_rows = [{"surface": surface.label, "a": a, "verdict": "skipped",
                  "reason": f"a * B_inf >= 1 (B_inf = {cached_sup_norm(surface).value:.9g})"}
                 for a in skipped]
    return {"surface": surface.label, "certificates": [c.to_dict() for c in rows],
            "skipped": skip_rows}


def run_solve(config: RunConfig, surface=None, certify_frag: dict | None = None) -> dict:
    """Eigenvalue rows per width and mode; the truncation covers any certificate's trial."""
    surface = surface or make_surface(config.surface)
    ok, skipped = _valid_widths(config, surface)
    certs = {c["a"]: c for c in (certify_frag or {}).get("certificates", [])}
    g = config.grid
    rows = []
    for a in ok:
        cert = certs.get(a)
        length = g.length
        if cert is not None and cert["verdict"] == "certified" and cert["R_out"]:
            length = max(length, float(cert["R_out"]))
        layer = build_layer_metric(LayerConfig(surface, a))
        for m in g.modes:
            res = solve_layer(layer, m, GridSpec(g.n_s, g.n_t, length), richardson=g.richardson)
            row = {"surface": surface.label, "a": a, "m": m, "lambda_min": res.lambda_min,
                   "sigma_ess": res.sigma_ess, "gap": res.gap, "count_below": res.count_below,
                   "n_s": g.n_s, "n_t": g.n_t, "length": length,
                   "extrapolated": res.extrapolated, "certified": None, "consistent": None,
                   "detail": res.to_dict()}
            if cert is not None:
                row["certified"] = cert["verdict"] == "certified"
            rows.append(row)
    # a certificate is confirmed when some computed mode lies below the threshold
    for a in ok:
        cert = certs.get(a)
        if cert is None:
            continue
        best_gap = max(r["gap"] for r in rows if r["a"] == a)
        consistent = not (cert["verdict"] == "certified" and best_gap <= 0.0)
        for r in rows:
            if r["a"] == a:
                r["consistent"] = consistent
    return {"surface": surface.label, "rows": rows, "skipped": skipped,
            "note": "Dirichlet truncation at s = length; only sub-threshold eigenvalues are "
                    "meaningful"}


def cross_consistency(report: dict) -> list[str]:
    """Diagnostics for every certified width whose eigensolver gap is not positive."""
    solve = report.get("solve")
    if not solve:
        return []
    bad = sorted({r["a"] for r in solve["rows"] if r["consistent"] is False})
    return [f"{solve['surface']}: a = {a:.9g} certified but every computed gap <= 0"
            for a in bad]


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.9g}")


def _round(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "item"):
        return _round(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else _round(r.get(k))) for k in columns})
    return buf.getvalue()


def _summary(report: dict) -> str:
    lines = [f"qlayer {report['tool']['version']}  config {report['config_hash'][:16]}"]
    an = report.get("analyze")
    if an:
        g = an["geometry"]
        lines += [f"surface: {an['surface']}",
                  f"hypotheses: {'pass' if an['hypotheses']['passed'] else 'FAIL'}"
                  + ("" if an["hypotheses"]["passed"] else
                     " (" + ", ".join(k for k, v in an["hypotheses"]["items"].items() if not v) + ")"),
                  f"B_inf = {_fmt(g['B_inf'])}  total curvature = {_fmt(g['total_curvature'])}  "
                  f"|kappa| total = {_fmt(g['total_abs_curvature'])}",
                  f"lambda = {_fmt(g['lambda'])}  Hartman residual = "
                  f"{'n/a' if g['hartman_residual'] is None else _fmt(g['hartman_residual'])}"]
        par = an.get("parabolicity")
        if par:
            lines.append(f"parabolic: {par['parabolic']}  weak kappa-parabolicity: "
                         f"{par['weak_kappa']['verdict']}  route: {par['strategy']}")
            lines += [f"  note: {n}" for n in par["notes"]]
    ce = report.get("certify")
    if ce:
        lines.append("certificates:")
        for c in ce["certificates"]:
            lines.append(f"  a = {_fmt(c['a'])}: {c['verdict']} via {c['route']}  R = {c['R']}  "
                         f"Q = {_fmt(c['Q'])} +- {_fmt(c['Q_errbar'])}  ({c['statement']})")
        for s in ce["skipped"]:
            lines.append(f"  a = {_fmt(s['a'])}: skipped, {s['reason']}")
    so = report.get("solve")
    if so:
        lines.append("eigensolver (truncated domain):")
        for r in so["rows"]:
            lines.append(f"  a = {_fmt(r['a'])} m = {r['m']}: lambda_min = {_fmt(r['lambda_min'])}  "
                         f"sigma_ess = {_fmt(r['sigma_ess'])}  gap = {_fmt(r['gap'])}")
    cc = report.get("cross_check")
    if cc:
        lines.append("cross-check: " + ("consistent" if cc["consistent"] else "INCONSISTENT"))
        lines += [f"  {d}" for d in cc["diagnostics"]]
    return "\n".join(lines) + "\n"


def emit_report(fragments: dict, config: RunConfig, out_dir) -> dict:
    """Write ``report.json``, ``summary.txt`` and ``tables/*.csv``; returns the report."""
    if not any(v is not None for v in fragments.values()):
        raise ValueError("nothing to report")
    report = {"tool": {"name": "qlayer", "version": __version__},
              "config_hash": config.config_hash, "config": config.canonical()}
    report.update({k: v for k, v in fragments.items() if v is not None})
    report = _round(report)
    out = Path(out_dir)
    try:
        (out / "tables").mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        (out / "summary.txt").write_text(_summary(report))
        if "certify" in report:
            rows = [{**c} for c in report["certify"]["certificates"]]
            rows += [{**s, "strategy": config.strategy} for s in report["certify"]["skipped"]]
            rows.sort(key=lambda r: r["a"])
            (out / "tables" / "certify.csv").write_text(_csv(rows, CSV_FIELDS))
        if "solve" in report:
            (out / "tables" / "solve.csv").write_text(_csv(report["solve"]["rows"], SOLVE_FIELDS))
        if "analyze" in report:
            g = report["analyze"]["geometry"]
            cols = ("surface", "B_inf", "total_curvature", "total_abs_curvature", "lambda",
                    "hartman_residual")
            (out / "tables" / "geometry.csv").write_text(
                _csv([{"surface": report["analyze"]["surface"], **g}], cols))
    except OSError as exc:
        raise OSError(f"cannot write report under {out}: {exc}") from exc
    return report


def run(command: str, config: RunConfig, out_dir=None) -> tuple[int, dict]:
    surface = make_surface(config.surface)
    frags = {"analyze": None, "certify": None, "solve": None}
    code = EXIT_OK
    hyp_ok = check_hypotheses(surface).passed
    if command in ("analyze", "all"):
        frags["analyze"] = run_analyze(config, surface)
    if not hyp_ok:
        code = EXIT_HYPOTHESIS
        if frags["analyze"] is None:
            frags["analyze"] = run_analyze(config, surface)
    if hyp_ok and command in ("certify", "all"):
        frags["certify"] = run_certify(config, surface)
    if command in ("solve", "all") and (hyp_ok or command == "solve"):
        frags["solve"] = run_solve(config, surface, frags["certify"])
    diags = cross_consistency(frags)
    if frags["solve"] is not None and frags["certify"] is not None:
        frags["cross_check"] = {"consistent": not diags, "diagnostics": diags}
    if diags:
        code = EXIT_INCONSISTENT
    report = emit_report(frags, config, out_dir or config.out)
    return code, report


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="qlayer", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=("analyze", "certify", "solve", "all"))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--widths", help="comma-separated half-widths (overrides the config)")
    p.add_argument("--max-radius", type=float, help="largest cutoff radius R searched")
    args = p.parse_args(argv)
    try:
        widths = None
        if args.widths is not None:
            try:
                widths = [float(x) for x in args.widths.split(",") if x.strip()]
            except ValueError:
                raise ConfigError(f"--widths: cannot parse {args.widths!r}") from None
        config = load_config(args.config, widths=widths, max_radius=args.max_radius, out=args.out)
        code, report = run(args.command, config)
    except (ConfigError, KeyError) as exc:
        print(f"qlayer: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        print(f"qlayer: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    out = Path(config.out)
    print(_summary(report), end="")
    if code == EXIT_INCONSISTENT:
        print("qlayer: cross-consistency failure: "
              + "; ".join(report["cross_check"]["diagnostics"]), file=sys.stderr)
    print(f"wrote {out / 'report.json'}")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
