"""Search for trial functions with ``Q < 0`` and emit certificates.

A test function ``u`` in the form domain with ``Q(u, u) < 0`` puts the bottom
of the spectrum below ``sigma_ess = pi^2 / 4a^2`` and hence makes the discrete
spectrum non-empty.  Every route below builds ``u + eps v`` with
``u = phi chi`` and ``v = j chi t`` and minimizes over ``eps`` in closed form.
A ``not_found`` verdict is never a claim that the discrete spectrum is empty.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import HypothesisError, check_hypotheses, is_minimal, sample_radii
from .layer import LayerConfig, build_layer_metric, cached_sup_norm, metric_sandwich_check
from .variational import (GradientBoundError, Cutoff, TrialFunction, annulus_bump_threshold,
                          build_annulus_bump, build_annulus_cutoff, build_log_cutoff,
                          build_meanH_trial, build_ring_bump, check_weak_kappa_parabolic,
                          dirichlet_energy, eval_Q, _surface_integral)

STRATEGIES = ("none", "annulus_bump", "meanH", "capacity")
ROUTES = {"none": "main6_minimal", "annulus_bump": "main4_nonneg",
          "meanH": "parabolic_general", "capacity": "main6_capacity"}
SIGN_MARGIN = 10.0
CSV_FIELDS = ("surface", "a", "strategy", "R", "R_out", "eps", "Q", "Q_errbar", "sigma_ess",
              "verdict")


def sigma_ess_threshold(a: float) -> float:
    """Bottom of the essential spectrum ``pi^2 / 4a^2`` of the layer."""
    if not a > 0:
        raise ValueError("half-width must be positive")
    return math.pi**2 / (4.0 * a * a)


@dataclass(frozen=True)
class EpsilonChoice:
    eps: float
    Q_min: float
    bounded: bool        # False when Qvv <= 0: Q(u + eps v) is unbounded below or flat


def optimal_epsilon(Quu: float, Quv: float, Qvv: float) -> EpsilonChoice:
    """Minimize ``Quu + 2 eps Quv + eps^2 Qvv`` over ``eps``."""
    if Qvv <= 0.0:
        return EpsilonChoice(math.nan, -math.inf if (Qvv < 0 or Quv != 0) else Quu, False)
    eps = -Quv / Qvv
    return EpsilonChoice(eps, Quu - Quv * Quv / Qvv, True)


@dataclass(frozen=True)
class SearchBounds:
    """Radius grid and trial-family parameters.

    Radii run over the dyadic grid ``2^k`` from the first power of two at or
    above ``max(R_min, sandwich radius)`` to ``R_max``; enlarging any bound
    only adds grid points.
    """

    R_min: float = 1.0
    R_max: float = 4096.0
    ratios: tuple[float, ...] = (4.0, 16.0, 256.0)     # R_out / R of log cutoffs
    scales: tuple[float, ...] = (0.0,)                 # mollification of H (meanH)
    annulus_log_ratio: float | None = None             # log outer ramp on [2R, ratio R]
    sandwich_eps: float = 0.1
    use_sandwich: bool = True

    def __post_init__(self):
        if not 0 < self.R_min <= self.R_max:
            raise ValueError("need 0 < R_min <= R_max")
        if any(r <= 1.0 for r in self.ratios):
            raise ValueError("cutoff ratios must exceed 1")
        if self.annulus_log_ratio is not None and self.annulus_log_ratio <= 2.5:
            raise ValueError("annulus_log_ratio must exceed 2.5")

    def radii(self, start: float) -> list[float]:
        k = math.ceil(math.log2(max(self.R_min, start)) - 1e-12)
        out = []
        while 2.0**k <= self.R_max * (1 + 1e-12):
            out.append(2.0**k)
            k += 1
        return out


@dataclass
class Certificate:
    surface: str
    a: float
    strategy: str
    route: str
    verdict: str                       # "certified" or "not_found"
    sigma_ess: float
    R: float | None = None
    R_out: float | None = None         # outer edge of the trial's support
    bump_radius: float | None = None
    scale: float | None = None
    eps: float = 0.0
    Q: float = math.nan
    Q_errbar: float = math.nan
    Quu: float = math.nan
    Quv: float = math.nan
    Qvv: float = math.nan
    mass: float = math.nan
    rayleigh_bound: float = math.nan   # sigma_ess + Q / ||u + eps v||^2
    estimate: float | None = None      # paper-style upper estimate of Quu, for comparison
    trial: dict = field(default_factory=dict)
    evaluated: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    @property
    def support(self) -> float | None:
        return self.R_out

    def statement(self) -> str:
        if self.certified:
            return "discrete spectrum non-empty"
        return "no certificate found (this is not a claim of empty discrete spectrum)"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["statement"] = self.statement()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)

    def csv_row(self) -> dict:
        return {"surface": self.surface, "a": self.a, "strategy": self.strategy, "R": self.R,
                "R_out": self.R_out, "eps": self.eps, "Q": self.Q, "Q_errbar": self.Q_errbar,
                "sigma_ess": self.sigma_ess, "verdict": self.verdict}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow(self.csv_row())
        return buf.getvalue()


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


@dataclass(frozen=True)
class _Candidate:
    phi: Cutoff
    v: TrialFunction | None
    R: float
    R_out: float
    bump_radius: float | None = None
    scale: float | None = None


def _candidates(strategy, surface, R, bounds, aux):
    if strategy == "none":
        for ratio in bounds.ratios:
            yield _Candidate(build_log_cutoff(R, R * ratio), None, R, R * ratio)
    elif strategy == "annulus_bump":
        if R <= annulus_bump_threshold():
            return
        phi = build_annulus_cutoff(R, None if bounds.annulus_log_ratio is None
                                   else bounds.annulus_log_ratio * R)
        j = build_annulus_bump(R)
        yield _Candidate(phi, TrialFunction(j, "chi_t"), R, phi.support[1], bump_radius=R)
    elif strategy == "meanH":
        for ratio in bounds.ratios:
            phi = build_log_cutoff(R, R * ratio)
            for scale in bounds.scales:
                yield _Candidate(phi, build_meanH_trial(surface, phi, scale), R, R * ratio,
                                 scale=scale)
    elif strategy == "capacity":
        j = aux["bump"]
        if R < j.support[1]:
            return
        for ratio in bounds.ratios:
            yield _Candidate(build_log_cutoff(R, R * ratio), TrialFunction(j, "chi_t"), R,
                             R * ratio, bump_radius=aux["center"])
    else:
        raise ValueError(f"unknown strategy {strategy!r}; known: {STRATEGIES}")


def choose_strategy(surface) -> str:
    """Route suggested by the geometry: minimal, non-negative curvature, capacity, general."""
    if is_minimal(surface):
        return "none"
    kappa = surface.frame(sample_radii(surface)).kappa
    if np.all(kappa >= -1e-14 * max(1.0, float(np.abs(kappa).max()))):
        return "annulus_bump"
    if check_weak_kappa_parabolic(surface).verdict == "capacity witness":
        return "capacity"
    return "meanH"


def _capacity_bump(surface):
    s = sample_radii(surface)
    H = np.abs(surface.frame(s).H)
    i = int(np.argmax(H))
    center = float(s[i])
    width = max(0.25 * center, 0.25)
    return {"bump": build_ring_bump(center, width), "center": center}


def _evaluate(cand: _Candidate, layer):
    u = TrialFunction(cand.phi, "chi")
    ruu = eval_Q(u, u, layer)
    reports = [ruu]
    if cand.v is None:
        Quu, Quv, Qvv = ruu.Q, 0.0, 1.0
        choice = optimal_epsilon(Quu, 0.0, 1.0)
        err = ruu.error + ruu.direct_residual
        mass = ruu.mass
    else:
        ruv = eval_Q(u, cand.v, layer)
        rvv = eval_Q(cand.v, cand.v, layer)
        reports += [ruv, rvv]
        Quu, Quv, Qvv = ruu.Q, ruv.Q, rvv.Q
        choice = optimal_epsilon(Quu, Quv, Qvv)
        if not choice.bounded:
            return None
        e = choice.eps
        err = (ruu.error + ruu.direct_residual + 2 * abs(e) * (ruv.error + ruv.direct_residual)
               + e * e * (rvv.error + rvv.direct_residual))
        mass = ruu.mass + 2 * e * ruv.mass + e * e * rvv.mass
    converged = all(r.converged for r in reports)
    return choice, Quu, Quv, Qvv, err, mass, converged


def _rty_estimate(surface, phi, a, B_inf):
    grad2 = dirichlet_energy(surface, phi)
    k2 = _surface_integral(surface, phi, lambda fr, v, d: v * v * fr.kappa, phi.breakpoints()).value
    return a * k2 + (a + a * a * B_inf + a**3 * B_inf) * grad2


def certify_discrete_spectrum(surface, a: float, strategy: str = "auto",
                              search_bounds: SearchBounds | None = None) -> Certificate:
    """First certificate along the radius grid (smallest radius first), else ``not_found``."""
    bounds = search_bounds or SearchBounds()
    hyp = check_hypotheses(surface)
    if not hyp.passed:
        raise HypothesisError(f"{surface.label}: hypotheses fail: {', '.join(hyp.failures())}")
    config = LayerConfig(surface, a)          # raises WidthError
    layer = build_layer_metric(config)
    if strategy == "auto":
        strategy = choose_strategy(surface)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; known: {STRATEGIES}")
    sigma = sigma_ess_threshold(a)
    B_inf = cached_sup_norm(surface).value
    notes = []
    start = bounds.R_min
    if bounds.use_sandwich:
        sw = metric_sandwich_check(config, bounds.sandwich_eps)
        if sw.finite:
            start = max(start, sw.radius)
        notes.append(f"sandwich radius {sw.radius:.6g} at eps = {bounds.sandwich_eps:g}")
    if strategy == "none" and not is_minimal(surface):
        notes.append("surface is not minimal; Q(phi chi, phi chi) is used as a plain trial")
    aux = _capacity_bump(surface) if strategy == "capacity" else {}
    if strategy == "annulus_bump" and bounds.R_max <= annulus_bump_threshold():
        notes.append(f"bump slope bound needs R > {annulus_bump_threshold():g}")

    best = None
    n_eval = 0
    for R in bounds.radii(start):
        for cand in _candidates(strategy, surface, R, bounds, aux):
            try:
                out = _evaluate(cand, layer)
            except GradientBoundError:
                continue
            n_eval += 1
            if out is None:
                continue
            choice, Quu, Quv, Qvv, err, mass, converged = out
            cert = Certificate(
                surface=surface.label, a=float(a), strategy=strategy, route=ROUTES[strategy],
                verdict="not_found", sigma_ess=sigma, R=cand.R, R_out=cand.R_out,
                bump_radius=cand.bump_radius, scale=cand.scale,
                eps=0.0 if cand.v is None else choice.eps, Q=choice.Q_min, Q_errbar=err,
                Quu=Quu, Quv=Quv, Qvv=Qvv if cand.v is not None else math.nan, mass=mass,
                rayleigh_bound=sigma + choice.Q_min / mass if mass > 0 else math.nan,
                trial={"u": cand.phi.describe(),
                       "v": None if cand.v is None else cand.v.describe()})
            if best is None or cert.Q < best.Q:
                best = cert
            if converged and cert.Q < -SIGN_MARGIN * err:
                cert.verdict = "certified"
                if strategy == "none":
                    cert.estimate = _rty_estimate(surface, cand.phi, a, B_inf)
                cert.evaluated = n_eval
                cert.notes = notes
                return cert
    if best is None:
        best = Certificate(surface=surface.label, a=float(a), strategy=strategy,
                           route=ROUTES[strategy], verdict="not_found", sigma_ess=sigma)
        notes.append("no admissible trial in the search bounds")
    else:
        notes.append(f"best Q observed {best.Q:.6g} (error bar {best.Q_errbar:.3g})")
    best.verdict = "not_found"
    best.evaluated = n_eval
    best.notes = notes
    return best


@dataclass
class WidthTable:
    surface: str
    strategy: str
    B_inf: float
    rows: list[Certificate]
    skipped: list[float]

    @property
    def certified_widths(self) -> list[float]:
        return [c.a for c in self.rows if c.certified]

    @property
    def largest_certified(self) -> float | None:
        w = self.certified_widths
        return max(w) if w else None

    @property
    def behavior(self) -> str:
        """``full_range``: every width certified; ``small_a``: a leading run only."""
        flags = [c.certified for c in self.rows]
        if flags and all(flags):
            return "full_range"
        if any(flags):
            return "small_a" if flags[0] else "partial"
        return "none"

    def to_dict(self) -> dict:
        return {"surface": self.surface, "strategy": self.strategy, "B_inf": self.B_inf,
                "largest_certified": self.largest_certified, "behavior": self.behavior,
                "skipped": self.skipped, "rows": [c.to_dict() for c in self.rows]}


def max_certified_width(surface, a_grid, strategy: str = "auto",
                        search_bounds: SearchBounds | None = None) -> WidthTable:
    B_inf = cached_sup_norm(surface).value
    rows, skipped = [], []
    for a in sorted(a_grid):
        if a <= 0 or a * B_inf >= 1.0:
            skipped.append(float(a))
            continue
        rows.append(certify_discrete_spectrum(surface, a, strategy, search_bounds))
    strat = rows[0].strategy if rows else strategy
    return WidthTable(surface.label, strat, B_inf, rows, skipped)
