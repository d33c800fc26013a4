"""Weighted operator-norm sweeps over power weights and their reports.

Every norm here is a lower bound: the max of ||op f||_{L^p(w)} / ||f||_{L^p(w)}
over a finite scene bank. Upper-bound pass criteria therefore test
consistency with the weighted bounds, not their sharpness.
"""

from __future__ import annotations

import csv
import json
import platform
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

from .grid import GridSpec, QuadratureSpec, SampledField, centered_box_mask, weighted_lp_norm
from .operators import hl_maximal, marcinkiewicz, marcinkiewicz_dyadic, marcinkiewicz_mollified, rough_singular_integral
from .scenes import get_scene, scene_names
from .sphere import BANK_NAMES, get_kernel, lq_sphere_norm
from .weights import Weight, composite_constants, default_bank, power_weight

REPORT_HEADER = ("operator norms are lower bounds (max over a finite scene bank); "
                 "upper-bound checks test consistency, not sharpness")
OPERATORS = ("marc", "marc-dyadic", "marc-l", "tsing", "hlmax")
R2_FLAG = 0.8


def _conjugate(q: float) -> float:
    return 1.0 if np.isinf(q) else q / (q - 1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    op: str = "marc"
    omega: str = "cos"
    q: float | None = None
    p: float = 2.0
    family: str = "power"
    a_grid: tuple[float, ...] | None = None
    scenes: tuple[str, ...] | None = None
    resolution: int = 256
    half_width: float = 8.0
    t_nodes: int = 4
    l: int | None = None
    seed: int = 0
    slack: float = 4.0
    n_random_cubes: int = 10_000
    max_cubes: int = 128
    threads: int = 1

    def __post_init__(self):
        if self.q is None:
            object.__setattr__(self, "q", get_kernel(self.omega).q_class if self.omega in BANK_NAMES else np.inf)
        if self.a_grid is not None:
            object.__setattr__(self, "a_grid", tuple(float(a) for a in self.a_grid))
        if self.scenes is not None:
            object.__setattr__(self, "scenes", tuple(self.scenes))

    @property
    def q_prime(self) -> float:
        return _conjugate(self.q)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(2, self.half_width, self.resolution)

    def validate(self) -> "ExperimentConfig":
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}; choose from {OPERATORS}")
        if self.omega not in BANK_NAMES:
            raise ValueError(f"unknown kernel {self.omega!r}; choose from {BANK_NAMES}")
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q}")
        if not self.p > self.q_prime:
            raise ValueError(f"need p > q' = {self.q_prime:g}, got p = {self.p:g}")
        if self.family != "power":
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.op == "marc-l" and (self.l is None or self.l < 1):
            raise ValueError("op marc-l needs l >= 1")
        if not self.slack > 0:
            raise ValueError("slack must be positive")
        g = self.grid
        for name in self.scene_list():
            get_scene(name, g, self.seed)
        return self

    def scene_list(self) -> list[str]:
        return list(self.scenes) if self.scenes is not None else scene_names(20)

    def default_a_grid(self, p_eff: float) -> tuple[float, ...]:
        a_max = 0.9 * 2 * (p_eff - 1.0)
        return tuple(float(a) for a in np.linspace(0.0, a_max, 13))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q"] = _json_float(self.q)
        return d

    @classmethod
    def from_mapping(cls, items: dict) -> "ExperimentConfig":
        """Build from string values, e.g. a parsed key=value file."""
        kinds = {f.name: f.type for f in fields(cls)}
        kw = {}
        for k, v in items.items():
            k = k.replace("-", "_")
            if k not in kinds:
                raise KeyError(f"unknown config key {k!r}")
            kw[k] = _coerce(k, v)
        return cls(**kw)


def _coerce(key: str, v):
    if not isinstance(v, str):
        return v
    if key in ("op", "omega", "family"):
        return v
    if key in ("a_grid",):
        return tuple(parse_range(v))
    if key == "scenes":
        return tuple(s.strip() for s in v.split(",") if s.strip())
    if key in ("resolution", "t_nodes", "seed", "n_random_cubes", "max_cubes", "threads", "l"):
        return int(v)
    return float(v)


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive), ``a..b`` over integers, or a comma list."""
    text = text.strip()
    if ":" in text:
        a, b, s = (float(x) for x in text.split(":"))
        if s <= 0:
            raise ValueError(f"range step must be positive: {text!r}")
        n = int(np.floor((b - a) / s + 1e-9)) + 1
        return [a + k * s for k in range(n)]
    if ".." in text:
        a, b = (int(x) for x in text.split(".."))
        return [float(k) for k in range(a, b + 1)]
    return [float(x) for x in text.split(",") if x.strip()]


def _json_float(x):
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class ExponentFit:
    beta: float
    intercept: float
    r2: float
    stderr: float
    ci_low: float
    ci_high: float
    n: int
    flagged: bool


def fit_exponent(x, y) -> ExponentFit:
    """Least-squares slope of log y against log x with a 95% t-band; R^2 < 0.8 is flagged."""
    lx = np.log(np.asarray(x, float))
    ly = np.log(np.asarray(y, float))
    n = len(lx)
    if n < 3 or np.ptp(lx) == 0:
        return ExponentFit(float("nan"), float("nan"), 0.0, float("inf"), float("-inf"), float("inf"), n, True)
    res = stats.linregress(lx, ly)
    tq = stats.t.ppf(0.975, n - 2)
    r2 = float(res.rvalue ** 2)
    return ExponentFit(float(res.slope), float(res.intercept), r2, float(res.stderr),
                       float(res.slope - tq * res.stderr), float(res.slope + tq * res.stderr), n,
                       bool(r2 < R2_FLAG))


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    rows: list[dict]
    fit: ExponentFit | None
    budget: float | None
    passes: dict
    wall_time: float = 0.0
    versions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    def to_dict(self) -> dict:
        return {"header": REPORT_HEADER, "kind": self.kind, "config": self.config, "rows": self.rows,
                "fit": None if self.fit is None else asdict(self.fit), "budget": self.budget,
                "passes": self.passes, "passed": self.passed, "versions": self.versions}

    def to_json(self, path) -> None:
        """Deterministic JSON; wall time goes to a ``.timing.json`` sidecar."""
        path = Path(path)
        path.write_text(json.dumps(_clean(self.to_dict()), indent=2, sort_keys=True) + "\n")
        path.with_suffix(".timing.json").write_text(json.dumps({"wall_time_s": self.wall_time}) + "\n")

    def to_csv(self, path) -> None:
        cols = ["a", "ap", "ainf", "ainf_dual", "curly", "paren", "norm", "bound", "holds", "error"]
        with open(path, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            wr.writeheader()
            for r in self.rows:
                wr.writerow({c: r.get(c, "") for c in cols})


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def versions() -> dict:
    from . import __version__
    return {"mzlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _field(x) -> SampledField:
    return getattr(x, "field", x)


def _check_scene(name: str, f: SampledField) -> None:
    inner = centered_box_mask(f.grid, 0.5)
    if np.any(f.values[~inner] != 0):
        raise ValueError(f"scene {name!r} is not supported in the inner half-box")


def _resolve_scenes(scene_bank, grid: GridSpec, seed: int) -> dict:
    if isinstance(scene_bank, dict):
        bank = dict(scene_bank)
    else:
        bank = {n: get_scene(n, grid, seed) for n in scene_bank}
    if not bank:
        raise ValueError("scene bank is empty")
    for n, f in bank.items():
        _check_scene(n, f)
    return bank


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, items))


def _norm_ratio(pairs, w, p: float) -> float:
    """max over (f, op f) pairs of ||op f||_{p,w} / ||f||_{p,w}; zero-norm scenes are skipped."""
    best = 0.0
    for name, f, g in pairs:
        den = weighted_lp_norm(f, w, p)
        if den == 0:
            warnings.warn(f"scene {name!r} has zero weighted norm; skipped", stacklevel=3)
            continue
        best = max(best, weighted_lp_norm(g, w, p) / den)
    return best


def operator_norm_estimate(op, w, p: float, scene_bank, seed: int = 0, threads: int = 1) -> float:
    """Lower bound on ||op||_{L^p(w) -> L^p(w)}: the max ratio over the scene bank.

    ``scene_bank`` is a dict of fields or a sequence of scene names (random
    scenes are drawn with ``seed``).
    """
    wf = w.field if isinstance(w, Weight) else w
    bank = _resolve_scenes(scene_bank, wf.grid, seed)
    names = list(bank)
    outs = _map(lambda n: _field(op(bank[n])), names, threads)
    return _norm_ratio([(n, bank[n], o) for n, o in zip(names, outs)], w, p)


def _operator(cfg: ExperimentConfig, op: str):
    omega = get_kernel(cfg.omega)
    g = cfg.grid
    if op == "marc":
        quad = QuadratureSpec.for_grid(g, cfg.t_nodes)
        return lambda f: marcinkiewicz(omega, f, quad)
    if op == "marc-dyadic":
        quad = QuadratureSpec.for_grid(g, cfg.t_nodes)
        return lambda f: marcinkiewicz_dyadic(omega, f, quad)
    if op == "marc-l":
        quad = QuadratureSpec.for_grid(g, cfg.t_nodes, cfg.l)
        return lambda f: marcinkiewicz_mollified(omega, f, cfg.l, quad)
    if op == "tsing":
        return lambda f: rough_singular_integral(omega, f, 4 * g.spacing, g.half_width / 2)
    if op == "hlmax":
        return hl_maximal
    raise ValueError(f"unknown operator {op!r}")


def _sweep(cfg: ExperimentConfig, kind: str, op: str, p_eff: float, r: float, scale: float,
           budget: float | None) -> ExperimentReport:
    t0 = time.perf_counter()
    g = cfg.grid
    a_grid = cfg.a_grid if cfg.a_grid is not None else cfg.default_a_grid(p_eff)
    hi = 2 * (p_eff - 1.0)
    bad = [a for a in a_grid if not -2 < a < hi]
    if bad:
        raise ValueError(f"a = {bad[0]:g} outside the A_{p_eff:g} window (-2, {hi:g})")
    bank = _resolve_scenes(cfg.scene_list(), g, cfg.seed)
    names = list(bank)
    fn = _operator(cfg, op)
    outs = _map(lambda n: _field(fn(bank[n])), names, cfg.threads)
    pairs = [(n, bank[n], o) for n, o in zip(names, outs)]
    cubes = default_bank(g.resolution, cfg.n_random_cubes, cfg.seed)

    def row(a):
        try:
            w = power_weight(a, g, p_eff)
            cc = composite_constants(w, p_eff, r, cubes, cfg.max_cubes)
            norm = _norm_ratio(pairs, w, cfg.p)
        except (ValueError, FloatingPointError) as exc:
            return {"a": a, "error": str(exc)}
        bound = cfg.slack * scale * cc.curly * cc.paren
        return {"a": a, "ap": cc.ap, "ainf": cc.ainf, "ainf_dual": cc.ainf_dual, "curly": cc.curly,
                "paren": cc.paren, "norm": norm, "bound": bound, "holds": bool(norm <= bound), "error": ""}

    rows = _map(row, a_grid, cfg.threads)
    good = [r_ for r_ in rows if not r_["error"]]
    fit = fit_exponent([r_["ap"] for r_ in good], [r_["norm"] for r_ in good]) if len(good) >= 3 else None
    passes = {"rows_complete": len(good) == len(rows)}
    if kind != "buckley":
        passes["rows_bounded"] = all(r_["holds"] for r_ in good)
    if budget is not None:
        passes["exponent"] = bool(fit is not None and fit.beta <= budget)
    return ExperimentReport(kind, dict(cfg.to_dict(), a_grid=list(a_grid)), rows, fit, budget, passes,
                            time.perf_counter() - t0, versions())


def theorem12_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """M_Omega on L^p(|x|^a): rows bounded by slack ||Omega||_q {w}_{A_{p/q'},p} (w)_{A_{p/q'}},
    fitted exponent against [w]_{A_{p/q'}} within 2 max(1, 1/(p - q')) + 0.25."""
    cfg = replace(cfg, op="marc").validate()
    qp = cfg.q_prime
    p_eff = cfg.p / qp
    budget = 2 * max(1.0, 1.0 / (cfg.p - qp)) + 0.25
    scale = lq_sphere_norm(get_kernel(cfg.omega), cfg.q)
    return _sweep(cfg, "theorem12", "marc", p_eff, cfg.p, scale, budget)


def theorem11_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Rough singular integral (eps = 4h, R = L/2): rows bounded by slack ||Omega||_inf {w}_{A_p,p} (w)_{A_p}."""
    omega = get_kernel(cfg.omega)
    if not np.isinf(omega.q_class):
        raise ValueError(f"kernel {cfg.omega!r} is not bounded on the circle")
    cfg = replace(cfg, op="tsing", q=np.inf).validate()
    scale = lq_sphere_norm(omega, np.inf)
    return _sweep(cfg, "theorem11", "tsing", cfg.p, cfg.p, scale, None)


def buckley_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Dyadic maximal function on L^p(|x|^a); exponent against [w]_{A_p} within 1/(p-1) + 0.25."""
    cfg = replace(cfg, op="hlmax", q=np.inf).validate()
    budget = 1.0 / (cfg.p - 1.0) + 0.25
    return _sweep(cfg, "buckley", "hlmax", cfg.p, cfg.p, 1.0, budget)


SWEEPS = {"theorem12": theorem12_sweep, "theorem11": theorem11_sweep, "buckley": buckley_sweep}
