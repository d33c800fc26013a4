"""Golden-value regression suite with JUnit XML and JSON summaries.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 missing goldens.
"""

from __future__ import annotations

import json
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .domination import sparse_domination_check, weak11_check
from .experiments import ExperimentConfig, _clean, buckley_sweep, operator_norm_estimate, theorem12_sweep
from .fourier import approximation_decay, decay_profile, mollifier_symbol_check, tail_slope
from .grid import GridSpec, QuadratureSpec, lp_norm
from .kernels import build_k_jt
from .operators import hl_maximal, marcinkiewicz, marcinkiewicz_dyadic
from .scenes import get_scene, scene_bank
from .sphere import BANK_NAMES, get_kernel, lq_sphere_norm
from .weights import (ainf_constant, ap_constant, power_weight, reverse_holder_check, tail_sum_check,
                      tail_sum_sup)

GOLDENS_PATH = Path(__file__).with_name("data") / "goldens.json"
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_MISSING = 0, 1, 2, 3


@dataclass(frozen=True)
class RegressionConfig:
    resolution: int = 256
    half_width: float = 8.0
    seed: int = 0

    @property
    def grid(self) -> GridSpec:
        return GridSpec(2, self.half_width, self.resolution)

    def to_dict(self) -> dict:
        return {"resolution": self.resolution, "half_width": self.half_width, "seed": self.seed}


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    run: Callable[[RegressionConfig], dict]
    rtol: float
    atol: float = 0.0


# --- check bodies; every value is a float, booleans are stored as 0/1 -------

def _lq_norms(cfg):
    out = {}
    for name in BANK_NAMES:
        om = get_kernel(name)
        out[f"{name}_l2" if om.q_class > 2 else f"{name}_l1.5"] = lq_sphere_norm(om, 2.0 if om.q_class > 2 else 1.5)
    return out


def _mass_law(cfg):
    g = cfg.grid.with_lattice("node")
    quad = QuadratureSpec.for_grid(cfg.grid)
    worst = 0.0
    for name in BANK_NAMES:
        om = get_kernel(name)
        for j in quad.scales:
            for t in quad.nodes:
                K = build_k_jt(om, j, t, g).field
                mass = float(np.abs(K.values).sum() * g.cell_volume)
                worst = max(worst, abs(mass / (0.5 * t * om.l1_norm()) - 1.0))
    return {"max_rel_error": worst, "within_3pct": float(worst <= 0.03)}


def _tail_alpha(cfg):
    # finest lattice used for frequency checks: inner radii of 32+ cells
    g = GridSpec(2, cfg.half_width, 4 * cfg.resolution)
    quad = QuadratureSpec.gauss(4, 0, 0)
    out = {}
    for name in BANK_NAMES:
        om = get_kernel(name)
        out[name] = -max(tail_slope(decay_profile(om, 0, t, g)).slope for t in quad.nodes)
    return out


def _mollifier_c(cfg):
    g = GridSpec(2, cfg.half_width, 2 * cfg.resolution)
    return {f"l{l}": mollifier_symbol_check(l, 0.5, g).max_ratio for l in range(1, 6)}


def _theta(cfg):
    g = GridSpec(2, cfg.half_width, 2 * cfg.resolution)
    bank = scene_bank(g, ["gaussian", "disk"], cfg.seed)
    rec = approximation_decay(get_kernel("cos"), bank, [1, 2, 3], QuadratureSpec.gauss(4, 1, 1))
    return {"theta_scalar": rec.theta_scalar, "theta_vector": rec.theta_vector,
            "agreement": rec.agreement, "monotone": float(rec.monotone)}


def _a2_power(cfg):
    g = GridSpec(2, 4.0, 2 * cfg.resolution)
    out = {"a1_L4": ap_constant(power_weight(1.0, g), 2.0)}
    gd = cfg.grid
    for a in (0.25, 0.5, 1.0, 1.5):
        out[f"a{a:g}"] = ap_constant(power_weight(a, gd), 2.0)
    return out


def _ainf_sweep(cfg):
    g = cfg.grid
    out, worst = {}, 0.0
    for a in (0.25, 0.5, 1.0):
        w = power_weight(a, g)
        ai = ainf_constant(w)
        out[f"a{a:g}"] = ai
        worst = max(worst, ai / ap_constant(w, 2.0))
    out["ainf_over_a2"] = worst
    return out


def _reverse_holder(cfg):
    g = cfg.grid
    out = {}
    for a in (0.25, 0.5, 1.0, 1.5):
        rec = reverse_holder_check(power_weight(a, g), 2.0, 0.25)
        out[f"a{a:g}_ratio"] = rec.lhs / rec.rhs
        out[f"a{a:g}_holds"] = float(rec.holds)
    return out


def _tail_sums(cfg):
    out = {"S_1_1": tail_sum_check(1.0, 1.0).S}
    for rho in (0.25, 0.5, 1.0):
        out[f"sup_rho{rho:g}"] = tail_sum_sup(rho)
    return out


def _domination(cfg):
    out = {}
    for N in (cfg.resolution, 2 * cfg.resolution):
        g = GridSpec(2, cfg.half_width, N)
        for scene in ("disk", "gaussian"):
            f = get_scene(scene, g, cfg.seed)
            for l in (1, 2):
                quad = QuadratureSpec.gauss(4, 1, 1)
                out[f"{scene}_N{N}_l{l}"] = sparse_domination_check(get_kernel("cos"), f, l, quad=quad).constant
    return out


def _weak11(cfg):
    g = cfg.grid
    f = get_scene("spike", g, cfg.seed)
    quad = QuadratureSpec.gauss(4, 1, 1)
    return {f"l{l}": weak11_check(get_kernel("cos"), f, l, quad=quad).max_ratio for l in (1, 2)}


def _equivalence(cfg):
    g = cfg.grid
    om = get_kernel("cos")
    out = {}
    for name in ("disk", "gaussian", "two-bump", "annulus-bump"):
        f = get_scene(name, g, cfg.seed)
        out[name] = lp_norm(marcinkiewicz_dyadic(om, f).field, 2) / lp_norm(marcinkiewicz(om, f).field, 2)
    return out


def _hl_norm(cfg):
    g = cfg.grid
    one = power_weight(0.0, g)
    names = [f"random-{k}" for k in range(20)] + ["disk", "gaussian", "focused-2", "focused-4"]
    vals = [operator_norm_estimate(hl_maximal, one, 2.0, names, seed=cfg.seed + s) for s in range(3)]
    return {"seed0": vals[0], "spread": (max(vals) - min(vals)) / min(vals)}


def _theorem12(cfg):
    rep = theorem12_sweep(ExperimentConfig(resolution=cfg.resolution, half_width=cfg.half_width, seed=cfg.seed))
    return {"beta": rep.fit.beta, "r2": rep.fit.r2, "passed": float(rep.passed)}


def _buckley(cfg):
    out = {}
    for p in (2.0, 4.0):
        rep = buckley_sweep(ExperimentConfig(p=p, resolution=cfg.resolution, half_width=cfg.half_width,
                                             seed=cfg.seed))
        out[f"beta_p{p:g}"] = rep.fit.beta
        out[f"passed_p{p:g}"] = float(rep.passed)
    return out


CHECKS = (
    Check("lq_norms", "sphere", _lq_norms, 1e-9),
    Check("mass_law", "kernels", _mass_law, 1e-6),
    Check("tail_alpha", "fourier", _tail_alpha, 0.05),
    Check("mollifier_symbol", "fourier", _mollifier_c, 1e-3),
    Check("approximation_theta", "fourier", _theta, 0.05, 1e-9),
    Check("a2_power", "weights", _a2_power, 1e-3),
    Check("ainf_sweep", "weights", _ainf_sweep, 1e-3),
    Check("reverse_holder", "weights", _reverse_holder, 1e-3),
    Check("tail_sums", "weights", _tail_sums, 1e-9),
    Check("sparse_domination", "sparse", _domination, 1e-3),
    Check("weak11", "sparse", _weak11, 1e-3),
    Check("equivalence", "operators", _equivalence, 1e-3),
    Check("hl_norm", "operators", _hl_norm, 1e-3, 1e-6),
    Check("theorem12", "sweeps", _theorem12, 1e-3),
    Check("buckley", "sweeps", _buckley, 1e-3),
)
SUITES = tuple(dict.fromkeys(c.suite for c in CHECKS))


def select_checks(filter_text: str | None) -> list[Check]:
    """Comma-separated suite or check names; None selects all."""
    if not filter_text:
        return list(CHECKS)
    keys = {k.strip() for k in filter_text.split(",") if k.strip()}
    known = set(SUITES) | {c.name for c in CHECKS}
    unknown = keys - known
    if unknown:
        raise KeyError(f"unknown suite or check: {', '.join(sorted(unknown))}")
    return [c for c in CHECKS if c.suite in keys or c.name in keys]


def compare(values: dict, golden: dict, rtol: float, atol: float) -> list[str]:
    msgs = []
    for k in sorted(set(values) | set(golden)):
        if k not in golden:
            msgs.append(f"{k}: no golden value")
        elif k not in values:
            msgs.append(f"{k}: not produced")
        elif not abs(values[k] - golden[k]) <= atol + rtol * abs(golden[k]):
            msgs.append(f"{k}: {values[k]:.10g} vs golden {golden[k]:.10g} (rtol {rtol:g})")
    return msgs


def load_goldens(path=None) -> dict | None:
    path = Path(path) if path else GOLDENS_PATH
    if not path.exists():
        return None
    return json.loads(path.read_text())


def generate_goldens(cfg: RegressionConfig | None = None, path=None, filter_text=None) -> dict:
    """Run the checks and write their values as the new golden store (merging by check name)."""
    cfg = cfg or RegressionConfig()
    path = Path(path) if path else GOLDENS_PATH
    old = load_goldens(path) or {}
    values = dict(old.get("values", {})) if old.get("config") == cfg.to_dict() else {}
    for c in select_checks(filter_text):
        values[c.name] = _clean(c.run(cfg))
    data = {"config": cfg.to_dict(), "values": values}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


def _junit(results: list[dict]) -> ET.ElementTree:
    root = ET.Element("testsuites", name="mzlab-regression")
    for suite in dict.fromkeys(r["suite"] for r in results):
        rs = [r for r in results if r["suite"] == suite]
        el = ET.SubElement(root, "testsuite", name=suite, tests=str(len(rs)),
                           failures=str(sum(r["status"] == "fail" for r in rs)))
        for r in rs:
            tc = ET.SubElement(el, "testcase", classname=f"mzlab.{suite}", name=r["name"])
            if r["status"] != "pass":
                ET.SubElement(tc, "failure", message="; ".join(r["messages"]))
    return ET.ElementTree(root)


def full_regression(cfg: RegressionConfig | None = None, filter_text: str | None = None, goldens=None,
                    out_dir=None, generate: bool = False, log=print) -> int:
    """Run the golden checks; write ``regression.json`` and ``regression.xml`` to ``out_dir``."""
    cfg = cfg or RegressionConfig()
    try:
        checks = select_checks(filter_text)
    except KeyError as exc:
        log(f"error: {exc.args[0]}")
        return EXIT_USAGE
    if generate:
        generate_goldens(cfg, goldens, filter_text)
        log(f"goldens written to {Path(goldens) if goldens else GOLDENS_PATH}")
        return EXIT_PASS
    store = load_goldens(goldens)
    hint = "generate them with `mzlab regress --generate`"
    if store is None:
        log(f"error: golden store not found; {hint}")
        return EXIT_MISSING
    if store.get("config") != cfg.to_dict():
        log(f"error: goldens were generated for config {store.get('config')}; {hint}")
        return EXIT_MISSING
    missing = [c.name for c in checks if c.name not in store["values"]]
    if missing:
        log(f"error: no goldens for {', '.join(missing)}; {hint}")
        return EXIT_MISSING
    results, timing = [], {}
    for c in checks:
        t0 = time.perf_counter()
        values = _clean(c.run(cfg))
        timing[c.name] = time.perf_counter() - t0
        msgs = compare(values, store["values"][c.name], c.rtol, c.atol)
        status = "fail" if msgs else "pass"
        results.append({"name": c.name, "suite": c.suite, "status": status, "values": values,
                        "golden": store["values"][c.name], "messages": msgs})
        log(f"{status.upper():4s} {c.suite}/{c.name}" + (f": {msgs[0]}" if msgs else ""))
    summary = {"config": cfg.to_dict(), "filter": filter_text, "checks": results,
               "passed": sum(r["status"] == "pass" for r in results),
               "failed": sum(r["status"] == "fail" for r in results)}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "regression.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        _junit(results).write(out / "regression.xml", encoding="utf-8", xml_declaration=True)
        (out / "regression.timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return EXIT_FAIL if summary["failed"] else EXIT_PASS
