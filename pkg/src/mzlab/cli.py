"""Command-line interface: ``mzlab <command> [options]``.

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 missing artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import io
from .domination import sparse_domination_check, sparse_families, weak11_check
from .experiments import SWEEPS, ExperimentConfig, _clean, parse_range
from .fourier import approximation_decay, decay_profile
from .grid import GridSpec, QuadratureSpec
from .kernels import build_k_jt, mollified_spectrum_admissible, smooth_kernel
from .operators import hl_maximal, marcinkiewicz, marcinkiewicz_dyadic, marcinkiewicz_mollified, rough_singular_integral
from .regression import full_regression, RegressionConfig, EXIT_FAIL, EXIT_MISSING, EXIT_PASS, EXIT_USAGE
from .scenes import get_scene, scene_bank
from .sphere import BANK_NAMES, get_kernel
from .weights import composite_constants, power_weight, reverse_holder_check

GLOBAL_DEFAULTS = {"n_grid": 256, "box": 8.0, "t_nodes": 4, "seed": 0, "threads": 1, "out": None}


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Plain key=value lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{k}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _ints(text: str) -> list[int]:
    return [int(round(v)) for v in parse_range(text)]


def _omega(name: str):
    if name.endswith(".csv"):
        return io.kernel_from_csv(name, name=Path(name).stem)
    if name not in BANK_NAMES:
        raise UsageError(f"unknown kernel {name!r}; choose from {', '.join(BANK_NAMES)}")
    return get_kernel(name)


def _grid(args) -> GridSpec:
    return GridSpec(2, float(args.box), int(args.n_grid))


def _write_json(path, obj) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- commands ---------------------------------------------------------------

def cmd_apply(args) -> int:
    g = _grid(args)
    om = _omega(args.omega)
    try:
        f = get_scene(args.f, g, args.seed)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    op = args.op
    if op == "marc":
        res = marcinkiewicz(om, f, QuadratureSpec.for_grid(g, args.t_nodes)).field
    elif op == "marc-dyadic":
        res = marcinkiewicz_dyadic(om, f, QuadratureSpec.for_grid(g, args.t_nodes)).field
    elif op == "marc-l":
        res = marcinkiewicz_mollified(om, f, args.l, QuadratureSpec.for_grid(g, args.t_nodes, args.l)).field
    elif op == "tsing":
        res = rough_singular_integral(om, f, 4 * g.spacing, g.half_width / 2)
    else:
        res = hl_maximal(f)
    out = args.out or f"{op}-{om.name}-{args.f}.mzf"
    io.write_field(out, res)
    print(f"wrote {out}")
    return EXIT_PASS


def cmd_kernels(args) -> int:
    g = _grid(args).with_lattice("node")
    om = _omega(args.omega)
    quad = QuadratureSpec.gauss(args.t_nodes, 0, 0)
    dump = Path(args.dump or args.out or "kernels")
    dump.mkdir(parents=True, exist_ok=True)
    manifest = []
    for j in _ints(args.j):
        for t in quad.nodes:
            entry = {"j": j, "t": float(t), "l": args.l}
            try:
                K = build_k_jt(om, j, t, g)
                fld = K.field
                if args.l is not None:
                    if not mollified_spectrum_admissible(j, args.l, g):
                        raise ValueError(f"mollifier at scale j-l={j - args.l} unresolvable")
                    fld = smooth_kernel(K, args.l)
            except ValueError as exc:
                entry["skipped"] = str(exc)
                manifest.append(entry)
                print(f"skip j={j} t={t:.4f}: {exc}", file=sys.stderr)
                continue
            fname = f"k_{om.name}_j{j}_t{t:.6f}" + (f"_l{args.l}" if args.l is not None else "") + ".mzf"
            io.write_field(dump / fname, fld)
            r = g.radius()
            nz = np.abs(fld.values) > 1e-10 * np.abs(fld.values).max()
            entry.update(file=fname, l1_mass=float(np.abs(fld.values).sum() * g.cell_volume),
                         support_inner=float(r[nz].min()), support_outer=float(r[nz].max()))
            manifest.append(entry)
    _write_json(dump / "manifest.json", {"omega": om.name, "grid": _grid_dict(g), "kernels": manifest})
    print(f"wrote {sum('file' in e for e in manifest)} kernels to {dump}")
    return EXIT_PASS


def _grid_dict(g: GridSpec) -> dict:
    return {"dim": g.dim, "N": g.resolution, "L": g.half_width, "lattice": g.lattice}


def cmd_decay(args) -> int:
    g = _grid(args)
    om = _omega(args.omega)
    quad = QuadratureSpec.gauss(args.t_nodes, 0, 0)
    rows = []
    for j in _ints(args.j):
        for t in quad.nodes:
            try:
                prof = decay_profile(om, j, t, g, args.shells)
            except ValueError as exc:
                print(f"skip j={j} t={t:.4f}: {exc}", file=sys.stderr)
                continue
            rows += [{"omega": om.name, "j": j, "t": repr(float(t)), "shell_radius": repr(r), "magnitude": repr(m)}
                     for r, m in prof.rows()]
    if not rows:
        raise UsageError("no admissible scales in the requested range")
    io.write_rows(args.csv or args.out or "decay.csv", ["omega", "j", "t", "shell_radius", "magnitude"], rows)
    return EXIT_PASS


def cmd_approx(args) -> int:
    g = _grid(args)
    om = _omega(args.omega)
    ls = _ints(args.l)
    names = [s.strip() for s in args.scenes.split(",")]
    quad = QuadratureSpec.for_grid(g, args.t_nodes, max(ls))
    if quad.j_min > quad.j_max:
        raise UsageError(f"l={max(ls)} leaves no admissible scale on this grid")
    rec = approximation_decay(om, scene_bank(g, names, args.seed), ls, quad)
    rows = [{"omega": om.name, "scene": s, "l": l, "scalar_error": repr(a), "vector_space": repr(b),
             "vector_freq": repr(c)}
            for s in rec.scenes
            for l, a, b, c in zip(ls, rec.scalar[s], rec.vector_space[s], rec.vector_freq[s])]
    io.write_rows(args.csv or args.out or "approx.csv",
                  ["omega", "scene", "l", "scalar_error", "vector_space", "vector_freq"], rows)
    print(f"theta_scalar={rec.theta_scalar:.4f} theta_vector={rec.theta_vector:.4f} "
          f"agreement={rec.agreement:.2e} monotone={rec.monotone}")
    ok = rec.monotone and rec.theta_scalar > 0.2 and rec.agreement <= 0.05
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_weights(args) -> int:
    if args.family != "power":
        raise UsageError(f"unknown weight family {args.family!r}")
    g = _grid(args)
    rows, ok = [], True
    for a in parse_range(args.a):
        try:
            w = power_weight(a, g, args.p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cc = composite_constants(w, args.p, args.p)
        rh = reverse_holder_check(w, args.p, args.cn)
        ok &= rh.holds
        rows.append({"a": repr(a), "Ap": repr(cc.ap), "Ainf": repr(cc.ainf), "Ainf_dual": repr(cc.ainf_dual),
                     "curly": repr(cc.curly), "paren": repr(cc.paren), "eps": repr(rh.eps),
                     "rh_holds": rh.holds})
    io.write_rows(args.report or args.out or "weights.csv",
                  ["a", "Ap", "Ainf", "Ainf_dual", "curly", "paren", "eps", "rh_holds"], rows)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_sparse_check(args) -> int:
    g = _grid(args)
    om = _omega(args.omega)
    f = get_scene(args.scene, g, args.seed)
    quad = QuadratureSpec.for_grid(g, args.t_nodes, args.l)
    rec = sparse_domination_check(om, f, args.l, args.eta, quad)
    fams = sparse_families(f, args.eta, rec.q_prime)
    try:
        for S in fams:
            S.certify()
        certified = True
    except AssertionError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        certified = False
    _write_json(args.report or args.out, {
        "omega": om.name, "scene": args.scene, "l": args.l, "eta": args.eta, "q_prime": rec.q_prime,
        "constant": rec.constant, "argmax": list(rec.argmax), "flagged": rec.flagged,
        "certified": certified, "families": [json.loads(S.to_json()) for S in fams]})
    ok = certified and np.isfinite(rec.constant)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_weak11(args) -> int:
    g = _grid(args)
    om = _omega(args.omega)
    f = get_scene(args.scene, g, args.seed)
    out = []
    for l in _ints(args.l):
        quad = QuadratureSpec.for_grid(g, args.t_nodes, l)
        if quad.j_min > quad.j_max:
            raise UsageError(f"l={l} leaves no admissible scale on this grid")
        rec = weak11_check(om, f, l, quad=quad)
        out.append({"l": l, "max_ratio": rec.max_ratio, "ratio_to_l": rec.ratio_to_l,
                    "lambdas": rec.lambdas, "ratios": rec.ratios})
    c_hat = max(r["ratio_to_l"] for r in out)
    _write_json(args.report or args.out, {"omega": om.name, "scene": args.scene, "C_hat": c_hat, "rows": out})
    return EXIT_PASS


def cmd_sweep(args) -> int:
    items = dict(args.config_items)
    for key in ("omega", "p", "q", "op"):
        v = getattr(args, key, None)
        if v is not None:
            items[key] = str(v)
    if args.a is not None:
        items["a_grid"] = args.a
    if args.scenes is not None:
        items["scenes"] = args.scenes
    items.update(resolution=str(args.n_grid), half_width=str(args.box), t_nodes=str(args.t_nodes),
                 seed=str(args.seed), threads=str(args.threads))
    items = {k: v for k, v in items.items() if k in ExperimentConfig.__dataclass_fields__}
    try:
        cfg = ExperimentConfig.from_mapping(items)
        rep = SWEEPS[args.kind](cfg)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0])) from None
    out = Path(args.report or args.out or f"{args.kind}.json")
    rep.to_json(out)
    rep.to_csv(out.with_suffix(".csv"))
    fit = rep.fit
    if fit is not None:
        print(f"beta={fit.beta:.4f} [{fit.ci_low:.4f}, {fit.ci_high:.4f}] R2={fit.r2:.3f}"
              + (" (flagged: R2 < 0.8)" if fit.flagged else ""))
    print("passed" if rep.passed else f"failed: {rep.passes}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_regress(args) -> int:
    cfg = RegressionConfig(int(args.n_grid), float(args.box), int(args.seed))
    return full_regression(cfg, args.filter, args.goldens, args.out, args.generate)


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flags from clobbering ones given before it
    glob = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    glob.add_argument("--n-grid", type=int, help="lattice points per axis (power of two, default 256)")
    glob.add_argument("--box", type=float, help="half width L of the box [-L, L)^2 (default 8)")
    glob.add_argument("--t-nodes", type=int, help="Gauss-Legendre nodes on [1, 2] (default 4)")
    glob.add_argument("--seed", type=int, help="seed for random scenes and cubes (default 0)")
    glob.add_argument("--threads", type=int, help="FFT and sweep worker threads (default 1)")
    glob.add_argument("--out", help="output file or directory")
    glob.add_argument("--config", help="key=value file; flags override it")

    p = argparse.ArgumentParser(prog="mzlab", description=__doc__.splitlines()[0], parents=[glob])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("apply", parents=[glob], help="apply an operator to a built-in scene")
    s.add_argument("--op", choices=["marc", "marc-dyadic", "marc-l", "tsing", "hlmax"], default="marc")
    s.add_argument("--omega", default="cos")
    s.add_argument("--f", default="disk", help="scene name")
    s.add_argument("--l", type=int, default=1)
    s.set_defaults(func=cmd_apply)

    s = sub.add_parser("kernels", parents=[glob], help="dump truncated kernels as MZF1 files")
    s.add_argument("--omega", default="cos")
    s.add_argument("--j", default="0..1", help="scale range, e.g. 0..6")
    s.add_argument("--l", type=int)
    s.add_argument("--dump", help="output directory")
    s.set_defaults(func=cmd_kernels)

    s = sub.add_parser("decay", parents=[glob], help="Fourier decay profiles to CSV")
    s.add_argument("--omega", default="cos")
    s.add_argument("--j", default="0..1")
    s.add_argument("--shells", type=int, default=32)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_decay)

    s = sub.add_parser("approx", parents=[glob], help="approximation errors in l to CSV")
    s.add_argument("--omega", default="cos")
    s.add_argument("--l", default="1..2")
    s.add_argument("--scenes", default="gaussian,disk,two-bump")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_approx)

    s = sub.add_parser("weights", parents=[glob], help="weight constants over a power family")
    s.add_argument("--family", default="power")
    s.add_argument("--a", default="0:1.5:0.125")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--cn", type=float, default=0.25, help="reverse-Holder constant c_n")
    s.add_argument("--report")
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("sparse-check", parents=[glob], help="pointwise sparse domination on one scene")
    s.add_argument("--omega", default="cos")
    s.add_argument("--scene", default="disk")
    s.add_argument("--l", type=int, default=1)
    s.add_argument("--eta", type=float, default=0.5)
    s.add_argument("--report")
    s.set_defaults(func=cmd_sparse_check)

    s = sub.add_parser("weak11", parents=[glob], help="weak (1,1) level-set ratios")
    s.add_argument("--omega", default="cos")
    s.add_argument("--scene", default="spike")
    s.add_argument("--l", default="1,2")
    s.add_argument("--report")
    s.set_defaults(func=cmd_weak11)

    s = sub.add_parser("sweep", parents=[glob], help="weighted norm sweep over power weights")
    s.add_argument("--kind", choices=sorted(SWEEPS), default="theorem12")
    s.add_argument("--omega")
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--a", help="a-grid, e.g. 0:1.8:0.15")
    s.add_argument("--scenes", help="comma-separated scene names")
    s.add_argument("--report")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("regress", parents=[glob], help="golden-value regression suite")
    s.add_argument("--filter", help="comma-separated suites or checks")
    s.add_argument("--goldens", help="golden store (default: packaged)")
    s.add_argument("--generate", action="store_true", help="write goldens from a fresh run")
    s.set_defaults(func=cmd_regress)
    return p


def _merge_config(args) -> None:
    args.config = getattr(args, "config", None)
    items = read_config(args.config) if args.config else {}
    args.config_items = items
    for key, default in GLOBAL_DEFAULTS.items():
        if getattr(args, key, None) is None:
            v = items.get(key, default)
            if v is not None and key != "out":
                v = type(default)(v)
            setattr(args, key, v)
    # command options left unset also fall back to the config file
    for key, val in items.items():
        if key in GLOBAL_DEFAULTS or not hasattr(args, key):
            continue
        cur = getattr(args, key)
        if cur is None:
            setattr(args, key, val)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        cfg_path = getattr(args, "config", None)
        if cfg_path and not Path(cfg_path).exists():
            print(f"error: config file {cfg_path} not found", file=sys.stderr)
            return EXIT_MISSING
        _merge_config(args)
        with sfft.set_workers(max(1, args.threads)):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING


if __name__ == "__main__":
    sys.exit(main())
