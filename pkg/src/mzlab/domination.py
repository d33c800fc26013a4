"""Numerical checks of the sparse bound, pointwise sparse domination and weak-type estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import SparseFamily, build_grids, build_sparse_family, sparse_operator_Lr, sparse_operator_r
from .grid import QuadratureSpec, SampledField, lp_norm, weighted_lp_norm
from .operators import marcinkiewicz_mollified
from .sphere import AngularKernel
from .weights import ainf_constant, ap_constant, as_weight


@dataclass(frozen=True)
class Lemma21Record:
    lhs: float
    rhs: float
    ratio: float
    holds: bool


def lemma21_bound_check(S: SparseFamily, f: SampledField, w, p: float, r: float,
                        bank=None, slack: float = 4.0) -> Lemma21Record:
    """||A_S^r f||_{L^p(w)} / ||f||_{L^p(w)} against [w]_{A_p}^(1/p) ([w]_inf^(1/r-1/p) + [sigma]_inf^(1/p))."""
    if not 0 < r < p:
        raise ValueError(f"need 0 < r < p, got r={r}, p={p}")
    w = as_weight(w)
    num = weighted_lp_norm(sparse_operator_r(S, abs(f), r), w, p)
    den = weighted_lp_norm(f, w, p)
    if den == 0:
        raise ValueError("f has zero weighted norm")
    lhs = num / den
    rhs = ap_constant(w, p, bank) ** (1.0 / p) * (
        ainf_constant(w, bank) ** (1.0 / r - 1.0 / p) + ainf_constant(w.dual(p), bank) ** (1.0 / p))
    return Lemma21Record(lhs, rhs, lhs / rhs, bool(lhs <= slack * rhs))


def conjugate(q: float) -> float:
    if np.isinf(q):
        return 1.0
    if not q > 1:
        raise ValueError(f"exponent must exceed 1, got {q}")
    return q / (q - 1.0)


@dataclass(frozen=True)
class DominationRecord:
    constant: float
    argmax: tuple[int, ...]
    flagged: int
    family_sizes: tuple[int, ...]
    l: int
    q_prime: float
    extra: dict = field(default_factory=dict)


def sparse_families(f: SampledField, eta: float = 0.5, r: float = 1.0) -> list[SparseFamily]:
    """One stopping-time family per shifted grid, built from |f|^r."""
    return [build_sparse_family(f, spec, eta, r) for spec in build_grids(f.grid)]


def sparse_domination_check(omega: AngularKernel, f: SampledField, l: int, eta: float = 0.5,
                            quad: QuadratureSpec | None = None, q: float | None = None,
                            floor: float = 1e-12) -> DominationRecord:
    """sup_x M^l f(x) / (l sum_j A_{S_j,q'} f(x)) over cells where the denominator exceeds ``floor``."""
    q = omega.q_class if q is None else q
    qp = conjugate(q)
    if not np.any(f.values):
        return DominationRecord(0.0, (), 0, (), l, qp)
    num = marcinkiewicz_mollified(omega, f, l, quad).values
    fams = sparse_families(f, eta, qp)
    den = np.zeros(f.grid.shape)
    for S in fams:
        den += sparse_operator_Lr(S, f, qp).values
    den *= l
    ok = den > floor
    flagged = int(np.sum(~ok & (num > floor * max(num.max(), 1e-300))))
    ratio = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    k = np.unravel_index(np.argmax(ratio), ratio.shape)
    return DominationRecord(float(ratio[k]), tuple(int(i) for i in k), flagged,
                            tuple(len(S) for S in fams), l, qp)


@dataclass(frozen=True)
class Weak11Record:
    lambdas: tuple[float, ...]
    measures: tuple[float, ...]
    ratios: tuple[float, ...]
    max_ratio: float
    ratio_to_l: float


def default_lambda_grid(values: np.ndarray, count: int = 40) -> np.ndarray:
    top = float(np.max(values))
    if top <= 0:
        return np.geomspace(1e-6, 1.0, count)
    return np.geomspace(top * 1e-4, top, count, endpoint=False)


def weak11_check(omega: AngularKernel, f: SampledField, l: int, lambda_grid=None,
                 quad: QuadratureSpec | None = None) -> Weak11Record:
    """max over lambda of lambda |{M^l f > lambda}| / ||f||_1, and that max divided by l."""
    M = marcinkiewicz_mollified(omega, f, l, quad).values
    lams = default_lambda_grid(M) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if np.any(lams <= 0):
        raise ValueError("lambda values must be positive")
    n1 = lp_norm(f, 1)
    vol = f.grid.cell_volume
    meas = [float(np.count_nonzero(M > lam) * vol) for lam in lams]
    ratios = [lam * m / n1 if n1 > 0 else 0.0 for lam, m in zip(lams, meas)]
    mx = max(ratios) if ratios else 0.0
    return Weak11Record(tuple(float(x) for x in lams), tuple(meas), tuple(ratios), mx, mx / l)


def weak_type_ratio(values: np.ndarray, f: SampledField, r: float, lambda_grid=None) -> float:
    """max over lambda of lambda |{values > lambda}|^(1/r) / ||f||_r."""
    lams = default_lambda_grid(values) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    nr = lp_norm(f, r)
    if nr == 0:
        return 0.0
    vol = f.grid.cell_volume
    return max(float(lam * (np.count_nonzero(values > lam) * vol) ** (1.0 / r) / nr) for lam in lams)
