"""Muckenhoupt weight constants estimated as maxima over cube banks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cubes import CubeBank
from .dyadic import build_grids, local_maximal_integral, summed_area
from .grid import GridSpec, SampledField


@dataclass(frozen=True, eq=False)
class Weight:
    """A strictly positive field, optionally tagged ``power`` with exponent ``a``."""

    field: SampledField
    closed_form: str = "custom"
    a: float | None = None

    def __post_init__(self):
        v = self.field.values
        if not np.all(v > 0):
            k = tuple(np.argwhere(~(v > 0))[0])
            raise ValueError(f"weight must be positive; sample {v[k]} at index {k}")
        if self.closed_form == "power" and not self.a > -self.field.grid.dim:
            raise ValueError(f"|x|^a needs a > -n, got a={self.a}")

    @property
    def grid(self) -> GridSpec:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def power(self, s: float) -> "Weight":
        """w^s pointwise."""
        with np.errstate(over="raise", under="ignore"):
            try:
                v = self.values ** s
            except FloatingPointError:
                raise ValueError(f"w^{s} overflows") from None
        if not np.all(np.isfinite(v)) or not np.all(v > 0):
            raise ValueError(f"w^{s} leaves the positive finite range")
        a = None if self.a is None else self.a * s
        return Weight(SampledField(self.grid, v), self.closed_form, a)

    def dual(self, p: float) -> "Weight":
        """w^(1 - p') = w^(-1/(p-1))."""
        return self.power(-1.0 / (p - 1.0))

    def scaled(self, c: float) -> "Weight":
        return Weight(SampledField(self.grid, self.values * c), "custom")


def as_weight(w) -> Weight:
    if isinstance(w, Weight):
        return w
    if isinstance(w, SampledField):
        return Weight(w)
    raise TypeError(f"expected Weight or SampledField, got {type(w).__name__}")


def power_weight(a: float, grid: GridSpec, p_target: float | None = None) -> Weight:
    """|x|^a at cell centers; requires -n < a (< n (p_target - 1) when given)."""
    n = grid.dim
    hi = np.inf if p_target is None else n * (p_target - 1.0)
    if not -n < a < hi:
        raise ValueError(f"a={a} outside the A_p window ({-n}, {hi})")
    if a == 0:
        return Weight(SampledField(grid, np.ones(grid.shape)), "power", 0.0)
    return Weight(SampledField(grid, grid.radius() ** a), "power", float(a))


@lru_cache(maxsize=8)
def default_bank(resolution: int, n_random: int = 10_000, seed: int = 0) -> CubeBank:
    return CubeBank.standard(resolution, n_random, seed)


def _bank_for(w: Weight, bank):
    bank = default_bank(w.grid.resolution) if bank is None else bank
    if len(bank) == 0:
        raise ValueError("empty cube bank")
    if bank.resolution != w.grid.resolution:
        raise ValueError("cube bank built for a different resolution")
    return bank


def cube_averages(values: np.ndarray, bank: CubeBank) -> np.ndarray:
    S = summed_area(values)
    lo, hi = bank.lo, bank.hi
    sums = S[hi[:, 0], hi[:, 1]] - S[lo[:, 0], hi[:, 1]] - S[hi[:, 0], lo[:, 1]] + S[lo[:, 0], lo[:, 1]]
    return sums / bank.side.astype(float) ** 2


def ap_profile(w, p: float, bank: CubeBank | None = None) -> np.ndarray:
    """<w>_Q <w^(-1/(p-1))>_Q^(p-1) for every bank cube."""
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    w = as_weight(w)
    bank = _bank_for(w, bank)
    # normalize by the geometric mean so both averages stay O(1); the product is scale free
    v = w.values / np.exp(np.log(w.values).mean())
    aw = cube_averages(v, bank)
    asg = cube_averages(v ** (-1.0 / (p - 1.0)), bank)
    return aw * asg ** (p - 1.0)


def ap_constant(w, p: float, bank: CubeBank | None = None) -> float:
    """[w]_{A_p} as the max of the A_p product over the bank."""
    return float(ap_profile(w, p, bank).max())


def hruscev_profile(w, bank: CubeBank | None = None) -> np.ndarray:
    """<w>_Q exp(-<log w>_Q) per cube."""
    w = as_weight(w)
    bank = _bank_for(w, bank)
    lw = np.log(w.values)
    lw = lw - lw.mean()
    return cube_averages(np.exp(lw), bank) * np.exp(-cube_averages(lw, bank))


def ainf_constant(w, bank: CubeBank | None = None, max_cubes: int = 128) -> float:
    """Fujii-Wilson [w]_{A_inf} = sup_Q w(Q)^-1 int_Q M(w chi_Q).

    M is the dyadic maximal operator over the 3^n shifted grids. The local
    maximal integral is evaluated on the ``max_cubes`` bank cubes with the
    largest Hruscev ratio <w>_Q exp(-<log w>_Q), which dominates the
    Fujii-Wilson ratio up to dimensional constants.
    """
    w = as_weight(w)
    bank = _bank_for(w, bank)
    prox = hruscev_profile(w, bank)
    order = np.argsort(-prox, kind="stable")[:max_cubes]
    grids = build_grids(w.grid)
    v = w.values / w.values.max()
    best = 0.0
    for i in order:
        (a, b), s = bank.lo[i], int(bank.side[i])
        mass = v[a:a + s, b:b + s].sum()
        best = max(best, local_maximal_integral(v, (int(a), int(b)), s, grids) / mass)
    return float(best)


@dataclass(frozen=True)
class CompositeConstants:
    ap: float
    ainf: float
    ainf_dual: float
    curly: float
    paren: float


def composite_constants(w, p: float, r: float, bank: CubeBank | None = None,
                        max_cubes: int = 128) -> CompositeConstants:
    """{w}_{A_p,r} and (w)_{A_p} with the dual weight w^(1-p') built pointwise."""
    if not (p > 1 and r > 1):
        raise ValueError("p and r must exceed 1")
    w = as_weight(w)
    ap = ap_constant(w, p, bank)
    ainf = ainf_constant(w, bank, max_cubes)
    ainf_d = ainf_constant(w.dual(p), bank, max_cubes)
    rp = r / (r - 1.0)
    curly = ap ** (1.0 / r) * max(ainf ** (1.0 / rp), ainf_d ** (1.0 / r))
    return CompositeConstants(ap, ainf, ainf_d, curly, max(ainf, ainf_d))


@dataclass(frozen=True)
class ReverseHolderRecord:
    eps: float
    lhs: float
    rhs: float
    holds: bool
    ainf_lhs: float
    ainf_rhs: float
    ainf_dual_lhs: float
    ainf_dual_rhs: float


def reverse_holder_check(w, p: float, eps_constant: float, bank: CubeBank | None = None,
                         slack: float = 4.0, max_cubes: int = 128) -> ReverseHolderRecord:
    """Check [w^(1+eps)]_{A_p} <= slack * 4 [w]_{A_p}^(1+eps) with eps = c / (w)_{A_p}."""
    if not eps_constant > 0:
        raise ValueError("eps_constant must be positive")
    w = as_weight(w)
    cc = composite_constants(w, p, p, bank, max_cubes)
    eps = eps_constant / cc.paren
    we = w.power(1.0 + eps)
    lhs = ap_constant(we, p, bank)
    rhs = 4.0 * cc.ap ** (1.0 + eps)
    return ReverseHolderRecord(
        eps, lhs, rhs, bool(lhs <= slack * rhs),
        ainf_constant(we, bank, max_cubes), cc.ainf ** (1.0 + eps),
        ainf_constant(w.dual(p).power(1.0 + eps), bank, max_cubes), cc.ainf_dual ** (1.0 + eps))


@dataclass(frozen=True)
class TailSum:
    eps: float
    rho: float
    S: float
    S_times_eps: float
    terms: int


def tail_sum_check(eps: float, rho: float) -> TailSum:
    """S = sum_{l>=1} 2^l 2^(-rho 2^l eps/(1+eps)), summed until terms fall below 1e-15."""
    if not (eps > 0 and rho > 0):
        raise ValueError("eps and rho must be positive")
    c = rho * eps / (1.0 + eps)
    total, l = 0.0, 1
    while True:
        term = 2.0 ** (l - c * 2.0 ** l)
        total += term
        # past the peak (2^l c ln 2 > 1) the terms decrease super-exponentially
        if term < 1e-15 and 2.0 ** l * c * np.log(2) > 1:
            break
        l += 1
    return TailSum(eps, rho, total, total * eps, l)


def tail_sum_sup(rho: float, eps_grid=None) -> float:
    """sup over eps of S(eps, rho) * eps."""
    eps_grid = np.geomspace(1e-3, 1.0, 61) if eps_grid is None else eps_grid
    return max(tail_sum_check(float(e), rho).S_times_eps for e in eps_grid)
