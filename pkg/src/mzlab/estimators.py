"""scikit-learn style wrappers: sampled fields in, operator outputs out.

``X`` is one field of shape (N, N) or a stack of shape (n_samples, N, N),
sampled at the cell centers of the box [-box, box)^2.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .grid import GridSpec, QuadratureSpec, SampledField
from .operators import (hl_maximal, marcinkiewicz, marcinkiewicz_dyadic, marcinkiewicz_mollified,
                        rough_singular_integral)
from .sphere import BANK_NAMES, AngularKernel, get_kernel
from .weights import Weight, composite_constants


def _stack(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise ValueError(f"expected (N, N) or (n_samples, N, N) fields, got shape {X.shape}")
    N = X.shape[1]
    if N < 4 or N & (N - 1):
        raise ValueError(f"field side must be a power of two >= 4, got {N}")
    if not np.all(np.isfinite(X)):
        raise ValueError("fields contain non-finite values")
    return X


def _kernel(omega) -> AngularKernel:
    if isinstance(omega, AngularKernel):
        return omega
    if omega not in BANK_NAMES:
        raise ValueError(f"unknown kernel {omega!r}; choose from {BANK_NAMES}")
    return get_kernel(omega)


class _FieldTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = _stack(X)
        self.grid_ = GridSpec(2, float(self.box), X.shape[1])
        self._setup()
        return self

    def _setup(self):
        pass

    def _apply(self, f: SampledField) -> SampledField:
        raise NotImplementedError

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = _stack(X)
        if X.shape[1] != self.grid_.resolution:
            raise ValueError(f"fitted for N={self.grid_.resolution}, got N={X.shape[1]}")
        return np.stack([self._apply(SampledField(self.grid_, x)).values for x in X])


class MarcinkiewiczIntegral(_FieldTransformer):
    """Marcinkiewicz square function M_Omega.

    variant: "continuous" (t-integral), "dyadic" (K_t^j blocks) or
    "mollified" (K_t^j * phi_{j-l}, needs ``l``).
    """

    def __init__(self, omega="cos", variant="continuous", l=None, t_nodes=4, box=8.0):
        self.omega = omega
        self.variant = variant
        self.l = l
        self.t_nodes = t_nodes
        self.box = box

    def _setup(self):
        if self.variant not in ("continuous", "dyadic", "mollified"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "mollified" and (self.l is None or self.l < 1):
            raise ValueError("the mollified variant needs l >= 1")
        self.omega_ = _kernel(self.omega)
        l = self.l if self.variant == "mollified" else 0
        self.quad_ = QuadratureSpec.for_grid(self.grid_, self.t_nodes, l)
        if self.quad_.j_min > self.quad_.j_max:
            raise ValueError(f"no admissible scale on a {self.grid_.resolution}-point grid")

    def _apply(self, f):
        if self.variant == "continuous":
            return marcinkiewicz(self.omega_, f, self.quad_).field
        if self.variant == "dyadic":
            return marcinkiewicz_dyadic(self.omega_, f, self.quad_).field
        return marcinkiewicz_mollified(self.omega_, f, self.l, self.quad_).field


class SingularIntegral(_FieldTransformer):
    """Truncated rough singular integral; ``eps`` and ``R`` default to 4h and box/2."""

    def __init__(self, omega="cos", eps=None, R=None, box=8.0):
        self.omega = omega
        self.eps = eps
        self.R = R
        self.box = box

    def _setup(self):
        self.omega_ = _kernel(self.omega)
        self.eps_ = 4 * self.grid_.spacing if self.eps is None else float(self.eps)
        self.R_ = self.grid_.half_width / 2 if self.R is None else float(self.R)

    def _apply(self, f):
        return rough_singular_integral(self.omega_, f, self.eps_, self.R_)


class MaximalFunction(_FieldTransformer):
    """Dyadic Hardy-Littlewood maximal function over the shifted grids."""

    def __init__(self, min_side=1, box=8.0):
        self.min_side = min_side
        self.box = box

    def _apply(self, f):
        return hl_maximal(f, self.min_side)


class WeightCharacteristics(TransformerMixin, BaseEstimator):
    """Weight constants per sample: columns (A_p, A_inf, A_inf of the dual, curly, paren)."""

    columns = ("ap", "ainf", "ainf_dual", "curly", "paren")

    def __init__(self, p=2.0, r=None, box=8.0, max_cubes=128):
        self.p = p
        self.r = r
        self.box = box
        self.max_cubes = max_cubes

    def fit(self, X, y=None):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        X = _stack(X)
        self.grid_ = GridSpec(2, float(self.box), X.shape[1])
        self.constants_ = self._constants(X)
        return self

    def _constants(self, X) -> np.ndarray:
        r = self.p if self.r is None else self.r
        rows = []
        for x in X:
            cc = composite_constants(Weight(SampledField(self.grid_, x)), self.p, r, max_cubes=self.max_cubes)
            rows.append([cc.ap, cc.ainf, cc.ainf_dual, cc.curly, cc.paren])
        return np.asarray(rows)

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = _stack(X)
        if X.shape[1] != self.grid_.resolution:
            raise ValueError(f"fitted for N={self.grid_.resolution}, got N={X.shape[1]}")
        return self._constants(X)
