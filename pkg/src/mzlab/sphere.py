"""Angular kernels on the unit circle and their degree-zero extension."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class AngularKernel:
    """Samples of a function on S^1 at angles 2*pi*m/M.

    ``q_class`` is the declared integrability class (``np.inf`` for bounded
    kernels).
    """

    samples: np.ndarray = field(repr=False)
    q_class: float = np.inf
    name: str = "custom"

    def __post_init__(self):
        s = np.array(self.samples, dtype=float, copy=True).ravel()
        if s.size < 64 or s.size % 2:
            raise ValueError(f"need an even number M >= 64 of samples, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise ValueError("angular samples must be finite")
        if not self.q_class > 1:
            raise ValueError(f"q_class must be in (1, inf], got {self.q_class}")
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, fn, M: int = 1024, q_class: float = np.inf, name: str = "custom"):
        return cls(fn(angles(M)), q_class, name)

    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def quad_weight(self) -> float:
        return TWO_PI / self.M

    @property
    def angles(self) -> np.ndarray:
        return angles(self.M)

    @cached_property
    def key(self) -> tuple[str, str]:
        """Hashable identity used by kernel caches."""
        digest = hashlib.sha1(self.samples.tobytes()).hexdigest()[:16]
        return (self.name, digest)

    def mean(self) -> float:
        return float(self.samples.sum() * self.quad_weight)

    def l1_norm(self) -> float:
        return _sphere_norm(self, 1.0)

    def __call__(self, theta) -> np.ndarray:
        """Periodic linear interpolation at angles ``theta``."""
        u = np.mod(np.asarray(theta, dtype=float), TWO_PI) / self.quad_weight
        k0 = np.floor(u).astype(np.intp)
        frac = u - k0
        k0 %= self.M
        k1 = (k0 + 1) % self.M
        return (1.0 - frac) * self.samples[k0] + frac * self.samples[k1]

    def _primitive(self, theta: np.ndarray) -> np.ndarray:
        """Exact integral of the linear interpolant from 0 to ``theta`` (any real theta)."""
        s, dth = self.samples, self.quad_weight
        seg = 0.5 * (s + np.roll(s, -1)) * dth
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        total = cum[-1]
        turns = np.floor(theta / TWO_PI)
        u = (theta - turns * TWO_PI) / dth
        k = np.minimum(np.floor(u).astype(np.intp), self.M - 1)
        frac = u - k
        s0, s1 = s[k], s[(k + 1) % self.M]
        return turns * total + cum[k] + dth * (s0 * frac + 0.5 * (s1 - s0) * frac ** 2)

    def averaged(self, theta, width) -> np.ndarray:
        """Mean of Omega over [theta - width/2, theta + width/2]."""
        theta = np.asarray(theta, dtype=float)
        width = np.broadcast_to(np.asarray(width, dtype=float), theta.shape)
        out = self(theta)
        wide = width > 1e-9
        if wide.any():
            th, w = theta[wide], width[wide]
            out[wide] = (self._primitive(th + 0.5 * w) - self._primitive(th - 0.5 * w)) / w
        return out

    def scaled(self, c: float) -> "AngularKernel":
        return AngularKernel(self.samples * c, self.q_class, self.name)

    def normalized(self, q: float | None = None) -> "AngularKernel":
        """Rescale to unit L^q(S^1) norm (``q`` defaults to ``q_class``)."""
        q = self.q_class if q is None else q
        nrm = lq_sphere_norm(self, q)
        if nrm == 0:
            raise ValueError("cannot normalize the zero kernel")
        return self.scaled(1.0 / nrm)


def angles(M: int) -> np.ndarray:
    return TWO_PI * np.arange(M) / M


def mean_zero_project(raw: AngularKernel) -> AngularKernel:
    s = raw.samples
    m = s.mean()
    # a mean already at round-off level is left alone so projection is idempotent bitwise
    if abs(m) <= 64 * np.finfo(float).eps * max(np.abs(s).max(), 1e-300):
        return AngularKernel(s, raw.q_class, raw.name)
    return AngularKernel(s - m, raw.q_class, raw.name)


def _sphere_norm(omega: AngularKernel, q: float) -> float:
    a = np.abs(omega.samples)
    if np.isinf(q):
        return float(a.max())
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * (np.sum((a / m) ** q) * omega.quad_weight) ** (1.0 / q))


def lq_sphere_norm(omega: AngularKernel, q: float) -> float:
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    return _sphere_norm(omega, q)


def evaluate_homogeneous(omega: AngularKernel, x) -> np.ndarray:
    """Omega(x / |x|) for points ``x`` of shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("reference build evaluates planar points only")
    if np.any(np.hypot(x[..., 0], x[..., 1]) == 0):
        raise ValueError("Omega is undefined at the origin")
    return omega(np.arctan2(x[..., 1], x[..., 0]))


def _singular(q: float, M: int) -> np.ndarray:
    th = angles(M)
    d = np.maximum(np.abs(th - np.pi), TWO_PI / M)
    return d ** (-1.0 / (2.0 * q))


BANK_NAMES = ("cos", "sin3", "step", "sing-q2", "sing-q4")


def get_kernel(name: str, M: int = 1024) -> AngularKernel:
    """One named member of the standard bank (mean-zero projected)."""
    th = angles(M)
    if name == "cos":
        raw = AngularKernel(np.cos(th), np.inf, name)
    elif name == "sin3":
        raw = AngularKernel(np.sin(3 * th), np.inf, name)
    elif name == "step":
        raw = AngularKernel(np.sign(np.cos(th)), np.inf, name)
    elif name in ("sing-q2", "sing-q4"):
        q = float(name[-1])
        raw = AngularKernel(_singular(q, M), q, name)
    else:
        raise KeyError(f"unknown kernel {name!r}; choose from {BANK_NAMES}")
    return mean_zero_project(raw)


def kernel_bank(M: int = 1024) -> list[AngularKernel]:
    return [get_kernel(name, M) for name in BANK_NAMES]


def origin_cell_integral(omega: AngularKernel, h: float, power: int = 1) -> float:
    """Integral of Omega(y')/|y|^power over the square cell [-h/2, h/2]^2.

    Only ``power=1`` is integrable; the polar form is
    ``int Omega(theta) rho(theta) d theta`` with ``rho`` the cell's radial extent.
    """
    if power != 1:
        raise ValueError("only |y|^-1 is integrable over the origin cell in 2D")
    th = omega.angles
    rho = 0.5 * h / np.maximum(np.abs(np.cos(th)), np.abs(np.sin(th)))
    return float(np.sum(omega.samples * rho) * omega.quad_weight)
