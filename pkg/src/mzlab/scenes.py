"""Built-in test functions, all supported in the inner half-box [-L/2, L/2)^2."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, SampledField, centered_box_mask

FIXED_SCENES = ("disk", "gaussian", "two-bump", "annulus-bump", "focused-2", "focused-3",
                "focused-4", "focused-5", "spike")


def _bump(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s, dtype=float)
    inside = s < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def smooth_bump(grid: GridSpec, center, radius: float) -> np.ndarray:
    x, y = grid.mesh()
    return _bump(np.hypot(x - center[0], y - center[1]) / radius)


def _inner(grid: GridSpec, vals: np.ndarray) -> SampledField:
    return SampledField(grid, np.where(centered_box_mask(grid, 0.5), vals, 0.0))


def get_scene(name: str, grid: GridSpec, seed: int = 0) -> SampledField:
    """Named scene; ``random-K`` draws the K-th seeded random bump."""
    L, h = grid.half_width, grid.spacing
    x, y = grid.mesh()
    r = np.hypot(x, y)
    if name == "disk":
        return _inner(grid, (r <= min(1.0, L / 4)).astype(float))
    if name == "gaussian":
        return _inner(grid, np.exp(-r * r))
    if name == "two-bump":
        rad = L / 16
        return _inner(grid, smooth_bump(grid, (-L / 8, 0.0), rad) - 0.5 * smooth_bump(grid, (L / 8, L / 16), rad))
    if name == "annulus-bump":
        a, b = L / 16, L / 8
        s = np.clip((r - a) / (b - a), 0, 1)
        return _inner(grid, np.where((r > a) & (r < b), np.sin(np.pi * s) ** 2, 0.0))
    if name.startswith("focused-"):
        m = int(name.split("-")[1])
        # concentrated at scale 2^-m around the origin, never below two cells
        return _inner(grid, smooth_bump(grid, (0.0, 0.0), max(2.0 ** -m, 2 * h)))
    if name == "spike":
        # near-delta: two cells wide, off the origin
        return _inner(grid, smooth_bump(grid, (L / 16 + 0.5 * h, -L / 32 + 0.5 * h), 2 * h))
    if name.startswith("random-"):
        k = int(name.split("-")[1])
        rng = np.random.default_rng([seed, k])
        rad = rng.uniform(4 * h, L / 8)
        c = rng.uniform(-L / 2 + rad, L / 2 - rad, size=2)
        amp = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5)
        return _inner(grid, amp * smooth_bump(grid, c, rad))
    raise KeyError(f"unknown scene {name!r}")


def scene_names(n_random: int = 20, fixed=FIXED_SCENES) -> list[str]:
    return list(fixed) + [f"random-{k}" for k in range(n_random)]


def scene_bank(grid: GridSpec, names=None, seed: int = 0) -> dict[str, SampledField]:
    names = scene_names() if names is None else names
    return {n: get_scene(n, grid, seed) for n in names}


# ten scenes used for operator-equivalence and domination sweeps
TEN_SCENES = ("disk", "gaussian", "two-bump", "annulus-bump", "focused-2", "focused-3",
              "random-0", "random-1", "random-2", "random-3")
