"""Discrete Lebesgue, Sobolev and mixed radiation norms.

Intersection norms follow the sum convention: ||f||_{X1 cap X2} is the sum of
the two norms.  All norms are instantaneous; monitors that need sup-in-time
quantities take running suprema over snapshots themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .grid import Grids, SpatialGrid, check_radiation, gradient, second_difference

Array = np.ndarray

SOBOLEV_KINDS = ("H1", "W1q", "H1W1q", "D1", "D2")
MIXED_INNER_KINDS = ("L2", "Lq", "H1", "W1q", "H1W1q")


@dataclass(frozen=True)
class NormSettings:
    """Lebesgue exponent q in (3, 6] and the reference state subtracted from
    density/pressure before norming."""

    q: float = 4.0
    rho_ref: float = 0.0
    p_ref: float = 0.0

    def __post_init__(self):
        if not 3.0 < self.q <= 6.0:
            raise ParameterError(f"q must lie in (3, 6], got {self.q}")
        if self.rho_ref < 0:
            raise ParameterError("reference density must be >= 0")


def _magnitude(f: Array, grid: SpatialGrid) -> Array:
    """Pointwise Euclidean magnitude over any leading component axes."""
    f = np.asarray(f, dtype=float)
    if f.shape[f.ndim - grid.dim:] != grid.extents:
        raise ShapeError(f"field shape {f.shape} incompatible with grid {grid.extents}")
    if f.ndim == grid.dim:
        return np.abs(f)
    comps = f.reshape((-1,) + grid.extents)
    return np.sqrt(np.sum(comps * comps, axis=0))


def lp_norm(f: Array, p: float, grid: SpatialGrid) -> float:
    """(sum |f|^p * vol)^(1/p); max |f| for p = inf.  Vector fields use the
    pointwise Euclidean magnitude."""
    mag = _magnitude(f, grid)
    if p == np.inf:
        return float(np.max(mag)) if mag.size else 0.0
    if p < 1:
        raise ParameterError(f"Lebesgue exponent must be >= 1 or inf, got {p}")
    return float(np.sum(mag ** p) * grid.cell_volume) ** (1.0 / p)


def _component_gradients(f: Array, grid: SpatialGrid) -> Array:
    """Stack of centered gradients over leading component axes (if any)."""
    f = np.asarray(f, dtype=float)
    if f.ndim == grid.dim:
        return gradient(f, grid)
    comps = f.reshape((-1,) + grid.extents)
    return np.concatenate([gradient(c, grid) for c in comps], axis=0)


def _hessian_stack(f: Array, grid: SpatialGrid) -> Array:
    """All second differences D_a D_b per component: compact 3-point on the
    diagonal, composed centered differences off the diagonal."""
    f = np.asarray(f, dtype=float)
    comps = f.reshape((-1,) + grid.extents) if f.ndim > grid.dim else f[None]
    rows = []
    for c in comps:
        for a in range(grid.dim):
            rows.append(second_difference(c, grid, a))
            for b in range(a + 1, grid.dim):
                mixed = gradient(gradient(c, grid)[a], grid)[b]
                rows.append(mixed)
                rows.append(mixed)  # symmetric pair counts twice in |grad^2 f|^2
    return np.stack(rows)


def sobolev_norm(f: Array, kind: str, settings: NormSettings, grid: SpatialGrid,
                 reference: float = 0.0) -> float:
    """Discrete Sobolev (semi)norms built from lp_norm and the centered gradient.

    ``reference`` is subtracted before norming (density/pressure fields pass
    the background state here); the shifted field is assumed to decay to zero,
    so far-field ghosts pad with 0.
    """
    if kind not in SOBOLEV_KINDS:
        raise ParameterError(f"unknown Sobolev kind {kind!r}")
    g = np.asarray(f, dtype=float) - reference
    if kind == "D1":
        return lp_norm(_component_gradients(g, grid), 2.0, grid)
    if kind == "D2":
        return lp_norm(_hessian_stack(g, grid), 2.0, grid)
    if kind == "H1":
        return lp_norm(g, 2.0, grid) + lp_norm(_component_gradients(g, grid), 2.0, grid)
    if kind == "W1q":
        return lp_norm(g, settings.q, grid) + lp_norm(_component_gradients(g, grid),
                                                      settings.q, grid)
    # H1W1q: sum of the two norms
    return (sobolev_norm(g, "H1", settings, grid)
            + sobolev_norm(g, "W1q", settings, grid))


def d2q_seminorm(f: Array, settings: NormSettings, grid: SpatialGrid) -> float:
    """L^q norm of the second-difference stack (the D^{2,q} seminorm)."""
    return lp_norm(_hessian_stack(np.asarray(f, dtype=float), grid), settings.q, grid)


def _inner_norm(f: Array, inner: str, settings: NormSettings, grid: SpatialGrid) -> float:
    if inner == "L2":
        return lp_norm(f, 2.0, grid)
    if inner == "Lq":
        return lp_norm(f, settings.q, grid)
    return sobolev_norm(f, inner, settings, grid)


def mixed_radiation_norm(I: Array, inner: str, grids: Grids,
                         settings: NormSettings) -> float:
    """L2 over phase space of a spatial inner norm:
    (sum_b sum_m w_b w_m ||I[b, m]||_inner^2)^(1/2)."""
    if inner not in MIXED_INNER_KINDS:
        raise ParameterError(f"unknown inner norm {inner!r}")
    I = check_radiation(I, grids)
    total = 0.0
    for b in range(grids.freq.n_bands):
        wb = grids.freq.band_weights[b]
        for m in range(grids.ang.n_ordinates):
            nbm = _inner_norm(I[b, m], inner, settings, grids.spatial)
            total += wb * grids.ang.weights[m] * nbm * nbm
    return float(np.sqrt(total))
