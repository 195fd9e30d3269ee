"""Fluid half of the system: continuity by backward characteristics and by
conservative upwind finite volumes, the Lame operator of the viscous stress,
and the implicit (backward-Euler) linearized momentum step.

The momentum system per step is

    rho (u_new - u_old)/dt + rho w . grad u_new + L u_new = -grad p + f_rad,

assembled sparsely and solved by a preconditioned Krylov iteration.  Where
rho = 0 the time and convection terms vanish and the same solve degenerates
to the elliptic balance L u_new = rhs.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, ShapeError, SolverError, StepSizeError
from .grid import (SpatialGrid, check_scalar, check_vector, divergence,
                   gradient, pad_ghost, second_difference)
from .physics import ViscosityParams

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class FluidState:
    """Density rho >= 0 and velocity u on the spatial grid."""

    rho: Array
    u: Array

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if not np.all(np.isfinite(self.rho)) or not np.all(np.isfinite(self.u)):
            raise DomainError("fluid state must be finite")
        if np.any(self.rho < 0):
            idx = np.unravel_index(int(np.argmin(self.rho)), self.rho.shape)
            raise DomainError(f"negative density at cell {tuple(int(i) for i in idx)}")


@dataclass(frozen=True, eq=False)
class FlowMap:
    """Backward-traced departure points U(0; t, x) per cell, plus the count of
    trace points that left the padded domain and were clamped."""

    departure: Array      # (dim,) + extents
    clamped: int = 0


class VelocityHistory:
    """Time samples of a velocity field on [t0, t1] with linear interpolation."""

    def __init__(self, times, fields):
        self.times = np.asarray(times, dtype=float)
        self.fields = [np.asarray(f, dtype=float) for f in fields]
        if self.times.ndim != 1 or len(self.fields) != self.times.size or self.times.size < 1:
            raise ShapeError("history needs one field per sample time")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ShapeError("history times must be strictly increasing")

    @classmethod
    def constant(cls, w: Array, t0: float = 0.0, t1: float = 1.0) -> "VelocityHistory":
        return cls([t0, t1], [w, w])

    def __call__(self, s: float) -> Array:
        t = self.times
        if s <= t[0]:
            return self.fields[0]
        if s >= t[-1]:
            return self.fields[-1]
        j = int(np.searchsorted(t, s, side="right")) - 1
        a = (s - t[j]) / (t[j + 1] - t[j])
        return (1.0 - a) * self.fields[j] + a * self.fields[j + 1]


# ---------------------------------------------------------------------------
# multilinear interpolation
# ---------------------------------------------------------------------------

def interp_field(f: Array, grid: SpatialGrid, points: Array,
                 farfield_value: float = 0.0) -> tuple[Array, int]:
    """Multilinear interpolation of a scalar field at physical points.

    ``points`` has shape (dim,) + batch.  Periodic grids wrap coordinates;
    far-field grids clamp points that leave the one-ghost-layer padded domain
    and report how many were clamped.
    """
    f = check_scalar(f, grid)
    points = np.asarray(points, dtype=float)
    if points.shape[0] != grid.dim:
        raise ShapeError(f"points must have leading axis {grid.dim}")
    fp = pad_ghost(f, grid, farfield_value)
    batch = points.shape[1:]
    base, frac = [], []
    clamped = 0
    for a in range(grid.dim):
        h = grid.spacing[a]
        n = grid.extents[a]
        x = points[a]
        if grid.boundary == "periodic":
            x = np.mod(x, n * h)
        else:
            lo, hi = -0.5 * h, (n + 0.5) * h
            out = (x < lo) | (x > hi)
            clamped += int(np.count_nonzero(out))
            x = np.clip(x, lo, hi)
        t = x / h - 0.5
        i0 = np.clip(np.floor(t).astype(int), -1, n - 1)
        base.append(i0 + 1)          # shift into padded indexing
        frac.append(t - i0)
    out = np.zeros(batch)
    for corner in itertools.product((0, 1), repeat=grid.dim):
        wgt = np.ones(batch)
        ix = []
        for a in range(grid.dim):
            wgt = wgt * (frac[a] if corner[a] else 1.0 - frac[a])
            ix.append(base[a] + corner[a])
        out += wgt * fp[tuple(ix)]
    return out, clamped


def _interp_vector(u: Array, grid: SpatialGrid, points: Array) -> tuple[Array, int]:
    vals = np.empty((grid.dim,) + points.shape[1:])
    clamped = 0
    for a in range(grid.dim):
        vals[a], c = interp_field(u[a], grid, points, farfield_value=0.0)
        clamped += c
    return vals, clamped


# ---------------------------------------------------------------------------
# backward characteristics
# ---------------------------------------------------------------------------

def _clamp_points(pts: Array, grid: SpatialGrid) -> tuple[Array, int]:
    """Keep traced points inside the one-ghost-layer padded far-field domain;
    returns the number of clamped coordinates.  Periodic grids never clamp."""
    if grid.boundary == "periodic":
        return pts, 0
    clamped = 0
    out = pts.copy()
    for a in range(grid.dim):
        h = grid.spacing[a]
        lo, hi = -0.5 * h, (grid.extents[a] + 0.5) * h
        bad = (out[a] < lo) | (out[a] > hi)
        clamped += int(np.count_nonzero(bad))
        out[a] = np.clip(out[a], lo, hi)
    return out, clamped


def _trace_backward(w_hist: VelocityHistory, t: float, grid: SpatialGrid,
                    substeps: int | None, want_div: bool):
    """RK2 (midpoint) backward trace of all cell centers from s = t to s = 0,
    optionally accumulating the trapezoidal integral of div w along the path.
    Traced points leaving the padded far-field domain are clamped and counted."""
    if substeps is None:
        substeps = max(1, w_hist.times.size - 1)
    ds = t / substeps if substeps else 0.0
    pts = np.stack(np.meshgrid(*[grid.axis_coords(a) for a in range(grid.dim)],
                               indexing="ij"))
    clamped = 0
    div_hist = None
    divint = np.zeros(grid.extents) if want_div else None
    if want_div:
        div_hist = VelocityHistory(
            w_hist.times, [divergence(f, grid, 0.0) for f in w_hist.fields])

    def div_at(s, p):
        val, _ = interp_field(div_hist(s), grid, p, farfield_value=0.0)
        return val

    s = t
    for _ in range(substeps):
        if want_div:
            g0 = div_at(s, pts)
        k1, _ = _interp_vector(w_hist(s), grid, pts)
        mid = pts - 0.5 * ds * k1
        k2, _ = _interp_vector(w_hist(s - 0.5 * ds), grid, mid)
        pts, n_bad = _clamp_points(pts - ds * k2, grid)
        clamped += n_bad
        s -= ds
        if want_div:
            g1 = div_at(s, pts)
            divint += 0.5 * ds * (g0 + g1)
    return pts, clamped, divint


def integrate_flow_map(w_hist: VelocityHistory, t: float, grid: SpatialGrid,
                       substeps: int | None = None) -> FlowMap:
    """Departure points of the flow ODE dU/ds = w(s, U), U(t) = cell center."""
    pts, clamped, _ = _trace_backward(w_hist, t, grid, substeps, want_div=False)
    return FlowMap(departure=pts, clamped=clamped)


def continuity_step_characteristics(rho0: Array, w_hist: VelocityHistory, t: float,
                                    grid: SpatialGrid,
                                    substeps: int | None = None) -> Array:
    """Density along characteristics:
    rho(t, x) = rho0(U(0; t, x)) exp(-int_0^t div w(s, U(s; t, x)) ds).

    Nonnegative by construction: linear interpolation of rho0 >= 0 times an
    exponential.
    """
    rho0 = check_scalar(rho0, grid)
    if np.any(rho0 < 0):
        raise DomainError("initial density must be >= 0")
    pts, _, divint = _trace_backward(w_hist, t, grid, substeps, want_div=True)
    ghost = grid.farfield_rho if grid.boundary == "farfield" else 0.0
    rho_dep, _ = interp_field(rho0, grid, pts, farfield_value=ghost)
    return rho_dep * np.exp(-divint)


# ---------------------------------------------------------------------------
# conservative finite-volume continuity
# ---------------------------------------------------------------------------

def _face_values(f: Array, grid: SpatialGrid, axis: int, ghost: float) -> Array:
    """Averages onto the n+1 faces along ``axis`` (ghost-padded)."""
    fp = pad_ghost(f, grid, ghost)
    lead = fp.ndim - grid.dim
    lo = [slice(None)] * lead + [slice(1, -1)] * grid.dim
    hi = list(lo)
    lo[lead + axis] = slice(0, -1)
    hi[lead + axis] = slice(1, None)
    return 0.5 * (fp[tuple(lo)] + fp[tuple(hi)])


def continuity_step_fv(rho_n: Array, w: Array, dt: float, grid: SpatialGrid) -> Array:
    """First-order upwind conservative step of rho_t + div(rho w) = 0.

    Mass is conserved to round-off on periodic grids (telescoping fluxes).
    The step is a convex combination of old cell values whenever the per-cell
    outflow satisfies dt * sum_a (outflow_a / h_a) <= 1, which is what the
    CFL check enforces, so rho >= 0 is preserved exactly.
    """
    rho_n = check_scalar(rho_n, grid)
    w = check_vector(w, grid)
    faces = [_face_values(w[a], grid, a, 0.0) for a in range(grid.dim)]
    outflow = np.zeros(grid.extents)
    for a in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        outflow += (np.maximum(faces[a][tuple(hi)], 0.0)
                    + np.maximum(-faces[a][tuple(lo)], 0.0)) / grid.spacing[a]
    worst = dt * float(np.max(outflow))
    if worst > 1.0 + 1e-12:
        raise StepSizeError(f"continuity CFL violated: dt * max outflow rate "
                            f"= {worst:.3g} > 1")
    ghost_rho = grid.farfield_rho if grid.boundary == "farfield" else 0.0
    out = rho_n.copy()
    for a in range(grid.dim):
        wf = faces[a]
        rp = pad_ghost(rho_n, grid, ghost_rho)
        lo = [slice(1, -1)] * grid.dim
        hi = [slice(1, -1)] * grid.dim
        lo[a] = slice(0, -1)
        hi[a] = slice(1, None)
        rho_left = rp[tuple(lo)]
        rho_right = rp[tuple(hi)]
        flux = np.where(wf > 0, wf * rho_left, wf * rho_right)
        sl_lo = [slice(None)] * grid.dim
        sl_hi = [slice(None)] * grid.dim
        sl_lo[a] = slice(0, -1)
        sl_hi[a] = slice(1, None)
        out -= dt * (flux[tuple(sl_hi)] - flux[tuple(sl_lo)]) / grid.spacing[a]
    return out


# ---------------------------------------------------------------------------
# Lame operator
# ---------------------------------------------------------------------------

def lame_apply(u: Array, visc: ViscosityParams, grid: SpatialGrid) -> Array:
    """L u = -mu lap u - (lam + mu) grad div u, built by composing the centered
    gradient/divergence so the discrete energy identity
    <L u, u> = mu |grad u|_2^2 + (lam + mu) |div u|_2^2 holds exactly on
    periodic grids."""
    u = check_vector(u, grid)
    out = np.empty_like(u)
    graddiv = gradient(divergence(u, grid, 0.0), grid, 0.0)
    for j in range(grid.dim):
        lap = divergence(gradient(u[j], grid, 0.0), grid, 0.0)
        out[j] = -visc.mu * lap - (visc.lam + visc.mu) * graddiv[j]
    return out


def heat_smooth(u: Array, grid: SpatialGrid, duration: float) -> Array:
    """Explicit diffusion u_t = lap u over ``duration`` (unit diffusivity);
    used to mollify the initial velocity iterate."""
    u = check_vector(u, grid)
    if duration <= 0:
        return u.copy()
    stiff = sum(1.0 / h ** 2 for h in grid.spacing)
    dt_stable = 0.4 / stiff
    n = max(1, int(np.ceil(duration / dt_stable)))
    dt = duration / n
    out = u.copy()
    for _ in range(n):
        for j in range(grid.dim):
            lap = np.zeros(grid.extents)
            for a in range(grid.dim):
                lap += second_difference(out[j], grid, a, 0.0)
            out[j] = out[j] + dt * lap
    return out


# ---------------------------------------------------------------------------
# sparse operator assembly
# ---------------------------------------------------------------------------

def _roll_matrix(n: int, off: int) -> sp.spmatrix:
    rows = np.arange(n)
    cols = (rows + off) % n
    return sp.csr_matrix((np.ones(n), (rows, cols)), shape=(n, n))


def _centered_diff_1d(n: int, h: float, periodic: bool) -> sp.spmatrix:
    ep = _roll_matrix(n, +1) if periodic else sp.diags([np.ones(n - 1)], [1], (n, n))
    em = _roll_matrix(n, -1) if periodic else sp.diags([np.ones(n - 1)], [-1], (n, n))
    return ((ep - em) / (2.0 * h)).tocsr()


def _one_sided_diff_1d(n: int, h: float, periodic: bool, forward: bool) -> sp.spmatrix:
    eye = sp.eye(n, format="csr")
    if forward:
        ep = _roll_matrix(n, +1) if periodic else sp.diags([np.ones(n - 1)], [1], (n, n))
        return ((ep - eye) / h).tocsr()
    em = _roll_matrix(n, -1) if periodic else sp.diags([np.ones(n - 1)], [-1], (n, n))
    return ((eye - em) / h).tocsr()


def _lift(mat: sp.spmatrix, grid: SpatialGrid, axis: int) -> sp.spmatrix:
    """Kronecker-lift a 1D operator on ``axis`` to the full grid."""
    out = None
    for a in range(grid.dim):
        block = mat if a == axis else sp.eye(grid.extents[a], format="csr")
        out = block if out is None else sp.kron(out, block, format="csr")
    return out


@functools.lru_cache(maxsize=16)
def _axis_operators(grid: SpatialGrid):
    periodic = grid.boundary == "periodic"
    cen, fwd, bwd = [], [], []
    for a in range(grid.dim):
        n, h = grid.extents[a], grid.spacing[a]
        cen.append(_lift(_centered_diff_1d(n, h, periodic), grid, a))
        fwd.append(_lift(_one_sided_diff_1d(n, h, periodic, True), grid, a))
        bwd.append(_lift(_one_sided_diff_1d(n, h, periodic, False), grid, a))
    return cen, fwd, bwd


@functools.lru_cache(maxsize=16)
def lame_matrix(grid: SpatialGrid, visc: ViscosityParams) -> sp.spmatrix:
    """Sparse matrix of lame_apply on the flattened (component, cell) vector."""
    cen, _, _ = _axis_operators(grid)
    lap = None
    for d in cen:
        dd = (d @ d).tocsr()
        lap = dd if lap is None else lap + dd
    blocks = []
    for j in range(grid.dim):
        row = []
        for k in range(grid.dim):
            block = -(visc.lam + visc.mu) * (cen[j] @ cen[k])
            if j == k:
                block = block - visc.mu * lap
            row.append(block.tocsr())
        blocks.append(row)
    return sp.bmat(blocks, format="csr")


def _convection_matrix(rho: Array, w: Array, grid: SpatialGrid) -> sp.spmatrix:
    """Implicit upwind rho w . grad, block-diagonal over velocity components."""
    _, fwd, bwd = _axis_operators(grid)
    n = int(np.prod(grid.extents))
    conv = sp.csr_matrix((n, n))
    rho_flat = rho.ravel()
    for a in range(grid.dim):
        wa = w[a].ravel()
        pos = sp.diags(rho_flat * np.maximum(wa, 0.0))
        neg = sp.diags(rho_flat * np.minimum(wa, 0.0))
        conv = conv + pos @ bwd[a] + neg @ fwd[a]
    return sp.block_diag([conv] * grid.dim, format="csr")


# ---------------------------------------------------------------------------
# momentum step
# ---------------------------------------------------------------------------

def momentum_step(u_n: Array, rho_new: Array, w: Array | None, p_m: Array,
                  rad_source: Array, visc: ViscosityParams, dt: float,
                  grid: SpatialGrid, p_ref: float = 0.0, rtol: float = 1e-10,
                  maxiter: int = 10_000) -> Array:
    """Backward-Euler solve of the linearized momentum balance.

    Vacuum cells need no special casing: the rho-weighted terms drop out of
    their rows and the solve reduces to the elliptic balance there.
    """
    u_n = check_vector(u_n, grid)
    rho_new = check_scalar(rho_new, grid)
    p_m = check_scalar(p_m, grid)
    rad_source = check_vector(rad_source, grid)
    if np.any(rho_new < 0):
        raise DomainError("momentum step requires rho >= 0")

    rhs = rho_new[None] * u_n / dt - gradient(p_m, grid, farfield_value=p_ref) + rad_source
    b = rhs.reshape(-1)
    n = b.size
    if not np.any(b):
        return np.zeros_like(u_n)

    A = lame_matrix(grid, visc) + sp.block_diag(
        [sp.diags(rho_new.ravel() / dt)] * grid.dim, format="csr")
    symmetric = w is None or not np.any(w)
    if not symmetric:
        w = check_vector(w, grid)
        A = A + _convection_matrix(rho_new, w, grid)
    A = A.tocsr()

    precond = None
    try:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=10)
        precond = spla.LinearOperator((n, n), ilu.solve)
    except Exception:
        precond = None

    x0 = u_n.reshape(-1)
    krylov = spla.cg if symmetric else spla.bicgstab
    x, info = krylov(A, b, x0=x0, rtol=1e-13, atol=0.0, maxiter=maxiter, M=precond)
    bnorm = float(np.linalg.norm(b))
    res = float(np.linalg.norm(b - A @ x)) / bnorm
    if res > rtol:
        x, info = spla.lgmres(A, b, x0=x, rtol=1e-13, atol=0.0, maxiter=maxiter, M=precond)
        res = float(np.linalg.norm(b - A @ x)) / bnorm
        if res > rtol:
            raise SolverError(f"momentum solve stalled at relative residual {res:.3e}",
                              residual=res, iterations=maxiter)
    out = x.reshape(u_n.shape)
    if not np.all(np.isfinite(out)):
        raise SolverError("momentum solve produced non-finite values", residual=res)
    return out
