"""Equations of state, viscosity and light-speed parameters, radiation
coefficient models, and numerical validators for the structural assumptions
the coefficient kernels must satisfy.

Coefficient evaluators are pure callables.  The absorption coefficient
factorizes as sigma_a = sigma * rho; scattering kernels factorize as
sigma_s = sigma_s_bar(v' -> v, Omega'.Omega) * rho and the reverse kernel
sigma_s' = sigma_s_bar_prime(v -> v', Omega.Omega') * rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError, ParameterError
from .grid import AngularQuadrature, FrequencyGrid, Grids, SpatialGrid, check_scalar
from .norms import NormSettings, lp_norm

Array = np.ndarray


# ---------------------------------------------------------------------------
# fluid parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ViscosityParams:
    """Shear viscosity mu > 0 and second viscosity lambda with
    lambda + (2/3) mu >= 0 (ellipticity of the viscous stress)."""

    mu: float
    lam: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ParameterError(f"shear viscosity must be positive, got mu={self.mu}")
        if self.lam + 2.0 * self.mu / 3.0 < 0:
            raise ParameterError(
                f"need lambda + (2/3) mu >= 0, got {self.lam + 2.0 * self.mu / 3.0}")


@dataclass(frozen=True)
class PhysicalConstants:
    """Light speed (may be rescaled to 1)."""

    c: float = 1.0

    def __post_init__(self):
        if self.c <= 0:
            raise ParameterError(f"light speed must be positive, got {self.c}")


class EquationOfState:
    """Barotropic pressure law: polytropic p = A rho^gamma, or a monotone C1
    interpolation of tabulated (rho, p) samples."""

    def __init__(self, kind: str, A: float | None = None, gamma: float | None = None,
                 table: tuple[Array, Array] | None = None):
        self.kind = kind
        if kind == "polytropic":
            if A is None or A <= 0:
                raise ParameterError(f"polytropic EOS needs A > 0, got {A}")
            if gamma is None or gamma <= 1:
                raise ParameterError(f"polytropic EOS needs gamma > 1, got {gamma}")
            self.A = float(A)
            self.gamma = float(gamma)
            self._interp = None
        elif kind == "barotropic_table":
            if table is None:
                raise ParameterError("table EOS needs (rho, p) samples")
            rho_s = np.asarray(table[0], dtype=float)
            p_s = np.asarray(table[1], dtype=float)
            if rho_s.ndim != 1 or rho_s.size < 4 or p_s.shape != rho_s.shape:
                raise ParameterError("table needs matching 1D sample arrays (>= 4 points)")
            if np.any(np.diff(rho_s) <= 0):
                raise ParameterError("table densities must be strictly increasing")
            if np.any(np.diff(p_s) < 0):
                raise ParameterError("table pressure must be nondecreasing")
            if rho_s[0] < 0:
                raise ParameterError("table densities must be >= 0")
            self.A = None
            self.gamma = None
            # monotone cubic keeps p in C1 with p' >= 0 between samples
            self._interp = PchipInterpolator(rho_s, p_s, extrapolate=True)
        else:
            raise ParameterError(f"unknown EOS kind {kind!r}")

    @classmethod
    def polytropic(cls, A: float, gamma: float) -> "EquationOfState":
        return cls("polytropic", A=A, gamma=gamma)

    @classmethod
    def barotropic_table(cls, rho_samples, p_samples) -> "EquationOfState":
        return cls("barotropic_table", table=(rho_samples, p_samples))

    def __call__(self, rho: Array) -> Array:
        rho = np.asarray(rho, dtype=float)
        if self.kind == "polytropic":
            return self.A * rho ** self.gamma
        return np.asarray(self._interp(rho), dtype=float)

    def reference_pressure(self, rho_bar: float) -> float:
        return float(self(np.asarray(rho_bar)))


def pressure(eos: EquationOfState, rho: Array, grid: SpatialGrid | None = None) -> Array:
    """Pointwise pressure; negative density is a domain error naming the cell."""
    rho = np.asarray(rho, dtype=float) if grid is None else check_scalar(rho, grid)
    if np.any(rho < 0):
        idx = np.unravel_index(int(np.argmin(rho)), rho.shape)
        raise DomainError(f"negative density {rho[idx]} at cell {tuple(int(i) for i in idx)}")
    return eos(rho)


# ---------------------------------------------------------------------------
# coefficient models
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class CoefficientModel:
    """Radiation coefficient evaluators.

    sigma(v, omega, t, x, rho)      absorption coefficient per unit density
    sigma_s_bar(v_from, v_to, mu)   scattering-in kernel (per unit density)
    sigma_s_bar_prime(v_from, v_to, mu)  scattering-out (reverse) kernel
    emission(v, omega, t, x)        spontaneous emission rate S >= 0

    ``x`` is the tuple of broadcastable cell-center coordinate arrays, so
    evaluators vectorize over the spatial grid.  ``majorant`` is the declared
    increasing bound M(.) used by the regularity validators.

    By default the emission is density-independent; setting
    ``emission_depends_rho`` switches its signature to
    emission(v, omega, t, x, rho) and makes it eligible for
    ``validate_emission_regularity``.
    """

    sigma: Callable
    sigma_s_bar: Callable
    sigma_s_bar_prime: Callable
    emission: Callable
    majorant: Callable | None = None
    sigma_lipschitz: Callable | None = None
    emission_depends_rho: bool = False
    _kernel_cache: dict = field(default_factory=dict, repr=False)

    # -- vectorized evaluation over the discrete phase space ---------------

    def sigma_bm(self, grids: Grids, t: float, rho: Array) -> Array:
        """sigma at every (band, ordinate) pair: shape (B, M) + extents."""
        rho = check_scalar(rho, grids.spatial)
        x = grids.spatial.coords()
        out = np.empty(grids.radiation_shape())
        for b, v in enumerate(grids.freq.band_centers):
            for m in range(grids.ang.n_ordinates):
                omega = grids.ang.ordinates[m]
                out[b, m] = np.broadcast_to(self.sigma(v, omega, t, x, rho),
                                            grids.spatial.extents)
        return out

    def emission_bm(self, grids: Grids, t: float, rho: Array | None = None) -> Array:
        out = np.empty(grids.radiation_shape())
        x = grids.spatial.coords()
        for b, v in enumerate(grids.freq.band_centers):
            for m in range(grids.ang.n_ordinates):
                omega = grids.ang.ordinates[m]
                if self.emission_depends_rho:
                    if rho is None:
                        raise ConfigError("density-dependent emission needs rho")
                    value = self.emission(v, omega, t, x, rho)
                else:
                    value = self.emission(v, omega, t, x)
                out[b, m] = np.broadcast_to(value, grids.spatial.extents)
        return out

    def kernels(self, freq: FrequencyGrid, ang: AngularQuadrature) -> tuple[Array, Array]:
        """Dense kernel tables over (band, ordinate)^2, cached per quadrature.

        K_in[b, m, b', m']  = sigma_s_bar(v_b' -> v_b, Omega_m' . Omega_m)
        K_out[b, m, b', m'] = sigma_s_bar_prime(v_b -> v_b', Omega_m . Omega_m')
        """
        key = (id(freq), id(ang))
        if key not in self._kernel_cache:
            v = freq.band_centers
            mu = ang.ordinates @ ang.ordinates.T
            B, M = freq.n_bands, ang.n_ordinates
            k_in = np.empty((B, M, B, M))
            k_out = np.empty((B, M, B, M))
            for b in range(B):
                for bp in range(B):
                    k_in[b, :, bp, :] = self.sigma_s_bar(v[bp], v[b], mu)
                    k_out[b, :, bp, :] = self.sigma_s_bar_prime(v[b], v[bp], mu)
            self._kernel_cache[key] = (k_in, k_out)
        return self._kernel_cache[key]


def _zero_kernel(v_from, v_to, mu):
    return np.zeros_like(np.asarray(mu, dtype=float))


def zero_model() -> CoefficientModel:
    """No absorption, no scattering, no emission."""
    return CoefficientModel(
        sigma=lambda v, omega, t, x, rho: np.zeros_like(rho),
        sigma_s_bar=_zero_kernel,
        sigma_s_bar_prime=_zero_kernel,
        emission=lambda v, omega, t, x: 0.0,
        majorant=lambda s: 1.0 + s,
    )


def constant_model(sigma0: float = 0.0, kernel0: float = 0.0,
                   emission0: float = 0.0) -> CoefficientModel:
    """Frequency- and direction-independent coefficients."""
    if min(sigma0, kernel0, emission0) < 0:
        raise ParameterError("coefficients must be nonnegative")

    def kern(v_from, v_to, mu):
        return np.full_like(np.asarray(mu, dtype=float), kernel0)

    return CoefficientModel(
        sigma=lambda v, omega, t, x, rho: np.full_like(rho, sigma0),
        sigma_s_bar=kern,
        sigma_s_bar_prime=kern,
        emission=lambda v, omega, t, x: emission0,
        majorant=lambda s: (1.0 + max(sigma0, 1.0)) * (1.0 + s),
        sigma_lipschitz=lambda s: 1.0 + s,
    )


def compton_model(D1: float, D2: float, v0: float, theta: float,
                  sigma_s_profile: Callable | None = None,
                  emission: Callable | None = None) -> CoefficientModel:
    """Thermal Compton-style absorption peaked at the line frequency v0:

        sigma(v) = D1 theta^(-1/2) exp(-D2 theta^(-1/2) ((v - v0)/v0)^2)

    with an optional user-supplied scattering kernel; the reverse kernel is
    the same kernel with the frequency arguments swapped.
    """
    for name, val in (("D1", D1), ("D2", D2), ("v0", v0), ("theta", theta)):
        if val <= 0:
            raise ParameterError(f"Compton parameter {name} must be positive, got {val}")
    amp = D1 * theta ** -0.5

    def sig(v, omega, t, x, rho):
        z = (v - v0) / v0
        return np.full_like(rho, amp * np.exp(-D2 * theta ** -0.5 * z * z))

    profile = sigma_s_profile if sigma_s_profile is not None else _zero_kernel

    def kern_prime(v_from, v_to, mu):
        return profile(v_to, v_from, mu)

    # analytic bound: ||sigma||_{L2(phase); Linf} is controlled by the Gaussian
    # integral over v, independent of the band truncation
    gauss_mass = v0 * np.sqrt(np.pi * np.sqrt(theta) / (2.0 * D2))
    c0 = max(1.0, 2.0 * amp * (1.0 + np.sqrt(4.0 * np.pi * gauss_mass)))

    return CoefficientModel(
        sigma=sig,
        sigma_s_bar=profile,
        sigma_s_bar_prime=kern_prime,
        emission=emission if emission is not None else (lambda v, omega, t, x: 0.0),
        majorant=lambda s: c0 * (1.0 + s),
        sigma_lipschitz=lambda s: 1.0 + s,  # sigma is rho-independent
    )


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------

@dataclass
class ValidationEntry:
    name: str
    value: float
    bound: float
    passed: bool
    location: tuple | None = None


@dataclass
class ValidationReport:
    entries: list
    suggested_scale: float = 1.0

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> ValidationEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def validate_kernel_integrability(model: CoefficientModel, freq: FrequencyGrid,
                                  ang: AngularQuadrature, lambda1: float = 1.0,
                                  lambda2: float = 1.0, cap: float = 1e4) -> ValidationReport:
    """Evaluate the iterated phase-space integrals the scattering kernels must
    keep bounded: the (v/v')^2-weighted square integral of the in-kernel at
    exponent lambda1 in {1, 1/2}, the iterated integral of the out-kernel at
    exponent lambda2 in {1, 2}, and the plain sup of the inner out-integral.
    """
    if lambda1 not in (1.0, 0.5):
        raise ParameterError("lambda1 must be 1 or 1/2")
    if lambda2 not in (1.0, 2.0):
        raise ParameterError("lambda2 must be 1 or 2")
    k_in, k_out = model.kernels(freq, ang)
    entries = []
    bad = np.argwhere(~np.isfinite(k_in))
    if bad.size:
        entries.append(ValidationEntry("kernel_in_finite", np.nan, cap, False,
                                       tuple(int(i) for i in bad[0])))
    bad = np.argwhere(~np.isfinite(k_out))
    if bad.size:
        entries.append(ValidationEntry("kernel_out_finite", np.nan, cap, False,
                                       tuple(int(i) for i in bad[0])))
    if entries:
        return ValidationReport(entries)

    w = np.multiply.outer(freq.band_weights, ang.weights)   # (B, M)
    v = freq.band_centers
    ratio2 = np.zeros_like(k_in)
    for b in range(freq.n_bands):
        for bp in range(freq.n_bands):
            ratio2[b, :, bp, :] = (v[b] / v[bp]) ** 2

    inner_in = np.tensordot(ratio2 * k_in * k_in, w, axes=([2, 3], [0, 1]))
    int_in = float(np.sum(w * inner_in ** lambda1))
    entries.append(ValidationEntry("in_kernel_weighted_square", int_in, cap, int_in <= cap))

    inner_out = np.tensordot(k_out, w, axes=([2, 3], [0, 1]))
    int_out = float(np.sum(w * inner_out ** lambda2))
    entries.append(ValidationEntry("out_kernel_iterated", int_out, cap, int_out <= cap))

    sup_out = float(np.max(inner_out))
    entries.append(ValidationEntry("out_kernel_inner_sup", sup_out, cap, sup_out <= cap))

    scale = max((e.value / e.bound for e in entries if e.bound > 0), default=1.0)
    return ValidationReport(entries, suggested_scale=max(scale, 1.0))


def _mixed_l2_linf(field_bm: Array, w: Array, spatial_reduce) -> tuple[float, float]:
    """L2 and Linf over (band, ordinate) of a per-(b, m) spatial reduction."""
    vals = np.array([[spatial_reduce(field_bm[b, m]) for m in range(field_bm.shape[1])]
                     for b in range(field_bm.shape[0])])
    l2 = float(np.sqrt(np.sum(w * vals * vals)))
    linf = float(np.max(vals)) if vals.size else 0.0
    return l2, linf


def validate_sigma_regularity(model: CoefficientModel, rho: Array, rho_t: Array,
                              settings: NormSettings, grids: Grids,
                              t: float = 0.0) -> ValidationReport:
    """Check the declared majorant against the discrete mixed norms of sigma,
    grad sigma, and sigma_t over the phase-space quadrature.

    sigma_t is the total time derivative along the flow, estimated by a
    centered difference in (t, rho) using the supplied rho_t.
    """
    if model.majorant is None:
        raise ConfigError("coefficient model declares no majorant M(.)")
    grid = grids.spatial
    rho = check_scalar(rho, grid)
    rho_t = check_scalar(rho_t, grid)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(rho_t))):
        raise DomainError("density fields must be finite")

    w = np.multiply.outer(grids.freq.band_weights, grids.ang.weights)
    rho_inf = float(np.max(np.abs(rho)))
    M_rho = float(model.majorant(rho_inf))
    if M_rho < 1.0:
        raise ConfigError(f"majorant must map into [1, inf), got M({rho_inf}) = {M_rho}")

    sig = model.sigma_bm(grids, t, rho)
    entries = []
    if not np.all(np.isfinite(sig)):
        loc = tuple(int(i) for i in np.argwhere(~np.isfinite(sig))[0])
        entries.append(ValidationEntry("sigma_finite", np.nan, M_rho, False, loc))
        return ValidationReport(entries)

    # line 1: || sigma ||_{L2 cap Linf (phase); Linf(x)} <= M(|rho|_inf)
    l2, linf = _mixed_l2_linf(sig, w, lambda f: float(np.max(np.abs(f))))
    val1 = l2 + linf
    entries.append(ValidationEntry("sigma_mixed_sup", val1, M_rho, val1 <= M_rho))

    # line 2: || grad sigma ||_{L2 cap Linf (phase); Lr(x)} <= M (|grad rho|_r + 1)
    from .grid import gradient as _grad
    grad_rho = _grad(rho, grid, farfield_value=0.0)
    for r in (2.0, settings.q):
        bound = M_rho * (lp_norm(grad_rho, r, grid) + 1.0)
        l2r, linfr = _mixed_l2_linf(
            sig, w, lambda f: lp_norm(_grad(f, grid), r, grid))
        val = l2r + linfr
        entries.append(ValidationEntry(f"grad_sigma_L{r:g}", val, bound, val <= bound))

    # line 3: || sigma_t ||_{L2(phase); L2(x)} <= M (|rho_t|_2 + 1)
    eps = 1e-6 * max(1.0, rho_inf)
    sig_plus = model.sigma_bm(grids, t + eps, rho + eps * rho_t)
    sig_minus = model.sigma_bm(grids, t - eps, rho - eps * rho_t)
    sig_t = (sig_plus - sig_minus) / (2.0 * eps)
    l2t, _ = _mixed_l2_linf(sig_t, w, lambda f: lp_norm(f, 2.0, grid))
    bound3 = M_rho * (lp_norm(rho_t, 2.0, grid) + 1.0)
    entries.append(ValidationEntry("sigma_t_mixed", l2t, bound3, l2t <= bound3))

    # optional Lipschitz-in-rho check for models that declare a bound
    if model.sigma_lipschitz is not None:
        drho = 0.1 * max(1.0, rho_inf)
        sig_pert = model.sigma_bm(grids, t, rho + drho)
        lip = float(np.max(np.abs(sig_pert - sig))) / drho
        bound_l = float(model.sigma_lipschitz(rho_inf + drho)) * M_rho
        entries.append(ValidationEntry("sigma_lipschitz", lip, bound_l, lip <= bound_l))

    scale = max((e.value / e.bound for e in entries if e.bound > 0), default=1.0)
    return ValidationReport(entries, suggested_scale=max(scale, 1.0))


def validate_emission_regularity(model: CoefficientModel, rho: Array, rho_t: Array,
                                 settings: NormSettings, grids: Grids,
                                 t: float = 0.0) -> ValidationReport:
    """Regularity checks for a density-dependent emission rate, following the
    same pattern as the absorption-coefficient validator: mixed phase-space
    norms of S, grad S, and S_t against the declared majorant."""
    if not model.emission_depends_rho:
        raise ConfigError("emission is density-independent; nothing to validate")
    if model.majorant is None:
        raise ConfigError("coefficient model declares no majorant M(.)")
    grid = grids.spatial
    rho = check_scalar(rho, grid)
    rho_t = check_scalar(rho_t, grid)
    w = np.multiply.outer(grids.freq.band_weights, grids.ang.weights)
    rho_inf = float(np.max(np.abs(rho)))
    M_rho = float(model.majorant(rho_inf))

    S = model.emission_bm(grids, t, rho)
    entries = []
    if not np.all(np.isfinite(S)):
        loc = tuple(int(i) for i in np.argwhere(~np.isfinite(S))[0])
        entries.append(ValidationEntry("emission_finite", np.nan, M_rho, False, loc))
        return ValidationReport(entries)

    l2, linf = _mixed_l2_linf(S, w, lambda f: float(np.max(np.abs(f))))
    val1 = l2 + linf
    entries.append(ValidationEntry("emission_mixed_sup", val1, M_rho, val1 <= M_rho))

    from .grid import gradient as _grad
    grad_rho = _grad(rho, grid, farfield_value=0.0)
    for r in (2.0, settings.q):
        bound = M_rho * (lp_norm(grad_rho, r, grid) + 1.0)
        l2r, linfr = _mixed_l2_linf(S, w, lambda f: lp_norm(_grad(f, grid), r, grid))
        val = l2r + linfr
        entries.append(ValidationEntry(f"grad_emission_L{r:g}", val, bound,
                                       val <= bound))

    eps = 1e-6 * max(1.0, rho_inf)
    S_t = (model.emission_bm(grids, t + eps, rho + eps * rho_t)
           - model.emission_bm(grids, t - eps, rho - eps * rho_t)) / (2.0 * eps)
    l2t, _ = _mixed_l2_linf(S_t, w, lambda f: lp_norm(f, 2.0, grid))
    bound3 = M_rho * (lp_norm(rho_t, 2.0, grid) + 1.0)
    entries.append(ValidationEntry("emission_t_mixed", l2t, bound3, l2t <= bound3))

    scale = max((e.value / e.bound for e in entries if e.bound > 0), default=1.0)
    return ValidationReport(entries, suggested_scale=max(scale, 1.0))
