"""Ensemble spectra, cloud-profile convolution and line-width extraction.

A spectrum here is the configuration-averaged yield of the created species
(s for Case I, p for Case II) after a fixed evolution time, as a function
of the creation detuning.  Detunings, times and widths are all expressed in
units of the mean interaction strength of the model (the product of the two
dipole moments entering the creation process, at unit density); this module
converts to absolute simulation units internally.

The inhomogeneous-cloud curve is a radial average over a Gaussian density
profile n(r) = 2 sqrt(2) nbar exp(-r^2/sigma^2): a shell at radius r sees
the same physics with detuning rescaled by exp(r^2/sigma^2)/(2 sqrt 2), so
the convolved yield is an integral of the homogeneous curve over rescaled
detunings.  After substituting u = r/sigma the cloud width drops out, which
is why results are insensitive to sigma.
"""

from __future__ import annotations

import multiprocessing
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import evolve, evolve_time_dependent
from .geometry import configuration_seed, sample_configuration
from .hilbert import (
    ModelCase,
    ModelSpec,
    SectorBasis,
    all_p_word,
    enumerate_basis,
    species_split_word,
)


class CurveSupportError(RuntimeError):
    """The detuning grid does not bracket the feature being extracted."""


@dataclass(frozen=True)
class SpectrumCurve:
    """Ensemble-averaged yield vs detuning (all in mean-interaction units)."""

    detunings: np.ndarray
    yields: np.ndarray
    std_errors: np.ndarray
    n_configs: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float)
        y = np.asarray(self.yields, dtype=float)
        e = np.asarray(self.std_errors, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("detuning grid must be a non-empty 1-d array")
        if np.any(np.diff(d) <= 0):
            raise ValueError("detuning grid must be strictly increasing")
        if y.shape != d.shape or e.shape != d.shape:
            raise ValueError("yields/std_errors must match the grid shape")
        if np.any(y < -1e-12) or np.any(y > 1 + 1e-12):
            raise ValueError("yields must lie in [0, 1]")
        if np.any(e < 0):
            raise ValueError("standard errors must be >= 0")
        for name, arr in (("detunings", d), ("yields", y), ("std_errors", e)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def at(self, delta: float) -> tuple[float, float]:
        """Yield and standard error at a grid point (exact match required)."""
        idx = np.nonzero(np.isclose(self.detunings, delta, rtol=0, atol=1e-12))[0]
        if idx.size != 1:
            raise KeyError(f"detuning {delta} is not on the grid")
        return float(self.yields[idx[0]]), float(self.std_errors[idx[0]])


@dataclass(frozen=True)
class LineWidthResult:
    fwhm: float
    half_max: float
    left_cross: float
    right_cross: float
    uncertainty: float

    def __post_init__(self):
        if not (self.left_cross < self.right_cross):
            raise ValueError("left crossing must lie below the right crossing")
        if self.fwhm <= 0:
            raise ValueError("fwhm must be positive")


@dataclass(frozen=True)
class GaussianProfileSpec:
    """Gaussian cloud profile for the inhomogeneous average.

    sigma never enters the numerics (it cancels in the substitution u=r/sigma)
    but is kept so run records state the physical profile they describe.
    """

    sigma: float
    quadrature_points: int = 128
    r_max_over_sigma: float = 4.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.r_max_over_sigma < 4:
            raise ValueError("r_max_over_sigma must be >= 4 (kernel mass)")
        if self.quadrature_points < 8:
            raise ValueError("quadrature_points must be >= 8")


@dataclass(frozen=True)
class RatioScanSpec:
    """Population-imbalance scan for Case II: nu = (n1 - n2)/(n1 + n2)."""

    n_total: int
    nu_values: tuple

    def __post_init__(self):
        if self.n_total < 2:
            raise ValueError("n_total must be >= 2")
        for nu in self.nu_values:
            self.split_for(nu)

    def split_for(self, nu: float) -> tuple[int, int]:
        if not -1 <= nu <= 1:
            raise ValueError(f"nu must lie in [-1, 1], got {nu}")
        n1_exact = 0.5 * (1.0 + nu) * self.n_total
        n1 = round(n1_exact)
        if abs(n1 - n1_exact) > 1e-9:
            raise ValueError(
                f"nu={nu} needs a non-integer split of {self.n_total} atoms"
            )
        return int(n1), self.n_total - int(n1)


def observable_species(model: ModelSpec) -> str:
    """Which species' yield forms the spectral line."""
    if model.case is ModelCase.CASE_I:
        return "s"
    if model.case is ModelCase.CASE_II:
        return "p"
    raise ValueError("the toy model has no detuning axis to scan")


def default_detuning_grid(
    outer_max: float = 80.0,
    outer_points: int = 41,
    inner_max: float = 20.0,
    inner_points: int = 81,
) -> np.ndarray:
    """Symmetric scan grid: coarse to +-outer_max, refined within +-inner_max."""
    coarse = np.linspace(-outer_max, outer_max, outer_points)
    fine = np.linspace(-inner_max, inner_max, inner_points)
    return np.unique(np.concatenate([coarse[np.abs(coarse) > inner_max], fine]))


def _initial_word(model: ModelSpec, n_atoms: int, species_split):
    if model.case is ModelCase.CASE_I:
        if species_split is not None:
            raise ValueError("species_split applies to Case II only")
        return all_p_word(n_atoms)
    if model.case is ModelCase.CASE_II:
        if species_split is None:
            if n_atoms % 2:
                raise ValueError("equal Case II populations need an even atom number")
            species_split = (n_atoms // 2, n_atoms // 2)
        n1, n2 = species_split
        if n1 < 0 or n2 < 0 or n1 + n2 != n_atoms:
            raise ValueError(f"species split {species_split} does not sum to {n_atoms}")
        # Positions are i.i.d., so assigning species to fixed atom indices is
        # statistically identical to a random per-configuration assignment,
        # and it lets one basis/template serve the whole ensemble.
        return species_split_word(n1, n2)
    raise ValueError("spectra are defined for Case I and Case II")


# Worker context for ensembles; populated before forking so children inherit
# the (read-only) basis and template instead of repickling them per task.
_POOL_CTX: dict = {}


def _config_yields(config_index: int) -> np.ndarray:
    ctx = _POOL_CTX
    basis: SectorBasis = ctx["basis"]
    model: ModelSpec = ctx["model"]
    template = basis.template
    vbar = model.vbar
    # speed is quoted in mean-interaction units (displacement per unit of
    # scaled time); ballistic motion runs in absolute time, so rescale
    speed_abs = None if ctx["speed"] is None else ctx["speed"] * vbar
    config = sample_configuration(
        basis.n_atoms, configuration_seed(ctx["seed"], config_index), speed=speed_abs
    )
    psi0 = np.zeros(basis.dim, dtype=np.complex128)
    psi0[ctx["psi0_index"]] = 1.0
    counts = basis.species_counts(ctx["species"])
    out = np.empty(len(ctx["grid"]))
    for g, delta_units in enumerate(ctx["grid"]):
        try:
            if ctx["speed"] is not None:
                scan_model = replace(model, detuning=delta_units * vbar)
                rep = evolve_time_dependent(
                    scan_model,
                    basis,
                    config,
                    psi0,
                    ctx["T"] / vbar,
                    rebuild_dt=ctx["rebuild_dt"] / vbar if ctx["rebuild_dt"] else None,
                    tol=ctx["tol"],
                )
            else:
                H = template.assemble(config, detuning=delta_units * vbar, model=model)
                rep = evolve(H, psi0, ctx["T"] / vbar, tol=ctx["tol"])
        except Exception as exc:
            raise RuntimeError(
                f"evolution failed for configuration {config_index} at "
                f"detuning {delta_units}: {exc}"
            ) from exc
        out[g] = (np.abs(rep.final_state) ** 2) @ counts / basis.n_atoms
    return out


def spectrum(
    model: ModelSpec,
    n_atoms: int,
    T: float,
    grid,
    n_configs: int,
    seed: int,
    species_split: tuple[int, int] | None = None,
    worker_count: int = 1,
    tol: float = 1e-8,
    speed: float | None = None,
    rebuild_dt: float | None = None,
) -> SpectrumCurve:
    """Ensemble-averaged yield of the created species vs detuning.

    ``T`` and the grid are in mean-interaction units.  ``speed`` switches on
    ballistic atom motion (with Hamiltonian rebuilds every ``rebuild_dt``,
    also in mean-interaction time units).  The ensemble is reproducible for
    a given seed independent of worker count or execution order because
    every configuration index derives its own RNG stream and the reduction
    runs in index order.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("detuning grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("detuning grid must be strictly increasing")
    if n_configs < 1:
        raise ValueError("n_configs must be >= 1")
    if T <= 0:
        raise ValueError("evolution time must be > 0")

    word = _initial_word(model, n_atoms, species_split)
    basis = enumerate_basis(model, n_atoms, word)
    basis.template  # build the pattern once, before any fork
    species = observable_species(model)
    ctx = {
        "basis": basis,
        "model": model,
        "grid": grid,
        "T": T,
        "tol": tol,
        "seed": seed,
        "species": species,
        "psi0_index": basis.index_of_word(word),
        "speed": speed,
        "rebuild_dt": rebuild_dt,
    }
    global _POOL_CTX
    old_ctx = _POOL_CTX
    _POOL_CTX = ctx
    try:
        if worker_count > 1:
            with multiprocessing.get_context("fork").Pool(worker_count) as pool:
                rows = pool.map(_config_yields, range(n_configs))
        else:
            rows = [_config_yields(i) for i in range(n_configs)]
    finally:
        _POOL_CTX = old_ctx
    fractions = np.stack(rows)  # (n_configs, n_grid), config-index order

    mean = fractions.mean(axis=0)
    if n_configs > 1:
        sem = fractions.std(axis=0, ddof=1) / np.sqrt(n_configs)
    else:
        sem = np.zeros_like(mean)
    metadata = {
        "case": model.case.value,
        "mu_sp": model.mu_sp,
        "mu_sp_prime": model.mu_sp_prime,
        "mu_s_prime_p_prime": model.mu_s_prime_p_prime,
        "include_exchange": model.include_exchange,
        "include_creation": model.include_creation,
        "vbar": model.vbar,
        "n_atoms": n_atoms,
        "T": T,
        "seed": seed,
        "species": species,
        "species_split": None if species_split is None else list(species_split),
        "speed": speed,
        "rebuild_dt": rebuild_dt,
        "tol": tol,
    }
    return SpectrumCurve(
        detunings=grid,
        yields=np.clip(mean, 0.0, 1.0),
        std_errors=sem,
        n_configs=n_configs,
        metadata=metadata,
    )


def gaussian_convolve(curve: SpectrumCurve, profile: GaussianProfileSpec) -> SpectrumCurve:
    """Average the homogeneous curve over a Gaussian cloud profile.

    Evaluates f_G(d) = int_0^umax f(d e^{u^2} / (2 sqrt 2)) u^2 e^{-u^2} du
    normalized by the same kernel integral, with f linearly interpolated on
    its grid and taken as 0 outside it.  The zero padding is recorded in the
    metadata as the largest kernel mass fraction that fell outside the grid,
    and a warning fires when it is large enough to bias the curve.
    """
    u, gl_w = np.polynomial.legendre.leggauss(profile.quadrature_points)
    # map from [-1, 1] to [0, u_max]
    u = 0.5 * profile.r_max_over_sigma * (u + 1.0)
    gl_w = gl_w * 0.5 * profile.r_max_over_sigma
    kernel = gl_w * u**2 * np.exp(-(u**2))
    kernel_total = kernel.sum()
    scale = np.exp(u**2) / (2.0 * np.sqrt(2.0))

    d_in = curve.detunings
    var_in = curve.std_errors**2
    n_out = d_in.size
    yields = np.empty(n_out)
    variances = np.empty(n_out)
    padded = np.zeros(n_out)
    for i, d0 in enumerate(d_in):
        x = d0 * scale
        inside = (x >= d_in[0]) & (x <= d_in[-1])
        padded[i] = kernel[~inside].sum() / kernel_total
        # accumulate interpolation weights so value and error use the same
        # linear map from curve samples to the convolved point
        w_pts = np.zeros(d_in.size)
        xi = x[inside]
        ki = kernel[inside]
        if xi.size:
            right = np.clip(np.searchsorted(d_in, xi), 1, d_in.size - 1)
            left = right - 1
            lam = (xi - d_in[left]) / (d_in[right] - d_in[left])
            np.add.at(w_pts, left, ki * (1.0 - lam))
            np.add.at(w_pts, right, ki * lam)
        yields[i] = (w_pts @ curve.yields) / kernel_total
        variances[i] = (w_pts**2) @ var_in / kernel_total**2

    worst = float(padded.max())
    if worst > 0.01:
        warnings.warn(
            f"convolution sampled detunings beyond the curve grid "
            f"(up to {worst:.1%} of kernel mass zero-padded); widen the grid "
            f"if the curve tail is not negligible",
            stacklevel=2,
        )
    metadata = dict(curve.metadata)
    metadata["convolution"] = {
        "sigma": profile.sigma,
        "quadrature_points": profile.quadrature_points,
        "r_max_over_sigma": profile.r_max_over_sigma,
        "max_zero_padded_kernel_mass": worst,
    }
    return SpectrumCurve(
        detunings=d_in.copy(),
        yields=np.clip(yields, 0.0, 1.0),
        std_errors=np.sqrt(variances),
        n_configs=curve.n_configs,
        metadata=metadata,
    )


def _cross_from(curve: SpectrumCurve, half: float, indices) -> tuple[int, int] | None:
    y = curve.yields
    for i, j in indices:
        if (y[i] - half) * (y[j] - half) <= 0 and y[i] != y[j]:
            return i, j
    return None


def extract_fwhm(curve: SpectrumCurve) -> LineWidthResult:
    """Full width at half maximum with a baseline and error propagation.

    The baseline is the mean of the outermost 10% of grid points on each
    side; the half level sits midway between baseline and peak.  On each
    side the outermost crossing of the half level is located by linear
    interpolation, which is robust to shoulders between the crossings and
    the peak.  The uncertainty propagates the per-point standard errors of
    the two bracketing samples and of the half level itself.
    """
    y = curve.yields
    d = curve.detunings
    n = d.size
    if n < 5:
        raise CurveSupportError("need at least 5 grid points to extract a width")
    k = max(1, int(np.ceil(0.1 * n)))
    edge_idx = np.r_[0:k, n - k : n]
    baseline = float(y[edge_idx].mean())
    var_base = float((curve.std_errors[edge_idx] ** 2).sum()) / edge_idx.size**2

    peak_idx = int(np.argmax(y))
    peak = float(y[peak_idx])
    if peak_idx in (0, n - 1) or peak <= baseline:
        raise CurveSupportError(
            "no interior maximum above the baseline; widen the detuning grid"
        )
    half = baseline + 0.5 * (peak - baseline)
    var_half = 0.25 * (float(curve.std_errors[peak_idx] ** 2) + var_base)

    left_pair = _cross_from(curve, half, ((i, i + 1) for i in range(peak_idx)))
    right_pair = _cross_from(
        curve, half, ((i, i + 1) for i in range(n - 2, peak_idx - 1, -1))
    )
    if left_pair is None or right_pair is None:
        side = "left" if left_pair is None else "right"
        raise CurveSupportError(
            f"half-maximum level never crossed on the {side} side; "
            f"widen the detuning grid"
        )

    def interp_cross(i, j):
        y1, y2 = float(y[i]), float(y[j])
        x1, x2 = float(d[i]), float(d[j])
        slope = (x2 - x1) / (y2 - y1)
        x_star = x1 + (half - y1) * slope
        s1, s2 = float(curve.std_errors[i]), float(curve.std_errors[j])
        dxdy1 = (x2 - x1) * (half - y2) / (y2 - y1) ** 2
        dxdy2 = -(x2 - x1) * (half - y1) / (y2 - y1) ** 2
        var = (dxdy1 * s1) ** 2 + (dxdy2 * s2) ** 2 + slope**2 * var_half
        return x_star, var

    left, var_l = interp_cross(*left_pair)
    right, var_r = interp_cross(*right_pair)
    return LineWidthResult(
        fwhm=right - left,
        half_max=half,
        left_cross=left,
        right_cross=right,
        uncertainty=float(np.sqrt(var_l + var_r)),
    )


@dataclass(frozen=True)
class RatioPoint:
    nu: float
    n_first: int
    n_second: int
    width: LineWidthResult


def width_vs_ratio(
    scan: RatioScanSpec,
    model: ModelSpec,
    T: float,
    n_configs: int,
    seed: int,
    grid=None,
    worker_count: int = 1,
    profile: GaussianProfileSpec | None = None,
    tol: float = 1e-8,
) -> list[RatioPoint]:
    """Line width as a function of the initial population imbalance.

    Widths are extracted from homogeneous spectra unless a cloud profile is
    given.  All imbalance points share one master seed so the underlying
    position ensembles are common and the trend is not hidden by
    configuration noise.
    """
    if model.case is not ModelCase.CASE_II:
        raise ValueError("the population-ratio scan is a Case II construct")
    points = []
    for nu in scan.nu_values:
        n1, n2 = scan.split_for(nu)
        curve = spectrum(
            model,
            scan.n_total,
            T,
            default_detuning_grid() if grid is None else grid,
            n_configs,
            seed,
            species_split=(n1, n2),
            worker_count=worker_count,
            tol=tol,
        )
        if profile is not None:
            curve = gaussian_convolve(curve, profile)
        points.append(RatioPoint(nu=nu, n_first=n1, n_second=n2, width=extract_fwhm(curve)))
    return points


@dataclass(frozen=True)
class FiniteSizeResult:
    sizes: tuple
    widths: tuple
    uncertainties: tuple
    extrapolated_width: float  # linear-in-1/N intercept
    fit_residual: float


def finite_size_scan(
    model: ModelSpec,
    sizes,
    T: float,
    grid,
    n_configs: int,
    seed: int,
    worker_count: int = 1,
    tol: float = 1e-8,
) -> FiniteSizeResult:
    """Width per system size plus a linear-in-1/N extrapolation."""
    sizes = list(sizes)
    if sizes != sorted(sizes) or len(sizes) < 2:
        raise ValueError("sizes must be ascending and contain at least two entries")
    widths, uncs = [], []
    for n_atoms in sizes:
        curve = spectrum(
            model, n_atoms, T, grid, n_configs, seed, worker_count=worker_count, tol=tol
        )
        res = extract_fwhm(curve)
        widths.append(res.fwhm)
        uncs.append(res.uncertainty)
    inv_n = 1.0 / np.asarray(sizes, dtype=float)
    coeffs = np.polyfit(inv_n, np.asarray(widths), 1)
    fitted = np.polyval(coeffs, inv_n)
    residual = float(np.sqrt(np.mean((fitted - np.asarray(widths)) ** 2)))
    return FiniteSizeResult(
        sizes=tuple(sizes),
        widths=tuple(widths),
        uncertainties=tuple(uncs),
        extrapolated_width=float(coeffs[1]),
        fit_residual=residual,
    )
