"""Frozen dipolar gas: exact sector dynamics and line-shape statistics.

The package simulates small ensembles of randomly placed, effectively
frozen atoms coupled by 1/r^3 dipolar interactions, and extracts excitation
spectra whose widths are controlled by rare close pairs rather than by
transport.  All public interfaces use mean-interaction units: energies are
measured in units of (transition-moment product) x density, times in the
inverse of that, and the density is fixed to one atom per unit volume.
"""

from .dynamics import (
    EvolutionReport,
    StiffnessError,
    ToyBandHistogram,
    eigenvalue_histogram,
    evolve,
    evolve_time_dependent,
    species_fraction,
    survival_probability,
    toy_coupling_matrix,
    toy_survival_curve,
)
from .geometry import (
    AtomConfiguration,
    SingularGeometryError,
    advance_positions,
    box_edge_for,
    configuration_seed,
    dipolar_coupling,
    load_configuration,
    min_image_displacement,
    minimum_pair_distance,
    nearest_neighbor_distances,
    pair_displacements,
    sample_configuration,
    save_configuration,
)
from .hilbert import (
    HamiltonianTemplate,
    ModelCase,
    ModelSpec,
    SectorBasis,
    SparseHamiltonian,
    build_hamiltonian,
    creation_counter,
    enumerate_basis,
)
from .pair_statistics import (
    PairDistributionKind,
    cumulative_p,
    density_tail_constant,
    dipolar_density_small_shift_limit,
    empirical_pair_cdf,
    nearest_neighbor_mean,
    nearest_neighbor_median,
    nearest_neighbor_pdf,
    pair_density_dipolar,
    pair_density_isotropic,
    shift_distribution_table,
)
from .spectroscopy import (
    CurveSupportError,
    FiniteSizeResult,
    GaussianProfileSpec,
    LineWidthResult,
    RatioPoint,
    RatioScanSpec,
    SpectrumCurve,
    default_detuning_grid,
    extract_fwhm,
    finite_size_scan,
    gaussian_convolve,
    observable_species,
    spectrum,
    width_vs_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "AtomConfiguration",
    "CurveSupportError",
    "EvolutionReport",
    "FiniteSizeResult",
    "GaussianProfileSpec",
    "HamiltonianTemplate",
    "LineWidthResult",
    "ModelCase",
    "ModelSpec",
    "PairDistributionKind",
    "RatioPoint",
    "RatioScanSpec",
    "SectorBasis",
    "SingularGeometryError",
    "SparseHamiltonian",
    "SpectrumCurve",
    "StiffnessError",
    "ToyBandHistogram",
    "advance_positions",
    "box_edge_for",
    "build_hamiltonian",
    "configuration_seed",
    "creation_counter",
    "cumulative_p",
    "default_detuning_grid",
    "density_tail_constant",
    "dipolar_coupling",
    "dipolar_density_small_shift_limit",
    "eigenvalue_histogram",
    "empirical_pair_cdf",
    "enumerate_basis",
    "evolve",
    "evolve_time_dependent",
    "extract_fwhm",
    "finite_size_scan",
    "gaussian_convolve",
    "load_configuration",
    "min_image_displacement",
    "minimum_pair_distance",
    "nearest_neighbor_distances",
    "nearest_neighbor_mean",
    "nearest_neighbor_median",
    "nearest_neighbor_pdf",
    "observable_species",
    "pair_density_dipolar",
    "pair_density_isotropic",
    "pair_displacements",
    "sample_configuration",
    "save_configuration",
    "shift_distribution_table",
    "species_fraction",
    "spectrum",
    "survival_probability",
    "toy_coupling_matrix",
    "toy_survival_curve",
    "width_vs_ratio",
]
