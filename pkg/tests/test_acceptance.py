"""End-to-end acceptance checks, one test per headline result.

Each test asserts a physics-level observable at a documented tolerance.
Heavy ensembles are shared through module-scoped fixtures; tests that run
at a reduced system size or configuration count say so in their docstrings
together with the tolerance that applies there. The full-size variants
live at the bottom of the file behind the slow marker.

A note on detuning grids: the width extractor estimates its baseline from
the outermost decile of grid points on each side. The pair-fluctuation
tail of these spectra decays only like 1/detuning, so a grid that stops
where the tail is still a sizable fraction of the peak puts the baseline
on a pedestal and compresses every extracted width. Grids below are
chosen per target: dense in the crossing region, and extended far enough
that the baseline is near the true floor wherever a width ratio is the
quantity under test.
"""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import eigh

from frozengas import (
    GaussianProfileSpec,
    ModelCase,
    ModelSpec,
    RatioScanSpec,
    extract_fwhm,
    gaussian_convolve,
    spectrum,
    width_vs_ratio,
)
from frozengas.dynamics import (
    evolve,
    eigenvalue_histogram,
    species_fraction,
    toy_survival_curve,
)
from frozengas.geometry import AtomConfiguration, sample_configuration
from frozengas.hilbert import (
    all_p_word,
    build_hamiltonian,
    enumerate_basis,
    species_split_word,
)
from frozengas.pair_statistics import (
    PairDistributionKind,
    cumulative_p,
    density_tail_constant,
    dipolar_density_small_shift_limit,
    nearest_neighbor_mean,
    nearest_neighbor_median,
    nearest_neighbor_pdf,
    pair_density_dipolar,
    pair_density_isotropic,
)

pytestmark = pytest.mark.acceptance

MODEL_1 = ModelSpec(case=ModelCase.CASE_I, mu_sp=1.02, mu_sp_prime=0.98)
MODEL_1_NOEX = ModelSpec(
    case=ModelCase.CASE_I, mu_sp=1.02, mu_sp_prime=0.98, include_exchange=False
)
MODEL_2 = ModelSpec(case=ModelCase.CASE_II, mu_sp=2.0, mu_s_prime_p_prime=0.5)
MODEL_2_NOEX = ModelSpec(
    case=ModelCase.CASE_II, mu_sp=2.0, mu_s_prime_p_prime=0.5, include_exchange=False
)

# two-species ensembles: dense through the crossing region, outer block to
# +-80 so the runtime budget of the reduced-size run holds
GRID_CASE1 = np.sort(np.concatenate([
    np.arange(-24.0, 25.0, 2.0),
    [-80, -72, -64, -56, -48, -40, -32, 32, 40, 48, 56, 64, 72, 80],
]))

# cloud-convolution input: the kernel samples the curve at rescaled
# detunings, so the tail must be measured out to +-260 before convolving
GRID_CONV = np.sort(np.concatenate([
    np.arange(-24.0, 25.0, 2.0),
    [-260, -200, -150, -110, -80, -64, -48, -40, -32,
     32, 40, 48, 64, 80, 110, 150, 200, 260],
]))

# four-state ensembles: widths are about 15-25 here, tail block to +-100
GRID_CASE2 = np.sort(np.concatenate([
    np.arange(-10.0, 10.001, 1.0),
    [-100, -80, -64, -48, -40, -32, -24, -20, -16, -14, -12,
     12, 14, 16, 20, 24, 32, 40, 48, 64, 80, 100],
]))

# motional-broadening pair: a pedestal baseline compresses both widths by
# about 10%, so the outer block reaches +-240 to keep the comparison clean
GRID_MOTION = np.sort(np.concatenate([
    np.arange(-20.0, 20.001, 2.0),
    [-240, -180, -120, -80, -56, -40, -28, -24, 24, 28, 40, 56, 80, 120, 180, 240],
]))

T_CASE1 = 3.4
T_CASE2 = 0.36


@pytest.fixture(scope="module")
def case1_pair():
    """Reduced-size two-species ensembles: N=8, 200 configurations.

    Shared by the homogeneous-width, tail-yield, and runtime checks.
    """
    t0 = time.perf_counter()
    on = spectrum(MODEL_1, n_atoms=8, T=T_CASE1, grid=GRID_CASE1,
                  n_configs=200, seed=200)
    off = spectrum(MODEL_1_NOEX, n_atoms=8, T=T_CASE1, grid=GRID_CASE1,
                   n_configs=200, seed=200)
    return {"on": on, "off": off, "elapsed": time.perf_counter() - t0}


@pytest.fixture(scope="module")
def conv_pair():
    """Tail-extended two-species ensembles for cloud averaging.

    N=8 with 100 configurations on the +-260 grid; the extra tail points
    feed the convolution kernel instead of zero padding.
    """
    on = spectrum(MODEL_1, n_atoms=8, T=T_CASE1, grid=GRID_CONV,
                  n_configs=100, seed=201)
    off = spectrum(MODEL_1_NOEX, n_atoms=8, T=T_CASE1, grid=GRID_CONV,
                   n_configs=100, seed=201)
    return {"on": on, "off": off}


@pytest.fixture(scope="module")
def case2_pair():
    """Documented scaled four-state ensembles: N=14 (7+7), 140 configurations."""
    on = spectrum(MODEL_2, n_atoms=14, T=T_CASE2, grid=GRID_CASE2,
                  n_configs=140, seed=300, species_split=(7, 7))
    off = spectrum(MODEL_2_NOEX, n_atoms=14, T=T_CASE2, grid=GRID_CASE2,
                   n_configs=140, seed=300, species_split=(7, 7))
    return {"on": on, "off": off}


@pytest.fixture(scope="module")
def motion_pair():
    """Frozen and moving ensembles with identical initial geometry.

    Positions are drawn before velocities from the same seed, so the two
    ensembles differ only by the motion. The rebuild window T/100 is
    converged: against T/200 the per-config yields agree to 4e-5, against
    T/400 to 4e-6 (probe at seed 400, recorded while fixing the window).
    """
    frozen = spectrum(MODEL_1, n_atoms=8, T=T_CASE1, grid=GRID_MOTION,
                      n_configs=60, seed=400)
    moving = spectrum(MODEL_1, n_atoms=8, T=T_CASE1, grid=GRID_MOTION,
                      n_configs=60, seed=400, speed=0.05,
                      rebuild_dt=T_CASE1 / 100)
    return {"frozen": frozen, "moving": moving}


@pytest.fixture(scope="module")
def imbalance_scan():
    """Width-vs-imbalance scan at N=14, 100 configurations, its own seed.

    Seeded independently of the four-state pair so the balanced point
    doubles as a cross-check between two unrelated ensembles.
    """
    scan = RatioScanSpec(n_total=14, nu_values=(0.0, 2 / 7, 4 / 7, 6 / 7))
    return width_vs_ratio(scan, MODEL_2, T_CASE2, n_configs=100, seed=301,
                          grid=GRID_CASE2)


def test_criterion_01_toy_survival_decay():
    """One excitation among 256 atoms: survival halves by t = 0.2.

    The ensemble mean (200 configurations) must pass 0.5 +- 0.1 at t = 0.2
    and decay monotonically onto a plateau, in under five minutes.
    """
    t0 = time.perf_counter()
    times = np.linspace(0.0, 1.0, 41)
    _, mean, _ = toy_survival_curve(n_atoms=256, times=times, n_configs=200,
                                    seed=101)
    elapsed = time.perf_counter() - t0

    assert mean[0] == pytest.approx(1.0, abs=1e-12)
    s02 = float(mean[times.searchsorted(0.2)])
    assert 0.4 <= s02 <= 0.6, f"survival at t=0.2 is {s02:.3f}, outside 0.5 +- 0.1"

    # monotone decay onto a plateau, judged against the ensemble noise:
    # upticks must stay at noise scale, the drop must be front-loaded, and
    # the drift after t = 0.5 must be small next to the early decay
    assert np.all(np.diff(mean) < 0.02), "survival rises beyond noise scale"
    i_half = times.searchsorted(0.5)
    early_drop = float(mean[0] - mean[i_half])
    late_drift = abs(float(mean[i_half] - mean[-1]))
    assert early_drop > 0.5, f"only dropped {early_drop:.2f} by t=0.5"
    assert late_drift < 0.2 * early_drop, (
        f"still drifting after t=0.5: {late_drift:.3f} vs early drop {early_drop:.3f}"
    )
    assert elapsed < 300.0, f"toy decay took {elapsed:.0f}s, budget is 300s"


def test_criterion_02_toy_interaction_band_width():
    """The 256-atom hopping band is about 5 mean-interaction units wide.

    The binned histogram's half-maximum width lands there (200
    configurations, under ten minutes). The stated acceptance statistic,
    however, is the central-90% quantile width, and that quantity is
    dominated by the 1/E^2 close-pair tail of the pooled spectrum: about
    10% of the eigenvalues sit beyond +-32, so the 5%-95% quantile spread
    is an order of magnitude wider than the band and cannot meet a 5 +- 2
    tolerance. The final assertion keeps the stated statistic and fails;
    the half-maximum check above it records that the band itself is
    reproduced.
    """
    t0 = time.perf_counter()
    toy = ModelSpec(case=ModelCase.TOY_EXCHANGE)
    hist = eigenvalue_histogram(toy, n_atoms=256, n_configs=200, bins=201,
                                seed=102)
    elapsed = time.perf_counter() - t0

    assert elapsed < 600.0, f"band histogram took {elapsed:.0f}s, budget is 600s"
    assert 3.0 <= hist.half_max_width <= 7.0, (
        f"band half-maximum width {hist.half_max_width:.2f} outside 5 +- 2"
    )
    assert 3.0 <= hist.central_90_width <= 7.0, (
        f"central-90% quantile width {hist.central_90_width:.2f} outside 5 +- 2 "
        f"(half-maximum band width {hist.half_max_width:.2f} is inside; the "
        f"quantile spread is close-pair-tail-dominated by construction)"
    )


def test_criterion_03_homogeneous_widths_with_and_without_exchange(case1_pair):
    """Exchange broadens the two-species line by roughly half.

    Reduced-size run (N=8, 200 configurations) with tolerance +-30% on the
    full-size width targets of 35 and 25: the exchange-on width must land
    in [24.5, 45.5], exchange-off in [17.5, 32.5], their ratio in
    [1.2, 1.8], and the pair of ensembles must build in under 30 minutes.
    """
    w_on = extract_fwhm(case1_pair["on"])
    w_off = extract_fwhm(case1_pair["off"])
    ratio = w_on.fwhm / w_off.fwhm

    assert 24.5 <= w_on.fwhm <= 45.5, f"exchange-on width {w_on.fwhm:.2f}"
    assert 17.5 <= w_off.fwhm <= 32.5, f"exchange-off width {w_off.fwhm:.2f}"
    assert 1.2 <= ratio <= 1.8, f"width ratio {ratio:.3f} outside [1.2, 1.8]"
    assert case1_pair["elapsed"] < 1800.0, (
        f"reduced run took {case1_pair['elapsed']:.0f}s, budget is 1800s"
    )


@pytest.mark.filterwarnings("ignore:convolution sampled detunings")
def test_criterion_04_cloud_averaged_widths_and_sigma_invariance(conv_pair):
    """Cloud averaging narrows both lines but keeps the exchange ordering.

    Reduced-size run (N=8, 100 configurations) with tolerance +-30% on the
    full-size targets of 30 and 20: convolved widths must land in [21, 39]
    and [14, 26]. The cloud size cancels out of the dimensionless kernel,
    so sigma = 250 and sigma = 500 must give the same curve to quadrature
    tolerance.
    """
    conv_on = gaussian_convolve(conv_pair["on"], GaussianProfileSpec(sigma=500.0))
    conv_off = gaussian_convolve(conv_pair["off"], GaussianProfileSpec(sigma=500.0))
    w_on = extract_fwhm(conv_on)
    w_off = extract_fwhm(conv_off)

    assert 21.0 <= w_on.fwhm <= 39.0, f"convolved exchange-on width {w_on.fwhm:.2f}"
    assert 14.0 <= w_off.fwhm <= 26.0, f"convolved exchange-off width {w_off.fwhm:.2f}"
    assert w_on.fwhm > w_off.fwhm, "cloud averaging must keep the exchange ordering"

    conv_on_250 = gaussian_convolve(conv_pair["on"], GaussianProfileSpec(sigma=250.0))
    np.testing.assert_allclose(conv_on_250.yields, conv_on.yields,
                               rtol=0.0, atol=1e-10)
    w_on_250 = extract_fwhm(conv_on_250)
    assert abs(w_on_250.fwhm - w_on.fwhm) < 1e-9, "width must be sigma-invariant"


def test_criterion_05_four_state_widths_exchange_ordering(case2_pair):
    """Exchange broadening survives in the four-state model.

    The full-size system (10+10, a 184,756-dimensional sector) costs weeks
    of CPU here, so this is the documented scaled run: N=14 (7+7), 140
    configurations. It must preserve the with/without-exchange ordering
    with a width ratio of at least 1.5. The full-size path stays available
    through the slow pipeline test below and the command line.
    """
    w_on = extract_fwhm(case2_pair["on"])
    w_off = extract_fwhm(case2_pair["off"])
    ratio = w_on.fwhm / w_off.fwhm

    assert w_on.fwhm > w_off.fwhm, (
        f"exchange must broaden: {w_on.fwhm:.2f} vs {w_off.fwhm:.2f}"
    )
    assert ratio >= 1.5, f"four-state width ratio {ratio:.3f} below 1.5"


def test_criterion_06_pair_shift_closed_forms():
    """Nearest-neighbor shift laws match their analytic limits.

    Small-shift plateau, large-shift tail coefficients, the heavy-tail
    weight beyond shift 40, and the isotropic cumulative in closed form.
    """
    plateau = math.sqrt(3.0) / (4.0 * math.pi)
    assert dipolar_density_small_shift_limit() == pytest.approx(plateau, abs=1e-12)
    assert pair_density_dipolar(1e-6) == pytest.approx(plateau, abs=1e-3)

    big = 1e4
    assert big**2 * pair_density_isotropic(big) == pytest.approx(
        4.0 * math.pi / 3.0, rel=1e-3
    )
    assert big**2 * pair_density_dipolar(big) == pytest.approx(
        16.0 * math.pi / (9.0 * math.sqrt(3.0)), rel=1e-3
    )
    assert density_tail_constant(PairDistributionKind.ISOTROPIC) == pytest.approx(
        4.0 * math.pi / 3.0, abs=1e-12
    )

    tail_40 = 1.0 - cumulative_p(40.0, PairDistributionKind.DIPOLAR)
    assert 0.07 <= tail_40 <= 0.11, f"dipolar tail weight beyond 40 is {tail_40:.4f}"

    for delta in (0.5, 1.0, 2.0, 5.0, 10.0, 40.0, 100.0):
        exact = math.exp(-4.0 * math.pi / (3.0 * delta))
        assert cumulative_p(delta, PairDistributionKind.ISOTROPIC) == pytest.approx(
            exact, abs=1e-6
        )


def test_criterion_07_far_detuned_yield_matches_pair_tail(case1_pair):
    """The yield far out on the line sits at the close-pair tail weight.

    At detuning 40 the exchange-on homogeneous yield must equal
    0.08 +- 0.03, the same weight the closed-form pair tail carries there.
    """
    y40, _ = case1_pair["on"].at(40.0)
    assert 0.05 <= y40 <= 0.11, f"yield at detuning 40 is {y40:.4f}"


def test_criterion_08_motional_broadening(motion_pair):
    """Atoms drifting at speed 0.05 broaden the line by 20 +- 10 percent.

    Paired ensembles (same seed, hence identical initial positions) at N=8
    with 60 configurations on the +-240 grid. This check currently fails
    and is kept at its stated tolerance to document the shortfall rather
    than hide it. Constant-speed straight-line motion leaves the atom
    positions uniformly distributed at every instant, so the static pair
    statistics that set this line shape are unchanged; what survives are
    non-adiabatic sweep corrections, and at speed 0.05 they lift the
    spectrum nearly uniformly (+5% at the peak, +7% at the flanks, +20%
    only in the far tail beyond detuning 80), moving the half-maximum
    crossings by under one percent. A 20% width gain would need the flank
    yields to rise 20% against the peak's own rise, roughly triple what
    motion delivers here; even at four times the speed, where atoms cross
    two thirds of the mean spacing within the evolution window, the width
    grows by only 5%. The propagation itself is converged (see the
    fixture) and responds to speed, so the shortfall is a property of the
    model, not of the integrator.
    """
    w_frozen = extract_fwhm(motion_pair["frozen"])
    w_moving = extract_fwhm(motion_pair["moving"])
    rel = w_moving.fwhm / w_frozen.fwhm - 1.0

    assert 0.10 <= rel <= 0.30, (
        f"motional broadening {100 * rel:.1f}% outside [10%, 30%] "
        f"(frozen {w_frozen.fwhm:.2f}, moving {w_moving.fwhm:.2f})"
    )


def test_criterion_09_width_grows_with_population_imbalance(imbalance_scan,
                                                            case2_pair):
    """Imbalancing the two species never narrows the four-state line.

    Widths along nu in {0, 2/7, 4/7, 6/7} (N=14, 100 configurations) must
    be nondecreasing within one combined standard error up to nu = 0.8,
    stay within one order of magnitude overall, and the balanced point
    must agree with the independently seeded ensemble of the four-state
    width test within three combined standard errors.
    """
    widths = [p.width.fwhm for p in imbalance_scan]
    errs = [p.width.uncertainty for p in imbalance_scan]
    nus = [p.nu for p in imbalance_scan]

    for i in range(len(widths) - 1):
        if nus[i + 1] > 0.8:
            break
        slack = math.hypot(errs[i], errs[i + 1])
        assert widths[i + 1] >= widths[i] - slack, (
            f"width drops from {widths[i]:.2f} to {widths[i + 1]:.2f} "
            f"between nu={nus[i]:.3f} and nu={nus[i + 1]:.3f}"
        )

    assert max(widths) / min(widths) < 10.0, "order-of-magnitude jump in the scan"

    w_ref = extract_fwhm(case2_pair["on"])
    slack = 3.0 * math.hypot(errs[0], w_ref.uncertainty)
    assert abs(widths[0] - w_ref.fwhm) <= slack, (
        f"balanced-point width {widths[0]:.2f} vs reference {w_ref.fwhm:.2f} "
        f"differs by more than {slack:.2f}"
    )


def test_criterion_10_property_suite():
    """Fast structural and numerical invariants, all in one sweep.

    Hermiticity is exact, propagation conserves the norm to 1e-9 and
    matches a dense-diagonalization oracle to 1e-7, conserved quantities
    hold to 1e-10, sector dimensions match independent combinatorial
    counts, and the two-atom and nearest-neighbor closed forms are
    reproduced to 1e-9. Budget: five minutes.
    """
    t0 = time.perf_counter()

    # sector dimensions against independent counts
    basis_4 = enumerate_basis(MODEL_1, 4, all_p_word(4))
    count_4 = sum(math.comb(4, 2 * k) * math.comb(2 * k, k) for k in range(3))
    assert basis_4.dim == count_4 == 19

    basis_10 = enumerate_basis(MODEL_1, 10, all_p_word(10))
    count_10 = sum(math.comb(10, 2 * k) * math.comb(2 * k, k) for k in range(6))
    assert basis_10.dim == count_10 == 8953

    basis_20 = enumerate_basis(MODEL_2, 20, species_split_word(10, 10))
    count_20 = sum(math.comb(10, k) ** 2 for k in range(11))
    assert basis_20.dim == count_20 == math.comb(20, 10) == 184756

    # Hermiticity, norm conservation, dense oracle on a 141-state sector
    model = ModelSpec(case=ModelCase.CASE_I, mu_sp=1.02, mu_sp_prime=0.98,
                      detuning=3.0)
    config = sample_configuration(6, seed=123)
    basis = enumerate_basis(model, 6, all_p_word(6))
    assert basis.dim == 141
    H = build_hamiltonian(model, basis, config)
    skew = (H.matrix - H.matrix.getH()).tocsr()
    assert skew.nnz == 0 or float(np.abs(skew.data).max()) == 0.0

    psi0 = np.zeros(basis.dim, dtype=complex)
    psi0[basis.index_of_word(all_p_word(6))] = 1.0
    report = evolve(H, psi0, 3.1, tol=1e-10)
    assert abs(report.norm_drift) <= 1e-9

    energies, vectors = eigh(H.matrix.toarray())
    phases = np.exp(-1j * energies * 3.1)
    psi_dense = vectors @ (phases * (vectors.conj().T @ psi0))
    assert float(np.abs(report.final_state - psi_dense).max()) <= 1e-7

    # conserved quantities: created species stay balanced, manifolds hold
    f_s = species_fraction(report.final_state, basis, "s")
    f_sp = species_fraction(report.final_state, basis, "s'")
    f_p = species_fraction(report.final_state, basis, "p")
    assert abs(f_s - f_sp) <= 1e-10
    assert abs(f_s + f_sp + f_p - 1.0) <= 1e-12

    basis_2 = enumerate_basis(MODEL_2, 6, species_split_word(3, 3))
    H_2 = build_hamiltonian(
        ModelSpec(case=ModelCase.CASE_II, mu_sp=2.0, mu_s_prime_p_prime=0.5,
                  detuning=1.5),
        basis_2, sample_configuration(6, seed=124))
    psi0_2 = np.zeros(basis_2.dim, dtype=complex)
    psi0_2[basis_2.index_of_word(species_split_word(3, 3))] = 1.0
    rep_2 = evolve(H_2, psi0_2, 0.9, tol=1e-10)
    f2_s = species_fraction(rep_2.final_state, basis_2, "s")
    f2_p = species_fraction(rep_2.final_state, basis_2, "p")
    f2_pp = species_fraction(rep_2.final_state, basis_2, "p'")
    assert abs(f2_s + f2_p - 0.5) <= 1e-10
    assert abs(f2_p - f2_pp) <= 1e-10

    # two-atom closed form: detuned flopping between pp and the pair state
    model_2atom = ModelSpec(case=ModelCase.CASE_I, mu_sp=1.02, mu_sp_prime=0.98,
                            detuning=2.5)
    edge = 2.0 ** (1.0 / 3.0)
    positions = np.array([[0.2, 0.2, 0.2], [0.7, 0.2, 0.2]])
    pair_config = AtomConfiguration(n_atoms=2, box_edge=edge, positions=positions)
    pair_basis = enumerate_basis(model_2atom, 2, all_p_word(2))
    H_pair = build_hamiltonian(model_2atom, pair_basis, pair_config)
    psi_pair = np.zeros(pair_basis.dim, dtype=complex)
    psi_pair[pair_basis.index_of_word(all_p_word(2))] = 1.0
    T_pair = 1.7
    rep_pair = evolve(H_pair, psi_pair, T_pair, tol=1e-12)
    v = model_2atom.mu_sp * model_2atom.mu_sp_prime / 0.5**3
    g_sq = 2.0 * v * v
    omega = math.sqrt(g_sq + 0.25 * model_2atom.detuning**2)
    f_s_exact = 0.5 * (g_sq / omega**2) * math.sin(omega * T_pair) ** 2
    f_s_pair = species_fraction(rep_pair.final_state, pair_basis, "s")
    assert abs(f_s_pair - f_s_exact) <= 1e-9

    # nearest-neighbor law: normalization, mean, median
    norm, _ = quad(nearest_neighbor_pdf, 0.0, np.inf)
    assert abs(norm - 1.0) <= 1e-9
    mean, _ = quad(lambda r: r * nearest_neighbor_pdf(r), 0.0, np.inf)
    assert abs(mean - nearest_neighbor_mean()) <= 1e-9
    med = nearest_neighbor_median()
    cdf_at_med = 1.0 - math.exp(-4.0 * math.pi / 3.0 * med**3)
    assert abs(cdf_at_med - 0.5) <= 1e-9

    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0, f"property suite took {elapsed:.0f}s, budget is 300s"


@pytest.mark.slow
def test_full_size_homogeneous_and_convolved_widths():
    """Full-size two-species run: N=10, 200 configurations, stated bands.

    Homogeneous widths must land at 35 +- 7 (exchange on) and 25 +- 5
    (off) with the ratio in [1.2, 1.8]; cloud-averaged widths at 30 +- 6
    and 20 +- 4; the far-detuned yield at 0.08 +- 0.03. Uses the
    tail-extended grid so the baseline sits at the true floor. Takes
    several hours.
    """
    on = spectrum(MODEL_1, n_atoms=10, T=T_CASE1, grid=GRID_CONV,
                  n_configs=200, seed=200)
    off = spectrum(MODEL_1_NOEX, n_atoms=10, T=T_CASE1, grid=GRID_CONV,
                   n_configs=200, seed=200)
    w_on = extract_fwhm(on)
    w_off = extract_fwhm(off)

    assert 28.0 <= w_on.fwhm <= 42.0, f"exchange-on width {w_on.fwhm:.2f}"
    assert 20.0 <= w_off.fwhm <= 30.0, f"exchange-off width {w_off.fwhm:.2f}"
    ratio = w_on.fwhm / w_off.fwhm
    assert 1.2 <= ratio <= 1.8, f"width ratio {ratio:.3f}"

    y40, _ = on.at(40.0)
    assert 0.05 <= y40 <= 0.11, f"yield at detuning 40 is {y40:.4f}"

    with pytest.warns(UserWarning, match="convolution sampled detunings"):
        conv_on = gaussian_convolve(on, GaussianProfileSpec(sigma=500.0))
        conv_off = gaussian_convolve(off, GaussianProfileSpec(sigma=500.0))
    wc_on = extract_fwhm(conv_on)
    wc_off = extract_fwhm(conv_off)
    assert 24.0 <= wc_on.fwhm <= 36.0, f"convolved exchange-on width {wc_on.fwhm:.2f}"
    assert 16.0 <= wc_off.fwhm <= 24.0, f"convolved exchange-off width {wc_off.fwhm:.2f}"


@pytest.mark.slow
def test_full_size_four_state_pipeline():
    """The 184,756-dimensional four-state sector runs end to end.

    One configuration at N=20 (10+10) over five detunings: enumeration,
    assembly, and propagation must complete with yields that are finite,
    bounded by the species share, and peaked at zero detuning. Takes tens
    of minutes.
    """
    grid = np.array([-6.0, -2.0, 0.0, 2.0, 6.0])
    curve = spectrum(MODEL_2, n_atoms=20, T=T_CASE2, grid=grid,
                     n_configs=1, seed=300, species_split=(10, 10))
    assert np.all(np.isfinite(curve.yields))
    assert np.all(curve.yields >= 0.0)
    assert np.all(curve.yields <= 0.5)
    assert curve.yields[2] == max(curve.yields)
