"""Norm-preserving time evolution and observable extraction.

The propagator approximates exp(-iHT)psi with a restarted Lanczos scheme:
at each substep a small Krylov basis is built from the current state, the
tridiagonal projection is diagonalized, and the substep size is chosen so
the standard residual estimate stays within a per-unit-time error budget.
Close pairs make ||H|| large (there is deliberately no minimum-separation
cutoff), so substep counts scale with ||H||T; the scheme only shrinks the
step, never loses unitarity, because every substep is an exact exponential
inside the Krylov subspace.

The toy exchange model is handled separately by dense diagonalization:
its sector dimension equals the atom number, where eigendecomposition is
both exact and cheaper than iterating.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .geometry import (
    AtomConfiguration,
    advance_positions,
    configuration_seed,
    dipolar_coupling,
    pair_displacements,
    sample_configuration,
)
from .hilbert import ModelCase, ModelSpec, SectorBasis, SparseHamiltonian

_KRYLOV_M = 30
_NORM_TOL = 1e-9


class StiffnessError(RuntimeError):
    """Substep size underflowed; reports the offending pair separation."""


@dataclass
class EvolutionReport:
    final_state: np.ndarray
    norm_drift: float  # largest |norm - 1| seen before renormalization
    steps_taken: int  # accepted substeps
    matvec_count: int
    wall_time: float


def _check_state(psi: np.ndarray, dim: int) -> np.ndarray:
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if psi.shape != (dim,):
        raise ValueError(f"state must have shape ({dim},), got {psi.shape}")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"initial state norm {nrm} is not 1")
    return psi / nrm


def evolve(
    H: SparseHamiltonian, psi0: np.ndarray, T: float, tol: float = 1e-8
) -> EvolutionReport:
    """Propagate psi0 by exp(-iHT) with controlled local error.

    Negative T is allowed (backward evolution); the reversibility property
    evolve(T) then evolve(-T) returning the start state depends on it.
    """
    t_start = time.perf_counter()
    if tol <= 0:
        raise ValueError("tol must be > 0")
    psi = _check_state(psi0, H.dim)
    if not np.isfinite(H.matrix.data).all():
        raise ValueError("Hamiltonian contains non-finite entries")
    if T == 0:
        return EvolutionReport(psi, 0.0, 0, 0, time.perf_counter() - t_start)

    A = H.matrix
    dim = H.dim
    m_max = min(_KRYLOV_M, dim)
    abs_T = abs(T)
    sign = 1.0 if T > 0 else -1.0
    done = 0.0
    # Krylov exp converges once the basis size passes ||H|| tau, so aim the
    # first substep there; the error loop below corrects any optimism.
    tau = min(abs_T, 0.6 * m_max / max(H.norm_bound, 1e-300))
    max_drift = 0.0
    steps = 0
    matvecs = 0
    V = np.empty((m_max + 1, dim), dtype=np.complex128)
    Vc = np.empty_like(V)

    # Residual probes let externally capped substeps (segment boundaries in
    # moving-atom runs, tail ends of an interval) stop growing the basis
    # early.  Free-running steps always use the full block so the step size
    # keeps adapting upward; probing there would freeze it at the marginal
    # length.  Probing costs one small eigh, so for big matrices, where each
    # saved matvec is expensive, probe at every size.
    if dim >= 20_000:
        probe_sizes = frozenset(range(4, m_max))
    else:
        probe_sizes = frozenset(range(6, m_max, 4))
    natural_tau = 0.6 * m_max / max(H.norm_bound, 1e-300)

    while done < abs_T * (1.0 - 1e-12):
        V[0] = psi
        Vc[0] = psi.conj()
        alphas = np.empty(m_max)
        betas = np.empty(m_max)
        k = m_max
        breakdown = False
        step_tau = min(tau, abs_T - done)
        step_budget = tol * step_tau / abs_T
        probing = step_tau < 0.5 * natural_tau
        for j in range(m_max):
            w = A.dot(V[j])
            matvecs += 1
            # single classical Gram-Schmidt pass against the whole block:
            # cheap at this basis size and keeps the tridiagonal projection
            # trustworthy even after eigenpairs converge
            coeffs = Vc[: j + 1] @ w
            w -= V[: j + 1].T @ coeffs
            alphas[j] = coeffs[j].real
            beta = np.linalg.norm(w)
            betas[j] = beta
            if beta <= 1e-12 * max(1.0, H.norm_bound):
                k = j + 1
                breakdown = True
                break
            V[j + 1] = w / beta
            Vc[j + 1] = V[j + 1].conj()
            if probing and j + 1 in probe_sizes:
                tri_p = np.diag(alphas[: j + 1])
                if j > 0:
                    tri_p += np.diag(betas[:j], 1) + np.diag(betas[:j], -1)
                theta_p, S_p = np.linalg.eigh(tri_p)
                y_p = S_p @ (np.exp(-1j * sign * theta_p * step_tau) * S_p[0, :])
                if abs(beta * y_p[j]) <= step_budget:
                    k = j + 1
                    break

        tri = np.diag(alphas[:k])
        if k > 1:
            off = betas[: k - 1]
            tri += np.diag(off, 1) + np.diag(off, -1)
        theta, S = np.linalg.eigh(tri)
        weights = S[0, :]  # current state is the first Lanczos vector

        if breakdown:
            # psi lives in an invariant subspace: the exponential is exact
            # there for any step, so finish the interval outright
            this_tau = abs_T - done
            y = S @ (np.exp(-1j * sign * theta * this_tau) * weights)
        else:
            this_tau = min(tau, abs_T - done)
            while True:
                y = S @ (np.exp(-1j * sign * theta * this_tau) * weights)
                err = abs(betas[k - 1] * y[k - 1])
                budget = tol * this_tau / abs_T
                if err <= budget:
                    break
                if this_tau <= abs_T * 1e-13:
                    raise StiffnessError(
                        f"substep underflow at t={sign * done:.6g} of T={T:.6g} "
                        f"(residual {err:.2e} > budget {budget:.2e}); "
                        f"minimum pair separation in this configuration is "
                        f"{H.min_pair_distance:.4e}"
                    )
                this_tau *= 0.5
            # widen the next attempt when the budget was loose
            if err <= 0.1 * budget:
                tau = this_tau * 1.8
            else:
                tau = this_tau

        psi = V[:k].T @ y
        nrm = np.linalg.norm(psi)
        max_drift = max(max_drift, abs(nrm - 1.0))
        psi /= nrm
        done += this_tau
        steps += 1

    if max_drift > _NORM_TOL:
        raise StiffnessError(
            f"norm drift {max_drift:.2e} exceeded {_NORM_TOL}; "
            f"minimum pair separation {H.min_pair_distance:.4e}"
        )
    return EvolutionReport(psi, max_drift, steps, matvecs, time.perf_counter() - t_start)


def evolve_time_dependent(
    model: ModelSpec,
    basis: SectorBasis,
    config: AtomConfiguration,
    psi0: np.ndarray,
    T: float,
    rebuild_dt: float | None = None,
    tol: float = 1e-8,
) -> EvolutionReport:
    """Evolution with ballistically moving atoms.

    The Hamiltonian is frozen over windows of length ``rebuild_dt``
    (default T/200), rebuilt from the atom positions at each window's
    midpoint, and the state is propagated window by window.  Positions are
    always advanced from the initial configuration, so there is no drift
    accumulation; halving rebuild_dt is the standard self-convergence
    check.
    """
    if config.velocities is None:
        raise ValueError("evolve_time_dependent needs a configuration with velocities")
    if T < 0:
        raise ValueError("T must be >= 0 for moving-atom evolution")
    if rebuild_dt is None:
        rebuild_dt = T / 200.0
    if rebuild_dt <= 0:
        raise ValueError("rebuild_dt must be > 0")

    t_start = time.perf_counter()
    template = basis.template
    n_seg = max(1, int(np.ceil(T / rebuild_dt - 1e-12)))
    dt = T / n_seg
    psi = _check_state(psi0, basis.dim)
    drift = 0.0
    steps = 0
    matvecs = 0
    for i in range(n_seg):
        snapshot = advance_positions(config, (i + 0.5) * dt)
        H = template.assemble(snapshot, detuning=model.detuning, model=model)
        rep = evolve(H, psi, dt, tol=tol)
        psi = rep.final_state
        drift = max(drift, rep.norm_drift)
        steps += rep.steps_taken
        matvecs += rep.matvec_count
    return EvolutionReport(psi, drift, steps, matvecs, time.perf_counter() - t_start)


def survival_probability(psi_t: np.ndarray, psi0: np.ndarray) -> float:
    """|<psi_t|psi0>|^2, clipped to [0, 1] against rounding."""
    a = np.asarray(psi_t).ravel()
    b = np.asarray(psi0).ravel()
    if a.shape != b.shape:
        raise ValueError("state dimensions differ")
    p = abs(np.vdot(a, b)) ** 2
    return float(min(max(p, 0.0), 1.0))


def species_fraction(psi: np.ndarray, basis: SectorBasis, species: str) -> float:
    """Mean fraction of atoms found in ``species`` for the given state."""
    counts = basis.species_counts(species)
    psi = np.asarray(psi)
    if psi.shape != (basis.dim,):
        raise ValueError(f"state must have shape ({basis.dim},)")
    weights = np.abs(psi) ** 2
    return float(weights @ counts / basis.n_atoms)


def toy_coupling_matrix(config: AtomConfiguration, mu_sp: float = 1.0) -> np.ndarray:
    """Dense hopping matrix of the single-excitation exchange model.

    Entry (j, k) is the dipolar coupling (with c_d = mu_sp^2) between atoms
    j and k; the diagonal is zero since exchange is resonant.
    """
    n = config.n_atoms
    pairs, disp = pair_displacements(config)
    v = dipolar_coupling(disp, mu_sp**2)
    M = np.zeros((n, n))
    M[pairs[:, 0], pairs[:, 1]] = v
    M[pairs[:, 1], pairs[:, 0]] = v
    return M


def toy_survival_curve(
    n_atoms: int,
    times: np.ndarray,
    n_configs: int,
    seed: int,
    mu_sp: float = 1.0,
    atom: int = 0,
):
    """Ensemble-averaged probability that the s excitation is still on its atom.

    Each configuration is diagonalized densely (exact at this sector size);
    the survival amplitude is sum_k U[atom,k]^2 exp(-i E_k t).  Times are in
    mean-interaction units (inverse mu_sp^2 at unit density).  Returns
    (times, mean, standard error).
    """
    times = np.asarray(times, dtype=float) / mu_sp**2
    surv = np.empty((n_configs, times.size))
    for i in range(n_configs):
        config = sample_configuration(n_atoms, configuration_seed(seed, i))
        M = toy_coupling_matrix(config, mu_sp)
        energies, U = np.linalg.eigh(M)
        w = U[atom, :] ** 2
        amp = np.exp(-1j * np.outer(times, energies)) @ w
        surv[i] = np.abs(amp) ** 2
    times = times * mu_sp**2
    mean = surv.mean(axis=0)
    sem = surv.std(axis=0, ddof=1) / np.sqrt(n_configs) if n_configs > 1 else np.zeros_like(mean)
    return times, mean, sem


@dataclass(frozen=True)
class ToyBandHistogram:
    """Pooled eigen-energy histogram of the toy model over an ensemble.

    The pooled spectrum has 1/E^2 tails from close pairs, so two width
    statistics are reported: ``central_90_width`` (the 5%-95% quantile
    spread, dominated by those tails) and ``half_max_width`` (the width of
    the binned band at half its peak count, the visible band scale).
    Binning covers the central-90% window; ``n_outside`` counts the tail
    eigenvalues beyond it, which would otherwise stretch the bins until
    the band collapsed into a single one.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    central_90_width: float  # spread between the 5% and 95% quantiles
    half_max_width: float  # band width at half the peak bin count
    n_eigenvalues: int
    n_outside: int  # eigenvalues beyond the binning window


def eigenvalue_histogram(
    model,
    n_atoms: int,
    n_configs: int,
    bins: int,
    seed: int,
) -> ToyBandHistogram:
    """Dense-diagonalization eigenvalue census of the toy exchange model.

    Energies are reported in mean-interaction units (mu_sp^2 at unit
    density), so histograms with different moments line up.
    """
    if model.case is not ModelCase.TOY_EXCHANGE:
        raise ValueError("eigenvalue_histogram is defined for the toy exchange model")
    mu_sp = model.mu_sp
    pool = np.empty(n_configs * n_atoms)
    for i in range(n_configs):
        config = sample_configuration(n_atoms, configuration_seed(seed, i))
        M = toy_coupling_matrix(config, mu_sp)
        pool[i * n_atoms : (i + 1) * n_atoms] = np.linalg.eigvalsh(M) / mu_sp**2
    lo, hi = np.quantile(pool, [0.05, 0.95])
    counts, edges = np.histogram(pool, bins=bins, range=(lo, hi))
    if counts.max(initial=0) > 0:
        centers = 0.5 * (edges[:-1] + edges[1:])
        band = centers[counts >= 0.5 * counts.max()]
        half_max_width = float(band[-1] - band[0])
    else:
        half_max_width = 0.0
    return ToyBandHistogram(
        bin_edges=edges,
        counts=counts,
        central_90_width=float(hi - lo),
        half_max_width=half_max_width,
        n_eigenvalues=pool.size,
        n_outside=int(pool.size - counts.sum()),
    )
