"""Instantaneous eigenproblem on a time grid with continuous labels.

At each grid sample the Hermitian h(tau_k) is fully diagonalized. Levels
are then matched across neighbouring samples by maximum eigenvector
overlap (not by eigenvalue order, which would swap labels at avoided
crossings), and eigenvector phases are fixed by discrete parallel
transport: the overlap between consecutive frames of the same level is
made real and positive. In that gauge the numerical Berry connection is
close to zero; models with a closed-form eigensystem can instead keep
their analytic phases.

The nonadiabatic coupling gamma_nm = i <phi_n | d phi_m / dtau> is
computed either by second-order finite differences of the tracked
frames or from the Hamiltonian derivative (off-diagonal only, with the
diagonal taken from finite differences).
"""

import enum
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ._linalg import central_difference
from .errors import AssignmentAmbiguous, DegenerateGap, DerivativeUnavailable
from .grid import TimeGrid
from .model import HamiltonianModel, sample_derivative, sample_hamiltonian

_OVERLAP_FLOOR = 1.0 / np.sqrt(2.0)
_CHUNK = 32768


class Gauge(enum.Enum):
    CONTINUITY_FIXED = "continuity"
    ANALYTIC = "analytic"


class GammaMethod(enum.Enum):
    FINITE_DIFFERENCE = "fd"
    HELLMANN_FEYNMAN = "hf"


@dataclass(frozen=True)
class AdiabaticSpectrum:
    """Tracked instantaneous eigensystem on a grid.

    ``eigenvalues[k, n]`` and ``eigenvectors[k, :, n]`` belong to level
    n at tau_k; level labels are continuous in tau and the vectors are
    unit norm. ``min_gap`` is the smallest level separation encountered.
    """

    grid: TimeGrid
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge: Gauge
    min_gap: float

    @property
    def dimension(self) -> int:
        return self.eigenvectors.shape[-1]


@dataclass(frozen=True)
class NonadiabaticCoupling:
    """Sampled coupling gamma_nm(tau_k) = i <phi_n | phi_m'>.

    Hermitian up to discretization error; the diagonal is the Berry
    connection of each level in the spectrum's gauge.
    """

    grid: TimeGrid
    values: np.ndarray
    method: GammaMethod


def _enforce_min_gap(evals_sorted: np.ndarray, taus: np.ndarray, gap_tol: float) -> float:
    """Smallest adjacent gap of per-sample-sorted eigenvalues."""
    diffs = np.diff(evals_sorted, axis=1)
    min_gap = float(diffs.min())
    if min_gap < gap_tol:
        k, j = np.unravel_index(np.argmin(diffs), diffs.shape)
        raise DegenerateGap(taus[k], (j, j + 1), diffs[k, j], gap_tol)
    return min_gap


def _track_identity_fast(evecs: np.ndarray):
    """Check that max-overlap assignment is the identity everywhere.

    Returns the per-step diagonal overlaps if so, None if any step needs
    the general permutation-composing pass.
    """
    n1, d, _ = evecs.shape
    diag = np.empty((n1 - 1, d), dtype=complex)
    for start in range(0, n1 - 1, _CHUNK):
        stop = min(start + _CHUNK, n1 - 1)
        s = np.einsum("kij,kil->kjl", evecs[start:stop].conj(), evecs[start + 1 : stop + 1])
        a = np.abs(s)
        if not np.array_equal(a.argmax(axis=2), np.broadcast_to(np.arange(d), a.shape[:2])):
            return None
        diag[start:stop] = np.einsum("kjj->kj", s)
    if np.abs(diag).min() < _OVERLAP_FLOOR:
        return None
    return diag


def _track_general(evals: np.ndarray, evecs: np.ndarray, taus: np.ndarray):
    """Sequential max-overlap tracking with permutation composition."""
    n1, d, _ = evecs.shape
    perms = np.empty((n1, d), dtype=np.intp)
    phases = np.empty((n1, d), dtype=complex)
    perms[0] = np.arange(d)
    phases[0] = 1.0
    current = evecs[0].copy()
    for k in range(n1 - 1):
        s = current.conj().T @ evecs[k + 1]
        a = np.abs(s)
        cols = a.argmax(axis=1)
        best = a[np.arange(d), cols]
        if best.min() < _OVERLAP_FLOOR:
            n_bad = int(best.argmin())
            raise AssignmentAmbiguous(
                f"level {n_bad} has best overlap {best.min():.3f} < 1/sqrt(2) "
                f"across tau={taus[k]:.6g} -> {taus[k+1]:.6g}; refine the grid"
            )
        if np.unique(cols).size != d:
            raise AssignmentAmbiguous(
                f"overlap assignment is not a permutation at tau={taus[k+1]:.6g}"
            )
        u = s[np.arange(d), cols]
        phases[k + 1] = np.conj(u) / np.abs(u)
        perms[k + 1] = cols
        current = evecs[k + 1][:, cols] * phases[k + 1][None, :]
    tracked_vecs = np.take_along_axis(evecs, perms[:, None, :], axis=2) * phases[:, None, :]
    tracked_vals = np.take_along_axis(evals, perms, axis=1)
    return tracked_vals, tracked_vecs


def solve_quasistationary(
    model: HamiltonianModel,
    grid: TimeGrid,
    gap_tol: float = 1e-6,
    gauge: Gauge = Gauge.CONTINUITY_FIXED,
) -> AdiabaticSpectrum:
    """Diagonalize h on the grid and return a continuously labeled frame.

    Levels are labeled by ascending eigenvalue at tau = 0 and followed by
    maximum overlap afterwards. With the default gauge, phases are fixed
    by discrete parallel transport; ``Gauge.ANALYTIC`` keeps the model's
    closed-form frame instead (only for models that provide one).

    Raises :class:`DegenerateGap` when any two levels approach within
    ``gap_tol`` and :class:`AssignmentAmbiguous` when the overlap
    matching is not a clean permutation.
    """
    if model.dimension < 2:
        raise ValueError("need at least a two-level model")
    taus = grid.samples

    if gauge is Gauge.ANALYTIC:
        if model.analytic_frame is None:
            raise ValueError(f"model {model.name!r} has no closed-form eigenframe")
        evals, evecs = model.analytic_frame(taus)
        evals = np.asarray(evals, dtype=float)
        evecs = np.asarray(evecs, dtype=complex)
        min_gap = _enforce_min_gap(np.sort(evals, axis=1), taus, gap_tol)
        return AdiabaticSpectrum(grid, evals, evecs, gauge, min_gap)

    h = sample_hamiltonian(model, taus)
    evals, evecs = np.linalg.eigh(h)
    min_gap = _enforce_min_gap(evals, taus, gap_tol)

    diag = _track_identity_fast(evecs)
    if diag is not None:
        # labels never permute; transport phases accumulate multiplicatively
        steps = np.conj(diag) / np.abs(diag)
        phases = np.concatenate([np.ones((1, evecs.shape[2])), np.cumprod(steps, axis=0)])
        evecs = evecs * phases[:, None, :]
    else:
        evals, evecs = _track_general(evals, evecs, taus)

    return AdiabaticSpectrum(grid, evals, evecs, gauge, min_gap)


def apply_phase_redressing(
    spectrum: AdiabaticSpectrum, phase_fn: Callable[[np.ndarray], np.ndarray]
) -> AdiabaticSpectrum:
    """Redress each level with a smooth time-dependent phase.

    ``phase_fn(taus)`` must return real phases f_n(tau_k) of shape
    (n_samples, d) with f_n(0) = 0. Every gauge-invariant quantity
    downstream must be unchanged by this transformation; it exists for
    gauge-independence checks.
    """
    phases = np.asarray(phase_fn(spectrum.grid.samples), dtype=float)
    if phases.shape != spectrum.eigenvalues.shape:
        raise ValueError("phase samples must have shape (n_samples, d)")
    if np.abs(phases[0]).max() > 1e-12:
        raise ValueError("redressing phases must vanish at tau = 0")
    dressed = spectrum.eigenvectors * np.exp(1j * phases)[:, None, :]
    return replace(spectrum, eigenvectors=dressed)


def _fd_hamiltonian_derivative(model, grid: TimeGrid, step: float) -> np.ndarray:
    """dh/dtau by central differences, one-sided at the range ends.

    Never probes outside [0, tau_end], so models defined only on that
    range (tabulated, normalized raw evaluators) stay valid.
    """
    taus = grid.samples
    delta = min(step, 0.5 * grid.dtau)
    plus = sample_hamiltonian(model, taus[1:-1] + delta)
    minus = sample_hamiltonian(model, taus[1:-1] - delta)
    out = np.empty((taus.size,) + plus.shape[1:], dtype=complex)
    out[1:-1] = (plus - minus) / (2.0 * delta)
    lo = sample_hamiltonian(model, taus[0] + delta * np.array([0.0, 1.0, 2.0]))
    out[0] = (-3.0 * lo[0] + 4.0 * lo[1] - lo[2]) / (2.0 * delta)
    hi = sample_hamiltonian(model, taus[-1] - delta * np.array([2.0, 1.0, 0.0]))
    out[-1] = (3.0 * hi[2] - 4.0 * hi[1] + hi[0]) / (2.0 * delta)
    return out


def compute_nonadiabatic_coupling(
    spectrum: AdiabaticSpectrum,
    model: Optional[HamiltonianModel] = None,
    method: GammaMethod = GammaMethod.FINITE_DIFFERENCE,
    allow_fd_hamiltonian: bool = True,
    fd_step: float = 1e-6,
) -> NonadiabaticCoupling:
    """Sample gamma_nm = i <phi_n | phi_m'> on the spectrum's grid.

    ``FINITE_DIFFERENCE`` differentiates the tracked eigenvectors with
    second-order stencils. ``HELLMANN_FEYNMAN`` uses
    gamma_nm = i <phi_n| dh/dtau |phi_m> / (e_m - e_n) off the diagonal,
    taking dh/dtau from the model (or a central difference of h with
    step ``fd_step`` when the model has no analytic derivative and
    ``allow_fd_hamiltonian`` is set); the diagonal always comes from the
    finite-difference route.
    """
    dtau = spectrum.grid.dtau
    vecs = spectrum.eigenvectors
    dvecs = central_difference(vecs, dtau)
    gamma_fd = 1j * np.einsum("kin,kim->knm", vecs.conj(), dvecs)
    if method is GammaMethod.FINITE_DIFFERENCE:
        return NonadiabaticCoupling(spectrum.grid, gamma_fd, method)

    if model is None:
        raise DerivativeUnavailable("Hellmann-Feynman coupling needs the model")
    hdot = sample_derivative(model, spectrum.grid.samples)
    if hdot is None:
        if not allow_fd_hamiltonian:
            raise DerivativeUnavailable(
                "model has no analytic derivative and finite differencing of h is disabled"
            )
        hdot = _fd_hamiltonian_derivative(model, spectrum.grid, fd_step)

    numer = 1j * np.einsum("kin,kij,kjm->knm", vecs.conj(), hdot, vecs)
    denom = spectrum.eigenvalues[:, None, :] - spectrum.eigenvalues[:, :, None]
    d = spectrum.dimension
    off = ~np.eye(d, dtype=bool)
    gamma = np.zeros_like(gamma_fd)
    gamma[:, off] = numer[:, off] / denom[:, off]
    idx = np.arange(d)
    gamma[:, idx, idx] = gamma_fd[:, idx, idx]
    return NonadiabaticCoupling(spectrum.grid, gamma, method)
