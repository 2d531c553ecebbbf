"""Time-dependent Hamiltonian models in dimensionless form.

A model is a pure evaluator tau -> h(tau) with h Hermitian and tau the
dimensionless time. Raw, dimensionful Hamiltonians enter only through
:func:`normalize`, which rescales energies by the initial energy of the
chosen level and time accordingly; everything downstream works with the
dimensionless h.

Built-in models:

* :func:`build_spin_half` - spin-1/2 in a rotating field (variant A) and
  its conjugated dual built from the propagated evolution operator
  (variant B).
* :func:`build_conjugated_model` - a constant Hamiltonian conjugated by
  the one-parameter unitary group of a second constant Hermitian
  generator; its coupling matrix has a closed form and exactly linear
  phases.
* :func:`load_tabulated_model` - Hermitian samples from a text file,
  linearly interpolated.

Models are immutable and their evaluators pure, so instances are safe to
share across threads; building variant B runs a propagation internally
and is a one-time setup step.
"""

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from ._linalg import hermitize, max_hermiticity_defect, scan_operators, unitary_steps
from .errors import (
    GridRequired,
    NonHermitianInput,
    NonHermitianSample,
    NonMonotoneTime,
    ParseError,
    ZeroHamiltonian,
)
from .grid import TimeGrid

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class HamiltonianModel:
    """Evaluator contract for a dimensionless Hermitian h(tau).

    ``evaluate`` maps a scalar tau to a (d, d) complex Hermitian matrix.
    ``derivative`` is the analytic dh/dtau when available. ``period`` is
    the fundamental period of h when the drive is periodic.

    ``evaluate_many`` and ``analytic_frame`` are optional fast paths:
    the former evaluates a whole array of times at once, the latter
    returns the closed-form instantaneous eigensystem (levels ordered by
    ascending eigenvalue at tau = 0) for models that have one.
    """

    dimension: int
    evaluate: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]] = None
    name: str = ""
    period: Optional[float] = None
    evaluate_many: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False
    )
    derivative_many: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False
    )
    analytic_frame: Optional[Callable[[np.ndarray], tuple]] = field(
        default=None, repr=False
    )


@dataclass(frozen=True)
class NormalizationRecord:
    """How a raw Hamiltonian was made dimensionless.

    ``reference_energy`` is the initial energy of ``initial_level`` in
    the raw units (or the spectral norm fallback when that energy
    vanishes); ``time_scale`` converts dimensionless tau back to raw
    time, t = time_scale * tau.
    """

    reference_energy: float
    time_scale: float
    initial_level: int


class SpinVariant(enum.Enum):
    A = "a"
    B = "b"


@dataclass(frozen=True)
class SpinHalfParams:
    """Rotating-field spin-1/2 parameters (all dimensionless).

    ``omega0`` is the level splitting, ``omega`` the field rotation
    rate, ``theta`` the cone angle between rotation axis and field.
    """

    omega0: float
    omega: float
    theta: float
    variant: SpinVariant = SpinVariant.A

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")


@dataclass(frozen=True)
class ConjugatedParams:
    """Constant Hamiltonian conjugated by exp(-i tau V).

    ``energies`` are the eigenvalues of the constant part, ``eigenbasis``
    its eigenvectors as columns (identity by default), and ``generator``
    the Hermitian V driving the conjugation.
    """

    energies: Sequence[float]
    generator: np.ndarray
    eigenbasis: Optional[np.ndarray] = None


def _require_hermitian(mat: np.ndarray, what: str):
    defect = max_hermiticity_defect(mat)
    scale = max(1.0, float(np.abs(mat).max()))
    if defect > HERMITICITY_TOL * scale:
        raise NonHermitianInput(f"{what} is not Hermitian (defect {defect:.3e})")


def sample_hamiltonian(model: HamiltonianModel, taus: np.ndarray) -> np.ndarray:
    """Evaluate h on an array of times, shape (n, d, d)."""
    taus = np.asarray(taus, dtype=float)
    if model.evaluate_many is not None:
        return model.evaluate_many(taus)
    return np.array([model.evaluate(t) for t in taus])


def sample_derivative(model: HamiltonianModel, taus: np.ndarray) -> Optional[np.ndarray]:
    """Evaluate dh/dtau on an array of times, or None if unavailable."""
    if model.derivative is None:
        return None
    taus = np.asarray(taus, dtype=float)
    if model.derivative_many is not None:
        return model.derivative_many(taus)
    return np.array([model.derivative(t) for t in taus])


def normalize(
    raw_evaluator: Callable[[float], np.ndarray],
    initial_level: int,
    t_probe: float = 0.0,
) -> tuple[HamiltonianModel, NormalizationRecord]:
    """Make a raw Hamiltonian dimensionless.

    The reference energy is the ``initial_level``-th eigenvalue
    (ascending) of the raw Hamiltonian at ``t_probe``. When that
    eigenvalue vanishes relative to the spectral norm, the spectral norm
    itself is used so that h stays order one. Returns the dimensionless
    model together with the record needed to undo the scaling.
    """
    h0 = np.asarray(raw_evaluator(t_probe), dtype=complex)
    if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
        raise ValueError("raw evaluator must produce a square matrix")
    d = h0.shape[0]
    if not 0 <= initial_level < d:
        raise ValueError(f"initial_level {initial_level} out of range for dimension {d}")
    _require_hermitian(h0, "raw H(t_probe)")
    evals = np.linalg.eigvalsh(h0)
    spectral_norm = float(np.abs(evals).max())
    if spectral_norm == 0.0:
        raise ZeroHamiltonian("raw Hamiltonian vanishes at the probe time")
    reference = float(evals[initial_level])
    if abs(reference) < 1e-12 * spectral_norm:
        reference = spectral_norm
    time_scale = 1.0 / reference

    def evaluate(tau: float) -> np.ndarray:
        return np.asarray(raw_evaluator(tau * time_scale), dtype=complex) / reference

    model = HamiltonianModel(dimension=d, evaluate=evaluate, name="normalized")
    record = NormalizationRecord(
        reference_energy=reference, time_scale=time_scale, initial_level=initial_level
    )
    return model, record


def _spin_a_model(params: SpinHalfParams) -> HamiltonianModel:
    w0, w, th = params.omega0, params.omega, params.theta
    sin_t, cos_t = np.sin(th), np.cos(th)

    def evaluate_many(taus: np.ndarray) -> np.ndarray:
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        return -(w0 / 2.0) * (
            np.multiply.outer(sin_t * np.cos(w * taus), SIGMA_X)
            + np.multiply.outer(sin_t * np.sin(w * taus), SIGMA_Y)
            + np.multiply.outer(np.full(taus.shape, cos_t), SIGMA_Z)
        )

    def evaluate(tau: float) -> np.ndarray:
        return evaluate_many(np.array([tau]))[0]

    def derivative_many(taus: np.ndarray) -> np.ndarray:
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        return -(w0 * w * sin_t / 2.0) * (
            np.multiply.outer(-np.sin(w * taus), SIGMA_X)
            + np.multiply.outer(np.cos(w * taus), SIGMA_Y)
        )

    def derivative(tau: float) -> np.ndarray:
        return derivative_many(np.array([tau]))[0]

    def analytic_frame(taus: np.ndarray):
        # level 0 is field-aligned with energy -omega0/2
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        n = taus.shape[0]
        c, s = np.cos(th / 2.0), np.sin(th / 2.0)
        ph = np.exp(1j * w * taus)
        vecs = np.empty((n, 2, 2), dtype=complex)
        vecs[:, 0, 0] = c
        vecs[:, 1, 0] = ph * s
        vecs[:, 0, 1] = -np.conj(ph) * s
        vecs[:, 1, 1] = c
        evals = np.empty((n, 2))
        evals[:, 0] = -w0 / 2.0
        evals[:, 1] = w0 / 2.0
        return evals, vecs

    return HamiltonianModel(
        dimension=2,
        evaluate=evaluate,
        derivative=derivative,
        name="spin_half_a",
        period=(2.0 * np.pi / abs(w)) if w != 0.0 else None,
        evaluate_many=evaluate_many,
        derivative_many=derivative_many,
        analytic_frame=analytic_frame,
    )


def build_spin_half(
    params: SpinHalfParams, grid: Optional[TimeGrid] = None
) -> HamiltonianModel:
    """Build the rotating-field spin-1/2 model.

    Variant A is the standard rotating field with constant splitting
    ``omega0`` and cone angle ``theta``. Variant B is its conjugated
    dual, -U_a(tau)^dag h_a(tau) U_a(tau), where U_a is the evolution
    operator of variant A propagated numerically on ``grid`` and
    interpolated with cubic splines between samples. Variant B therefore
    requires a grid and is only trustworthy inside [0, grid.tau_end].
    """
    model_a = _spin_a_model(params)
    if params.variant is SpinVariant.A:
        return model_a
    if grid is None:
        raise GridRequired("variant B needs a time grid to propagate variant A on")

    taus = grid.samples
    h_mid = model_a.evaluate_many(grid.midpoints)
    steps = unitary_steps(h_mid, grid.dtau, sign=-1)
    u_a = scan_operators(steps)
    spline = CubicSpline(taus, u_a, axis=0)

    def evaluate_many(ts: np.ndarray) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        u = spline(ts)
        ha = model_a.evaluate_many(ts)
        return -np.einsum("kji,kjl,klm->kim", u.conj(), ha, u)

    def evaluate(tau: float) -> np.ndarray:
        return evaluate_many(np.array([tau]))[0]

    return HamiltonianModel(
        dimension=2,
        evaluate=evaluate,
        name="spin_half_b",
        evaluate_many=evaluate_many,
    )


def build_conjugated_model(params: ConjugatedParams) -> HamiltonianModel:
    """Build h(tau) = exp(-i tau V) H exp(+i tau V) for constant H, V.

    The exponential is exact (eigendecomposition of the Hermitian
    generator), the derivative is the analytic -i[V, h], and the
    closed-form eigenframe exp(-i tau V) |E_n> is attached for use with
    the analytic gauge.
    """
    energies = np.asarray(params.energies, dtype=float)
    if energies.ndim != 1 or energies.size < 2:
        raise ValueError("energies must be a list of at least two reals")
    if not np.all(np.isfinite(energies)):
        raise ValueError("energies must be finite")
    d = energies.size
    v = np.asarray(params.generator, dtype=complex)
    if v.shape != (d, d):
        raise ValueError(f"generator must be {d}x{d}")
    _require_hermitian(v, "generator V")
    if params.eigenbasis is None:
        basis = np.eye(d, dtype=complex)
    else:
        basis = np.asarray(params.eigenbasis, dtype=complex)
        if basis.shape != (d, d):
            raise ValueError(f"eigenbasis must be {d}x{d}")
        if max_hermiticity_defect(basis.conj().T @ basis - np.eye(d)) > 1e-10:
            raise ValueError("eigenbasis must be unitary")

    h_const = basis @ np.diag(energies).astype(complex) @ basis.conj().T
    h_const = hermitize(h_const)
    v_evals, v_evecs = np.linalg.eigh(v)
    order = np.argsort(energies, kind="stable")

    def _conjugators(taus: np.ndarray) -> np.ndarray:
        phases = np.exp(-1j * np.multiply.outer(taus, v_evals))
        return np.einsum("ij,kj,lj->kil", v_evecs, phases, v_evecs.conj())

    def evaluate_many(taus: np.ndarray) -> np.ndarray:
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        u = _conjugators(taus)
        return np.einsum("kij,jl,kml->kim", u, h_const, u.conj())

    def evaluate(tau: float) -> np.ndarray:
        return evaluate_many(np.array([tau]))[0]

    def derivative_many(taus: np.ndarray) -> np.ndarray:
        h = evaluate_many(taus)
        return -1j * (np.einsum("ij,kjl->kil", v, h) - np.einsum("kij,jl->kil", h, v))

    def derivative(tau: float) -> np.ndarray:
        return derivative_many(np.array([tau]))[0]

    def analytic_frame(taus: np.ndarray):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        u = _conjugators(taus)
        vecs = np.einsum("kij,jn->kin", u, basis[:, order])
        evals = np.broadcast_to(energies[order], (taus.shape[0], d)).copy()
        return evals, vecs

    return HamiltonianModel(
        dimension=d,
        evaluate=evaluate,
        derivative=derivative,
        name="conjugated",
        evaluate_many=evaluate_many,
        derivative_many=derivative_many,
        analytic_frame=analytic_frame,
    )


def _parse_tabulated(text: str, origin: str):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError(f"{origin}: empty file")
    header = lines[0].replace(" ", "")
    if not header.startswith("dim="):
        raise ParseError(f"{origin}: first line must be 'dim=<d>'")
    try:
        d = int(header[4:])
    except ValueError as exc:
        raise ParseError(f"{origin}: bad dimension {header[4:]!r}") from exc
    if d < 1:
        raise ParseError(f"{origin}: dimension must be positive")

    n_upper = d * (d + 1) // 2
    n_cols = 1 + 2 * n_upper
    taus, mats = [], []
    for row, ln in enumerate(lines[1:]):
        parts = ln.split()
        if len(parts) != n_cols:
            raise ParseError(
                f"{origin}: data row {row} has {len(parts)} fields, expected {n_cols}"
            )
        try:
            nums = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"{origin}: data row {row} is not numeric") from exc
        tau = nums[0]
        mat = np.zeros((d, d), dtype=complex)
        pos = 1
        for i in range(d):
            for j in range(i, d):
                val = nums[pos] + 1j * nums[pos + 1]
                pos += 2
                mat[i, j] = val
                mat[j, i] = np.conj(val)
        scale = max(1.0, float(np.abs(mat).max()))
        imag_diag = float(np.abs(np.imag(np.diagonal(mat))).max())
        if imag_diag > HERMITICITY_TOL * scale:
            raise NonHermitianSample(row, f"diagonal imaginary part {imag_diag:.3e}")
        taus.append(tau)
        mats.append(mat)

    if len(taus) < 2:
        raise ParseError(f"{origin}: need at least two samples")
    taus = np.asarray(taus)
    if not np.all(np.diff(taus) > 0):
        raise NonMonotoneTime(f"{origin}: sample times must be strictly increasing")
    return taus, np.asarray(mats)


def load_tabulated_model(path) -> HamiltonianModel:
    """Load Hermitian samples from a text file and interpolate linearly.

    Format: a header line ``dim=<d>`` followed by one row per sample,
    ``tau re(h00) im(h00) re(h01) im(h01) ...`` listing the upper
    triangle (including the diagonal) row major. The lower triangle is
    reconstructed by Hermiticity and each sample is validated. Times
    must be strictly increasing; evaluation outside the tabulated range
    raises.
    """
    path = Path(path)
    taus, mats = _parse_tabulated(path.read_text(), str(path))
    lo, hi = float(taus[0]), float(taus[-1])
    d = mats.shape[1]

    def evaluate_many(ts: np.ndarray) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if ts.min() < lo - 1e-12 or ts.max() > hi + 1e-12:
            raise ValueError(
                f"tau outside tabulated range [{lo:g}, {hi:g}]"
            )
        ts = np.clip(ts, lo, hi)
        idx = np.clip(np.searchsorted(taus, ts, side="right") - 1, 0, len(taus) - 2)
        w = (ts - taus[idx]) / (taus[idx + 1] - taus[idx])
        return mats[idx] * (1.0 - w)[:, None, None] + mats[idx + 1] * w[:, None, None]

    def evaluate(tau: float) -> np.ndarray:
        return evaluate_many(np.array([tau]))[0]

    return HamiltonianModel(
        dimension=d,
        evaluate=evaluate,
        name=path.stem,
        evaluate_many=evaluate_many,
    )
