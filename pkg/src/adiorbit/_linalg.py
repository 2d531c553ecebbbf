"""Dense-matrix helpers shared by the model builders and the propagators.

All generators here are Hermitian and small (d <= 64), so matrix
exponentials go through an eigendecomposition, which keeps every
propagation step exactly unitary up to roundoff.
"""

import numpy as np


def hermitize(stack: np.ndarray) -> np.ndarray:
    """Average a stack of matrices with its conjugate transpose."""
    return 0.5 * (stack + np.conj(np.swapaxes(stack, -1, -2)))


def max_hermiticity_defect(mat: np.ndarray) -> float:
    return float(np.abs(mat - np.conj(np.swapaxes(mat, -1, -2))).max())


def unitary_steps(generators: np.ndarray, dtau: float, sign: int) -> np.ndarray:
    """exp(sign * 1j * dtau * G) for a stack of Hermitian generators G.

    Shape (n, d, d) in, (n, d, d) out. Each result is unitary to float
    noise because it is assembled from an orthonormal eigenbasis.
    """
    evals, evecs = np.linalg.eigh(generators)
    phases = np.exp(sign * 1j * dtau * evals)
    return np.einsum("nij,nj,nkj->nik", evecs, phases, evecs.conj())


def scan_states(steps: np.ndarray, v0: np.ndarray) -> np.ndarray:
    """Apply a sequence of step matrices to v0, keeping every intermediate.

    Returns shape (n_steps + 1, d) with row 0 equal to v0.
    """
    n = steps.shape[0]
    out = np.empty((n + 1, v0.shape[0]), dtype=complex)
    out[0] = v0
    v = np.asarray(v0, dtype=complex)
    for k in range(n):
        v = steps[k] @ v
        out[k + 1] = v
    return out


def scan_operators(steps: np.ndarray) -> np.ndarray:
    """Ordered products U_k = steps[k-1] @ ... @ steps[0], with U_0 = 1.

    Later steps multiply from the left, i.e. time ordering.
    """
    n, d, _ = steps.shape
    out = np.empty((n + 1, d, d), dtype=complex)
    out[0] = np.eye(d)
    acc = out[0]
    for k in range(n):
        acc = steps[k] @ acc
        out[k + 1] = acc
    return out


def central_difference(stack: np.ndarray, dtau: float) -> np.ndarray:
    """d/dtau of a sampled quantity along axis 0, second order.

    Central differences in the interior, one-sided three-point stencils
    at both endpoints.
    """
    if stack.shape[0] < 3:
        raise ValueError("need at least 3 samples for second-order differences")
    out = np.empty_like(stack)
    out[1:-1] = (stack[2:] - stack[:-2]) / (2.0 * dtau)
    out[0] = (-3.0 * stack[0] + 4.0 * stack[1] - stack[2]) / (2.0 * dtau)
    out[-1] = (3.0 * stack[-1] - 4.0 * stack[-2] + stack[-3]) / (2.0 * dtau)
    return out
