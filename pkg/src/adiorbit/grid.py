"""Uniform time grids and the quadrature helpers built on them.

Everything downstream (eigenframe tracking, phase integrals, the
propagators) assumes the same uniform grid, so convergence studies are
done by step halving rather than adaptive control.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = tau_0 < tau_1 < ... < tau_n = tau_end.

    ``n_steps`` counts intervals, so there are ``n_steps + 1`` samples.
    """

    tau_end: float
    n_steps: int

    def __post_init__(self):
        if not self.tau_end > 0:
            raise ValueError("tau_end must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError("n_steps must be an integer >= 2")

    @property
    def dtau(self) -> float:
        return self.tau_end / self.n_steps

    @cached_property
    def samples(self) -> np.ndarray:
        return np.linspace(0.0, self.tau_end, self.n_steps + 1)

    @cached_property
    def midpoints(self) -> np.ndarray:
        return self.samples[:-1] + 0.5 * self.dtau

    def index_of(self, tau: float) -> int:
        """Nearest sample index for ``tau``, clamped to the grid."""
        idx = int(round(tau / self.dtau))
        return min(max(idx, 0), self.n_steps)

    def matches(self, other: "TimeGrid") -> bool:
        return (
            self.n_steps == other.n_steps
            and abs(self.tau_end - other.tau_end) <= 1e-12 * max(1.0, abs(self.tau_end))
        )


def cumulative_trapezoid(values: np.ndarray, dtau: float) -> np.ndarray:
    """Running composite-trapezoid integral along axis 0, starting at 0.

    Output has the same shape as ``values``; entry k holds the integral
    over [tau_0, tau_k].
    """
    return integrate.cumulative_trapezoid(np.asarray(values), dx=dtau, axis=0, initial=0)
