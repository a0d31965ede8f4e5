"""Forward-Euler transcription of the boundary-value control set.

The continuous set of admissible controls (those steering x0 to xf) is
replaced by the affine set { u : G u = xi } acting on stacked piecewise-
constant control values.  The map G, the step-matrix product Phi and the
Gram matrix W = G G^T are assembled once per (system, grid, boundary) and
reused by every projection.

Norms on control space carry the step weight h so that they approximate
the L2 norm of the step-function interpolant; the scalar weight cancels
inside the affine projection formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SimulationOverflowError, UncontrollableGridError
from .model import BoundarySpec, Grid, LinearSystem


@dataclass(frozen=True)
class ControlTrajectory:
    """N-by-m control samples; row k applies on [t_k, t_{k+1})."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] != self.grid.N:
            raise ValueError(f"control values must have {self.grid.N} rows, "
                             f"got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("control values contain non-finite entries")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def flat(self) -> np.ndarray:
        """Row-major stacked values, matching G's column blocks."""
        return self.values.reshape(-1)

    @classmethod
    def from_flat(cls, flat: np.ndarray, grid: Grid, m: int) -> "ControlTrajectory":
        return cls(values=np.asarray(flat, dtype=float).reshape(grid.N, m), grid=grid)

    @classmethod
    def zeros(cls, grid: Grid, m: int) -> "ControlTrajectory":
        return cls(values=np.zeros((grid.N, m)), grid=grid)


@dataclass(frozen=True)
class StateTrajectory:
    """(N+1)-by-n state samples on all grid nodes."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != self.grid.N + 1:
            raise ValueError(f"state values must have {self.grid.N + 1} rows, "
                             f"got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("state values contain non-finite entries")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def last(self) -> np.ndarray:
        return self.values[-1]


class WFactorization:
    """Solver for the n-by-n Gram system W y = r.

    W is diagonally equilibrated before inversion (the benchmarks produce
    raw condition numbers up to ~1e15 that drop to O(10) after scaling),
    and every solve applies one step of iterative refinement.  ``singular``
    is set when W fails a Cholesky test after equilibration.
    """

    def __init__(self, W: np.ndarray):
        self.W = W
        diag = np.diag(W).copy()
        self.singular = bool(np.any(diag <= 0.0))
        self._d = None
        self._inv = None
        if not self.singular:
            d = np.sqrt(diag)
            Ws = W / np.outer(d, d)
            try:
                np.linalg.cholesky(Ws)
                self._d = d
                self._inv = np.linalg.inv(Ws)
            except np.linalg.LinAlgError:
                self.singular = True

    def solve(self, r: np.ndarray) -> np.ndarray:
        if self.singular:
            raise UncontrollableGridError(
                "Gram matrix of the reachability map is singular to working "
                "precision; the discrete system is uncontrollable on this grid")
        d, inv, W = self._d, self._inv, self.W
        y = (inv @ (r / d)) / d
        y += (inv @ ((r - W @ y) / d)) / d
        return y


@dataclass(frozen=True)
class AffineData:
    """Discrete reachability data: { u : G u = xi } equals the transcribed
    boundary-value set, with Phi the ordered product of step matrices and
    W = G G^T factored once for reuse by all projections."""

    G: np.ndarray
    xi: np.ndarray
    Phi: np.ndarray
    W: np.ndarray
    Wfact: WFactorization
    grid: Grid
    m: int

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def controllable(self) -> bool:
        """Whether W is invertible at working precision on this grid."""
        return not self.Wfact.singular

    @property
    def h(self) -> float:
        return self.grid.h


def _sample_steps(system: LinearSystem, grid: Grid):
    """Yield (A_k, B_k) at the N left nodes; constant systems short-circuit."""
    if system.is_lti:
        A = np.asarray(system.A, dtype=float)
        B = np.asarray(system.B, dtype=float)
        for _ in range(grid.N):
            yield A, B
    else:
        for t in grid.left_nodes:
            yield system.a_at(t), system.b_at(t)


def simulate(system: LinearSystem, grid: Grid, x0: np.ndarray,
             u: ControlTrajectory) -> StateTrajectory:
    """Forward-Euler rollout x_{k+1} = x_k + h (A_k x_k + B_k u_k)."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != system.n:
        raise ValueError(f"x0 must have length {system.n}, got {x0.size}")
    if u.grid != grid:
        raise ValueError("control trajectory lives on a different grid")
    if u.m != system.m:
        raise ValueError(f"control has {u.m} channels, system expects {system.m}")
    h = grid.h
    out = np.empty((grid.N + 1, system.n))
    out[0] = x0
    x = x0
    with np.errstate(over="ignore", invalid="ignore"):
        for k, (A, B) in enumerate(_sample_steps(system, grid)):
            x = x + h * (A @ x + B @ u.values[k])
            if not np.all(np.isfinite(x)):
                raise SimulationOverflowError(
                    f"state overflowed at step {k + 1} of {grid.N}; the Euler "
                    f"step h={h:g} is unstable for this system")
            out[k + 1] = x
    return StateTrajectory(values=out, grid=grid)


def build_affine(system: LinearSystem, grid: Grid,
                 boundary: BoundarySpec) -> AffineData:
    """Assemble the reachability map for fixed-endpoint data.

    Column block k of G is (prod_{j=N-1..k+1} (I + h A_j)) h B_k, so that
    the Euler terminal state equals Phi x0 + G u for stacked controls u.
    A singular Gram matrix is flagged on the result rather than raised;
    projections will refuse to run until the grid (or system) changes.
    """
    if boundary.n != system.n:
        raise ValueError(f"boundary dimension {boundary.n} != state dimension {system.n}")
    n, m, h = system.n, system.m, grid.h
    G = np.empty((n, grid.N * m))
    steps = list(_sample_steps(system, grid))
    P = np.eye(n)
    eye = np.eye(n)
    for k in range(grid.N - 1, -1, -1):
        A, B = steps[k]
        G[:, k * m:(k + 1) * m] = P @ (h * B)
        P = P @ (eye + h * A)
    xi = boundary.xf - P @ boundary.x0
    W = G @ G.T
    for arr in (G, xi, P, W):
        arr.flags.writeable = False
    return AffineData(G=G, xi=xi, Phi=P, W=W, Wfact=WFactorization(W),
                      grid=grid, m=m)


def weighted_norm(values: np.ndarray, h: float) -> float:
    """sqrt(h * sum of squares); the step-weighted control-space norm."""
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(h * np.dot(v.reshape(-1), v.reshape(-1))))


def l2_norm(u: ControlTrajectory) -> float:
    """Step-weighted norm sqrt(h sum_k |u_k|^2) of a control trajectory."""
    return weighted_norm(u.values, u.grid.h)
