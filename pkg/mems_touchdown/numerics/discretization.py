"""Uniform grids on [−1, 1] and banded finite-difference operators."""
from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded, solveh_banded

from .utils import GapClosedError, Order, ValidationError

FloatArray = npt.NDArray[np.float64]

MIN_NODES = 16


def default_grid_size(eps: float, order: Order) -> int:
    """
    Interior node count resolving the boundary layers of the touchdown solutions.

    max(512, ⌈8/ε⌉) for the Laplacian, max(512, ⌈8/ε^{3/4}⌉) for the bi-Laplacian,
    rounded up to an odd count so that x = 0 is a node.
    """
    if eps <= 0:
        n = 512
    elif order == Order.SECOND:
        n = max(512, math.ceil(8 / eps))
    else:
        n = max(512, math.ceil(8 / eps**0.75))
    return n | 1


class Grid(NamedTuple):
    """
    A uniform grid of n interior nodes x_i = −1 + i·h on [−1, 1].

    :param n: The number of interior nodes.
    """

    n: int

    @classmethod
    def uniform(cls, n: int) -> Grid:
        """Create a grid, checking the node count."""
        if n < MIN_NODES:
            raise ValidationError(f"grid needs at least {MIN_NODES} interior nodes, got {n}")
        return cls(int(n))

    @property
    def h(self) -> float:
        """Grid spacing 2/(n+1)."""
        return 2.0 / (self.n + 1)

    @property
    def nodes(self) -> FloatArray:
        """Interior node positions."""
        return -1.0 + self.h * np.arange(1, self.n + 1)

    @property
    def full_nodes(self) -> FloatArray:
        """Node positions including x = ±1."""
        return -1.0 + self.h * np.arange(self.n + 2)

    def __str__(self) -> str:
        return f"Grid(n={self.n}, h={self.h:.3e})"


class Field(NamedTuple):
    """
    A deflection profile sampled at the interior nodes of a grid.

    Boundary values are implied by the boundary conditions and are zero for
    both operator orders.

    :param grid: The grid the values live on.
    :param values: The n interior values.
    """

    grid: Grid
    values: FloatArray

    @classmethod
    def zeros(cls, grid: Grid) -> Field:
        """The undeflected state."""
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[FloatArray], FloatArray]) -> Field:
        """Sample a vectorised function at the interior nodes."""
        return cls(grid, np.asarray(func(grid.nodes), dtype=float))

    @property
    def x(self) -> FloatArray:
        """Interior node positions."""
        return self.grid.nodes

    def padded(self) -> FloatArray:
        """Values including the zero boundary values at x = ±1."""
        return np.concatenate(([0.0], self.values, [0.0]))

    def min(self) -> float:
        """Smallest nodal value."""
        return float(np.min(self.values))

    def check_gap(self) -> Field:
        """
        Check that every value lies above −1.

        :raises GapClosedError: If any value is at or below −1.
        :return: The same field, for chaining.
        """
        if not np.all(self.values > -1.0):
            raise GapClosedError(f"field touches the substrate (min u = {self.min():.6g})")
        return self

    def asymmetry(self) -> float:
        """Largest |u(x) − u(−x)| over the nodes."""
        return float(np.max(np.abs(self.values - self.values[::-1])))


class LinearOperator:
    """
    A banded elastic operator on the interior unknowns.

    The stored matrix ``A`` is the symmetric positive definite stiffness operator,
    −Δ_h for the Laplacian and Δ_h² for the bi-Laplacian, so that both flows read
    u_t = −A u − force(u). :meth:`apply` returns the differential operator
    itself (Δ_h u or Δ_h² u).

    :param order: The operator order.
    :param grid: The grid the operator acts on.
    :param upper: Symmetric upper-band storage of ``A`` (``solveh_banded`` layout).
    """

    def __init__(self, order: Order, grid: Grid, upper: FloatArray) -> None:
        self.order = order
        self.grid = grid
        self.upper = upper
        self.bandwidth = upper.shape[0] - 1
        offsets = list(range(-self.bandwidth, self.bandwidth + 1))
        diagonals = [self._diagonal(k) for k in offsets]
        self.matrix = sp.diags(diagonals, offsets, shape=(grid.n, grid.n), format="csc")

    def _diagonal(self, offset: int) -> FloatArray:
        k = abs(offset)
        return self.upper[self.bandwidth - k, k:]

    @property
    def sign(self) -> float:
        """A = sign·D where D is the differential operator."""
        return -1.0 if self.order == Order.SECOND else 1.0

    @property
    def norm_inf(self) -> float:
        """Maximum absolute row sum of ``A``."""
        return float(np.max(np.abs(self.matrix).sum(axis=1)))

    def stiffness(self, values: FloatArray) -> FloatArray:
        """Return A u."""
        return np.asarray(self.matrix @ values)

    def apply(self, values: FloatArray) -> FloatArray:
        """Return the differential operator applied to u (Δ_h u or Δ_h² u)."""
        return self.sign * self.stiffness(values)

    def full_bands(self, diagonal_shift: FloatArray | float = 0.0,
                   scale: float = 1.0) -> FloatArray:
        """
        General band storage of scale·A + diag(shift) for ``solve_banded``.

        :param diagonal_shift: Added to the main diagonal after scaling.
        :param scale: Multiplier applied to ``A``.
        :return: An array of shape (2k+1, n) in the (l, u) = (k, k) layout.
        """
        k = self.bandwidth
        n = self.grid.n
        bands = np.zeros((2 * k + 1, n))
        bands[:k + 1] = scale * self.upper
        for j in range(1, k + 1):
            bands[k + j, :n - j] = scale * self.upper[k - j, j:]
        bands[k] += diagonal_shift
        return bands

    def solve(self, rhs: FloatArray) -> FloatArray:
        """Solve A x = rhs by a Cholesky band solve."""
        return np.asarray(solveh_banded(self.upper, rhs, check_finite=False))

    def solve_shifted(self, rhs: FloatArray, dt: float,
                      diagonal: FloatArray | None = None) -> FloatArray:
        """
        Solve (I + dt·A + diag(d)) x = rhs.

        Without ``diagonal`` the matrix is SPD and a Cholesky band solve is used.

        :raises numpy.linalg.LinAlgError: If the shifted matrix is singular or,
            for the Cholesky path, not positive definite.
        """
        if diagonal is None:
            upper = dt * self.upper
            upper[-1] += 1.0
            return np.asarray(solveh_banded(upper, rhs, check_finite=False))
        bands = self.full_bands(1.0 + diagonal, scale=dt)
        k = self.bandwidth
        return np.asarray(solve_banded((k, k), bands, rhs, check_finite=False))

    def jacobian(self, diagonal: FloatArray) -> sp.csc_matrix:
        """Sparse A + diag(d)."""
        return (self.matrix + sp.diags(diagonal, 0, format="csc")).tocsc()


def build_laplacian(grid: Grid) -> LinearOperator:
    """
    Three-point Laplacian with homogeneous Dirichlet closure.

    :param grid: The grid.
    :raises ValidationError: If the grid has fewer than 3 nodes.
    :return: An operator with apply(u)_i = (u_{i−1} − 2u_i + u_{i+1})/h².
    """
    if grid.n < 3:
        raise ValidationError("the Laplacian needs at least 3 interior nodes")
    inv_h2 = 1.0 / grid.h**2
    upper = np.zeros((2, grid.n))
    upper[0, 1:] = -inv_h2
    upper[1, :] = 2.0 * inv_h2
    return LinearOperator(Order.SECOND, grid, upper)


def build_biharmonic(grid: Grid) -> LinearOperator:
    """
    Five-point bi-Laplacian with clamped closure.

    The ghost values beyond x = ±1 are eliminated by the reflection u_{−1} = u_1,
    which turns the first and last diagonal entries from 6 into 7.

    :param grid: The grid.
    :raises ValidationError: If the grid has fewer than 5 nodes.
    :return: The operator.
    """
    if grid.n < 5:
        raise ValidationError("the bi-Laplacian needs at least 5 interior nodes")
    inv_h4 = 1.0 / grid.h**4
    upper = np.zeros((3, grid.n))
    upper[0, 2:] = inv_h4
    upper[1, 1:] = -4.0 * inv_h4
    upper[2, :] = 6.0 * inv_h4
    upper[2, 0] = upper[2, -1] = 7.0 * inv_h4
    return LinearOperator(Order.FOURTH, grid, upper)


def build_operator(grid: Grid, order: Order) -> LinearOperator:
    """Return the stiffness operator for the given order."""
    if order == Order.SECOND:
        return build_laplacian(grid)
    return build_biharmonic(grid)


def norm_sq(field: Field) -> float:
    """Trapezoid approximation of ∫u² over [−1, 1], boundary zeros included."""
    return float(trapezoid(field.padded() ** 2, dx=field.grid.h))


def second_derivative(field: Field) -> FloatArray:
    """Centred second differences at the interior nodes, using the zero boundary values."""
    full = field.padded()
    return np.asarray((full[:-2] - 2.0 * full[1:-1] + full[2:]) / field.grid.h**2)
