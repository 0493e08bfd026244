"""1-D diffusion on a uniform periodic grid over [0, 1).

Q = b d/dx + a d^2/dx^2.  Linear terms use centered differences; the quadratic
form J(f, f) = int a (f')^2 mu dx is discretized on the staggered (cell-face)
grid,

    J(f, f) = h sum_i w_{i+1/2} ((f_{i+1} - f_i)/h)^2,   w = face average of a*mu,

so that J(f, f) = (h/2) <f, A f> holds exactly with the cyclic tridiagonal
A = -2 D(a mu D .).  The grid Hamiltonian and Lagrangian are then exact
Legendre duals of each other.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import SingularBeyondKernel, ValidationError

MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if self.n < MIN_CELLS:
            raise ValidationError(f"need at least {MIN_CELLS} cells, got {self.n}", "n")

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def x(self):
        return np.arange(self.n) * self.h

    def integrate(self, v):
        return self.h * float(np.sum(v))


@dataclass(frozen=True)
class DiffusionModel:
    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float).ravel()
        a = np.asarray(self.a, dtype=float).ravel()
        if a.shape != b.shape:
            raise ValidationError(f"{a.size} diffusion values for {b.size} drift values", "a")
        if np.any(~(a > 0)):
            raise ValidationError("diffusion coefficient must be strictly positive", "a")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def grid(self):
        return Grid(self.b.size)

    @classmethod
    def brownian(cls, n):
        return cls(np.zeros(n), np.full(n, 0.5))


def grid_measure(density, grid=None):
    mu = np.asarray(density, dtype=float).ravel()
    grid = grid or Grid(mu.size)
    if mu.size != grid.n:
        raise ValidationError(f"length {mu.size}, expected {grid.n}", "mu")
    if np.any(~(mu > 0)):
        raise ValidationError("density must be strictly positive", "mu")
    if abs(grid.integrate(mu) - 1.0) > 1e-10:
        raise ValidationError(f"density integrates to {grid.integrate(mu):.15g}", "mu")
    return mu


def grid_signed(values, grid=None):
    v = np.asarray(values, dtype=float).ravel()
    grid = grid or Grid(v.size)
    if v.size != grid.n:
        raise ValidationError(f"length {v.size}, expected {grid.n}", "alpha")
    if abs(grid.integrate(v)) > 1e-10:
        raise ValidationError(f"values integrate to {grid.integrate(v):.3g}, not 0", "alpha")
    return v


def normalize_density(values):
    """Rescale a positive profile so that h * sum = 1."""
    v = np.asarray(values, dtype=float)
    return v / (v.sum() / v.size)


def d1(v, h):
    return (np.roll(v, -1) - np.roll(v, 1)) / (2 * h)


def d2(v, h):
    return (np.roll(v, -1) - 2 * v + np.roll(v, 1)) / h**2


def _face_weight(model, mu):
    am = model.a * mu
    return 0.5 * (am + np.roll(am, -1))


def adjoint_apply(model, mu):
    """Q* mu = (a mu)'' - (b mu)'."""
    h = model.grid.h
    mu = np.asarray(mu, dtype=float)
    return d2(model.a * mu, h) - d1(model.b * mu, h)


def generator_apply(model, f):
    h = model.grid.h
    f = np.asarray(f, dtype=float)
    return model.b * d1(f, h) + model.a * d2(f, h)


def quadratic_form(model, mu, f):
    """J_mu(f, f) on cell faces."""
    h = model.grid.h
    df = (np.roll(f, -1) - f) / h
    return h * float(np.sum(_face_weight(model, mu) * df**2))


def hamiltonian(model, mu, f):
    """int (Qf) mu dx + J_mu(f, f)."""
    mu = np.asarray(mu, dtype=float)
    f = np.asarray(f, dtype=float)
    return model.grid.integrate(generator_apply(model, f) * mu) + quadratic_form(model, mu, f)


def a_operator(model, mu):
    """Cyclic tridiagonal A_mu = -2 D(a mu D .); symmetric PSD with the constants as kernel."""
    n, h = model.grid.n, model.grid.h
    w = 2.0 * _face_weight(model, np.asarray(mu, dtype=float)) / h**2
    A = np.zeros((n, n))
    idx = np.arange(n)
    right = (idx + 1) % n
    A[idx, idx] = w + np.roll(w, 1)
    A[idx, right] -= w
    A[right, idx] -= w
    return A


def _solve_deflated(A, rhs):
    n = A.shape[0]
    rhs = rhs - rhs.mean()
    # rank-one shift removes the constant kernel; the solution comes out zero-mean
    g = la.solve(A + np.full((n, n), 1.0 / n), rhs, assume_a="sym")
    resid = np.max(np.abs(A @ g - rhs))
    if resid > 1e-8 * max(1.0, np.max(np.abs(rhs))):
        raise SingularBeyondKernel(f"solve residual {resid:.3g}")
    return g


def lagrangian_dual(model, mu, alpha, return_potential=False):
    """(1/2) <alpha - Q* mu, A_mu^{-1} (alpha - Q* mu)> in the grid inner product."""
    grid = model.grid
    mu = grid_measure(mu, grid)
    alpha = grid_signed(alpha, grid)
    delta = alpha - adjoint_apply(model, mu)
    g = _solve_deflated(a_operator(model, mu), delta)
    value = 0.5 * grid.h * float(delta @ g)
    return (value, g) if return_potential else value


@dataclass(frozen=True)
class DriftReconstruction:
    value: float
    flux: np.ndarray  # b*mu on cell faces x_{i+1/2}
    drift: np.ndarray  # flux / face-averaged mu

    @property
    def faces(self):
        n = self.flux.size
        return (np.arange(n) + 0.5) / n


def lagrangian_entropy(mu, alpha, full=False):
    """Relative-entropy cost of the drift that moves a Brownian density mu with velocity alpha.

    Solves (b mu)' = alpha - mu''/2 by cumulative summation.  On the circle the
    flux is fixed only up to a constant; the constant is chosen so that the
    drift has zero mean, which is the drift of least entropy cost.
    Returns (1/2) int b^2 mu dx.
    """
    grid = Grid(np.asarray(mu).size)
    mu = grid_measure(mu, grid)
    alpha = grid_signed(alpha, grid)
    h = grid.h
    delta = alpha - 0.5 * d2(mu, h)
    flux = h * np.cumsum(delta)
    mu_face = 0.5 * (mu + np.roll(mu, -1))
    flux = flux - np.sum(flux / mu_face) / np.sum(1.0 / mu_face)
    value = 0.5 * h * float(np.sum(flux**2 / mu_face))
    if full:
        return DriftReconstruction(value, flux, flux / mu_face)
    return value


def load_profile(data):
    """Parse ``{"n", "b", "a", "mu", "alpha"}``; ``b`` and ``a`` may be scalars."""
    for key in ("n", "mu", "alpha"):
        if key not in data:
            raise ValidationError("missing required key", key)
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ValidationError("must be an integer", "n")
    Grid(n)

    def vec(key, default):
        v = data.get(key, default)
        v = np.full(n, float(v)) if np.isscalar(v) else np.asarray(v, dtype=float)
        if v.shape != (n,):
            raise ValidationError(f"length {v.size}, expected {n}", key)
        return v

    model = DiffusionModel(vec("b", 0.0), vec("a", 0.5))
    return model, vec("mu", None), vec("alpha", None)
