"""Hamiltonian trajectories of a finite chain and the shooting solver for optimal paths.

With u = exp(f) the momentum equation is linear, du/dt = -Q u, so
u(t) = exp(-tQ) u(0).  The position then follows a Markov forward equation
with time-dependent rates r(a,b) u_b/u_a, integrated here by classical RK4.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from ._parallel import worker_count
from .chain import _check_dim, evolve
from .errors import MassDrift, NoConvergence, PositivityLoss, SolverFailure, ValidationError
from .hamiltonian import hamiltonian

log = logging.getLogger(__name__)

SHOOT_TOL = 1e-8
FD_STEP = 1e-6
DISTINCT_TOL = 1e-4


def _positive(u0, k):
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (k,):
        raise ValidationError(f"shape {u0.shape}, expected ({k},)", "u0")
    if np.any(~(u0 > 0)):
        raise PositivityLoss("initial u must be componentwise positive")
    return u0


def momentum_flow(Q, u0, t):
    """exp(-tQ) u0; PositivityLoss once a component reaches zero."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}", "t")
    u0 = _positive(u0, Q.k)
    u = la.expm(-t * Q.generator) @ u0
    if np.any(u <= 0):
        raise PositivityLoss(f"u lost positivity before t={t:g}")
    return u


def modified_generator(Q, u):
    """M(u)[a,b] = r(b,a) u_a/u_b - delta_ab sum_c r(a,c) u_c/u_a; columns sum to zero."""
    u = np.asarray(u, dtype=float)
    M = Q.r.T * (u[:, None] / u[None, :])
    M[np.diag_indices(Q.k)] -= (Q.r @ u) / u
    return M


def modified_generator_rate(Q, u):
    """dM/dt along du/dt = -Qu, differentiated in closed form."""
    u = np.asarray(u, dtype=float)
    du = -(Q.generator @ u)
    ratio_rate = (du[:, None] * u[None, :] - u[:, None] * du[None, :]) / u[None, :] ** 2
    dM = Q.r.T * ratio_rate
    out = Q.r @ u
    dM[np.diag_indices(Q.k)] -= ((Q.r @ du) * u - out * du) / u**2
    return dM


def _field(R, u, mu):
    # M(u) mu without forming M; works on trailing axis for batches.
    v = mu / u
    return u * (v @ R) - v * (u @ R.T)


@dataclass
class PhaseTrajectory:
    Q: object
    times: np.ndarray
    mu: np.ndarray
    u: np.ndarray

    @property
    def f(self):
        return np.log(self.u)

    @property
    def T(self):
        return float(self.times[-1])

    def velocity(self):
        """mu_dot at every node, taken from the vector field."""
        return _field(self.Q.r, self.u, self.mu)

    def energy(self):
        return np.array([hamiltonian(m, f, self.Q) for m, f in zip(self.mu, self.f)])


def _integrate(Q, mu0, u0, T, steps, record):
    """RK4 on the position equation.  ``u0`` may be a batch of shape (m, k)."""
    h = T / steps
    half = la.expm(-0.5 * h * Q.generator).T  # row-vector form: u @ half
    R = Q.r
    u = np.array(u0, dtype=float)
    mu = np.broadcast_to(np.asarray(mu0, dtype=float), u.shape).copy()
    if record:
        mus, us = [mu.copy()], [u.copy()]
    for j in range(steps):
        u_mid = u @ half
        u_end = u_mid @ half
        if np.any(u_mid <= 0) or np.any(u_end <= 0):
            raise PositivityLoss(f"u lost positivity near t={(j + 1) * h:.6g}")
        k1 = _field(R, u, mu)
        if np.any(np.abs(k1.sum(axis=-1)) > 1e-10 * (1 + np.abs(k1).sum(axis=-1))):
            raise MassDrift(f"generator column sums nonzero at step {j}")
        k2 = _field(R, u_mid, mu + 0.5 * h * k1)
        k3 = _field(R, u_mid, mu + 0.5 * h * k2)
        k4 = _field(R, u_end, mu + h * k3)
        mu = mu + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        u = u_end
        if record:
            mus.append(mu.copy())
            us.append(u.copy())
    drift = np.max(np.abs(mu.sum(axis=-1) - 1.0))
    if drift > 1e-8:
        raise MassDrift(f"total mass drifted by {drift:.3g}")
    if record:
        return np.array(mus), np.array(us)
    return mu


def position_flow(Q, mu0, u0, T, steps):
    """Integrate the Hamiltonian flow from (mu0, u0 = exp(f0)) over [0, T]."""
    if T < 0:
        raise ValidationError(f"T must be >= 0, got {T}", "T")
    if steps < 1:
        raise ValidationError("steps must be >= 1", "steps")
    mu0 = _check_dim(Q, mu0, "mu0")
    u0 = _positive(u0, Q.k)
    mus, us = _integrate(Q, mu0, u0, T, steps, record=True)
    return PhaseTrajectory(Q, np.linspace(0.0, T, steps + 1), mus, us)


def action(traj):
    """sum_a int_0^T f_a mu_dot_a dt - T H(mu(0), f(0)), trapezoid rule on the grid."""
    f = traj.f
    integrand = np.einsum("ij,ij->i", f, traj.velocity())
    return float(np.trapezoid(integrand, traj.times) - traj.T * hamiltonian(traj.mu[0], f[0], traj.Q))


@dataclass
class ShootResult:
    trajectory: PhaseTrajectory
    cost: float
    u0: np.ndarray
    residual: float
    restart: int
    solutions: list = field(default_factory=list)


def _newton_shoot(Q, mu0, nu, T, steps, x0, max_iter=60):
    """Damped Newton on log u0[:-1] -> mu(T)[:-1] - nu[:-1].  Returns (x, residual)."""
    k = Q.k

    def endpoint(X):
        U = np.concatenate([np.exp(X), np.ones((X.shape[0], 1))], axis=1)
        return _integrate(Q, mu0, U, T, steps, record=False)

    x = np.array(x0, dtype=float)
    F = endpoint(x[None, :])[0] - nu
    res = np.max(np.abs(F))
    for _ in range(max_iter):
        if res <= SHOOT_TOL:
            return x, res
        X = x[None, :] + FD_STEP * np.eye(k - 1)
        try:
            J = ((endpoint(X) - nu - F)[:, :-1] / FD_STEP).T
        except PositivityLoss:
            X = x[None, :] - FD_STEP * np.eye(k - 1)
            J = -((endpoint(X) - nu - F)[:, :-1] / FD_STEP).T
        try:
            step = np.linalg.solve(J, -F[:-1])
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F[:-1], rcond=None)[0]
        # keep steps bounded in log space
        scale = np.max(np.abs(step))
        if scale > 2.0:
            step *= 2.0 / scale
        t = 1.0
        while t > 1e-6:
            trial = x + t * step
            try:
                F_new = endpoint(trial[None, :])[0] - nu
                res_new = np.max(np.abs(F_new))
                if res_new < res:
                    break
            except PositivityLoss:
                pass
            t *= 0.5
        else:
            raise NoConvergence("line search failed", res)
        x, F, res = trial, F_new, res_new
    if res <= SHOOT_TOL:
        return x, res
    raise NoConvergence(f"no convergence after {max_iter} iterations", res)


def shoot(Q, mu0, nu, T, steps=None, restarts=8, seed=0, all_solutions=False):
    """Find f(0) so that the Hamiltonian flow from mu0 reaches nu at time T.

    Starts from u0 = 1, then from log-uniform random points in [e^-3, e^3]^(k-1).
    Without ``all_solutions`` the search stops at the first converged start.
    Distinct solutions (sup-norm gap above 1e-4) are listed in ``solutions``.
    """
    mu0 = _check_dim(Q, mu0, "mu0")
    nu = _check_dim(Q, nu, "nu")
    if np.any(mu0 <= 0) or np.any(nu <= 0):
        raise ValidationError("endpoints must be strictly positive", "mu0/nu")
    if not T > 0:
        raise ValidationError(f"T must be > 0, got {T}", "T")
    if steps is None:
        steps = max(1, math.ceil(T / 1e-3))
    k = Q.k
    if k == 1:
        traj = position_flow(Q, mu0, np.ones(1), T, steps)
        return ShootResult(traj, 0.0, np.ones(1), 0.0, 0, [])

    rng = np.random.default_rng(seed)
    starts = [np.zeros(k - 1)] + [rng.uniform(-3.0, 3.0, size=k - 1) for _ in range(restarts)]

    def attempt(i):
        try:
            x, res = _newton_shoot(Q, mu0, nu, T, steps, starts[i])
            return i, x, res
        except SolverFailure as exc:
            return i, None, getattr(exc, "best_residual", math.inf)

    found = []
    best_failed = math.inf
    if all_solutions:
        workers = worker_count()
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                outcomes = list(pool.map(attempt, range(len(starts))))
        else:
            outcomes = [attempt(i) for i in range(len(starts))]
    else:
        outcomes = []
        for i in range(len(starts)):
            outcomes.append(attempt(i))
            if outcomes[-1][1] is not None:
                break
    for i, x, res in outcomes:
        if x is None:
            best_failed = min(best_failed, res)
            log.debug("restart %d failed (residual %.3g)", i, res)
        else:
            found.append((res, i, x))
    if not found:
        raise NoConvergence(f"no start out of {len(starts)} reached nu", best_failed)

    found.sort(key=lambda item: (item[0], item[1]))
    solutions = []
    for res, i, x in found:
        u0 = np.append(np.exp(x), 1.0)
        traj = position_flow(Q, mu0, u0, T, steps)
        if any(np.max(np.abs(traj.mu - s.trajectory.mu)) <= DISTINCT_TOL for s in solutions):
            continue
        solutions.append(ShootResult(traj, action(traj), u0, res, i))
    best = solutions[0]
    best.solutions = solutions
    return best


@dataclass(frozen=True)
class TwoStateSolution:
    """x(t) = mu_1 - mu_2 = c1 exp(2t) + c2 exp(-2t) for the symmetric rate-1 chain."""

    c1: float
    c2: float
    T: float

    def x(self, t):
        t = np.asarray(t, dtype=float)
        return self.c1 * np.exp(2 * t) + self.c2 * np.exp(-2 * t)

    def x_dot(self, t):
        t = np.asarray(t, dtype=float)
        return 2 * self.c1 * np.exp(2 * t) - 2 * self.c2 * np.exp(-2 * t)

    def mu(self, t):
        x = self.x(t)
        return np.stack([(1 + x) / 2, (1 - x) / 2], axis=-1)

    def cost(self):
        """Path cost, integrating the two-state Lagrangian in closed form by adaptive quadrature."""
        from scipy.integrate import quad

        def lag(t):
            p = (1 + float(self.x(t))) / 2
            a = float(self.x_dot(t)) / 2
            y = (a + math.sqrt(a * a + 4 * p * (1 - p))) / (2 * (1 - p))
            return a * math.log(y) - p * (1 / y - 1) - (1 - p) * (y - 1)

        return quad(lag, 0.0, self.T, epsabs=1e-12, epsrel=1e-12, limit=200)[0]


def two_state_oracle(mu0, nu, T):
    """Closed-form optimal path between two distributions of the symmetric two-state chain."""
    mu0 = np.asarray(mu0, dtype=float)
    nu = np.asarray(nu, dtype=float)
    x0, xT = mu0[0] - mu0[1], nu[0] - nu[1]
    A = np.array([[1.0, 1.0], [math.exp(2 * T), math.exp(-2 * T)]])
    c1, c2 = np.linalg.solve(A, [x0, xT])
    return TwoStateSolution(float(c1), float(c2), float(T))


def kolmogorov_gap(Q, mu0, traj):
    """Largest deviation of a zero-momentum trajectory from exp(tQ*) mu0."""
    return max(np.max(np.abs(m - evolve(Q, mu0, t))) for t, m in zip(traj.times, traj.mu))
