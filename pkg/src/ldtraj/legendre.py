"""Lagrangian of a finite chain by Legendre transform of the Hamiltonian.

L(mu, alpha) = sup_f <f, alpha> - H(mu, f).  The supremum is found by damped
Newton on the momentum with the last coordinate pinned to zero; the reduced
Hessian is positive definite for mu > 0 on an irreducible chain.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .chain import RateMatrix, _check_dim
from .errors import Infeasible, MomentumOverflow, SupportViolation, ZeroMass
from .hamiltonian import grad_f, hamiltonian, hessian_f, tilted_rates

log = logging.getLogger(__name__)

MASS_FLOOR = 1e-12
RESIDUAL_TOL = 1e-10
MAX_ITER = 200
MAX_NORM = 1e3


@dataclass(frozen=True)
class ModifiedRates:
    """Tilted rates r*(b,a) = r(b,a) exp(f*_a - f*_b) and the momentum that built them."""

    r_star: np.ndarray
    momentum: np.ndarray

    @property
    def chain(self):
        return RateMatrix(self.r_star)


def _check_inputs(mu, alpha, Q):
    mu = _check_dim(Q, mu, "mu")
    alpha = _check_dim(Q, alpha, "alpha")
    if np.any(mu < MASS_FLOOR):
        raise ZeroMass(f"entry {int(np.argmin(mu))} is {mu.min():.3g}; strictly positive mu required", "mu")
    return mu, alpha


def _polish(mu, alpha, Q, f, resid):
    # one undamped step from inside the quadratic basin; kept only if it helps
    try:
        trial = f.copy()
        trial[:-1] += np.linalg.solve(hessian_f(mu, f, Q)[:-1, :-1], resid[:-1])
        if np.max(np.abs(alpha - grad_f(mu, trial, Q))) < np.max(np.abs(resid)):
            return trial
    except (np.linalg.LinAlgError, MomentumOverflow):
        pass
    return f


def optimal_momentum(mu, alpha, Q, tol=RESIDUAL_TOL):
    """Maximizer f* of <f, alpha> - H(mu, f), gauge-fixed so that f*[-1] == 0.

    Raises Infeasible when the iterates run off (alpha needs flow along an
    edge with zero rate, so the supremum is infinite).
    """
    mu, alpha = _check_inputs(mu, alpha, Q)
    k = Q.k
    f = np.zeros(k)
    if k == 1:
        return f

    def objective(g):
        return float(alpha @ g) - hamiltonian(mu, g, Q)

    try:
        phi = objective(f)
        for it in range(MAX_ITER):
            resid = alpha - grad_f(mu, f, Q)
            if np.max(np.abs(resid)) <= tol:
                log.debug("newton converged in %d iterations", it)
                return _polish(mu, alpha, Q, f, resid)
            hess = hessian_f(mu, f, Q)[:-1, :-1]
            try:
                step = np.linalg.solve(hess, resid[:-1])
            except np.linalg.LinAlgError:
                raise Infeasible("degenerate Hessian: chain is not connected on the support") from None
            slope = float(resid[:-1] @ step)
            t = 1.0
            while True:
                trial = f.copy()
                trial[:-1] += t * step
                try:
                    phi_new = objective(trial)
                except MomentumOverflow:
                    phi_new = -math.inf
                # slack absorbs roundoff once phi has converged to machine precision
                if phi_new >= phi + 1e-4 * t * slope - 1e-14 * (1 + abs(phi)):
                    break
                t *= 0.5
                if t < 1e-12:
                    raise Infeasible("line search stalled: velocity not producible on the rate support")
            f, phi = trial, phi_new
            if np.max(np.abs(f)) > MAX_NORM:
                raise Infeasible(f"momentum norm exceeded {MAX_NORM:g}: velocity not producible on the rate support")
    except MomentumOverflow as exc:
        raise Infeasible(str(exc)) from None
    raise Infeasible(f"no convergence in {MAX_ITER} Newton iterations")


def lagrangian(mu, alpha, Q, on_infeasible="raise"):
    """L(mu, alpha) >= 0.  With ``on_infeasible="inf"`` an infeasible velocity returns math.inf."""
    try:
        f = optimal_momentum(mu, alpha, Q)
    except Infeasible:
        if on_infeasible == "inf":
            return math.inf
        raise
    return float(np.asarray(alpha) @ f) - hamiltonian(mu, f, Q)


def modified_rates(mu, alpha, Q):
    f = optimal_momentum(mu, alpha, Q)
    rs = tilted_rates(Q, f)
    rs.setflags(write=False)
    return ModifiedRates(rs, f)


def entropy_rate(mu, r_star, Q):
    """Short-time relative entropy rate of the chain with rates r* against Q, started from mu.

    sum_{b,a} mu_b [ r*(b,a) log(r*(b,a)/r(b,a)) - (r*(b,a) - r(b,a)) ]
    """
    rs = np.asarray(getattr(r_star, "r_star", r_star), dtype=float)
    mu = _check_dim(Q, mu, "mu")
    if rs.shape != Q.r.shape:
        raise SupportViolation(f"shape {rs.shape}, expected {Q.r.shape}", "r_star")
    if np.any(rs < 0):
        raise SupportViolation("negative modified rate", "r_star")
    bad = (rs > 0) & (Q.r == 0)
    if np.any(bad):
        b, a = np.argwhere(bad)[0]
        raise SupportViolation("positive rate on an edge with zero reference rate", f"r_star[{b}][{a}]")
    ratio = np.ones_like(rs)
    np.divide(rs, Q.r, out=ratio, where=rs > 0)
    per_edge = rs * np.log(ratio) - (rs - Q.r)
    return float(mu @ per_edge.sum(axis=1))
