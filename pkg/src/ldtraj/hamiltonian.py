"""Empirical-distribution Hamiltonian of a finite chain and its gradients.

H(mu, f) = sum_{a,b} mu_a r(a,b) (exp(f_b - f_a) - 1)

Only momentum differences enter, so every function here is invariant under
f -> f + c.
"""

import numpy as np

from .chain import _check_dim
from .errors import MomentumOverflow, ValidationError

EXP_LIMIT = 700.0


def _tilt(Q, f):
    """Matrix exp(f_b - f_a), guarded against overflow."""
    f = _check_dim(Q, f, "f")
    spread = f.max() - f.min()
    if spread > EXP_LIMIT:
        raise MomentumOverflow(f"momentum spread {spread:.4g} exceeds {EXP_LIMIT}")
    return np.exp(f[None, :] - f[:, None])


def tilted_rates(Q, f):
    """r(a,b) exp(f_b - f_a): the rates steered by momentum f."""
    return Q.r * _tilt(Q, f)


def hamiltonian(mu, f, Q):
    mu = _check_dim(Q, mu, "mu")
    return float(mu @ (Q.r * (_tilt(Q, f) - 1.0)).sum(axis=1))


def grad_f(mu, f, Q):
    """dH/df: forward velocity of the chain with tilted rates."""
    mu = _check_dim(Q, mu, "mu")
    rt = tilted_rates(Q, f)
    return rt.T @ mu - rt.sum(axis=1) * mu


def grad_mu(f, Q):
    """dH/dmu_a = sum_b r(a,b)(exp(f_b - f_a) - 1), unconstrained partial derivative."""
    return (Q.r * (_tilt(Q, f) - 1.0)).sum(axis=1)


def hessian_f(mu, f, Q):
    """d^2H/df^2, a weighted graph Laplacian with edge weights mu_a r~(a,b) + mu_b r~(b,a)."""
    mu = _check_dim(Q, mu, "mu")
    w = mu[:, None] * tilted_rates(Q, f)
    w = w + w.T
    return np.diag(w.sum(axis=1)) - w


def finite_n_consistency(points, f, Q):
    """Compare the N-copy generator computation with H at the empirical distribution.

    Returns ``(exact, limit)`` where ``exact`` is
    ``(1/N) exp(-sum_i f(x_i)) [Q_N exp(sum_i f(x_i))]`` evaluated with the
    product generator acting one coordinate at a time, and ``limit`` is
    ``hamiltonian(L_N, f, Q)``.
    """
    points = [int(x) for x in points]
    if not points:
        raise ValidationError("need at least one point", "points")
    f = _check_dim(Q, f, "f")
    if any(x < 0 or x >= Q.k for x in points):
        raise ValidationError(f"states must lie in 0..{Q.k - 1}", "points")
    _tilt(Q, f)
    n = len(points)
    s = sum(f[x] for x in points)
    acc = 0.0
    for x in points:
        for b in range(Q.k):
            rate = Q.r[x, b]
            if rate:
                acc += rate * (np.exp(s - f[x] + f[b]) - np.exp(s))
    exact = float(np.exp(-s) * acc / n)
    empirical = np.bincount(points, minlength=Q.k) / n
    return exact, hamiltonian(empirical, f, Q)
