"""Finite-state continuous-time Markov chains: generator, adjoint, forward flow."""

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError

SUM_TOL = 1e-12


def _readonly(x):
    x = np.array(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class RateMatrix:
    """Off-diagonal jump rates ``r[a, b]`` from state ``a`` to state ``b``."""

    r: np.ndarray
    states: tuple = None
    irreducible: bool = field(init=False)

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] == 0:
            raise ValidationError(f"expected a square matrix, got shape {r.shape}", "rates")
        k = r.shape[0]
        for a in range(k):
            if r[a, a] != 0.0:
                raise ValidationError("diagonal rate must be 0", f"rates[{a}][{a}]")
            for b in range(k):
                if not np.isfinite(r[a, b]) or r[a, b] < 0:
                    raise ValidationError(f"rate must be finite and >= 0, got {r[a, b]}", f"rates[{a}][{b}]")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)
        states = tuple(str(s) for s in self.states) if self.states is not None else tuple(str(i + 1) for i in range(k))
        if len(states) != k:
            raise ValidationError(f"{len(states)} state names for {k} states", "states")
        object.__setattr__(self, "states", states)
        ncomp, _ = connected_components(r > 0, directed=True, connection="strong")
        object.__setattr__(self, "irreducible", bool(ncomp == 1))

    @property
    def k(self):
        return self.r.shape[0]

    @property
    def exit_rates(self):
        return self.r.sum(axis=1)

    @property
    def generator(self):
        """Generator matrix G with ``(Qf)(a) = (G @ f)[a]``; rows sum to zero."""
        G = self.r.copy()
        G[np.diag_indices(self.k)] = -self.exit_rates
        return G

    def __eq__(self, other):
        return isinstance(other, RateMatrix) and np.array_equal(self.r, other.r)

    def __hash__(self):
        return hash(self.r.tobytes())


def two_state(r12=1.0, r21=1.0):
    return RateMatrix([[0.0, r12], [r21, 0.0]])


def load_model(path):
    """Read ``{"states": [...], "rates": [[...], ...]}`` from a JSON file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}", str(path)) from None
    return model_from_dict(data)


def model_from_dict(data):
    if not isinstance(data, dict) or "rates" not in data:
        raise ValidationError("missing required key", "rates")
    rates = data["rates"]
    if not isinstance(rates, list) or not all(isinstance(row, list) for row in rates):
        raise ValidationError("must be a list of lists", "rates")
    k = len(rates)
    for a, row in enumerate(rates):
        if len(row) != k:
            raise ValidationError(f"row has {len(row)} entries, expected {k}", f"rates[{a}]")
        for b, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValidationError(f"not a number: {v!r}", f"rates[{a}][{b}]")
    return RateMatrix(rates, data.get("states"))


def model_to_dict(Q):
    return {"states": list(Q.states), "rates": Q.r.tolist()}


def prob_dist(mu, k=None):
    """Validate a probability vector; returns a read-only float array."""
    mu = np.array(mu, dtype=float).ravel()
    if k is not None and mu.size != k:
        raise ValidationError(f"length {mu.size}, expected {k}", "mu")
    if np.any(~np.isfinite(mu)) or np.any(mu < 0):
        raise ValidationError("entries must be finite and nonnegative", "mu")
    if abs(mu.sum() - 1.0) > SUM_TOL:
        raise ValidationError(f"entries sum to {mu.sum():.15g}, not 1", "mu")
    return _readonly(mu)


def velocity(alpha, k=None):
    """Validate a zero-mass signed vector."""
    alpha = np.array(alpha, dtype=float).ravel()
    if k is not None and alpha.size != k:
        raise ValidationError(f"length {alpha.size}, expected {k}", "alpha")
    if np.any(~np.isfinite(alpha)):
        raise ValidationError("entries must be finite", "alpha")
    if abs(alpha.sum()) > SUM_TOL:
        raise ValidationError(f"entries sum to {alpha.sum():.3g}, not 0", "alpha")
    return _readonly(alpha)


def _check_dim(Q, v, name):
    v = np.asarray(v, dtype=float)
    if v.shape != (Q.k,):
        raise ValidationError(f"shape {v.shape}, expected ({Q.k},)", name)
    return v


def generator_apply(Q, f):
    """(Qf)(a) = sum_b r(a,b) (f(b) - f(a))."""
    f = _check_dim(Q, f, "f")
    return Q.r @ f - Q.exit_rates * f


def forward_velocity(Q, mu):
    """Right-hand side of the Kolmogorov forward equation, Q* mu."""
    mu = _check_dim(Q, mu, "mu")
    return Q.r.T @ mu - Q.exit_rates * mu


def evolve(Q, mu, t):
    """exp(t Q*) mu."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t}", "t")
    mu = _check_dim(Q, mu, "mu")
    if t == 0:
        return mu.copy()
    out = la.expm(t * Q.generator.T) @ mu
    if np.any(out < -1e-10):
        raise ValidationError(f"evolved distribution has negative entry {out.min():.3g}", "mu")
    out = np.clip(out, 0.0, None)
    if abs(out.sum() - 1.0) > SUM_TOL:
        out /= out.sum()
    return out


def stationary(Q):
    """Stationary distribution of an irreducible chain."""
    G = Q.generator
    A = np.vstack([G.T, np.ones(Q.k)])
    rhs = np.zeros(Q.k + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return pi / pi.sum()


def random_chain(rng, k, low=0.1, high=2.0):
    """Fully connected chain with off-diagonal rates drawn from U(low, high)."""
    r = rng.uniform(low, high, size=(k, k))
    np.fill_diagonal(r, 0.0)
    return RateMatrix(r)


def random_prob(rng, k, floor=0.05):
    """Strictly positive random distribution with every entry above ``floor / k``."""
    w = rng.dirichlet(np.ones(k))
    mu = (1 - floor) * w + floor / k
    return mu / mu.sum()
