"""Monte-Carlo checks: Gillespie sampling, empirical distributions, Girsanov entropy rates.

Every copy or replica i draws from its own Philox stream keyed by ``seed ^ i``,
so results do not depend on how work is split across threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.integrate import quad

from ._parallel import worker_count
from .chain import _check_dim
from .errors import SupportViolation, ValidationError
from .legendre import entropy_rate


def stream(seed, index=0):
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(index)) & (2**64 - 1)))


@dataclass(frozen=True)
class PathRecord:
    x0: int
    times: np.ndarray  # jump times in (0, T]
    moves: np.ndarray  # (n_jumps, 2) of (from, to)
    T: float

    def state_at(self, t):
        i = np.searchsorted(self.times, t, side="right")
        return int(self.moves[i - 1, 1]) if i else self.x0

    def occupation(self, k):
        """Time spent in each state over [0, T]."""
        out = np.zeros(k)
        edges = np.concatenate([[0.0], self.times, [self.T]])
        states = np.concatenate([[self.x0], self.moves[:, 1]]).astype(int)
        np.add.at(out, states, np.diff(edges))
        return out


def _run(r, exit_rates, x, T, rng):
    """One trajectory on [0, T] from state x: (times, moves)."""
    t, times, moves = 0.0, [], []
    while True:
        lam = exit_rates[x]
        if lam <= 0:
            break
        t += rng.exponential(1.0 / lam)
        if t > T:
            break
        y = int(rng.choice(len(exit_rates), p=r[x] / lam))
        times.append(t)
        moves.append((x, y))
        x = y
    return times, moves


def gillespie(Q, x0, T, seed):
    """Exact sample path of the chain on [0, T] started at ``x0``."""
    if T < 0:
        raise ValidationError(f"T must be >= 0, got {T}", "T")
    if not 0 <= x0 < Q.k:
        raise ValidationError(f"state {x0} out of range", "x0")
    times, moves = _run(Q.r, Q.exit_rates, int(x0), T, stream(seed))
    return PathRecord(int(x0), np.array(times), np.array(moves, dtype=int).reshape(-1, 2), float(T))


def _draw_state(rng, mu):
    return int(min(np.searchsorted(np.cumsum(mu), rng.random(), side="right"), mu.size - 1))


def _chunked(fn, n):
    """Apply ``fn(lo, hi)`` over index chunks and concatenate in index order."""
    workers = min(worker_count(), max(1, n // 2000))
    bounds = np.linspace(0, n, workers + 1, dtype=int)
    pieces = list(zip(bounds[:-1], bounds[1:]))
    if workers == 1:
        return np.concatenate([fn(lo, hi) for lo, hi in pieces])
    with ThreadPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(lambda p: fn(*p), pieces)))


@dataclass(frozen=True)
class EmpiricalTrajectory:
    times: np.ndarray
    dists: np.ndarray  # (len(times), k), rows are fractions of copies
    N: int


def empirical_trajectory(Q, mu0, N, T, samples, seed):
    """Empirical distribution of N independent copies at ``samples`` uniform times in [0, T]."""
    if N < 1:
        raise ValidationError("N must be >= 1", "N")
    if samples < 1:
        raise ValidationError("samples must be >= 1", "samples")
    mu0 = _check_dim(Q, mu0, "mu0")
    times = np.linspace(0.0, T, samples)
    r, lam = Q.r, Q.exit_rates

    def block(lo, hi):
        out = np.empty((hi - lo, samples), dtype=int)
        for i in range(lo, hi):
            rng = stream(seed, i)
            x0 = _draw_state(rng, mu0)
            jt, mv = _run(r, lam, x0, T, rng)
            states = np.concatenate([[x0], [m[1] for m in mv]]).astype(int)
            out[i - lo] = states[np.searchsorted(jt, times, side="right")]
        return out

    states = _chunked(block, N)
    dists = np.stack([np.bincount(states[:, j], minlength=Q.k) for j in range(samples)]) / N
    return EmpiricalTrajectory(times, dists, N)


def _check_support(Q, r_star):
    rs = np.asarray(getattr(r_star, "r_star", r_star), dtype=float)
    if rs.shape != Q.r.shape:
        raise SupportViolation(f"shape {rs.shape}, expected {Q.r.shape}", "r_star")
    bad = (rs > 0) & (Q.r == 0)
    if np.any(bad) or np.any(rs < 0):
        raise SupportViolation("modified rates leave the support of the reference rates", "r_star")
    return rs


def girsanov_entropy_rate(Q, r_star, mu, T, reps, seed, compensated=False):
    """Estimate (1/T) s(P_{r*} | P_r) on [0, T] from paths of the r* chain started in mu.

    Each path contributes (1/T)[sum over jumps of log(r*/r) - int (lambda* - lambda)(x_s) ds],
    the log Radon-Nikodym derivative.  With ``compensated`` the jump sum is
    replaced by its compensator, which has the same mean and lower variance.
    Returns (mean, standard error).
    """
    rs = _check_support(Q, r_star)
    mu = _check_dim(Q, mu, "mu")
    if not T > 0:
        raise ValidationError(f"T must be > 0, got {T}", "T")
    if reps < 2:
        raise ValidationError("reps must be >= 2", "reps")
    log_ratio = np.zeros_like(rs)
    np.log(rs / np.where(Q.r > 0, Q.r, 1.0), out=log_ratio, where=rs > 0)
    lam_star = rs.sum(axis=1)
    extra = lam_star - Q.exit_rates
    phi = (rs * log_ratio).sum(axis=1) - extra

    def block(lo, hi):
        out = np.empty(hi - lo)
        for i in range(lo, hi):
            rng = stream(seed, i)
            x0 = _draw_state(rng, mu)
            jt, mv = _run(rs, lam_star, x0, T, rng)
            path = PathRecord(x0, np.array(jt), np.array(mv, dtype=int).reshape(-1, 2), T)
            occ = path.occupation(Q.k)
            if compensated:
                out[i - lo] = phi @ occ
            else:
                jumps = sum(log_ratio[a, b] for a, b in mv)
                out[i - lo] = jumps - extra @ occ
        return out / T

    values = _chunked(block, reps)
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(reps))


def exact_entropy_rate(Q, r_star, mu, T):
    """(1/T) s(P_{r*} | P_r) on [0, T] computed deterministically from the r* forward flow."""
    rs = _check_support(Q, r_star)
    mu = _check_dim(Q, mu, "mu")
    log_ratio = np.zeros_like(rs)
    np.log(rs / np.where(Q.r > 0, Q.r, 1.0), out=log_ratio, where=rs > 0)
    phi = (rs * log_ratio).sum(axis=1) - (rs.sum(axis=1) - Q.exit_rates)
    G = rs - np.diag(rs.sum(axis=1))
    if T == 0:
        return entropy_rate(mu, rs, Q)
    val = quad(lambda s: float(mu @ la.expm(s * G) @ phi), 0.0, T, epsabs=1e-13, epsrel=1e-12)[0]
    return val / T
