"""Local functions on spin lattices and the non-linear operator K_Q of a local jump generator.

A local function is a dense table over E^D for a finite dependence set D of
lattice sites.  Shifts act by translating D, (tau_k f)(sigma) = f(tau_k sigma)
with (tau_k sigma)_j = sigma_{j+k}.  For a source generator
Q f = sum_alpha r_alpha (T_alpha f - f) the operator

    K_Q f = sum_alpha r_alpha (exp(D_alpha f) - 1),
    D_alpha f = sum_k (T_alpha(tau_k f) - tau_k f),

is again local, and its expectation under a translation-invariant measure is
the empirical-measure Hamiltonian.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, WindowOverflow

MAX_SITES = 12


def _site(s, d=None):
    s = (int(s),) if np.isscalar(s) else tuple(int(c) for c in s)
    if d is not None and len(s) != d:
        raise ValidationError(f"site {s} has dimension {len(s)}, expected {d}", "site")
    return s


def _add(s, k):
    return tuple(a + b for a, b in zip(s, k))


@dataclass(frozen=True)
class LocalFunction:
    sites: tuple
    E: tuple
    table: np.ndarray

    def __post_init__(self):
        sites = tuple(_site(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValidationError("repeated site in dependence set", "sites")
        if len(sites) > MAX_SITES:
            raise ValidationError(f"dependence set of {len(sites)} sites exceeds {MAX_SITES}", "sites")
        order = sorted(range(len(sites)), key=lambda i: sites[i])
        table = np.asarray(self.table, dtype=float)
        if table.shape != (len(self.E),) * len(sites):
            raise ValidationError(f"table shape {table.shape} does not match |E|^|D|", "table")
        table = np.transpose(table, order) if sites else table
        table = np.array(table)
        table.setflags(write=False)
        object.__setattr__(self, "sites", tuple(sites[i] for i in order))
        object.__setattr__(self, "E", tuple(self.E))
        object.__setattr__(self, "table", table)

    @classmethod
    def constant(cls, E, c):
        return cls((), E, np.array(float(c)))

    @classmethod
    def from_callable(cls, sites, E, fn):
        """Tabulate ``fn(values)`` where ``values`` lists the spins on ``sites`` in the given order."""
        sites = [_site(s) for s in sites]
        E = tuple(E)
        table = np.empty((len(E),) * len(sites))
        for idx in itertools.product(range(len(E)), repeat=len(sites)):
            table[idx] = fn(tuple(E[i] for i in idx))
        return cls(tuple(sites), E, table)

    @property
    def dim(self):
        return len(self.sites[0]) if self.sites else None

    def __call__(self, values):
        """Evaluate on a mapping site -> spin value."""
        idx = tuple(self.E.index(values[s]) for s in self.sites)
        return float(self.table[idx])

    def on(self, sites):
        """Table broadcast onto a sorted superset of the dependence set."""
        sites = tuple(sorted(sites))
        missing = set(self.sites) - set(sites)
        if missing:
            raise ValidationError(f"sites {sorted(missing)} not in target set", "sites")
        shape = [len(self.E) if s in self.sites else 1 for s in sites]
        t = self.table.reshape(shape)
        return np.broadcast_to(t, (len(self.E),) * len(sites))

    def _binary(self, other, op):
        if not isinstance(other, LocalFunction):
            return LocalFunction(self.sites, self.E, op(self.table, float(other)))
        if other.E != self.E:
            raise ValidationError("single-site spaces differ", "E")
        union = tuple(sorted(set(self.sites) | set(other.sites)))
        return LocalFunction(union, self.E, op(self.on(union), other.on(union)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return LocalFunction(self.sites, self.E, -self.table)

    def exp(self):
        return LocalFunction(self.sites, self.E, np.exp(self.table))

    def trim(self):
        """Drop coordinates the table does not depend on."""
        t, keep = self.table, []
        for axis in reversed(range(t.ndim)):
            first = np.take(t, [0], axis=axis)
            if np.array_equal(t, np.broadcast_to(first, t.shape)):
                t = np.take(t, 0, axis=axis)
            else:
                keep.append(self.sites[axis])
        return LocalFunction(tuple(reversed(keep)), self.E, t)

    def equals(self, other):
        """Exact equality as functions (tables compared on the union of dependence sets)."""
        union = tuple(sorted(set(self.sites) | set(other.sites)))
        return self.E == other.E and np.array_equal(self.on(union), other.on(union))

    def expectation(self, weights):
        """Integral against the product measure with single-site weights."""
        p = np.asarray(weights, dtype=float)
        if p.shape != (len(self.E),) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValidationError("single-site weights must be a probability vector over E", "weights")
        t = self.table
        for _ in range(t.ndim):
            t = t @ p
        return float(t)


def ising_monomial(A, E=(-1, 1)):
    """H_A(sigma) = prod_{i in A} sigma_i."""
    A = [_site(s) for s in A]
    return LocalFunction.from_callable(A, E, lambda v: float(np.prod(v)) if v else 1.0)


def occupation(site=0, E=(0, 1)):
    return LocalFunction.from_callable([site], E, lambda v: float(v[0]))


def shift(f, k):
    """tau_k f, whose dependence set is D_f + k."""
    if not f.sites:
        return f
    k = _site(k, f.dim)
    return LocalFunction(tuple(_add(s, k) for s in f.sites), f.E, f.table)


@dataclass(frozen=True)
class Transformation:
    """Deterministic map of the spins on ``sites``; ``mapping[i]`` is the image of flat index i of E^sites."""

    sites: tuple
    E: tuple
    mapping: np.ndarray

    def __post_init__(self):
        sites = tuple(_site(s) for s in self.sites)
        mapping = np.asarray(self.mapping, dtype=int).ravel()
        size = len(self.E) ** len(sites)
        if mapping.size != size or np.any(mapping < 0) or np.any(mapping >= size):
            raise ValidationError(f"mapping must send {size} indices into range({size})", "mapping")
        if sorted(sites) != list(sites):
            # reorder flat indices so that sites are stored sorted
            order = sorted(range(len(sites)), key=lambda i: sites[i])
            shape = (len(self.E),) * len(sites)
            perm = np.arange(size).reshape(shape).transpose(order).ravel()
            inv = np.argsort(perm)
            mapping = inv[mapping[perm]]
            sites = tuple(sites[i] for i in order)
        mapping.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "E", tuple(self.E))
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def from_callable(cls, sites, E, fn):
        sites = [_site(s) for s in sites]
        E = tuple(E)
        n = len(E)
        shape = (n,) * len(sites)
        mapping = []
        for idx in itertools.product(range(n), repeat=len(sites)):
            image = fn(tuple(E[i] for i in idx))
            mapping.append(np.ravel_multi_index(tuple(E.index(v) for v in image), shape))
        return cls(tuple(sites), E, mapping)

    def apply(self, f):
        """(T f)(sigma) = f(T sigma)."""
        union = tuple(sorted(set(f.sites) | set(self.sites)))
        t = np.array(f.on(union))
        axes = [union.index(s) for s in self.sites]
        rest = [i for i in range(len(union)) if i not in axes]
        moved = np.transpose(t, axes + rest)
        lead = len(self.E) ** len(axes)
        flat = moved.reshape((lead,) + moved.shape[len(axes):])
        out = flat[self.mapping].reshape(moved.shape)
        return LocalFunction(union, f.E, np.transpose(out, np.argsort(axes + rest)))

    def act(self, values):
        """Image of the spins {site: value} (only ``sites`` are read)."""
        shape = (len(self.E),) * len(self.sites)
        flat = np.ravel_multi_index(tuple(self.E.index(values[s]) for s in self.sites), shape)
        image = np.unravel_index(self.mapping[flat], shape)
        return {s: self.E[i] for s, i in zip(self.sites, image)}


def spin_flip_map(E=(-1, 1), site=0, theta=None):
    """theta applied to the spin at ``site``; default theta cycles E (a swap when |E| = 2)."""
    E = tuple(E)
    theta = theta or (lambda v: E[(E.index(v) + 1) % len(E)])
    return Transformation.from_callable([site], E, lambda v: (theta(v[0]),))


def swap_map(E=(0, 1), a=0, b=1):
    """Exchange of the spins at two sites."""
    return Transformation.from_callable([a, b], E, lambda v: (v[1], v[0]))


@dataclass(frozen=True)
class LocalJumpGenerator:
    """Q f = sum_alpha r_alpha (T_alpha f - f)."""

    E: tuple
    transitions: tuple  # of (Transformation, LocalFunction rate)

    def __post_init__(self):
        trans = tuple((T, r) for T, r in self.transitions)
        for i, (T, r) in enumerate(trans):
            if T.E != tuple(self.E) or r.E != tuple(self.E):
                raise ValidationError("single-site space mismatch", f"transitions[{i}]")
            if np.any(r.table < 0):
                raise ValidationError("rates must be nonnegative", f"transitions[{i}].rate")
        object.__setattr__(self, "E", tuple(self.E))
        object.__setattr__(self, "transitions", trans)

    @property
    def sites(self):
        """D_Q, the coordinates the generator changes."""
        return tuple(sorted({s for T, _ in self.transitions for s in T.sites}))

    def apply(self, f):
        acc = LocalFunction.constant(self.E, 0.0)
        for T, r in self.transitions:
            acc = acc + r * (T.apply(f) - f)
        return acc.trim()


def spin_flip(E=(-1, 1), rate=None, theta=None):
    E = tuple(E)
    rate = rate if rate is not None else LocalFunction.constant(E, 1.0)
    return LocalJumpGenerator(E, [(spin_flip_map(E, theta=theta), rate)])


def exclusion(rate=1.0, d=1):
    """Symmetric exclusion bond between the origin and its right neighbour (first axis)."""
    E = (0, 1)
    origin = (0,) * d
    right = (1,) + (0,) * (d - 1)
    return LocalJumpGenerator(E, [(swap_map(E, origin, right), LocalFunction.constant(E, rate))])


def local_averaging(E, sites, m, rate=None):
    """Resample the spins on ``sites`` from ``m`` at rate ``rate``.

    ``m`` maps tuples of spin values (one per site) to probabilities; each
    support point becomes a constant transformation carrying weight m(x).
    """
    E = tuple(E)
    rate = rate if rate is not None else LocalFunction.constant(E, 1.0)
    total = sum(m.values())
    if abs(total - 1) > 1e-12 or any(w < 0 for w in m.values()):
        raise ValidationError("m must be a probability over E^D", "m")
    trans = []
    for target, w in m.items():
        if w > 0:
            T = Transformation.from_callable(sites, E, lambda v, target=tuple(target): target)
            trans.append((T, rate * w))
    return LocalJumpGenerator(E, trans)


def contributing_shifts(f, sites):
    """The k with (D_f + k) meeting ``sites``, in sorted order."""
    return sorted({tuple(a - b for a, b in zip(s, t)) for s in sites for t in f.sites})


def d_alpha(f, T):
    """D_alpha f = sum_k (T(tau_k f) - tau_k f) over the finitely many contributing k."""
    acc = LocalFunction.constant(f.E, 0.0)
    for k in contributing_shifts(f, T.sites):
        g = shift(f, k)
        acc = acc + (T.apply(g) - g)
    return acc.trim()


def k_q(f, gen):
    """K_Q f = sum_alpha r_alpha (exp(D_alpha f) - 1)."""
    acc = LocalFunction.constant(gen.E, 0.0)
    for T, r in gen.transitions:
        acc = acc + r * (d_alpha(f, T).exp() - 1.0)
    return acc.trim()


@dataclass(frozen=True)
class Torus:
    """Sites {-N..N}^d with addition mod 2N+1."""

    d: int
    N: int

    def __post_init__(self):
        if self.d < 1 or self.N < 0:
            raise ValidationError("need d >= 1 and N >= 0", "torus")

    @property
    def L(self):
        return 2 * self.N + 1

    @property
    def size(self):
        return self.L**self.d

    def sites(self):
        return list(itertools.product(range(-self.N, self.N + 1), repeat=self.d))

    def index(self, s):
        """Array index of a (possibly unwrapped) site."""
        return tuple((c + self.N) % self.L for c in _site(s, self.d))

    def check(self, sites):
        sites = [_site(s, self.d) for s in sites]
        if not sites:
            return
        for axis in range(self.d):
            coords = [s[axis] for s in sites]
            if max(coords) - min(coords) >= self.L:
                raise WindowOverflow(
                    f"dependence set spans {max(coords) - min(coords)} along axis {axis}; torus width is {self.L}"
                )

    def configurations(self, E):
        """Every configuration, as index arrays of shape (L,)*d, site-lexicographic."""
        for flat in itertools.product(range(len(E)), repeat=self.size):
            yield np.array(flat, dtype=int).reshape((self.L,) * self.d)


@dataclass(frozen=True)
class SpinConfig:
    torus: Torus
    E: tuple
    idx: np.ndarray  # indices into E, axes ordered -N..N

    @classmethod
    def from_values(cls, torus, E, values):
        E = tuple(E)
        arr = np.asarray(values, dtype=object).reshape((torus.L,) * torus.d)
        try:
            idx = np.vectorize(E.index, otypes=[int])(arr)
        except ValueError:
            raise ValidationError("configuration holds a value outside E", "config") from None
        return cls(torus, E, idx)

    def value(self, s):
        return self.E[self.idx[self.torus.index(s)]]

    def shifted(self, k):
        """tau_k sigma."""
        k = _site(k, self.torus.d)
        return SpinConfig(self.torus, self.E, np.roll(self.idx, [-c for c in k], axis=tuple(range(self.torus.d))))

    def evaluate(self, f):
        self.torus.check(f.sites)
        if not f.sites:
            return float(f.table)
        return float(f.table[tuple(self.idx[self.torus.index(s)] for s in f.sites)])

    def transformed(self, T, at=None):
        """Apply T on the sites D_T (+ ``at``), wrapping around the torus."""
        at = _site(at, self.torus.d) if at is not None else (0,) * self.torus.d
        placed = [_add(s, at) for s in T.sites]
        image = T.act({s: self.value(p) for s, p in zip(T.sites, placed)})
        idx = self.idx.copy()
        for s, p in zip(T.sites, placed):
            idx[self.torus.index(p)] = self.E.index(image[s])
        return SpinConfig(self.torus, self.E, idx)


def empirical_measure_of(config, test_fns):
    """<L_N(sigma), f_j> = (1/|T_N|) sum_i f_j(tau_i sigma) for each test function."""
    torus = config.torus
    out = []
    for f in test_fns:
        torus.check(f.sites)
        total = sum(config.evaluate(shift(f, i)) for i in torus.sites())
        out.append(total / torus.size)
    return np.array(out)


def torus_hamiltonian(weights, f, gen, torus):
    """int K_Q f d mu for the product measure with single-site ``weights``."""
    K = k_q(f, gen)
    torus.check(K.sites)
    for T, r in gen.transitions:
        torus.check(tuple(T.sites) + tuple(r.sites))
    return K.expectation(weights)


def k_q_direct(f, gen, config):
    """K_Q f at one torus configuration straight from exp(-F) Q exp(F).

    F = sum of tau_k f over the window {k : D_Q meets D_f + k}.
    """
    window = contributing_shifts(f, gen.sites) if f.sites else []
    shifted = [shift(f, k) for k in window]

    def F(c):
        return sum((c.evaluate(g) for g in shifted), 0.0)

    base = F(config)
    total = 0.0
    for T, r in gen.transitions:
        total += config.evaluate(r) * (np.exp(F(config.transformed(T)) - base) - 1.0)
    return total


def torus_nonlinear_generator(f, gen, config):
    """(1/|T_N|) exp(-S) L_N exp(S) at ``config`` with S = sum_i tau_i f over the whole torus."""
    torus = config.torus
    torus.check(f.sites)

    def S(c):
        return sum(c.evaluate(shift(f, i)) for i in torus.sites())

    base = S(config)
    total = 0.0
    for j in torus.sites():
        moved = config.shifted(j)
        for T, r in gen.transitions:
            total += moved.evaluate(r) * (np.exp(S(moved.transformed(T)) - base) - 1.0)
    return total / torus.size


def _function_from_spec(spec, E, field):
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return LocalFunction.constant(E, spec)
    if not isinstance(spec, dict) or "table" not in spec:
        raise ValidationError("expected a number or {sites, table}", field)
    sites = spec.get("sites", [])
    try:
        return LocalFunction(tuple(_site(s) for s in sites), E, np.asarray(spec["table"], dtype=float))
    except ValidationError as exc:
        raise ValidationError(str(exc), field) from None


def load_ips_spec(data):
    """Parse the JSON description of a lattice system.

    Returns (torus, generator, test function, single-site weights or None).
    Transformation maps are flat image indices over E^sites (row-major, sites
    in the listed order).
    """
    for key in ("torus", "E", "transformations", "test_function"):
        if key not in data:
            raise ValidationError("missing required key", key)
    tor = data["torus"]
    torus = Torus(int(tor.get("d", 1)), int(tor["N"]))
    E = tuple(data["E"])
    trans = []
    for i, t in enumerate(data["transformations"]):
        field = f"transformations[{i}]"
        if "sites" not in t or "map" not in t:
            raise ValidationError("needs sites and map", field)
        try:
            T = Transformation(tuple(_site(s, torus.d) for s in t["sites"]), E, t["map"])
        except ValidationError as exc:
            raise ValidationError(str(exc), field) from None
        trans.append((T, _function_from_spec(t.get("rate", 1.0), E, field + ".rate")))
    gen = LocalJumpGenerator(E, trans)
    f = _function_from_spec(data["test_function"], E, "test_function")
    weights = data.get("weights")
    return torus, gen, f, (np.asarray(weights, dtype=float) if weights is not None else None)
