"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 solver failure (JSON reason on
stderr), 64 usage error.
"""

import argparse
import itertools
import json
import logging
import math
import sys
import warnings

import numpy as np

from . import diffusion, flow, lattice, legendre, montecarlo
from .chain import evolve, forward_velocity, load_model, prob_dist, velocity
from .errors import SolverFailure, ValidationError
from .hamiltonian import grad_f, grad_mu, hamiltonian
from .report import fmt, fmt_vec, table_csv, trajectory_csv

log = logging.getLogger("ldtraj")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _vector(text, name):
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ValidationError(f"not a comma-separated list of numbers: {text!r}", name) from None


def _param(args, name, required=True):
    """Vector from --params (wins, with a warning) or from the flag of the same name."""
    flag = getattr(args, name, None)
    from_file = args.params.get(name) if args.params else None
    if from_file is not None:
        if flag is not None:
            warnings.warn(f"--{name} ignored: value taken from --params file", stacklevel=2)
        return np.asarray(from_file, dtype=float)
    if flag is None:
        if required:
            raise ValidationError("required", name)
        return None
    return _vector(flag, name)


def _common(p):
    p.add_argument("--json", action="store_true", help="emit one JSON object")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--params", help="JSON file with vectors (mu, alpha, nu, f, u0); overrides flags")


def build_parser():
    parser = _Parser(prog="ldtraj", description="Large-deviation Hamiltonians and Lagrangians of Markov trajectories.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hamiltonian", help="H(mu, f) and its gradients")
    p.add_argument("--model", required=True)
    p.add_argument("--mu")
    p.add_argument("--f")
    _common(p)

    p = sub.add_parser("lagrangian", help="L(mu, alpha), optimal momentum and modified rates")
    p.add_argument("--model", required=True)
    p.add_argument("--mu")
    p.add_argument("--alpha")
    _common(p)

    p = sub.add_parser("trajectory", help="integrate the Hamiltonian flow from (mu, f0)")
    p.add_argument("--model", required=True)
    p.add_argument("--mu")
    p.add_argument("--u0", help="initial u = exp(f0)")
    p.add_argument("--f0", help="initial momentum (alternative to --u0)")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--plot", help="write a figure of the trajectory to this path")
    _common(p)

    p = sub.add_parser("shoot", help="optimal path from mu to nu in time T")
    p.add_argument("--model", required=True)
    p.add_argument("--mu")
    p.add_argument("--nu")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all-solutions", action="store_true", help="run every restart and list distinct solutions")
    p.add_argument("--plot")
    _common(p)

    p = sub.add_parser("diffusion", help="1-D periodic diffusion Lagrangian and drift profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--plot")
    _common(p)

    p = sub.add_parser("ips", help="K_Q f and the torus Hamiltonian of a lattice system")
    p.add_argument("--spec", required=True)
    _common(p)

    p = sub.add_parser("mc-verify", help="Girsanov estimate of the entropy rate next to the Lagrangian")
    p.add_argument("--model", required=True)
    p.add_argument("--mu")
    p.add_argument("--alpha")
    p.add_argument("--T", type=float, action="append", required=True, help="repeatable")
    p.add_argument("--reps", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compensated", action="store_true", help="use the compensator form of the estimator")
    p.add_argument("--plot")
    _common(p)
    return parser


def _load_json(path, field):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(str(exc), field) from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}", field) from None


def _kv(pairs):
    return "".join(f"{k},{v}\n" for k, v in pairs)


def cmd_hamiltonian(args):
    Q = load_model(args.model)
    mu = prob_dist(_param(args, "mu"), Q.k)
    f = _param(args, "f")
    if f.shape != (Q.k,):
        raise ValidationError(f"length {f.size}, expected {Q.k}", "f")
    H, gf, gm = hamiltonian(mu, f, Q), grad_f(mu, f, Q), grad_mu(f, Q)
    if args.json:
        return {"hamiltonian": H, "grad_f": gf.tolist(), "grad_mu": gm.tolist()}
    return _kv([("hamiltonian", fmt(H)), ("grad_f", fmt_vec(gf)), ("grad_mu", fmt_vec(gm))])


def cmd_lagrangian(args):
    Q = load_model(args.model)
    mu = prob_dist(_param(args, "mu"), Q.k)
    alpha = velocity(_param(args, "alpha"), Q.k)
    mr = legendre.modified_rates(mu, alpha, Q)
    L = float(alpha @ mr.momentum) - hamiltonian(mu, mr.momentum, Q)
    if args.json:
        return {"lagrangian": L, "momentum": mr.momentum.tolist(), "modified_rates": mr.r_star.tolist()}
    pairs = [("lagrangian", fmt(L)), ("momentum", fmt_vec(mr.momentum))]
    pairs += [(f"modified_rates_{a + 1}", fmt_vec(row)) for a, row in enumerate(mr.r_star)]
    return _kv(pairs)


def _steps(args):
    return args.steps if args.steps else max(1, math.ceil(args.T / 1e-3))


def _trajectory_output(args, Q, traj, cost, meta):
    if args.plot:
        from .plotting import plot_trajectory

        plot_trajectory(traj, args.plot, states=list(Q.states))
    if args.json:
        out = {"times": traj.times.tolist(), "mu": traj.mu.tolist(), "f": traj.f.tolist(), "action": cost}
        out.update(meta)
        return out
    meta = {k: (fmt_vec(v) if isinstance(v, (list, np.ndarray)) else fmt(v)) for k, v in meta.items()}
    return trajectory_csv(traj.times, traj.mu, traj.f, cost, meta)


def cmd_trajectory(args):
    Q = load_model(args.model)
    mu = prob_dist(_param(args, "mu"), Q.k)
    u0 = _param(args, "u0", required=False)
    f0 = _param(args, "f0", required=False)
    if u0 is None:
        u0 = np.exp(f0) if f0 is not None else np.ones(Q.k)
    traj = flow.position_flow(Q, mu, u0, args.T, _steps(args))
    return _trajectory_output(args, Q, traj, flow.action(traj), {"u0": np.asarray(u0)})


def cmd_shoot(args):
    Q = load_model(args.model)
    mu = prob_dist(_param(args, "mu"), Q.k)
    nu = prob_dist(_param(args, "nu"), Q.k)
    res = flow.shoot(Q, mu, nu, args.T, _steps(args), args.restarts, args.seed, args.all_solutions)
    meta = {"u0": res.u0, "residual": res.residual}
    if len(res.solutions) > 1:
        meta["solutions"] = len(res.solutions)
        for i, s in enumerate(res.solutions):
            meta[f"solution_{i + 1}"] = np.append(s.u0, s.cost)
    if args.json:
        meta = {"u0": res.u0.tolist(), "residual": res.residual,
                "solutions": [{"u0": s.u0.tolist(), "action": s.cost} for s in res.solutions]}
    return _trajectory_output(args, Q, res.trajectory, res.cost, meta)


def cmd_diffusion(args):
    model, mu, alpha = diffusion.load_profile(_load_json(args.profile, "profile"))
    L_dual = diffusion.lagrangian_dual(model, mu, alpha)
    brownian = np.all(model.b == 0) and np.all(model.a == 0.5)
    rec = diffusion.lagrangian_entropy(mu, alpha, full=True) if brownian else None
    if rec is None:
        # drift profile of the general model: face flux of the optimal potential
        _, g = diffusion.lagrangian_dual(model, mu, alpha, return_potential=True)
        n, h = model.grid.n, model.grid.h
        am = model.a * mu
        w = 0.5 * (am + np.roll(am, -1))
        flux = 2 * w * (np.roll(g, -1) - g) / h
        mu_face = 0.5 * (mu + np.roll(mu, -1))
        rec = diffusion.DriftReconstruction(math.nan, flux, flux / mu_face)
    if args.plot:
        from .plotting import plot_diffusion

        plot_diffusion(model.grid.x, mu, alpha, rec.faces, rec.drift, args.plot)
    if args.json:
        return {"lagrangian": L_dual, "lagrangian_entropy": None if math.isnan(rec.value) else rec.value,
                "x": rec.faces.tolist(), "g": rec.flux.tolist(), "drift": rec.drift.tolist()}
    meta = {"lagrangian": fmt(L_dual)}
    if not math.isnan(rec.value):
        meta["lagrangian_entropy"] = fmt(rec.value)
    return table_csv(["x", "g", "drift"], zip(rec.faces, rec.flux, rec.drift), meta)


def cmd_ips(args):
    torus, gen, f, weights = lattice.load_ips_spec(_load_json(args.spec, "spec"))
    torus.check(f.sites)
    K = lattice.k_q(f, gen)
    torus.check(K.sites)
    H = lattice.torus_hamiltonian(weights, f, gen, torus) if weights is not None else None
    rows = []
    for idx in itertools.product(range(len(gen.E)), repeat=len(K.sites)):
        rows.append([str(gen.E[i]) for i in idx] + [float(K.table[idx])])
    if args.json:
        return {"sites": [list(s) for s in K.sites], "E": list(gen.E),
                "table": K.table.tolist(), "hamiltonian": H}
    cols = ["s(" + ",".join(map(str, s)) + ")" for s in K.sites] + ["K_Q_f"]
    return table_csv(cols, rows, {"hamiltonian": fmt(H)} if H is not None else None)


def cmd_mc_verify(args):
    Q = load_model(args.model)
    mu = prob_dist(_param(args, "mu"), Q.k)
    alpha = velocity(_param(args, "alpha"), Q.k)
    mr = legendre.modified_rates(mu, alpha, Q)
    L = legendre.lagrangian(mu, alpha, Q)
    rows = []
    for T in args.T:
        est, se = montecarlo.girsanov_entropy_rate(Q, mr, mu, T, args.reps, args.seed, args.compensated)
        rows.append((T, est, se, L))
    if args.plot:
        from .plotting import plot_mc

        plot_mc([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], L, args.plot)
    if args.json:
        return {"lagrangian": L, "runs": [{"T": T, "estimate": e, "std_error": s} for T, e, s, _ in rows]}
    return table_csv(["T", "estimate", "std_error", "lagrangian"], rows)


COMMANDS = {
    "hamiltonian": cmd_hamiltonian,
    "lagrangian": cmd_lagrangian,
    "trajectory": cmd_trajectory,
    "shoot": cmd_shoot,
    "diffusion": cmd_diffusion,
    "ips": cmd_ips,
    "mc-verify": cmd_mc_verify,
}


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.params = _load_json(args.params, "params") if args.params else None
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = COMMANDS[args.command](args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except ValidationError as exc:
        print(json.dumps({"error": "invalid_input", "field": exc.field, "message": str(exc)}), file=sys.stderr)
        return EXIT_INVALID
    except SolverFailure as exc:
        print(json.dumps(exc.as_dict()), file=sys.stderr)
        return EXIT_SOLVER
    text = json.dumps(result, default=_json_default) + "\n" if args.json else result
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
