"""Command line entry point ``hcs``.

Results go to stdout (or ``--out``) as JSON, CSV or DIMACS. Errors exit with
the code of their exception class: 3 invalid parameter, 4 size limit,
5 experiment failure, 6 invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from hcs import appendix, experiments, gaussian, labelcover, operators, oracles, qcube, reduction
from hcs.errors import HcsError, InvalidParameter


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.ndarray, frozenset, set, tuple)):
        return sorted(o) if isinstance(o, (frozenset, set)) else list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InvalidParameter(f"cannot read {path}: {exc.strerror}") from None


def _budget(args) -> oracles.SearchBudget:
    return oracles.SearchBudget(args.budget_vertices, args.budget_edges, args.budget_seconds)


def _csv_list(text, cast=str):
    return [cast(v) for v in text.split(",") if v] if text else None


# ---------------------------------------------------------------------------
# Commands


def cmd_fourier(args):
    if args.infile:
        f = qcube.QFunction.from_json(_read(args.infile))
    elif args.function == "random":
        f = qcube.random_function(args.q, args.n, np.random.default_rng(args.seed))
    else:
        f = qcube.named_function(args.function, args.q, args.n, args.i, args.a)
    ft = qcube.transform(f)
    out = {"q": f.q, "n": f.n, "mean": f.mean(),
           "influences": qcube.influences(f).tolist(),
           "low_level_influences": qcube.low_level_influences(ft, args.k).tolist(),
           "k": args.k}
    if args.coefficients:
        out["coefficients"] = ft.coeffs.tolist()
    _emit_json(args, out)


def _operator_from_args(args) -> operators.MarkovOp:
    if args.kind == "beckner":
        if args.rho is None:
            raise InvalidParameter("beckner needs --rho")
        return operators.beckner(args.q, args.rho)
    return operators.gadget_operator(args.kind)


def cmd_op(args):
    T = _operator_from_args(args)
    out = {"name": T.name, "m": T.m, "spectral_radius": operators.spectral_radius(T),
           "eigenvalues": T.eigenvalues.tolist(),
           "matrix": [[str(v) for v in row] for row in T.exact],
           "row_sums": [str(sum(row, Fraction(0))) for row in T.exact]}
    if args.kind in ("col4", "alpha", "col3"):
        out["pair_uniform"] = operators.is_pair_uniform(T)
    _emit_json(args, out)


def cmd_gaussian(args):
    out = {"rho": args.rho, "mu": args.mu, "nu": args.nu,
           "lambda": gaussian.lambda_gauss(args.rho, args.mu, args.nu),
           "lambda_lower": gaussian.lambda_lower(args.rho, args.mu, args.nu)}
    _emit_json(args, out)


def cmd_lc_gen(args):
    if args.bipartite:
        inst, hidden = appendix.gen_bipartite(args.X, args.Y, args.R, args.d, args.seed,
                                              weighted=not args.unweighted,
                                              planted=args.planted)
        data = inst.to_dict()
        if hidden is not None:
            data["hidden"] = {"x": hidden[0], "y": hidden[1]}
    else:
        inst, hidden = labelcover.gen_planted(args.kind, args.vertices, args.edges, args.R,
                                              args.seed)
        data = inst.to_dict()
        data["hidden"] = hidden
    _emit_json(args, data)


def cmd_lc_eval(args):
    data = json.loads(_read(args.infile))
    G = labelcover.LabelCoverInstance.from_dict(data)
    out = {}
    if args.labels:
        labels = json.loads(_read(args.labels))
        out["sat"] = str(labelcover.eval_sat(G, labels))
    elif "hidden" in data:
        out["sat_hidden"] = str(labelcover.eval_sat(G, data["hidden"]))
    if args.isat:
        value, subset, lab = labelcover.isat_t(G, args.t)
        out.update(isat_t=str(value), t=args.t, subset=list(subset),
                   labeling={str(v): sorted(s) for v, s in lab.assignment.items()})
    _emit_json(args, out)


def cmd_lc_transform(args):
    data = json.loads(_read(args.infile))
    if args.step == "collapse":
        phi = appendix.BipartiteLC.from_dict(data)
        res = appendix.transform_collapse(phi)
    else:
        phi = appendix.BipartiteLC.from_dict(data)
        step = {"normalize": appendix.transform_normalize,
                "unweight": appendix.transform_unweight,
                "power": appendix.transform_power}[args.step]
        res = step(phi, args.ell)
    out = res.instance.to_dict()
    out["origin"] = res.origin
    out["report"] = {k: v for k, v in res.report.items() if k != "sequences"}
    _emit_json(args, out)


def cmd_reduce(args):
    G = labelcover.LabelCoverInstance.from_json(_read(args.infile))
    graph = reduction.reduce(args.kind, G)
    _emit(args, graph.to_dimacs())


def cmd_decode(args):
    G = labelcover.LabelCoverInstance.from_json(_read(args.infile))
    graph = reduction.reduce(args.kind, G)
    S = reduction.read_set(_read(args.set))
    J, L, rep = reduction.decode_tlabeling(args.kind, graph, S, args.k, args.delta,
                                           args.epsilon)
    rep["labeling"] = {str(v): sorted(L[v]) for v in J}
    rep["density"] = {str(v): d for v, d in rep["density"].items()}
    rep["list_sizes"] = {str(v): s for v, s in rep["list_sizes"].items()}
    _emit_json(args, rep)


def _graph_from(args):
    text = _read(args.infile)
    return oracles.SimpleGraph.from_dimacs(text)


def cmd_oracle(args):
    if args.oracle == "chrom":
        q, colors = oracles.chromatic_number(_graph_from(args), args.qmax, _budget(args))
        out = ({"chromatic_number": q, "coloring": colors.tolist()} if q is not None
               else {"chromatic_number": None, "exceeds_qmax": args.qmax})
    elif args.oracle == "mis":
        size, witness = oracles.max_independent_set(_graph_from(args), _budget(args))
        out = {"size": size, "vertices": witness}
    else:
        G = labelcover.LabelCoverInstance.from_json(_read(args.infile))
        value, lab = oracles.best_labeling(G, args.t)
        out = {"value": str(value), "t": args.t,
               "labeling": {str(v): sorted(s) for v, s in lab.assignment.items()}}
    _emit_json(args, out)


def _spec_from_args(args) -> experiments.ExperimentSpec:
    if args.spec:
        spec = experiments.ExperimentSpec.from_json(_read(args.spec))
        spec.name = args.experiment
        if args.seed_given:
            spec.seed = args.seed
    else:
        params = {}
        for key in ("kind", "vertices", "R", "edges", "seeds", "k", "delta", "epsilon"):
            v = getattr(args, key)
            if v is not None:
                params[key] = v
        for key, cast in (("set_modes", str), ("families", str), ("operators", str),
                          ("n", int), ("rho", float)):
            v = _csv_list(getattr(args, key), cast)
            if v is not None:
                params[key] = v
        spec = experiments.ExperimentSpec(args.experiment, args.seed, params)
    spec.timing = spec.timing or args.timing
    return spec


def cmd_experiment(args):
    spec = _spec_from_args(args)
    if args.out:
        spec.out = args.out
    if args.experiment == "soundness":
        report = experiments.run_soundness_probe(spec, _budget(args))
    else:
        report = experiments.EXPERIMENTS[args.experiment](spec)
    text = report.to_csv()
    if spec.out:
        Path(spec.out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Parser


class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, action=_SeedAction,
                   help="seed for every random step (default 0)")
    g.add_argument("--out", help="write the result to this file instead of stdout")
    g.add_argument("--budget-vertices", type=int, default=5000)
    g.add_argument("--budget-edges", type=int, default=2_000_000)
    g.add_argument("--budget-seconds", type=float, default=60.0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="hcs", description="Hardness-of-coloring toolkit: q-ary Fourier analysis, "
        "gadget operators, label cover, reductions and exact oracles.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fourier", parents=[common], help="Fourier data of a function")
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--function", default="plurality",
                   choices=["dictator", "plurality", "threshold", "random"])
    p.add_argument("--i", type=int, help="dictator coordinate (1-based)")
    p.add_argument("--a", type=int, help="dictator or threshold symbol")
    p.add_argument("--k", type=int, default=3, help="level for low-level influences")
    p.add_argument("--in", dest="infile", help="QFunction JSON instead of --function")
    p.add_argument("--coefficients", action="store_true", help="include all coefficients")
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("op", parents=[common], help="inspect a noise operator")
    p.add_argument("--kind", default="almost3",
                   choices=["almost3", "col4", "alpha", "col3", "beckner"])
    p.add_argument("--q", type=int, default=3, help="alphabet for beckner")
    p.add_argument("--rho", type=float, help="correlation for beckner")
    p.set_defaults(func=cmd_op)

    p = sub.add_parser("gaussian", parents=[common], help="Gaussian stability values")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.set_defaults(func=cmd_gaussian)

    lc = sub.add_parser("lc", help="label-cover instances")
    lcs = lc.add_subparsers(dest="lc_command", required=True)
    p = lcs.add_parser("gen", parents=[common], help="planted instance")
    p.add_argument("--kind", default="one-to-one", choices=["one-to-one", "two-to-two", "alpha"])
    p.add_argument("--vertices", type=int, default=4)
    p.add_argument("--edges", type=int, default=4)
    p.add_argument("--R", type=int, default=2, help="number of labels")
    p.add_argument("--bipartite", action="store_true", help="bipartite d-to-1 instance")
    p.add_argument("--X", type=int, default=3)
    p.add_argument("--Y", type=int, default=3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--planted", action="store_true")
    p.set_defaults(func=cmd_lc_gen)
    p = lcs.add_parser("eval", parents=[common], help="sat / isat_t of an instance")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--labels", help="JSON labeling (list or object)")
    p.add_argument("--isat", action="store_true", help="also compute isat_t exhaustively")
    p.add_argument("--t", type=int, default=1)
    p.set_defaults(func=cmd_lc_eval)
    p = lcs.add_parser("transform", parents=[common], help="bipartite transformation step")
    p.add_argument("--step", required=True, choices=["normalize", "unweight", "power", "collapse"])
    p.add_argument("--ell", type=int, default=2)
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_lc_transform)

    p = sub.add_parser("reduce", parents=[common], help="label cover -> DIMACS graph")
    p.add_argument("--kind", required=True, choices=list(reduction.KINDS))
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("decode", parents=[common], help="list-decode an independent set")
    p.add_argument("--kind", required=True, choices=list(reduction.KINDS))
    p.add_argument("--in", dest="infile", required=True, help="label-cover JSON")
    p.add_argument("--set", required=True, help="JSON list of graph vertex ids")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_decode)

    orc = sub.add_parser("oracle", help="exact solvers")
    ors = orc.add_subparsers(dest="oracle", required=True)
    p = ors.add_parser("chrom", parents=[common], help="chromatic number of a DIMACS graph")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--qmax", type=int, default=5)
    p.set_defaults(func=cmd_oracle)
    p = ors.add_parser("mis", parents=[common], help="maximum independent set")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_oracle)
    p = ors.add_parser("lc-best", parents=[common], help="best t-labeling")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--t", type=int, default=1)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", parents=[common], help="run an experiment, emit CSV")
    p.add_argument("experiment", choices=sorted(experiments.EXPERIMENTS))
    p.add_argument("--spec", help="JSON experiment spec (flags below are ignored)")
    p.add_argument("--kind", choices=list(reduction.KINDS))
    p.add_argument("--vertices", type=int)
    p.add_argument("--R", type=int, help="coordinates (almost3) or coordinate pairs")
    p.add_argument("--edges", type=int)
    p.add_argument("--seeds", type=int, help="number of consecutive seeds")
    p.add_argument("--set-modes", help="comma list: color-class,mis,empty,random")
    p.add_argument("--families", help="comma list: constants,mixture,dictators,plurality")
    p.add_argument("--operators", help="comma list: almost3,alpha,beckner")
    p.add_argument("--n", help="comma list of dimensions")
    p.add_argument("--rho", help="comma list of beckner correlations")
    p.add_argument("--k", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--timing", action="store_true", help="append a wall-time comment line")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "seed_given"):
        args.seed_given = False
    try:
        args.func(args)
    except HcsError as exc:
        print(f"hcs: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
