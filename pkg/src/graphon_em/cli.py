"""Command line interface: simulate, fit, em, gibbs, posterior.

Every command accepts ``--config file.json`` whose keys mirror the long flag
names (dashes or underscores); explicit flags win over the file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bspline import DEFAULT_K, KnotGrid, SplineGraphon
from .em import EMConfig, run_em
from .empirical import DENSITY_GRID, DegenerateDensityError, marginal_posterior_empirical, order_by_degree
from .fit import DEFAULT_LAMBDAS, FitError, select_lambda
from .graphon import get_graphon
from .io import (InputError, ingest_edge_list, read_json, write_csv, write_density, write_edge_list,
                 write_json, write_profile, write_surface)
from .mcmc import GibbsConfig, posterior_density, posterior_means, run_chain
from .netsim import sample_latent, sample_network

log = logging.getLogger("graphon_em")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOCONV = 0, 2, 3, 4
TRAJECTORY_PAIRS = ((0.1, 0.1), (0.1, 0.5), (0.1, 0.9), (0.5, 0.5), (0.5, 0.9), (0.9, 0.9))

DEFAULTS = {
    "seed": 0,
    "grid": 101,
    "profile_grid": 201,
    "density_grid": DENSITY_GRID,
    "K": DEFAULT_K,
    "lambdas": ",".join(format(v, "g") for v in DEFAULT_LAMBDAS),
    "max_iters": EMConfig.max_iters,
    "tol": EMConfig.tol,
    "n_start": EMConfig.n_start,
    "n_step": EMConfig.n_step,
    "n_cap": EMConfig.n_cap,
    "proposal_sd": 0.5,
    "burn_in": 50,
    "thin": 5,
    "n_retain": 100,
    "nodes": "",
    "mode": "empirical",
    "freeze_lambda": False,
    "threads": None,
}


def _parse_lambdas(text):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InputError(f"bad lambda list {text!r}") from None
    if not vals or min(vals) < 0:
        raise InputError("lambda grid must be a non-empty list of non-negative numbers")
    return vals


def _resolve(args, parser):
    """Fill unset flags from the config file, then from DEFAULTS."""
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise InputError(f"cannot read config {args.config}: {err}") from err
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(vars(args))
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
    for key, val in vars(args).items():
        if val is None:
            setattr(args, key, cfg.get(key, DEFAULTS.get(key)))
    return args


def _resolved_config(args):
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "seed_given", "verbose")}


def _out_dir(args):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise InputError(f"cannot create output directory {out}: {err}") from err
    return out


def _node_indices(spec, labels):
    if spec in (None, ""):
        return []
    if str(spec).strip().lower() == "all":
        return list(range(len(labels)))
    lookup = {lab: i for i, lab in enumerate(labels)}
    out = []
    for tok in str(spec).split(","):
        tok = tok.strip()
        try:
            out.append(lookup[int(tok)])
        except (ValueError, KeyError):
            raise InputError(f"unknown node id {tok!r}") from None
    return out


def _gibbs_config(args, seed=None, n_retain=None):
    return GibbsConfig(proposal_sd=float(args.proposal_sd), burn_in=int(args.burn_in), thin=int(args.thin),
                       n_retain=int(n_retain if n_retain is not None else args.n_retain),
                       seed=int(args.seed if seed is None else seed))


def result_document(fit, u_hat, labels, args, command, **extra):
    doc = {
        "version": __version__,
        "command": command,
        "config": _resolved_config(args),
        "seed": int(args.seed),
        "K": fit.graphon.knots.K,
        "theta": fit.theta,
        "lambda": fit.lam,
        "aic_c": fit.aic_c,
        "df": fit.df,
        "log_lik": fit.log_likelihood,
        "u_hat": u_hat,
        "labels": labels,
        "lambda_path": fit.path,
    }
    doc.update(extra)
    return doc


def _graphon_from_doc(doc):
    try:
        return SplineGraphon(KnotGrid(int(doc["K"])), np.asarray(doc["theta"], dtype=float))
    except (KeyError, ValueError, TypeError) as err:
        raise InputError(f"result document lacks a valid spline graphon: {err}") from err


def _load_network(args):
    if not args.edges:
        raise InputError("--edges is required")
    return ingest_edge_list(args.edges)


def _write_labels(out, labels):
    write_csv(out / "labels.csv", ["node", "label"], [np.arange(len(labels)), labels])


def cmd_simulate(args):
    try:
        graphon = get_graphon(args.graphon)
    except KeyError as err:
        raise InputError(str(err.args[0])) from None
    n = int(args.n)
    if n < 2:
        raise InputError("need at least 2 nodes")
    out = _out_dir(args)
    seeds = np.random.SeedSequence(int(args.seed)).spawn(2)
    u = sample_latent(n, seeds[0])
    y = sample_network(graphon, u, seeds[1])
    write_edge_list(out / "edges.txt", y, header=[f"graphon-em {__version__} simulate graphon={args.graphon} "
                                                  f"n={n} seed={args.seed}"])
    write_csv(out / "latent.csv", ["node", "u"], [np.arange(n), u])
    write_surface(out / "graphon_grid.csv", graphon, int(args.grid))
    write_json(out / "simulate.json", {"version": __version__, "command": "simulate",
                                       "config": _resolved_config(args), "seed": int(args.seed),
                                       "n_edges": int(y.sum() // 2)})
    return EXIT_OK


def cmd_fit(args):
    net = _load_network(args)
    out = _out_dir(args)
    eg = order_by_degree(net.y)
    fit = select_lambda(eg.u_hat_emp, net.y, KnotGrid(int(args.K)), _parse_lambdas(args.lambdas))
    write_json(out / "result.json", result_document(fit, eg.u_hat_emp, net.labels, args, "fit",
                                                   converged=fit.converged))
    write_surface(out / "surface.csv", fit.graphon, int(args.grid))
    write_profile(out / "profile.csv", fit.graphon, int(args.profile_grid))
    write_profile(out / "empirical_profile.csv", eg, int(args.profile_grid))
    _write_labels(out, net.labels)
    return EXIT_OK if fit.converged else EXIT_NOCONV


def _em_config(args):
    return EMConfig(max_iters=int(args.max_iters), tol=float(args.tol), n_start=int(args.n_start),
                    n_step=int(args.n_step), n_cap=int(args.n_cap), K=int(args.K),
                    lambda_grid=tuple(_parse_lambdas(args.lambdas)),
                    gibbs=_gibbs_config(args, n_retain=1), seed=int(args.seed), eval_grid=int(args.grid),
                    freeze_lambda=bool(args.freeze_lambda))


def cmd_em(args):
    net = _load_network(args)
    nodes = _node_indices(args.nodes, net.labels)
    out = _out_dir(args)
    cfg = _em_config(args)
    res = run_em(net.y, cfg)
    write_json(out / "result.json", result_document(
        res.fit, res.u_hat, net.labels, args, "em", converged=res.converged, iterations=res.iterations,
        em_config=asdict(cfg), final_chain=res.chain.to_dict()))
    pairs = np.array(TRAJECTORY_PAIRS)
    traj = np.array([it.fit.graphon.evaluate(pairs[:, 0], pairs[:, 1]) for it in res.trace])
    cols = [[it.m for it in res.trace], [it.fit.lam for it in res.trace], [it.fit.df for it in res.trace],
            [it.fit.aic_c for it in res.trace], [it.sup_change for it in res.trace],
            [it.l2_change for it in res.trace], [it.acceptance for it in res.trace],
            [it.n_retain for it in res.trace]] + [traj[:, i] for i in range(len(pairs))]
    header = ["m", "lambda", "df", "aic_c", "sup_change", "l2_change", "acceptance", "n_retain"] + [
        f"w({a:g};{b:g})" for a, b in TRAJECTORY_PAIRS]
    write_csv(out / "trace.csv", header, cols)
    write_csv(out / "u_hat.csv", ["node", "label", "u_hat"], [np.arange(len(net.labels)), net.labels, res.u_hat])
    write_surface(out / "surface.csv", res.fit.graphon, int(args.grid))
    write_profile(out / "profile.csv", res.fit.graphon, int(args.profile_grid))
    _write_labels(out, net.labels)
    for k in nodes:
        dens = posterior_density(res.chain, res.fit.graphon, net.y, k, int(args.density_grid))
        write_density(out / f"posterior_spline_{net.labels[k]}.csv", dens)
    return EXIT_OK if res.converged else EXIT_NOCONV


def _doc_and_graphon(args, net):
    if not args.result:
        raise InputError("--result is required")
    doc = read_json(args.result)
    graphon = _graphon_from_doc(doc)
    u_hat = np.asarray(doc.get("u_hat", []), dtype=float)
    if u_hat.shape != (len(net.labels),):
        raise InputError("result document u_hat does not match the network size")
    return doc, graphon, u_hat


def _chain_for(args, net):
    doc, graphon, u_hat = _doc_and_graphon(args, net)
    seed = args.seed if args.seed_given else doc.get("seed", 0)
    cfg = _gibbs_config(args, seed=seed)
    return graphon, cfg, run_chain(u_hat, graphon, net.y, cfg)


def cmd_gibbs(args):
    net = _load_network(args)
    out = _out_dir(args)
    graphon, cfg, chain = _chain_for(args, net)
    means = posterior_means(chain)
    write_csv(out / "posterior_means.csv", ["node", "label", "mean", "acceptance"],
              [np.arange(len(net.labels)), net.labels, means, chain.acceptance_rate])
    write_json(out / "gibbs.json", {"version": __version__, "command": "gibbs", "config": _resolved_config(args),
                                    "seed": cfg.seed, "chain": chain.to_dict()})
    np.savetxt(out / "states.csv", chain.states, delimiter=",", fmt="%.17g")
    return EXIT_OK


def cmd_posterior(args):
    net = _load_network(args)
    nodes = _node_indices(args.nodes or "all", net.labels)
    out = _out_dir(args)
    grid = int(args.density_grid)
    if args.mode == "empirical":
        eg = order_by_degree(net.y)
        dens = {k: marginal_posterior_empirical(eg, k, grid) for k in nodes}
        seed = int(args.seed)
    elif args.mode == "spline":
        graphon, cfg, chain = _chain_for(args, net)
        dens = {k: posterior_density(chain, graphon, net.y, k, grid) for k in nodes}
        seed = cfg.seed
    else:
        raise InputError(f"unknown mode {args.mode!r}")
    for k, d in dens.items():
        write_density(out / f"posterior_{args.mode}_{net.labels[k]}.csv", d)
    write_json(out / "posterior.json", {"version": __version__, "command": "posterior", "mode": args.mode,
                                        "config": _resolved_config(args), "seed": seed,
                                        "nodes": [net.labels[k] for k in nodes],
                                        "integrals": {str(net.labels[k]): d.integral() for k, d in dens.items()}})
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="graphon-em", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="JSON file with default values for the flags")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int, help="cap on BLAS threads")
        sp.add_argument("-v", "--verbose", action="store_true")
        if out:
            sp.add_argument("--out", required=True, help="output directory")

    def spline_opts(sp):
        sp.add_argument("--K", type=int, help="number of knots per axis")
        sp.add_argument("--lambdas", help="comma separated smoothing parameter grid")
        sp.add_argument("--grid", type=int, help="surface grid size")
        sp.add_argument("--profile-grid", type=int)

    def gibbs_opts(sp, retain=True):
        sp.add_argument("--proposal-sd", type=float)
        sp.add_argument("--burn-in", type=int)
        sp.add_argument("--thin", type=int)
        if retain:
            sp.add_argument("--n-retain", type=int)

    sp = sub.add_parser("simulate", help="draw a network from a registered graphon")
    common(sp)
    sp.add_argument("--graphon", required=True, help="w1, w2 or const:<c>")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--grid", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="one-step spline fit on the degree ordering")
    common(sp)
    sp.add_argument("--edges")
    spline_opts(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("em", help="EM alternation of spline fit and MCMC reordering")
    common(sp)
    sp.add_argument("--edges")
    spline_opts(sp)
    gibbs_opts(sp, retain=False)
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--n-start", type=int)
    sp.add_argument("--n-step", type=int)
    sp.add_argument("--n-cap", type=int)
    sp.add_argument("--freeze-lambda", action="store_true", default=None)
    sp.add_argument("--nodes", help="labels for posterior density output, comma separated or 'all'")
    sp.add_argument("--density-grid", type=int)
    sp.set_defaults(func=cmd_em)

    sp = sub.add_parser("gibbs", help="run the sampler under a fitted graphon")
    common(sp)
    sp.add_argument("--edges")
    sp.add_argument("--result", help="result.json from fit or em")
    gibbs_opts(sp)
    sp.set_defaults(func=cmd_gibbs)

    sp = sub.add_parser("posterior", help="posterior densities of latent positions")
    common(sp)
    sp.add_argument("--edges")
    sp.add_argument("--result", help="result.json (spline mode)")
    sp.add_argument("--mode", choices=["empirical", "spline"])
    sp.add_argument("--nodes", help="labels, comma separated, or 'all' (default)")
    sp.add_argument("--density-grid", type=int)
    gibbs_opts(sp)
    sp.set_defaults(func=cmd_posterior)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.seed_given = args.seed is not None
        args = _resolve(args, parser)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=args.threads):
            return args.func(args)
    except InputError as err:
        log.error("%s", err)
        return EXIT_INPUT
    except (FitError, DegenerateDensityError, FloatingPointError, np.linalg.LinAlgError) as err:
        log.error("numerical failure: %s", err)
        return EXIT_NUMERIC
    except RuntimeError as err:
        cause = err.__cause__
        if isinstance(cause, (FitError, DegenerateDensityError, np.linalg.LinAlgError)):
            log.error("numerical failure: %s", err)
            return EXIT_NUMERIC
        raise


if __name__ == "__main__":
    sys.exit(main())
