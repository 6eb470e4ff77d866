"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 divergence or certification failure.
The DIGRAD_OUT environment variable overrides any configured output
directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import certificate as cert_mod
from . import graphs as graph_mod
from . import harness
from . import objectives as obj_mod


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract here is 1
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    p = _Parser(prog="digrad", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every solver in a config file")
    run_p.add_argument("config")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--iters", type=int)
    run_p.add_argument("--out")

    cert_p = sub.add_parser("certify", help="print the convergence certificate for a config")
    cert_p.add_argument("config")
    cert_p.add_argument("--eta", help="step size to certify (default: half the bound)")

    graph_p = sub.add_parser("graph", help="generate or inspect edge-list files")
    graph_sub = graph_p.add_subparsers(dest="graph_command", required=True)
    gen_p = graph_sub.add_parser("gen", help="write a random strongly connected digraph")
    gen_p.add_argument("--n", type=int, required=True)
    gen_p.add_argument("--extra", type=int, default=0)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", required=True)
    check_p = graph_sub.add_parser("check", help="validate an edge-list file")
    check_p.add_argument("path")

    preset_p = sub.add_parser("preset", help="run a bundled experiment preset")
    preset_p.add_argument("name", choices=["fig-left", "fig-right"])
    preset_p.add_argument("--seed", type=int)
    preset_p.add_argument("--eta", help="override the ab step size (number or 'theorem1')")
    preset_p.add_argument("--iters", type=int)
    preset_p.add_argument("--out")
    return p


def _apply_overrides(cfg, seed=None, iters=None, out=None):
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if iters is not None:
        cfg = replace(cfg, iters=iters)
    out = out or os.environ.get("DIGRAD_OUT")
    if out:
        cfg = replace(cfg, out_dir=out)
    return cfg.validate()


def _cmd_run(args):
    cfg = _apply_overrides(harness.parse_config(args.config), args.seed, args.iters, args.out)
    result = harness.run_experiment(cfg)
    print(result.summary_text, end="")
    print(f"wrote {result.summary_path}")
    for gr in result.graph_results:
        print(f"wrote {gr.csv_path}")
    return 2 if result.any_divergence else 0


def _cmd_certify(args):
    cfg = harness.parse_config(args.config)
    graph = harness._materialize_graph(cfg.graphs[0], cfg.seed)
    obj = harness._materialize_objective(cfg.objective, graph.n, cfg.seed)
    cert, _, _ = cert_mod.certify(graph, obj)
    eps = cert_mod.select_epsilon(cert)
    bound = cert_mod.max_step_size(cert, eps)
    eta = 0.5 * bound if args.eta is None else float(args.eta)

    print("certificate report")
    print(f"graph={harness.graph_hash(graph)} n={graph.n} edges={len(graph.edges())}")
    print(f"sigma_a={cert.frame_a.sigma:.17g}")
    print(f"sigma_b={cert.frame_b.sigma:.17g}")
    print(f"pi_inner={cert.perron.inner:.17g}")
    print(f"alpha={cert.alpha:.17g}")
    print(f"beta={cert.beta:.17g}")
    for i, ai in enumerate(cert.a, start=1):
        print(f"a{i}={ai:.17g}")
    for i, e in enumerate(eps.as_array(), start=1):
        print(f"eps{i}={e:.17g}")
    print(f"eta_max={bound:.17g}")
    print(f"eta={eta:.17g}")
    ok = False
    try:
        J = cert_mod.coupling_matrix(eta, cert)
        print(f"lambda={cert_mod.descent_factor(eta, cert):.17g}")
        print(f"rho_coupling={cert_mod.spectral_radius(J):.17g}")
        ok = cert_mod.positive_vector_certificate(J, eps)
    except ValueError as err:
        print(f"note={err}")
    print(f"certified={'true' if ok else 'false'}")
    return 0 if ok else 2


def _cmd_graph(args):
    if args.graph_command == "gen":
        g = graph_mod.random_strongly_connected(args.n, args.extra, seed=args.seed)
        graph_mod.save_edge_list(g, args.out)
        print(f"wrote {args.out} (n={g.n} edges={len(g.edges())})")
        return 0
    g = graph_mod.load_edge_list(args.path)
    sc = graph_mod.is_strongly_connected(g)
    print(f"n={g.n} edges={len(g.edges())} strongly_connected={'true' if sc else 'false'}")
    return 0 if sc else 2


def _cmd_preset(args):
    cfg = harness.preset_fig_left() if args.name == "fig-left" else harness.preset_fig_right()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.eta is not None:
        eta = args.eta if args.eta == "theorem1" else float(args.eta)
        cfg = replace(
            cfg,
            solvers=tuple(
                replace(s, eta=eta) if s.name == "ab" else s for s in cfg.solvers
            ),
        )
    cfg = _apply_overrides(cfg, iters=args.iters, out=args.out)
    result = harness.run_experiment(cfg)
    print(result.summary_text, end="")
    for gr in result.graph_results:
        print(f"wrote {gr.csv_path}")
    return 2 if result.any_divergence else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "graph":
            return _cmd_graph(args)
        if args.command == "preset":
            return _cmd_preset(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
