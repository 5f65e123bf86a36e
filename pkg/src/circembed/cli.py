"""Command-line front end.

Subcommands: generate, sample, thin, align, diagnose, analyze, predict.
Exit codes: 0 success, 1 usage error, 2 data/format error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from . import _kernels
from .analysis import link_prediction_experiment, posterior_predictive_summary
from .diagnostics import (center_trace, diagnostics_report, henze_zirkler_test,
                          traces_from_draws)
from .draws import DrawSet
from .errors import CircembedError
from .gauge import Gauge, align_embedding, enumerate_automorphisms
from .io import (read_draws, read_edge_list, read_embedding, sha256_digest,
                 write_csv, write_draws, write_edge_list, write_embedding,
                 write_manifest)
from .model import PriorConfig
from .rng import DOMAIN_EXPERIMENT, substream
from .sampler import (DEFAULT_MIXTURE, MOVE_KINDS, SamplerConfig, run_chain,
                      thin_chain)
from .synthetic import KappaLaw, generate_instance, make_bimodal_instance


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_mixture(text: str) -> dict:
    mixture = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        name = name.strip()
        if name not in MOVE_KINDS:
            raise _UsageError(f"unknown move kind {name!r}")
        mixture[name] = float(value)
    return mixture


def _add_prior_args(p):
    p.add_argument("--prior-beta0", type=float, default=3.0)
    p.add_argument("--prior-sigma", type=float, default=2.0)
    p.add_argument("--prior-gamma", type=float, default=4.0)
    p.add_argument("--prior-epsilon", type=float, default=1e-10)


def _add_sampler_args(p):
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--warmup-fraction", type=float, default=0.5)
    p.add_argument("--thin", type=int, default=1,
                   help="record every k-th state (thinning applied at record time)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mixture", type=str, default=None,
                   help="comma-separated move weights, e.g. rw_theta=0.5,flip=0.5")
    p.add_argument("--step-theta", type=float, default=0.1)
    p.add_argument("--step-kappa", type=float, default=0.1)
    p.add_argument("--step-beta", type=float, default=0.1)
    p.add_argument("--threshold-multiplier", type=float, default=2.0)
    p.add_argument("--mu-from-degrees", action="store_true",
                   help="fix mu's kappa mean to the observed mean degree")
    _add_prior_args(p)


def _prior_from_args(args) -> PriorConfig:
    return PriorConfig(beta0=args.prior_beta0, sigma=args.prior_sigma,
                       gamma=args.prior_gamma, epsilon=args.prior_epsilon)


def _config_from_args(args, graph) -> SamplerConfig:
    if args.iterations is None:
        raise _UsageError("--iterations is required")
    mixture = _parse_mixture(args.mixture) if args.mixture else dict(DEFAULT_MIXTURE)
    mu_reference = float(graph.degrees.mean()) if args.mu_from_degrees else None
    return SamplerConfig(
        n_iterations=args.iterations, n_chains=args.chains,
        warmup_fraction=args.warmup_fraction, move_mixture=mixture,
        rw_step_theta=args.step_theta, rw_step_log_kappa=args.step_kappa,
        rw_step_beta=args.step_beta,
        threshold_max_gap_multiplier=args.threshold_multiplier,
        seed=args.seed, record_stride=args.thin, mu_reference=mu_reference)


def _config_echo(config: SamplerConfig, prior: PriorConfig) -> dict:
    echo = {k: v for k, v in vars(config).items()}
    echo["move_mixture"] = dict(config.move_mixture)
    echo["prior"] = vars(prior).copy()
    return echo


def _load_draw_files(paths) -> DrawSet:
    return DrawSet.concat([read_draws(p) for p in paths])


# -- subcommands ---------------------------------------------------------


def _cmd_generate(args) -> int:
    law = KappaLaw(exponent=args.kappa_exponent, low=args.kappa_min, high=args.kappa_max)
    if args.bimodal:
        inst = make_bimodal_instance(args.n, args.beta, law, args.shift, args.seed)
    else:
        inst = generate_instance(args.n, args.beta, law, args.seed,
                                 require_connected=args.require_connected)
    prefix = args.out_prefix
    edges_path = f"{prefix}.edges"
    truth_path = f"{prefix}.truth.json"
    write_edge_list(inst.graph, edges_path)
    write_embedding(inst.embedding, truth_path, labels=inst.graph.labels)
    outputs = [edges_path, truth_path]
    if inst.alt_embedding is not None:
        alt_path = f"{prefix}.alt_truth.json"
        write_embedding(inst.alt_embedding, alt_path, labels=inst.graph.labels)
        outputs.append(alt_path)
    manifest = {"tool": "circembed", "version": __version__, "command": "generate",
                "provenance": inst.provenance,
                "outputs": {p: sha256_digest(p) for p in outputs}}
    write_manifest(manifest, f"{prefix}.manifest.json")
    print(f"generated {inst.graph.n_vertices} vertices, {inst.graph.n_edges} edges "
          f"-> {edges_path}")
    return 0


def _cmd_sample(args) -> int:
    graph = read_edge_list(args.graph, largest_component=args.largest_component)
    prior = _prior_from_args(args)
    config = _config_from_args(args, graph)
    gauge = Gauge.from_graph(graph)
    init = read_embedding(args.init_truth) if args.init_truth else None

    started = time.perf_counter()
    outputs = {}
    acceptance = {}
    for chain_id in range(config.n_chains):
        draws = run_chain(graph, prior, config, chain_id, gauge, init)
        path = f"{args.out_prefix}.chain{chain_id}.jsonl"
        write_draws(draws, path)
        outputs[path] = sha256_digest(path)
        stats = draws.move_stats[chain_id]
        acceptance[chain_id] = {
            k: (v[1] / v[0] if v[0] else None) for k, v in stats.items()}
        print(f"chain {chain_id}: {len(draws)} recorded draws -> {path}")
    manifest = {"tool": "circembed", "version": __version__, "command": "sample",
                "backend": _kernels.BACKEND,
                "config": _config_echo(config, prior),
                "gauge": {"anchor_vertex": gauge.anchor_vertex,
                          "half_plane_vertex": gauge.half_plane_vertex},
                "inputs": {args.graph: sha256_digest(args.graph)},
                "init_truth": args.init_truth,
                "largest_component": args.largest_component,
                "wall_clock_seconds": time.perf_counter() - started,
                "acceptance_rates": acceptance,
                "outputs": outputs}
    write_manifest(manifest, f"{args.out_prefix}.manifest.json")
    return 0


def _cmd_thin(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    for path in args.draws:
        thinned = thin_chain(read_draws(path), args.k)
        stem = os.path.splitext(os.path.basename(path))[0]
        out = os.path.join(args.out_dir, f"{stem}.thin{args.k}.jsonl")
        write_draws(thinned, out)
        print(f"{path}: kept {len(thinned)} draws -> {out}")
    return 0


def _cmd_align(args) -> int:
    graph = read_edge_list(args.graph)
    draws = _load_draw_files(args.draws)
    autos = enumerate_automorphisms(graph, limit=args.auto_limit)
    if autos.truncated:
        print(f"warning: automorphism group truncated at {len(autos)}", file=sys.stderr)
    if args.reference:
        reference = read_embedding(args.reference)
    else:
        # default: final post-warm-up draw of the lowest chain id
        first = draws.for_chain(int(draws.chain_ids[0])).post_warmup()
        if len(first) == 0:
            raise CircembedError("no post-warm-up draws to use as alignment reference")
        reference = first.embedding(len(first) - 1)
    os.makedirs(args.out_dir, exist_ok=True)
    for path in args.draws:
        part = read_draws(path)
        for i in range(len(part)):
            aligned = align_embedding(part.embedding(i), reference, autos)
            part.theta[i] = aligned.theta
            part.kappa[i] = aligned.kappa
        stem = os.path.splitext(os.path.basename(path))[0]
        out = os.path.join(args.out_dir, f"{stem}.aligned.jsonl")
        write_draws(part, out)
        print(f"{path}: aligned {len(part)} draws -> {out}")
    return 0


def _cmd_diagnose(args) -> int:
    draws = _load_draw_files(args.draws)
    anchor = None
    if args.graph:
        graph = read_edge_list(args.graph)
        anchor = Gauge.from_graph(graph).anchor_vertex
    report = diagnostics_report(draws, anchor_vertex=anchor, max_lag=args.max_lag)

    rows = [[name, f"{e['rhat']:.6g}", f"{e['rhat_plain']:.6g}", f"{e['ess']:.6g}"]
            for name, e in report.parameters.items()]
    rows.append(["rhat_max", f"{report.rhat_max:.6g}", "", ""])
    rows.append(["ess_median", f"{report.ess_median:.6g}", "", ""])
    diag_path = f"{args.out_prefix}.diagnostics.csv"
    write_csv(diag_path, ["parameter", "rhat", "rhat_plain", "ess"], rows)

    curves = {name: e["autocovariance"] for name, e in report.parameters.items()}
    stacked = np.stack(list(curves.values()))
    theta_curves = np.stack([c for n, c in curves.items() if n.startswith("theta_")]) \
        if any(n.startswith("theta_") for n in curves) else None
    kappa_curves = np.stack([c for n, c in curves.items() if n.startswith("kappa_")]) \
        if any(n.startswith("kappa_") for n in curves) else None
    auto_rows = []
    for lag in range(report.max_lag + 1):
        row = [lag, f"{np.nanmean(stacked[:, lag]):.6g}"]
        row.append(f"{np.nanmean(theta_curves[:, lag]):.6g}" if theta_curves is not None else "")
        row.append(f"{np.nanmean(kappa_curves[:, lag]):.6g}" if kappa_curves is not None else "")
        auto_rows.append(row)
    auto_path = f"{args.out_prefix}.autocovariance.csv"
    write_csv(auto_path, ["lag", "mean_all", "mean_theta", "mean_kappa"], auto_rows)

    outputs = [diag_path, auto_path]
    if args.hz:
        traces = traces_from_draws(draws, anchor_vertex=anchor)
        theta_names = [n for n in traces if n.startswith("theta_")]
        hz_rows = []
        count = 0
        for a_i in range(len(theta_names)):
            for b_i in range(a_i + 1, len(theta_names)):
                if count >= args.hz_max_pairs:
                    break
                a, b = theta_names[a_i], theta_names[b_i]
                xs = center_trace(traces[a]).values.ravel()
                ys = center_trace(traces[b]).values.ravel()
                try:
                    stat, pval = henze_zirkler_test(np.column_stack([xs, ys]))
                    hz_rows.append([a, b, f"{stat:.6g}", f"{pval:.6g}"])
                except ValueError:
                    hz_rows.append([a, b, "", ""])
                count += 1
        hz_path = f"{args.out_prefix}.normality.csv"
        write_csv(hz_path, ["parameter_a", "parameter_b", "statistic", "p_value"], hz_rows)
        outputs.append(hz_path)

    print(f"rhat_max {report.rhat_max:.6g}")
    print(f"ess_median {report.ess_median:.6g}")
    for path in outputs:
        print(f"wrote {path}")
    return 0


def _cmd_analyze(args) -> int:
    graph = read_edge_list(args.graph)
    draws = _load_draw_files(args.draws)
    summary = posterior_predictive_summary(draws, graph, seed=args.seed,
                                           pair_budget=args.pair_budget)
    rows = []
    for metric, stats in summary.summary.items():
        observed = summary.observed.get(metric, "")
        rows.append([metric, f"{stats['median']:.6g}", f"{stats['q25']:.6g}",
                     f"{stats['q75']:.6g}", f"{stats['hdi_low']:.6g}",
                     f"{stats['hdi_high']:.6g}", summary.skipped[metric],
                     f"{observed:.6g}" if observed != "" else ""])
    path = f"{args.out_prefix}.predictive.csv"
    write_csv(path, ["metric", "median", "q25", "q75", "hdi_low", "hdi_high",
                     "skipped", "observed"], rows)
    print(f"wrote {path}")
    if args.per_draw:
        per_path = f"{args.out_prefix}.predictive_draws.csv"
        metrics = list(summary.per_draw)
        values = np.column_stack([summary.per_draw[m] for m in metrics])
        write_csv(per_path, ["draw"] + metrics,
                  [[i] + [f"{v:.8g}" for v in row] for i, row in enumerate(values)])
        print(f"wrote {per_path}")
    return 0


def _cmd_predict(args) -> int:
    graph = read_edge_list(args.graph)
    rng = substream(args.seed, DOMAIN_EXPERIMENT, 0)
    if args.ground_truth:
        estimator = read_embedding(args.ground_truth)
    else:
        prior = _prior_from_args(args)

        def estimator(damaged):
            config = _config_from_args(args, damaged)
            parts = [run_chain(damaged, prior, config, c) for c in range(config.n_chains)]
            return DrawSet.concat(parts)

    result = link_prediction_experiment(graph, args.removal_fraction, estimator, rng,
                                        require_connected=args.require_connected)
    rows = [["auc", f"{result.auc:.6g}", ""]]
    for lo, hi, c in zip(result.hist_edges[:-1], result.hist_edges[1:],
                         result.hist_counts):
        rows.append(["bin", f"{lo:.3f}-{hi:.3f}", int(c)])
    path = f"{args.out_prefix}.link_prediction.csv"
    write_csv(path, ["kind", "value", "count"], rows)
    print(f"auc {result.auc:.6g}")
    print(f"wrote {path}")
    return 0


# -- wiring ----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="circembed",
                     description="Bayesian sampling and analysis of circular "
                                 "(S1) graph embeddings")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--beta", type=float, default=2.5)
    p.add_argument("--kappa-exponent", type=float, default=2.5)
    p.add_argument("--kappa-min", type=float, default=4.0)
    p.add_argument("--kappa-max", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--require-connected", action="store_true")
    p.add_argument("--bimodal", action="store_true",
                   help="give one vertex two incompatible ground-truth positions")
    p.add_argument("--shift", type=float, default=2.0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("sample", help="sample the embedding posterior")
    p.add_argument("graph")
    _add_sampler_args(p)
    p.add_argument("--init-truth", default=None,
                   help="embedding file used to initialize all chains")
    p.add_argument("--largest-component", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("thin", help="keep every k-th post-warm-up draw")
    p.add_argument("draws", nargs="+")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_thin)

    p = sub.add_parser("align", help="align draws across symmetries")
    p.add_argument("draws", nargs="+")
    p.add_argument("graph")
    p.add_argument("--reference", default=None,
                   help="embedding file (default: last post-warm-up draw of chain 0)")
    p.add_argument("--auto-limit", type=int, default=10_000)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("diagnose", help="convergence diagnostics")
    p.add_argument("draws", nargs="+")
    p.add_argument("--graph", default=None,
                   help="edge list; excludes the gauge anchor angle")
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--hz", action="store_true",
                   help="Henze-Zirkler normality tests on angle pairs")
    p.add_argument("--hz-max-pairs", type=int, default=50)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("analyze", help="posterior-predictive summaries")
    p.add_argument("draws", nargs="+")
    p.add_argument("graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pair-budget", type=int, default=2000)
    p.add_argument("--per-draw", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("predict", help="link-prediction experiment")
    p.add_argument("graph")
    p.add_argument("--removal-fraction", type=float, default=0.05)
    p.add_argument("--require-connected", action="store_true")
    p.add_argument("--ground-truth", default=None,
                   help="score with this embedding instead of sampling")
    _add_sampler_args(p)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_predict)

    return parser


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CircembedError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
