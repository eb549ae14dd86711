"""Command-line surface.

Subcommands: fit, simulate, evaluate, rank, diagnose.  Global flags
--seed / --threads / --out plus --config pointing at a flat key=value
file; precedence is CLI flag > config file > built-in default.  Exit
codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

import numpy as np

from . import analysis, io, sampler, simulate
from .types import DataError, GeneTable, MrfParams, NumericalError, build_prior_spec

RHAT_THRESHOLD = 1.1


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config_file(path: str) -> dict:
    """Flat key=value lines; '#' comments; later keys win."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    return out


def _resolve(args, name: str, default, cast=str, flag: bool = False):
    """CLI > config file > default."""
    cli_value = getattr(args, name.replace("-", "_"), None)
    if cli_value is not None:
        return cli_value
    config = getattr(args, "_config_values", {})
    if name in config:
        raw = config[name]
        try:
            if flag:
                return raw.lower() in ("1", "true", "yes", "on")
            if cast is int:
                return int(raw)
            if cast is float:
                return float(raw)
            if cast is list:
                return [v for v in raw.split(",") if v]
            return raw
        except ValueError:
            raise UsageError(f"config key {name}={raw!r}: cannot parse") from None
    return default


def _prepare(args) -> None:
    args._config_values = read_config_file(args.config) if args.config else {}


def _ensure_out(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _read_scores_checked(path: str) -> GeneTable:
    if not os.path.exists(path):
        raise DataError(f"scores file not found: {path}")
    return io.read_scores(path)


# ---------------------------------------------------------------------------
# fit


def cmd_fit(args) -> int:
    _prepare(args)
    scores_path = _resolve(args, "scores", None)
    if not scores_path:
        raise UsageError("fit requires --scores")
    network_paths = _resolve(args, "network", [], cast=list)
    model = _resolve(args, "model", "mrf" if network_paths else "smjm")
    cov = _resolve(args, "cov", "general")
    chains = _resolve(args, "chains", 3, int)
    burnin = _resolve(args, "burnin", 5000, int)
    keep = _resolve(args, "keep", 10000, int)
    thin = _resolve(args, "thin", 1, int)
    seed = _resolve(args, "seed", 0, int)
    threads = _resolve(args, "threads", 1, int)
    out_dir = _resolve(args, "out", "fit_out")
    fix_beta_zero = bool(_resolve(args, "fix-beta-zero", False, flag=True))
    if model not in ("smjm", "mrf"):
        raise UsageError(f"unknown model {model!r}")
    if cov not in ("general", "diagonal"):
        raise UsageError(f"unknown covariance mode {cov!r}")
    if model == "mrf" and not network_paths:
        raise UsageError("mrf model requires at least one --network")

    table = _read_scores_checked(scores_path)
    nets, alignment = (None, None)
    if network_paths:
        for p in network_paths:
            if not os.path.exists(p):
                raise DataError(f"network file not found: {p}")
        nets, alignment = io.read_networks(network_paths, table)
    for warning in alignment.warnings() if alignment else []:
        print(f"warning: {warning}", file=sys.stderr)

    prior = build_prior_spec(table)
    config = sampler.SamplerConfig(
        model=model,
        covariance_mode=cov,
        n_chains=chains,
        n_burnin=burnin,
        n_keep=keep,
        thin=thin,
        seed=seed,
        fix_beta_zero=fix_beta_zero,
    )
    config.validate()
    result = sampler.run_multichain(config, table, nets, prior, threads=threads)

    _ensure_out(out_dir)
    outputs = []

    rank_path = os.path.join(out_dir, "rank_table.csv")
    rt = analysis.rank_items(table.ids, result.p_hat)
    io.write_csv(rank_path, ["id", "p_hat", "rank"], rt.rows())
    outputs.append(rank_path)

    params_path = os.path.join(out_dir, "params.csv")
    summary = result.summary()
    io.write_csv(
        params_path,
        ["param", "mean", "sd", "q2.5", "q97.5"],
        [
            (name, s["mean"], s["sd"], s["q2.5"], s["q97.5"])
            for name, s in summary.items()
        ],
    )
    outputs.append(params_path)

    for c, chain in enumerate(result.chains):
        tp = os.path.join(out_dir, f"traces_chain{c}.csv")
        names = result.trace_names
        rows = zip(*(chain.traces[n] for n in names))
        io.write_csv(tp, names, rows)
        outputs.append(tp)

    if chains >= 2:
        diag_path = os.path.join(out_dir, "diagnostics.csv")
        rows = []
        for name in result.trace_names:
            r = analysis.rhat(result.trace_group(name))
            s = summary[name]
            rows.append(
                (
                    name,
                    r,
                    s["mean"],
                    s["sd"],
                    s["q2.5"],
                    s["q97.5"],
                    "pass" if r < RHAT_THRESHOLD else "fail",
                )
            )
        io.write_csv(
            diag_path, ["param", "rhat", "mean", "sd", "q2.5", "q97.5", "status"], rows
        )
        outputs.append(diag_path)

    manifest_config = {
        "command": "fit",
        "scores": os.path.basename(scores_path),
        "networks": [os.path.basename(p) for p in network_paths],
        "model": model,
        "cov": cov,
        "chains": chains,
        "burnin": burnin,
        "keep": keep,
        "thin": thin,
        "seed": seed,
        "fix_beta_zero": fix_beta_zero,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    io.write_manifest(
        manifest_path, manifest_config, [scores_path, *network_paths], outputs
    )
    print(f"fit complete: {len(table.ids)} items, outputs in {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    _prepare(args)
    G = _resolve(args, "g", None, int)
    if G is None:
        raise UsageError("simulate requires --g (item count)")
    targets = _resolve(args, "targets", None, int)
    fraction = _resolve(args, "target-fraction", 0.13, float)
    replicates = _resolve(args, "replicates", 1, int)
    sweeps = _resolve(args, "label-sweeps", 500, int)
    seed = _resolve(args, "seed", 0, int)
    out_dir = _resolve(args, "out", "sim_out")
    network_paths = _resolve(args, "network", [], cast=list)
    gamma = _resolve(args, "gamma", None, float)
    betas = _resolve(args, "beta", [], cast=list)

    spec = simulate.SimulationSpec(
        G=G,
        target_fraction=fraction,
        n_targets=targets,
        n_replicates=replicates,
        seed=seed,
        n_label_sweeps=sweeps,
    )
    if betas:
        try:
            spec.betas = tuple(float(b) for b in betas)
        except ValueError:
            raise UsageError(f"--beta values must be numeric, got {betas!r}") from None
    input_paths = []
    generated_networks = not network_paths
    if network_paths:
        ids = [f"g{i:05d}" for i in range(G)]
        probe = GeneTable(tuple(ids), ("x",), np.zeros((G, 1)))
        for p in network_paths:
            if not os.path.exists(p):
                raise DataError(f"network file not found: {p}")
        nets, _ = io.read_networks(network_paths, probe)
        spec.networks = nets
        input_paths.extend(network_paths)
    try:
        spec.validate()
    except DataError as exc:
        raise UsageError(str(exc)) from None

    rng = np.random.default_rng(seed)
    if gamma is not None:
        k_guess = spec.networks.K if spec.networks is not None else len(spec.betas)
        spec.phi = MrfParams(gamma, np.asarray(spec.betas[:k_guess], dtype=float))
    labels, phi_used, nets_used = simulate.simulate_labels(spec, rng)
    spec.networks = nets_used

    _ensure_out(out_dir)
    outputs = []
    if generated_networks and nets_used is not None:
        ids = [f"g{i:05d}" for i in range(G)]
        for k, name in enumerate(nets_used.names):
            path = os.path.join(out_dir, f"{name}.tsv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write("# generated network edge list\n")
                for i, nbrs in enumerate(nets_used.adjacency[k]):
                    for j in nbrs:
                        if i < j:
                            fh.write(f"{ids[i]}\t{ids[j]}\n")
            outputs.append(path)

    truth_path = os.path.join(out_dir, "truth.tsv")
    ids = [f"g{i:05d}" for i in range(G)]
    io.write_labels(truth_path, ids, labels)
    outputs.append(truth_path)

    for r in range(replicates):
        table = simulate.simulate_scores(spec, labels, rng, ids=ids)
        path = os.path.join(out_dir, f"scores_rep{r + 1:03d}.tsv")
        io.write_scores(path, table)
        outputs.append(path)

    manifest_config = {
        "command": "simulate",
        "G": G,
        "targets": targets,
        "target_fraction": fraction,
        "replicates": replicates,
        "label_sweeps": sweeps,
        "seed": seed,
        "networks": [os.path.basename(p) for p in network_paths] or "generated",
        "gamma_used": None if phi_used is None else phi_used.gamma,
        "betas_used": None if phi_used is None else [float(b) for b in phi_used.betas],
        "realized_fraction": float(labels.mean()),
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    io.write_manifest(manifest_path, manifest_config, input_paths, outputs)
    print(
        f"simulated {replicates} replicate(s) at G={G}, "
        f"{int(labels.sum())} signal items, outputs in {out_dir}"
    )
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _read_predictions(path: str, ids) -> np.ndarray:
    """Read per-item scores from a CSV/TSV with id + value columns."""
    if not os.path.exists(path):
        raise DataError(f"prediction file not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8", newline=None) as fh:
        header = fh.readline().rstrip("\r\n")
        delim = "," if header.count(",") >= header.count("\t") else "\t"
        cols = header.split(delim)
        if len(cols) < 2:
            raise DataError(f"{path}: need id and value columns")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split(delim)
            if len(parts) < 2:
                raise DataError(f"{path}:{lineno}: need id and value columns")
            try:
                values[parts[0]] = float(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric value {parts[1]!r}") from None
    out = np.empty(len(ids))
    for i, gid in enumerate(ids):
        if gid not in values:
            raise DataError(f"{path}: no prediction for id {gid!r}")
        out[i] = values[gid]
    return out


def cmd_evaluate(args) -> int:
    _prepare(args)
    truth_paths = _resolve(args, "truth", [], cast=list)
    pred_specs = _resolve(args, "pred", [], cast=list)
    out_dir = _resolve(args, "out", "eval_out")
    if not truth_paths:
        raise UsageError("evaluate requires --truth")
    if not pred_specs:
        raise UsageError("evaluate requires at least one --pred NAME=path[,path...]")

    methods = []
    for spec in pred_specs:
        if "=" not in spec:
            raise UsageError(f"--pred must look like NAME=path[,path...], got {spec!r}")
        name, paths = spec.split("=", 1)
        paths = [p for p in paths.split(",") if p]
        if not paths:
            raise UsageError(f"--pred {name}: no paths given")
        methods.append((name, paths))

    n_rep = len(methods[0][1])
    for name, paths in methods:
        if len(paths) != n_rep:
            raise UsageError(
                f"replicate mismatch: method {methods[0][0]!r} has {n_rep} files, "
                f"{name!r} has {len(paths)}"
            )
    if len(truth_paths) not in (1, n_rep):
        raise UsageError(
            f"replicate mismatch: {n_rep} prediction files per method but "
            f"{len(truth_paths)} truth files"
        )

    # truth files are id<TAB>label
    truths = []
    for r in range(n_rep):
        tpath = truth_paths[0] if len(truth_paths) == 1 else truth_paths[r]
        if not os.path.exists(tpath):
            raise DataError(f"truth file not found: {tpath}")
        ids = []
        labels = []
        with open(tpath, "r", encoding="utf-8", newline=None) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataError(f"{tpath}:{lineno}: expected `id<TAB>label`")
                if lineno == 1 and parts[1] not in ("0", "1"):
                    continue
                ids.append(parts[0])
                labels.append(int(parts[1]))
        truths.append((tuple(ids), np.array(labels, dtype=int)))

    _ensure_out(out_dir)
    auc_rows = []
    summary_rows = []
    roc_rows = []
    for name, paths in methods:
        aucs = []
        curves = []
        for r, path in enumerate(paths):
            ids, labels = truths[r]
            preds = _read_predictions(path, ids)
            curve = analysis.roc(preds, labels)
            aucs.append(curve.auc)
            curves.append(curve)
            auc_rows.append((name, r + 1, curve.auc))
        avg = analysis.average_roc(curves)
        for f, t in zip(avg.fpr, avg.tpr):
            roc_rows.append((name, float(f), float(t)))
        mean_auc = float(np.mean(aucs))
        sd_auc = float(np.std(aucs, ddof=1)) if len(aucs) > 1 else 0.0
        summary_rows.append((name, len(aucs), mean_auc, sd_auc))

    outputs = []
    auc_path = os.path.join(out_dir, "auc.csv")
    io.write_csv(auc_path, ["method", "replicate", "auc"], auc_rows)
    outputs.append(auc_path)
    roc_path = os.path.join(out_dir, "roc_avg.csv")
    io.write_csv(roc_path, ["method", "fpr", "tpr"], roc_rows)
    outputs.append(roc_path)
    summary_path = os.path.join(out_dir, "summary.csv")
    io.write_csv(
        summary_path, ["method", "n_replicates", "mean_auc", "sd_auc"], summary_rows
    )
    outputs.append(summary_path)

    inputs = list(truth_paths) + [p for _, paths in methods for p in paths]
    manifest_config = {
        "command": "evaluate",
        "truth": [os.path.basename(p) for p in truth_paths],
        "methods": {name: [os.path.basename(p) for p in paths] for name, paths in methods},
    }
    io.write_manifest(os.path.join(out_dir, "manifest.json"), manifest_config, inputs, outputs)
    for name, n, mean_auc, sd in summary_rows:
        print(f"{name}: mean AUC {mean_auc:.4f} (sd {sd:.4f}, n={n})")
    return 0


# ---------------------------------------------------------------------------
# rank


def cmd_rank(args) -> int:
    _prepare(args)
    pred_path = _resolve(args, "pred", None)
    out_dir = _resolve(args, "out", "rank_out")
    if not pred_path:
        raise UsageError("rank requires --pred")
    if not os.path.exists(pred_path):
        raise DataError(f"prediction file not found: {pred_path}")
    ids = []
    with open(pred_path, "r", encoding="utf-8", newline=None) as fh:
        header = fh.readline().rstrip("\r\n")
        delim = "," if header.count(",") >= header.count("\t") else "\t"
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if line:
                ids.append(line.split(delim)[0])
    probe = GeneTable(tuple(ids), ("x",), np.zeros((len(ids), 1)))
    p_hat = _read_predictions(pred_path, probe.ids)
    if np.any(p_hat < 0) or np.any(p_hat > 1):
        raise DataError(f"{pred_path}: probabilities must lie in [0,1]")
    rt = analysis.rank_items(probe.ids, p_hat)
    _ensure_out(out_dir)
    rank_path = os.path.join(out_dir, "rank_table.csv")
    io.write_csv(rank_path, ["id", "p_hat", "rank"], rt.rows())
    io.write_manifest(
        os.path.join(out_dir, "manifest.json"),
        {"command": "rank", "pred": os.path.basename(pred_path), "n_tied_first": rt.n_tied_first},
        [pred_path],
        [rank_path],
    )
    print(f"ranked {len(ids)} items, {rt.n_tied_first} tied at rank 1")
    return 0


# ---------------------------------------------------------------------------
# diagnose


def cmd_diagnose(args) -> int:
    _prepare(args)
    trace_paths = list(args.traces or [])
    out_dir = _resolve(args, "out", "diag_out")
    if len(trace_paths) < 2:
        raise UsageError("diagnose requires at least 2 chain trace files")
    chains = []
    names = None
    for path in trace_paths:
        if not os.path.exists(path):
            raise DataError(f"trace file not found: {path}")
        with open(path, "r", encoding="utf-8", newline=None) as fh:
            header = fh.readline().rstrip("\r\n").split(",")
            rows = [line.rstrip("\r\n").split(",") for line in fh if line.strip()]
        if names is None:
            names = header
        elif names != header:
            raise DataError(f"{path}: trace columns differ from {trace_paths[0]}")
        try:
            arr = np.array([[float(v) for v in row] for row in rows])
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric trace value: {exc}") from None
        chains.append(arr)

    _ensure_out(out_dir)
    rows = []
    n_fail = 0
    for j, name in enumerate(names):
        r = analysis.rhat([c[:, j] for c in chains])
        ok = r < RHAT_THRESHOLD
        n_fail += 0 if ok else 1
        rows.append((name, r, "pass" if ok else "fail"))
    diag_path = os.path.join(out_dir, "diagnostics.csv")
    io.write_csv(diag_path, ["param", "rhat", "status"], rows)
    io.write_manifest(
        os.path.join(out_dir, "manifest.json"),
        {
            "command": "diagnose",
            "traces": [os.path.basename(p) for p in trace_paths],
            "threshold": RHAT_THRESHOLD,
            "n_fail": n_fail,
        },
        trace_paths,
        [diag_path],
    )
    print(
        f"diagnostics written for {len(names)} parameters, "
        f"{n_fail} above the {RHAT_THRESHOLD} threshold"
    )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> Parser:
    parser = Parser(prog="mrfmix", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: Parser) -> None:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--config", type=str, default=None)

    p_fit = sub.add_parser("fit", help="fit a mixture model by MCMC")
    p_fit.add_argument("--scores", type=str, default=None)
    p_fit.add_argument("--network", action="append", default=None)
    p_fit.add_argument("--model", type=str, default=None, choices=("smjm", "mrf"))
    p_fit.add_argument("--cov", type=str, default=None, choices=("general", "diagonal"))
    p_fit.add_argument("--chains", type=int, default=None)
    p_fit.add_argument("--burnin", type=int, default=None)
    p_fit.add_argument("--keep", type=int, default=None)
    p_fit.add_argument("--thin", type=int, default=None)
    p_fit.add_argument(
        "--fix-beta-zero", action="store_const", const=True, default=None
    )
    common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="generate synthetic benchmark data")
    p_sim.add_argument("--g", type=int, default=None)
    p_sim.add_argument("--targets", type=int, default=None)
    p_sim.add_argument("--target-fraction", type=float, default=None)
    p_sim.add_argument("--replicates", type=int, default=None)
    p_sim.add_argument("--label-sweeps", type=int, default=None)
    p_sim.add_argument("--network", action="append", default=None)
    p_sim.add_argument("--gamma", type=float, default=None)
    p_sim.add_argument("--beta", action="append", default=None)
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_eval = sub.add_parser("evaluate", help="score predictions against truth labels")
    p_eval.add_argument("--truth", action="append", default=None)
    p_eval.add_argument("--pred", action="append", default=None)
    common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_rank = sub.add_parser("rank", help="rank items by probability")
    p_rank.add_argument("--pred", type=str, default=None)
    common(p_rank)
    p_rank.set_defaults(func=cmd_rank)

    p_diag = sub.add_parser("diagnose", help="convergence diagnostics from trace files")
    p_diag.add_argument("traces", nargs="*", default=None)
    common(p_diag)
    p_diag.set_defaults(func=cmd_diagnose)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
