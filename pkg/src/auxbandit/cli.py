"""Command-line entry point: ``auxbandit <command> ...``.

Exit codes: 0 on success, 2 on invalid input or configuration, 1 on any
other failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__, _backend
from .arrivals import ArrivalKind, ArrivalParseError, ArrivalSpec, format_matrix, load_matrix
from .bounds import (
    aie_index,
    aucb1_upper_bound,
    corollary_bound,
    is_vacuous,
    logsumexp_rate,
    minimax_lower_bound,
    unknown_mapping_lower_bound,
)
from .config import PRESETS, ExperimentConfig, load_document, parse_config, preset
from .core import ConfigError, DomainError
from .replay import (
    case_no_harm,
    load_corpus,
    mean_ri,
    run_replay,
    save_corpus,
    synth_article_days,
    write_results,
)
from .sim import default_threads, run_scenarios, write_summary, write_trajectories

log = logging.getLogger("auxbandit")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _floats(text: Optional[str]):
    if text is None:
        return None
    return [float(x) for x in text.split(",") if x.strip()]


def _threads(args) -> int:
    return args.threads if args.threads is not None else default_threads()


def _load_config(args) -> ExperimentConfig:
    sources = [s for s in (args.preset, args.config, args.manifest) if s]
    if len(sources) != 1:
        raise ConfigError("give exactly one of --preset, --config or --manifest")
    if args.preset:
        doc = preset(args.preset)
    elif args.manifest:
        with open(args.manifest, encoding="utf-8") as fh:
            man = json.load(fh)
        if "config" not in man:
            raise ConfigError(f"{args.manifest}: not a manifest (no 'config' entry)")
        doc = man["config"]
    else:
        doc = args.config
    if getattr(args, "reps", None) is not None:
        doc = load_document(doc)
        doc["n_reps"] = args.reps
    cfg = parse_config(doc, seed=args.seed)
    if getattr(args, "stride", None) is not None:
        cfg.stride = args.stride
    return cfg


def _write_manifest(out_dir: str, command: str, cfg: ExperimentConfig, outputs: Sequence[str]) -> str:
    man = {
        "artifact": "auxbandit",
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "outputs": list(outputs),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if cfg.kind != "simulate":
        raise ConfigError(f"configuration {cfg.name!r} is a {cfg.kind} experiment; use the '{cfg.kind}' command")
    os.makedirs(args.out, exist_ok=True)
    log.info("simulate %s: %d scenario(s), T=%d, %d reps, seed %d, backend %s",
             cfg.name, len(cfg.scenarios), cfg.T, cfg.n_reps, cfg.seed, _backend.BACKEND)
    results = run_scenarios(cfg.instance, cfg.scenarios, cfg.T, cfg.n_reps, cfg.seed,
                            regenerate_H=cfg.regenerate_H, threads=_threads(args))
    traj = os.path.join(args.out, "trajectories.csv")
    summ = os.path.join(args.out, "summary.csv")
    write_trajectories(traj, results, cfg.stride)
    write_summary(summ, results, cfg.stride)
    _write_manifest(args.out, "simulate", cfg, ["trajectories.csv", "summary.csv"])
    for (scen, label), s in results.items():
        print(f"{scen:>16s} {label:>12s}  final regret {s.final_mean:10.3f} +/- {s.final_stderr:.3f}")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _load_config(args)
    if cfg.kind != "replay":
        raise ConfigError(f"configuration {cfg.name!r} is not a replay experiment")
    os.makedirs(args.out, exist_ok=True)
    if args.corpus:
        cases = load_corpus(args.corpus)
        cfg.corpus_path = args.corpus
    elif cfg.corpus_path:
        cases = load_corpus(cfg.corpus_path)
    else:
        cases = synth_article_days(cfg.n_cases, cfg.corpus, cfg.seed)
    if args.save_corpus:
        save_corpus(cases, args.save_corpus)
    results = run_replay(cases, cfg.policies, cfg.n_reps, cfg.seed, threads=_threads(args))
    write_results(os.path.join(args.out, "replay_results.csv"), results)
    _write_manifest(args.out, "replay", cfg, ["replay_results.csv"])
    for p in cfg.policies:
        if p.label == "UCB1":
            continue
        ri = mean_ri(results, p.label)
        ri_txt = "n/a" if ri is None else f"{ri:+.4f}"
        print(f"{p.label:>10s}  mean RI {ri_txt}  no-harm {case_no_harm(results, p.label):.3f}")
    return EXIT_OK


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_bound(args) -> int:
    op = args.op
    H = load_matrix(args.matrix) if args.matrix else None
    if op != "corollary" and H is None:
        raise ConfigError(f"--matrix is required for --op {op}")
    out = {"op": op}
    if op == "lse":
        _need(args, "rate")
        vals = [logsumexp_rate(row, args.rate) for row in H.h]
    elif op == "aie":
        _need(args, "Delta", "sigma_hat")
        alpha = args.alpha if args.alpha is not None else 1.0
        vals = [aie_index(row, args.Delta, args.sigma_hat, alpha, args.c_tilde) for row in H.h]
    elif op == "minimax":
        _need(args, "Delta", "sigma", "sigma_hat")
        vals = [minimax_lower_bound(H, args.Delta, args.sigma, args.sigma_hat)]
    elif op == "aucb1":
        _need(args, "gaps", "sigma", "sigma_hat", "c")
        vals = [aucb1_upper_bound(H, _floats(args.gaps), args.sigma, args.sigma_hat, args.c)]
    elif op == "unknown-lower":
        _need(args, "gap", "delta")
        K = args.K if args.K is not None else H.K
        vals = [unknown_mapping_lower_bound(row, K, args.gap, args.delta) for row in H.h]
    else:
        _need(args, "kind", "gaps", "sigma", "sigma_hat", "c", "T")
        vals = [corollary_bound(args.kind, _floats(args.gaps), args.sigma, args.sigma_hat, args.c, args.T,
                                lam=args.lam, kappa=args.kappa, Delta=args.Delta)]
    out["values"] = vals
    if len(vals) == 1:
        out["value"] = vals[0]
    if op in ("minimax", "unknown-lower"):
        out["vacuous"] = [is_vacuous(v) for v in vals]
    print(json.dumps(out))
    return EXIT_OK


def cmd_gen_arrivals(args) -> int:
    spec = ArrivalSpec(
        kind=args.kind, lam=args.lam, kappa=args.kappa, kappa_aux=args.kappa_aux, gamma=args.gamma,
        delta=args.delta, sigma_hat=args.sigma_hat, path=args.path,
        arms=_floats(args.arms) and [int(a) for a in _floats(args.arms)],
    )
    errs = spec.errors()
    if errs:
        raise ConfigError("; ".join(errs), errs)
    seed = args.seed if args.seed is not None else 42
    H = spec.generate(args.K, args.T, seed)
    for w in H.warnings:
        log.warning(w)
    text = format_matrix(H)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_presets(args) -> int:
    names = [args.name] if args.name else list(PRESETS)
    if args.full or args.name:
        print(json.dumps({n: preset(n) for n in names}, indent=2))
    else:
        for n in names:
            doc = preset(n)
            print(f"{n:22s} {doc.get('kind', 'simulate'):8s} n_reps={doc['n_reps']}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="auxbandit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment(sp):
        sp.add_argument("--preset", choices=sorted(PRESETS))
        sp.add_argument("--config", help="JSON file or inline JSON document")
        sp.add_argument("--manifest", help="rerun the configuration echoed in a manifest.json")
        sp.add_argument("--seed", type=int, help="overrides the configuration's seed")
        sp.add_argument("--reps", type=int, help="override the number of replications")
        sp.add_argument("--threads", type=int, help="worker threads (default: AUXBANDIT_THREADS or 1)")
        sp.add_argument("--out", default="results", help="output directory")

    sp = sub.add_parser("simulate", help="run a simulation experiment")
    experiment(sp)
    sp.add_argument("--stride", type=int, help="write every stride-th epoch (T is always written)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("replay", help="score policies on an article-day corpus")
    experiment(sp)
    sp.add_argument("--corpus", help="JSON-lines corpus to score instead of a synthetic one")
    sp.add_argument("--save-corpus", help="write the corpus used as JSON lines")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("bound", help="evaluate a regret bound or rate functional")
    sp.add_argument("--op", required=True, choices=["lse", "aie", "minimax", "aucb1", "corollary", "unknown-lower"])
    sp.add_argument("--matrix", help="arrival matrix CSV (rows = arms)")
    sp.add_argument("--rate", type=float)
    sp.add_argument("--Delta", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--sigma-hat", dest="sigma_hat", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--c-tilde", dest="c_tilde", type=float, default=0.2)
    sp.add_argument("--c", type=float)
    sp.add_argument("--gaps", help="comma-separated per-arm gaps")
    sp.add_argument("--gap", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--K", type=int)
    sp.add_argument("--T", type=int)
    sp.add_argument("--kind", choices=["stationary", "diminishing"])
    sp.add_argument("--lam", type=float)
    sp.add_argument("--kappa", type=float)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("gen-arrivals", help="generate an arrival matrix as CSV")
    sp.add_argument("--kind", required=True, choices=[k.value for k in ArrivalKind])
    sp.add_argument("--K", type=int, required=True)
    sp.add_argument("--T", type=int, required=True)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--kappa-aux", dest="kappa_aux", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--sigma-hat", dest="sigma_hat", type=float)
    sp.add_argument("--path")
    sp.add_argument("--arms", help="comma-separated arms that receive arrivals")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output CSV (default: stdout)")
    sp.set_defaults(func=cmd_gen_arrivals)

    sp = sub.add_parser("presets", help="list named presets")
    sp.add_argument("--name", help="print one preset in full")
    sp.add_argument("--full", action="store_true", help="print every preset in full")
    sp.set_defaults(func=cmd_presets)
    return p


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INVALID
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, ArrivalParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("unhandled error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
