"""Command-line entry point: config layering, subcommands, run manifests.

Configuration precedence (lowest to highest): compiled-in preset, TOML
config file, repeated ``--set key=value`` overrides.  Every ``train`` run
can write a manifest recording the exact config, timestamps, artifact
paths, and a sha256 of the final checkpoint, so identical manifests imply
byte-identical checkpoints.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .trainer import (
    CheckpointError,
    TrainConfig,
    TrainingError,
    config_from_dict,
    load_checkpoint,
    save_checkpoint,
    train_run,
)

# Presets: the two published interference settings, the two published
# locomotion settings, and desk-scale variants sized for quick local runs.
PRESETS: dict[str, dict] = {
    "interference-maxvar": {
        "algo": "maxvar_ees",
        "env": "interference",
        "population_size": 500,
        "sigma": 0.5,
        "learning_rate": 0.03,
        "generations": 300,
        "optimizer": "adam",
        "adam_beta2": 0.9,
        "mu0": 1.0,
    },
    "interference-maxent": {
        "algo": "maxent_ees",
        "env": "interference",
        "population_size": 500,
        "sigma": 0.5,
        "learning_rate": 0.1,
        "kernel_bandwidth": 1.0,
        "generations": 300,
        "optimizer": "adam",
        "adam_beta2": 0.9,
        "mu0": 1.0,
    },
    "locomotion-maxvar": {
        "algo": "maxvar_ees",
        "env": "pointwalker1d",
        "population_size": 10000,
        "sigma": 0.02,
        "learning_rate": 0.01,
        "l2_coef": 0.05,
        "generations": 100,
        "optimizer": "adam",
        "adam_beta2": 0.9,
    },
    "locomotion-maxent": {
        "algo": "maxent_ees",
        "env": "pointwalker1d",
        "population_size": 10000,
        "sigma": 0.02,
        "learning_rate": 0.01,
        "l2_coef": 0.05,
        "kernel_bandwidth": 1.0,
        "generations": 100,
        "optimizer": "adam",
        "adam_beta2": 0.9,
    },
    "desk-standard": {
        "algo": "standard_es",
        "env": "pointwalker1d",
        "population_size": 500,
        "sigma": 0.02,
        "learning_rate": 0.01,
        "generations": 150,
        "optimizer": "adam",
        "adam_beta2": 0.9,
    },
    "desk-maxvar": {
        "algo": "maxvar_ees",
        "env": "pointwalker1d",
        "population_size": 500,
        "sigma": 0.02,
        "learning_rate": 0.01,
        "generations": 150,
        "optimizer": "adam",
        "adam_beta2": 0.9,
    },
    "desk-maxent": {
        "algo": "maxent_ees",
        "env": "pointwalker1d",
        "population_size": 500,
        "sigma": 0.03,
        "learning_rate": 0.01,
        "kernel_bandwidth": 1.0,
        "generations": 150,
        "optimizer": "adam",
        "adam_beta2": 0.9,
    },
}


class CliError(ValueError):
    """Invalid usage or configuration; maps to exit code 1."""


def _coerce(key: str, raw: str):
    fields = TrainConfig.__dataclass_fields__
    if key not in fields:
        raise CliError(f"unknown config key {key!r}")
    ftype = str(fields[key].type)
    try:
        if "bool" in ftype:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"not a bool: {raw!r}")
        if ftype == "int":
            return int(raw)
        if ftype == "float" or "float | None" in ftype:
            return float(raw)
        if ftype == "str":
            return raw
    except ValueError as e:
        raise CliError(f"bad value for {key}: {e}") from e
    raise CliError(f"key {key!r} cannot be set from the command line")


def parse_config(
    preset: str | None = None,
    config_path=None,
    sets: list[str] | None = None,
    seed: int | None = None,
    generations: int | None = None,
) -> TrainConfig:
    """Layer preset, config file, and --set overrides into a TrainConfig."""
    merged: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise CliError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    if config_path is not None:
        p = Path(config_path)
        if not p.is_file():
            raise CliError(f"config file not found: {p}")
        try:
            doc = tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as e:
            raise CliError(f"cannot parse {p}: {e}") from e
        merged.update(doc)
    for kv in sets or []:
        if "=" not in kv:
            raise CliError(f"--set expects key=value, got {kv!r}")
        key, _, raw = kv.partition("=")
        merged[key.strip()] = _coerce(key.strip(), raw.strip())
    if seed is not None:
        merged["run_seed"] = seed
    if generations is not None:
        merged["generations"] = generations
    try:
        return config_from_dict(merged)
    except (TypeError, ValueError) as e:
        raise CliError(str(e)) from e


@dataclass(frozen=True)
class RunManifest:
    config: dict
    started: str
    finished: str
    artifacts: dict
    checkpoint_sha256: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "started": self.started,
                "finished": self.finished,
                "artifacts": self.artifacts,
                "checkpoint_sha256": self.checkpoint_sha256,
            },
            sort_keys=True,
            indent=2,
        )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _default_workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("EVOES_WORKERS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"EVOES_WORKERS must be an integer, got {env!r}") from None
    return 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; contract says 1
        raise CliError(message)


def _add_common(p: _Parser):
    p.add_argument("--preset", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", default=[], metavar="K=V")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--generations", type=int, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="evoes", description="Evolvability-driven evolution strategies")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("train", help="run a training loop")
    _add_common(p)

    p = sub.add_parser("evaluate", help="sample a batch from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--bins", type=int, default=41)
    p.add_argument("--range", type=float, default=20.0, dest="range_")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("adapt", help="best-of-k mutation adaptation")
    p.add_argument("checkpoint")
    p.add_argument("--objective", default="+x", choices=("+x", "-x", "+y", "-y"))
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--n-eval", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("seed-es", help="standard ES from a trained population")
    p.add_argument("checkpoint")
    p.add_argument("--objective", default="+x", choices=("+x", "-x", "+y", "-y"))
    p.add_argument("--generations", type=int, default=20)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("gmm-split", help="split a checkpoint into a mixture and continue")
    p.add_argument("checkpoint")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generations", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("theorem-demo", help="flip-network construction report")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--delta1", type=float, default=1e-6)
    p.add_argument("--delta2", type=float, default=1e-5)
    p.add_argument("--grid", type=int, default=201)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("gradcheck", help="finite-difference oracle suite")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_train(args) -> int:
    cfg = parse_config(args.preset, args.config, args.set, args.seed, args.generations)
    workers = _default_workers(args)
    started = _now()
    out = Path(args.out) if args.out else None
    state = train_run(cfg, workers=workers, out_dir=out)
    if out is not None:
        ckpt = out / "ckpt_final.evch"
        manifest = RunManifest(
            config=json.loads(json.dumps(_cfg_dict(cfg))),
            started=started,
            finished=_now(),
            artifacts={"log": str(out / "log.csv"), "checkpoint": str(ckpt)},
            checkpoint_sha256=_sha256(ckpt),
        )
        (out / "manifest.json").write_text(manifest.to_json() + "\n")
    print(
        json.dumps(
            {"generations": state.generation, "final_mean_first": float(state.dist.means[0, 0])}
        )
    )
    return 0


def _cfg_dict(cfg: TrainConfig) -> dict:
    from .trainer import _config_to_dict

    return _config_to_dict(cfg)


def _cmd_evaluate(args) -> int:
    from .experiments import bimodality_metrics, export_heatmap, heatmap_to_csv, sample_final_batch

    state = load_checkpoint(args.checkpoint)
    batch = sample_final_batch(state, args.n, workers=_default_workers(args))
    hm = export_heatmap(batch, args.bins, args.range_)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "heatmap.csv").write_text(heatmap_to_csv(hm))
    m = bimodality_metrics(batch)
    print(
        json.dumps(
            {
                "n": batch.n,
                "frac_positive": m.frac_positive,
                "mean_abs_bc": m.mean_abs_bc,
                "var_trace": m.var_trace,
                "fitness_mean": float(batch.fitness.mean()),
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_adapt(args) -> int:
    from .experiments import adapt_best_of_k

    state = load_checkpoint(args.checkpoint)
    rep = adapt_best_of_k(state, args.objective, args.k, args.n_eval, args.seed)
    print(
        json.dumps(
            {
                "best_seed": rep.best_seed,
                "best_score": rep.best_score,
                "k": args.k,
                "objective": args.objective,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_seed_es(args) -> int:
    from .experiments import seed_standard_es

    state = load_checkpoint(args.checkpoint)
    curve = seed_standard_es(state, args.objective, args.generations, _default_workers(args))
    rows = [{"generation": s.generation, "fitness_mean": s.fitness_mean} for s in curve]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["generation,fitness_mean"] + [f"{r['generation']},{r['fitness_mean']!r}" for r in rows]
        (out / "seed_es.csv").write_text("\n".join(lines) + "\n")
    print(json.dumps(rows))
    return 0


def _cmd_gmm_split(args) -> int:
    from .experiments import component_mean_bcs, split_checkpoint
    from .trainer import train_generation

    state = load_checkpoint(args.checkpoint)
    state = split_checkpoint(state, args.k, args.seed)
    workers = _default_workers(args)
    for _ in range(args.generations):
        state, _, _ = train_generation(state, workers)
    bcs = component_mean_bcs(state)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(state, out / "ckpt_final.evch")
    print(json.dumps({"component_bcs": bcs.tolist(), "k": args.k}, sort_keys=True))
    return 0


def _cmd_theorem_demo(args) -> int:
    from .theoremnet import build_flip_network, identity_net, negation_net, verify_flip

    net = build_flip_network(identity_net(), negation_net(), args.delta1, args.delta2, args.epsilon)
    rep_d = verify_flip(net, args.grid, "designated_only")
    rep_f = verify_flip(net, args.grid, "full_iid", trials=args.trials, seed=args.seed)
    print(
        json.dumps(
            {
                "sup_error_pos": rep_d.sup_error_pos,
                "sup_error_neg": rep_d.sup_error_neg,
                "flip_rate_pos": rep_f.flip_rate_pos,
                "flip_rate_neg": rep_f.flip_rate_neg,
                "theorem_bound": rep_f.theorem_bound,
                "passed": bool(rep_d.passed and rep_f.passed),
            },
            sort_keys=True,
        )
    )
    return 0 if (rep_d.passed and rep_f.passed) else 2


def _cmd_gradcheck(args) -> int:
    from .distributions import IsoGaussian
    from .estimators import finite_difference_check, score_function_gradient

    def quad(z):
        return z[:, :1].copy(), np.sum(z * z, axis=1)

    def waves(z):
        # nonlinear scalar BC so diversity gradients are nonzero
        amps = 1.0 + 0.5 * np.arange(z.shape[1])
        b = np.sin(z + 0.3 * np.arange(z.shape[1])) @ amps
        return b[:, None], b

    ok = True
    rows = []
    for est, shaped in (("es", False), ("maxvar", False), ("maxent", False)):
        for dim in (1, 5):
            dist = IsoGaussian(np.linspace(0.3, 1.0, dim), 0.5)
            env = quad if est == "es" else waves
            g = score_function_gradient(est, dist, env, args.n, args.seed, 1.0, shaped)
            fd = finite_difference_check(est, dist, env, args.n, 1e-4, args.seed, 1.0, shaped)
            a = g.grad.ravel()
            cos = float(a @ fd / (np.linalg.norm(a) * np.linalg.norm(fd)))
            mag = float(abs(np.linalg.norm(a) / np.linalg.norm(fd) - 1.0))
            passed = cos > 0.99 and mag < 0.10
            ok = ok and passed
            rows.append({"estimator": est, "dim": dim, "cosine": cos, "mag_err": mag, "pass": passed})
    print(json.dumps(rows))
    return 0 if ok else 2


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "adapt": _cmd_adapt,
    "seed-es": _cmd_seed_es,
    "gmm-split": _cmd_gmm_split,
    "theorem-demo": _cmd_theorem_demo,
    "gradcheck": _cmd_gradcheck,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except (CliError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (CheckpointError, TrainingError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
