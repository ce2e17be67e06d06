"""Command-line entry point: ``securedfl <command> ...``.

Every run prints a ``# reproduce:`` line on stderr with the full argument
vector and resolved seeds. Output files are never overwritten without
``--force``. Relative output paths are resolved against ``$SECUREDFL_OUTPUT_DIR``
when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from pathlib import Path
from typing import Sequence

from . import adversary, experiments
from .aggregate import ALL_TO_ALL, GROUPED, AdmmConfig, run_aggregation
from .data import load_csv, make_synthetic, shard_rows
from .fedtrain import FLConfig, train
from .params import ParamVector
from .schedule import GroupSchedule, SearchBudget, generate_schedule, validate_schedule
from .simnet import Transcript, run_simulation

OUTPUT_DIR_ENV = "SECUREDFL_OUTPUT_DIR"
EXIT_BREACH = 10


class CliError(Exception):
    exit_code = 1


class UsageError(CliError):
    exit_code = 2


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def write_output(path: str, text: str, force: bool) -> Path:
    p = _out_path(path)
    if p.exists() and not force:
        raise CliError(f"{p} exists; pass --force to overwrite")
    p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="\n") as fh:
        fh.write(text)
    return p


def _emit(text: str, path: str | None, force: bool) -> None:
    if path:
        write_output(path, text, force)
    else:
        sys.stdout.write(text)


def _int_list(text: str) -> list[int]:
    """Parse ``"1,2,5"`` or ``"1..7"`` (inclusive) into integers."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- schedule -------------------------------------------------------------

def cmd_schedule_gen(args) -> int:
    budget = SearchBudget(
        max_sample_attempts_per_class=args.attempts,
        max_class_restarts=args.budget,
        target_classes=args.target,
    )
    sch = generate_schedule(args.n, args.s, args.seed, budget, sampler=args.sampler)
    obj = sch.to_json_obj()
    obj["budget"] = {
        "max_sample_attempts_per_class": budget.max_sample_attempts_per_class,
        "max_class_restarts": budget.max_class_restarts,
        "target_classes": budget.target_classes,
        "sampler": args.sampler,
    }
    _emit(json.dumps(obj) + "\n", args.out, args.force)
    print(f"gap {sch.gap}", file=sys.stderr)
    return 0


def cmd_schedule_check(args) -> int:
    report = validate_schedule(GroupSchedule.load(args.file))
    sys.stdout.write(_dumps(report.to_json_obj()))
    return 0 if report.valid else 1


# -- aggregate ---------------------------------------------------------

def load_inputs(path: str) -> list[ParamVector]:
    obj = json.loads(Path(path).read_text())
    vectors = obj["vectors"] if isinstance(obj, dict) else obj
    return [ParamVector.from_json_obj(v) for v in vectors]


def cmd_aggregate(args) -> int:
    ws = load_inputs(args.inputs)
    schedule = None
    if args.mode == GROUPED:
        if args.schedule:
            schedule = GroupSchedule.load(args.schedule)
        elif args.group_size:
            schedule = generate_schedule(len(ws), args.group_size, args.seed)
        else:
            raise UsageError("grouped mode needs --schedule or --group-size")
    cfg = AdmmConfig(
        rho=args.rho,
        max_iterations=args.iters,
        mode=args.mode,
        schedule=schedule,
        lambda_zero=args.lambda_zero,
        unsafe=args.unsafe,
    )
    if args.transcript:
        z, tr, result = run_simulation(ws, cfg, args.seed)
        write_output(args.transcript, tr.dumps(), args.force)
    else:
        result = run_aggregation(ws, cfg, args.seed)
        z = result.z
    _emit(z.to_json() + "\n", args.out, args.force)
    if args.csv:
        rows = [(t.iteration, t.residual_l2, t.max_dual_sum) for t in result.traces]
        write_output(
            args.csv,
            experiments.to_csv(["iteration", "residual_l2", "max_dual_sum"], rows),
            args.force,
        )
    return 0


# -- attack --------------------------------------------------------------

def cmd_attack(args) -> int:
    tr = Transcript.load(args.transcript)
    result = adversary.attack(tr, args.observer, args.target, args.iters, args.group_sums)
    obj = result.to_json_obj()
    obj.update(observer=args.observer, target=args.target,
               iterations=args.iters or tr.iterations)
    sys.stdout.write(_dumps(obj))
    return EXIT_BREACH if result.unique else 0


# -- train ---------------------------------------------------------------

_TRAIN_FLAGS = (
    "rounds", "local_epochs", "batch_size", "learning_rate", "peers", "model", "hidden",
    "rho", "admm_iterations", "group_size", "aggregation_mode", "seed",
)


def resolve_config(args) -> FLConfig:
    """Defaults, overridden by the config file, overridden by flags."""
    merged = FLConfig().to_dict()
    if args.config:
        merged.update(json.loads(Path(args.config).read_text()))
    for name in _TRAIN_FLAGS:
        value = getattr(args, name)
        if value is not None:
            merged[name] = value
    if args.unsafe:
        merged["unsafe"] = True
    return FLConfig.from_dict(merged)


def load_training_data(spec: str, cfg: FLConfig, args):
    if spec == "synth":
        return make_synthetic(
            cfg.peers,
            args.samples_per_peer,
            args.dim,
            args.heterogeneity,
            cfg.seed,
            classes=args.classes,
            separation=args.separation,
        )
    if spec.startswith("csv:"):
        X, y = load_csv(spec[4:])
        return shard_rows(X, y, cfg.peers, cfg.seed)
    raise UsageError(f"--data must be 'synth' or 'csv:<path>', got {spec!r}")


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    data = load_training_data(args.data, cfg, args)
    report = train(args.mode, cfg, data)
    obj = report.to_json_obj()
    obj["data"] = args.data
    _emit(_dumps(obj), args.out, args.force)
    print(f"final accuracy {report.final_accuracy}", file=sys.stderr)
    return 0


# -- sweeps ----------------------------------------------------------------

def cmd_sweep_iters(args) -> int:
    iters = _int_list(args.iters)
    if not iters or min(iters) < 1:
        raise UsageError("--iters must list iteration counts >= 1")
    rows = experiments.sweep_iterations(
        n=args.n,
        s=args.s,
        rho=args.rho,
        dims=_int_list(args.dims),
        iteration_range=iters,
        seeds=_int_list(args.seeds),
        schedule_seed=args.seed,
        unsafe=args.unsafe,
    )
    _emit(experiments.iteration_rows_csv(rows), args.out, args.force)
    if args.threshold:
        below = experiments.oracle_iteration_below(
            args.threshold, args.n, _int_list(args.dims)[0], args.rho, _int_list(args.seeds)
        )
        print(f"oracle: mean MSE < {args.threshold:g} from iteration {below}", file=sys.stderr)
    return 0


def cmd_sweep_schedule(args) -> int:
    budget = SearchBudget(max_class_restarts=args.budget)
    rows = experiments.sweep_schedule(_int_list(args.n_range), args.s, _int_list(args.seeds), budget)
    _emit(experiments.schedule_rows_csv(rows), args.out, args.force)
    trend = experiments.nondecreasing([r.median_classes for r in rows])
    print(f"median class count non-decreasing in n: {trend}", file=sys.stderr)
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="securedfl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def outputs(sp):
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    sched = sub.add_parser("schedule", help="generate or check group schedules")
    ssub = sched.add_subparsers(dest="action", required=True)
    gen = ssub.add_parser("gen")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--s", type=int, default=3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--budget", type=int, default=SearchBudget.max_class_restarts,
                     help="restarts allowed per class")
    gen.add_argument("--attempts", type=int, default=SearchBudget.max_sample_attempts_per_class,
                     help="rejection draws per class attempt")
    gen.add_argument("--target", type=int, help="stop after this many classes")
    gen.add_argument("--sampler", choices=("clique", "rejection"), default="clique")
    outputs(gen)
    gen.set_defaults(func=cmd_schedule_gen)
    chk = ssub.add_parser("check")
    chk.add_argument("file")
    chk.set_defaults(func=cmd_schedule_check)

    agg = sub.add_parser("aggregate", help="run ADMM averaging over input vectors")
    agg.add_argument("--inputs", required=True, help="JSON list of vectors or {'vectors': [...]}")
    agg.add_argument("--rho", type=float, default=1.0)
    agg.add_argument("--iters", type=int, default=2)
    agg.add_argument("--mode", choices=(ALL_TO_ALL, GROUPED), default=ALL_TO_ALL)
    agg.add_argument("--schedule")
    agg.add_argument("--group-size", type=int)
    agg.add_argument("--seed", type=int, default=0)
    agg.add_argument("--lambda-zero", action="store_true", help="start every dual at zero")
    agg.add_argument("--unsafe", action="store_true", help="allow iterations past the privacy limit")
    agg.add_argument("--csv", help="per-iteration residual CSV")
    agg.add_argument("--transcript", help="write the message transcript (JSON lines)")
    outputs(agg)
    agg.set_defaults(func=cmd_aggregate)

    att = sub.add_parser("attack", help="honest-but-curious reconstruction from a transcript")
    att.add_argument("--transcript", required=True)
    att.add_argument("--observer", type=int, required=True)
    att.add_argument("--target", type=int, required=True)
    att.add_argument("--iters", type=int)
    att.add_argument("--group-sums", dest="group_sums", action="store_true", default=None)
    att.add_argument("--no-group-sums", dest="group_sums", action="store_false")
    att.set_defaults(func=cmd_attack)

    tr = sub.add_parser("train", help="federated training")
    tr.add_argument("--mode", choices=("secured", "fedavg", "local"), required=True)
    tr.add_argument("--config")
    tr.add_argument("--data", default="synth", help="'synth' or 'csv:<path>'")
    tr.add_argument("--rounds", type=int)
    tr.add_argument("--local-epochs", type=int)
    tr.add_argument("--batch-size", type=int)
    tr.add_argument("--learning-rate", type=float)
    tr.add_argument("--peers", type=int)
    tr.add_argument("--model", choices=("linear", "logistic", "mlp"))
    tr.add_argument("--hidden", type=int)
    tr.add_argument("--rho", type=float)
    tr.add_argument("--admm-iterations", type=int)
    tr.add_argument("--group-size", type=int)
    tr.add_argument("--aggregation-mode", choices=(ALL_TO_ALL, GROUPED))
    tr.add_argument("--seed", type=int)
    tr.add_argument("--unsafe", action="store_true")
    tr.add_argument("--samples-per-peer", type=int, default=1000)
    tr.add_argument("--dim", type=int, default=20)
    tr.add_argument("--classes", type=int, default=4)
    tr.add_argument("--heterogeneity", type=float, default=0.8)
    tr.add_argument("--separation", type=float, default=0.6)
    outputs(tr)
    tr.set_defaults(func=cmd_train)

    sw = sub.add_parser("sweep", help="experiment sweeps written as CSV")
    swsub = sw.add_subparsers(dest="action", required=True)
    si = swsub.add_parser("iters")
    si.add_argument("--n", type=int, default=9)
    si.add_argument("--s", type=int, default=3)
    si.add_argument("--rho", type=float, default=1.0)
    si.add_argument("--dims", default="10000")
    si.add_argument("--iters", default="1..7")
    si.add_argument("--seeds", default="0..4")
    si.add_argument("--seed", type=int, default=0, help="schedule seed")
    si.add_argument("--threshold", type=float, help="report oracle iteration where MSE drops below")
    si.add_argument("--unsafe", action="store_true")
    outputs(si)
    si.set_defaults(func=cmd_sweep_iters)
    ss = swsub.add_parser("schedule")
    ss.add_argument("--n-range", default="9,15,21,27")
    ss.add_argument("--s", type=int, default=3)
    ss.add_argument("--seeds", default="0..9")
    ss.add_argument("--budget", type=int, default=SearchBudget.max_class_restarts)
    outputs(ss)
    ss.set_defaults(func=cmd_sweep_schedule)
    return p


def reproduction_line(argv: Sequence[str], args) -> str:
    seeds = {k: v for k, v in vars(args).items() if k in ("seed", "seeds") and v is not None}
    resolved = " ".join(f"{k}={v}" for k, v in sorted(seeds.items()))
    return f"# reproduce: {shlex.join(['securedfl', *argv])}" + (
        f"  [resolved {resolved}]" if resolved else ""
    )


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    print(reproduction_line(argv, args), file=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
