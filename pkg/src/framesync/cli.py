"""Command-line front end: ``framesync {threshold,pattern,trial,sweep}``.

Exit codes: 0 success, 2 configuration or validation error, 3 resource-cap refusal.
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import sys
from pathlib import Path

from .channel import Channel, ChannelError, bsc, load_channel, sync_threshold, validate
from .decoders import DEFAULT_MU, DecoderId
from .pattern import DegenerateChannel, PatternTooShort, build_pattern, min_shift_distance
from .sim import ML_CAP, MLSkipped, NuMode, TrialConfig, records_to_csv, run_sweep, run_trial, write_json

logger = logging.getLogger("framesync")

EXIT_CONFIG = 2
EXIT_CAP = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _fmt_nats(v: float) -> str:
    return "infinite" if math.isinf(v) else f"{v:.9f}"


def _channel(args) -> Channel:
    if args.bsc is not None:
        if not 0 <= args.bsc <= 1:
            raise CliError(f"--bsc: crossover {args.bsc} outside [0, 1]")
        ch = bsc(args.bsc)
        try:
            validate(ch)
        except ChannelError as exc:
            raise CliError(f"--bsc: {exc}") from exc
        return ch
    if args.channel is None:
        raise CliError("one of --channel PATH or --bsc P is required")
    try:
        return load_channel(args.channel)
    except FileNotFoundError as exc:
        raise CliError(f"--channel: cannot read {args.channel}") from exc
    except ChannelError as exc:
        raise CliError(f"{args.channel}: {exc}") from exc


def _decoders(text: str) -> tuple[DecoderId, ...]:
    try:
        return tuple(DecoderId(d.strip()) for d in text.split(",") if d.strip())
    except ValueError as exc:
        choices = ", ".join(d.value for d in DecoderId)
        raise argparse.ArgumentTypeError(f"unknown decoder in {text!r}; choose from {choices}") from exc


def _pattern(channel: Channel, N: int, K: int):
    try:
        return build_pattern(channel, N, K, allow_infinite=True)
    except PatternTooShort as exc:
        raise CliError(f"pattern too short: floor(N/K) = {N // K} < 3; N >= {3 * K} required for K={K}") from exc
    except DegenerateChannel as exc:
        raise CliError(f"degenerate channel: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_threshold(args, out) -> int:
    channel = _channel(args)
    value, x_bar, divs = sync_threshold(channel)
    print(f"noise symbol: {channel.input_alphabet[channel.star]}", file=out)
    for name, d in zip(channel.input_alphabet, divs):
        print(f"D(Q(.|{name}) || Q(.|star)) = {_fmt_nats(d)} nats", file=out)
    print(f"threshold alpha(Q) = {_fmt_nats(value)} nats", file=out)
    print(f"x_bar = {channel.input_alphabet[x_bar]}", file=out)
    if value == 0:
        logger.warning("degenerate channel: every input row equals the noise row, threshold is 0")
        print("warning: degenerate channel (threshold 0)", file=out)
    return 0


def cmd_pattern(args, out) -> int:
    channel = _channel(args)
    p = _pattern(channel, args.N, args.K)
    dist, shift = min_shift_distance(p)
    print(p.render(), file=out)
    print(
        f"N={p.N} K={p.K} m={p.m} l={p.l} stars={p.n_stars} star_fraction={p.n_stars / p.N:.6f} "
        f"min_shift_distance={dist} at_shift={shift}",
        file=out,
    )
    return 0


def cmd_trial(args, out) -> int:
    channel = _channel(args)
    p = _pattern(channel, args.N, args.K)
    try:
        cfg = TrialConfig(channel, p, args.alpha, args.mu, args.seed, args.nu_mode)
    except (ValueError, OverflowError) as exc:
        raise CliError(str(exc)) from exc
    try:
        outcome = run_trial(cfg, args.decoders, ml_cap=args.ml_cap)
    except MLSkipped as exc:
        raise CliError(f"{exc}; rerun with --decoders typicality", EXIT_CAP) from exc
    print(f"N={cfg.N} K={args.K} alpha={cfg.alpha:g} A={cfg.A} seed={cfg.seed} nu_mode={cfg.nu_mode}", file=out)
    print(f"nu = {outcome.nu}", file=out)
    print(f"{'decoder':<12} {'declared_start':>14} {'stop_time':>10}  result", file=out)
    for v in outcome.verdicts:
        start = "none" if v.declared_start is None else str(v.declared_start)
        stop = "none" if v.stop_time is None else str(v.stop_time)
        result = "success" if v.declared_start == outcome.nu else f"failure ({outcome.miss(v.decoder)})"
        print(f"{v.decoder.value:<12} {start:>14} {stop:>10}  {result}", file=out)
    return 0


def cmd_sweep(args, out) -> int:
    channel = _channel(args)
    out_path = Path(args.output)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "a"):
            pass
    except OSError as exc:
        raise CliError(f"--output: cannot write {out_path}: {exc}") from exc
    grid = [(N, a) for N in args.N for a in args.alpha]
    skipped: list = []
    records = run_sweep(
        grid, channel, args.K, args.mu, args.trials, args.seed, args.decoders,
        nu_mode=args.nu_mode, workers=args.workers, ml_cap=args.ml_cap,
        record_timing=not args.no_timing, skipped=skipped,
    )
    out_path.write_text(records_to_csv(records))
    if args.json:
        write_json(records, out_path.with_suffix(".json"))
    print(f"{'N':>5} {'alpha':>8} {'A':>12} {'decoder':<12} {'trials':>7} {'errors':>7} {'rate':>7} {'ci95':>7}", file=out)
    for r in records:
        print(
            f"{r.N:>5} {r.alpha:>8g} {r.A:>12} {r.decoder.value:<12} {r.trials:>7} {r.errors:>7} "
            f"{r.error_rate:>7.4f} {r.ci95_halfwidth:>7.4f}",
            file=out,
        )
    for cell in skipped:
        print(f"skipped N={cell.N} alpha={cell.alpha:g} [{','.join(map(str, cell.decoders))}]: {cell.reason}",
              file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="framesync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--channel", help="channel file (YAML or JSON)")
    src.add_argument("--bsc", type=float, metavar="P", help="binary symmetric channel with crossover P, star='0'")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", help="output file path")
    common.add_argument("-q", "--quiet", action="store_true", help="log warnings only")

    sub.add_parser("threshold", parents=[common], help="per-input divergences and the synchronization threshold")

    pat = argparse.ArgumentParser(add_help=False)
    pat.add_argument("--N", type=int, required=True, help="pattern length")
    pat.add_argument("--K", type=int, default=8, help="noise-spike grid period (default 8)")
    sub.add_parser("pattern", parents=[common, pat], help="build and inspect a sync pattern")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--mu", type=float, default=DEFAULT_MU, help=f"typicality tolerance (default {DEFAULT_MU})")
    run.add_argument("--nu-mode", type=NuMode, choices=list(NuMode), default=NuMode.UNIFORM)
    run.add_argument("--ml-cap", type=int, default=ML_CAP, help="max A+N-1 materialized for ML decoders")

    trial = sub.add_parser("trial", parents=[common, pat, run], help="run one trial")
    trial.add_argument("--alpha", type=float, required=True)
    trial.add_argument("--decoders", type=_decoders, default=(DecoderId.TYPICALITY, DecoderId.SLIDING_ML),
                       help="comma-separated: typicality,sliding_ml,block_ml")

    sweep = sub.add_parser("sweep", parents=[common, run], help="Monte Carlo sweep over N x alpha")
    sweep.add_argument("--N", type=int, nargs="+", required=True)
    sweep.add_argument("--alpha", type=float, nargs="+", required=True)
    sweep.add_argument("--K", type=int, default=8)
    sweep.add_argument("--trials", type=int, default=1000)
    sweep.add_argument("--decoders", type=_decoders, default=(DecoderId.TYPICALITY,))
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--json", action="store_true", help="also write a JSON mirror next to the CSV")
    sweep.add_argument("--no-timing", action="store_true", help="write wall_time_s as 0 for byte-reproducible files")
    return parser


COMMANDS = {"threshold": cmd_threshold, "pattern": cmd_pattern, "trial": cmd_trial, "sweep": cmd_sweep}


def _resolved(args) -> dict:
    def plain(v):
        if isinstance(v, (list, tuple)):
            return [plain(x) for x in v]
        return v.value if isinstance(v, (DecoderId, NuMode)) else v

    return {k: plain(v) for k, v in sorted(vars(args).items())}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("framesync")
    root.handlers[:] = [handler]
    root.setLevel(logging.WARNING if args.quiet else logging.INFO)
    root.propagate = False
    if args.subcommand == "sweep" and not args.output:
        parser.error("sweep requires --output")
    logger.info("configuration: %s", _resolved(args))
    report = io.StringIO()
    try:
        code = COMMANDS[args.subcommand](args, report)
    except CliError as exc:
        print(f"framesync {args.subcommand}: error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OverflowError) as exc:
        print(f"framesync {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(report.getvalue())
    if args.output and args.subcommand != "sweep":
        try:
            out_path = Path(args.output)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_text(report.getvalue())
        except OSError as exc:
            print(f"framesync {args.subcommand}: error: --output: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
