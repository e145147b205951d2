import argparse
import os
from pathlib import Path
from pathos.helpers import cpu_count
from . import version
from .accuracy import DEFAULT_N_VECTORS
from .engine import Mode
from .fuzz import REFERENCES
from .parsers import parse_distribution, parse_format, parse_profile_format

SEED_ENV = "PDPU_SEED"
ENGINE_MODES = [m.value for m in Mode]
ORACLE_MODES = ["oracle", "oracle_mul_add", "oracle_fma"]


class ArgumentParser(argparse.ArgumentParser):
    """
    usage errors exit with code 1
    """

    def error(self, message):
        self.print_usage()
        self.exit(1, "{}: error: {}\n".format(self.prog, message))


def _flag(name):
    # accept both --some_flag and --some-flag
    names = ["--" + name]
    if "_" in name:
        names.append("--" + name.replace("_", "-"))
    return names


def _add_common(parser):
    parser.add_argument("--log", help="If present, writes log to this path")
    parser.add_argument(
        "--verbosity",
        type=str,
        choices=["debug", "info", "warning"],
        default="info",
        help="Selects verbosity level.",
    )


def _add_config(parser, modes, required=True):
    parser.add_argument(
        *_flag("in_fmt"),
        "--fmt",
        dest="in_fmt",
        type=parse_format,
        required=required,
        help="Input posit format of V_a and V_b as n,es.",
    )
    parser.add_argument(
        *_flag("out_fmt"),
        type=parse_format,
        help="Output posit format of acc and the result as n,es (default: input format).",
    )
    parser.add_argument(
        "--wm", type=int, default=14, help="Alignment width in bits (ignored in quire mode)."
    )
    parser.add_argument(
        "--mode", type=str, choices=modes, default="fused", help="Engine mode."
    )
    parser.add_argument(
        "--booth",
        action="store_true",
        help="Use the radix-4 Booth multiplier in the multiply stage.",
    )


def _add_parallel(parser):
    parser.add_argument(
        *_flag("num_cpus"),
        type=int,
        default=1,
        help="Amount of cpus to use (-1: use all available cpus).",
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="Random seed (overridden by {}).".format(SEED_ENV)
    )
    parser.add_argument("--progress", action="store_true", help="Show progress bars.")


def build_parser():
    parser = ArgumentParser(prog="pdpu")
    parser.add_argument("--version", action="version", version="%(prog)s " + version)
    commands = parser.add_subparsers(dest="command", required=True)

    decode = commands.add_parser("decode", help="Print the fields and value of a bit pattern.")
    decode.add_argument("--fmt", type=parse_format, required=True, help="Posit format as n,es.")
    decode.add_argument("--bits", type=str, required=True, help="Hex bit pattern.")
    _add_common(decode)

    convert = commands.add_parser("convert", help="Convert a real to a bit pattern or back.")
    convert.add_argument("--fmt", type=parse_format, required=True, help="Posit format as n,es.")
    source = convert.add_mutually_exclusive_group(required=True)
    source.add_argument(
        *_flag("from_real"),
        dest="from_real",
        type=str,
        help="Decimal or rational real (nan and inf map to NaR).",
    )
    source.add_argument("--bits", type=str, help="Hex bit pattern to convert to a real.")
    _add_common(convert)

    dot = commands.add_parser("dot", help="Evaluate one dot product acc + a . b.")
    _add_config(dot, ENGINE_MODES + ORACLE_MODES)
    dot.add_argument("--a", type=str, required=True, help="Comma separated hex patterns of V_a.")
    dot.add_argument("--b", type=str, required=True, help="Comma separated hex patterns of V_b.")
    dot.add_argument("--acc", type=str, help="Hex pattern of the accumulator (default: zero).")
    dot.add_argument(
        "--trace", action="store_true", help="Print every stage of the fused datapath."
    )
    _add_common(dot)

    fuzz = commands.add_parser("fuzz", help="Differential fuzzing against the exact oracle.")
    _add_config(fuzz, ENGINE_MODES, required=False)
    fuzz.add_argument(
        *_flag("n_terms"), "-N", dest="n_terms", type=int, default=4, help="Dot-product size N."
    )
    fuzz.add_argument("--count", type=int, default=10000, help="Number of random cases.")
    fuzz.add_argument(
        "--reference",
        type=str,
        choices=REFERENCES,
        default="schedule",
        help="Compare against the oracle of the engine's own rounding schedule, or the single-rounding result.",
    )
    fuzz.add_argument("--output", help="If present, divergent cases are written to this file.")
    fuzz.add_argument(
        "--replay",
        help="Test-vector file to replay instead of random cases; each line carries its own configuration.",
    )
    fuzz.add_argument(
        *_flag("allow_lossy"),
        dest="allow_lossy",
        action="store_true",
        help="Report divergences without failing, for configurations expected to be lossy.",
    )
    _add_parallel(fuzz)
    _add_common(fuzz)

    sweep = commands.add_parser("sweep", help="Accuracy sweep over configurations.")
    sweep.add_argument(
        "--configs",
        type=str,
        help="File with one configuration per line: in_fmt out_fmt N wm mode [booth].",
    )
    sweep.add_argument("--output", type=str, required=True, help="Report CSV path.")
    sweep.add_argument(
        *_flag("n_vectors"), type=int, default=DEFAULT_N_VECTORS, help="Corpus vector count."
    )
    sweep.add_argument(
        *_flag("n_terms"), type=int, default=8, help="Corpus vector length."
    )
    sweep.add_argument(
        "--distribution",
        type=parse_distribution,
        default="gaussian:0,1",
        help="Activation distribution, gaussian:mu,sigma or loguniform:lo,hi.",
    )
    sweep.add_argument(
        "--weights", type=parse_distribution, default="gaussian:0,0.1", help="Weight distribution."
    )
    sweep.add_argument(
        *_flag("acc_distribution"),
        type=parse_distribution,
        help="Accumulator input distribution (default: zero accumulator).",
    )
    sweep.add_argument("--tolerance", type=float, help="Match tolerance (default: 2^-fw_out).")
    sweep.add_argument(
        *_flag("ieee_baselines"),
        action="store_true",
        help="Append FP16 and FP32 discrete baselines to the report.",
    )
    sweep.add_argument("--histogram", type=str, help="If present, writes a tapered accuracy histogram CSV.")
    sweep.add_argument(
        *_flag("profile_fmt"),
        type=parse_profile_format,
        default="16,2",
        help="Format of the accuracy histogram: a posit n,es or fp16, fp32, fp64.",
    )
    sweep.add_argument(
        *_flag("profile_samples"),
        type=int,
        default=10000,
        help="Number of activation samples in the histogram.",
    )
    _add_parallel(sweep)
    _add_common(sweep)
    return parser


def parse_arguments(my_string=None):
    """
    parse command line arguments
    :param my_string: if provided, will parse this string instead of command line arguments
    :return: parsed arguments
    """
    parser = build_parser()
    if my_string is not None:
        args = parser.parse_args(my_string.split())
    else:
        args = parser.parse_args()
    if args.log:
        args.log = Path(args.log)
    if args.command in ("dot", "fuzz"):
        if args.out_fmt is None:
            args.out_fmt = args.in_fmt
    if args.command == "dot":
        if args.trace and args.mode not in ("fused", "quire"):
            raise ValueError("--trace is only available for fused and quire modes")
    if args.command in ("fuzz", "sweep"):
        if SEED_ENV in os.environ:
            try:
                args.seed = int(os.environ[SEED_ENV])
            except ValueError:
                raise ValueError(
                    "{} must be an integer, got {!r}".format(SEED_ENV, os.environ[SEED_ENV])
                )
        if args.num_cpus == -1:
            args.num_cpus = cpu_count()
        elif args.num_cpus < 1:
            raise ValueError("num_cpus must be positive or -1")
        elif args.num_cpus > cpu_count():
            raise ValueError("Number of cpus requested is greater than available cpus")
    if args.command == "fuzz":
        if args.replay:
            args.replay = Path(args.replay)
            if not args.replay.is_file():
                raise FileNotFoundError("Test-vector file {} not found".format(args.replay))
        elif args.in_fmt is None:
            raise ValueError("--fmt is required unless --replay is given")
        if args.count < 1:
            raise ValueError("count must be positive")
        if args.output:
            args.output = Path(args.output)
            args.output.parent.mkdir(exist_ok=True, parents=True)
    if args.command == "sweep":
        if args.n_vectors < 1 or args.n_terms < 1:
            raise ValueError("n_vectors and n_terms must be positive")
        if args.profile_samples < 1:
            raise ValueError("profile_samples must be positive")
        if args.configs:
            args.configs = Path(args.configs)
            if not args.configs.is_file():
                raise FileNotFoundError("Configuration file {} not found".format(args.configs))
        args.output = Path(args.output)
        args.output.parent.mkdir(exist_ok=True, parents=True)
        if args.histogram:
            args.histogram = Path(args.histogram)
            args.histogram.parent.mkdir(exist_ok=True, parents=True)
    return args
