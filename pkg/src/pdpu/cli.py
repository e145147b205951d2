import logging
import sys
from fractions import Fraction
import numpy as np
from pdpu import options
from pdpu.accuracy import (
    DEFAULT_SWEEP_CONFIGS,
    Corpus,
    float_accuracy_profile,
    ieee_baseline,
    run_sweep,
    tapered_accuracy_profile,
    write_histogram_csv,
    write_reports_csv,
)
from pdpu.engine import PdpuConfig, codec_units, pdpu_dot, pdpu_trace
from pdpu.fuzz import replay_cases, run_fuzz
from pdpu.oracle import oracle_fused_dot, oracle_step_rounded_dot
from pdpu.parsers import parse_configs_file, parse_hex_list, read_dot_cases, write_dot_cases
from pdpu.posit import PositBits, PositFormat, fields, round_fraction, to_fraction, to_float

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGENCE = 2
NAR_SPELLINGS = ("nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity", "nar")


def parse_real(text):
    """
    parses a decimal or rational string exactly, None stands for NaR
    """
    if text.strip().lower() in NAR_SPELLINGS:
        return None
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError("cannot parse {!r} as a real number".format(text))


def _print_value(p):
    print("value={!r}".format(to_float(p)))
    print("exact={}".format(to_fraction(p)))


def cmd_decode(args):
    p = PositBits.from_hex(args.fmt, args.bits)
    print("format={}".format(args.fmt))
    print("bits={}".format(p))
    if p.is_nar:
        print("NaR")
        return EXIT_OK
    if p.is_zero:
        print("zero")
        return EXIT_OK
    f = fields(p)
    print("sign={}".format(f.sign))
    print("regime_run={}".format(f.regime_run))
    print("k={}".format(f.k))
    print("exponent={}".format(f.exponent))
    print("exponent_width={}".format(f.exponent_width))
    print("mantissa={}".format(f.mantissa))
    print("mantissa_width={}".format(f.mantissa_width))
    _print_value(p)
    return EXIT_OK


def cmd_convert(args):
    if args.bits is not None:
        p = PositBits.from_hex(args.fmt, args.bits)
        if p.is_nar:
            print("NaR")
        else:
            _print_value(p)
        return EXIT_OK
    value = parse_real(args.from_real)
    p = args.fmt.nar() if value is None else round_fraction(value, args.fmt)
    print(p)
    return EXIT_OK


def _print_trace(trace):
    d, m = trace.decoded, trace.multiplied
    print("s1.s_ab={}".format(",".join(str(s) for s in d.s_ab)))
    print("s1.e_ab={}".format(",".join(str(e) for e in d.e_ab)))
    print("s1.nar={}".format(int(d.any_nar)))
    print("s2.mantissas={}".format(",".join("{:x}".format(t.mantissa) for t in m.products)))
    print("s2.e_max={}".format(m.e_max))
    print("s3.aligned={}".format(",".join("{:x}".format(t.bits) for t in trace.aligned)))
    acc = trace.accumulated
    print("s4.sum={:x}".format(acc.csa.sum))
    print("s4.carry={:x}".format(acc.csa.carry))
    print("s4.f_s={}".format(acc.sign))
    print("s4.s_m={:x}".format(acc.magnitude))
    v = trace.normalized
    if v.is_nar:
        print("s5=NaR")
    elif v.is_zero:
        print("s5=zero")
    else:
        print("s5.f_e={}".format(v.scale))
        print("s5.f_m={:x}".format(v.mantissa))
        print("s5.sticky={}".format(int(v.sticky)))
    print("s6.out={}".format(trace.out))


def cmd_dot(args):
    va = parse_hex_list(args.in_fmt, args.a)
    vb = parse_hex_list(args.in_fmt, args.b)
    acc = PositBits.from_hex(args.out_fmt, args.acc) if args.acc else args.out_fmt.zero()
    mode = args.mode
    if mode == "oracle":
        mode = "fused"
    elif mode.startswith("oracle_"):
        mode = mode[len("oracle_") :]
    cfg = PdpuConfig(args.in_fmt, args.out_fmt, len(va), wm=args.wm, mode=mode, booth=args.booth)
    if args.mode == "oracle":
        out = oracle_fused_dot(cfg, va, vb, acc)
    elif args.mode.startswith("oracle_"):
        out = oracle_step_rounded_dot(cfg, va, vb, acc, mode)
    elif args.trace:
        trace = pdpu_trace(cfg, va, vb, acc)
        _print_trace(trace)
        out = trace.out
    else:
        out = pdpu_dot(cfg, va, vb, acc)
    print(out)
    return EXIT_OK


def cmd_fuzz(args):
    if args.replay:
        summary = replay_cases(read_dot_cases(args.replay))
    else:
        cfg = PdpuConfig(
            args.in_fmt, args.out_fmt, args.n_terms, wm=args.wm, mode=args.mode, booth=args.booth
        )
        summary = run_fuzz(
            cfg,
            args.count,
            seed=args.seed,
            reference=args.reference,
            num_cpus=args.num_cpus,
            progress=args.progress,
        )
    print("cases={}".format(summary.count))
    print("divergences={}".format(len(summary.divergences)))
    if args.output:
        write_dot_cases(args.output, [d.case for d in summary.divergences])
        logging.info("divergent cases written to {}".format(args.output))
    if summary.divergences and not args.allow_lossy:
        return EXIT_DIVERGENCE
    return EXIT_OK


def cmd_sweep(args):
    corpus = Corpus(
        seed=args.seed,
        distribution=args.distribution,
        n_vectors=args.n_vectors,
        n_terms=args.n_terms,
        weights=args.weights,
        acc=args.acc_distribution,
    )
    configs = parse_configs_file(args.configs) if args.configs else list(DEFAULT_SWEEP_CONFIGS)
    reports = run_sweep(
        corpus,
        configs,
        num_cpus=args.num_cpus,
        tolerance=args.tolerance,
        progress=args.progress,
    )
    if args.ieee_baselines:
        reports += [ieee_baseline(corpus, np.float16), ieee_baseline(corpus, np.float32)]
    write_reports_csv(args.output, reports)
    for report in reports:
        units = codec_units(report.config) if report.config is not None else None
        print(
            "{} {} N={} wm={} match_rate={:.4f} mean_rel_err={:.3e}{}".format(
                report.label,
                report.mode,
                report.n_terms,
                "-" if report.wm is None else report.wm,
                report.match_rate,
                report.mean_rel_err,
                "" if units is None else " codecs={}/{}".format(units.decoders, units.encoders),
            )
        )
    if args.histogram:
        samples = corpus.generate().a.ravel()[: args.profile_samples]
        if isinstance(args.profile_fmt, PositFormat):
            profile = tapered_accuracy_profile(args.profile_fmt, samples)
            label = str(args.profile_fmt)
        else:
            profile = float_accuracy_profile(args.profile_fmt, samples)
            label = "FP{}".format(np.finfo(args.profile_fmt).bits)
        write_histogram_csv(args.histogram, profile)
        print("{} mean_dec_acc={:.4f}".format(label, profile.mean))
    return EXIT_OK


COMMANDS = {
    "decode": cmd_decode,
    "convert": cmd_convert,
    "dot": cmd_dot,
    "fuzz": cmd_fuzz,
    "sweep": cmd_sweep,
}


def main(my_string=None):
    """
    entry point of the pdpu command
    :param my_string: if provided, parsed instead of the command line
    :return: exit code, 0 on success, 1 on usage errors, 2 when fuzzing diverged
    """
    try:
        args = options.parse_arguments(my_string)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (ValueError, FileNotFoundError) as e:
        print("pdpu: error: {}".format(e), file=sys.stderr)
        return EXIT_USAGE
    if args.log:
        args.log.parent.mkdir(parents=True, exist_ok=True)
        logging.basicConfig(
            filename=args.log, filemode="w", level=args.verbosity.upper()
        )
    else:
        logging.basicConfig(level=args.verbosity.upper())
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as e:
        logging.error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
