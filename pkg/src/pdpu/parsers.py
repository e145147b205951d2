import re
import numpy as np
from pdpu.accuracy import Gaussian, LogUniform
from pdpu.engine import Mode, PdpuConfig
from pdpu.oracle import DotCase
from pdpu.posit import PositBits, PositFormat

FORMAT_PATTERN = re.compile(r"^\s*(\d+)\s*,\s*(\d+)\s*$")
IEEE_FORMATS = {"fp16": np.float16, "fp32": np.float32, "fp64": np.float64}


def parse_format(text):
    """
    parses an "n,es" pair
    :param text: e.g. "13,2"
    :return: PositFormat
    """
    match = FORMAT_PATTERN.match(text)
    if match is None:
        raise ValueError("posit format must look like n,es, got {!r}".format(text))
    return PositFormat(int(match.group(1)), int(match.group(2)))


def parse_profile_format(text):
    """
    parses the format of an accuracy histogram: a posit "n,es" or an IEEE-754
    name (fp16, fp32, fp64)
    :return: PositFormat or numpy dtype
    """
    name = text.strip().lower()
    if name in IEEE_FORMATS:
        return np.dtype(IEEE_FORMATS[name])
    return parse_format(text)


def format_format(fmt):
    return "{},{}".format(fmt.n, fmt.es)


def parse_hex_list(fmt, text):
    """
    parses comma separated hex bit patterns, e.g. "40,38,0x20"
    """
    items = [x for x in text.split(",") if x.strip()]
    if not items:
        raise ValueError("expected at least one hex pattern, got {!r}".format(text))
    return [PositBits.from_hex(fmt, x) for x in items]


def format_dot_case(case):
    """
    one test-vector line:
    fmt_in fmt_out N wm mode a_0..a_{N-1} b_0..b_{N-1} acc expected
    """
    cfg = case.cfg
    fields = [
        format_format(cfg.in_fmt),
        format_format(cfg.out_fmt),
        str(cfg.n_terms),
        str(cfg.wm),
        cfg.mode.value,
    ]
    fields += [p.hex() for p in case.va]
    fields += [p.hex() for p in case.vb]
    fields += [case.acc.hex(), case.expected.hex()]
    return " ".join(fields)


def parse_dot_case(line):
    """
    inverse of format_dot_case
    :param line: a test-vector line
    :return: DotCase
    """
    tokens = line.split()
    if len(tokens) < 5:
        raise ValueError("truncated test-vector line: {!r}".format(line))
    in_fmt = parse_format(tokens[0])
    out_fmt = parse_format(tokens[1])
    try:
        n_terms = int(tokens[2])
        wm = int(tokens[3])
    except ValueError:
        raise ValueError("N and wm must be integers in line {!r}".format(line))
    try:
        mode = Mode(tokens[4])
    except ValueError:
        raise ValueError("unknown mode {!r} in line {!r}".format(tokens[4], line))
    if n_terms < 1 or len(tokens) != 5 + 2 * n_terms + 2:
        raise ValueError(
            "expected {} fields for N={}, got {}".format(
                5 + 2 * n_terms + 2, n_terms, len(tokens)
            )
        )
    cfg = PdpuConfig(in_fmt, out_fmt, n_terms, wm=wm, mode=mode)
    operands = tokens[5:]
    va = tuple(PositBits.from_hex(in_fmt, x) for x in operands[:n_terms])
    vb = tuple(PositBits.from_hex(in_fmt, x) for x in operands[n_terms : 2 * n_terms])
    acc = PositBits.from_hex(out_fmt, operands[-2])
    expected = PositBits.from_hex(out_fmt, operands[-1])
    return DotCase(cfg=cfg, va=va, vb=vb, acc=acc, expected=expected)


def _content_lines(path):
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                yield line


def read_dot_cases(path):
    return [parse_dot_case(line) for line in _content_lines(path)]


def write_dot_cases(path, cases):
    with open(path, "w") as f:
        for case in cases:
            f.write(format_dot_case(case) + "\n")


def parse_config_line(line):
    """
    parses a sweep configuration line "fmt_in fmt_out N wm mode [booth]",
    e.g. "13,2 16,2 8 14 fused". wm is ignored in quire mode and may be "-".
    """
    tokens = line.split()
    if len(tokens) not in (5, 6):
        raise ValueError("malformed configuration line: {!r}".format(line))
    in_fmt = parse_format(tokens[0])
    out_fmt = parse_format(tokens[1])
    booth = False
    if len(tokens) == 6:
        if tokens[5] != "booth":
            raise ValueError("unknown configuration flag {!r}".format(tokens[5]))
        booth = True
    try:
        n_terms = int(tokens[2])
        wm = 14 if tokens[3] == "-" else int(tokens[3])
    except ValueError:
        raise ValueError("N and wm must be integers in line {!r}".format(line))
    try:
        mode = Mode(tokens[4])
    except ValueError:
        raise ValueError("unknown mode {!r} in line {!r}".format(tokens[4], line))
    return PdpuConfig(in_fmt, out_fmt, n_terms, wm=wm, mode=mode, booth=booth)


def parse_configs_file(path):
    """
    reads sweep configurations, one per line; blank lines and # comments are skipped
    """
    configs = [parse_config_line(line) for line in _content_lines(path)]
    if not configs:
        raise ValueError("no configurations found in {}".format(path))
    return configs


def parse_distribution(text):
    """
    parses "gaussian:mu,sigma" or "loguniform:lo,hi"
    """
    name, _, params = text.partition(":")
    try:
        values = [float(x) for x in params.split(",")]
    except ValueError:
        raise ValueError("malformed distribution parameters: {!r}".format(text))
    if len(values) != 2:
        raise ValueError("distribution needs two parameters, got {!r}".format(text))
    name = name.strip().lower()
    if name == "gaussian":
        return Gaussian(*values)
    if name == "loguniform":
        return LogUniform(*values)
    raise ValueError("unknown distribution {!r}".format(name))
