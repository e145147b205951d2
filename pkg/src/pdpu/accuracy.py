import csv
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
import numpy as np
from pathos.pools import ProcessPool
from tqdm import tqdm
from pdpu.engine import LengthMismatchError, Mode, PdpuConfig, chunked_dot, codec_units
from pdpu.posit import PositFormat, from_float, to_fraction

DEFAULT_CEILING = 17.0
DEFAULT_N_VECTORS = 100000
CHUNK_SIZE = 1024
REPORT_HEADER = [
    "config",
    "mode",
    "n",
    "es_in",
    "n_out",
    "N",
    "wm",
    "mean_rel_err",
    "max_rel_err",
    "match_rate",
    "mean_dec_acc",
]
HISTOGRAM_HEADER = ["bin_lo", "bin_hi", "count"]


@dataclass(frozen=True)
class Gaussian:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive, got {}".format(self.sigma))

    def sample(self, rng, size):
        return rng.normal(self.mu, self.sigma, size)

    def __str__(self):
        return "gaussian:{},{}".format(self.mu, self.sigma)


@dataclass(frozen=True)
class LogUniform:
    """
    magnitudes uniform in log space over [lo, hi), random sign
    """

    lo: float = 1e-3
    hi: float = 1e3

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError(
                "log-uniform bounds must satisfy 0 < lo < hi, got {} and {}".format(
                    self.lo, self.hi
                )
            )

    def sample(self, rng, size):
        magnitude = np.exp(rng.uniform(np.log(self.lo), np.log(self.hi), size))
        sign = rng.choice(np.array([-1.0, 1.0]), size)
        return sign * magnitude

    def __str__(self):
        return "loguniform:{},{}".format(self.lo, self.hi)


@dataclass(frozen=True)
class CorpusData:
    a: np.ndarray
    b: np.ndarray
    acc: np.ndarray


@dataclass(frozen=True)
class Corpus:
    """
    a seeded synthetic operand corpus standing in for DNN layer data:
    activations from distribution, weights from weights, and an optional
    accumulator input (zero when acc is None)
    """

    seed: int = 0
    distribution: object = Gaussian(0.0, 1.0)
    n_vectors: int = DEFAULT_N_VECTORS
    n_terms: int = 8
    weights: object = Gaussian(0.0, 0.1)
    acc: object = None

    def __post_init__(self):
        if self.n_vectors < 1 or self.n_terms < 1:
            raise ValueError("corpus needs at least one vector of at least one term")

    def generate(self):
        rng = np.random.default_rng(self.seed)
        shape = (self.n_vectors, self.n_terms)
        a = self.distribution.sample(rng, shape)
        b = self.weights.sample(rng, shape)
        if self.acc is None:
            acc = np.zeros(self.n_vectors)
        else:
            acc = self.acc.sample(rng, self.n_vectors)
        return CorpusData(a=a, b=b, acc=acc)


@dataclass(frozen=True)
class AccuracyReport:
    label: str
    mode: str
    n_in: int
    es_in: int
    n_out: int
    n_terms: int
    wm: object
    mean_rel_err: float
    max_rel_err: float
    match_rate: float
    mean_decimal_accuracy: float
    config: object = None

    def csv_row(self):
        return [
            self.label,
            self.mode,
            self.n_in,
            self.es_in,
            self.n_out,
            self.n_terms,
            "" if self.wm is None else self.wm,
            repr(self.mean_rel_err),
            repr(self.max_rel_err),
            repr(self.match_rate),
            repr(self.mean_decimal_accuracy),
        ]


@dataclass(frozen=True)
class AccuracyProfile:
    accuracies: np.ndarray
    edges: np.ndarray
    counts: np.ndarray

    @property
    def mean(self):
        finite = self.accuracies[np.isfinite(self.accuracies)]
        return float(finite.mean()) if finite.size else -math.inf


DEFAULT_SWEEP_CONFIGS = (
    PdpuConfig(PositFormat(16, 2), PositFormat(16, 2), 4, wm=14),
    PdpuConfig(PositFormat(13, 2), PositFormat(16, 2), 4, wm=14),
    PdpuConfig(PositFormat(13, 2), PositFormat(16, 2), 8, wm=14),
    PdpuConfig(PositFormat(10, 2), PositFormat(16, 2), 8, wm=14),
    PdpuConfig(PositFormat(13, 2), PositFormat(16, 2), 8, wm=10),
    PdpuConfig(PositFormat(13, 2), PositFormat(16, 2), 4, mode=Mode.QUIRE),
)


def wm_sweep_configs(in_fmt, out_fmt, n_terms, widths=(6, 8, 10, 12, 14)):
    """
    fused configs over increasing alignment widths, closed by the quire config
    """
    configs = [PdpuConfig(in_fmt, out_fmt, n_terms, wm=w) for w in widths]
    configs.append(PdpuConfig(in_fmt, out_fmt, n_terms, mode=Mode.QUIRE))
    return configs


def _ratio_distance(value, reference):
    # |log10(value / reference)| for same-sign nonzero rationals
    ratio = value / reference
    try:
        r = float(ratio)
    except OverflowError:
        r = math.inf
    if r == 0.0 or math.isinf(r):
        return abs(
            math.log10(ratio.numerator) - math.log10(ratio.denominator)
        )
    return abs(math.log10(r))


def decimal_accuracy_exact(reference, value, ceiling=DEFAULT_CEILING):
    """
    -log10|log10(value / reference)| on exact rationals, capped at ceiling.
    value None stands for NaR.
    """
    if value is not None and value == reference:
        return ceiling
    if value is None or reference == 0 or value == 0 or (value > 0) != (reference > 0):
        return -math.inf
    distance = _ratio_distance(Fraction(value), Fraction(reference))
    if distance == 0.0:
        return ceiling
    return min(ceiling, -math.log10(distance)) + 0.0


def decimal_accuracy(x, x_hat, ceiling=DEFAULT_CEILING):
    """
    digits of agreement between a value and its representation
    :param x: the true value
    :param x_hat: its approximation
    :param ceiling: value returned for an exact match
    :return: -log10|log10(x_hat / x)|, or -inf when signs differ or exactly one is zero
    """
    if math.isnan(x) or math.isnan(x_hat):
        return -math.inf
    if x == x_hat:
        return ceiling
    if math.isinf(x) or math.isinf(x_hat):
        return -math.inf
    return decimal_accuracy_exact(Fraction(x), Fraction(x_hat), ceiling)


def relative_error(reference, value):
    if value is None:
        return math.inf
    if reference == 0:
        return 0.0 if value == 0 else math.inf
    try:
        return float(abs(value - reference) / abs(reference))
    except OverflowError:
        return math.inf


def exact_references(data):
    """
    exact rational acc + a.b per corpus vector, from the binary64 corpus values
    """
    references = []
    for a_row, b_row, acc in zip(data.a, data.b, data.acc):
        total = Fraction(float(acc))
        for x, y in zip(a_row, b_row):
            total += Fraction(float(x)) * Fraction(float(y))
        references.append(total)
    return references


def quantize(values, fmt):
    """
    rounds an array of binary64 values to posit patterns, preserving shape as nested lists
    """
    values = np.asarray(values)
    if values.ndim == 1:
        return [from_float(float(x), fmt) for x in values]
    return [quantize(row, fmt) for row in values]


def summarize(values, references, tolerance, ceiling=DEFAULT_CEILING):
    """
    aggregates per-vector results in corpus order
    :param values: exact rational results, None for NaR or non-finite results
    :param references: exact rational references
    :param tolerance: relative error accepted as a match
    :return: (mean_rel_err, max_rel_err, match_rate, mean_decimal_accuracy)
    """
    rel = np.array([relative_error(r, v) for r, v in zip(references, values)])
    dec = np.array(
        [decimal_accuracy_exact(r, v, ceiling) for r, v in zip(references, values)]
    )
    finite_dec = dec[np.isfinite(dec)]
    return (
        float(rel.mean()),
        float(rel.max()),
        float(np.mean(rel <= tolerance)),
        float(finite_dec.mean()) if finite_dec.size else -math.inf,
    )


def _evaluate_chunk(cfg, chunk):
    qa, qb, qacc = chunk
    return [chunked_dot(cfg, va, vb, acc) for va, vb, acc in zip(qa, qb, qacc)]


def _map_chunks(func, chunks, num_cpus, desc, progress):
    if num_cpus == 1:
        return [func(chunk) for chunk in tqdm(chunks, desc=desc, disable=not progress)]
    # create a process pool with the number of cpus specified
    pool = ProcessPool(ncpus=num_cpus)
    results = pool.map(func, chunks)
    pool.close()
    pool.join()
    pool.clear()
    return results


def evaluate_config(cfg, qa, qb, qacc, num_cpus=1, progress=False):
    """
    runs a configuration over quantized operands, fanning chunks out over processes.
    chunk boundaries do not depend on num_cpus.
    """
    chunks = [
        (qa[i : i + CHUNK_SIZE], qb[i : i + CHUNK_SIZE], qacc[i : i + CHUNK_SIZE])
        for i in range(0, len(qa), CHUNK_SIZE)
    ]
    func = partial(_evaluate_chunk, cfg)
    results = _map_chunks(
        func, chunks, num_cpus, "{} {} wm={}".format(cfg.label, cfg.mode.value, cfg.wm), progress
    )
    return [out for chunk in results for out in chunk]


def run_sweep(corpus, configs, num_cpus=1, tolerance=None, progress=False, ceiling=DEFAULT_CEILING):
    """
    evaluates every configuration on the corpus against the exact reference
    :param corpus: Corpus; its n_terms must be a multiple of every config's N
    :param configs: PdpuConfig list
    :param num_cpus: processes used per configuration
    :param tolerance: match tolerance, default 2^-fw_out
    :param progress: show progress bars
    :return: list of AccuracyReport in config order
    """
    configs = list(configs)
    if not configs:
        raise ValueError("sweep needs at least one configuration")
    for cfg in configs:
        if corpus.n_terms % cfg.n_terms:
            raise LengthMismatchError(
                "corpus vectors of {} terms cannot be split into chunks of N={}".format(
                    corpus.n_terms, cfg.n_terms
                )
            )
    data = corpus.generate()
    logging.info(
        "corpus: {} vectors x {} terms, activations {}, weights {}, seed {}".format(
            corpus.n_vectors, corpus.n_terms, corpus.distribution, corpus.weights, corpus.seed
        )
    )
    references = exact_references(data)
    quantized = {}
    reports = []
    for cfg in configs:
        for key, values, fmt in (
            ("a", data.a, cfg.in_fmt),
            ("b", data.b, cfg.in_fmt),
            ("acc", data.acc, cfg.out_fmt),
        ):
            if (key, fmt) not in quantized:
                logging.debug("quantizing {} to {}".format(key, fmt))
                quantized[(key, fmt)] = quantize(values, fmt)
        results = evaluate_config(
            cfg,
            quantized[("a", cfg.in_fmt)],
            quantized[("b", cfg.in_fmt)],
            quantized[("acc", cfg.out_fmt)],
            num_cpus=num_cpus,
            progress=progress,
        )
        tau = tolerance if tolerance is not None else 2.0 ** -cfg.out_fmt.frac_width
        values = [None if r.is_nar else to_fraction(r) for r in results]
        mean_rel, max_rel, match_rate, mean_dec = summarize(values, references, tau, ceiling)
        report = AccuracyReport(
            label=cfg.label,
            mode=cfg.mode.value,
            n_in=cfg.in_fmt.n,
            es_in=cfg.in_fmt.es,
            n_out=cfg.out_fmt.n,
            n_terms=cfg.n_terms,
            wm=cfg.wm,
            mean_rel_err=mean_rel,
            max_rel_err=max_rel,
            match_rate=match_rate,
            mean_decimal_accuracy=mean_dec,
            config=cfg,
        )
        units = codec_units(cfg)
        logging.info(
            "{} {} N={} wm={}: match_rate={:.4f}, mean_rel_err={:.3e}, "
            "{} decoders, {} encoders".format(
                cfg.label,
                cfg.mode.value,
                cfg.n_terms,
                cfg.wm,
                match_rate,
                mean_rel,
                units.decoders,
                units.encoders,
            )
        )
        reports.append(report)
    return reports


def _ieee_tree_dot(a, b, acc):
    # same order as the discrete multiplier / adder-tree model, acc last
    level = [a[:, j] * b[:, j] for j in range(a.shape[1])]
    while len(level) > 1:
        paired = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return level[0] + acc


def ieee_baseline(corpus, dtype, ceiling=DEFAULT_CEILING):
    """
    accuracy of a discrete IEEE-754 dot product (float16 or float32) on the corpus
    """
    dtype = np.dtype(dtype)
    data = corpus.generate()
    references = exact_references(data)
    with np.errstate(over="ignore", invalid="ignore"):
        out = _ieee_tree_dot(
            data.a.astype(dtype), data.b.astype(dtype), data.acc.astype(dtype)
        ).astype(np.float64)
    values = [Fraction(float(x)) if np.isfinite(x) else None for x in out]
    info = np.finfo(dtype)
    mean_rel, max_rel, match_rate, mean_dec = summarize(
        values, references, 2.0 ** -info.nmant, ceiling
    )
    return AccuracyReport(
        label="FP{}".format(info.bits),
        mode="ieee",
        n_in=info.bits,
        es_in=info.nexp,
        n_out=info.bits,
        n_terms=corpus.n_terms,
        wm=None,
        mean_rel_err=mean_rel,
        max_rel_err=max_rel,
        match_rate=match_rate,
        mean_decimal_accuracy=mean_dec,
    )


def _histogram(accuracies, edges, ceiling):
    finite = accuracies[np.isfinite(accuracies)]
    if edges is None:
        low = min(0.0, math.floor(finite.min())) if finite.size else 0.0
        edges = np.arange(low, ceiling + 0.25, 0.5)
    counts, edges = np.histogram(finite, bins=edges)
    return edges, counts


def tapered_accuracy_profile(fmt, samples, edges=None, ceiling=DEFAULT_CEILING):
    """
    decimal accuracy of representing each sample in fmt
    :param fmt: PositFormat
    :param samples: real values
    :param edges: histogram bin edges, default half-digit bins up to the ceiling
    :return: AccuracyProfile
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    accuracies = []
    for x in samples:
        if not np.isfinite(x):
            accuracies.append(-math.inf)
            continue
        p = from_float(float(x), fmt)
        accuracies.append(decimal_accuracy_exact(Fraction(float(x)), to_fraction(p), ceiling))
    accuracies = np.array(accuracies)
    edges, counts = _histogram(accuracies, edges, ceiling)
    return AccuracyProfile(accuracies=accuracies, edges=edges, counts=counts)


def float_accuracy_profile(dtype, samples, edges=None, ceiling=DEFAULT_CEILING):
    """
    the same profile for an IEEE-754 dtype, for posit versus float comparisons
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    with np.errstate(over="ignore"):
        represented = samples.astype(dtype).astype(np.float64)
    accuracies = np.array(
        [decimal_accuracy(float(x), float(y), ceiling) for x, y in zip(samples, represented)]
    )
    edges, counts = _histogram(accuracies, edges, ceiling)
    return AccuracyProfile(accuracies=accuracies, edges=edges, counts=counts)


def write_reports_csv(path, reports):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_HEADER)
        for report in reports:
            writer.writerow(report.csv_row())


def write_histogram_csv(path, profile):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HISTOGRAM_HEADER)
        for lo, hi, count in zip(profile.edges[:-1], profile.edges[1:], profile.counts):
            writer.writerow([repr(float(lo)), repr(float(hi)), int(count)])
