"""
differential fuzzing of the engine against the exact oracle
"""
import logging
from dataclasses import dataclass
from functools import partial
import numpy as np
from pathos.pools import ProcessPool
from tqdm import tqdm
from pdpu.engine import pdpu_dot
from pdpu.oracle import DotCase, oracle_for_mode, oracle_fused_dot
from pdpu.posit import PositBits

CHUNK_SIZE = 1000
REFERENCES = ("schedule", "fused")


@dataclass(frozen=True)
class Divergence:
    case: DotCase
    got: PositBits


@dataclass(frozen=True)
class FuzzSummary:
    count: int
    divergences: tuple

    @property
    def ok(self):
        return not self.divergences


def random_operands(cfg, rng):
    """
    draws uniformly random bit patterns for one dot product
    :param cfg: PdpuConfig
    :param rng: numpy Generator
    :return: (va, vb, acc)
    """
    n = cfg.n_terms
    raw = rng.integers(0, 1 << cfg.in_fmt.n, size=2 * n)
    va = tuple(PositBits(cfg.in_fmt, int(x)) for x in raw[:n])
    vb = tuple(PositBits(cfg.in_fmt, int(x)) for x in raw[n:])
    acc = PositBits(cfg.out_fmt, int(rng.integers(0, 1 << cfg.out_fmt.n)))
    return va, vb, acc


def reference_dot(cfg, va, vb, acc, reference="schedule"):
    """
    :param reference: "schedule" for the oracle of the engine's own mode, "fused"
    for the single-rounding result regardless of mode
    """
    if reference == "schedule":
        return oracle_for_mode(cfg, va, vb, acc)
    if reference == "fused":
        return oracle_fused_dot(cfg, va, vb, acc)
    raise ValueError("unknown fuzz reference {!r}, use one of {}".format(reference, REFERENCES))


def _fuzz_chunk(cfg, reference, job):
    seed, size = job
    rng = np.random.default_rng(seed)
    divergences = []
    for _ in range(size):
        va, vb, acc = random_operands(cfg, rng)
        got = pdpu_dot(cfg, va, vb, acc)
        expected = reference_dot(cfg, va, vb, acc, reference)
        if got != expected:
            divergences.append(
                Divergence(case=DotCase(cfg, va, vb, acc, expected), got=got)
            )
    return divergences


def run_fuzz(cfg, count, seed=0, reference="schedule", num_cpus=1, progress=False):
    """
    compares pdpu_dot with the oracle on count seeded random cases.
    cases are generated in fixed chunks with spawned seeds, so the same seed
    yields the same cases for any num_cpus.
    :param cfg: PdpuConfig
    :param count: number of cases
    :param seed: base seed
    :param reference: "schedule" or "fused"
    :param num_cpus: processes to use
    :param progress: show a progress bar
    :return: FuzzSummary
    """
    if reference not in REFERENCES:
        raise ValueError("unknown fuzz reference {!r}, use one of {}".format(reference, REFERENCES))
    if count < 1:
        raise ValueError("fuzz count must be positive, got {}".format(count))
    sizes = [CHUNK_SIZE] * (count // CHUNK_SIZE)
    if count % CHUNK_SIZE:
        sizes.append(count % CHUNK_SIZE)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(seeds, sizes))
    func = partial(_fuzz_chunk, cfg, reference)
    logging.info(
        "fuzzing {} {} N={} wm={} against the {} reference: {} cases, seed {}".format(
            cfg.label, cfg.mode.value, cfg.n_terms, cfg.wm, reference, count, seed
        )
    )
    if num_cpus == 1:
        results = [func(job) for job in tqdm(jobs, desc="fuzz", disable=not progress)]
    else:
        pool = ProcessPool(ncpus=num_cpus)
        results = pool.map(func, jobs)
        pool.close()
        pool.join()
        pool.clear()
    divergences = tuple(d for chunk in results for d in chunk)
    for d in divergences[:10]:
        logging.warning(
            "divergence: got {}, expected {} (a={}, b={}, acc={})".format(
                d.got,
                d.case.expected,
                " ".join(str(p) for p in d.case.va),
                " ".join(str(p) for p in d.case.vb),
                d.case.acc,
            )
        )
    logging.info("{} of {} cases diverged".format(len(divergences), count))
    return FuzzSummary(count=count, divergences=divergences)


def replay_cases(cases):
    """
    re-runs stored test vectors, each under the configuration it records, and
    compares pdpu_dot with the recorded expected pattern
    :param cases: DotCase list, e.g. from parsers.read_dot_cases
    :return: FuzzSummary
    """
    if not cases:
        raise ValueError("no test vectors to replay")
    divergences = []
    for case in cases:
        got = pdpu_dot(case.cfg, case.va, case.vb, case.acc)
        if got != case.expected:
            divergences.append(Divergence(case=case, got=got))
    logging.info("{} of {} replayed cases diverged".format(len(divergences), len(cases)))
    return FuzzSummary(count=len(cases), divergences=tuple(divergences))
