"""
exact-arithmetic reference for every engine mode. sums and products are kept
as exact dyadic rationals and rounded only where the modeled architecture rounds.
"""
from dataclasses import dataclass
from enum import Enum
from pdpu.engine import check_operands
from pdpu.posit import round_exact, to_exact


class UnknownScheduleError(ValueError):
    pass


class Schedule(Enum):
    MUL_ADD = "mul_add"
    FMA = "fma"


@dataclass(frozen=True)
class DotCase:
    """
    one dot-product case with its expected output, the unit of the test-vector file
    """

    cfg: object
    va: tuple
    vb: tuple
    acc: object
    expected: object


def _schedule(schedule):
    if isinstance(schedule, Schedule):
        return schedule
    try:
        return Schedule(schedule)
    except ValueError:
        raise UnknownScheduleError("unknown rounding schedule: {!r}".format(schedule))


def exact_dot(cfg, va, vb, acc):
    """
    acc + sum(a_i * b_i) without any rounding; NaR anywhere gives NaR
    """
    check_operands(cfg, va, vb, acc)
    total = to_exact(acc)
    for a, b in zip(va, vb):
        total = total + to_exact(a) * to_exact(b)
    return total


def oracle_fused_dot(cfg, va, vb, acc):
    """
    the exact dot product rounded once to cfg.out_fmt
    """
    return round_exact(exact_dot(cfg, va, vb, acc), cfg.out_fmt)


def _mul_add_schedule(cfg, va, vb, acc):
    out_fmt = cfg.out_fmt
    level = [round_exact(to_exact(a) * to_exact(b), out_fmt) for a, b in zip(va, vb)]
    while len(level) > 1:
        paired = [
            round_exact(to_exact(level[i]) + to_exact(level[i + 1]), out_fmt)
            for i in range(0, len(level) - 1, 2)
        ]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return round_exact(to_exact(level[0]) + to_exact(acc), out_fmt)


def _fma_schedule(cfg, va, vb, acc):
    result = acc
    for a, b in zip(va, vb):
        result = round_exact(to_exact(result) + to_exact(a) * to_exact(b), cfg.out_fmt)
    return result


def oracle_step_rounded_dot(cfg, va, vb, acc, schedule):
    """
    replays the rounding schedule of a discrete architecture with exact
    arithmetic between roundings
    :param schedule: Schedule or "mul_add" / "fma"
    """
    schedule = _schedule(schedule)
    check_operands(cfg, va, vb, acc)
    if schedule is Schedule.MUL_ADD:
        return _mul_add_schedule(cfg, va, vb, acc)
    return _fma_schedule(cfg, va, vb, acc)


def oracle_for_mode(cfg, va, vb, acc):
    """
    the reference an engine mode must match bit for bit: the single-rounding
    dot product for fused and quire modes, the step schedule for discrete modes
    """
    if cfg.is_fused:
        return oracle_fused_dot(cfg, va, vb, acc)
    return oracle_step_rounded_dot(cfg, va, vb, acc, cfg.mode.value)
