from fractions import Fraction
import numpy as np
import pytest
from pdpu.engine import LengthMismatchError, Mode, PdpuConfig, pdpu_dot
from pdpu.fuzz import random_operands
from pdpu.oracle import (
    Schedule,
    UnknownScheduleError,
    exact_dot,
    oracle_for_mode,
    oracle_fused_dot,
    oracle_step_rounded_dot,
)
from pdpu.posit import PositBits, PositFormat, from_float, round_exact, to_fraction

P8 = PositFormat(8, 2)
P13 = PositFormat(13, 2)
P16 = PositFormat(16, 2)


def bits(fmt, values):
    return [from_float(x, fmt) for x in values]


def test_all_zero():
    cfg = PdpuConfig(P8, P8, 4)
    zeros = [P8.zero()] * 4
    assert oracle_fused_dot(cfg, zeros, zeros, P8.zero()) == P8.zero()
    assert exact_dot(cfg, zeros, zeros, P8.zero()).is_zero


def test_single_product():
    cfg = PdpuConfig(P8, P8, 1)
    one = P8.one()
    assert oracle_fused_dot(cfg, [one], [one], P8.zero()) == one


def test_exact_dot_value():
    cfg = PdpuConfig(P13, P16, 3)
    va = bits(P13, [1.5, -2.0, 0.25])
    vb = bits(P13, [4.0, 0.5, 0.125])
    acc = from_float(10.0, P16)
    assert exact_dot(cfg, va, vb, acc).to_fraction() == Fraction(10 + 6 - 1) + Fraction(1, 32)
    assert exact_dot(cfg, va, vb, P16.nar()).nar


def test_fma_single_term_equals_fused():
    rng = np.random.default_rng(11)
    cfg = PdpuConfig(P13, P16, 1)
    for _ in range(200):
        va, vb, acc = random_operands(cfg, rng)
        assert oracle_step_rounded_dot(cfg, va, vb, acc, Schedule.FMA) == oracle_fused_dot(
            cfg, va, vb, acc
        )


def test_representable_inputs_agree():
    cfg = PdpuConfig(P8, P8, 4)
    va = bits(P8, [1.0, 2.0, -1.0, 0.5])
    vb = bits(P8, [1.0, 1.0, 2.0, 2.0])
    acc = from_float(3.0, P8)
    fused = oracle_fused_dot(cfg, va, vb, acc)
    assert fused == from_float(5.0, P8)
    assert oracle_step_rounded_dot(cfg, va, vb, acc, "mul_add") == fused
    assert oracle_step_rounded_dot(cfg, va, vb, acc, "fma") == fused


def test_unknown_schedule():
    cfg = PdpuConfig(P8, P8, 1)
    with pytest.raises(UnknownScheduleError):
        oracle_step_rounded_dot(cfg, [P8.one()], [P8.one()], P8.zero(), "tree")


def test_length_mismatch():
    cfg = PdpuConfig(P8, P8, 2)
    with pytest.raises(LengthMismatchError):
        oracle_fused_dot(cfg, [P8.one()], [P8.one()], P8.zero())


def test_oracle_permutation_invariant():
    rng = np.random.default_rng(2)
    cfg = PdpuConfig(P13, P16, 8)
    for _ in range(50):
        va, vb, acc = random_operands(cfg, rng)
        order = rng.permutation(8)
        pa = [va[i] for i in order]
        pb = [vb[i] for i in order]
        assert oracle_fused_dot(cfg, pa, pb, acc) == oracle_fused_dot(cfg, va, vb, acc)


def test_lattice_points_round_to_themselves():
    cfg = PdpuConfig(P8, P8, 1)
    for b in range(1 << 8):
        p = PositBits(P8, b)
        if not p.is_nar:
            assert round_exact(exact_dot(cfg, [p], [P8.one()], P8.zero()), P8) == p


@pytest.mark.parametrize("mode", [m.value for m in Mode])
def test_oracle_for_mode_matches_engine(mode):
    rng = np.random.default_rng(5)
    cfg = PdpuConfig(P13, P16, 4, mode=mode)
    if mode == "fused":
        # a window wide enough to hold the accumulator and every product exactly
        cfg = PdpuConfig(P13, P16, 4, wm=300)
    for _ in range(100):
        va, vb, acc = random_operands(cfg, rng)
        assert pdpu_dot(cfg, va, vb, acc) == oracle_for_mode(cfg, va, vb, acc)


def test_near_cancellation():
    cfg = PdpuConfig(P13, P16, 2)
    big = from_float(1024.0, P13)
    va = [big, big]
    vb = [from_float(1.0, P13), from_float(-1.0, P13)]
    acc = from_float(2.0**-20, P16)
    assert to_fraction(oracle_fused_dot(cfg, va, vb, acc)) == Fraction(1, 2**20)
