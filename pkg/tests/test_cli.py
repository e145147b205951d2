from fractions import Fraction
import pytest
from pdpu import cli
from pdpu.engine import PdpuConfig, pdpu_dot
from pdpu.oracle import DotCase
from pdpu.parsers import parse_hex_list, read_dot_cases, write_dot_cases
from pdpu.posit import PositBits, PositFormat, round_fraction

P13 = PositFormat(13, 2)
P16 = PositFormat(16, 2)
QUIRE_CASE = "dot --fmt 13,2 --out_fmt 16,2 --a 0400,0f12,1a03 --b 0123,0800,1fff --acc 4000"


def run(capsys, arguments):
    code = cli.main(arguments)
    return code, capsys.readouterr().out


@pytest.mark.parametrize(
    "arguments, expected",
    [
        ("decode --fmt 8,2 --bits 80", "NaR"),
        ("decode --fmt 8,2 --bits 40", "value=1.0"),
        ("decode --fmt 8,2 --bits 00", "zero"),
        ("decode --fmt 8,2 --bits 0d", "regime_run=3"),
    ],
)
def test_decode(capsys, arguments, expected):
    code, out = run(capsys, arguments)
    assert code == 0
    assert expected in out.splitlines()


def test_decode_fields(capsys):
    code, out = run(capsys, "decode --fmt 8,2 --bits 0d")
    lines = out.splitlines()
    assert "k=-3" in lines
    assert "exponent=2" in lines
    assert "exact=3/2048" in lines


@pytest.mark.parametrize(
    "arguments",
    [
        "decode --fmt 8,2 --bits zz",
        "decode --fmt 8,2 --bits 100",
        "decode --fmt 8,9 --bits 40",
        "decode --fmt 8,2",
        "transpose --fmt 8,2",
        "",
    ],
)
def test_usage_errors(capsys, arguments):
    assert cli.main(arguments) == 1


def test_version(capsys):
    assert cli.main("--version") == 0


@pytest.mark.parametrize(
    "arguments, expected",
    [
        ("convert --fmt 8,2 --from_real 1.0", "0x40"),
        ("convert --fmt 8,2 --from-real 0", "0x00"),
        ("convert --fmt 8,2 --from_real 1e30", "0x7f"),
        ("convert --fmt 8,2 --from_real -1", "0xc0"),
        ("convert --fmt 8,2 --from_real nan", "0x80"),
        ("convert --fmt 8,2 --from_real inf", "0x80"),
        ("convert --fmt 8,2 --bits 48", "value=2.0"),
        ("convert --fmt 8,2 --bits 80", "NaR"),
    ],
)
def test_convert(capsys, arguments, expected):
    code, out = run(capsys, arguments)
    assert code == 0
    assert expected in out.splitlines()


def test_convert_parses_decimals_exactly(capsys):
    code, out = run(capsys, "convert --fmt 16,2 --from_real 0.1")
    assert code == 0
    assert out.strip() == str(round_fraction(Fraction(1, 10), P16))
    assert cli.main("convert --fmt 8,2 --from_real one") == 1
    assert cli.main("convert --fmt 8,2 --from_real 1 --bits 40") == 1


@pytest.mark.parametrize(
    "arguments, expected",
    [
        ("dot --fmt 8,2 --a 48 --b 40", "0x48"),
        ("dot --fmt 8,2 --a 48,40 --b 40,80 --acc 40", "0x80"),
        ("dot --fmt 8,2 --a 48 --b 40 --mode fma --acc 40", "0x4c"),
    ],
)
def test_dot(capsys, arguments, expected):
    code, out = run(capsys, arguments)
    assert code == 0
    assert out.strip() == expected


def test_dot_matches_library(capsys):
    code, out = run(capsys, QUIRE_CASE + " --wm 10")
    assert code == 0
    cfg = PdpuConfig(P13, P16, 3, wm=10)
    va = parse_hex_list(P13, "0400,0f12,1a03")
    vb = parse_hex_list(P13, "0123,0800,1fff")
    expected = pdpu_dot(cfg, va, vb, PositBits(P16, 0x4000))
    assert PositBits.from_hex(P16, out.strip()) == expected


def test_quire_matches_oracle(capsys):
    _, quire = run(capsys, QUIRE_CASE + " --mode quire")
    _, oracle = run(capsys, QUIRE_CASE + " --mode oracle")
    assert quire == oracle


def test_trace(capsys):
    code, plain = run(capsys, QUIRE_CASE)
    code, traced = run(capsys, QUIRE_CASE + " --trace")
    assert code == 0
    lines = traced.splitlines()
    keys = [line.split("=")[0] for line in lines[:-1]]
    for key in ["s1.s_ab", "s1.e_ab", "s2.e_max", "s3.aligned", "s4.sum", "s4.carry", "s6.out"]:
        assert key in keys
    assert lines[-1] == plain.strip()
    assert cli.main(QUIRE_CASE + " --mode fma --trace") == 1


def test_dot_errors(capsys):
    assert cli.main("dot --fmt 8,2 --a 40,40 --b 40") == 1
    assert cli.main("dot --fmt 13,2 --out_fmt 16,1 --a 40 --b 40") == 1
    assert cli.main("dot --fmt 8,2 --a 40 --b 40 --mode turbo") == 1


def test_fuzz_clean(capsys):
    code, out = run(capsys, "fuzz --fmt 13,2 --out_fmt 16,2 -N 4 --mode quire --count 200 --seed 1")
    assert code == 0
    assert "divergences=0" in out.splitlines()


def test_fuzz_discrete_schedule(capsys):
    code, out = run(capsys, "fuzz --fmt 8,2 -N 4 --mode mul_add --count 200")
    assert code == 0


def test_fuzz_lossy(capsys, tmp_path):
    arguments = "fuzz --fmt 13,2 --out_fmt 16,2 --wm 4 --reference fused --count 200"
    assert cli.main(arguments) == 2
    path = tmp_path / "out" / "divergences.txt"
    code, out = run(capsys, arguments + " --allow_lossy --output {}".format(path))
    assert code == 0
    cases = read_dot_cases(path)
    assert cases
    assert "divergences={}".format(len(cases)) in out.splitlines()
    assert all(case.cfg.wm == 4 for case in cases)


def test_fuzz_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("PDPU_SEED", "not-a-seed")
    assert cli.main("fuzz --fmt 8,2 --count 10") == 1


@pytest.fixture
def configs_file(tmp_path):
    path = tmp_path / "configs.txt"
    path.write_text("# sweep\n13,2 16,2 4 14 fused\n13,2 16,2 4 - quire\n")
    return path


def sweep(path, configs_file, extra=""):
    return "sweep --configs {} --output {} --n_vectors 100 --n_terms 4 {}".format(
        configs_file, path, extra
    )


def test_sweep_deterministic(capsys, tmp_path, configs_file):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(sweep(first, configs_file, "--seed 3")) == 0
    assert cli.main(sweep(second, configs_file, "--seed 3")) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert lines[0] == "config,mode,n,es_in,n_out,N,wm,mean_rel_err,max_rel_err,match_rate,mean_dec_acc"
    assert len(lines) == 3


def test_sweep_seed_env(capsys, tmp_path, configs_file, monkeypatch):
    explicit, from_env = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(sweep(explicit, configs_file, "--seed 3")) == 0
    monkeypatch.setenv("PDPU_SEED", "3")
    assert cli.main(sweep(from_env, configs_file, "--seed 0")) == 0
    assert explicit.read_bytes() == from_env.read_bytes()


def test_sweep_extras(capsys, tmp_path, configs_file):
    report, histogram = tmp_path / "r.csv", tmp_path / "h.csv"
    extra = "--ieee_baselines --histogram {} --profile_samples 50 --profile_fmt 13,2".format(
        histogram
    )
    code, out = run(capsys, sweep(report, configs_file, extra))
    assert code == 0
    rows = report.read_text().splitlines()
    assert len(rows) == 5
    assert rows[3].startswith("FP16,ieee")
    assert histogram.read_text().splitlines()[0] == "bin_lo,bin_hi,count"
    assert "P(13,2) mean_dec_acc=" in out


def test_sweep_errors(capsys, tmp_path, configs_file):
    assert cli.main("sweep --output {} --n_terms 6 --n_vectors 10".format(tmp_path / "x.csv")) == 1
    assert cli.main("sweep --configs {} --output {}".format(tmp_path / "missing.txt", tmp_path / "x.csv")) == 1
    assert cli.main(sweep(tmp_path / "x.csv", configs_file, "--num_cpus 0")) == 1
    assert cli.main(sweep(tmp_path / "x.csv", configs_file, "--distribution uniform:0,1")) == 1


def test_fuzz_replay(capsys, tmp_path):
    lossy = tmp_path / "lossy.txt"
    arguments = "fuzz --fmt 13,2 --out_fmt 16,2 --wm 4 --reference fused --count 200 --allow_lossy"
    assert cli.main(arguments + " --output {}".format(lossy)) == 0
    count = len(read_dot_cases(lossy))
    code, out = run(capsys, "fuzz --replay {}".format(lossy))
    assert code == 2
    assert "cases={}".format(count) in out.splitlines()
    assert "divergences={}".format(count) in out.splitlines()
    assert cli.main("fuzz --replay {} --allow_lossy".format(lossy)) == 0

    cfg = PdpuConfig(P13, P16, 3, wm=10)
    va = parse_hex_list(P13, "0400,0f12,1a03")
    vb = parse_hex_list(P13, "0123,0800,1fff")
    acc = PositBits(P16, 0x4000)
    clean = tmp_path / "clean.txt"
    write_dot_cases(clean, [DotCase(cfg, tuple(va), tuple(vb), acc, pdpu_dot(cfg, va, vb, acc))])
    code, out = run(capsys, "fuzz --replay {}".format(clean))
    assert code == 0
    assert "divergences=0" in out.splitlines()


def test_fuzz_replay_errors(capsys, tmp_path):
    assert cli.main("fuzz --replay {}".format(tmp_path / "missing.txt")) == 1
    assert cli.main("fuzz --count 10") == 1


def test_sweep_ieee_profile(capsys, tmp_path, configs_file):
    report, histogram = tmp_path / "r.csv", tmp_path / "h.csv"
    extra = "--histogram {} --profile_samples 50 --profile_fmt fp16".format(histogram)
    code, out = run(capsys, sweep(report, configs_file, extra))
    assert code == 0
    lines = histogram.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count"
    assert sum(int(line.split(",")[2]) for line in lines[1:]) == 50
    assert "FP16 mean_dec_acc=" in out
    assert cli.main(sweep(report, configs_file, "--histogram {} --profile_fmt fp8".format(histogram))) == 1
