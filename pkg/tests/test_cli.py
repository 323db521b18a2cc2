import csv
import io

import pytest

from crn_secrecy import __version__
from crn_secrecy.__main__ import EXIT_OK, EXIT_USAGE, build_parser, main
from sopkit.runner import CSV_COLUMNS

POINT = """
preset = table1
L_R = 1
L_D = 1
L_E = 1
gbar_I_dB = 20
gbar_S_dB = 20
gbar_SJ_dB = 20
gbar_R_dB = 20
Rs = 1
M = 2
"""


@pytest.fixture
def point_file(tmp_path):
    path = tmp_path / "point.env"
    path.write_text(POINT, encoding="utf-8")
    return path


def _csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_point_writes_csv_to_stdout(point_file, capsys):
    assert main(["point", str(point_file), "--methods", "exact"]) == EXIT_OK
    rows = _csv(capsys.readouterr().out)
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 2
    assert rows[1][2:4] == ["exact", "jammer"]
    assert 0.0 < float(rows[1][4]) < 1.0


def test_point_with_output_and_dump(point_file, tmp_path, capsys):
    out = tmp_path / "point.csv"
    assert main(["point", str(point_file), "--out", str(out), "--dump-config", "-", "--seed", "5"]) == EXIT_OK
    dumped = capsys.readouterr().out
    assert "seed = 5" in dumped
    assert "N = 4" in dumped
    assert len(_csv(out.read_text(encoding="utf-8"))) == 3


def test_sweep_command(tmp_path, capsys):
    path = tmp_path / "sweep.env"
    path.write_text(POINT + "sweep_axis = Rs\nsweep_values = 0.5, 1, 2\nscenario = no_jammer\n", encoding="utf-8")
    assert main(["sweep", str(path), "--methods", "exact"]) == EXIT_OK
    rows = _csv(capsys.readouterr().out)[1:]
    assert [r[1] for r in rows] == ["0.5", "1", "2"]
    assert all(r[0] == "Rs" and r[3] == "no_jammer" for r in rows)


def test_config_errors_exit_with_usage_code(tmp_path):
    path = tmp_path / "bad.env"
    path.write_text(POINT.replace("Rs = 1", "Rs = fast"), encoding="utf-8")
    assert main(["point", str(path)]) == EXIT_USAGE
    assert main(["point", str(tmp_path / "missing.env")]) == EXIT_USAGE
    assert main(["sweep", str(path.with_name("none.env"))]) == EXIT_USAGE


def test_sweep_without_axis_is_a_usage_error(point_file):
    assert main(["sweep", str(point_file), "--methods", "exact"]) == EXIT_USAGE


def test_unknown_figure(tmp_path):
    assert main(["figure", "9", "--out", str(tmp_path)]) == EXIT_USAGE


def test_parser_rejects_bad_arguments(capsys):
    with pytest.raises(SystemExit) as info:
        main(["point"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main(["point", "x.env", "--methods", "exact,guess"])
    assert info.value.code == EXIT_USAGE
    assert "unknown method" in capsys.readouterr().err


def test_parser_accepts_method_aliases():
    args = build_parser().parse_args(["sweep", "p.env", "--methods", "asym,monte_carlo", "--workers", "3"])
    assert [m.value for m in args.methods] == ["asymptotic", "mc"]
    assert args.workers == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_help_lists_parameter_keys(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    assert "table1" in out
    assert "lambda_<link>" in out


@pytest.mark.slow
def test_selftest_passes(capsys):
    code = main(["selftest"])
    out = capsys.readouterr().out
    assert code == EXIT_OK, out
    assert out.count("PASS") == 5
