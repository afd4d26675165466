import csv
import io

import pytest

from opbernstein import cli
from opbernstein.ensembles import analyze_ensemble, random_ensemble, save_ensemble
from opbernstein import hermitian as H


def run(argv, tmp_path=None):
    out, err = io.StringIO(), io.StringIO()
    args = cli.build_parser().parse_args(cli._glue_grids(argv))
    code = cli.run(args, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_coupling_exact_csv():
    code, out, err = run(["coupling-verify", "--c-size", "3", "--m", "2", "--exact"])
    assert code == 0
    r = rows(out)
    assert r[0] == ["outcome", "probability", "expected_probability", "abs_error"]
    assert len(r) == 10
    assert all(float(x[3]) == 0 for x in r[1:])
    assert "max abs_error = 0" in err


def test_coupling_guard_names_flag():
    code, _, err = run(["coupling-verify", "--c-size", "9", "--m", "3", "--exact"])
    assert code == 2 and "--exact" in err


def test_coupling_m_too_large():
    code, _, err = run(["coupling-verify", "--c-size", "3", "--m", "4", "--exact"])
    assert code == 2 and "--m" in err


def test_coupling_monte_carlo():
    code, out, err = run(["coupling-verify", "--c-size", "4", "--m", "2", "--trials", "20000", "--seed", "3"])
    assert code == 0
    r = rows(out)
    assert len(r) == 17
    assert sum(float(x[1]) for x in r[1:]) == pytest.approx(1.0)
    assert "chi-square" in err


def test_tail_bound_t_zero_is_2n():
    code, out, _ = run(["tail-bound", "--random-ensemble", "3,6,1", "--m", "3", "--t-grid", "0:2:3", "--trials", "500"])
    assert code == 0
    r = rows(out)
    assert r[0][:5] == ["t", "empirical_tail", "wilson_upper", "theoretical_bound", "mode"]
    zero_rows = [x for x in r[1:] if float(x[0]) == 0]
    assert {x[4] for x in zero_rows} == {"iid", "noreplace"}
    assert all(float(x[3]) == 6 for x in zero_rows)


def test_tail_bound_file_input(tmp_path):
    path = tmp_path / "e.txt"
    save_ensemble(random_ensemble(2, 5, 0), path)
    out_csv = tmp_path / "out.csv"
    code, out, _ = run(["tail-bound", "--ensemble", str(path), "--m", "2", "--mode", "iid",
                        "--t-grid", "0.5:1:2", "--trials", "200", "--output", str(out_csv)])
    assert code == 0
    assert out.startswith("tail-bound:")
    assert len(rows(out_csv.read_text())) == 3


def test_tail_bound_uncentered_file(tmp_path):
    path = tmp_path / "e.txt"
    save_ensemble(analyze_ensemble([H.identity(2), H.zeros(2)]), path)
    base = ["tail-bound", "--ensemble", str(path), "--m", "2", "--t-grid", "0:1:2", "--trials", "50"]
    code, _, err = run(base)
    assert code == 2 and "--center" in err
    assert run(base + ["--center"])[0] == 0


def test_tail_bound_bad_inputs(tmp_path):
    code, _, err = run(["tail-bound", "--ensemble", str(tmp_path / "missing"), "--m", "2", "--t-grid", "0:1:2"])
    assert code == 2 and "missing" in err
    code, _, err = run(["tail-bound", "--random-ensemble", "2,4,0", "--m", "5", "--t-grid", "0:1:2"])
    assert code == 2 and "--m" in err
    code, _, err = run(["tail-bound", "--random-ensemble", "2,4,0", "--m", "2", "--t-grid", "0:1:2", "--trials", "0"])
    assert code == 2 and "--trials" in err
    code, _, err = run(["tail-bound", "--random-ensemble", "2,4,0", "--m", "2", "--t-grid", "0:1:2", "--c", "0.001"])
    assert code == 2 and "--c" in err


def test_bad_grid_is_usage_error():
    with pytest.raises(SystemExit):
        cli.main(["tail-bound", "--random-ensemble", "2,4,0", "--m", "2", "--t-grid", "0:1"])


def test_unwritable_output(tmp_path):
    code, _, err = run(["coupling-verify", "--c-size", "2", "--m", "1", "--exact",
                        "--output", str(tmp_path / "no" / "such" / "dir.csv")])
    assert code == 1 and "dir.csv" in err


def test_mgf_compare_columns():
    code, out, _ = run(["mgf-compare", "--random-ensemble", "2,4,2", "--m", "2", "--scale-grid", "-1:1:5", "--trials", "1000"])
    assert code == 0
    r = rows(out)
    assert r[0] == ["scale", "mgf_iid", "mgf_noreplace", "se_iid", "se_noreplace", "exact_iid", "exact_noreplace"]
    for x in r[1:]:
        assert float(x[6]) <= float(x[5]) + 1e-10
    mid = r[3]
    assert float(mid[0]) == 0 and float(mid[1]) == 2 and float(mid[3]) == 0


def test_mgf_compare_guard_leaves_exact_empty():
    code, out, _ = run(["mgf-compare", "--random-ensemble", "1,40,2", "--m", "6", "--scale-grid", "0.5:0.5:1", "--trials", "100"])
    assert code == 0
    assert rows(out)[1][5:] == ["", ""]


def test_mgf_overflow_names_flag():
    code, _, err = run(["mgf-compare", "--random-ensemble", "2,4,2", "--m", "2", "--scale-grid", "1000:1000:1", "--trials", "10"])
    assert code == 2 and "--scale-grid" in err


def test_sampling_operator_csv():
    code, out, err = run(["sampling-operator", "--n", "3", "--m", "9", "--mode", "noreplace", "--trials", "7"])
    assert code == 0
    r = rows(out)
    assert r[0] == ["trial", "norm", "max_multiplicity", "is_projection"]
    assert [x[0] for x in r[1:]] == [str(i) for i in range(1, 8)]
    assert all(float(x[1]) == 1 and x[3] == "true" for x in r[1:])


def test_sampling_operator_bad_m():
    code, _, err = run(["sampling-operator", "--n", "2", "--m", "5", "--mode", "noreplace"])
    assert code == 2 and "--m" in err


def test_default_seed_reproducible():
    a = run(["sampling-operator", "--n", "3", "--m", "9", "--trials", "20"])
    b = run(["sampling-operator", "--n", "3", "--m", "9", "--trials", "20", "--seed", "0"])
    assert a == b


def test_number_format():
    assert cli.fmt(0.1) == "1.0000000000000001e-01"
    assert float(cli.fmt(1 / 3)) == 1 / 3
    assert cli.fmt(True) == "true" and cli.fmt(3) == "3" and cli.fmt(None) == ""
