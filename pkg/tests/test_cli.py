import numpy as np
import pytest

from decoevo import cli
from decoevo.problems import _registry
from decoevo.model import ProblemDefinition

CONFIG = """
[experiment]
runs = 2
base_seed = 3
output_dir = {out}

[defaults]
budget = 60
population = 10
cr = 1.0
f = 0.5

[problem:bnh]
"""


def _write(tmp_path, text, name="cli.cfg", out=None):
    out = out or (tmp_path / "results")
    path = tmp_path / name
    path.write_text(text.format(out=out))
    return path, out


def test_list_problems(capsys):
    assert cli.main(["list-problems"]) == 0
    out = capsys.readouterr().out.split()
    assert out == ["bnh", "eq_ring", "srn", "tnk"]


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as info:
        cli.main(["no-such-command"])
    assert info.value.code == 1


def test_run_and_compare_and_export(tmp_path, capsys):
    config, out = _write(tmp_path, CONFIG)
    assert cli.main(["run", str(config)]) == 0
    assert (out / "bnh" / "aggregate.txt").exists()

    assert cli.main(["compare", str(out / "bnh"), str(out / "bnh"),
                     "--metric", "igd"]) == 0
    rendered = capsys.readouterr().out
    assert "+/-/= :" in rendered

    record = sorted((out / "bnh").glob("run_*.record"))[0]
    csv_out = tmp_path / "front.csv"
    assert cli.main(["export-front", str(record), str(csv_out)]) == 0
    assert csv_out.read_text().startswith("f1,f2")


def test_run_with_bad_config_exits_one(tmp_path, capsys):
    bad, _ = _write(tmp_path, CONFIG.replace("cr = 1.0", "cr = 7"), name="bad.cfg")
    assert cli.main(["run", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_run_failure_exits_two(tmp_path, capsys):
    def fragile():
        def evaluator(x):
            if abs(x[0] - 0.5) > 1e-9:  # only the registration midpoint works
                raise RuntimeError("evaluator exploded")
            return np.array([x[0], 1 - x[0]]), np.empty(0)

        return ProblemDefinition(name="fragile", n_var=1, n_obj=2, n_ieq=0, n_con=0,
                                 lower=np.zeros(1), upper=np.ones(1),
                                 evaluator=evaluator)

    from decoevo.problems import register_problem
    register_problem("fragile", fragile)
    try:
        config, out = _write(tmp_path, CONFIG.replace("problem:bnh", "problem:fragile"),
                             name="fragile.cfg", out=tmp_path / "fragile_out")
        assert cli.main(["run", str(config)]) == 2
        assert list((out / "fragile").glob("run_*.error"))
    finally:
        _registry.pop("fragile", None)


def test_compare_incomplete_exits_three(tmp_path, capsys):
    config, out = _write(tmp_path, CONFIG, name="c2.cfg", out=tmp_path / "r2")
    assert cli.main(["run", str(config)]) == 0
    sorted((out / "bnh").glob("run_*.record"))[0].unlink()
    from decoevo.harness import aggregate_cell
    aggregate_cell(out / "bnh", expected_runs=2)
    assert cli.main(["compare", str(out / "bnh"), str(out / "bnh")]) == 3


def test_compare_missing_path_exits_one(tmp_path, capsys):
    assert cli.main(["compare", str(tmp_path / "nope_a"), str(tmp_path / "nope_b")]) == 1
