import math

import pytest
import ujson

from harmonic_product.verify.run_verify import app


def invoke(runner, *args):
    return runner.invoke(app, [str(arg) for arg in args])


def rows_of(result):
    return ujson.loads(result.stdout)


class TestIdentities:
    def test_theorem2(self, runner):
        result = invoke(runner, "identities", "--theorem", "2", "--k", "1..100")
        assert result.exit_code == 0, result.output
        rows = rows_of(result)
        assert [row["k"] for row in rows] == list(range(1, 101))
        assert all(row["verified"] for row in rows)

    def test_theorem3(self, runner):
        result = invoke(runner, "identities", "--theorem", "3", "--k", "1..10")
        assert result.exit_code == 0, result.output
        assert rows_of(result)[-1]["lhs"] == "-20/21"

    def test_k_below_floor_is_a_usage_error(self, runner):
        assert invoke(runner, "identities", "--theorem", "2", "--k", "0..5").exit_code == 2
        assert invoke(runner, "identities", "--theorem", "even", "--k", "0..1").exit_code == 0

    @pytest.mark.parametrize(
        "theorem, k, golden",
        [("2", "1..3", "identities_thm2_k1-3.json"), ("even", "0..1", "identities_even_k0-1.json")],
    )
    def test_json_golden(self, runner, data_dir, theorem, k, golden):
        result = invoke(runner, "identities", "--theorem", theorem, "--k", k)
        assert result.exit_code == 0, result.output
        assert rows_of(result) == ujson.loads((data_dir / golden).read_text())

    @pytest.mark.parametrize(
        "theorem, header",
        [("2", "identities_header.csv"), ("odd", "identities_exact_header.csv")],
    )
    def test_csv_header(self, runner, data_dir, theorem, header):
        result = invoke(runner, "identities", "--theorem", theorem, "--k", "1..3", "--format", "csv")
        assert result.exit_code == 0, result.output
        lines = result.stdout.splitlines()
        assert lines[0] == (data_dir / header).read_text().strip()
        assert len(lines) == 4

    def test_text_format(self, runner):
        result = invoke(runner, "identities", "--theorem", "2", "--k", "1..3", "--format", "text")
        assert result.exit_code == 0, result.output
        assert "-1/6" in result.stdout

    def test_json_round_trips_byte_for_byte(self, runner):
        result = invoke(runner, "identities", "--theorem", "odd", "--k", "1..4")
        assert ujson.dumps(rows_of(result), sort_keys=True, indent=2) + "\n" == result.stdout

    def test_parallelism_does_not_change_the_report(self, runner):
        serial = invoke(runner, "identities", "--theorem", "3", "--k", "1..6", "--parallelism", "1")
        parallel = invoke(runner, "identities", "--theorem", "3", "--k", "1..6", "--parallelism", "2")
        assert serial.exit_code == parallel.exit_code == 0
        assert serial.stdout == parallel.stdout

    def test_timings(self, runner):
        plain = rows_of(invoke(runner, "identities", "--k", "1..3"))
        timed = rows_of(invoke(runner, "identities", "--k", "1..3", "--timings"))
        assert all(row["ms"] is None for row in plain)
        assert all(row["ms"] >= 0 for row in timed)

    def test_output_file(self, runner, tmp_path):
        output = tmp_path / "reports" / "thm2.json"
        result = invoke(runner, "identities", "--k", "1..3", "--output", output)
        assert result.exit_code == 0, result.output
        assert result.stdout == ""
        assert [row["k"] for row in ujson.loads(output.read_text())] == [1, 2, 3]

    def test_config_file_and_environment(self, runner, tmp_path, monkeypatch):
        config = tmp_path / "run.cfg"
        config.write_text("theorem = 3\nk_range = 1..4\n")
        monkeypatch.setenv("HARMONIC_PRODUCT_PARALLELISM", "2")
        result = invoke(runner, "identities", "--config", config)
        assert result.exit_code == 0, result.output
        rows = rows_of(result)
        assert [row["theorem"] for row in rows] == ["thm3"] * 4

    @pytest.mark.parametrize(
        "args",
        [
            ("--format", "xml"),
            ("--theorem", "5"),
            ("--k", "3..1"),
            ("--log-level", "LOUD"),
            ("--parallelism", "0"),
        ],
    )
    def test_invalid_arguments(self, runner, args):
        assert invoke(runner, "identities", *args).exit_code == 2

    def test_invalid_environment(self, runner, monkeypatch):
        monkeypatch.setenv("HARMONIC_PRODUCT_PARALLELISM", "0")
        assert invoke(runner, "identities", "--k", "1..3").exit_code == 2

    def test_log_file(self, runner, tmp_path):
        log_file = tmp_path / "run.log"
        result = invoke(runner, "identities", "--k", "1..2", "--log-level", "DEBUG", "--log-file", log_file)
        assert result.exit_code == 0, result.output
        assert "harmonic-product version" in log_file.read_text()


class TestAHat:
    def test_formula(self, runner):
        result = invoke(runner, "ahat", "--n", "3..5", "--method", "formula")
        assert result.exit_code == 0, result.output
        rows = rows_of(result)
        assert [row["n"] for row in rows] == [3, 4, 5]
        assert all(row["abs_dev"] <= 1e-7 for row in rows)

    def test_default_method_is_direct_in_low_dimensions(self, runner):
        result = invoke(runner, "ahat", "--n", "1..2")
        assert result.exit_code == 0, result.output
        assert [row["method"] for row in rows_of(result)] == ["direct", "direct"]

    @pytest.mark.parametrize("method, n", [("formula", "2"), ("direct", "1..3"), ("recursion", "1..3")])
    def test_unsupported_dimension_is_a_usage_error(self, runner, method, n):
        assert invoke(runner, "ahat", "--n", n, "--method", method).exit_code == 2

    def test_closed_form_is_exact(self, runner):
        result = invoke(runner, "ahat", "--n", "1..12", "--method", "closed")
        assert result.exit_code == 0, result.output
        rows = rows_of(result)
        assert all(row["abs_dev"] == 0.0 for row in rows)
        assert all((row["value"]["q"], row["value"]["e"]) == ("1/2", -2) for row in rows)
        assert all(row["value"]["float"] == pytest.approx(1 / (2 * math.pi), rel=1e-15) for row in rows)

    @pytest.mark.parametrize(
        "method, header",
        [("formula", "ahat_header.csv"), ("closed", "ahat_closed_header.csv")],
    )
    def test_csv_header(self, runner, data_dir, method, header):
        result = invoke(runner, "ahat", "--n", "3", "--method", method, "--format", "csv")
        assert result.exit_code == 0, result.output
        assert result.stdout.splitlines()[0] == (data_dir / header).read_text().strip()

    def test_parallelism_does_not_change_the_report(self, runner):
        args = ["ahat", "--n", "3..6", "--method", "formula", "--tol", "1e-8"]
        serial = invoke(runner, *args, "--parallelism", "1")
        parallel = invoke(runner, *args, "--parallelism", "8")
        assert serial.exit_code == parallel.exit_code == 0
        assert serial.stdout == parallel.stdout

    def test_unconverged_quadrature_fails(self, runner, monkeypatch):
        monkeypatch.setenv("HARMONIC_PRODUCT_MAX_EVALUATIONS", "15")
        result = invoke(runner, "ahat", "--n", "3", "--tol", "1e-12")
        assert result.exit_code == 1
        assert rows_of(result)[0]["converged"] is False


class TestProduct:
    def test_constant_at_single_rho(self, runner):
        result = invoke(runner, "product", "--n", "2", "--phi", "const:1", "--rho", "1e-2", "--tol", "1e-7")
        assert result.exit_code == 0, result.output
        (row,) = rows_of(result)
        assert row["normalized"] == pytest.approx(1.0, abs=1e-5)
        assert row["c_minus1_fit"] is None
        assert row["noncompact"] is True
        assert row["gap"] <= 1e-5

    def test_bump(self, runner):
        args = ["--n", "2", "--phi", "bump:1", "--rho", "1e-2", "--tol", "1e-7", "--rtol", "1e-2"]
        result = invoke(runner, "product", *args)
        assert result.exit_code == 0, result.output
        (row,) = rows_of(result)
        assert row["noncompact"] is False
        assert row["gap"] < 1e-2

    def test_csv_header(self, runner, data_dir):
        result = invoke(
            runner, "product", "--n", "1", "--phi", "const:1", "--rho", "1e-2", "--tol", "1e-7", "--format", "csv"
        )
        assert result.exit_code == 0, result.output
        assert result.stdout.splitlines()[0] == (data_dir / "product_header.csv").read_text().strip()

    def test_dimension_from_environment(self, runner, monkeypatch):
        monkeypatch.setenv("HARMONIC_PRODUCT_DIMENSION", "1")
        result = invoke(runner, "product", "--phi", "const:1", "--rho", "1e-2", "--tol", "1e-7")
        assert result.exit_code == 0, result.output
        assert [row["n"] for row in rows_of(result)] == [1]

    def test_dimension_from_config_file(self, runner, tmp_path, monkeypatch):
        config = tmp_path / "product.cfg"
        config.write_text("dimension = 2\nphi = const:1\nrho = 1e-2\n")
        monkeypatch.setenv("HARMONIC_PRODUCT_DIMENSION", "1")
        result = invoke(runner, "product", "--config", config, "--tol", "1e-7")
        assert result.exit_code == 0, result.output
        # the environment outranks the file, the flag outranks both
        assert [row["n"] for row in rows_of(result)] == [1]
        result = invoke(runner, "product", "--config", config, "--tol", "1e-7", "--n", "2")
        assert [row["n"] for row in rows_of(result)] == [2]

    def test_invalid_dimension_in_environment(self, runner, monkeypatch):
        monkeypatch.setenv("HARMONIC_PRODUCT_DIMENSION", "0")
        assert invoke(runner, "product", "--phi", "const:1", "--rho", "1e-2").exit_code == 2

    def test_wrong_expectation_fails(self, runner):
        # a tolerance no finite rho can meet
        args = ["--n", "2", "--phi", "bump:1", "--rho", "1e-1", "--tol", "1e-7", "--rtol", "0", "--atol", "0"]
        result = invoke(runner, "product", *args)
        assert result.exit_code == 1

    @pytest.mark.parametrize(
        "args",
        [
            ("--n", "0"),
            ("--phi", "cosine:1"),
            ("--n", "3", "--phi", "shifted:0/1/0:1"),
            ("--ladder", "1e-2,1e-1"),
            ("--rho", "0"),
        ],
    )
    def test_invalid_arguments(self, runner, args):
        assert invoke(runner, "product", *args).exit_code == 2

    @pytest.mark.slow
    def test_ladder_recovers_pole(self, runner):
        result = invoke(runner, "product", "--n", "3", "--phi", "gaussian:1", "--tol", "1e-9", "--parallelism", "2")
        assert result.exit_code == 0, result.output
        rows = rows_of(result)
        assert len(rows) == 6
        assert rows[0]["c_minus1_fit"] == pytest.approx(1 / (2 * math.pi), rel=1e-3)
        assert rows[-1]["gap"] < rows[0]["gap"]


@pytest.mark.slow
def test_ahat_formula_through_n8(runner):
    result = invoke(runner, "ahat", "--n", "3..8", "--method", "formula", "--tol", "1e-8")
    assert result.exit_code == 0, result.output


@pytest.mark.slow
def test_bump_in_four_dimensions(runner):
    args = ["--n", "4", "--phi", "bump:1", "--rho", "1e-2", "--tol", "1e-7", "--rtol", "1e-2"]
    result = invoke(runner, "product", *args)
    assert result.exit_code == 0, result.output
    (row,) = rows_of(result)
    assert row["gap"] < 1e-2


@pytest.mark.slow
def test_reports_do_not_depend_on_parallelism(runner):
    args = ["product", "--n", "2", "--phi", "gaussian:1", "--ladder", "1e-1,5e-2,2.5e-2,1.25e-2", "--tol", "1e-8"]
    args += ["--rtol", "1e-2"]
    serial = invoke(runner, *args, "--parallelism", "1")
    parallel = invoke(runner, *args, "--parallelism", "8")
    assert serial.exit_code == parallel.exit_code == 0
    assert serial.stdout == parallel.stdout
