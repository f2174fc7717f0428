import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from rigidity import corpus
from rigidity.cli import RunConfig, build_parser, main, run
from rigidity.matrix_space import conformal_subspace, subspace_to_json
from rigidity.report import CheckRecord, Report, fit_order, polyline_svg, write_series_csv


class TestCheckRecord:
    def test_abs_mode(self):
        rec = CheckRecord("a", 1.0000004, 1.0, 1e-6)
        assert rec.passed
        assert not CheckRecord("b", 1.01, 1.0, 1e-6).passed

    def test_le_ge_modes(self):
        assert CheckRecord("c", 0.5, 1.0, 0.0, "le").passed
        assert CheckRecord("d", 2.0, 1.8, 0.0, "ge").passed
        assert not CheckRecord("e", 1.5, 1.8, 0.0, "ge").passed

    def test_contradictory_flag_rejected(self):
        with pytest.raises(ValueError):
            CheckRecord("f", 5.0, 1.0, 1e-6, "abs", "closed-form", passed=True)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            CheckRecord("g", 1.0, 1.0, 0.0, "between")


class TestFitOrder:
    def test_second_order_sequence(self):
        errs = 3.0 * 0.25 ** np.arange(4)  # exact factor 4 per halving
        assert abs(fit_order(errs) - 2.0) < 1e-12

    def test_exact_reproduction_is_infinite_order(self):
        assert fit_order([0.0, 0.0]) == np.inf

    def test_needs_two_levels(self):
        with pytest.raises(ValueError):
            fit_order([1.0])


class TestWriters:
    def test_series_csv(self, tmp_path):
        path = tmp_path / "series.csv"
        write_series_csv(path, ["level", "value"], [(1, 0.5), (2, 0.25)])
        lines = path.read_text().splitlines()
        assert lines[0] == "level,value"
        assert lines[1].startswith("1,0.5")

    def test_polyline_svg(self, tmp_path):
        path = tmp_path / "plot.svg"
        polyline_svg(path, "test plot", [("err", [1, 2, 3], [0.1, 0.025, 0.006])],
                     xlabel="level", ylabel="error")
        text = path.read_text()
        assert text.startswith("<svg") and "<polyline" in text and "</svg>" in text

    def test_svg_drops_nonpositive_on_log_axis(self, tmp_path):
        path = tmp_path / "plot.svg"
        polyline_svg(path, "t", [("e", [1, 2, 3], [0.1, 0.0, 0.01])], logy=True)
        assert "<polyline" in path.read_text()


class TestRunConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RunConfig(command="bogus")
        with pytest.raises(ValueError):
            RunConfig(command="weyl", tol=0.0)
        with pytest.raises(ValueError):
            RunConfig(command="weyl", grid=4)

    def test_parser_defaults(self):
        args = build_parser().parse_args(["--command", "integrate"])
        assert args.tol == 1e-6 and args.grid == 65


class TestRun:
    def test_analyze_space_artifacts(self, tmp_path):
        rep = run(RunConfig(command="analyze-space", out=str(tmp_path)))
        assert rep.all_passed
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["passed"] is True
        names = {c["name"] for c in report["checks"]}
        assert "conformal-rank1-gap" in names
        cert = json.loads((tmp_path / "certificate.json").read_text())
        assert abs(cert["gap"] - 2 ** -0.5) < 1e-6
        tensor = json.loads((tmp_path / "tensor.json").read_text())
        assert abs(tensor["mu"] - 0.5) < 1e-6

    def test_analyze_space_from_file(self, tmp_path):
        space_file = tmp_path / "space.json"
        space_file.write_text(subspace_to_json(conformal_subspace()))
        rep = run(RunConfig(command="analyze-space", space=str(space_file),
                            out=str(tmp_path)))
        assert rep.all_passed
        # user-supplied spaces get identity checks but no closed-form pin
        assert all(r.name != "conformal-rank1-gap" for r in rep.records)

    def test_integrate_writes_series_and_plot(self, tmp_path):
        rep = run(RunConfig(command="integrate", corpus="two_x", out=str(tmp_path)))
        assert rep.all_passed
        assert (tmp_path / "integrate_two_x.csv").exists()
        assert (tmp_path / "integrate_two_x.svg").exists()
        payload = json.loads((tmp_path / "integrate_two_x.json").read_text())
        assert set(payload) == {"value", "levels", "absolute_sum_history", "converged"}

    def test_unknown_corpus_key(self, tmp_path):
        with pytest.raises(ValueError):
            run(RunConfig(command="integrate", corpus="nope", out=str(tmp_path)))

    def test_report_deterministic_except_wall_time(self, tmp_path):
        cfg_a = RunConfig(command="analyze-space", out=str(tmp_path / "a"))
        cfg_b = RunConfig(command="analyze-space", out=str(tmp_path / "b"))
        run(cfg_a)
        run(cfg_b)
        strip = lambda text: re.sub(r'"wall_time_s": [^\n]*', '"wall_time_s": X', text)
        text_a = (tmp_path / "a" / "report.json").read_text()
        text_b = (tmp_path / "b" / "report.json").read_text()
        assert strip(text_a) == strip(text_b)
        assert text_a != strip(text_a)  # wall time really is in the file

    def test_settings_hash_ignores_wall_time(self, tmp_path):
        rep1 = run(RunConfig(command="weyl", grid=17, out=str(tmp_path)))
        rep2 = run(RunConfig(command="weyl", grid=17, out=str(tmp_path)))
        assert rep1.settings_hash == rep2.settings_hash


class TestMain:
    def test_exit_zero_on_pass(self, tmp_path, capsys):
        code = main(["--command", "analyze-space", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "all passed" in out

    def test_exit_two_on_bad_input(self, tmp_path, capsys):
        code = main(["--command", "analyze-space", "--space",
                     str(tmp_path / "missing.json"), "--out", str(tmp_path)])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_exit_one_on_failed_check(self, tmp_path, capsys, monkeypatch):
        # a corpus entry whose declared exact value is wrong must fail the run
        bogus = dict(corpus.GAUGE_INTEGRANDS["two_x"])
        bogus["exact"] = 0.9
        monkeypatch.setitem(corpus.GAUGE_INTEGRANDS, "bogus_twox", bogus)
        code = main(["--command", "integrate", "--corpus", "bogus_twox",
                     "--out", str(tmp_path)])
        assert code == 1
        assert "FAILURES PRESENT" in capsys.readouterr().out

    def test_seed_env_is_echoed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RIGIDITY_SEED", "7")
        code = main(["--command", "analyze-space", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["settings"]["seed"] == 7

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "rigidity.cli", "--command", "weyl",
             "--grid", "17", "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr


class TestCorpusCatalogs:
    def test_names_are_sorted_and_nonempty(self):
        assert corpus.grid_field_names() == sorted(corpus.GRID_FIELDS)
        assert "x2sin_inv_x2" in corpus.gauge_integrand_names()
        assert corpus.divergence_field_names() == sorted(corpus.DIVERGENCE_FIELDS)

    def test_holomorphic_jacobians_match_finite_differences(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(-0.9, 0.9, 50)
        ys = rng.uniform(-0.9, 0.9, 50)
        eps = 1e-6
        for name in ("z2", "z3", "expz", "sinz"):
            field = corpus.GRID_FIELDS[name]
            jac = field.jacobian(xs, ys)
            fd_x = (field.components(xs + eps, ys) - field.components(xs - eps, ys)) / (2 * eps)
            fd_y = (field.components(xs, ys + eps) - field.components(xs, ys - eps)) / (2 * eps)
            assert np.allclose(jac[..., 0], fd_x, atol=1e-7)
            assert np.allclose(jac[..., 1], fd_y, atol=1e-7)

    def test_wild_integrand_is_the_derivative_of_its_primitive(self):
        ent = corpus.GAUGE_INTEGRANDS["x2sin_inv_x2"]
        xs = np.linspace(0.05, 1.0, 200)
        eps = 1e-7
        fd = (ent["primitive"](xs + eps) - ent["primitive"](xs - eps)) / (2 * eps)
        assert np.allclose(ent["f"](xs), fd, atol=1e-4)
        assert ent["f"](np.array([0.0]))[0] == 0.0


class TestFullSuite:
    def test_parallel_matches_sequential(self, tmp_path):
        # grid 33 is the coarsest ladder at which every suite resolves its
        # reproducibility tolerances
        seq = run(RunConfig(command="full-suite", grid=33, tol=1e-5,
                            out=str(tmp_path / "seq")))
        par = run(RunConfig(command="full-suite", grid=33, tol=1e-5,
                            out=str(tmp_path / "par"), parallel=True))
        assert seq.all_passed and par.all_passed
        seq_checks = [r.to_dict() for r in seq.records]
        par_checks = [r.to_dict() for r in par.records]
        assert seq_checks == par_checks
