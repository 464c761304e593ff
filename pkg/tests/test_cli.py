import textwrap

import pytest

from threadwire.cli import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_VERIFICATION,
    run,
)


def write_config(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(textwrap.dedent(body))
    return str(p)


RADO_CFG = """\
    [run]
    task = rado
    seed = 0

    [rado]
    degree = 3
    rings = 64
    """

ISO_CFG = """\
    [run]
    task = iso-check
    seed = 0

    [iso]
    Y = 0.9
    m = 0.5
    count = 60
    intervals = 200
    """

WOBBLE_CURVE_CFG = """\
    [run]
    task = curve-check
    seed = 0

    [wire]
    family = wobble
    a = 2.0
    b = 1.0
    amp = 0.3

    [curve-check]
    epsilons = 0.2,0.1
    """


class TestConfigErrors:
    def test_missing_file(self, tmp_path):
        out = tmp_path / "out"
        assert run(["rado", "--config", str(tmp_path / "nope.ini"),
                    "--out", str(out)]) == EXIT_CONFIG
        assert not out.exists()

    def test_malformed_config_no_partial_files(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("this is not [[[ valid ini\n")
        out = tmp_path / "out"
        assert run(["solve", "--config", str(cfg),
                    "--out", str(out)]) == EXIT_CONFIG
        assert not out.exists()

    def test_task_mismatch(self, tmp_path):
        cfg = write_config(tmp_path, "r.ini", RADO_CFG)
        assert run(["solve", "--config", cfg,
                    "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_missing_required_section(self, tmp_path):
        cfg = write_config(tmp_path, "r.ini", "[run]\ntask = rado\n")
        assert run(["rado", "--config", cfg,
                    "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_bad_tol_override(self, tmp_path):
        cfg = write_config(tmp_path, "r.ini", RADO_CFG)
        assert run(["rado", "--config", cfg, "--out", str(tmp_path / "o"),
                    "--tol-override", "garbage"]) == EXIT_CONFIG

    def test_unknown_task_name(self, tmp_path):
        cfg = write_config(tmp_path, "r.ini", RADO_CFG)
        assert run(["frobnicate", "--config", cfg]) == EXIT_CONFIG


class TestRado:
    def test_degree3_row(self, tmp_path):
        cfg = write_config(tmp_path, "r.ini", RADO_CFG)
        out = tmp_path / "out"
        assert run(["rado", "--config", cfg, "--out", str(out)]) == EXIT_OK
        lines = (out / "rado.csv").read_text().splitlines()
        assert lines[0].startswith("# config_digest=")
        assert lines[1] == "data,k,m,sign_changes,holds,exact"
        assert lines[2] == "re(z^3),3,2,6,true,true"


class TestIsoCheck:
    def test_fuzz_clean(self, tmp_path):
        cfg = write_config(tmp_path, "i.ini", ISO_CFG)
        out = tmp_path / "out"
        assert run(["iso-check", "--config", cfg, "--out", str(out)]) == EXIT_OK
        text = (out / "iso.csv").read_text()
        assert "# violations=0" in text
        assert "# interval_violations=0" in text
        # header + digest + 60 region rows + 2 footer lines
        assert len(text.splitlines()) == 64


class TestLevelset:
    def test_degree2_graph(self, tmp_path):
        cfg = write_config(tmp_path, "l.ini", """\
            [run]
            task = levelset
            seed = 0

            [levelset]
            degree = 2
            levels = 0.0
            rings = 32
            sectors = 64
            dump_polylines = true
            """)
        out = tmp_path / "out"
        assert run(["levelset", "--config", cfg, "--out", str(out)]) == EXIT_OK
        row = (out / "levelset.csv").read_text().splitlines()[2].split(",")
        # one component, 5 nodes, 4 edges, no cycles, interior valence 4
        assert row[2:7] == ["1", "5", "4", "0", "false"]
        assert row[7] == "4"
        assert (out / "levelset_polylines.csv").exists()


class TestCurveCheck:
    def test_wobble_passes(self, tmp_path):
        cfg = write_config(tmp_path, "c.ini", WOBBLE_CURVE_CFG)
        out = tmp_path / "out"
        assert run(["curve-check", "--config", cfg,
                    "--out", str(out)]) == EXIT_OK
        text = (out / "curve.csv").read_text()
        assert "genericity_passed=true" in text
        assert (out / "curve_samples.csv").read_text().splitlines()[0] \
            == "s,x,y,z,kappa,torsion"

    def test_ellipse_fails_genericity(self, tmp_path):
        # two symmetric curvature maxima -> genericity verdict false -> exit 4
        cfg = write_config(tmp_path, "c.ini", """\
            [run]
            task = curve-check
            seed = 0

            [wire]
            family = ellipse
            a = 2.0
            b = 1.0
            """)
        out = tmp_path / "out"
        assert run(["curve-check", "--config", cfg,
                    "--out", str(out)]) == EXIT_VERIFICATION
        assert "genericity_passed=false" in (out / "curve.csv").read_text()


SOLVE_CFG = """\
    [run]
    task = solve
    seed = 0

    [wire]
    family = ellipse
    a = 2.0
    b = 1.0

    [solve]
    lam = 0.02
    profile = hugging
    nx = 64
    rows = 8
    n_slices = 10
    dump_mesh = true
    """


@pytest.fixture(scope="module")
def solve_out(tmp_path_factory):
    base = tmp_path_factory.mktemp("solve")
    cfg = write_config(base, "s.ini", SOLVE_CFG)
    out = base / "out"
    code = run(["solve", "--config", cfg, "--out", str(out)])
    return code, out, cfg, base


class TestSolve:
    def test_success_and_verdicts(self, solve_out):
        code, out, _, _ = solve_out
        assert code == EXIT_OK
        lines = (out / "solve.csv").read_text().splitlines()
        header = lines[1].split(",")
        row = dict(zip(header, lines[2].split(",")))
        assert row["kappa_ok"] == "true"
        assert row["hull_ok"] == "true"
        assert row["slicewise_ok"] == "true"
        assert float(row["D"]) >= float(row["area"]) > 0

    def test_mesh_dump(self, solve_out):
        code, out, _, _ = solve_out
        text = (out / "mesh.txt").read_text()
        assert text.startswith("v ")
        assert "\nf " in text and "\nb lower " in text

    def test_determinism_byte_identical(self, solve_out):
        code, out, cfg, base = solve_out
        out2 = base / "out2"
        assert run(["solve", "--config", cfg, "--out", str(out2)]) == EXIT_OK
        assert (out / "solve.csv").read_bytes() \
            == (out2 / "solve.csv").read_bytes()

    def test_different_seed_different_digest(self, solve_out):
        code, out, cfg, base = solve_out
        out3 = base / "out3"
        assert run(["solve", "--config", cfg, "--out", str(out3),
                    "--seed", "1"]) == EXIT_OK
        line1 = (out / "solve.csv").read_text().splitlines()[0]
        line3 = (out3 / "solve.csv").read_text().splitlines()[0]
        assert line1 != line3

    def test_inadmissible_lam_numerical_failure(self, tmp_path):
        cfg = write_config(tmp_path, "s.ini",
                           SOLVE_CFG.replace("lam = 0.02", "lam = 50.0"))
        out = tmp_path / "out"
        assert run(["solve", "--config", cfg,
                    "--out", str(out)]) == EXIT_NUMERICAL
        assert not (out / "solve.csv").exists()

    def test_tol_override_forces_verification_failure(self, tmp_path):
        # shrink the near-wire slack far below the discretization error
        cfg = write_config(tmp_path, "s.ini", SOLVE_CFG)
        out = tmp_path / "out"
        assert run(["solve", "--config", cfg, "--out", str(out),
                    "--tol-override", "near_wire_slack=-0.99"]) \
            == EXIT_VERIFICATION
        row = (out / "solve.csv").read_text().splitlines()[2]
        assert "false" in row


class TestSweep:
    def test_two_point_sweep_sorted_with_footer(self, tmp_path):
        cfg = write_config(tmp_path, "sw.ini", """\
            [run]
            task = sweep
            seed = 0

            [wire]
            family = ellipse
            a = 2.0
            b = 1.0

            [sweep]
            lams = 0.02,0.01
            nx = 64
            rows = 8
            n_slices = 5
            """)
        out = tmp_path / "out"
        assert run(["sweep", "--config", cfg, "--out", str(out),
                    "--jobs", "2"]) == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[1].startswith("lam,D,area,")
        lams = [float(l.split(",")[0]) for l in lines[2:4]]
        assert lams == sorted(lams) == [0.01, 0.02]
        assert any(l.startswith("# slope_r_max=") for l in lines)
        assert any(l.startswith("# A_over_lam_smallest=") for l in lines)
