import json
import subprocess
import sys

import numpy as np
import pytest

from stablesde import __version__
from stablesde.cli import load_experiment, main, read_samples, select_rows
from stablesde.errors import ConfigError
from stablesde.sde_sim import read_dataset
from stablesde.stable_dist import sample_standard

QUICK_FIT = {"drift": {"epochs": 30}, "diffusion": {"epochs": 2}}


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture()
def ou_config(tmp_path):
    return _write(tmp_path / "ou.json", {"row": "a15_ou_add", "fit": QUICK_FIT})


def _manifest(out):
    return json.loads((out / "run_manifest.json").read_text())


def _artifacts(out):
    """Bytes of every artifact except the manifest (which carries wall-clock time)."""
    return {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*"))
            if p.is_file() and p.name != "run_manifest.json"}


class TestConfig:
    def test_row_with_overrides(self, tmp_path):
        cfg = load_experiment(_write(tmp_path / "c.json", {"row": "a15_dw_add", "reps": 10, "fit": QUICK_FIT}), seed=5)
        assert cfg.system == "double_well_additive" and cfg.reps == 10 and cfg.seed == 5
        assert cfg.fit_config().drift.epochs == 30 and cfg.fit_config().drift.hidden == (25, 25, 25)

    def test_full_scale(self, tmp_path):
        assert load_experiment(_write(tmp_path / "c.json", {"row": "ms_2d", "full_scale": True})).reps == 1000

    def test_explicit_config(self, tmp_path):
        d = {"name": "x", "system": "km_compare", "alpha": 1.5, "counts": 4, "reps": 3, "h": 0.1}
        assert load_experiment(_write(tmp_path / "c.json", d)).counts == 4

    @pytest.mark.parametrize(
        "body,msg",
        [
            ({"row": "nope"}, "a15_ou_add"),
            ({"name": "x", "system": "nope", "alpha": 1.5, "counts": 4, "reps": 3, "h": 0.1}, "maier_stein"),
            ({"name": "x", "system": "km_compare", "alpha": 1.5, "counts": 4, "reps": 3}, "'h'"),
            ({"row": "a15_ou_add", "colour": 1}, "colour"),
            ({"row": "a15_ou_add", "alpha": 2.5}, "alpha"),
            ([1, 2], "object"),
        ],
    )
    def test_invalid(self, tmp_path, body, msg):
        with pytest.raises(ConfigError, match=msg):
            load_experiment(_write(tmp_path / "c.json", body))

    def test_bad_json_names_line(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{\n  "row": "a15_ou_add",\n  oops\n}')
        with pytest.raises(ConfigError, match=":3:"):
            load_experiment(p)

    def test_select_rows(self):
        assert select_rows(["a05_*"]) == ["a05_ou_add", "a05_dw_add", "a05_ou_linmult", "a05_dw_linmult"]
        assert select_rows(["ms_2d,a05_ou_add", "ms_2d"]) == ["ms_2d", "a05_ou_add"]
        with pytest.raises(ConfigError):
            select_rows(["zzz*"])
        with pytest.raises(ConfigError):
            select_rows([" , "])


class TestSimulate:
    def test_outputs(self, tmp_path, ou_config):
        out = tmp_path / "sim"
        assert main(["simulate", "--config", ou_config, "--out", str(out)]) == 0
        ds = read_dataset(out / "data.csv")
        assert len(ds) == 5000 and ds.n_groups == 5 and ds.alpha == 1.5
        assert len((out / "data.csv").read_text().splitlines()) == 5001
        m = _manifest(out)
        assert m["artifacts"] == ["data.csv", "data.json"] and m["results"]["n_records"] == 5000
        assert m["version"] == __version__ and m["command"] == "simulate"

    def test_unknown_system(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.json", {"name": "x", "system": "lorenz", "alpha": 1.5, "counts": 2, "reps": 2, "h": 0.1})
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "available" in capsys.readouterr().err

    def test_seed_flag(self, tmp_path, ou_config):
        main(["simulate", "--config", ou_config, "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["simulate", "--config", ou_config, "--out", str(tmp_path / "b"), "--seed", "2"])
        assert (tmp_path / "a" / "data.csv").read_bytes() != (tmp_path / "b" / "data.csv").read_bytes()


class TestFit:
    def test_report(self, tmp_path, ou_config):
        main(["simulate", "--config", ou_config, "--out", str(tmp_path / "sim")])
        out = tmp_path / "fit"
        assert main(["fit", "--config", ou_config, "--data", str(tmp_path / "sim" / "data.csv"), "--out", str(out)]) == 0
        rep = json.loads((out / "fit.json").read_text())
        assert rep["l2_f"] is not None and rep["l2_g"] is not None and rep["mode"] == "general"
        m = _manifest(out)
        assert set(m["artifacts"]) == {"fit.json", "fit_drift.csv", "fit_diffusion.csv", "fit_drift_net.json",
                                       "fit_diffusion_net.json"}
        assert m["results"]["l2_f"] == rep["l2_f"] and not m["warnings"]

    def test_alpha_mismatch_warns_and_config_wins(self, tmp_path, ou_config):
        main(["simulate", "--config", ou_config, "--out", str(tmp_path / "sim")])
        meta = tmp_path / "sim" / "data.json"
        body = json.loads(meta.read_text())
        body["alpha"] = 1.2
        meta.write_text(json.dumps(body))
        out = tmp_path / "fit"
        assert main(["fit", "--config", ou_config, "--data", str(tmp_path / "sim" / "data.csv"), "--out", str(out)]) == 0
        m = _manifest(out)
        assert any("1.2" in w and "config" in w for w in m["warnings"])
        assert json.loads((out / "fit.json").read_text())["alpha"] == 1.5

    def test_missing_sidecar_infers_groups(self, tmp_path, ou_config):
        main(["simulate", "--config", ou_config, "--out", str(tmp_path / "sim")])
        (tmp_path / "sim" / "data.json").unlink()
        out = tmp_path / "fit"
        assert main(["fit", "--config", ou_config, "--data", str(tmp_path / "sim" / "data.csv"), "--out", str(out)]) == 0
        m = _manifest(out)
        assert any("no alpha" in w for w in m["warnings"])
        assert json.loads((out / "fit.json").read_text())["extras"]["drift_records"] == 5

    def test_ungrouped_cauchy_multiplicative_is_an_error(self, tmp_path, capsys):
        cfg = _write(tmp_path / "c.json", {"row": "a1_square_mult", "fit": {"pooled_diffusion": False,
                                                                           "drift": {"epochs": 1}}})
        rng = np.random.default_rng(0)
        x0 = rng.uniform(-3, 3, 50)
        lines = ["h,x0_1,x1_1"] + [f"0.01,{a!r},{a + 0.01 * rng.standard_cauchy()!r}" for a in x0]
        (tmp_path / "u.csv").write_text("\n".join(lines) + "\n")
        rc = main(["fit", "--config", cfg, "--data", str(tmp_path / "u.csv"), "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "grouped" in capsys.readouterr().err

    def test_missing_data_file(self, tmp_path, ou_config):
        with pytest.raises(FileNotFoundError):
            main(["fit", "--config", ou_config, "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o")])


class TestReproduce:
    def test_summary(self, tmp_path):
        out = tmp_path / "rep"
        assert main(["reproduce", "--rows", "a05_ou_add", "--out", str(out)]) == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == "row,published_l2_f,l2_f,published_l2_g,l2_g"
        name, published_f, f, published_g, g = lines[1].split(",")
        assert name == "a05_ou_add" and float(published_f) == 0.0001 and float(published_g) == 0.0045
        assert float(f) <= 0.01 and float(g) <= 0.05
        assert "a05_ou_add/fit.json" in _manifest(out)["artifacts"]

    def test_empty_selection(self, tmp_path, capsys):
        assert main(["reproduce", "--rows", "nothing*", "--out", str(tmp_path / "o")]) == 2
        assert "no experiment matches" in capsys.readouterr().err


class TestEstimateAlpha:
    MCMC = {"iterations": 300, "burn_in": 100, "seed": 3}

    def _samples(self, tmp_path, n=2000, header=True):
        x = sample_standard(1.5, n, 0)
        p = tmp_path / "s.csv"
        p.write_text(("x\n" if header else "") + "\n".join(repr(float(v)) for v in x) + "\n")
        return p

    def test_outputs(self, tmp_path):
        cfg = _write(tmp_path / "m.json", self.MCMC)
        out = tmp_path / "a"
        assert main(["estimate-alpha", "--data", str(self._samples(tmp_path)), "--config", cfg, "--out", str(out)]) == 0
        body = json.loads((out / "alpha.json").read_text())
        assert 1.3 < body["posterior_mean_alpha"] < 1.7 and body["n_samples"] == 2000
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "iteration,alpha,sigma,log_likelihood" and len(trace) == 301

    def test_residual_mode(self, tmp_path):
        cfg = _write(tmp_path / "c.json", {"row": "a15_dw_linmult", "counts": 5, "reps": 200})
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim")])
        out = tmp_path / "a"
        mc = _write(tmp_path / "m.json", self.MCMC)
        assert main(["estimate-alpha", "--data", str(tmp_path / "sim" / "data.csv"), "--residuals",
                     "--config", mc, "--out", str(out)]) == 0
        # g vanishes at x0 = 0, so that group has no spread and is dropped
        assert json.loads((out / "alpha.json").read_text())["n_samples"] == 800

    def test_too_few_samples(self, tmp_path, capsys):
        p = tmp_path / "one.csv"
        p.write_text("0.5\n")
        assert main(["estimate-alpha", "--data", str(p), "--out", str(tmp_path / "o")]) == 2
        assert "at least 100" in capsys.readouterr().err

    def test_parse_error_names_line(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("x\n1.0\n2.0\nabc\n")
        assert main(["estimate-alpha", "--data", str(p), "--out", str(tmp_path / "o")]) == 2
        assert "bad.csv:4" in capsys.readouterr().err

    def test_read_samples(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("1.5\n\n-2\n")
        np.testing.assert_array_equal(read_samples(p), [1.5, -2.0])
        p.write_text("1,2\n")
        with pytest.raises(ConfigError, match="one column"):
            read_samples(p)
        p.write_text("1\nnan\n")
        with pytest.raises(ConfigError, match="non-finite"):
            read_samples(p)

    def test_bad_mcmc_config(self, tmp_path):
        cfg = _write(tmp_path / "m.json", {"iterations": 10, "burn_in": 20})
        assert main(["estimate-alpha", "--data", str(self._samples(tmp_path)), "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2
        cfg = _write(tmp_path / "m.json", {"chains": 3})
        assert main(["estimate-alpha", "--data", str(self._samples(tmp_path)), "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2


class TestDeterminism:
    def test_simulate_and_fit(self, tmp_path, ou_config):
        for tag in "ab":
            main(["simulate", "--config", ou_config, "--out", str(tmp_path / f"sim_{tag}")])
            main(["fit", "--config", ou_config, "--data", str(tmp_path / f"sim_{tag}" / "data.csv"),
                  "--out", str(tmp_path / f"fit_{tag}")])
        assert _artifacts(tmp_path / "sim_a") == _artifacts(tmp_path / "sim_b")
        assert _artifacts(tmp_path / "fit_a") == _artifacts(tmp_path / "fit_b")

    def test_estimate_alpha(self, tmp_path):
        data = TestEstimateAlpha()._samples(tmp_path, n=500)
        cfg = _write(tmp_path / "m.json", {"iterations": 100, "burn_in": 10, "seed": 1})
        for tag in "ab":
            main(["estimate-alpha", "--data", str(data), "--config", cfg, "--out", str(tmp_path / tag)])
        assert _artifacts(tmp_path / "a") == _artifacts(tmp_path / "b")


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "ms_2d" in out and "maier_stein" in out and "N=1600x100" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stablesde", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == __version__
