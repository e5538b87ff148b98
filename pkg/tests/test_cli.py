import pytest

from expsim.cli import main


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    config = tmp / "experiment.txt"
    config.write_text("\n".join([
        "functions = piece",
        "tasks = forward",
        "memories = unlimited",
        "experiment = tasks",
        "n_trials = 3",
        "n_test = 40",
        "master_seed = 7",
    ]) + "\n")
    out = tmp / "out"
    code = main(["simulate", "--config", str(config), "--out", str(out),
                 "--format", "csv"])
    assert code == 0
    return tmp, out


class TestSimulate:
    def test_writes_artifacts(self, run_dir):
        _, out = run_dir
        for name in ("results.csv", "results.md", "config.txt", "explanations_piece.tsv"):
            assert (out / name).exists(), name

    def test_seed_override_changes_results(self, run_dir, tmp_path):
        tmp, out = run_dir
        code = main(["simulate", "--config", str(tmp / "experiment.txt"),
                     "--out", str(tmp_path / "o2"), "--seed", "8", "--format", "csv"])
        assert code == 0
        assert ((tmp_path / "o2" / "results.csv").read_text()
                != (out / "results.csv").read_text())


class TestCheck:
    def test_passing_expectations_exit_zero(self, run_dir, tmp_path, capsys):
        _, out = run_dir
        expect = tmp_path / "expect.txt"
        expect.write_text(
            "piece/forward/unlimited/faithful >= 0.85\n"
            "piece/forward/unlimited/faithful > piece/forward/unlimited/robust + 0.1\n")
        assert main(["check", "--results", str(out), "--expect", str(expect)]) == 0
        assert "ALL PASS" in capsys.readouterr().out

    def test_failing_expectations_exit_nonzero(self, run_dir, tmp_path, capsys):
        _, out = run_dir
        expect = tmp_path / "expect_bad.txt"
        expect.write_text("piece/forward/unlimited/robust >= 0.99\n")
        assert main(["check", "--results", str(out), "--expect", str(expect)]) == 1
        assert "FAIL" in capsys.readouterr().out


class TestStimuli:
    def test_emits_loadable_stimulus_file(self, tmp_path):
        config = tmp_path / "study.txt"
        config.write_text("\n".join([
            "function = box",
            "task = forward",
            "memory = limited",
            "best_kind = sparse",
            "per_category = 2",
            "pool_size = 200",
            "seed = 7",
        ]) + "\n")
        out = tmp_path / "stimuli.tsv"
        assert main(["stimuli", "--config", str(config), "--out", str(out)]) == 0
        from expsim.stimuli import read_stimulus_file
        loaded = read_stimulus_file(out)
        assert len(loaded.for_kind("sparse", "test")) == 6
        assert len(loaded.for_kind("sparse", "training")) == 10
