import json

import pytest

from conftest import make_config

from app.cli import EXIT_INVALID, EXIT_OK, main


def run(args, capsys):
    code = main([str(a) for a in args])
    return code, capsys.readouterr()


class TestCli:
    def test_check(self, weak_config, write_config, tmp_path, capsys):
        out = tmp_path / "out"
        code, captured = run(["check", "--config", write_config(weak_config), "--out", out], capsys)
        assert code == EXIT_OK
        assert captured.out.strip() == str(out / "check.json")
        report = json.loads((out / "check.json").read_text(encoding="utf-8"))
        assert report["verdicts"]["weakly_cancelling"] is True

    def test_witness_csv(self, blow_up_config, write_config, tmp_path, capsys):
        out = tmp_path / "out"
        code, _ = run(
            ["witness", "--config", write_config(blow_up_config), "--depth", 10, "--out", out, "--format", "csv"], capsys
        )
        assert code == EXIT_OK
        rows = (out / "witness_curve.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "N,lhs,rhs,ratio"
        assert rows[-1] == "10,20,1,20"

    def test_norm(self, weak_config, write_config, tmp_path, capsys):
        code, _ = run(["norm", "--config", write_config(weak_config), "--depth", 4, "--out", tmp_path], capsys)
        assert code == EXIT_OK
        assert len(json.loads((tmp_path / "norm.json").read_text(encoding="utf-8"))["norms"]) == 3

    def test_invalid_tensor(self, write_config, tmp_path, capsys):
        config = make_config(3, 1, [[[1], [0], [0]]], [[0, 0, 0]])
        code, captured = run(["check", "--config", write_config(config), "--out", tmp_path], capsys)
        assert code == EXIT_INVALID
        assert "w_basis[0]" in captured.err

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text("{", encoding="utf-8")
        code, _ = run(["check", "--config", path, "--out", tmp_path], capsys)
        assert code == EXIT_INVALID

    def test_config_not_utf8(self, tmp_path, capsys):
        path = tmp_path / "binary.json"
        path.write_bytes(b"\xff\xfe")
        code, captured = run(["check", "--config", path, "--out", tmp_path], capsys)
        assert code == EXIT_INVALID
        assert "cannot read config" in captured.err

    def test_missing_config(self, tmp_path, capsys):
        code, _ = run(["extend", "--config", tmp_path / "absent.json", "--out", tmp_path], capsys)
        assert code == EXIT_INVALID

    def test_extend_refused(self, blow_up_config, write_config, tmp_path, capsys):
        code, _ = run(["extend", "--config", write_config(blow_up_config), "--out", tmp_path], capsys)
        assert code == EXIT_INVALID
        assert not (tmp_path / "extend.json").exists()

    def test_fourier_without_group(self, weak_config, write_config, tmp_path, capsys):
        code, _ = run(["fourier", "--config", write_config(weak_config), "--out", tmp_path], capsys)
        assert code == EXIT_INVALID

    def test_sweep(self, tmp_path, capsys):
        code, _ = run(
            ["sweep", "--seed", 3, "--instances", 4, "--ti-instances", 3, "--depth", 3, "--workers", 1, "--out", tmp_path],
            capsys,
        )
        assert code == EXIT_OK
        assert json.loads((tmp_path / "sweep.json").read_text(encoding="utf-8"))["all_passed"] is True

    def test_sweep_seed_from_config(self, weak_config, write_config, tmp_path, capsys):
        config = write_config(dict(weak_config, seed=11))
        args = ["sweep", "--config", config, "--instances", 2, "--ti-instances", 1, "--depth", 3, "--workers", 1]
        code, _ = run(args + ["--out", tmp_path / "a"], capsys)
        assert code == EXIT_OK
        assert json.loads((tmp_path / "a" / "sweep.json").read_text(encoding="utf-8"))["seed"] == 11
        code, _ = run(args + ["--seed", 4, "--out", tmp_path / "b"], capsys)
        assert code == EXIT_OK
        assert json.loads((tmp_path / "b" / "sweep.json").read_text(encoding="utf-8"))["seed"] == 4

    def test_seed_only_for_sweep(self, weak_config, write_config, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["check", "--config", str(write_config(weak_config)), "--seed", "1", "--out", str(tmp_path)])
        assert info.value.code == 2

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["transmogrify"])
        assert info.value.code == 2
