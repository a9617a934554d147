import json

import pytest

import faith_arguments_parser
import faith_main
from faith_ledger import BLOCK_LOG_NAME

SETUP_FLAGS = ["--curve", "toy-65521", "--chunk-size", "4096", "--hash-alg", "sha256"]


@pytest.fixture
def cli(tmp_path, capsys):
    """
    Run the CLI against a data directory under tmp_path; returns (exit code, parsed JSON or None).
    """
    data_dir = str(tmp_path / "data")

    def run(*argv):
        capsys.readouterr()
        code = faith_main.execute_faith(["--json", "--data-dir", data_dir, *argv])
        out = capsys.readouterr().out
        return code, (json.loads(out) if out.strip() else None)
    return run


@pytest.fixture
def shared(cli, tmp_path, write_file):
    """
    Setup, two key pairs, one upload and one grant; returns the plaintext bytes.
    """
    assert cli("setup", *SETUP_FLAGS)[0] == 0
    for name in ("alice", "bob"):
        assert cli("keygen", "--out", str(tmp_path / f"{name}.key"))[0] == 0
    path, data = write_file("notes.bin", 3 * 4096 + 11)
    code, uploaded = cli("upload", "--key", str(tmp_path / "alice.key"), "--file", path, "--file-id", "notes",
                         "--processes", "1")
    assert code == 0
    assert uploaded["chunks"] == 4
    code, granted = cli("grant", "--key", str(tmp_path / "alice.key"), "--to", str(tmp_path / "bob.key.pub"),
                        "--file-id", "notes", "--grant-id", "g1")
    assert code == 0
    assert granted["status"] == "rekeyed"
    return data


def test_setup_output(cli, tmp_path):
    code, out = cli("setup", *SETUP_FLAGS)
    assert code == 0
    assert out["curve"] == "toy-65521"
    assert out["chunk_size"] == 4096
    assert sorted(out["vrk_files"]) == ["vrk_agg.json", "vrk_int.json", "vrk_pre.json"]
    assert (tmp_path / "data" / "params" / "params.json").is_file()


def test_setup_from_yaml(cli, tmp_path):
    config = tmp_path / "faith.yaml"
    config.write_text("curve: toy-65521\nchunk_size: 8192\nhash_alg: sha3-256\n")
    code, out = cli("setup", "--config", str(config), "--chunk-size", "4096")
    assert code == 0
    assert (out["chunk_size"], out["hash_alg"]) == (4096, "sha3-256")


def test_full_flow(cli, shared, tmp_path):
    code, processed = cli("process", "--grant", "g1", "--processes", "1")
    assert code == 0
    assert processed["grants"][0]["status"] == "published"

    code, verified = cli("verify", "--grant", "g1")
    assert code == 0
    assert verified["ok"] is True

    out = tmp_path / "notes.out"
    assert cli("retrieve", "--key", str(tmp_path / "bob.key"), "--grant", "g1", "--out", str(out))[0] == 0
    assert out.read_bytes() == shared

    own = tmp_path / "own.out"
    assert cli("open", "--key", str(tmp_path / "alice.key"), "--file-id", "notes", "--out", str(own))[0] == 0
    assert own.read_bytes() == shared

    code, audit = cli("audit")
    assert code == 0
    assert audit["clean"] is True
    assert audit["blocks"] == 3


def test_faulty_provider_fails_verification(cli, shared, tmp_path):
    code, processed = cli("process", "--grant", "g1", "--processes", "1", "--behaviour", "corrupt-reenc")
    assert code == 0
    code, verified = cli("verify", "--grant", "g1")
    assert code == 2
    assert (verified["ok"], verified["reason"]) == (False, "reenc")

    code, error = cli("retrieve", "--key", str(tmp_path / "bob.key"), "--grant", "g1", "--out", str(tmp_path / "x"))
    assert code == 1
    assert error["ok"] is False
    assert not (tmp_path / "x").exists()


def test_retrieve_reports_verification_failure(cli, shared, tmp_path):
    cli("process", "--grant", "g1", "--processes", "1", "--behaviour", "wrong-statement")
    code, error = cli("retrieve", "--key", str(tmp_path / "bob.key"), "--grant", "g1", "--out", str(tmp_path / "x"))
    assert code == 2
    assert error["error"] == "verification-failed"


def test_not_found_exit_code(cli, shared):
    code, error = cli("verify", "--grant", "nobody")
    assert code == 3
    assert error["ok"] is False


def test_missing_params(cli, tmp_path):
    assert cli("keygen", "--out", str(tmp_path / "k.key"))[0] == 3


def test_bad_config_exit_code(cli):
    assert cli("setup", "--chunk-size", "1000")[0] == 4


def test_dirty_audit(cli, shared, tmp_path):
    path = tmp_path / "data" / "ledger" / BLOCK_LOG_NAME
    lines = path.read_text().splitlines(keepends=True)
    lines[1] = lines[1].replace('"n":4', '"n":5')
    path.write_text("".join(lines))
    code, audit = cli("audit")
    assert code == 2
    assert (audit["clean"], audit["first_bad_height"]) == (False, 1)


@pytest.mark.parametrize("argv", [
    [],
    ["upload", "--file", "x"],
    ["process", "--grant", "g1", "--behaviour", "sloppy"],
    ["bench", "--sizes", "1", "--large"],
    ["process", "--grant", "g1", "--threads", "-1"],
])
def test_usage_errors(argv, tmp_path):
    with pytest.raises(SystemExit) as error:
        faith_main.execute_faith(["--data-dir", str(tmp_path), *argv])
    assert error.value.code == faith_arguments_parser.USAGE_EXIT_CODE == 4


def test_version(capsys):
    assert faith_main.execute_faith(["-V"]) == 0
    assert "FAITH Version" in capsys.readouterr().out


def test_examples(capsys, tmp_path):
    assert faith_main.execute_faith(["--data-dir", str(tmp_path), "examples"]) == 0
    assert "faith.py" in capsys.readouterr().out
