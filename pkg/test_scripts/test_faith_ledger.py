import threading

import pytest

import faith_config
import faith_ledger
from faith_errors import DanglingReferenceError, DuplicateIdError, InvalidEncodingError, NotFoundError
from faith_ledger import GENESIS, HashRecord, Ledger, ProofRecord


def _hash(file_id="f1", owner="alice", root="ab" * 32):
    return HashRecord(file_id=file_id, owner=owner, root=root, alg_id=1, n=3, chunk_size=4096)


def _proof(grant_id="g1", file_id="f1", owner="alice", proof=b"proof bytes"):
    return ProofRecord(file_id=file_id, owner=owner, grant_id=grant_id, binding="cd" * 32, proof=proof)


def test_genesis_block():
    ledger = Ledger()
    assert ledger.height == 0
    assert ledger.blocks == [GENESIS]
    assert GENESIS.prev == faith_ledger.GENESIS_PREV


def test_put_and_get():
    ledger = Ledger()
    assert ledger.put_hash(_hash()) == 1
    assert ledger.put_proof(_proof()) == 2

    stored = ledger.get_hash("alice", "f1")
    assert (stored.root, stored.n, stored.height) == ("ab" * 32, 3, 1)
    assert ledger.get_proof("g1").proof == b"proof bytes"
    assert [record.kind for record in ledger.get(file_id="f1")] == ["hash", "proof"]
    assert [record.kind for record in ledger.get(grant_id="g1")] == ["proof"]


def test_blocks_chain():
    ledger = Ledger()
    ledger.put_hash(_hash("f1"))
    ledger.put_hash(_hash("f2"))
    blocks = ledger.blocks
    assert [block.height for block in blocks] == [0, 1, 2]
    assert all(block.prev == previous.digest for previous, block in zip(blocks, blocks[1:]))


def test_duplicate_hash_record():
    ledger = Ledger()
    ledger.put_hash(_hash())
    with pytest.raises(DuplicateIdError):
        ledger.put_hash(_hash(root="ef" * 32))
    assert ledger.put_hash(_hash(owner="bob")) == 2


def test_proof_needs_hash_record():
    ledger = Ledger()
    with pytest.raises(DanglingReferenceError):
        ledger.put_proof(_proof())
    assert ledger.height == 0


def test_latest_proof_wins():
    ledger = Ledger()
    ledger.put_hash(_hash())
    ledger.put_proof(_proof(proof=b"first"))
    ledger.put_proof(_proof(proof=b"second"))
    assert ledger.get_proof("g1").proof == b"second"
    assert len(ledger.get(grant_id="g1")) == 2


def test_missing_records():
    ledger = Ledger()
    with pytest.raises(NotFoundError):
        ledger.get(file_id="nope")
    with pytest.raises(NotFoundError):
        ledger.get(grant_id="nope")
    with pytest.raises(NotFoundError):
        ledger.get_hash("alice", "nope")
    with pytest.raises(NotFoundError):
        ledger.get_proof("nope")


def test_concurrent_appends():
    ledger = Ledger()
    threads = [threading.Thread(target=ledger.put_hash, args=(_hash(f"f{i}"),)) for i in range(20)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert ledger.height == 20
    assert ledger.audit().clean


def test_persisted_ledger_reloads(tmp_path):
    ledger = Ledger(str(tmp_path))
    ledger.put_hash(_hash())
    ledger.put_proof(_proof())

    reopened = Ledger(str(tmp_path))
    assert reopened.height == 2
    assert reopened.get_proof("g1") == ledger.get_proof("g1")
    assert reopened.blocks == ledger.blocks
    with pytest.raises(DuplicateIdError):
        reopened.put_hash(_hash())


def test_audit_clean(tmp_path):
    ledger = Ledger(str(tmp_path))
    for i in range(5):
        ledger.put_hash(_hash(f"f{i}"))
    report = ledger.audit()
    assert report.clean
    assert report.blocks == 6
    assert report.first_bad_height is None
    assert Ledger().audit().clean


def test_audit_finds_tampered_block(tmp_path):
    ledger = Ledger(str(tmp_path))
    for i in range(4):
        ledger.put_hash(_hash(f"f{i}"))
    path = tmp_path / faith_ledger.BLOCK_LOG_NAME
    lines = path.read_text().splitlines(keepends=True)
    lines[2] = lines[2].replace("ab" * 32, "ac" + "ab" * 31)
    path.write_text("".join(lines))

    report = faith_ledger.audit_block_log(str(path))
    assert not report.clean
    assert report.first_bad_height == 2
    assert "record digest" in report.detail
    with pytest.raises(InvalidEncodingError):
        Ledger(str(tmp_path))


def test_audit_finds_dropped_block(tmp_path):
    ledger = Ledger(str(tmp_path))
    for i in range(3):
        ledger.put_hash(_hash(f"f{i}"))
    path = tmp_path / faith_ledger.BLOCK_LOG_NAME
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:1] + lines[2:]))
    assert faith_ledger.audit_block_log(str(path)).first_bad_height == 1


def test_audit_missing_log(tmp_path):
    report = faith_ledger.audit_block_log(str(tmp_path / "absent.jsonl"))
    assert report.clean
    assert report.blocks == 0


def test_metrics():
    ledger = Ledger()
    ledger.put_hash(_hash())
    ledger.put_proof(_proof(proof=b"x" * 1000))
    ledger.get(file_id="f1")
    summary = ledger.metrics_summary()
    assert summary["put_hash"]["count"] == 1
    assert summary["put_proof"]["bytes"] > 1000
    assert summary["get"]["count"] == 1
    assert [metric.height for metric in ledger.metrics if metric.op != "get"] == [1, 2]


def test_metrics_window_is_bounded(monkeypatch):
    monkeypatch.setattr(faith_config, "LEDGER_METRICS_WINDOW", 5)
    ledger = Ledger()
    ledger.put_hash(_hash())
    for _ in range(50):
        ledger.get(file_id="f1")
    assert len(ledger.metrics) == 5
    assert all(metric.op == "get" for metric in ledger.metrics)
    summary = ledger.metrics_summary()
    assert summary["get"]["count"] == 50
    assert summary["put_hash"]["count"] == 1


@pytest.mark.slow
def test_ten_thousand_blocks(tmp_path):
    ledger = Ledger(str(tmp_path))
    for i in range(10000):
        ledger.put_hash(_hash(f"f{i}"))
    assert ledger.audit().clean
    assert Ledger(str(tmp_path)).height == 10000
