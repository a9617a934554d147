"""
faith_ledger.py

In-process stand-in for the consortium ledger: an append-only, hash-chained block log holding
hash records (published file digests) and proof records (published aggregated proofs).

Block log format (`<data dir>/ledger/blocks.jsonl`): one block per line, canonical JSON,

    {"digest": hex, "height": int, "prev": hex, "record_digests": [hex, ...],
     "records": [record, ...], "timestamp": float}

with record_digest = sha256(canonical_json(record)) and
digest = sha256(canonical_json({height, prev, record_digests, timestamp})).  Height 0 is a fixed
genesis block; the first record lands at height 1.
"""

import base64
import collections
import hashlib
import json
import os
import sys
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple, Union

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_log_debug
import faith_log_info
import faith_utils
from faith_errors import DanglingReferenceError, DuplicateIdError, InvalidEncodingError, NotFoundError

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

BLOCK_LOG_NAME = "blocks.jsonl"
GENESIS_PREV = "00" * 32

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class HashRecord:
    file_id: str
    owner: str
    root: str
    alg_id: int
    n: int
    chunk_size: int
    height: int = 0
    timestamp: float = 0.0

    kind = "hash"

    def payload(self) -> dict:
        return {
            "kind": self.kind, "file_id": self.file_id, "owner": self.owner, "root": self.root,
            "alg_id": self.alg_id, "n": self.n, "chunk_size": self.chunk_size,
        }


@dataclass(frozen=True)
class ProofRecord:
    file_id: str
    owner: str
    grant_id: str
    binding: str
    proof: bytes = field(repr=False)
    height: int = 0
    timestamp: float = 0.0

    kind = "proof"

    def payload(self) -> dict:
        return {
            "kind": self.kind, "file_id": self.file_id, "owner": self.owner, "grant_id": self.grant_id,
            "binding": self.binding, "proof": base64.b64encode(self.proof).decode("ascii"),
            "proof_bytes": len(self.proof),
        }


Record = Union[HashRecord, ProofRecord]


@dataclass(frozen=True)
class Block:
    height: int
    prev: str
    timestamp: float
    records: Tuple[dict, ...]
    record_digests: Tuple[str, ...]
    digest: str

    def to_json(self) -> str:
        return faith_utils.canonical_json({
            "digest": self.digest, "height": self.height, "prev": self.prev,
            "record_digests": list(self.record_digests), "records": list(self.records),
            "timestamp": self.timestamp,
        })


@dataclass(frozen=True)
class AuditReport:
    clean: bool
    blocks: int
    first_bad_height: Optional[int] = None
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LedgerMetric:
    op: str
    latency_ms: float
    bytes: int
    height: int

# -------------------------------------------------------------------------
def record_digest(record: dict) -> str:
    return hashlib.sha256(faith_utils.canonical_json(record).encode()).hexdigest()

# -------------------------------------------------------------------------
def block_digest(height: int, prev: str, timestamp: float, record_digests) -> str:
    header = {"height": height, "prev": prev, "record_digests": list(record_digests), "timestamp": timestamp}
    return hashlib.sha256(faith_utils.canonical_json(header).encode()).hexdigest()

# -------------------------------------------------------------------------
def make_block(height: int, prev: str, timestamp: float, records: List[dict]) -> Block:
    digests = tuple(record_digest(record) for record in records)
    return Block(
        height=height, prev=prev, timestamp=timestamp, records=tuple(records), record_digests=digests,
        digest=block_digest(height, prev, timestamp, digests),
    )

GENESIS = make_block(0, GENESIS_PREV, 0.0, [])

# -------------------------------------------------------------------------
def record_from_payload(payload: dict, height: int, timestamp: float) -> Record:
    try:
        if payload["kind"] == HashRecord.kind:
            return HashRecord(
                file_id=payload["file_id"], owner=payload["owner"], root=payload["root"],
                alg_id=payload["alg_id"], n=payload["n"], chunk_size=payload["chunk_size"],
                height=height, timestamp=timestamp,
            )
        if payload["kind"] == ProofRecord.kind:
            return ProofRecord(
                file_id=payload["file_id"], owner=payload["owner"], grant_id=payload["grant_id"],
                binding=payload["binding"], proof=base64.b64decode(payload["proof"], validate=True),
                height=height, timestamp=timestamp,
            )
    except (KeyError, TypeError, ValueError) as error:
        raise InvalidEncodingError(f"malformed record at height {height}: {error}") from error
    raise InvalidEncodingError(f"unknown record kind {payload.get('kind')!r} at height {height}")

# -------------------------------------------------------------------------
def _parse_block(line: bytes, expected_height: int, expected_prev: str) -> Block:
    """
    Parse one persisted block and check it against the chain.  Raises InvalidEncodingError on
    any inconsistency.
    """
    try:
        text = line.decode("ascii")
        data = json.loads(text)
    except (UnicodeDecodeError, ValueError) as error:
        raise InvalidEncodingError(f"unreadable block: {error}") from error
    if not isinstance(data, dict) or faith_utils.canonical_json(data) != text:
        raise InvalidEncodingError("block is not in canonical form")
    try:
        block = Block(
            height=data["height"], prev=data["prev"], timestamp=data["timestamp"],
            records=tuple(data["records"]), record_digests=tuple(data["record_digests"]), digest=data["digest"],
        )
    except (KeyError, TypeError) as error:
        raise InvalidEncodingError(f"block missing field {error}") from error

    if block.height != expected_height:
        raise InvalidEncodingError(f"height {block.height} where {expected_height} was expected")
    if block.prev != expected_prev:
        raise InvalidEncodingError("previous-block digest does not match")
    if tuple(record_digest(record) for record in block.records) != block.record_digests:
        raise InvalidEncodingError("record digest mismatch")
    if block_digest(block.height, block.prev, block.timestamp, block.record_digests) != block.digest:
        raise InvalidEncodingError("block digest mismatch")
    if block.height == 0 and block != GENESIS:
        raise InvalidEncodingError("genesis block altered")
    return block

# -------------------------------------------------------------------------
def audit_block_log(path: str) -> AuditReport:
    """
    Re-verify a persisted block log end to end and report the first inconsistent height.
    A missing or empty log is clean.
    """
    if not os.path.exists(path):
        return AuditReport(clean=True, blocks=0)
    data = faith_utils.read_file(path)
    if not data:
        return AuditReport(clean=True, blocks=0)
    lines = data.split(b"\n")
    if lines[-1] != b"":
        return AuditReport(False, len(lines) - 1, len(lines) - 1, "block log does not end with a newline")
    lines = lines[:-1]

    prev = GENESIS_PREV
    for height, line in enumerate(lines):
        try:
            block = _parse_block(line, height, prev)
        except InvalidEncodingError as error:
            logger_info.warning("Ledger audit: inconsistency at height %d: %s", height, error)
            return AuditReport(clean=False, blocks=len(lines), first_bad_height=height, detail=str(error))
        prev = block.digest
    logger_info.info("Ledger audit clean over %d blocks.", len(lines))
    return AuditReport(clean=True, blocks=len(lines))

# -------------------------------------------------------------------------
class Ledger:
    """
    Thread-safe ledger handle.  Appends are serialized by a lock; with a directory the chain is
    persisted as a JSON-lines block log and reloaded on open.
    """

    def __init__(self, directory: Optional[str] = None):
        self.directory = faith_utils.ensure_directory(directory) if directory else None
        self.path = os.path.join(self.directory, BLOCK_LOG_NAME) if self.directory else None
        self._lock = threading.Lock()
        self._blocks: List[Block] = []
        self._records: List[Record] = []
        self._hash_index: Dict[Tuple[str, str], HashRecord] = {}
        self._grant_index: Dict[str, List[ProofRecord]] = {}
        # recent latencies, plus per-operation totals over the ledger's whole life
        self.metrics: collections.deque = collections.deque(maxlen=faith_config.LEDGER_METRICS_WINDOW)
        self._metric_totals: Dict[str, dict] = {}
        self._load()

    # ---------------------------------------------------------------------
    def _load(self):
        if self.path and os.path.exists(self.path) and os.path.getsize(self.path) > 0:
            prev = GENESIS_PREV
            lines = faith_utils.read_file(self.path).split(b"\n")
            for height, line in enumerate(line for line in lines if line):
                try:
                    block = _parse_block(line, height, prev)
                    self._index_block(block)
                except InvalidEncodingError as error:
                    raise InvalidEncodingError(
                        f"block log {self.path} damaged at height {height}: {error} (run 'faith audit')"
                    ) from error
                prev = block.digest
            logger_debug.debug("Loaded %d blocks from %s", len(self._blocks), self.path)
        else:
            self._append_block(GENESIS)

    def _index_block(self, block: Block):
        self._blocks.append(block)
        for payload in block.records:
            record = record_from_payload(payload, block.height, block.timestamp)
            self._records.append(record)
            if isinstance(record, HashRecord):
                self._hash_index[(record.owner, record.file_id)] = record
            else:
                self._grant_index.setdefault(record.grant_id, []).append(record)

    def _append_block(self, block: Block):
        if self.path:
            with open(self.path, "a", encoding="ascii") as handle:
                handle.write(block.to_json() + "\n")
        self._index_block(block)

    # ---------------------------------------------------------------------
    @property
    def height(self) -> int:
        return self._blocks[-1].height

    @property
    def blocks(self) -> List[Block]:
        with self._lock:
            return list(self._blocks)

    def _commit(self, record: Record, op: str) -> int:
        started = time.perf_counter()
        payload = record.payload()
        previous = self._blocks[-1]
        block = make_block(previous.height + 1, previous.digest, time.time(), [payload])
        self._append_block(block)
        latency_ms = (time.perf_counter() - started) * 1000
        size = len(block.to_json())
        self._record_metric(LedgerMetric(op=op, latency_ms=latency_ms, bytes=size, height=block.height))
        logger_debug.debug("Ledger %s at height %d: %d bytes, %.3f ms", op, block.height, size, latency_ms)
        return block.height

    # ---------------------------------------------------------------------
    def put_hash(self, record: HashRecord) -> int:
        """
        Append a hash record.

        Raises:
            DuplicateIdError: the owner already published this file id.
        """
        with self._lock:
            if (record.owner, record.file_id) in self._hash_index:
                raise DuplicateIdError(f"file id {record.file_id!r} already recorded for this owner")
            height = self._commit(record, "put_hash")
        logger_info.info("Recorded hash of %s at height %d.", record.file_id, height)
        return height

    def put_proof(self, record: ProofRecord) -> int:
        """
        Append a proof record.

        Raises:
            DanglingReferenceError: no hash record for (owner, file id).
        """
        with self._lock:
            if (record.owner, record.file_id) not in self._hash_index:
                raise DanglingReferenceError(f"no hash record for file id {record.file_id!r}")
            height = self._commit(record, "put_proof")
        logger_info.info("Recorded proof for grant %s at height %d.", record.grant_id, height)
        return height

    # ---------------------------------------------------------------------
    def get(self, file_id: Optional[str] = None, grant_id: Optional[str] = None) -> List[Record]:
        """
        All records for a file id or a grant id, in append order.

        Raises:
            NotFoundError: nothing matches.
        """
        started = time.perf_counter()
        with self._lock:
            records = list(self._records)
        matches = [
            record for record in records
            if (file_id is not None and record.file_id == file_id)
            or (grant_id is not None and isinstance(record, ProofRecord) and record.grant_id == grant_id)
        ]
        latency_ms = (time.perf_counter() - started) * 1000
        self._record_metric(LedgerMetric(op="get", latency_ms=latency_ms, bytes=0, height=self.height))
        if not matches:
            raise NotFoundError(f"no ledger records for {'grant ' + grant_id if grant_id else 'file ' + str(file_id)}")
        return matches

    def get_hash(self, owner: str, file_id: str) -> HashRecord:
        with self._lock:
            record = self._hash_index.get((owner, file_id))
        if record is None:
            raise NotFoundError(f"no hash record for file {file_id!r}")
        return record

    def get_proof(self, grant_id: str) -> ProofRecord:
        """
        The latest proof record for a grant.
        """
        with self._lock:
            records = self._grant_index.get(grant_id)
        if not records:
            raise NotFoundError(f"no proof record for grant {grant_id!r}")
        return records[-1]

    # ---------------------------------------------------------------------
    def audit(self) -> AuditReport:
        """
        Recompute the digest chain.  Persisted ledgers are audited from the file on disk.
        """
        if self.path:
            with self._lock:
                return audit_block_log(self.path)
        prev = GENESIS_PREV
        for block in self.blocks:
            try:
                _parse_block(block.to_json().encode("ascii"), block.height, prev)
            except InvalidEncodingError as error:
                return AuditReport(False, len(self._blocks), block.height, str(error))
            prev = block.digest
        return AuditReport(clean=True, blocks=len(self._blocks))

    def _record_metric(self, metric: LedgerMetric):
        self.metrics.append(metric)
        entry = self._metric_totals.setdefault(metric.op, {"count": 0, "total_ms": 0.0, "bytes": 0})
        entry["count"] += 1
        entry["total_ms"] += metric.latency_ms
        entry["bytes"] += metric.bytes

    def metrics_summary(self) -> Dict[str, dict]:
        return {op: dict(entry) for op, entry in self._metric_totals.items()}
