"""
faith_commitment.py

The published file digest h: a Merkle root over per-chunk hashes of the envelope body.

Chunks are envelope records (chunk ciphertext plus tag).  Each chunk is packed into field elements
(`pack_chunk`) and hashed by an iterated compression over blocks of two elements:

    state_0     = IV(leaf tag 0)
    state_{j+1} = absorb(state_j, block_j)
    digest      = output(state_m)

Three hash algorithms share that shape:

    id  name       state                absorb
    0   poseidon2  3 field elements     permute((s0, s1 + b0, s2 + b1)), digest = s1
    1   sha256     32 bytes             sha256(state || b0 || b1), IV = sha256(0x00)
    2   sha3-256   32 bytes             sha3_256(state || b0 || b1), IV = sha3_256(0x00)

Internal Merkle nodes are permute((1, left, right))[1] for poseidon2 and H(0x01 || left || right)
for the byte hashes.  Odd levels duplicate their last node; a single leaf is the root.
"""

import hashlib
import json
import multiprocessing
import os
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, List, Optional, Sequence, Tuple, Union

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_envelope
import faith_log_debug
import faith_log_info
import faith_poseidon
import faith_utils
from faith_errors import ConfigError, EnvelopeIOError, InvalidEncodingError, NotFoundError

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

LEAF_TAG = 0x00
NODE_TAG = 0x01
DIGEST_SIZE = 32
SIDECAR_FORMAT = "faith-commitment-v1"
BASELINE_READ_SIZE = 1024 * 1024

# Bytes per packed field element: floor((bitlen(p) - 1) / 8)
ELEMENT_BYTES = (faith_poseidon.FIELD_MODULUS.bit_length() - 1) // 8

# -------------------------------------------------------------------------
class ChunkHasher:
    """
    Iterated compression over two-element blocks plus the Merkle node hash of one algorithm.
    """

    name = ""
    alg_id = -1

    def initial_state(self):
        raise NotImplementedError

    def absorb(self, state, b0: int, b1: int):
        raise NotImplementedError

    def output(self, state) -> bytes:
        raise NotImplementedError

    def node(self, left: bytes, right: bytes) -> bytes:
        raise NotImplementedError

    def encode_state(self, state) -> bytes:
        raise NotImplementedError

    def decode_state(self, data: bytes):
        raise NotImplementedError

    def hash_elements(self, elems: Sequence[int]) -> bytes:
        state = self.initial_state()
        for j in range(0, len(elems), 2):
            state = self.absorb(state, elems[j], elems[j + 1])
        return self.output(state)

    def trace(self, elems: Sequence[int]) -> list:
        """
        Every intermediate state, from the IV to the final state.
        """
        states = [self.initial_state()]
        for j in range(0, len(elems), 2):
            states.append(self.absorb(states[-1], elems[j], elems[j + 1]))
        return states


class Poseidon2Hasher(ChunkHasher):
    name = "poseidon2"
    alg_id = 0

    def initial_state(self):
        return (LEAF_TAG, 0, 0)

    def absorb(self, state, b0, b1):
        p = faith_poseidon.FIELD_MODULUS
        return faith_poseidon.permute((state[0], (state[1] + b0) % p, (state[2] + b1) % p))

    def output(self, state):
        return state[1].to_bytes(DIGEST_SIZE, "big")

    def node(self, left, right):
        return faith_poseidon.compress(int.from_bytes(left, "big"), int.from_bytes(right, "big"), NODE_TAG).to_bytes(
            DIGEST_SIZE, "big"
        )

    def encode_state(self, state):
        return b"".join(lane.to_bytes(DIGEST_SIZE, "big") for lane in state)

    def decode_state(self, data):
        if len(data) != 3 * DIGEST_SIZE:
            raise InvalidEncodingError("poseidon2 state must be 96 bytes")
        lanes = tuple(int.from_bytes(data[i:i + DIGEST_SIZE], "big") for i in range(0, len(data), DIGEST_SIZE))
        if any(lane >= faith_poseidon.FIELD_MODULUS for lane in lanes):
            raise InvalidEncodingError("poseidon2 state lane not reduced")
        return lanes


class DigestChainHasher(ChunkHasher):
    def __init__(self, name: str, alg_id: int, constructor):
        self.name = name
        self.alg_id = alg_id
        self._constructor = constructor

    def initial_state(self):
        return self._constructor(bytes([LEAF_TAG])).digest()

    def absorb(self, state, b0, b1):
        return self._constructor(state + b0.to_bytes(DIGEST_SIZE, "big") + b1.to_bytes(DIGEST_SIZE, "big")).digest()

    def output(self, state):
        return state

    def node(self, left, right):
        return self._constructor(bytes([NODE_TAG]) + left + right).digest()

    def encode_state(self, state):
        return state

    def decode_state(self, data):
        if len(data) != DIGEST_SIZE:
            raise InvalidEncodingError(f"{self.name} state must be {DIGEST_SIZE} bytes")
        return bytes(data)


HASHERS = {
    "poseidon2": Poseidon2Hasher(),
    "sha256": DigestChainHasher("sha256", 1, hashlib.sha256),
    "sha3-256": DigestChainHasher("sha3-256", 2, hashlib.sha3_256),
}
HASHERS_BY_ID = {hasher.alg_id: hasher for hasher in HASHERS.values()}

# -------------------------------------------------------------------------
def get_hasher(alg: Union[str, int]) -> ChunkHasher:
    """
    Resolve a hash algorithm by name or id.

    Raises:
        ConfigError: unknown algorithm.
    """
    hasher = HASHERS_BY_ID.get(alg) if isinstance(alg, int) else HASHERS.get(alg)
    if hasher is None:
        raise ConfigError(f"unknown hash algorithm {alg!r}; choose from {sorted(HASHERS)}")
    return hasher

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class ChunkDigest:
    digest: bytes
    index: int = field(default=0, compare=False)

    def hex(self) -> str:
        return self.digest.hex()

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class FileCommitment:
    root: bytes
    n: int
    chunk_size: int
    alg_id: int

    @property
    def alg_name(self) -> str:
        return get_hasher(self.alg_id).name

    @property
    def depth(self) -> int:
        return tree_depth(self.n)

    def to_dict(self) -> dict:
        return {"root": self.root.hex(), "n": self.n, "chunk_size": self.chunk_size, "alg_id": self.alg_id}

    @classmethod
    def from_dict(cls, data: dict) -> "FileCommitment":
        try:
            commitment = cls(
                root=bytes.fromhex(data["root"]),
                n=int(data["n"]),
                chunk_size=int(data["chunk_size"]),
                alg_id=int(data["alg_id"]),
            )
        except (KeyError, TypeError, ValueError) as error:
            raise InvalidEncodingError(f"malformed commitment: {error}") from error
        if commitment.n < 1 or len(commitment.root) != DIGEST_SIZE:
            raise InvalidEncodingError("commitment needs n >= 1 and a 32-byte root")
        get_hasher(commitment.alg_id)
        return commitment

    def to_bytes(self) -> bytes:
        return faith_utils.canonical_json(self.to_dict()).encode()

# -------------------------------------------------------------------------
def record_capacity(chunk_size: int) -> int:
    """
    Largest commitment chunk for an envelope chunk size: the chunk ciphertext plus its tag.
    """
    return chunk_size + faith_envelope.TAG_SIZE

# -------------------------------------------------------------------------
def packed_length(capacity: int) -> int:
    """
    Number of field elements `pack_chunk` produces for any chunk up to `capacity` bytes.
    """
    data_elements = -(-(capacity + 1) // ELEMENT_BYTES)
    if (data_elements + 1) % 2:
        data_elements += 1
    return data_elements + 1

# -------------------------------------------------------------------------
def pack_chunk(chunk: bytes, capacity: int) -> List[int]:
    """
    Pack a chunk into field elements: append 0x01, zero-fill to the capacity's element boundary,
    read ELEMENT_BYTES-byte little-endian elements, and finish with the true chunk length.  A zero
    element is inserted before the length when needed so the vector splits into two-element blocks.
    """
    if len(chunk) > capacity:
        raise InvalidEncodingError(f"chunk of {len(chunk)} bytes exceeds capacity {capacity}")
    total = packed_length(capacity)
    padded = bytes(chunk) + b"\x01"
    padded += bytes((total - 1) * ELEMENT_BYTES - len(padded))
    elems = [
        int.from_bytes(padded[i:i + ELEMENT_BYTES], "little")
        for i in range(0, len(padded), ELEMENT_BYTES)
    ]
    elems.append(len(chunk))
    return elems

# -------------------------------------------------------------------------
def hash_chunk(elems: Sequence[int], alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG, index: int = 0) -> ChunkDigest:
    """
    Leaf digest of a packed chunk.  The index is carried beside the digest, not hashed into it.
    """
    if len(elems) % 2:
        raise InvalidEncodingError("packed chunk must have an even number of elements")
    return ChunkDigest(digest=get_hasher(alg).hash_elements(elems), index=index)

# -------------------------------------------------------------------------
def hash_record(record: bytes, capacity: int, alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG) -> bytes:
    return get_hasher(alg).hash_elements(pack_chunk(record, capacity))

# -------------------------------------------------------------------------
def tree_depth(n: int) -> int:
    return (n - 1).bit_length()

# -------------------------------------------------------------------------
def pair_aggregation_count(n: int) -> int:
    """
    Pair aggregations needed to reduce n leaves to one root.  Each merges two distinct children
    and removes one node; promoting the odd node of a level (duplicate-last) merges nothing.
    """
    return max(n - 1, 0)

# -------------------------------------------------------------------------
def merkle_levels(leaves: Sequence[bytes], alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG) -> List[List[bytes]]:
    """
    All tree levels, leaves first and the root level last.
    """
    if not leaves:
        raise InvalidEncodingError("a Merkle tree needs at least one leaf")
    hasher = get_hasher(alg)
    levels = [list(leaves)]
    while len(levels[-1]) > 1:
        level = levels[-1]
        levels.append([
            hasher.node(level[i], level[i + 1] if i + 1 < len(level) else level[i])
            for i in range(0, len(level), 2)
        ])
    return levels

# -------------------------------------------------------------------------
def _leaf_bytes(leaves: Iterable[Union[bytes, ChunkDigest]]) -> List[bytes]:
    return [leaf.digest if isinstance(leaf, ChunkDigest) else bytes(leaf) for leaf in leaves]

# -------------------------------------------------------------------------
def merkle_root(leaves: Sequence[Union[bytes, ChunkDigest]],
                chunk_size: int = faith_config.DEFAULT_CHUNK_SIZE,
                alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG) -> FileCommitment:
    """
    Commitment over leaf digests.
    """
    digests = _leaf_bytes(leaves)
    root = merkle_levels(digests, alg)[-1][0]
    return FileCommitment(root=root, n=len(digests), chunk_size=chunk_size, alg_id=get_hasher(alg).alg_id)

# -------------------------------------------------------------------------
def merkle_path(levels: List[List[bytes]], index: int) -> List[bytes]:
    """
    Sibling digests from leaf `index` up to the root.
    """
    path = []
    for level in levels[:-1]:
        sibling = index ^ 1
        path.append(level[sibling] if sibling < len(level) else level[index])
        index //= 2
    return path

# -------------------------------------------------------------------------
def root_from_path(leaf: bytes, index: int, path: Sequence[bytes], alg: Union[str, int]) -> bytes:
    hasher = get_hasher(alg)
    node = leaf
    for sibling in path:
        node = hasher.node(sibling, node) if index & 1 else hasher.node(node, sibling)
        index //= 2
    return node

# -------------------------------------------------------------------------
def flat_hash_baseline(source: Union[str, BinaryIO]) -> bytes:
    """
    SHA-256 of a whole stream or file, read in 1 MiB pieces.
    """
    if isinstance(source, str):
        try:
            with open(source, "rb") as handle:
                return flat_hash_baseline(handle)
        except OSError as error:
            raise EnvelopeIOError(f"cannot read {source}: {error}", 0) from error

    hasher = hashlib.sha256()
    offset = 0
    while True:
        try:
            piece = source.read(BASELINE_READ_SIZE)
        except OSError as error:
            raise EnvelopeIOError(f"read failed: {error}", offset) from error
        if not piece:
            break
        hasher.update(piece)
        offset += len(piece)
    return hasher.digest()

# -------------------------------------------------------------------------
def _hash_record_job(job: Tuple[bytes, int, str]) -> bytes:
    record, capacity, alg = job
    return hash_record(record, capacity, alg)

# -------------------------------------------------------------------------
def worker_count(processes: Optional[int] = None) -> int:
    processes = faith_config.PROVER_PROCESSES if processes is None else processes
    return processes if processes > 0 else (os.cpu_count() or 1)

# -------------------------------------------------------------------------
class CommitmentBuilder:
    """
    Incremental commitment over envelope records, fed one record at a time (for example from
    `faith_envelope.se_encrypt`'s record callback).  Leaf hashing runs in a process pool with a
    bounded number of records in flight.
    """

    def __init__(self, chunk_size: int, alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG,
                 processes: Optional[int] = None):
        self.chunk_size = chunk_size
        self.capacity = record_capacity(chunk_size)
        self.hasher = get_hasher(alg)
        self.processes = worker_count(processes)
        self._pool = multiprocessing.Pool(self.processes) if self.processes > 1 else None
        self._pending = deque()
        self.leaves: List[bytes] = []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.terminate()
            self._pool.join()
            self._pool = None

    def add(self, record: bytes):
        job = (bytes(record), self.capacity, self.hasher.name)
        if self._pool is None:
            self.leaves.append(_hash_record_job(job))
            return
        self._pending.append(self._pool.apply_async(_hash_record_job, (job,)))
        while len(self._pending) > 4 * self.processes:
            self.leaves.append(self._pending.popleft().get())

    def finish(self) -> Tuple[FileCommitment, List[bytes]]:
        while self._pending:
            self.leaves.append(self._pending.popleft().get())
        self.close()
        if not self.leaves:
            # empty body: one empty padded chunk
            self.leaves.append(hash_record(b"", self.capacity, self.hasher.name))
        commitment = merkle_root(self.leaves, self.chunk_size, self.hasher.name)
        logger_debug.debug("Commitment over %d chunks (%s): %s", commitment.n, self.hasher.name, commitment.root.hex())
        return commitment, list(self.leaves)

# -------------------------------------------------------------------------
def commit_stream(source: BinaryIO, alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG,
                  processes: Optional[int] = None) -> Tuple[FileCommitment, List[bytes]]:
    """
    Commit to an envelope read from `source`.  Returns the commitment and the leaf digests.
    """
    header = faith_envelope.read_header(source)
    with CommitmentBuilder(header.chunk_size, alg, processes) as builder:
        for _, record in faith_envelope.iter_records(source, header):
            builder.add(record)
        return builder.finish()

# -------------------------------------------------------------------------
def commit_envelope_file(path: str, alg: Union[str, int] = faith_config.DEFAULT_HASH_ALG,
                         processes: Optional[int] = None) -> Tuple[FileCommitment, List[bytes]]:
    try:
        with open(path, "rb") as source:
            return commit_stream(source, alg, processes)
    except OSError as error:
        raise EnvelopeIOError(f"cannot read envelope {path}: {error}", 0) from error

# -------------------------------------------------------------------------
def envelope_chunks(source: BinaryIO) -> Tuple[faith_envelope.EnvelopeHeader, List[bytes]]:
    """
    Header and commitment chunks of an in-memory-sized envelope (an empty body yields one empty chunk).
    """
    header = faith_envelope.read_header(source)
    chunks = [record for _, record in faith_envelope.iter_records(source, header)]
    return header, chunks or [b""]

# -------------------------------------------------------------------------
def read_chunk(path: str, index: int) -> bytes:
    """
    Read commitment chunk `index` of an envelope file without scanning the body.
    """
    try:
        with open(path, "rb") as source:
            header = faith_envelope.read_header(source)
            if header.record_count == 0 and index == 0:
                return b""
            if not 0 <= index < header.record_count:
                raise NotFoundError(f"chunk {index} out of range for {header.record_count} records")
            offset = faith_envelope.HEADER_SIZE + index * header.record_size
            size = header.plaintext_size(index) + faith_envelope.TAG_SIZE
            source.seek(offset)
            return source.read(size)
    except OSError as error:
        raise EnvelopeIOError(f"cannot read chunk {index} of {path}: {error}", 0) from error

# -------------------------------------------------------------------------
def save_sidecar(path: str, commitment: FileCommitment, leaves: Sequence[bytes]):
    """
    Commitment sidecar: canonical JSON with the commitment fields and the hex leaf digests.
    """
    document = {
        "format": SIDECAR_FORMAT,
        **commitment.to_dict(),
        "alg": commitment.alg_name,
        "leaves": [leaf.hex() for leaf in leaves],
    }
    faith_utils.write_file_atomic(path, faith_utils.canonical_json(document).encode())

# -------------------------------------------------------------------------
def load_sidecar(path: str) -> Tuple[FileCommitment, List[bytes]]:
    """
    Read a sidecar and check that its leaves still reproduce its root.
    """
    try:
        document = json.loads(faith_utils.read_file(path))
    except OSError as error:
        raise NotFoundError(f"commitment sidecar not found: {path}") from error
    except ValueError as error:
        raise InvalidEncodingError(f"commitment sidecar {path} is not valid JSON") from error
    if document.get("format") != SIDECAR_FORMAT:
        raise InvalidEncodingError(f"{path} is not a {SIDECAR_FORMAT} sidecar")

    commitment = FileCommitment.from_dict(document)
    leaves = [bytes.fromhex(leaf) for leaf in document.get("leaves", [])]
    if len(leaves) != commitment.n:
        raise InvalidEncodingError(f"sidecar lists {len(leaves)} leaves for n={commitment.n}")
    if merkle_root(leaves, commitment.chunk_size, commitment.alg_id) != commitment:
        raise InvalidEncodingError("sidecar leaves do not reproduce the stored root")
    return commitment, leaves
