"""
faith_proofs.py

Proof artifacts of the sharing protocol.

Integrity (circuit "int")
    A transparent, hash-based recursive argument over the file commitment.

    Leaf proof: the prover evaluates the chunk hash, commits to the trace of compression states in
    a SHA3 Merkle tree and opens the IV row, the final row and INT_LEAF_SPOT_CHECKS transitions
    sampled by Fiat-Shamir from the trace root.  The verifier re-runs each opened transition.

    Node proof: produced by `aggregate_pair` only after both children verify.  It carries the
    Merkle node digest and a seal hashing both child seals, so the root seal commits to every
    leaf proof in the tree.

    Root proof: the root node plus INT_ROOT_OPENINGS leaf proofs, sampled by Fiat-Shamir from the
    root seal, each with its authentication path of (digest, seal) siblings padded to
    INT_MAX_TREE_DEPTH.  Exactly INT_ROOT_OPENINGS openings are made whatever the file size, so
    the proof size and the verification work do not depend on n beyond the path length.
    n leaves take n - 1 pair aggregations; promoting the odd node of a level is not one.

Re-encryption (circuit "pre")
    Sigma proof of knowledge of rk with e(c1, rk) = c1':
        A  = e(c1, h2^s)
        ch = SHA3("FAITH-PRE-v1" || c' || c || A) mod p
        z  = h2^s * rk^ch
    accepted iff e(c1, z) = A * c1'^ch and c2' = c2.

Aggregation (circuit "agg")
    N file statements h || c' || c, their integrity and re-encryption proofs, and the binding
    digest SHA3("FAITH-AGG-v1" || x_agg), verified in one call.
"""

import collections
import functools
import json
import multiprocessing
import os
import sys
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_commitment
import faith_config
import faith_log_debug
import faith_log_info
import faith_poseidon
import faith_utils
from faith_errors import (
    AggregationError,
    InvalidEncodingError,
    ProvingError,
    StatementMismatchError,
    TestHookDisabledError,
    UnsupportedParamsError,
)
from faith_pairing_core import G2srcElement, GroupCtx, GtElement, pairing
from faith_pre import Level1Ciphertext, Level2Ciphertext, ReKey

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

CIRCUIT_IDS = ("int", "pre", "agg")
SETUP_VERSION = 1
TRACE_ALG = "sha3-256"

PRE_TAG = b"FAITH-PRE-v1"
AGG_TAG = b"FAITH-AGG-v1"
LEAF_SEAL_TAG = b"FAITH-INT-LEAF-v1"
NODE_SEAL_TAG = b"FAITH-INT-NODE-v1"
ROOT_SAMPLE_TAG = b"FAITH-INT-ROOT-v1"
ROW_TAG = b"FAITH-INT-ROW-v1"
SAMPLE_TAG = b"FAITH-SAMPLE-v1"

# Binary layout type tags
LEAF_PROOF_TAG = 0x10
TRANSITION_TAG = 0x11
LEAF_OPENING_TAG = 0x12
INTEGRITY_PROOF_TAG = 0x13
REENC_PROOF_TAG = 0x14
STATEMENT_TAG = 0x15
AGGREGATED_PROOF_TAG = 0x16
LIST_TAG = 0x1F

REASON_INTEGRITY = "integrity"
REASON_REENC = "reenc"
REASON_BINDING = "binding"
REASON_MALFORMED = "malformed"

# Verification work counters, read by tests and the bench harness
VERIFY_COUNTS = collections.Counter()

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str = ""
    detail: str = ""

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "reason": self.reason or None, "detail": self.detail}


VERIFIED = VerifyResult(True)


def _fail(reason: str, detail: str) -> VerifyResult:
    logger_debug.debug("Verification failed (%s): %s", reason, detail)
    return VerifyResult(False, reason, detail)

# -------------------------------------------------------------------------
def _u64(value: int) -> bytes:
    return value.to_bytes(8, "big")

def _from_u64(data: bytes) -> int:
    if len(data) != 8:
        raise InvalidEncodingError("integer field must be 8 bytes")
    return int.from_bytes(data, "big")

def pack_list(items: Iterable[bytes]) -> bytes:
    return faith_utils.pack_tagged(LIST_TAG, list(items))

def unpack_list(data: bytes) -> List[bytes]:
    return faith_utils.unpack_tagged(data, LIST_TAG)

def _pack_path(path: Sequence[bytes]) -> bytes:
    return b"".join(path)

_ZERO_DIGEST = bytes(faith_commitment.DIGEST_SIZE)

def _unpack_path(data: bytes) -> Tuple[bytes, ...]:
    size = faith_commitment.DIGEST_SIZE
    if len(data) % size:
        raise InvalidEncodingError("authentication path length is not a multiple of 32")
    return tuple(data[i:i + size] for i in range(0, len(data), size))

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class CircuitKeys:
    """
    Transparent keys: the verifying key is the canonical circuit description, the proving key is
    the same description marked for the prover.
    """

    circuit_id: str
    prk: bytes
    vrk: bytes

    @property
    def params(self) -> dict:
        return json.loads(self.vrk)

    @property
    def params_digest(self) -> bytes:
        return faith_utils.sha3_digest(b"FAITH-VRK-v1", self.vrk)

# -------------------------------------------------------------------------
def _poseidon_digest() -> str:
    first, partial, last = faith_poseidon.round_constants()
    flat = [c for row in first for c in row] + list(partial) + [c for row in last for c in row]
    return faith_utils.sha3_digest(b"FAITH-POSEIDON2-v1", *(c.to_bytes(32, "big") for c in flat)).hex()

# -------------------------------------------------------------------------
def default_params() -> dict:
    return {
        "chunk_size": faith_config.DEFAULT_CHUNK_SIZE,
        "hash_alg": faith_config.DEFAULT_HASH_ALG,
        "leaf_checks": faith_config.INT_LEAF_SPOT_CHECKS,
        "root_openings": faith_config.INT_ROOT_OPENINGS,
        "curve": faith_config.DEFAULT_CURVE,
    }

# -------------------------------------------------------------------------
def _circuit_description(circuit_id: str, params: dict) -> dict:
    merged = {**default_params(), **(params or {})}
    chunk_size = merged["chunk_size"]
    if (not isinstance(chunk_size, int) or not faith_utils.is_power_of_two(chunk_size)
            or not faith_config.MIN_CHUNK_SIZE <= chunk_size <= faith_config.MAX_CHUNK_SIZE):
        raise UnsupportedParamsError(f"unsupported chunk_size {chunk_size!r}")
    if merged["hash_alg"] not in faith_commitment.HASHERS:
        raise UnsupportedParamsError(f"unsupported hash algorithm {merged['hash_alg']!r}")
    for name in ("leaf_checks", "root_openings"):
        if not isinstance(merged[name], int) or merged[name] < 1:
            raise UnsupportedParamsError(f"{name} must be a positive integer")

    if circuit_id == "int":
        capacity = faith_commitment.record_capacity(chunk_size)
        hasher = faith_commitment.get_hasher(merged["hash_alg"])
        description = {
            "chunk_size": chunk_size,
            "capacity": capacity,
            "hash_alg": hasher.name,
            "alg_id": hasher.alg_id,
            "element_bytes": faith_commitment.ELEMENT_BYTES,
            "steps": faith_commitment.packed_length(capacity) // 2,
            "leaf_checks": merged["leaf_checks"],
            "root_openings": merged["root_openings"],
            "trace_alg": TRACE_ALG,
        }
        if hasher.name == "poseidon2":
            description["permutation"] = {
                "width": faith_poseidon.WIDTH,
                "alpha": faith_poseidon.ALPHA,
                "full_rounds": faith_poseidon.FULL_ROUNDS,
                "partial_rounds": faith_poseidon.PARTIAL_ROUNDS,
                "constants": _poseidon_digest(),
            }
    elif circuit_id == "pre":
        description = {"curve": merged["curve"], "challenge_tag": PRE_TAG.decode()}
    elif circuit_id == "agg":
        description = {
            "int": setup("int", merged).params_digest.hex(),
            "pre": setup("pre", merged).params_digest.hex(),
            "binding_tag": AGG_TAG.decode(),
        }
    else:
        raise UnsupportedParamsError(f"unknown circuit {circuit_id!r}; choose from {CIRCUIT_IDS}")

    return {"circuit": circuit_id, "version": SETUP_VERSION, **description}

# -------------------------------------------------------------------------
def setup(circuit_id: str, params: Optional[dict] = None) -> CircuitKeys:
    """
    Deterministic transparent setup for one circuit.

    Raises:
        UnsupportedParamsError: unknown circuit or parameter values outside what the backend handles.
    """
    description = _circuit_description(circuit_id, params)
    vrk = faith_utils.canonical_json(description).encode()
    prk = faith_utils.canonical_json({**description, "role": "prover"}).encode()
    keys = CircuitKeys(circuit_id=circuit_id, prk=prk, vrk=vrk)
    logger_debug.debug("Setup %s: vrk %d bytes, digest %s", circuit_id, len(vrk), keys.params_digest.hex())
    return keys

# -------------------------------------------------------------------------
def keys_from_vrk(vrk: bytes) -> CircuitKeys:
    """
    Rebuild keys from a published verifying key; the key must be a setup output.
    """
    try:
        description = json.loads(vrk)
        circuit_id = description["circuit"]
    except (ValueError, KeyError, TypeError) as error:
        raise InvalidEncodingError("malformed verifying key") from error
    prk = faith_utils.canonical_json({**description, "role": "prover"}).encode()
    keys = CircuitKeys(circuit_id=circuit_id, prk=prk, vrk=bytes(vrk))
    if faith_utils.canonical_json(description).encode() != keys.vrk:
        raise InvalidEncodingError("verifying key is not in canonical form")
    return keys

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class _IntegrityParams:
    params_digest: bytes
    capacity: int
    hasher: faith_commitment.ChunkHasher
    steps: int
    leaf_checks: int
    root_openings: int


@functools.lru_cache(maxsize=16)
def _integrity_params(vrk: bytes) -> _IntegrityParams:
    keys = keys_from_vrk(vrk)
    params = keys.params
    if params.get("circuit") != "int":
        raise UnsupportedParamsError("integrity proving needs the 'int' circuit keys")
    return _IntegrityParams(
        params_digest=keys.params_digest,
        capacity=params["capacity"],
        hasher=faith_commitment.get_hasher(params["hash_alg"]),
        steps=params["steps"],
        leaf_checks=params["leaf_checks"],
        root_openings=params["root_openings"],
    )

# -------------------------------------------------------------------------
def sample_indices(seed: bytes, count: int, population: int) -> List[int]:
    """
    `count` distinct indices in [0, population) derived from `seed`, sorted.  Everything when the
    population is not larger than `count`.
    """
    if population <= count:
        return list(range(population))
    chosen = set()
    counter = 0
    while len(chosen) < count:
        draw = faith_utils.sha3_digest(SAMPLE_TAG, seed, _u64(counter))
        chosen.add(int.from_bytes(draw, "big") % population)
        counter += 1
    return sorted(chosen)

def sample_openings(seed: bytes, count: int, population: int) -> List[int]:
    """
    Exactly `count` leaf indices for the root openings, so the proof size does not depend on n.
    A population not larger than `count` is cycled through in order; otherwise `count` distinct
    indices are drawn from `seed`.
    """
    if population <= count:
        return [i % population for i in range(count)]
    return sample_indices(seed, count, population)

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class TransitionOpening:
    step: int
    state: bytes
    block: bytes
    next_state: bytes
    next_block: bytes
    path: Tuple[bytes, ...]
    next_path: Tuple[bytes, ...]

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(TRANSITION_TAG, [
            _u64(self.step), self.state, self.block, self.next_state, self.next_block,
            _pack_path(self.path), _pack_path(self.next_path),
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "TransitionOpening":
        step, state, block, next_state, next_block, path, next_path = faith_utils.unpack_tagged(data, TRANSITION_TAG, 7)
        return cls(_from_u64(step), state, block, next_state, next_block, _unpack_path(path), _unpack_path(next_path))


@dataclass(frozen=True)
class LeafProof:
    index: int
    digest: bytes
    trace_root: bytes
    steps: int
    first_state: bytes
    first_block: bytes
    first_path: Tuple[bytes, ...]
    last_state: bytes
    last_path: Tuple[bytes, ...]
    openings: Tuple[TransitionOpening, ...]
    seal: bytes

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(LEAF_PROOF_TAG, [
            _u64(self.index), self.digest, self.trace_root, _u64(self.steps),
            self.first_state, self.first_block, _pack_path(self.first_path),
            self.last_state, _pack_path(self.last_path),
            pack_list(opening.to_bytes() for opening in self.openings),
            self.seal,
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "LeafProof":
        (index, digest, trace_root, steps, first_state, first_block, first_path,
         last_state, last_path, openings, seal) = faith_utils.unpack_tagged(data, LEAF_PROOF_TAG, 11)
        return cls(
            index=_from_u64(index), digest=digest, trace_root=trace_root, steps=_from_u64(steps),
            first_state=first_state, first_block=first_block, first_path=_unpack_path(first_path),
            last_state=last_state, last_path=_unpack_path(last_path),
            openings=tuple(TransitionOpening.from_bytes(item) for item in unpack_list(openings)),
            seal=seal,
        )


@dataclass(frozen=True)
class NodeProof:
    level: int
    position: int
    digest: bytes
    left_digest: bytes
    right_digest: bytes
    left_seal: bytes
    right_seal: bytes
    seal: bytes


@dataclass(frozen=True)
class LeafOpening:
    leaf: LeafProof
    path: Tuple[Tuple[bytes, bytes], ...]

    # Paths are zero-padded to INT_MAX_TREE_DEPTH entries so every opening encodes to the same size.
    def to_bytes(self) -> bytes:
        max_depth = faith_config.INT_MAX_TREE_DEPTH
        if len(self.path) > max_depth:
            raise InvalidEncodingError(f"opening path longer than {max_depth}")
        padding = [_ZERO_DIGEST] * (max_depth - len(self.path))
        return faith_utils.pack_tagged(LEAF_OPENING_TAG, [
            self.leaf.to_bytes(),
            _u64(len(self.path)),
            _pack_path([digest for digest, _ in self.path] + padding),
            _pack_path([seal for _, seal in self.path] + padding),
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "LeafOpening":
        leaf, length, digests, seals = faith_utils.unpack_tagged(data, LEAF_OPENING_TAG, 4)
        length = _from_u64(length)
        digests, seals = _unpack_path(digests), _unpack_path(seals)
        max_depth = faith_config.INT_MAX_TREE_DEPTH
        if len(digests) != max_depth or len(seals) != max_depth or length > max_depth:
            raise InvalidEncodingError(f"opening path must be padded to {max_depth} entries")
        if any(entry != _ZERO_DIGEST for entry in digests[length:] + seals[length:]):
            raise InvalidEncodingError("opening path padding is not zero")
        return cls(leaf=LeafProof.from_bytes(leaf), path=tuple(zip(digests[:length], seals[:length])))


@dataclass(frozen=True)
class IntegrityProof:
    params_digest: bytes
    n: int
    depth: int
    root_digest: bytes
    root_seal: bytes
    aggregations: int
    openings: Tuple[LeafOpening, ...]

    @property
    def h(self) -> bytes:
        return self.root_digest

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(INTEGRITY_PROOF_TAG, [
            self.params_digest, _u64(self.n), _u64(self.depth), self.root_digest, self.root_seal,
            _u64(self.aggregations), pack_list(opening.to_bytes() for opening in self.openings),
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> "IntegrityProof":
        params_digest, n, depth, root, seal, aggregations, openings = faith_utils.unpack_tagged(
            data, INTEGRITY_PROOF_TAG, 7
        )
        return cls(
            params_digest=params_digest, n=_from_u64(n), depth=_from_u64(depth), root_digest=root,
            root_seal=seal, aggregations=_from_u64(aggregations),
            openings=tuple(LeafOpening.from_bytes(item) for item in unpack_list(openings)),
        )

# -------------------------------------------------------------------------
def _block_bytes(b0: int, b1: int) -> bytes:
    return b0.to_bytes(32, "big") + b1.to_bytes(32, "big")

def _block_ints(data: bytes) -> Tuple[int, int]:
    if len(data) != 64:
        raise InvalidEncodingError("trace block must be 64 bytes")
    return int.from_bytes(data[:32], "big"), int.from_bytes(data[32:], "big")

def _row(step: int, state: bytes, block: bytes) -> bytes:
    return faith_utils.sha3_digest(ROW_TAG, _u64(step), state, block)

def _leaf_seal(params_digest: bytes, index: int, digest: bytes, trace_root: bytes) -> bytes:
    return faith_utils.sha3_digest(LEAF_SEAL_TAG, params_digest, _u64(index), digest, trace_root)

def _node_seal(params_digest: bytes, digest: bytes, left_seal: bytes, right_seal: bytes) -> bytes:
    return faith_utils.sha3_digest(NODE_SEAL_TAG, params_digest, digest, left_seal, right_seal)

# -------------------------------------------------------------------------
def prove_chunk(prk_int: CircuitKeys, chunk: bytes, index: int) -> LeafProof:
    """
    Leaf integrity proof that the public digest is the chunk hash of `chunk`.

    Raises:
        ProvingError: the chunk does not fit the circuit, or the prover ran out of resources.
    """
    params = _integrity_params(prk_int.vrk)
    hasher = params.hasher
    try:
        elems = faith_commitment.pack_chunk(chunk, params.capacity)
        states = hasher.trace(elems)
    except InvalidEncodingError as error:
        raise ProvingError(str(error), index) from error
    except MemoryError as error:
        raise ProvingError("out of memory while tracing the chunk hash", index) from error

    steps = len(elems) // 2
    encoded = [hasher.encode_state(state) for state in states]
    blocks = [_block_bytes(elems[2 * j], elems[2 * j + 1]) for j in range(steps)] + [b""]
    rows = [_row(j, encoded[j], blocks[j]) for j in range(steps + 1)]
    levels = faith_commitment.merkle_levels(rows, TRACE_ALG)
    trace_root = levels[-1][0]
    digest = hasher.output(states[-1])

    seed = _leaf_seal(params.params_digest, index, digest, trace_root)
    openings = tuple(
        TransitionOpening(
            step=j,
            state=encoded[j], block=blocks[j],
            next_state=encoded[j + 1], next_block=blocks[j + 1],
            path=tuple(faith_commitment.merkle_path(levels, j)),
            next_path=tuple(faith_commitment.merkle_path(levels, j + 1)),
        )
        for j in sample_indices(seed, params.leaf_checks, steps)
    )
    return LeafProof(
        index=index, digest=digest, trace_root=trace_root, steps=steps,
        first_state=encoded[0], first_block=blocks[0], first_path=tuple(faith_commitment.merkle_path(levels, 0)),
        last_state=encoded[steps], last_path=tuple(faith_commitment.merkle_path(levels, steps)),
        openings=openings, seal=seed,
    )

# -------------------------------------------------------------------------
def _on_trace(trace_root: bytes, step: int, state: bytes, block: bytes, path: Sequence[bytes]) -> bool:
    return faith_commitment.root_from_path(_row(step, state, block), step, path, TRACE_ALG) == trace_root

# -------------------------------------------------------------------------
def verify_leaf(vrk_int: CircuitKeys, proof: LeafProof, expected_digest: Optional[bytes] = None,
                expected_index: Optional[int] = None) -> VerifyResult:
    """
    Check a leaf proof, optionally against a known digest and position.
    """
    VERIFY_COUNTS["leaf_verify"] += 1
    params = _integrity_params(vrk_int.vrk)
    hasher = params.hasher
    if expected_digest is not None and proof.digest != expected_digest:
        return _fail(REASON_INTEGRITY, f"leaf {proof.index} digest differs from the expected digest")
    if expected_index is not None and proof.index != expected_index:
        return _fail(REASON_INTEGRITY, f"leaf proof for index {proof.index}, expected {expected_index}")
    if proof.steps != params.steps:
        return _fail(REASON_MALFORMED, f"leaf proof has {proof.steps} steps, circuit has {params.steps}")

    depth = faith_commitment.tree_depth(params.steps + 1)
    seal = _leaf_seal(params.params_digest, proof.index, proof.digest, proof.trace_root)
    if proof.seal != seal:
        return _fail(REASON_INTEGRITY, f"leaf {proof.index} seal mismatch")

    try:
        if hasher.decode_state(proof.first_state) != hasher.initial_state():
            return _fail(REASON_INTEGRITY, f"leaf {proof.index} trace does not start at the IV")
        if hasher.output(hasher.decode_state(proof.last_state)) != proof.digest:
            return _fail(REASON_INTEGRITY, f"leaf {proof.index} trace does not end at its digest")
        if len(proof.first_path) != depth or not _on_trace(proof.trace_root, 0, proof.first_state, proof.first_block, proof.first_path):
            return _fail(REASON_INTEGRITY, f"leaf {proof.index} first row not in the trace")
        if len(proof.last_path) != depth or not _on_trace(proof.trace_root, proof.steps, proof.last_state, b"", proof.last_path):
            return _fail(REASON_INTEGRITY, f"leaf {proof.index} last row not in the trace")

        expected_steps = sample_indices(seal, params.leaf_checks, params.steps)
        if [opening.step for opening in proof.openings] != expected_steps:
            return _fail(REASON_INTEGRITY, f"leaf {proof.index} opened the wrong transitions")

        for opening in proof.openings:
            VERIFY_COUNTS["transition_check"] += 1
            j = opening.step
            if len(opening.path) != depth or len(opening.next_path) != depth:
                return _fail(REASON_MALFORMED, f"leaf {proof.index} transition {j} path length")
            if not _on_trace(proof.trace_root, j, opening.state, opening.block, opening.path):
                return _fail(REASON_INTEGRITY, f"leaf {proof.index} transition {j} not in the trace")
            if not _on_trace(proof.trace_root, j + 1, opening.next_state, opening.next_block, opening.next_path):
                return _fail(REASON_INTEGRITY, f"leaf {proof.index} transition {j + 1} not in the trace")
            b0, b1 = _block_ints(opening.block)
            state = hasher.decode_state(opening.state)
            if hasher.encode_state(hasher.absorb(state, b0, b1)) != opening.next_state:
                return _fail(REASON_INTEGRITY, f"leaf {proof.index} transition {j} does not compute")
    except InvalidEncodingError as error:
        return _fail(REASON_MALFORMED, f"leaf {proof.index}: {error}")

    return VERIFIED

# -------------------------------------------------------------------------
def _as_node(vrk_int: CircuitKeys, child: Union[LeafProof, NodeProof]) -> Tuple[int, int, bytes, bytes]:
    """
    (level, position, digest, seal) of a verified child.
    """
    if isinstance(child, LeafProof):
        result = verify_leaf(vrk_int, child)
        if not result:
            raise AggregationError(f"child leaf {child.index} failed verification: {result.detail}")
        return 0, child.index, child.digest, child.seal

    params = _integrity_params(vrk_int.vrk)
    if params.hasher.node(child.left_digest, child.right_digest) != child.digest:
        raise AggregationError(f"child node ({child.level}, {child.position}) digest does not recompute")
    if _node_seal(params.params_digest, child.digest, child.left_seal, child.right_seal) != child.seal:
        raise AggregationError(f"child node ({child.level}, {child.position}) seal does not recompute")
    return child.level, child.position, child.digest, child.seal

# -------------------------------------------------------------------------
def aggregate_pair(prk_int: CircuitKeys, left: Union[LeafProof, NodeProof],
                   right: Union[LeafProof, NodeProof]) -> NodeProof:
    """
    Node proof over two adjacent children, produced only after both verify.  Passing the same
    child twice aggregates the duplicated last node of an odd level.

    Raises:
        AggregationError: a child fails verification or the children are not siblings.
    """
    params = _integrity_params(prk_int.vrk)
    l_level, l_pos, l_digest, l_seal = _as_node(prk_int, left)
    if right is left:
        r_level, r_pos, r_digest, r_seal = l_level, l_pos, l_digest, l_seal
    else:
        r_level, r_pos, r_digest, r_seal = _as_node(prk_int, right)
        if r_level != l_level or l_pos % 2 or r_pos != l_pos + 1:
            raise AggregationError(f"children ({l_level}, {l_pos}) and ({r_level}, {r_pos}) are not siblings")

    digest = params.hasher.node(l_digest, r_digest)
    return NodeProof(
        level=l_level + 1, position=l_pos // 2, digest=digest,
        left_digest=l_digest, right_digest=r_digest, left_seal=l_seal, right_seal=r_seal,
        seal=_node_seal(params.params_digest, digest, l_seal, r_seal),
    )

# -------------------------------------------------------------------------
def _prove_chunk_job(job: Tuple[bytes, bytes, int]) -> LeafProof:
    vrk, chunk, index = job
    return prove_chunk(keys_from_vrk(vrk), chunk, index)

def _aggregate_leaf_pair_job(job: Tuple[bytes, LeafProof, Optional[LeafProof]]) -> NodeProof:
    vrk, left, right = job
    keys = keys_from_vrk(vrk)
    return aggregate_pair(keys, left, left if right is None else right)

# -------------------------------------------------------------------------
def prove_leaves(prk_int: CircuitKeys, chunks: Iterable[bytes], processes: Optional[int] = None) -> List[LeafProof]:
    """
    Leaf proofs for chunks in order, spread over a process pool.
    """
    processes = faith_commitment.worker_count(processes)
    jobs = ((prk_int.vrk, bytes(chunk), index) for index, chunk in enumerate(chunks))
    if processes <= 1:
        proofs = [_prove_chunk_job(job) for job in jobs]
    else:
        proofs = []
        with multiprocessing.Pool(processes) as pool:
            # bounded batches keep only a few chunks per worker in memory
            batch = []
            for job in jobs:
                batch.append(job)
                if len(batch) == processes * 8:
                    proofs.extend(pool.map(_prove_chunk_job, batch))
                    batch = []
            if batch:
                proofs.extend(pool.map(_prove_chunk_job, batch))
    logger_debug.debug("Built %d leaf proofs with %d process(es)", len(proofs), processes)
    return proofs

# -------------------------------------------------------------------------
def prove_integrity(prk_int: CircuitKeys, leaves: Sequence[LeafProof],
                    processes: Optional[int] = None) -> IntegrityProof:
    """
    Aggregate leaf proofs level by level into the root and attach the sampled leaf openings.

    Raises:
        AggregationError: a leaf or node fails verification during aggregation.
    """
    if not leaves:
        raise AggregationError("no leaf proofs to aggregate")
    params = _integrity_params(prk_int.vrk)
    n = len(leaves)
    if faith_commitment.tree_depth(n) > faith_config.INT_MAX_TREE_DEPTH:
        raise AggregationError(f"{n} leaves exceed the maximum tree depth {faith_config.INT_MAX_TREE_DEPTH}")
    for position, leaf in enumerate(leaves):
        if leaf.index != position:
            raise AggregationError(f"leaf proof at position {position} claims index {leaf.index}")

    # (digest, seal) per level, for opening paths
    levels: List[List[Tuple[bytes, bytes]]] = [[(leaf.digest, leaf.seal) for leaf in leaves]]
    aggregations = 0

    if n == 1:
        result = verify_leaf(prk_int, leaves[0])
        if not result:
            raise AggregationError(f"leaf 0 failed verification: {result.detail}")
    else:
        pairs = [(prk_int.vrk, leaves[i], leaves[i + 1] if i + 1 < n else None) for i in range(0, n, 2)]
        processes = faith_commitment.worker_count(processes)
        if processes <= 1:
            nodes = [_aggregate_leaf_pair_job(job) for job in pairs]
        else:
            with multiprocessing.Pool(processes) as pool:
                nodes = pool.map(_aggregate_leaf_pair_job, pairs, chunksize=8)
        # a promoted odd node is not a pair aggregation
        aggregations += n // 2
        levels.append([(node.digest, node.seal) for node in nodes])

        while len(nodes) > 1:
            aggregations += len(nodes) // 2
            nodes = [
                aggregate_pair(prk_int, nodes[i], nodes[i + 1] if i + 1 < len(nodes) else nodes[i])
                for i in range(0, len(nodes), 2)
            ]
            levels.append([(node.digest, node.seal) for node in nodes])

    root_digest, root_seal = levels[-1][0]
    seed = faith_utils.sha3_digest(ROOT_SAMPLE_TAG, params.params_digest, root_digest, _u64(n), root_seal)
    openings = []
    for index in sample_openings(seed, params.root_openings, n):
        path = []
        position = index
        for level in levels[:-1]:
            sibling = position ^ 1
            path.append(level[sibling] if sibling < len(level) else level[position])
            position //= 2
        openings.append(LeafOpening(leaf=leaves[index], path=tuple(path)))

    proof = IntegrityProof(
        params_digest=params.params_digest, n=n, depth=faith_commitment.tree_depth(n),
        root_digest=root_digest, root_seal=root_seal, aggregations=aggregations, openings=tuple(openings),
    )
    logger_info.info("Aggregated %d leaf proofs in %d pair steps (depth %d).", n, aggregations, proof.depth)
    return proof

# -------------------------------------------------------------------------
def verify_integrity(vrk_int: CircuitKeys, h: bytes, proof: IntegrityProof) -> VerifyResult:
    """
    Verify a root integrity proof against the published digest h.
    """
    VERIFY_COUNTS["integrity_verify"] += 1
    params = _integrity_params(vrk_int.vrk)
    if proof.params_digest != params.params_digest:
        return _fail(REASON_MALFORMED, "integrity proof made for different circuit parameters")
    if proof.root_digest != h:
        return _fail(REASON_INTEGRITY, "proof root differs from the published digest")
    if proof.n < 1 or proof.depth != faith_commitment.tree_depth(proof.n):
        return _fail(REASON_MALFORMED, f"depth {proof.depth} does not match n={proof.n}")

    seed = faith_utils.sha3_digest(ROOT_SAMPLE_TAG, params.params_digest, h, _u64(proof.n), proof.root_seal)
    expected = sample_openings(seed, params.root_openings, proof.n)
    if [opening.leaf.index for opening in proof.openings] != expected:
        return _fail(REASON_INTEGRITY, "integrity proof opened the wrong leaves")

    for opening in proof.openings:
        result = verify_leaf(vrk_int, opening.leaf)
        if not result:
            return result
        if len(opening.path) != proof.depth:
            return _fail(REASON_MALFORMED, f"leaf {opening.leaf.index} path length {len(opening.path)}")
        digest, seal = opening.leaf.digest, opening.leaf.seal
        position = opening.leaf.index
        for sibling_digest, sibling_seal in opening.path:
            VERIFY_COUNTS["path_step"] += 1
            if position & 1:
                digest, seal = params.hasher.node(sibling_digest, digest), (sibling_seal, seal)
            else:
                digest, seal = params.hasher.node(digest, sibling_digest), (seal, sibling_seal)
            seal = _node_seal(params.params_digest, digest, *seal)
            position //= 2
        if digest != h or seal != proof.root_seal:
            return _fail(REASON_INTEGRITY, f"leaf {opening.leaf.index} does not authenticate to the root")
    return VERIFIED

# -------------------------------------------------------------------------
def verify_served_chunks(vrk_int: CircuitKeys, proof: IntegrityProof,
                         read_chunk: Callable[[int], bytes]) -> VerifyResult:
    """
    Hash the served chunks at the proof's opened indices and compare them with the opened leaf
    digests.  Catches storage edits made after the proofs were cached.
    """
    params = _integrity_params(vrk_int.vrk)
    for opening in proof.openings:
        index = opening.leaf.index
        try:
            chunk = read_chunk(index)
            digest = faith_commitment.hash_record(chunk, params.capacity, params.hasher.name)
        except InvalidEncodingError as error:
            return _fail(REASON_INTEGRITY, f"served chunk {index} is malformed: {error}")
        if digest != opening.leaf.digest:
            return _fail(REASON_INTEGRITY, f"served chunk {index} does not match its proven digest")
    return VERIFIED

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class ReEncStatement:
    c: Level2Ciphertext
    cp: Level1Ciphertext

    def to_bytes(self) -> bytes:
        """
        x_pre = ser(c') || ser(c)
        """
        return self.cp.to_bytes() + self.c.to_bytes()


@dataclass(frozen=True)
class ReEncProof:
    statement: ReEncStatement
    A: GtElement
    z: G2srcElement

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(REENC_PROOF_TAG, [
            self.statement.cp.to_bytes(), self.statement.c.to_bytes(), self.A.to_bytes(), self.z.to_bytes(),
        ])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "ReEncProof":
        cp, c, A, z = faith_utils.unpack_tagged(data, REENC_PROOF_TAG, 4)
        statement = ReEncStatement(c=Level2Ciphertext.from_bytes(ctx, c), cp=Level1Ciphertext.from_bytes(ctx, cp))
        return cls(statement=statement, A=ctx.decode_gt(A), z=ctx.decode_g2(z))

# -------------------------------------------------------------------------
def reenc_challenge(ctx: GroupCtx, statement: ReEncStatement, A: GtElement) -> int:
    return int.from_bytes(faith_utils.sha3_digest(PRE_TAG, statement.to_bytes(), A.to_bytes()), "big") % ctx.p

# -------------------------------------------------------------------------
def _prove_reenc(ctx: GroupCtx, statement: ReEncStatement, rk: ReKey, s: int) -> ReEncProof:
    if statement.cp.c2p != statement.c.c2:
        raise ProvingError("statement has c2' != c2")
    if pairing(statement.c.c1, rk.rk) != statement.cp.c1p:
        raise ProvingError("re-encryption key does not satisfy e(c1, rk) = c1'")
    A = pairing(statement.c.c1, ctx.h2 ** s)
    ch = reenc_challenge(ctx, statement, A)
    return ReEncProof(statement=statement, A=A, z=(ctx.h2 ** s) * (rk.rk ** ch))

# -------------------------------------------------------------------------
def prove_reenc(ctx: GroupCtx, statement: ReEncStatement, rk: ReKey, rng=None) -> ReEncProof:
    """
    Fiat-Shamir proof that the prover knows rk with e(c1, rk) = c1', for the statement (c, c').

    Raises:
        ProvingError: the witness does not satisfy the statement.
    """
    return _prove_reenc(ctx, statement, rk, ctx.random_scalar(rng))

# -------------------------------------------------------------------------
def prove_reenc_with_nonce(ctx: GroupCtx, statement: ReEncStatement, rk: ReKey, s: int) -> ReEncProof:
    """
    `prove_reenc` with a caller-chosen commitment nonce, for worked transcripts in tests.
    """
    if not faith_config.ENABLE_TEST_HOOKS:
        raise TestHookDisabledError("prove_reenc_with_nonce is only available with ENABLE_TEST_HOOKS")
    return _prove_reenc(ctx, statement, rk, s % ctx.p)

# -------------------------------------------------------------------------
def check_reenc_equation(ctx: GroupCtx, statement: ReEncStatement, A: GtElement, z: G2srcElement, ch: int) -> bool:
    """
    The verifier equation e(c1, z) = A * c1'^ch for an explicit challenge.
    """
    return pairing(statement.c.c1, z) == A * (statement.cp.c1p ** ch)

# -------------------------------------------------------------------------
def simulate_reenc(ctx: GroupCtx, statement: ReEncStatement, z: G2srcElement, ch: int) -> GtElement:
    """
    Simulator commitment for a chosen (z, ch): A = e(c1, z) * c1'^(-ch).
    """
    return pairing(statement.c.c1, z) * (statement.cp.c1p ** ((-ch) % ctx.p))

# -------------------------------------------------------------------------
def verify_reenc(ctx: GroupCtx, statement: ReEncStatement, proof: ReEncProof) -> VerifyResult:
    """
    One pairing and one GT exponentiation, whatever the file size.
    """
    VERIFY_COUNTS["reenc_verify"] += 1
    try:
        if proof.statement != statement:
            return _fail(REASON_REENC, "proof was made for a different statement")
        if statement.cp.c2p != statement.c.c2:
            return _fail(REASON_REENC, "c2' differs from c2")
        ch = reenc_challenge(ctx, statement, proof.A)
        if not check_reenc_equation(ctx, statement, proof.A, proof.z, ch):
            return _fail(REASON_REENC, "pairing equation does not hold")
    except (InvalidEncodingError, TypeError) as error:
        return _fail(REASON_MALFORMED, f"re-encryption proof: {error}")
    return VERIFIED

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class FileStatement:
    """
    One file's share of x_agg: h || ser(c') || ser(c).
    """

    h: bytes
    c: Level2Ciphertext
    cp: Level1Ciphertext

    def to_bytes(self) -> bytes:
        return self.h + self.cp.to_bytes() + self.c.to_bytes()

    @property
    def reenc(self) -> ReEncStatement:
        return ReEncStatement(c=self.c, cp=self.cp)

    def encode(self) -> bytes:
        return faith_utils.pack_tagged(STATEMENT_TAG, [self.h, self.cp.to_bytes(), self.c.to_bytes()])

    @classmethod
    def decode(cls, ctx: GroupCtx, data: bytes) -> "FileStatement":
        h, cp, c = faith_utils.unpack_tagged(data, STATEMENT_TAG, 3)
        return cls(h=h, c=Level2Ciphertext.from_bytes(ctx, c), cp=Level1Ciphertext.from_bytes(ctx, cp))


def x_agg_bytes(statements: Sequence[FileStatement]) -> bytes:
    return b"".join(statement.to_bytes() for statement in statements)


def binding_digest(statements: Sequence[FileStatement]) -> bytes:
    return faith_utils.sha3_digest(AGG_TAG, x_agg_bytes(statements))

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class AggregatedProof:
    params_digest: bytes
    statements: Tuple[FileStatement, ...]
    integrity: Tuple[IntegrityProof, ...]
    reenc: Tuple[ReEncProof, ...]
    binding: bytes

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(AGGREGATED_PROOF_TAG, [
            b"agg", self.params_digest,
            pack_list(statement.encode() for statement in self.statements),
            pack_list(proof.to_bytes() for proof in self.integrity),
            pack_list(proof.to_bytes() for proof in self.reenc),
            self.binding,
        ])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "AggregatedProof":
        circuit, params_digest, statements, integrity, reenc, binding = faith_utils.unpack_tagged(
            data, AGGREGATED_PROOF_TAG, 6
        )
        if circuit != b"agg":
            raise InvalidEncodingError(f"aggregated proof carries circuit id {circuit!r}")
        return cls(
            params_digest=params_digest,
            statements=tuple(FileStatement.decode(ctx, item) for item in unpack_list(statements)),
            integrity=tuple(IntegrityProof.from_bytes(item) for item in unpack_list(integrity)),
            reenc=tuple(ReEncProof.from_bytes(ctx, item) for item in unpack_list(reenc)),
            binding=binding,
        )

# -------------------------------------------------------------------------
def _as_tuple(value) -> tuple:
    return tuple(value) if isinstance(value, (list, tuple)) else (value,)

# -------------------------------------------------------------------------
def aggregate_final(prk_agg: CircuitKeys, integrity: Union[IntegrityProof, Sequence[IntegrityProof]],
                    reenc: Union[ReEncProof, Sequence[ReEncProof]],
                    x_agg: Union[FileStatement, Sequence[FileStatement]]) -> AggregatedProof:
    """
    Combine per-file integrity and re-encryption proofs under one binding digest.

    Raises:
        StatementMismatchError: a proof does not belong to its statement component.
    """
    integrity, reenc, statements = _as_tuple(integrity), _as_tuple(reenc), _as_tuple(x_agg)
    if not statements or not len(integrity) == len(reenc) == len(statements):
        raise StatementMismatchError(
            f"{len(statements)} statements, {len(integrity)} integrity proofs, {len(reenc)} re-encryption proofs"
        )
    for position, (statement, int_proof, pre_proof) in enumerate(zip(statements, integrity, reenc)):
        if int_proof.root_digest != statement.h:
            raise StatementMismatchError(f"file {position}: integrity proof root differs from h")
        if pre_proof.statement != statement.reenc:
            raise StatementMismatchError(f"file {position}: re-encryption proof is for another (c, c')")

    proof = AggregatedProof(
        params_digest=prk_agg.params_digest,
        statements=statements,
        integrity=integrity,
        reenc=reenc,
        binding=binding_digest(statements),
    )
    logger_debug.debug("Aggregated proof over %d file(s), binding %s", len(statements), proof.binding.hex())
    return proof

# -------------------------------------------------------------------------
def verify_aggregated(vrk_agg: CircuitKeys, vrk_int: CircuitKeys, ctx: GroupCtx,
                      x_agg: Union[FileStatement, Sequence[FileStatement]], proof: AggregatedProof) -> VerifyResult:
    """
    Single verification of an aggregated proof against the verifier's own x_agg.

    Checks run in the order integrity, re-encryption, binding, so a failure names the first
    component that does not hold.  Work per file is constant in the file size.
    """
    statements = _as_tuple(x_agg)
    if proof.params_digest != vrk_agg.params_digest:
        return _fail(REASON_MALFORMED, "aggregated proof made for different circuit parameters")
    if vrk_agg.params.get("int") != vrk_int.params_digest.hex():
        return _fail(REASON_MALFORMED, "integrity verifying key does not belong to the aggregation key")
    if not len(proof.integrity) == len(proof.reenc) == len(statements):
        return _fail(REASON_MALFORMED, f"proof covers {len(proof.integrity)} files, statement has {len(statements)}")

    for position, (statement, int_proof) in enumerate(zip(statements, proof.integrity)):
        result = verify_integrity(vrk_int, statement.h, int_proof)
        if not result:
            return VerifyResult(False, result.reason, f"file {position}: {result.detail}")

    for position, (statement, pre_proof) in enumerate(zip(statements, proof.reenc)):
        result = verify_reenc(ctx, statement.reenc, pre_proof)
        if not result:
            return VerifyResult(False, result.reason, f"file {position}: {result.detail}")

    if proof.statements != statements:
        return _fail(REASON_BINDING, "proof is bound to a different x_agg")
    if proof.binding != binding_digest(statements):
        return _fail(REASON_BINDING, "binding digest does not match H(x_agg)")
    return VERIFIED
