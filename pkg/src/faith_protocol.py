"""
faith_protocol.py

The four actors of the sharing protocol as in-process state machines over the other modules.

    TA  ta_setup           system parameters and circuit keys, published to <data>/params
    DO  do_upload          encrypt + commit in one pass, h on the ledger, <id, C, c> to the SP
        do_grant           rk to the SP for one user and file
        do_open            owner reads back their own upload
    SP  sp_process_grant   c' = reenc(rk, c), proofs, aggregated proof on the ledger
    DU  du_verify          one aggregated-proof verification plus served-chunk sampling
        du_retrieve        verify, then decrypt

SP storage layout under <data>/sp:

    objects/<owner prefix>/<file id>/envelope.faith     C
                                    /key_ct.bin         c
                                    /commitment.json    SP-side commitment sidecar
                                    /leaf_proofs.bin    leaf integrity proofs (built at upload)
                                    /root_proof.bin     root integrity proof (built at first grant)
                                    /meta.json
    grants/<grant id>/grant.bin                         grant message and state
                     /agg_proof.bin                     published aggregated proof

Grant states move one step at a time along requested, rekeyed, proven, published, served,
verified; failed is terminal.
"""

import json
import os
import random
import re
import secrets
import shutil
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_commitment
import faith_config
import faith_envelope
import faith_log_debug
import faith_log_info
import faith_pre
import faith_proofs
import faith_utils
from faith_errors import (
    AggregationError,
    ConfigError,
    DuplicateIdError,
    EnvelopeIOError,
    FaithError,
    GrantStateError,
    InvalidEncodingError,
    NotFoundError,
    ProvingError,
    StatementMismatchError,
    UnknownFileError,
    VerificationFailedError,
)
from faith_ledger import HashRecord, Ledger, ProofRecord
from faith_pairing_core import GroupCtx, ctx_for_curve
from faith_pre import KeyPair, Level1Ciphertext, Level2Ciphertext, PublicKey, ReKey

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

GRANT_STATES = ("requested", "rekeyed", "proven", "published", "served", "verified")
FAILED = "failed"
SP_BEHAVIOURS = ("honest", "corrupt-data", "stale-proof", "corrupt-reenc", "wrong-statement")
CONFIG_KEYS = ("chunk_size", "hash_alg", "cipher", "curve", "leaf_checks", "root_openings")

PARAMS_FILE = "params.json"
GRANT_TAG = 0x20
FILE_ID_PATTERN = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9._-]{0,127}$")

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class SystemParams:
    ctx: GroupCtx
    keys: Dict[str, faith_proofs.CircuitKeys]
    chunk_size: int
    hash_alg: str
    cipher: str
    config: Dict[str, object]

    @property
    def params_digest(self) -> bytes:
        return faith_utils.sha3_digest(
            b"FAITH-PARAMS-v1",
            faith_utils.canonical_json(self.config).encode(),
            *(self.keys[circuit].params_digest for circuit in faith_proofs.CIRCUIT_IDS),
        )

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "params_digest": self.params_digest.hex(),
            "vrk_digests": {circuit: keys.params_digest.hex() for circuit, keys in self.keys.items()},
        }

# -------------------------------------------------------------------------
def validate_config(config: Optional[dict]) -> dict:
    """
    Merge `config` over the defaults and validate it.

    Raises:
        ConfigError: unknown keys or unsupported values.
    """
    merged = {
        "chunk_size": faith_config.DEFAULT_CHUNK_SIZE,
        "hash_alg": faith_config.DEFAULT_HASH_ALG,
        "cipher": faith_config.DEFAULT_CIPHER,
        "curve": faith_config.DEFAULT_CURVE,
        "leaf_checks": faith_config.INT_LEAF_SPOT_CHECKS,
        "root_openings": faith_config.INT_ROOT_OPENINGS,
    }
    unknown = sorted(set(config or {}) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    merged.update(config or {})

    faith_envelope.validate_chunk_size(merged["chunk_size"])
    faith_envelope.cipher_id_for(merged["cipher"])
    faith_commitment.get_hasher(merged["hash_alg"])
    ctx_for_curve(merged["curve"])
    return merged

# -------------------------------------------------------------------------
def ta_setup(config: Optional[dict] = None, directory: Optional[str] = None) -> SystemParams:
    """
    One-time setup.  Circuit keys are transparent, so the same config always yields the same
    parameters digest.  With `directory`, params.json and vrk_<circuit>.json are written there.
    """
    merged = validate_config(config)
    keys = {circuit: faith_proofs.setup(circuit, merged) for circuit in faith_proofs.CIRCUIT_IDS}
    params = SystemParams(
        ctx=ctx_for_curve(merged["curve"]),
        keys=keys,
        chunk_size=merged["chunk_size"],
        hash_alg=merged["hash_alg"],
        cipher=merged["cipher"],
        config=merged,
    )

    if directory:
        directory = faith_utils.ensure_directory(directory)
        for circuit, circuit_keys in keys.items():
            faith_utils.write_file_atomic(os.path.join(directory, f"vrk_{circuit}.json"), circuit_keys.vrk)
        faith_utils.write_file_atomic(
            os.path.join(directory, PARAMS_FILE), faith_utils.canonical_json(params.to_dict()).encode()
        )
        logger_info.info("Published system parameters to %s", directory)

    logger_info.info("TA setup done, params digest %s", params.params_digest.hex())
    return params

# -------------------------------------------------------------------------
def load_params(directory: str) -> SystemParams:
    """
    Reload published parameters and check every verifying key against the recorded digests.
    """
    path = os.path.join(directory, PARAMS_FILE)
    if not os.path.isfile(path):
        raise NotFoundError(f"no system parameters in {directory} (run 'faith setup')")
    try:
        document = json.loads(faith_utils.read_file(path))
    except ValueError as error:
        raise InvalidEncodingError(f"{path} is not valid JSON") from error

    params = ta_setup(document.get("config"))
    for circuit, keys in params.keys.items():
        vrk_path = os.path.join(directory, f"vrk_{circuit}.json")
        if not os.path.isfile(vrk_path) or faith_utils.read_file(vrk_path) != keys.vrk:
            raise ConfigError(f"verifying key {vrk_path} does not match the parameters")
    if document.get("params_digest") != params.params_digest.hex():
        raise ConfigError(f"parameters digest in {path} does not match its configuration")
    return params

# -------------------------------------------------------------------------
@dataclass
class Grant:
    grant_id: str
    file_id: str
    owner: str
    pk_u: PublicKey
    rk: Optional[ReKey] = None
    cp: Optional[Level1Ciphertext] = None
    status: str = "requested"
    cause: str = ""

    def advance(self, status: str) -> "Grant":
        """
        Move to the next state.

        Raises:
            GrantStateError: the move skips or reverses a state, or the grant already failed.
        """
        if self.status == FAILED:
            raise GrantStateError(f"grant {self.grant_id} has failed ({self.cause})")
        current = GRANT_STATES.index(self.status)
        if status not in GRANT_STATES or GRANT_STATES.index(status) != current + 1:
            raise GrantStateError(f"grant {self.grant_id} cannot move from {self.status} to {status}")
        self.status = status
        logger_debug.debug("Grant %s -> %s", self.grant_id, status)
        return self

    def fail(self, cause: str) -> "Grant":
        if self.status != FAILED:
            self.status = FAILED
            self.cause = cause
            logger_info.error("Grant %s failed: %s", self.grant_id, cause)
        return self

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(GRANT_TAG, [
            self.grant_id.encode(), self.file_id.encode(), self.owner.encode(), self.pk_u.to_bytes(),
            self.rk.to_bytes() if self.rk else b"", self.cp.to_bytes() if self.cp else b"",
            self.status.encode(), self.cause.encode(),
        ])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "Grant":
        grant_id, file_id, owner, pk_u, rk, cp, status, cause = faith_utils.unpack_tagged(data, GRANT_TAG, 8)
        status = status.decode()
        if status not in GRANT_STATES and status != FAILED:
            raise InvalidEncodingError(f"unknown grant status {status!r}")
        return cls(
            grant_id=grant_id.decode(), file_id=file_id.decode(), owner=owner.decode(),
            pk_u=PublicKey.from_bytes(ctx, pk_u),
            rk=ReKey.from_bytes(ctx, rk) if rk else None,
            cp=Level1Ciphertext.from_bytes(ctx, cp) if cp else None,
            status=status, cause=cause.decode(),
        )

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class StoredObject:
    file_id: str
    owner: str
    directory: str
    c: Level2Ciphertext
    commitment: faith_commitment.FileCommitment

    @property
    def envelope_path(self) -> str:
        return os.path.join(self.directory, "envelope.faith")

    @property
    def leaf_proofs_path(self) -> str:
        return os.path.join(self.directory, "leaf_proofs.bin")

    @property
    def root_proof_path(self) -> str:
        return os.path.join(self.directory, "root_proof.bin")


@dataclass(frozen=True)
class ServedBundle:
    """
    What the SP returns to a DU query: <id, C, c, c'>.
    """

    grant_id: str
    file_id: str
    owner: str
    envelope_path: str
    c: Level2Ciphertext
    cp: Level1Ciphertext

# -------------------------------------------------------------------------
def _validate_file_id(file_id: str) -> str:
    if not isinstance(file_id, str) or not FILE_ID_PATTERN.match(file_id):
        raise ConfigError(f"file id {file_id!r} must match {FILE_ID_PATTERN.pattern}")
    return file_id

# -------------------------------------------------------------------------
def _flip_byte(path: str, rng: random.Random) -> int:
    """
    Flip one random bit of an envelope body byte in place and return the offset.
    """
    size = os.path.getsize(path)
    start = faith_envelope.HEADER_SIZE if size > faith_envelope.HEADER_SIZE else 0
    offset = rng.randrange(start, size)
    with open(path, "r+b") as handle:
        handle.seek(offset)
        value = handle.read(1)[0]
        handle.seek(offset)
        handle.write(bytes([value ^ (1 << rng.randrange(8))]))
    logger_debug.debug("Flipped a bit at offset %d of %s", offset, path)
    return offset

# -------------------------------------------------------------------------
class StorageProvider:
    """
    Off-chain storage and proving.  `behaviour` selects an honest SP or one of the injected
    faults used to exercise the verifier.
    """

    def __init__(self, params: SystemParams, ledger: Ledger, directory: str,
                 behaviour: str = faith_config.DEFAULT_SP_BEHAVIOUR, processes: Optional[int] = None,
                 rng: Optional[random.Random] = None):
        if behaviour not in SP_BEHAVIOURS:
            raise ConfigError(f"unknown SP behaviour {behaviour!r}; choose from {SP_BEHAVIOURS}")
        self.params = params
        self.ledger = ledger
        self.directory = faith_utils.ensure_directory(directory)
        self.behaviour = behaviour
        self.processes = processes
        self.rng = rng or random.Random()
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # ---------------------------------------------------------------------
    def _object_dir(self, owner: str, file_id: str) -> str:
        return os.path.join(self.directory, "objects", owner[:16], _validate_file_id(file_id))

    def _grant_dir(self, grant_id: str) -> str:
        return os.path.join(self.directory, "grants", _validate_file_id(grant_id))

    def _lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(key, threading.Lock())

    # ---------------------------------------------------------------------
    def _records(self, envelope_path: str):
        with open(envelope_path, "rb") as source:
            header = faith_envelope.read_header(source)
            if header.record_count == 0:
                yield b""
                return
            for _, record in faith_envelope.iter_records(source, header):
                yield record

    def _prove_object(self, obj_dir: str) -> faith_commitment.FileCommitment:
        keys = self.params.keys["int"]
        leaves = faith_proofs.prove_leaves(keys, self._records(os.path.join(obj_dir, "envelope.faith")), self.processes)
        faith_utils.write_file_atomic(
            os.path.join(obj_dir, "leaf_proofs.bin"),
            faith_proofs.pack_list(leaf.to_bytes() for leaf in leaves),
        )
        digests = [leaf.digest for leaf in leaves]
        commitment = faith_commitment.merkle_root(digests, self.params.chunk_size, self.params.hash_alg)
        faith_commitment.save_sidecar(os.path.join(obj_dir, "commitment.json"), commitment, digests)
        root_path = os.path.join(obj_dir, "root_proof.bin")
        if os.path.exists(root_path):
            os.remove(root_path)
        return commitment

    def store(self, file_id: str, owner: str, envelope_path: str, c: Level2Ciphertext) -> StoredObject:
        """
        Accept <id, C, c>, move C into storage and build the leaf proofs eagerly.
        """
        obj_dir = self._object_dir(owner, file_id)
        if os.path.exists(os.path.join(obj_dir, "meta.json")):
            raise DuplicateIdError(f"SP already stores {file_id!r} for this owner")
        faith_utils.ensure_directory(obj_dir)
        shutil.move(envelope_path, os.path.join(obj_dir, "envelope.faith"))
        faith_utils.write_file_atomic(os.path.join(obj_dir, "key_ct.bin"), c.to_bytes())
        commitment = self._prove_object(obj_dir)
        faith_utils.write_file_atomic(
            os.path.join(obj_dir, "meta.json"),
            faith_utils.canonical_json({"file_id": file_id, "owner": owner}).encode(),
        )
        logger_info.info("SP stored %s (%d chunks) with leaf proofs.", file_id, commitment.n)
        return self.object(owner, file_id)

    def object(self, owner: str, file_id: str) -> StoredObject:
        obj_dir = self._object_dir(owner, file_id)
        if not os.path.isfile(os.path.join(obj_dir, "meta.json")):
            raise UnknownFileError(f"SP has no file {file_id!r} for this owner")
        commitment, _ = faith_commitment.load_sidecar(os.path.join(obj_dir, "commitment.json"))
        c = Level2Ciphertext.from_bytes(self.params.ctx, faith_utils.read_file(os.path.join(obj_dir, "key_ct.bin")))
        return StoredObject(file_id=file_id, owner=owner, directory=obj_dir, c=c, commitment=commitment)

    def leaf_proofs(self, obj: StoredObject) -> List[faith_proofs.LeafProof]:
        data = faith_utils.read_file(obj.leaf_proofs_path)
        return [faith_proofs.LeafProof.from_bytes(item) for item in faith_proofs.unpack_list(data)]

    def integrity_proof(self, owner: str, file_id: str) -> faith_proofs.IntegrityProof:
        """
        Root integrity proof, aggregated on first use and cached beside the object.
        """
        obj = self.object(owner, file_id)
        with self._lock(obj.directory):
            if os.path.isfile(obj.root_proof_path):
                return faith_proofs.IntegrityProof.from_bytes(faith_utils.read_file(obj.root_proof_path))
            proof = faith_proofs.prove_integrity(self.params.keys["int"], self.leaf_proofs(obj), self.processes)
            faith_utils.write_file_atomic(obj.root_proof_path, proof.to_bytes())
            return proof

    def read_chunk(self, owner: str, file_id: str, index: int) -> bytes:
        return faith_commitment.read_chunk(self.object(owner, file_id).envelope_path, index)

    # ---------------------------------------------------------------------
    def save_grant(self, grant: Grant):
        grant_dir = faith_utils.ensure_directory(self._grant_dir(grant.grant_id))
        faith_utils.write_file_atomic(os.path.join(grant_dir, "grant.bin"), grant.to_bytes())

    def receive_grant(self, grant: Grant):
        if os.path.exists(os.path.join(self._grant_dir(grant.grant_id), "grant.bin")):
            raise DuplicateIdError(f"grant id {grant.grant_id!r} already in use")
        self.save_grant(grant)

    def grant(self, grant_id: str) -> Grant:
        path = os.path.join(self._grant_dir(grant_id), "grant.bin")
        if not os.path.isfile(path):
            raise NotFoundError(f"unknown grant {grant_id!r}")
        return Grant.from_bytes(self.params.ctx, faith_utils.read_file(path))

    def grants(self) -> List[Grant]:
        root = os.path.join(self.directory, "grants")
        if not os.path.isdir(root):
            return []
        return [self.grant(grant_id) for grant_id in sorted(os.listdir(root))]

    # ---------------------------------------------------------------------
    def process_grant(self, grant_id: str) -> Grant:
        """
        Re-encrypt c for the grantee, prove, aggregate and publish.  Proving failures leave the
        grant failed with the cause recorded.
        """
        grant = self.grant(grant_id)
        if grant.status != "rekeyed":
            raise GrantStateError(f"grant {grant_id} is {grant.status}, expected rekeyed")

        params = self.params
        ctx = params.ctx
        try:
            obj = self.object(grant.owner, grant.file_id)
            h = bytes.fromhex(self.ledger.get_hash(grant.owner, grant.file_id).root)

            if self.behaviour in ("corrupt-data", "stale-proof"):
                # the stale variant keeps the cached proofs built before the edit
                self.integrity_proof(grant.owner, grant.file_id)
                _flip_byte(obj.envelope_path, self.rng)
                if self.behaviour == "corrupt-data":
                    self._prove_object(obj.directory)

            int_proof = self.integrity_proof(grant.owner, grant.file_id)
            cp = faith_pre.reenc(ctx, grant.rk, obj.c)
            pre_proof = faith_proofs.prove_reenc(ctx, faith_proofs.ReEncStatement(c=obj.c, cp=cp), grant.rk)
            grant.cp = cp
            grant.advance("proven")

            statement = faith_proofs.FileStatement(h=h, c=obj.c, cp=cp)
            if self.behaviour == "honest" or self.behaviour == "stale-proof":
                agg = faith_proofs.aggregate_final(params.keys["agg"], int_proof, pre_proof, statement)
            else:
                agg, grant.cp = self._forge(statement, int_proof, pre_proof)
        except (ProvingError, AggregationError, StatementMismatchError, InvalidEncodingError, EnvelopeIOError) as error:
            grant.fail(f"{error.code}: {error}")
            self.save_grant(grant)
            return grant

        proof_bytes = agg.to_bytes()
        faith_utils.write_file_atomic(os.path.join(self._grant_dir(grant_id), "agg_proof.bin"), proof_bytes)
        self.ledger.put_proof(ProofRecord(
            file_id=grant.file_id, owner=grant.owner, grant_id=grant_id,
            binding=agg.binding.hex(), proof=proof_bytes,
        ))
        grant.advance("published")
        self.save_grant(grant)
        logger_info.info("SP published grant %s (%d proof bytes, behaviour %s).", grant_id, len(proof_bytes), self.behaviour)
        return grant

    def _forge(self, statement: faith_proofs.FileStatement, int_proof: faith_proofs.IntegrityProof,
               pre_proof: faith_proofs.ReEncProof) -> Tuple[faith_proofs.AggregatedProof, Level1Ciphertext]:
        """
        Assemble a dishonest aggregated proof directly, bypassing aggregate_final's checks.
        """
        ctx = self.params.ctx
        cp = statement.cp
        if self.behaviour == "corrupt-data":
            statement = replace(statement, h=int_proof.root_digest)
        elif self.behaviour == "corrupt-reenc":
            cp = Level1Ciphertext(c1p=cp.c1p * ctx.gT, c2p=cp.c2p)
            statement = replace(statement, cp=cp)
            pre_proof = replace(pre_proof, statement=statement.reenc)
        statements = (statement,)
        if self.behaviour == "wrong-statement":
            # bind the proof to another file's digest while serving this file
            statements = (replace(statement, h=faith_utils.sha3_digest(b"other-file", statement.h)),)
        agg = faith_proofs.AggregatedProof(
            params_digest=self.params.keys["agg"].params_digest,
            statements=statements,
            integrity=(int_proof,),
            reenc=(pre_proof,),
            binding=faith_proofs.binding_digest(statements),
        )
        return agg, cp

    def process_grants(self, grant_ids: List[str], threads: int = 1) -> List[Grant]:
        """
        Process several grants concurrently; ledger appends stay serialized.
        """
        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            return list(executor.map(self.process_grant, grant_ids))

    # ---------------------------------------------------------------------
    def serve(self, grant_id: str) -> ServedBundle:
        """
        Answer a DU query with <id, C, c, c'>.
        """
        grant = self.grant(grant_id)
        if grant.status == "published":
            grant.advance("served")
            self.save_grant(grant)
        elif grant.status not in ("served", "verified"):
            raise GrantStateError(f"grant {grant_id} is {grant.status}, nothing to serve")
        obj = self.object(grant.owner, grant.file_id)
        return ServedBundle(
            grant_id=grant_id, file_id=grant.file_id, owner=grant.owner,
            envelope_path=obj.envelope_path, c=obj.c, cp=grant.cp,
        )

    def report_verified(self, grant_id: str, result: faith_proofs.VerifyResult):
        grant = self.grant(grant_id)
        if result.ok:
            if grant.status == "served":
                grant.advance("verified")
        else:
            grant.fail(f"verification failed: {result.reason}")
        self.save_grant(grant)

# -------------------------------------------------------------------------
@dataclass
class FaithSystem:
    """
    One deployment: parameters, ledger and SP under a data directory.
    """

    params: SystemParams
    ledger: Ledger
    sp: StorageProvider
    data_dir: str
    work_dir: str = field(default="")

    @classmethod
    def create(cls, data_dir: str, params: SystemParams, behaviour: str = faith_config.DEFAULT_SP_BEHAVIOUR,
               processes: Optional[int] = None, rng: Optional[random.Random] = None) -> "FaithSystem":
        data_dir = faith_utils.ensure_directory(data_dir)
        ledger = Ledger(os.path.join(data_dir, faith_config.LEDGER_DIRECTORY_NAME))
        sp = StorageProvider(params, ledger, os.path.join(data_dir, faith_config.SP_DIRECTORY_NAME),
                             behaviour, processes, rng)
        work_dir = faith_utils.ensure_directory(os.path.join(data_dir, "tmp"))
        return cls(params=params, ledger=ledger, sp=sp, data_dir=data_dir, work_dir=work_dir)

    @classmethod
    def open(cls, data_dir: str, behaviour: str = faith_config.DEFAULT_SP_BEHAVIOUR,
             processes: Optional[int] = None, params_dir: Optional[str] = None) -> "FaithSystem":
        params = load_params(params_dir or os.path.join(data_dir, faith_config.PARAMS_DIRECTORY_NAME))
        return cls.create(data_dir, params, behaviour, processes)

# -------------------------------------------------------------------------
def owner_id(pk: PublicKey) -> str:
    return pk.digest()

# -------------------------------------------------------------------------
def do_upload(system: FaithSystem, owner: KeyPair, path: str, file_id: Optional[str] = None,
              verify_sp: bool = faith_config.DEFAULT_DO_VERIFY_UPLOAD, rng=None) -> Tuple[StoredObject, HashRecord]:
    """
    Encrypt and commit `path` in one streaming pass, hand <id, C, c> to the SP and record h.

    Raises:
        NotFoundError: the file does not exist.
        DuplicateIdError: the owner already uploaded this file id.
        VerificationFailedError: with verify_sp, the SP's integrity proof does not match h.
    """
    params = system.params
    ctx = params.ctx
    if not os.path.isfile(path):
        raise NotFoundError(f"file not found: {path}")
    file_id = _validate_file_id(file_id or os.path.basename(path))
    owner_digest = owner_id(owner.pk)
    try:
        system.ledger.get_hash(owner_digest, file_id)
        raise DuplicateIdError(f"file id {file_id!r} already recorded for this owner")
    except NotFoundError:
        pass

    faith_utils.log_separator_info(logger_info)
    logger_info.info("DO upload of %s as %s", path, file_id)

    m = faith_pre.random_message(ctx, rng)
    key = faith_envelope.kem_derive(m)
    c = faith_pre.enc(ctx, owner.pk, m, rng)

    envelope_path = os.path.join(system.work_dir, f"{file_id}.{secrets.token_hex(4)}.faith")
    with faith_commitment.CommitmentBuilder(params.chunk_size, params.hash_alg, system.sp.processes) as builder:
        try:
            length = os.path.getsize(path)
            with open(path, "rb") as source, open(envelope_path, "wb") as destination:
                faith_envelope.se_encrypt(
                    key, source, destination, length, chunk_size=params.chunk_size, cipher=params.cipher,
                    on_record=lambda _, record: builder.add(record),
                )
        except OSError as error:
            raise EnvelopeIOError(f"cannot encrypt {path}: {error}", 0) from error
        commitment, _ = builder.finish()

    obj = system.sp.store(file_id, owner_digest, envelope_path, c)
    record = HashRecord(
        file_id=file_id, owner=owner_digest, root=commitment.root.hex(), alg_id=commitment.alg_id,
        n=commitment.n, chunk_size=commitment.chunk_size,
    )
    height = system.ledger.put_hash(record)
    record = replace(record, height=height)

    if verify_sp:
        result = faith_proofs.verify_integrity(
            params.keys["int"], commitment.root, system.sp.integrity_proof(owner_digest, file_id)
        )
        if not result:
            raise VerificationFailedError(result.reason, result.detail)
        logger_info.info("DO verified the SP integrity proof for %s.", file_id)

    logger_info.info("Upload of %s done: %d chunks, h=%s, height %d", file_id, commitment.n, commitment.root.hex(), height)
    return obj, record

# -------------------------------------------------------------------------
def do_grant(system: FaithSystem, owner: KeyPair, pk_u: PublicKey, file_id: str,
             grant_id: Optional[str] = None) -> Grant:
    """
    Send rk for (file, user) to the SP.  The DO keeps nothing per grant.

    Raises:
        UnknownFileError: the SP does not hold the file.
    """
    owner_digest = owner_id(owner.pk)
    system.sp.object(owner_digest, file_id)
    grant = Grant(
        grant_id=_validate_file_id(grant_id or f"g-{secrets.token_hex(8)}"),
        file_id=file_id, owner=owner_digest, pk_u=pk_u,
    )
    grant.rk = faith_pre.rekeygen(system.params.ctx, owner.sk, pk_u)
    grant.advance("rekeyed")
    system.sp.receive_grant(grant)
    logger_info.info("DO granted %s on %s to %s", grant.grant_id, file_id, pk_u.digest()[:16])
    return grant

# -------------------------------------------------------------------------
def sp_process_grant(system: FaithSystem, grant_id: str) -> Grant:
    return system.sp.process_grant(grant_id)

# -------------------------------------------------------------------------
def _statement_for(system: FaithSystem, bundle: ServedBundle) -> Tuple[faith_proofs.FileStatement, HashRecord]:
    hash_record = system.ledger.get_hash(bundle.owner, bundle.file_id)
    if bundle.cp is None:
        raise GrantStateError(f"grant {bundle.grant_id} has no re-encrypted key")
    statement = faith_proofs.FileStatement(h=bytes.fromhex(hash_record.root), c=bundle.c, cp=bundle.cp)
    return statement, hash_record

# -------------------------------------------------------------------------
def du_verify(system: FaithSystem, grant_id: str) -> Tuple[faith_proofs.VerifyResult, ServedBundle]:
    """
    Fetch h and the aggregated proof from the ledger and <C, c, c'> from the SP, then verify:
    one aggregated-proof check plus hashing the served chunks at the opened indices.
    """
    params = system.params
    bundle = system.sp.serve(grant_id)
    statement, hash_record = _statement_for(system, bundle)
    proof_record = system.ledger.get_proof(grant_id)

    try:
        proof = faith_proofs.AggregatedProof.from_bytes(params.ctx, proof_record.proof)
    except (InvalidEncodingError, ValueError) as error:
        result = faith_proofs.VerifyResult(False, faith_proofs.REASON_MALFORMED, str(error))
    else:
        result = faith_proofs.verify_aggregated(params.keys["agg"], params.keys["int"], params.ctx, statement, proof)
        if result and proof.integrity[0].n != hash_record.n:
            result = faith_proofs.VerifyResult(False, faith_proofs.REASON_INTEGRITY, "chunk count differs from the ledger")
        if result:
            result = faith_proofs.verify_served_chunks(
                params.keys["int"], proof.integrity[0],
                lambda index: _served_chunk(bundle.envelope_path, index),
            )

    system.sp.report_verified(grant_id, result)
    logger_info.info("DU verification of grant %s: %s", grant_id, "ok" if result else result.reason)
    return result, bundle

def _served_chunk(envelope_path: str, index: int) -> bytes:
    try:
        return faith_commitment.read_chunk(envelope_path, index)
    except FaithError as error:
        raise InvalidEncodingError(str(error)) from error

# -------------------------------------------------------------------------
def du_retrieve(system: FaithSystem, user: KeyPair, grant_id: str, out_path: str) -> str:
    """
    Verify, then decrypt.  Nothing is decrypted when verification fails.

    Raises:
        VerificationFailedError: the aggregated proof or served data did not verify.
        AuthFailureError: the envelope does not authenticate under the recovered key (for
            example when `user` is not the grantee).
    """
    result, bundle = du_verify(system, grant_id)
    if not result:
        raise VerificationFailedError(result.reason, result.detail)

    m = faith_pre.dec_user(system.params.ctx, user.sk, bundle.cp)
    faith_envelope.decrypt_file(faith_envelope.kem_derive(m), bundle.envelope_path, out_path)
    logger_info.info("DU retrieved grant %s to %s", grant_id, out_path)
    return out_path

# -------------------------------------------------------------------------
def do_open(system: FaithSystem, owner: KeyPair, file_id: str, out_path: str) -> str:
    """
    Owner self-retrieval through dec_owner, without a grant.
    """
    obj = system.sp.object(owner_id(owner.pk), file_id)
    m = faith_pre.dec_owner(system.params.ctx, owner.sk, obj.c)
    faith_envelope.decrypt_file(faith_envelope.kem_derive(m), obj.envelope_path, out_path)
    return out_path
