"""
faith_pre.py

Single-hop proxy re-encryption over a pairing group.

Key shapes:
    sk = (s1, s2), pk = (gT^s1, h2^s2)

Algorithms:
    enc        c  = (g1^r, m * pkT^r)
    dec_owner  m  = c2 / e(c1, h2)^s1
    rekeygen   rk = pk2_u^(s1_o)
    reenc      c' = (e(c1, rk), c2)
    dec_user   m  = c2' * c1'^(-1/s2_u)

Only s1 of the owner and s2 of the user take part in the algorithms; the other halves of each key
are generated and published so the key format carries both components.
"""

import json
import os
import sys
from dataclasses import dataclass
from typing import Optional

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_log_debug
import faith_log_info
import faith_utils
from faith_errors import InvalidEncodingError, NotFoundError, TestHookDisabledError
from faith_pairing_core import G1Element, G2srcElement, GroupCtx, GtElement, ctx_for_curve, pairing, scalar_inverse

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

# Type tags of the tagged binary layout
PUBLIC_KEY_TAG = 0x01
LEVEL2_TAG = 0x03
LEVEL1_TAG = 0x04
REKEY_TAG = 0x05

KEY_FILE_FORMAT = "faith-key-v1"

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class SecretKey:
    s1: int
    s2: int


@dataclass(frozen=True)
class PublicKey:
    pkT: GtElement
    pk2: G2srcElement

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(PUBLIC_KEY_TAG, [
            self.pkT.backend.name.encode(), self.pkT.to_bytes(), self.pk2.to_bytes(),
        ])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "PublicKey":
        curve, pkT, pk2 = faith_utils.unpack_tagged(data, PUBLIC_KEY_TAG, 3)
        _check_curve(ctx, curve)
        return cls(pkT=ctx.decode_gt(pkT), pk2=ctx.decode_g2(pk2))

    def digest(self) -> str:
        """
        Hex SHA3-256 of the encoded key, used to name owners on the ledger.
        """
        return faith_utils.sha3_digest(b"FAITH-PK-v1", self.to_bytes()).hex()


@dataclass(frozen=True)
class KeyPair:
    sk: SecretKey
    pk: PublicKey


@dataclass(frozen=True)
class Level2Ciphertext:
    c1: G1Element
    c2: GtElement

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(LEVEL2_TAG, [self.c1.to_bytes(), self.c2.to_bytes()])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "Level2Ciphertext":
        c1, c2 = faith_utils.unpack_tagged(data, LEVEL2_TAG, 2)
        return cls(c1=ctx.decode_g1(c1), c2=ctx.decode_gt(c2))


@dataclass(frozen=True)
class Level1Ciphertext:
    c1p: GtElement
    c2p: GtElement

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(LEVEL1_TAG, [self.c1p.to_bytes(), self.c2p.to_bytes()])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "Level1Ciphertext":
        c1p, c2p = faith_utils.unpack_tagged(data, LEVEL1_TAG, 2)
        return cls(c1p=ctx.decode_gt(c1p), c2p=ctx.decode_gt(c2p))


@dataclass(frozen=True)
class ReKey:
    rk: G2srcElement

    def to_bytes(self) -> bytes:
        return faith_utils.pack_tagged(REKEY_TAG, [self.rk.to_bytes()])

    @classmethod
    def from_bytes(cls, ctx: GroupCtx, data: bytes) -> "ReKey":
        (rk,) = faith_utils.unpack_tagged(data, REKEY_TAG, 1)
        return cls(rk=ctx.decode_g2(rk))

# -------------------------------------------------------------------------
def _check_curve(ctx: GroupCtx, curve: bytes):
    if curve.decode("ascii", errors="replace") != ctx.curve_id:
        raise InvalidEncodingError(f"key encoded for curve {curve!r}, context is {ctx.curve_id}")

# -------------------------------------------------------------------------
def keypair_from_secret(ctx: GroupCtx, s1: int, s2: int) -> KeyPair:
    """
    Derive the public half for a given secret pair.

    Raises:
        InvalidEncodingError: when either secret exponent is 0 mod p.
    """
    s1 %= ctx.p
    s2 %= ctx.p
    if s1 == 0 or s2 == 0:
        raise InvalidEncodingError("secret exponents must be nonzero")
    return KeyPair(sk=SecretKey(s1, s2), pk=PublicKey(pkT=ctx.gT ** s1, pk2=ctx.h2 ** s2))

# -------------------------------------------------------------------------
def keygen(ctx: GroupCtx, rng=None) -> KeyPair:
    """
    Fresh key pair with two independent nonzero secret exponents.
    """
    keypair = keypair_from_secret(ctx, ctx.random_scalar(rng), ctx.random_scalar(rng))
    logger_info.info("Generated a %s key pair.", ctx.curve_id)
    logger_debug.debug("Public key digest %s", keypair.pk.digest())
    return keypair

# -------------------------------------------------------------------------
def random_message(ctx: GroupCtx, rng=None) -> GtElement:
    """
    Uniform GT element used as the key-encapsulation payload.
    """
    return ctx.random_gt(rng)

# -------------------------------------------------------------------------
def _encrypt(ctx: GroupCtx, pk_o: PublicKey, m: GtElement, r: int) -> Level2Ciphertext:
    return Level2Ciphertext(c1=ctx.g1 ** r, c2=m * (pk_o.pkT ** r))

# -------------------------------------------------------------------------
def enc(ctx: GroupCtx, pk_o: PublicKey, m: GtElement, rng=None) -> Level2Ciphertext:
    """
    Second-level encryption of `m` under the owner's public key with fresh randomness.
    """
    return _encrypt(ctx, pk_o, m, ctx.random_scalar(rng))

# -------------------------------------------------------------------------
def enc_with_randomness(ctx: GroupCtx, pk_o: PublicKey, m: GtElement, r: int) -> Level2Ciphertext:
    """
    `enc` with a caller-chosen r, for worked examples in the test suite.

    Raises:
        TestHookDisabledError: unless faith_config.ENABLE_TEST_HOOKS is set.
    """
    if not faith_config.ENABLE_TEST_HOOKS:
        raise TestHookDisabledError("enc_with_randomness is only available with ENABLE_TEST_HOOKS")
    return _encrypt(ctx, pk_o, m, r % ctx.p)

# -------------------------------------------------------------------------
def dec_owner(ctx: GroupCtx, sk_o: SecretKey, c: Level2Ciphertext) -> GtElement:
    """
    Owner-side decryption of a second-level ciphertext: c2 / e(c1, h2)^s1.
    """
    return c.c2 / (pairing(c.c1, ctx.h2) ** sk_o.s1)

# -------------------------------------------------------------------------
def rekeygen(ctx: GroupCtx, sk_o: SecretKey, pk_u: PublicKey) -> ReKey:
    """
    Re-encryption key from owner to user: pk2_u^(s1_o).
    """
    return ReKey(rk=pk_u.pk2 ** sk_o.s1)

# -------------------------------------------------------------------------
def reenc(ctx: GroupCtx, rk: ReKey, c: Level2Ciphertext) -> Level1Ciphertext:
    """
    Proxy transformation.  Only the re-encryption key and the ciphertext are consulted.
    """
    if not isinstance(rk, ReKey) or not isinstance(c, Level2Ciphertext):
        raise InvalidEncodingError("reenc expects (ReKey, Level2Ciphertext)")
    return Level1Ciphertext(c1p=pairing(c.c1, rk.rk), c2p=c.c2)

# -------------------------------------------------------------------------
def dec_user(ctx: GroupCtx, sk_u: SecretKey, c1ct: Level1Ciphertext) -> GtElement:
    """
    Delegatee decryption: c2' * c1'^(-1/s2_u).

    Raises:
        ZeroInverseError: when s2_u is 0 mod p.
    """
    exponent = (-scalar_inverse(sk_u.s2, ctx.p)) % ctx.p
    return c1ct.c2p * (c1ct.c1p ** exponent)

# -------------------------------------------------------------------------
def save_keypair(path: str, ctx: GroupCtx, keypair: KeyPair):
    """
    Write a key file: canonical JSON holding the curve id, both secret exponents and the public key.
    """
    document = {
        "format": KEY_FILE_FORMAT,
        "curve": ctx.curve_id,
        "sk": [ctx.scalar_to_bytes(keypair.sk.s1).hex(), ctx.scalar_to_bytes(keypair.sk.s2).hex()],
        "pk": keypair.pk.to_bytes().hex(),
    }
    faith_utils.write_file_atomic(path, faith_utils.canonical_json(document).encode())
    logger_info.info("Key file written to %s", path)

# -------------------------------------------------------------------------
def save_public_key(path: str, ctx: GroupCtx, pk: PublicKey):
    document = {"format": KEY_FILE_FORMAT, "curve": ctx.curve_id, "pk": pk.to_bytes().hex()}
    faith_utils.write_file_atomic(path, faith_utils.canonical_json(document).encode())

# -------------------------------------------------------------------------
def _read_key_document(path: str) -> dict:
    if not os.path.isfile(path):
        raise NotFoundError(f"key file not found: {path}")
    try:
        document = json.loads(faith_utils.read_file(path))
    except ValueError as error:
        raise InvalidEncodingError(f"key file {path} is not valid JSON") from error
    if not isinstance(document, dict) or document.get("format") != KEY_FILE_FORMAT:
        raise InvalidEncodingError(f"{path} is not a {KEY_FILE_FORMAT} key file")
    return document

# -------------------------------------------------------------------------
def load_keypair(path: str, ctx: Optional[GroupCtx] = None) -> KeyPair:
    """
    Read a key file written by `save_keypair` and check that its public half matches the secret.
    """
    document = _read_key_document(path)
    ctx = ctx or ctx_for_curve(document.get("curve"))
    if "sk" not in document:
        raise InvalidEncodingError(f"{path} holds a public key only")
    try:
        s1, s2 = (ctx.scalar_from_bytes(bytes.fromhex(part)) for part in document["sk"])
        stored_pk = PublicKey.from_bytes(ctx, bytes.fromhex(document["pk"]))
    except (ValueError, TypeError) as error:
        raise InvalidEncodingError(f"malformed key file {path}") from error

    keypair = keypair_from_secret(ctx, s1, s2)
    if keypair.pk != stored_pk:
        raise InvalidEncodingError(f"public key in {path} does not match its secret key")
    return keypair

# -------------------------------------------------------------------------
def load_public_key(path: str, ctx: Optional[GroupCtx] = None) -> PublicKey:
    """
    Read the public key from a key file or a public-key file.
    """
    document = _read_key_document(path)
    ctx = ctx or ctx_for_curve(document.get("curve"))
    try:
        return PublicKey.from_bytes(ctx, bytes.fromhex(document["pk"]))
    except (KeyError, ValueError) as error:
        raise InvalidEncodingError(f"malformed key file {path}") from error
