"""
faith_pairing_core.py

Arithmetic over a pairing-friendly group triple (G1, G2src, GT) with scalar field Z_p.

Three backends implement the same interface:

- `CharmBackend`: the default curve, BN254 through charm-crypto's PairingGroup, which runs the
  PBC C library.  Pairings take a few milliseconds.  Elements use charm's serialized form
  ("<type>:<base64>"); decoding rejects anything that does not re-serialize to the same bytes.
- `Bls12381Backend`: BLS12-381 on py_ecc's optimized pure-Python arithmetic.
  G1 and G2 points use the compressed 48/96-byte encodings of py_ecc's point compression;
  GT elements are encoded as the twelve base-field coefficients of the Fq12 value (576 bytes).
- `ToyBackend`: an exponent-arithmetic oracle for a small prime p.  Every element is represented
  by its discrete log mod p, group multiplication adds exponents and the pairing multiplies them.
  It is used to cross-check the production arithmetic and to reproduce worked examples by hand.

Group elements are immutable wrappers written multiplicatively: `a * b`, `a / b`, `a ** x`.

The symmetric pairing notation maps onto the asymmetric curve as
    g1 -> G1 generator, rk and pk2 -> G2src, g2 -> gT = e(g1, h2).
"""

import collections
import functools
import math
import os
import secrets
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Optional

from py_ecc.bls.g2_primitives import G1_to_pubkey, G2_to_signature, pubkey_to_G1, signature_to_G2, subgroup_check
from py_ecc.optimized_bls12_381 import (
    FQ12,
    G1,
    G2,
    Z1,
    Z2,
    add,
    curve_order,
    eq,
    field_modulus,
    is_inf,
    multiply,
    neg,
    pairing as bls_pairing,
)

# charm-crypto links against PBC and GMP; without them only the pure-Python curves are available.
try:
    from charm.toolbox.pairinggroup import G1 as CHARM_G1
    from charm.toolbox.pairinggroup import G2 as CHARM_G2
    from charm.toolbox.pairinggroup import GT as CHARM_GT
    from charm.toolbox.pairinggroup import ZR as CHARM_ZR
    from charm.toolbox.pairinggroup import PairingGroup
    from charm.toolbox.pairinggroup import pair as charm_pair
except ImportError:  # pragma: no cover
    PairingGroup = None

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_log_debug
import faith_log_info
from faith_errors import ConfigError, InvalidEncodingError, ZeroInverseError

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

GROUP_G1 = "g1"
GROUP_G2 = "g2"
GROUP_GT = "gt"

TOY_MAX_MODULUS = 1 << 16

# -------------------------------------------------------------------------
class GroupBackend(ABC):
    """
    Raw arithmetic for one group triple.  Values are backend-specific; the element wrappers
    below are the public face.
    """

    name: str
    order: int

    def __init__(self):
        # Operation counters used by tests and the bench harness to check verification cost.
        self.counts = collections.Counter()

    @abstractmethod
    def generator(self, group: str) -> Any: ...

    @abstractmethod
    def identity(self, group: str) -> Any: ...

    @abstractmethod
    def op(self, group: str, a: Any, b: Any) -> Any: ...

    @abstractmethod
    def exp(self, group: str, a: Any, exponent: int) -> Any: ...

    @abstractmethod
    def inverse(self, group: str, a: Any) -> Any: ...

    @abstractmethod
    def equal(self, group: str, a: Any, b: Any) -> bool: ...

    @abstractmethod
    def encode(self, group: str, a: Any) -> bytes: ...

    @abstractmethod
    def decode(self, group: str, data: bytes) -> Any: ...

    @abstractmethod
    def pair(self, a: Any, b: Any) -> Any: ...

    @property
    def scalar_size(self) -> int:
        return (self.order.bit_length() + 7) // 8

# -------------------------------------------------------------------------
class Bls12381Backend(GroupBackend):
    """
    BLS12-381 through py_ecc.  GT membership is checked on decode by raising to the group order.
    """

    name = "bls12-381"
    order = curve_order

    GT_COEFF_SIZE = 48

    def generator(self, group):
        if group == GROUP_G1:
            return G1
        if group == GROUP_G2:
            return G2
        return _bls_gt_generator()

    def identity(self, group):
        if group == GROUP_G1:
            return Z1
        if group == GROUP_G2:
            return Z2
        return FQ12.one()

    def op(self, group, a, b):
        if group == GROUP_GT:
            return a * b
        return add(a, b)

    def exp(self, group, a, exponent):
        exponent %= self.order
        if group == GROUP_GT:
            self.counts["gt_exp"] += 1
            return a ** exponent
        self.counts[f"{group}_mul"] += 1
        return multiply(a, exponent)

    def inverse(self, group, a):
        if group == GROUP_GT:
            return a.inv()
        return neg(a)

    def equal(self, group, a, b):
        if group == GROUP_GT:
            return a == b
        return eq(a, b)

    def encode(self, group, a):
        if group == GROUP_G1:
            return bytes(G1_to_pubkey(a))
        if group == GROUP_G2:
            return bytes(G2_to_signature(a))
        return b"".join(int(c).to_bytes(self.GT_COEFF_SIZE, "big") for c in a.coeffs)

    def decode(self, group, data):
        try:
            if group == GROUP_G1:
                if len(data) != 48:
                    raise InvalidEncodingError(f"G1 encoding must be 48 bytes, got {len(data)}")
                point = pubkey_to_G1(data)
            elif group == GROUP_G2:
                if len(data) != 96:
                    raise InvalidEncodingError(f"G2 encoding must be 96 bytes, got {len(data)}")
                point = signature_to_G2(data)
            else:
                return self._decode_gt(data)
        except (ValueError, AssertionError) as error:
            raise InvalidEncodingError(f"malformed {group} point: {error}") from error

        if not is_inf(point) and not subgroup_check(point):
            raise InvalidEncodingError(f"{group} point outside the prime-order subgroup")
        return point

    def _decode_gt(self, data):
        if len(data) != 12 * self.GT_COEFF_SIZE:
            raise InvalidEncodingError(f"GT encoding must be {12 * self.GT_COEFF_SIZE} bytes, got {len(data)}")
        coeffs = [
            int.from_bytes(data[i:i + self.GT_COEFF_SIZE], "big")
            for i in range(0, len(data), self.GT_COEFF_SIZE)
        ]
        if any(c >= field_modulus for c in coeffs):
            raise InvalidEncodingError("GT coefficient not reduced modulo the base field")
        value = FQ12(coeffs)
        if value ** self.order != FQ12.one():
            raise InvalidEncodingError("GT element outside the order-p subgroup")
        return value

    def pair(self, a, b):
        self.counts["pairing"] += 1
        # py_ecc takes the G2 argument first
        return bls_pairing(b, a)

# -------------------------------------------------------------------------
@functools.lru_cache(maxsize=1)
def _bls_gt_generator():
    return bls_pairing(G2, G1)

# -------------------------------------------------------------------------
class CharmBackend(GroupBackend):
    """
    A charm-crypto PairingGroup.  The source generators are hashed from fixed labels so every
    process derives the same ones; gT is their pairing.
    """

    GENERATOR_LABEL = "FAITH-GENERATOR-v1"

    def __init__(self, group_name: str = "BN254", name: str = "bn254"):
        super().__init__()
        if PairingGroup is None:
            raise ConfigError(f"curve {name} needs charm-crypto (PBC); install it or choose --curve bls12-381")
        self.group = PairingGroup(group_name)
        self.name = name
        self.order = int(self.group.order())
        self._types = {GROUP_G1: CHARM_G1, GROUP_G2: CHARM_G2, GROUP_GT: CHARM_GT}
        g1 = self.group.hash(f"{self.GENERATOR_LABEL}/{name}/g1", CHARM_G1)
        g2 = self.group.hash(f"{self.GENERATOR_LABEL}/{name}/g2", CHARM_G2)
        self._generators = {GROUP_G1: g1, GROUP_G2: g2, GROUP_GT: charm_pair(g1, g2)}

    def _scalar(self, exponent: int):
        return self.group.init(CHARM_ZR, exponent % self.order)

    def generator(self, group):
        return self._generators[group]

    def identity(self, group):
        return self.group.init(self._types[group], 1)

    def op(self, group, a, b):
        return a * b

    def exp(self, group, a, exponent):
        if group == GROUP_GT:
            self.counts["gt_exp"] += 1
        else:
            self.counts[f"{group}_mul"] += 1
        return a ** self._scalar(exponent)

    def inverse(self, group, a):
        return a ** self._scalar(self.order - 1)

    def equal(self, group, a, b):
        return a == b

    def encode(self, group, a):
        return bytes(self.group.serialize(a))

    def decode(self, group, data):
        if not bytes(data).startswith(f"{self._types[group]}:".encode()):
            raise InvalidEncodingError(f"{self.name} encoding is not a {group} element")
        try:
            value = self.group.deserialize(bytes(data))
        except Exception as error:  # pylint: disable=broad-except
            raise InvalidEncodingError(f"malformed {group} element: {error}") from error
        if value is None or not self.group.ismember(value):
            raise InvalidEncodingError(f"{group} element outside the order-p subgroup")
        if bytes(self.group.serialize(value)) != bytes(data):
            raise InvalidEncodingError(f"non-canonical {group} encoding")
        return value

    def pair(self, a, b):
        self.counts["pairing"] += 1
        return charm_pair(a, b)

# -------------------------------------------------------------------------
class ToyBackend(GroupBackend):
    """
    Exponent-arithmetic oracle: every group is Z_p written additively in the exponent.
    The generators are 1, the identity is 0 and pairing(a, b) = a * b mod p.
    """

    def __init__(self, p_small: int):
        super().__init__()
        self.order = p_small
        self.name = f"toy-{p_small}"

    def generator(self, group):
        return 1

    def identity(self, group):
        return 0

    def op(self, group, a, b):
        return (a + b) % self.order

    def exp(self, group, a, exponent):
        if group == GROUP_GT:
            self.counts["gt_exp"] += 1
        else:
            self.counts[f"{group}_mul"] += 1
        return (a * exponent) % self.order

    def inverse(self, group, a):
        return (-a) % self.order

    def equal(self, group, a, b):
        return a % self.order == b % self.order

    def encode(self, group, a):
        return int(a).to_bytes(2, "big")

    def decode(self, group, data):
        if len(data) != 2:
            raise InvalidEncodingError(f"toy {group} encoding must be 2 bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= self.order:
            raise InvalidEncodingError(f"toy {group} exponent {value} not reduced mod {self.order}")
        return value

    def pair(self, a, b):
        self.counts["pairing"] += 1
        return (a * b) % self.order

# -------------------------------------------------------------------------
class GroupElement:
    """
    Immutable element of one group of a backend.  Subclasses fix the group.
    """

    __slots__ = ("backend", "value")
    group = ""

    def __init__(self, backend: GroupBackend, value: Any):
        object.__setattr__(self, "backend", backend)
        object.__setattr__(self, "value", value)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _same_group(self, other) -> None:
        if type(other) is not type(self) or other.backend is not self.backend:
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")

    def __mul__(self, other):
        self._same_group(other)
        return type(self)(self.backend, self.backend.op(self.group, self.value, other.value))

    def __truediv__(self, other):
        return self * other.inverse()

    def __pow__(self, exponent: int):
        return type(self)(self.backend, self.backend.exp(self.group, self.value, int(exponent)))

    def inverse(self):
        return type(self)(self.backend, self.backend.inverse(self.group, self.value))

    def is_identity(self) -> bool:
        return self.backend.equal(self.group, self.value, self.backend.identity(self.group))

    def to_bytes(self) -> bytes:
        return self.backend.encode(self.group, self.value)

    def hex(self) -> str:
        return self.to_bytes().hex()

    def __eq__(self, other):
        if type(other) is not type(self) or other.backend is not self.backend:
            return NotImplemented
        return self.backend.equal(self.group, self.value, other.value)

    def __hash__(self):
        return hash((self.group, self.to_bytes()))

    def __repr__(self):
        return f"{type(self).__name__}({self.hex()[:16]}...)"


class G1Element(GroupElement):
    __slots__ = ()
    group = GROUP_G1


class G2srcElement(GroupElement):
    __slots__ = ()
    group = GROUP_G2


class GtElement(GroupElement):
    __slots__ = ()
    group = GROUP_GT

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class GroupCtx:
    """
    Group parameters {G1, G2src, GT, p, e, g1, h2, gT} with gT = pairing(g1, h2).
    """

    backend: GroupBackend
    g1: G1Element
    h2: G2srcElement
    gT: GtElement
    p: int

    @property
    def curve_id(self) -> str:
        return self.backend.name

    @property
    def scalar_size(self) -> int:
        return self.backend.scalar_size

    def decode_g1(self, data: bytes) -> G1Element:
        return G1Element(self.backend, self.backend.decode(GROUP_G1, data))

    def decode_g2(self, data: bytes) -> G2srcElement:
        return G2srcElement(self.backend, self.backend.decode(GROUP_G2, data))

    def decode_gt(self, data: bytes) -> GtElement:
        return GtElement(self.backend, self.backend.decode(GROUP_GT, data))

    def gt_identity(self) -> GtElement:
        return GtElement(self.backend, self.backend.identity(GROUP_GT))

    def random_scalar(self, rng=None) -> int:
        """
        Uniform nonzero scalar in [1, p).
        """
        rng = rng or secrets.SystemRandom()
        return rng.randrange(1, self.p)

    def random_gt(self, rng=None) -> GtElement:
        return self.gT ** self.random_scalar(rng)

    def scalar_to_bytes(self, s: int) -> bytes:
        return (s % self.p).to_bytes(self.scalar_size, "big")

    def scalar_from_bytes(self, data: bytes) -> int:
        value = int.from_bytes(data, "big")
        if value >= self.p:
            raise InvalidEncodingError("scalar not reduced modulo the group order")
        return value

# -------------------------------------------------------------------------
def pairing(a: G1Element, b: G2srcElement) -> GtElement:
    """
    Bilinear map e: G1 x G2src -> GT.
    """
    if not isinstance(a, G1Element) or not isinstance(b, G2srcElement):
        raise InvalidEncodingError("pairing expects (G1Element, G2srcElement)")
    if a.backend is not b.backend:
        raise InvalidEncodingError("pairing arguments come from different contexts")
    return GtElement(a.backend, a.backend.pair(a.value, b.value))

# -------------------------------------------------------------------------
def scalar_inverse(s: int, p: int) -> int:
    """
    Inverse of `s` modulo the prime `p`.

    Raises:
        ZeroInverseError: when s is 0 mod p.
    """
    s %= p
    if s == 0:
        raise ZeroInverseError("zero has no inverse modulo p")
    return pow(s, -1, p)

# -------------------------------------------------------------------------
def _make_ctx(backend: GroupBackend) -> GroupCtx:
    g1 = G1Element(backend, backend.generator(GROUP_G1))
    h2 = G2srcElement(backend, backend.generator(GROUP_G2))
    gT = pairing(g1, h2)
    backend.counts.clear()
    return GroupCtx(backend=backend, g1=g1, h2=h2, gT=gT, p=backend.order)

# -------------------------------------------------------------------------
@functools.lru_cache(maxsize=1)
def bls12_381_ctx() -> GroupCtx:
    """
    The pure-Python BLS12-381 context.  Building it computes e(g1, h2) once; the result is cached.
    """
    logger_debug.debug("Building the BLS12-381 group context.")
    return _make_ctx(Bls12381Backend())

# -------------------------------------------------------------------------
@functools.lru_cache(maxsize=1)
def bn254_ctx() -> GroupCtx:
    """
    The default context on the native BN254 pairing.

    Raises:
        ConfigError: charm-crypto is not installed.
    """
    logger_debug.debug("Building the BN254 group context.")
    return _make_ctx(CharmBackend())

# -------------------------------------------------------------------------
def native_pairing_available() -> bool:
    return PairingGroup is not None

# -------------------------------------------------------------------------
def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for d in range(2, math.isqrt(n) + 1):
        if n % d == 0:
            return False
    return True

# -------------------------------------------------------------------------
@functools.lru_cache(maxsize=None)
def toy_oracle_ctx(p_small: int) -> GroupCtx:
    """
    Exponent-arithmetic context over Z_p_small, for cross-validation.  One context per modulus,
    so elements from separate lookups combine.

    Raises:
        ConfigError: when p_small is not a prime below 2^16.
    """
    if not _is_prime(p_small) or p_small >= TOY_MAX_MODULUS:
        raise ConfigError(f"toy modulus must be a prime below {TOY_MAX_MODULUS}, got {p_small}")
    return _make_ctx(ToyBackend(p_small))

# -------------------------------------------------------------------------
def ctx_for_curve(curve_id: Optional[str]) -> GroupCtx:
    """
    Resolve a curve identifier (as stored in parameter and key files) to a context.
    """
    if curve_id in (None, "bn254"):
        return bn254_ctx()
    if curve_id == Bls12381Backend.name:
        return bls12_381_ctx()
    if curve_id.startswith("toy-"):
        try:
            return toy_oracle_ctx(int(curve_id[4:]))
        except ValueError as error:
            raise ConfigError(f"bad toy curve id {curve_id!r}") from error
    raise ConfigError(f"unsupported curve {curve_id!r}")
