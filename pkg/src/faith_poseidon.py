"""
faith_poseidon.py

Poseidon2-style permutation over the BLS12-381 scalar field, width 3 (rate 2, capacity 1).

    S-box            x^5
    full rounds      8 (4 before and 4 after the partial rounds)
    partial rounds   56
    external layer   circ(2, 1, 1)
    internal layer   diag(1, 1, 2) + all-ones

Round constants are a SHA-256 chain seeded with a fixed label, reduced into the field.
"""

import functools
from hashlib import sha256
from typing import List, Tuple

from py_ecc.optimized_bls12_381 import curve_order

FIELD_MODULUS = curve_order
WIDTH = 3
RATE = 2
ALPHA = 5
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 56
CONSTANTS_SEED = b"FAITH-poseidon2-bls12-381-t3"

State = Tuple[int, int, int]

# -------------------------------------------------------------------------
def _sha256_chain(seed: bytes, count: int) -> List[int]:
    state = seed
    values = []
    while len(values) < count:
        state = sha256(state).digest()
        values.append(int.from_bytes(state, "big") % FIELD_MODULUS)
    return values

# -------------------------------------------------------------------------
@functools.lru_cache(maxsize=1)
def round_constants() -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[int, ...], Tuple[Tuple[int, ...], ...]]:
    """
    (first full rounds, partial rounds, last full rounds) constants.
    """
    half = FULL_ROUNDS // 2
    values = _sha256_chain(CONSTANTS_SEED, FULL_ROUNDS * WIDTH + PARTIAL_ROUNDS)
    full = [tuple(values[i * WIDTH:(i + 1) * WIDTH]) for i in range(FULL_ROUNDS)]
    partial = tuple(values[FULL_ROUNDS * WIDTH:])
    return tuple(full[:half]), partial, tuple(full[half:])

# -------------------------------------------------------------------------
def _external(s0: int, s1: int, s2: int) -> State:
    total = s0 + s1 + s2
    return (s0 + total) % FIELD_MODULUS, (s1 + total) % FIELD_MODULUS, (s2 + total) % FIELD_MODULUS

# -------------------------------------------------------------------------
def _full_round(state: State, constants: Tuple[int, ...]) -> State:
    p = FIELD_MODULUS
    s0 = pow((state[0] + constants[0]) % p, ALPHA, p)
    s1 = pow((state[1] + constants[1]) % p, ALPHA, p)
    s2 = pow((state[2] + constants[2]) % p, ALPHA, p)
    return _external(s0, s1, s2)

# -------------------------------------------------------------------------
def permute(state: State) -> State:
    """
    Apply the permutation to a width-3 state of field elements.
    """
    p = FIELD_MODULUS
    first, partial, last = round_constants()

    s0, s1, s2 = _external(*state)
    for constants in first:
        s0, s1, s2 = _full_round((s0, s1, s2), constants)
    for constant in partial:
        s0 = pow((s0 + constant) % p, ALPHA, p)
        total = s0 + s1 + s2
        s0, s1, s2 = (s0 + total) % p, (s1 + total) % p, (2 * s2 + total) % p
    for constants in last:
        s0, s1, s2 = _full_round((s0, s1, s2), constants)
    return s0, s1, s2

# -------------------------------------------------------------------------
def compress(left: int, right: int, tag: int) -> int:
    """
    Two-to-one compression: second lane of permute((tag, left, right)).
    """
    return permute((tag % FIELD_MODULUS, left % FIELD_MODULUS, right % FIELD_MODULUS))[1]
