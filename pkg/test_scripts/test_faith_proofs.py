import random
from dataclasses import replace

import pytest

import faith_commitment
import faith_config
import faith_errors
import faith_pre
import faith_proofs
from faith_errors import AggregationError, InvalidEncodingError, ProvingError, StatementMismatchError, UnsupportedParamsError
from faith_proofs import REASON_BINDING, REASON_INTEGRITY, REASON_MALFORMED, REASON_REENC

CHUNK = 4096
PARAMS = {"chunk_size": CHUNK, "hash_alg": "sha256", "curve": "toy-65521"}


@pytest.fixture(scope="module")
def keys():
    return {circuit: faith_proofs.setup(circuit, PARAMS) for circuit in faith_proofs.CIRCUIT_IDS}


def _chunks(n, seed=0):
    generator = random.Random(seed)
    capacity = faith_commitment.record_capacity(CHUNK)
    return [generator.randbytes(capacity if i < n - 1 else 100) for i in range(n)]


def _integrity(keys, n, seed=0):
    chunks = _chunks(n, seed)
    leaves = faith_proofs.prove_leaves(keys["int"], chunks, processes=1)
    return chunks, leaves, faith_proofs.prove_integrity(keys["int"], leaves, processes=1)


def _reenc(ctx, rng):
    owner, user = faith_pre.keygen(ctx, rng), faith_pre.keygen(ctx, rng)
    rk = faith_pre.rekeygen(ctx, owner.sk, user.pk)
    c = faith_pre.enc(ctx, owner.pk, faith_pre.random_message(ctx, rng), rng)
    statement = faith_proofs.ReEncStatement(c=c, cp=faith_pre.reenc(ctx, rk, c))
    return statement, rk


# -------------------------------------------------------------------------
def test_setup_is_deterministic():
    first = faith_proofs.setup("agg", PARAMS)
    second = faith_proofs.setup("agg", PARAMS)
    assert first == second
    assert faith_proofs.keys_from_vrk(first.vrk) == first
    assert faith_proofs.setup("int", {**PARAMS, "hash_alg": "sha3-256"}).vrk != faith_proofs.setup("int", PARAMS).vrk


def test_setup_rejects_unsupported():
    with pytest.raises(UnsupportedParamsError):
        faith_proofs.setup("plonk", PARAMS)
    with pytest.raises(UnsupportedParamsError):
        faith_proofs.setup("int", {**PARAMS, "chunk_size": 3000})
    with pytest.raises(UnsupportedParamsError):
        faith_proofs.setup("int", {**PARAMS, "leaf_checks": 0})


def test_keys_from_vrk_needs_canonical_json(keys):
    with pytest.raises(InvalidEncodingError):
        faith_proofs.keys_from_vrk(keys["int"].vrk.replace(b",", b", "))
    with pytest.raises(InvalidEncodingError):
        faith_proofs.keys_from_vrk(b"not json")


def test_int_circuit_describes_default_chunk():
    params = faith_proofs.setup("int", {"hash_alg": "sha256"}).params
    assert params["capacity"] == 65552
    assert params["steps"] == 1058


def test_sample_indices():
    assert faith_proofs.sample_indices(b"seed", 8, 5) == [0, 1, 2, 3, 4]
    picked = faith_proofs.sample_indices(b"seed", 8, 1000)
    assert len(picked) == 8
    assert picked == sorted(set(picked))
    assert picked == faith_proofs.sample_indices(b"seed", 8, 1000)
    assert picked != faith_proofs.sample_indices(b"other", 8, 1000)


def test_sample_openings_always_returns_count():
    assert faith_proofs.sample_openings(b"seed", 8, 3) == [0, 1, 2, 0, 1, 2, 0, 1]
    assert faith_proofs.sample_openings(b"seed", 8, 1) == [0] * 8
    assert faith_proofs.sample_openings(b"seed", 8, 8) == list(range(8))
    assert faith_proofs.sample_openings(b"seed", 8, 1000) == faith_proofs.sample_indices(b"seed", 8, 1000)


# -------------------------------------------------------------------------
def test_leaf_proof_verifies(keys):
    chunk = _chunks(1)[0]
    proof = faith_proofs.prove_chunk(keys["int"], chunk, 4)
    capacity = faith_commitment.record_capacity(CHUNK)
    assert proof.digest == faith_commitment.hash_record(chunk, capacity, "sha256")
    assert len(proof.openings) == faith_config.INT_LEAF_SPOT_CHECKS
    assert faith_proofs.verify_leaf(keys["int"], proof, proof.digest, 4)
    assert faith_proofs.LeafProof.from_bytes(proof.to_bytes()) == proof


def test_leaf_proof_expected_values(keys):
    proof = faith_proofs.prove_chunk(keys["int"], b"chunk", 0)
    result = faith_proofs.verify_leaf(keys["int"], proof, expected_digest=b"\x00" * 32)
    assert result.reason == REASON_INTEGRITY
    assert faith_proofs.verify_leaf(keys["int"], proof, expected_index=1).reason == REASON_INTEGRITY


def test_leaf_proof_tampering(keys):
    proof = faith_proofs.prove_chunk(keys["int"], b"some chunk bytes", 0)
    opening = proof.openings[0]
    bad_state = bytes([opening.next_state[0] ^ 1]) + opening.next_state[1:]
    tampered = replace(proof, openings=(replace(opening, next_state=bad_state),) + proof.openings[1:])
    assert faith_proofs.verify_leaf(keys["int"], tampered).reason == REASON_INTEGRITY

    assert faith_proofs.verify_leaf(keys["int"], replace(proof, digest=b"\x01" * 32)).reason == REASON_INTEGRITY
    assert faith_proofs.verify_leaf(keys["int"], replace(proof, steps=proof.steps + 1)).reason == REASON_MALFORMED


def test_leaf_proof_poseidon():
    int_keys = faith_proofs.setup("int", {"chunk_size": CHUNK, "hash_alg": "poseidon2"})
    proof = faith_proofs.prove_chunk(int_keys, b"poseidon chunk", 2)
    assert proof.steps == 67
    assert faith_proofs.verify_leaf(int_keys, proof, expected_index=2)


def test_oversized_chunk_cannot_be_proven(keys):
    with pytest.raises(ProvingError) as error:
        faith_proofs.prove_chunk(keys["int"], b"x" * (CHUNK + 17), 3)
    assert error.value.chunk_index == 3


# -------------------------------------------------------------------------
def test_integrity_proof_power_of_two(keys):
    chunks, leaves, proof = _integrity(keys, 8)
    assert proof.aggregations == 7
    assert proof.depth == 3
    assert [opening.leaf.index for opening in proof.openings] == list(range(8))
    capacity = faith_commitment.record_capacity(CHUNK)
    expected = faith_commitment.merkle_root(
        [faith_commitment.hash_record(chunk, capacity, "sha256") for chunk in chunks], CHUNK, "sha256"
    )
    assert proof.h == expected.root
    assert faith_proofs.verify_integrity(keys["int"], proof.h, proof)
    assert faith_proofs.IntegrityProof.from_bytes(proof.to_bytes()) == proof


@pytest.mark.parametrize("n", [1, 2, 3, 5, 9])
def test_integrity_proof_aggregation_count(keys, n):
    _, _, proof = _integrity(keys, n)
    assert proof.aggregations == n - 1 == faith_commitment.pair_aggregation_count(n)
    assert proof.depth == faith_commitment.tree_depth(n)
    assert faith_proofs.verify_integrity(keys["int"], proof.h, proof)


def test_small_files_cycle_through_their_leaves(keys):
    _, _, proof = _integrity(keys, 3)
    assert [opening.leaf.index for opening in proof.openings] == [0, 1, 2, 0, 1, 2, 0, 1]
    assert faith_proofs.verify_integrity(keys["int"], proof.h, proof)
    assert faith_proofs.IntegrityProof.from_bytes(proof.to_bytes()) == proof


def test_opening_paths_are_padded(keys):
    _, _, proof = _integrity(keys, 4)
    opening = proof.openings[0]
    encoded = opening.to_bytes()
    assert faith_proofs.LeafOpening.from_bytes(encoded) == opening
    assert len(replace(opening, path=opening.path[:1]).to_bytes()) == len(encoded)
    with pytest.raises(InvalidEncodingError):
        faith_proofs.LeafOpening.from_bytes(encoded[:-1] + b"\x01")


def test_integrity_openings_are_sampled(keys):
    _, _, proof = _integrity(keys, 20)
    assert len(proof.openings) == faith_config.INT_ROOT_OPENINGS
    faith_proofs.VERIFY_COUNTS.clear()
    assert faith_proofs.verify_integrity(keys["int"], proof.h, proof)
    assert faith_proofs.VERIFY_COUNTS["leaf_verify"] == faith_config.INT_ROOT_OPENINGS


def test_integrity_rejects_wrong_digest(keys):
    _, _, proof = _integrity(keys, 4)
    result = faith_proofs.verify_integrity(keys["int"], b"\x00" * 32, proof)
    assert not result
    assert result.reason == REASON_INTEGRITY


def test_integrity_rejects_other_parameters(keys):
    _, _, proof = _integrity(keys, 2)
    other = faith_proofs.setup("int", {**PARAMS, "leaf_checks": 4})
    assert faith_proofs.verify_integrity(other, proof.h, proof).reason == REASON_MALFORMED


def test_integrity_rejects_tampered_path(keys):
    _, _, proof = _integrity(keys, 4)
    opening = proof.openings[1]
    digest, seal = opening.path[0]
    bad = replace(opening, path=((bytes([digest[0] ^ 1]) + digest[1:], seal),) + opening.path[1:])
    tampered = replace(proof, openings=proof.openings[:1] + (bad,) + proof.openings[2:])
    assert faith_proofs.verify_integrity(keys["int"], proof.h, tampered).reason == REASON_INTEGRITY


def test_integrity_rejects_dropped_opening(keys):
    _, _, proof = _integrity(keys, 4)
    assert faith_proofs.verify_integrity(keys["int"], proof.h, replace(proof, openings=proof.openings[1:])).reason \
        == REASON_INTEGRITY


def test_aggregate_pair_checks_children(keys):
    _, leaves, _ = _integrity(keys, 4)
    with pytest.raises(AggregationError):
        faith_proofs.aggregate_pair(keys["int"], leaves[1], leaves[2])
    with pytest.raises(AggregationError):
        faith_proofs.aggregate_pair(keys["int"], leaves[0], replace(leaves[1], digest=b"\x02" * 32))
    node = faith_proofs.aggregate_pair(keys["int"], leaves[2], leaves[3])
    assert (node.level, node.position) == (1, 1)


def test_prove_integrity_input_checks(keys, monkeypatch):
    _, leaves, _ = _integrity(keys, 3)
    with pytest.raises(AggregationError):
        faith_proofs.prove_integrity(keys["int"], [], processes=1)
    with pytest.raises(AggregationError):
        faith_proofs.prove_integrity(keys["int"], [leaves[1], leaves[0]], processes=1)
    monkeypatch.setattr(faith_config, "INT_MAX_TREE_DEPTH", 1)
    with pytest.raises(AggregationError):
        faith_proofs.prove_integrity(keys["int"], leaves, processes=1)


def test_served_chunks(keys):
    chunks, _, proof = _integrity(keys, 6)
    assert faith_proofs.verify_served_chunks(keys["int"], proof, lambda i: chunks[i])

    edited = list(chunks)
    edited[4] = bytes([edited[4][0] ^ 1]) + edited[4][1:]
    result = faith_proofs.verify_served_chunks(keys["int"], proof, lambda i: edited[i])
    assert result.reason == REASON_INTEGRITY
    oversized = faith_proofs.verify_served_chunks(keys["int"], proof, lambda i: b"x" * (CHUNK + 17))
    assert oversized.reason == REASON_INTEGRITY


# -------------------------------------------------------------------------
def test_sigma_trace(toy_ctx):
    owner = faith_pre.keypair_from_secret(toy_ctx, 3, 5)
    user = faith_pre.keypair_from_secret(toy_ctx, 7, 11)
    rk = faith_pre.rekeygen(toy_ctx, owner.sk, user.pk)
    c = faith_pre.enc_with_randomness(toy_ctx, owner.pk, toy_ctx.gT ** 4, 13)
    statement = faith_proofs.ReEncStatement(c=c, cp=faith_pre.reenc(toy_ctx, rk, c))

    proof = faith_proofs.prove_reenc_with_nonce(toy_ctx, statement, rk, 7)
    ch = faith_proofs.reenc_challenge(toy_ctx, statement, proof.A)
    assert proof.A == toy_ctx.gT ** 91
    assert proof.z == toy_ctx.h2 ** ((7 + 33 * ch) % 101)
    assert faith_proofs.check_reenc_equation(toy_ctx, statement, proof.A, proof.z, ch)
    assert faith_proofs.verify_reenc(toy_ctx, statement, proof)


def test_sigma_nonce_hook_disabled(toy_ctx, monkeypatch):
    statement, rk = _reenc(toy_ctx, random.Random(1))
    monkeypatch.setattr(faith_config, "ENABLE_TEST_HOOKS", False)
    with pytest.raises(faith_errors.TestHookDisabledError):
        faith_proofs.prove_reenc_with_nonce(toy_ctx, statement, rk, 7)


def test_sigma_round_trip(wide_toy_ctx, rng):
    statement, rk = _reenc(wide_toy_ctx, rng)
    proof = faith_proofs.prove_reenc(wide_toy_ctx, statement, rk, rng)
    assert faith_proofs.verify_reenc(wide_toy_ctx, statement, proof)
    assert faith_proofs.ReEncProof.from_bytes(wide_toy_ctx, proof.to_bytes()) == proof


def test_sigma_wrong_witness(wide_toy_ctx, rng):
    statement, _ = _reenc(wide_toy_ctx, rng)
    _, other_rk = _reenc(wide_toy_ctx, rng)
    with pytest.raises(ProvingError):
        faith_proofs.prove_reenc(wide_toy_ctx, statement, other_rk, rng)


def test_sigma_rejects_altered_ciphertext(wide_toy_ctx, rng):
    statement, rk = _reenc(wide_toy_ctx, rng)
    proof = faith_proofs.prove_reenc(wide_toy_ctx, statement, rk, rng)
    altered_cp = faith_pre.Level1Ciphertext(c1p=statement.cp.c1p * wide_toy_ctx.gT, c2p=statement.cp.c2p)
    altered = faith_proofs.ReEncStatement(c=statement.c, cp=altered_cp)
    assert faith_proofs.verify_reenc(wide_toy_ctx, altered, proof).reason == REASON_REENC
    forged = replace(proof, statement=altered)
    assert faith_proofs.verify_reenc(wide_toy_ctx, altered, forged).reason == REASON_REENC


def test_sigma_simulator(wide_toy_ctx, rng):
    statement, _ = _reenc(wide_toy_ctx, rng)
    z = wide_toy_ctx.h2 ** 1234
    ch = 4321
    A = faith_proofs.simulate_reenc(wide_toy_ctx, statement, z, ch)
    assert faith_proofs.check_reenc_equation(wide_toy_ctx, statement, A, z, ch)
    if faith_proofs.reenc_challenge(wide_toy_ctx, statement, A) != ch:
        assert not faith_proofs.verify_reenc(wide_toy_ctx, statement, faith_proofs.ReEncProof(statement, A, z))


@pytest.mark.slow
def test_sigma_forgery_rate(wide_toy_ctx, rng):
    statement, _ = _reenc(wide_toy_ctx, rng)
    accepted = 0
    for _ in range(1000):
        forged = faith_proofs.ReEncProof(statement, wide_toy_ctx.random_gt(rng), wide_toy_ctx.h2 ** rng.randrange(65521))
        accepted += bool(faith_proofs.verify_reenc(wide_toy_ctx, statement, forged))
    assert accepted <= 2


def test_sigma_bls(bls_ctx, rng):
    statement, rk = _reenc(bls_ctx, rng)
    proof = faith_proofs.prove_reenc(bls_ctx, statement, rk, rng)
    assert faith_proofs.verify_reenc(bls_ctx, statement, proof)


# -------------------------------------------------------------------------
def _file(keys, ctx, rng, n=3, seed=0):
    _, _, integrity = _integrity(keys, n, seed)
    reenc_statement, rk = _reenc(ctx, rng)
    statement = faith_proofs.FileStatement(h=integrity.h, c=reenc_statement.c, cp=reenc_statement.cp)
    return statement, integrity, faith_proofs.prove_reenc(ctx, reenc_statement, rk, rng)


def test_aggregated_single_file(keys, wide_toy_ctx, rng):
    statement, integrity, pre_proof = _file(keys, wide_toy_ctx, rng)
    proof = faith_proofs.aggregate_final(keys["agg"], integrity, pre_proof, statement)
    assert proof.binding == faith_proofs.binding_digest([statement])
    assert faith_proofs.verify_aggregated(keys["agg"], keys["int"], wide_toy_ctx, statement, proof)

    decoded = faith_proofs.AggregatedProof.from_bytes(wide_toy_ctx, proof.to_bytes())
    assert decoded == proof
    assert faith_proofs.verify_aggregated(keys["agg"], keys["int"], wide_toy_ctx, statement, decoded)


def test_aggregated_multi_file(keys, wide_toy_ctx, rng):
    files = [_file(keys, wide_toy_ctx, rng, n, seed) for seed, n in enumerate((1, 4, 7))]
    statements = [f[0] for f in files]
    proof = faith_proofs.aggregate_final(keys["agg"], [f[1] for f in files], [f[2] for f in files], statements)
    assert faith_proofs.verify_aggregated(keys["agg"], keys["int"], wide_toy_ctx, statements, proof)
    result = faith_proofs.verify_aggregated(keys["agg"], keys["int"], wide_toy_ctx, statements[::-1], proof)
    assert not result


def test_aggregate_final_checks_statement(keys, wide_toy_ctx, rng):
    statement, integrity, pre_proof = _file(keys, wide_toy_ctx, rng)
    with pytest.raises(StatementMismatchError):
        faith_proofs.aggregate_final(keys["agg"], integrity, pre_proof, replace(statement, h=b"\x00" * 32))
    other, _, other_pre = _file(keys, wide_toy_ctx, rng)
    with pytest.raises(StatementMismatchError):
        faith_proofs.aggregate_final(keys["agg"], integrity, other_pre, statement)
    with pytest.raises(StatementMismatchError):
        faith_proofs.aggregate_final(keys["agg"], [integrity, integrity], [pre_proof], [statement, other])


def test_aggregated_failure_reasons(keys, wide_toy_ctx, rng):
    statement, integrity, pre_proof = _file(keys, wide_toy_ctx, rng)
    proof = faith_proofs.aggregate_final(keys["agg"], integrity, pre_proof, statement)

    def verify(x_agg, agg=proof):
        return faith_proofs.verify_aggregated(keys["agg"], keys["int"], wide_toy_ctx, x_agg, agg)

    assert verify(replace(statement, h=b"\x11" * 32)).reason == REASON_INTEGRITY

    altered_cp = faith_pre.Level1Ciphertext(c1p=statement.cp.c1p * wide_toy_ctx.gT, c2p=statement.cp.c2p)
    assert verify(replace(statement, cp=altered_cp)).reason == REASON_REENC

    other = replace(statement, h=b"\x22" * 32)
    rebound = replace(proof, statements=(other,), binding=faith_proofs.binding_digest([other]))
    assert verify(statement, rebound).reason == REASON_BINDING
    assert verify(statement, replace(proof, binding=b"\x00" * 32)).reason == REASON_BINDING

    assert verify(statement, replace(proof, params_digest=b"\x00" * 32)).reason == REASON_MALFORMED
    assert verify([statement, statement]).reason == REASON_MALFORMED


def test_aggregated_decode_rejects_garbage(wide_toy_ctx):
    with pytest.raises(InvalidEncodingError):
        faith_proofs.AggregatedProof.from_bytes(wide_toy_ctx, b"\x16garbage")


def test_verification_work_independent_of_file_size(keys, wide_toy_ctx, rng):
    counts = []
    for n in (9, 40):
        statement, integrity, pre_proof = _file(keys, wide_toy_ctx, rng, n)
        proof = faith_proofs.aggregate_final(keys["agg"], integrity, pre_proof, statement)
        faith_proofs.VERIFY_COUNTS.clear()
        wide_toy_ctx.backend.counts.clear()
        assert faith_proofs.verify_aggregated(keys["agg"], keys["int"], wide_toy_ctx, statement, proof)
        counts.append((faith_proofs.VERIFY_COUNTS["leaf_verify"], faith_proofs.VERIFY_COUNTS["transition_check"],
                       wide_toy_ctx.backend.counts["pairing"]))
    assert counts[0] == counts[1]
    assert counts[0][2] == 1


def test_aggregated_proof_size_independent_of_file_size(keys, wide_toy_ctx, rng):
    sizes = []
    for n in (1, 2, 8, 64):
        statement, integrity, pre_proof = _file(keys, wide_toy_ctx, rng, n)
        proof = faith_proofs.aggregate_final(keys["agg"], integrity, pre_proof, statement)
        assert len(integrity.openings) == faith_config.INT_ROOT_OPENINGS
        sizes.append(len(proof.to_bytes()))
    assert max(sizes) <= 1.1 * min(sizes)
