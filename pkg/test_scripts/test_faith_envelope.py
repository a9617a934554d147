import io
import os

import pytest

import faith_envelope
from faith_envelope import HEADER_SIZE, TAG_SIZE
from faith_errors import AuthFailureError, ConfigError, EnvelopeIOError, InvalidEncodingError, TruncationError

KEY = b"\x42" * 32
CHUNK = 4096


@pytest.mark.parametrize("size", [0, 1, CHUNK - 1, CHUNK, CHUNK + 1, 3 * CHUNK + 17])
@pytest.mark.parametrize("cipher", ["aes-256-gcm", "chacha20-poly1305"])
def test_round_trip(size, cipher):
    data = os.urandom(size)
    envelope = faith_envelope.encrypt_bytes(KEY, data, chunk_size=CHUNK, cipher=cipher)
    records = -(-size // CHUNK)
    assert len(envelope) == HEADER_SIZE + size + records * TAG_SIZE
    assert faith_envelope.decrypt_bytes(KEY, envelope) == data


def test_threads_do_not_change_output():
    data = os.urandom(10 * CHUNK + 5)
    nonce = b"\x01" * 16
    sequential = faith_envelope.encrypt_bytes(KEY, data, chunk_size=CHUNK, nonce=nonce)
    threaded = faith_envelope.encrypt_bytes(KEY, data, chunk_size=CHUNK, nonce=nonce, threads=4)
    assert sequential == threaded
    assert faith_envelope.decrypt_bytes(KEY, threaded, threads=4) == data


def test_header_fields():
    envelope = faith_envelope.encrypt_bytes(KEY, b"x" * 5000, chunk_size=CHUNK, cipher="chacha20-poly1305")
    header = faith_envelope.EnvelopeHeader.from_bytes(envelope)
    assert envelope[:8] == b"FAITH1\x00\x00"
    assert header.cipher_id == 2
    assert header.chunk_size == CHUNK
    assert header.plaintext_length == 5000
    assert header.record_count == 2
    assert header.body_length == 5000 + 2 * TAG_SIZE


@pytest.mark.parametrize("chunk_size", [2048, 8 * 1024 * 1024, 1 << 31])
def test_header_rejects_chunk_size_out_of_range(chunk_size):
    header = faith_envelope.EnvelopeHeader(cipher_id=1, chunk_size=chunk_size, plaintext_length=10, nonce=b"\x00" * 16)
    with pytest.raises(InvalidEncodingError):
        faith_envelope.EnvelopeHeader.from_bytes(header.to_bytes())
    with pytest.raises(InvalidEncodingError):
        faith_envelope.decrypt_bytes(KEY, header.to_bytes() + b"\x00" * (10 + TAG_SIZE))


def test_on_record_sees_each_record_in_order():
    seen = []
    destination = io.BytesIO()
    data = os.urandom(2 * CHUNK + 10)
    faith_envelope.se_encrypt(KEY, io.BytesIO(data), destination, len(data), chunk_size=CHUNK,
                              on_record=lambda index, record: seen.append((index, record)))
    assert [index for index, _ in seen] == [0, 1, 2]
    assert b"".join(record for _, record in seen) == destination.getvalue()[HEADER_SIZE:]


def test_tampered_record_names_chunk():
    envelope = bytearray(faith_envelope.encrypt_bytes(KEY, os.urandom(3 * CHUNK), chunk_size=CHUNK))
    envelope[HEADER_SIZE + CHUNK + TAG_SIZE + 7] ^= 0x01
    with pytest.raises(AuthFailureError) as error:
        faith_envelope.decrypt_bytes(KEY, bytes(envelope))
    assert error.value.chunk_index == 1


def test_swapped_records_fail():
    envelope = faith_envelope.encrypt_bytes(KEY, os.urandom(2 * CHUNK), chunk_size=CHUNK)
    record = CHUNK + TAG_SIZE
    body = envelope[HEADER_SIZE:]
    swapped = envelope[:HEADER_SIZE] + body[record:] + body[:record]
    with pytest.raises(AuthFailureError) as error:
        faith_envelope.decrypt_bytes(KEY, swapped)
    assert error.value.chunk_index == 0


def test_header_is_authenticated():
    envelope = bytearray(faith_envelope.encrypt_bytes(KEY, os.urandom(100), chunk_size=CHUNK))
    envelope[30] ^= 0x80
    with pytest.raises(AuthFailureError):
        faith_envelope.decrypt_bytes(KEY, bytes(envelope))


def test_wrong_key():
    envelope = faith_envelope.encrypt_bytes(KEY, b"secret", chunk_size=CHUNK)
    with pytest.raises(AuthFailureError):
        faith_envelope.decrypt_bytes(b"\x00" * 32, envelope)


def test_truncated_and_trailing_bodies():
    envelope = faith_envelope.encrypt_bytes(KEY, os.urandom(CHUNK + 50), chunk_size=CHUNK)
    with pytest.raises(TruncationError):
        faith_envelope.decrypt_bytes(KEY, envelope[:-1])
    with pytest.raises(InvalidEncodingError):
        faith_envelope.decrypt_bytes(KEY, envelope + b"\x00")
    with pytest.raises(TruncationError):
        faith_envelope.decrypt_bytes(KEY, envelope[:HEADER_SIZE - 1])


def test_bad_magic():
    envelope = faith_envelope.encrypt_bytes(KEY, b"data", chunk_size=CHUNK)
    with pytest.raises(InvalidEncodingError):
        faith_envelope.decrypt_bytes(KEY, b"NOTFAITH" + envelope[8:])


@pytest.mark.parametrize("chunk_size", [0, 1000, 2048, 8 * 1024 * 1024])
def test_chunk_size_validation(chunk_size):
    with pytest.raises(ConfigError):
        faith_envelope.encrypt_bytes(KEY, b"data", chunk_size=chunk_size)


def test_unknown_cipher():
    with pytest.raises(ConfigError):
        faith_envelope.encrypt_bytes(KEY, b"data", chunk_size=CHUNK, cipher="rc4")


def test_source_shorter_than_declared():
    with pytest.raises(EnvelopeIOError):
        faith_envelope.se_encrypt(KEY, io.BytesIO(b"short"), io.BytesIO(), 100, chunk_size=CHUNK)


def test_decrypt_file_leaves_nothing_on_failure(tmp_path):
    plain = tmp_path / "plain.bin"
    plain.write_bytes(os.urandom(2 * CHUNK))
    envelope = tmp_path / "plain.faith"
    out = tmp_path / "out.bin"
    faith_envelope.encrypt_file(KEY, str(plain), str(envelope), chunk_size=CHUNK)

    data = bytearray(envelope.read_bytes())
    data[-1] ^= 0x01
    envelope.write_bytes(bytes(data))
    with pytest.raises(AuthFailureError):
        faith_envelope.decrypt_file(KEY, str(envelope), str(out))
    assert not out.exists()
    assert not (tmp_path / "out.bin.partial").exists()


def test_kem_derive(wide_toy_ctx):
    m = wide_toy_ctx.gT ** 1234
    key = faith_envelope.kem_derive(m)
    assert len(key) == 32
    assert faith_envelope.kem_derive(wide_toy_ctx.gT ** 1234) == key
    assert faith_envelope.kem_derive(wide_toy_ctx.gT ** 1235) != key


@pytest.mark.slow
def test_large_file_round_trip(tmp_path):
    plain = tmp_path / "large.bin"
    with open(plain, "wb") as handle:
        for _ in range(64):
            handle.write(os.urandom(1024 * 1024))
    envelope, out = tmp_path / "large.faith", tmp_path / "large.out"
    faith_envelope.encrypt_file(KEY, str(plain), str(envelope), threads=4)
    faith_envelope.decrypt_file(KEY, str(envelope), str(out), threads=4)
    assert out.read_bytes() == plain.read_bytes()
