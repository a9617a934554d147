"""
faith_envelope.py

Streaming chunked AEAD envelope for large files, plus the KEM bridge turning a GT payload into a
32-byte file key.

Envelope layout (all integers big-endian):

    offset  size  field
    0       8     magic "FAITH1\\0\\0"
    8       2     format version (1)
    10      2     cipher id (1 = AES-256-GCM, 2 = ChaCha20-Poly1305)
    12      4     chunk_size
    16      8     plaintext length
    24      16    file nonce
    40      ...   records: ciphertext of each plaintext chunk followed by its 16-byte tag

Chunk i is encrypted with nonce = file_nonce[0:4] || (file_nonce[4:12] XOR i) and associated data
= header || i (u64), so records cannot be reordered, dropped or moved between files.
"""

import io
import os
import secrets
import struct
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import BinaryIO, Callable, Iterator, NewType, Optional, Tuple

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM, ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

# Add config to the sys path
# pylint: disable=wrong-import-position
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "config"))

import faith_config
import faith_log_debug
import faith_log_info
import faith_utils
from faith_errors import AuthFailureError, ConfigError, EnvelopeIOError, InvalidEncodingError, TruncationError
from faith_pairing_core import GtElement

# Create an alias for convenience
logger_info = faith_log_info.logger
logger_debug = faith_log_debug.logger

FileKey = NewType("FileKey", bytes)

KEM_INFO = b"FAITH-KEM-v1"
KEY_SIZE = 32
TAG_SIZE = 16

MAGIC = b"FAITH1\x00\x00"
FORMAT_VERSION = 1
HEADER = struct.Struct(">8sHHIQ16s")
HEADER_SIZE = HEADER.size

CIPHER_IDS = {"aes-256-gcm": 1, "chacha20-poly1305": 2}
CIPHER_CLASSES = {1: AESGCM, 2: ChaCha20Poly1305}

# -------------------------------------------------------------------------
def kem_derive(m: GtElement) -> FileKey:
    """
    HKDF-SHA256 over the canonical encoding of `m` with info "FAITH-KEM-v1", no salt.
    """
    hkdf = HKDF(algorithm=hashes.SHA256(), length=KEY_SIZE, salt=None, info=KEM_INFO)
    return FileKey(hkdf.derive(m.to_bytes()))

# -------------------------------------------------------------------------
def validate_chunk_size(chunk_size: int) -> int:
    """
    Raises:
        ConfigError: unless chunk_size is a power of two within the configured bounds.
    """
    if (not isinstance(chunk_size, int)
            or not faith_utils.is_power_of_two(chunk_size)
            or not faith_config.MIN_CHUNK_SIZE <= chunk_size <= faith_config.MAX_CHUNK_SIZE):
        raise ConfigError(
            f"chunk_size must be a power of two in [{faith_config.MIN_CHUNK_SIZE}, "
            f"{faith_config.MAX_CHUNK_SIZE}], got {chunk_size}"
        )
    return chunk_size

# -------------------------------------------------------------------------
def cipher_id_for(name: str) -> int:
    try:
        return CIPHER_IDS[name]
    except KeyError as error:
        raise ConfigError(f"unknown cipher {name!r}; choose from {sorted(CIPHER_IDS)}") from error

# -------------------------------------------------------------------------
@dataclass(frozen=True)
class EnvelopeHeader:
    cipher_id: int
    chunk_size: int
    plaintext_length: int
    nonce: bytes
    version: int = FORMAT_VERSION

    def to_bytes(self) -> bytes:
        return HEADER.pack(MAGIC, self.version, self.cipher_id, self.chunk_size, self.plaintext_length, self.nonce)

    @classmethod
    def from_bytes(cls, data: bytes) -> "EnvelopeHeader":
        if len(data) < HEADER_SIZE:
            raise TruncationError(f"envelope header needs {HEADER_SIZE} bytes, found {len(data)}")
        magic, version, cipher_id, chunk_size, length, nonce = HEADER.unpack(data[:HEADER_SIZE])
        if magic != MAGIC:
            raise InvalidEncodingError("not a FAITH envelope (bad magic)")
        if version != FORMAT_VERSION:
            raise InvalidEncodingError(f"unsupported envelope version {version}")
        if cipher_id not in CIPHER_CLASSES:
            raise InvalidEncodingError(f"unknown cipher id {cipher_id}")
        if (not faith_utils.is_power_of_two(chunk_size)
                or not faith_config.MIN_CHUNK_SIZE <= chunk_size <= faith_config.MAX_CHUNK_SIZE):
            raise InvalidEncodingError(
                f"envelope chunk_size {chunk_size} is not a power of two in "
                f"[{faith_config.MIN_CHUNK_SIZE}, {faith_config.MAX_CHUNK_SIZE}]"
            )
        return cls(cipher_id=cipher_id, chunk_size=chunk_size, plaintext_length=length, nonce=nonce, version=version)

    @property
    def record_count(self) -> int:
        return -(-self.plaintext_length // self.chunk_size)

    @property
    def record_size(self) -> int:
        return self.chunk_size + TAG_SIZE

    def plaintext_size(self, index: int) -> int:
        return min(self.chunk_size, self.plaintext_length - index * self.chunk_size)

    @property
    def body_length(self) -> int:
        return self.plaintext_length + self.record_count * TAG_SIZE

    def chunk_nonce(self, index: int) -> bytes:
        counter = int.from_bytes(self.nonce[4:12], "big") ^ index
        return self.nonce[:4] + counter.to_bytes(8, "big")

    def chunk_aad(self, index: int) -> bytes:
        return self.to_bytes() + index.to_bytes(8, "big")

# -------------------------------------------------------------------------
def _read_exact(source: BinaryIO, size: int, offset: int) -> bytes:
    try:
        data = source.read(size)
    except OSError as error:
        raise EnvelopeIOError(f"read failed: {error}", offset) from error
    return data or b""

# -------------------------------------------------------------------------
def _write(destination: BinaryIO, data: bytes, offset: int):
    try:
        destination.write(data)
    except OSError as error:
        raise EnvelopeIOError(f"write failed: {error}", offset) from error

# -------------------------------------------------------------------------
def _batches(items: Iterator, size: int) -> Iterator[list]:
    batch = []
    for item in items:
        batch.append(item)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch

# -------------------------------------------------------------------------
def _plaintext_chunks(source: BinaryIO, chunk_size: int) -> Iterator[Tuple[int, bytes]]:
    index = 0
    offset = 0
    while True:
        chunk = _read_exact(source, chunk_size, offset)
        if not chunk:
            return
        yield index, chunk
        index += 1
        offset += len(chunk)

# -------------------------------------------------------------------------
def se_encrypt(key: FileKey, source: BinaryIO, destination: BinaryIO, plaintext_length: int,
               chunk_size: int = faith_config.DEFAULT_CHUNK_SIZE,
               cipher: str = faith_config.DEFAULT_CIPHER,
               threads: int = faith_config.ENCRYPT_THREADS,
               nonce: bytes = None,
               on_record: Optional[Callable[[int, bytes], None]] = None) -> EnvelopeHeader:
    """
    Encrypt `plaintext_length` bytes read from `source` into an envelope written to `destination`.

    Memory use stays at a few chunks per worker thread.  Chunks are encrypted independently, so
    with threads > 1 a bounded batch is encrypted concurrently and written back in order.

    `on_record(index, record)` sees each record in order as it is written.

    Raises:
        ConfigError: invalid chunk size or cipher.
        EnvelopeIOError: read/write failure, or the source ended before `plaintext_length` bytes.
    """
    validate_chunk_size(chunk_size)
    header = EnvelopeHeader(
        cipher_id=cipher_id_for(cipher),
        chunk_size=chunk_size,
        plaintext_length=plaintext_length,
        nonce=nonce or secrets.token_bytes(16),
    )
    aead = CIPHER_CLASSES[header.cipher_id](key)

    def encrypt_one(item):
        index, chunk = item
        return aead.encrypt(header.chunk_nonce(index), chunk, header.chunk_aad(index))

    _write(destination, header.to_bytes(), 0)
    out_offset = HEADER_SIZE
    consumed = 0
    threads = max(1, threads)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        for batch in _batches(_plaintext_chunks(source, chunk_size), threads * 2):
            consumed += sum(len(chunk) for _, chunk in batch)
            if consumed > plaintext_length:
                raise EnvelopeIOError("source is longer than the declared plaintext length", consumed)
            records = executor.map(encrypt_one, batch) if threads > 1 else map(encrypt_one, batch)
            for (index, _), record in zip(batch, records):
                _write(destination, record, out_offset)
                out_offset += len(record)
                if on_record is not None:
                    on_record(index, record)

    if consumed != plaintext_length:
        raise EnvelopeIOError(f"source ended after {consumed} of {plaintext_length} bytes", consumed)

    logger_debug.debug("Encrypted %d bytes into %d records (chunk_size=%d, cipher id %d)",
                       plaintext_length, header.record_count, chunk_size, header.cipher_id)
    return header

# -------------------------------------------------------------------------
def read_header(source: BinaryIO) -> EnvelopeHeader:
    return EnvelopeHeader.from_bytes(_read_exact(source, HEADER_SIZE, 0))

# -------------------------------------------------------------------------
def iter_records(source: BinaryIO, header: EnvelopeHeader) -> Iterator[Tuple[int, bytes]]:
    """
    Yield (index, record) for each body record, where a record is the chunk ciphertext plus its tag.
    `source` must be positioned just after the header.

    Raises:
        TruncationError: body shorter than the header declares.
        InvalidEncodingError: bytes after the last declared record.
    """
    offset = HEADER_SIZE
    for index in range(header.record_count):
        size = header.plaintext_size(index) + TAG_SIZE
        record = _read_exact(source, size, offset)
        if len(record) != size:
            raise TruncationError(
                f"envelope body truncated in record {index}: expected {size} bytes at offset {offset}, "
                f"found {len(record)}"
            )
        yield index, record
        offset += size
    if _read_exact(source, 1, offset):
        raise InvalidEncodingError(f"unexpected bytes after the last record at offset {offset}")

# -------------------------------------------------------------------------
def se_decrypt(key: FileKey, source: BinaryIO, destination: BinaryIO,
               threads: int = faith_config.ENCRYPT_THREADS) -> EnvelopeHeader:
    """
    Decrypt an envelope from `source`, writing plaintext chunks to `destination` as they authenticate.

    Callers that must not expose partial plaintext write to a temporary file and keep it only when
    this returns (see `decrypt_file`).

    Raises:
        AuthFailureError: first record whose tag does not verify.
        TruncationError: body shorter than declared.
    """
    header = read_header(source)
    aead = CIPHER_CLASSES[header.cipher_id](key)

    def decrypt_one(item):
        index, record = item
        try:
            return aead.decrypt(header.chunk_nonce(index), record, header.chunk_aad(index))
        except InvalidTag as error:
            raise AuthFailureError(index) from error

    threads = max(1, threads)
    out_offset = 0
    with ThreadPoolExecutor(max_workers=threads) as executor:
        for batch in _batches(iter_records(source, header), threads * 2):
            chunks = executor.map(decrypt_one, batch) if threads > 1 else map(decrypt_one, batch)
            for chunk in chunks:
                _write(destination, chunk, out_offset)
                out_offset += len(chunk)

    logger_debug.debug("Decrypted %d records, %d bytes", header.record_count, out_offset)
    return header

# -------------------------------------------------------------------------
def encrypt_file(key: FileKey, plaintext_path: str, envelope_path: str, **kwargs) -> EnvelopeHeader:
    """
    File-path convenience wrapper around `se_encrypt`.
    """
    try:
        length = os.path.getsize(plaintext_path)
        with open(plaintext_path, "rb") as source, open(envelope_path, "wb") as destination:
            header = se_encrypt(key, source, destination, length, **kwargs)
    except OSError as error:
        raise EnvelopeIOError(f"cannot encrypt {plaintext_path}: {error}", 0) from error
    logger_info.info("Encrypted %s (%d bytes) to %s", plaintext_path, length, envelope_path)
    return header

# -------------------------------------------------------------------------
def decrypt_file(key: FileKey, envelope_path: str, plaintext_path: str, **kwargs) -> EnvelopeHeader:
    """
    Decrypt an envelope file.  The output file only appears when every record authenticates.
    """
    tmp_path = plaintext_path + ".partial"
    try:
        with open(envelope_path, "rb") as source, open(tmp_path, "wb") as destination:
            header = se_decrypt(key, source, destination, **kwargs)
        os.replace(tmp_path, plaintext_path)
    except OSError as error:
        raise EnvelopeIOError(f"cannot decrypt {envelope_path}: {error}", 0) from error
    finally:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
    logger_info.info("Decrypted %s to %s", envelope_path, plaintext_path)
    return header

# -------------------------------------------------------------------------
def encrypt_bytes(key: FileKey, data: bytes, **kwargs) -> bytes:
    destination = io.BytesIO()
    se_encrypt(key, io.BytesIO(data), destination, len(data), **kwargs)
    return destination.getvalue()

# -------------------------------------------------------------------------
def decrypt_bytes(key: FileKey, envelope: bytes, **kwargs) -> bytes:
    destination = io.BytesIO()
    se_decrypt(key, io.BytesIO(envelope), destination, **kwargs)
    return destination.getvalue()
