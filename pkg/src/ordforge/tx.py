"""SegWit transactions, ids and weight, and first-in-first-out sat-range flow."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

MAX_BLOCK_WEIGHT = 4_000_000
MAX_BLOCK_BASE_SIZE = 1_000_000


def sha256d(data: bytes) -> bytes:
    return hashlib.sha256(hashlib.sha256(data).digest()).digest()


def id_to_hex(raw: bytes) -> str:
    """Display form of a 32-byte id (byte-reversed, lowercase hex)."""
    return raw[::-1].hex()


def id_from_hex(text: str) -> bytes:
    raw = bytes.fromhex(text)
    if len(raw) != 32:
        raise ValueError("ids are 32 bytes")
    return raw[::-1]


# -- varints ----------------------------------------------------------------

def encode_varint(n: int) -> bytes:
    if n < 0xFD:
        return bytes([n])
    if n <= 0xFFFF:
        return b"\xfd" + n.to_bytes(2, "little")
    if n <= 0xFFFFFFFF:
        return b"\xfe" + n.to_bytes(4, "little")
    return b"\xff" + n.to_bytes(8, "little")


def _read(stream: io.BytesIO, n: int) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise ValueError(f"unexpected end of data at byte {stream.tell()}")
    return data


def read_varint(stream: io.BytesIO) -> int:
    first = _read(stream, 1)[0]
    if first < 0xFD:
        return first
    size = {0xFD: 2, 0xFE: 4, 0xFF: 8}[first]
    return int.from_bytes(_read(stream, size), "little")


def _encode_bytes(data: bytes) -> bytes:
    return encode_varint(len(data)) + data


def _read_bytes(stream: io.BytesIO) -> bytes:
    return _read(stream, read_varint(stream))


# -- structures -------------------------------------------------------------

class OutPoint(NamedTuple):
    txid: bytes
    vout: int

    def __str__(self) -> str:
        return f"{id_to_hex(self.txid)}:{self.vout}"

    @classmethod
    def parse(cls, text: str) -> "OutPoint":
        txid, _, vout = text.partition(":")
        return cls(id_from_hex(txid), int(vout))


@dataclass(frozen=True)
class TxIn:
    prevout: OutPoint
    sequence: int = 0xFFFFFFFF


@dataclass(frozen=True)
class TxOut:
    value: int
    script_pubkey: bytes


@dataclass(frozen=True)
class Transaction:
    inputs: tuple[TxIn, ...]
    outputs: tuple[TxOut, ...]
    witnesses: tuple[tuple[bytes, ...], ...] = ()
    version: int = 2
    locktime: int = 0

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        witnesses = tuple(tuple(w) for w in self.witnesses) or tuple(() for _ in self.inputs)
        object.__setattr__(self, "witnesses", witnesses)
        if len(self.witnesses) != len(self.inputs):
            raise ValueError("one witness stack is required per input")
        if not self.outputs:
            raise ValueError("a transaction needs at least one output")
        if any(o.value < 0 for o in self.outputs):
            raise ValueError("output values must be non-negative")

    @property
    def is_coinbase(self) -> bool:
        return not self.inputs

    @property
    def has_witness(self) -> bool:
        return any(self.witnesses)

    def with_witnesses(self, witnesses) -> "Transaction":
        return Transaction(self.inputs, self.outputs, witnesses, self.version, self.locktime)


def _serialize_body(tx: Transaction) -> tuple[bytes, bytes]:
    ins = encode_varint(len(tx.inputs)) + b"".join(
        i.prevout.txid + i.prevout.vout.to_bytes(4, "little") + b"\x00" + i.sequence.to_bytes(4, "little")
        for i in tx.inputs
    )
    outs = encode_varint(len(tx.outputs)) + b"".join(
        o.value.to_bytes(8, "little") + _encode_bytes(o.script_pubkey) for o in tx.outputs
    )
    return ins, outs


def serialize_base(tx: Transaction) -> bytes:
    ins, outs = _serialize_body(tx)
    return tx.version.to_bytes(4, "little") + ins + outs + tx.locktime.to_bytes(4, "little")


def serialize_full(tx: Transaction) -> bytes:
    if not tx.has_witness:
        return serialize_base(tx)
    ins, outs = _serialize_body(tx)
    wit = b"".join(
        encode_varint(len(stack)) + b"".join(_encode_bytes(item) for item in stack)
        for stack in tx.witnesses
    )
    return (tx.version.to_bytes(4, "little") + b"\x00\x01" + ins + outs + wit
            + tx.locktime.to_bytes(4, "little"))


def _parse(raw: bytes, segwit: bool) -> Transaction:
    s = io.BytesIO(raw)
    version = int.from_bytes(_read(s, 4), "little")
    if segwit:
        if _read(s, 2) != b"\x00\x01":
            raise ValueError("missing segwit marker")
    inputs = []
    for _ in range(read_varint(s)):
        txid = _read(s, 32)
        vout = int.from_bytes(_read(s, 4), "little")
        if _read_bytes(s):
            raise ValueError("non-empty script_sig is not supported")
        inputs.append(TxIn(OutPoint(txid, vout), int.from_bytes(_read(s, 4), "little")))
    outputs = []
    for _ in range(read_varint(s)):
        value = int.from_bytes(_read(s, 8), "little")
        outputs.append(TxOut(value, _read_bytes(s)))
    witnesses = []
    if segwit:
        for _ in inputs:
            witnesses.append(tuple(_read_bytes(s) for _ in range(read_varint(s))))
        if not any(witnesses):
            raise ValueError("segwit serialization with empty witnesses")
    locktime = int.from_bytes(_read(s, 4), "little")
    if s.read(1):
        raise ValueError(f"trailing data at byte {s.tell() - 1}")
    return Transaction(tuple(inputs), tuple(outputs), tuple(witnesses), version, locktime)


def deserialize(raw: bytes) -> Transaction:
    # A witness-free transaction with zero inputs also starts with 0x00 after
    # the version, so fall back to the base layout if the extended one fails.
    if raw[4:6] == b"\x00\x01":
        try:
            return _parse(raw, segwit=True)
        except ValueError:
            pass
    return _parse(raw, segwit=False)


def txid(tx: Transaction) -> bytes:
    return sha256d(serialize_base(tx))


def wtxid(tx: Transaction) -> bytes:
    return sha256d(serialize_full(tx))


def weight(tx: Transaction) -> int:
    return 3 * len(serialize_base(tx)) + len(serialize_full(tx))


class BlockLimitError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


def check_block_limits(txs: Sequence[Transaction]) -> None:
    """Raise :class:`BlockLimitError` naming every cap the block exceeds."""
    total_weight = sum(weight(tx) for tx in txs)
    base_size = sum(len(serialize_base(tx)) for tx in txs)
    violations = []
    if total_weight > MAX_BLOCK_WEIGHT:
        violations.append(f"weight {total_weight} exceeds {MAX_BLOCK_WEIGHT}")
    if base_size > MAX_BLOCK_BASE_SIZE:
        violations.append(f"base size {base_size} exceeds {MAX_BLOCK_BASE_SIZE}")
    if violations:
        raise BlockLimitError(violations)


# -- sat ranges -------------------------------------------------------------

class SatRange(NamedTuple):
    start: int
    end: int

    @property
    def size(self) -> int:
        return self.end - self.start


class InsufficientFundsError(ValueError):
    pass


def _append(ranges: list[SatRange], start: int, end: int) -> None:
    if ranges and ranges[-1].end == start:
        ranges[-1] = SatRange(ranges[-1].start, end)
    else:
        ranges.append(SatRange(start, end))


def coalesce(ranges: Sequence[SatRange]) -> list[SatRange]:
    out: list[SatRange] = []
    for start, end in ranges:
        if end > start:
            _append(out, start, end)
    return out


def apply_fifo(input_ranges: Sequence[Sequence[SatRange]], output_values: Sequence[int]
               ) -> tuple[list[list[SatRange]], list[SatRange]]:
    """Slice the concatenated input ranges into outputs, in order.

    Returns ``(per_output_ranges, fee_ranges)``; the fee ranges are whatever is
    left once every output is filled.  Adjacent ranges are coalesced.
    """
    queue = [SatRange(*r) for rs in input_ranges for r in rs if r[1] > r[0]]
    available = sum(r.size for r in queue)
    needed = sum(output_values)
    if needed > available:
        raise InsufficientFundsError(f"outputs need {needed} sats, inputs hold {available}")
    outputs: list[list[SatRange]] = []
    qi = 0
    pos = queue[0].start if queue else 0
    for value in output_values:
        assigned: list[SatRange] = []
        while value:
            current = queue[qi]
            take = min(value, current.end - pos)
            _append(assigned, pos, pos + take)
            value -= take
            pos += take
            if pos == current.end:
                qi += 1
                pos = queue[qi].start if qi < len(queue) else 0
        outputs.append(assigned)
    fee: list[SatRange] = []
    if qi < len(queue):
        _append(fee, pos, queue[qi].end)
        for r in queue[qi + 1:]:
            _append(fee, r.start, r.end)
    return outputs, fee


def locate_sat(ranges: Sequence[SatRange], sat: int) -> Optional[int]:
    offset = 0
    for start, end in ranges:
        if start <= sat < end:
            return offset + sat - start
        offset += end - start
    return None


def total_size(ranges: Sequence[SatRange]) -> int:
    return sum(end - start for start, end in ranges)
