"""Bitcoin script subset: codec, inscription envelopes, and a small interpreter.

A decoded script is a list whose items are either ``int`` opcodes or ``bytes``
push payloads.  The empty push and ``OP_FALSE`` share the byte 0x00 and always
decode to the opcode ``OP_0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

Op = Union[int, bytes]

OP_0 = OP_FALSE = 0x00
OP_PUSHDATA1 = 0x4C
OP_PUSHDATA2 = 0x4D
OP_1 = OP_TRUE = 0x51
OP_16 = 0x60
OP_IF = 0x63
OP_ENDIF = 0x68
OP_DROP = 0x75
OP_NUMEQUAL = 0x9C
OP_GREATERTHANOREQUAL = 0xA2
OP_CHECKSIG = 0xAC
OP_CHECKSIGVERIFY = 0xAD
OP_CHECKSEQUENCEVERIFY = 0xB2
OP_CHECKSIGADD = 0xBA

OPCODE_NAMES = {
    OP_0: "OP_0",
    OP_PUSHDATA1: "OP_PUSHDATA1",
    OP_PUSHDATA2: "OP_PUSHDATA2",
    OP_IF: "OP_IF",
    OP_ENDIF: "OP_ENDIF",
    OP_DROP: "OP_DROP",
    OP_NUMEQUAL: "OP_NUMEQUAL",
    OP_GREATERTHANOREQUAL: "OP_GREATERTHANOREQUAL",
    OP_CHECKSIG: "OP_CHECKSIG",
    OP_CHECKSIGVERIFY: "OP_CHECKSIGVERIFY",
    OP_CHECKSEQUENCEVERIFY: "OP_CHECKSEQUENCEVERIFY",
    OP_CHECKSIGADD: "OP_CHECKSIGADD",
}
OPCODE_NAMES.update({OP_1 + i: f"OP_{i + 1}" for i in range(16)})

# single-byte opcodes accepted by the decoder (push opcodes handled separately)
_KNOWN = {op for op in OPCODE_NAMES if op not in (OP_PUSHDATA1, OP_PUSHDATA2)}

MAX_PUSH = 520
ENVELOPE_PROTOCOL = b"ord"
CONTENT_TYPE_TAG = b"\x01"


class ScriptDecodeError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"at byte {offset}: {message}")
        self.offset = offset


class EnvelopeError(ValueError):
    pass


# -- codec ------------------------------------------------------------------

def _encode_push(data: bytes) -> bytes:
    n = len(data)
    if n == 0:
        return bytes([OP_0])
    if n <= 75:
        return bytes([n]) + data
    if n <= 0xFF:
        return bytes([OP_PUSHDATA1, n]) + data
    if n <= 0xFFFF:
        return bytes([OP_PUSHDATA2]) + n.to_bytes(2, "little") + data
    raise ValueError(f"push of {n} bytes exceeds PUSHDATA2 range")


def encode_script(ops: Sequence[Op]) -> bytes:
    out = bytearray()
    for op in ops:
        if isinstance(op, (bytes, bytearray)):
            out += _encode_push(bytes(op))
        elif op in _KNOWN:
            out.append(op)
        else:
            raise ValueError(f"unsupported opcode {op!r}")
    return bytes(out)


def decode_script(raw: bytes) -> list[Op]:
    ops: list[Op] = []
    i = 0
    while i < len(raw):
        start = i
        b = raw[i]
        i += 1
        if 1 <= b <= 75:
            size = b
        elif b == OP_PUSHDATA1:
            if i + 1 > len(raw):
                raise ScriptDecodeError(start, "truncated PUSHDATA1 length")
            size = raw[i]
            i += 1
        elif b == OP_PUSHDATA2:
            if i + 2 > len(raw):
                raise ScriptDecodeError(start, "truncated PUSHDATA2 length")
            size = int.from_bytes(raw[i:i + 2], "little")
            i += 2
        elif b in _KNOWN:
            ops.append(b)
            continue
        else:
            raise ScriptDecodeError(start, f"unknown opcode 0x{b:02x}")
        if i + size > len(raw):
            raise ScriptDecodeError(start, f"push of {size} bytes runs past end of script")
        ops.append(raw[i:i + size])
        i += size
    return ops


def push_int(n: int) -> Op:
    """Minimal push for a script number."""
    if n == 0:
        return OP_0
    if 1 <= n <= 16:
        return OP_1 + n - 1
    return encode_num(n)


def encode_num(n: int) -> bytes:
    if n == 0:
        return b""
    neg, mag = n < 0, abs(n)
    out = bytearray()
    while mag:
        out.append(mag & 0xFF)
        mag >>= 8
    if out[-1] & 0x80:
        out.append(0x80 if neg else 0x00)
    elif neg:
        out[-1] |= 0x80
    return bytes(out)


def decode_num(data: bytes) -> int:
    if not data:
        return 0
    mag = int.from_bytes(data, "little")
    if data[-1] & 0x80:
        return -(mag & ~(0x80 << (8 * (len(data) - 1))))
    return mag


def disassemble(ops: Sequence[Op]) -> str:
    return " ".join(op.hex() if isinstance(op, bytes) else OPCODE_NAMES[op] for op in ops)


# -- envelopes --------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    mime: str
    body: bytes


def build_envelope(mime: str, body: bytes) -> list[Op]:
    mime_bytes = mime.encode("ascii")
    if not mime_bytes:
        raise EnvelopeError("mime must be non-empty")
    if len(mime_bytes) > MAX_PUSH:
        raise EnvelopeError(f"mime is {len(mime_bytes)} bytes, limit is {MAX_PUSH}")
    ops: list[Op] = [OP_FALSE, OP_IF, ENVELOPE_PROTOCOL, CONTENT_TYPE_TAG, mime_bytes, OP_0]
    ops += [body[i:i + MAX_PUSH] for i in range(0, len(body), MAX_PUSH)]
    ops.append(OP_ENDIF)
    return ops


def _parse_at(ops: Sequence[Op], i: int) -> Optional[Envelope]:
    head = ops[i:i + 6]
    if len(head) < 6 or head[:3] != [OP_FALSE, OP_IF, ENVELOPE_PROTOCOL]:
        return None
    if head[3] != CONTENT_TYPE_TAG or not isinstance(head[4], bytes) or head[5] != OP_0:
        return None
    try:
        mime = head[4].decode("ascii")
    except UnicodeDecodeError:
        return None
    if not mime or len(head[4]) > MAX_PUSH:
        return None
    chunks = []
    for op in ops[i + 6:]:
        if op == OP_ENDIF:
            return Envelope(mime, b"".join(chunks))
        if not isinstance(op, bytes) or len(op) > MAX_PUSH:
            return None
        chunks.append(op)
    return None


def parse_envelope(ops: Sequence[Op]) -> Optional[Envelope]:
    """Return the first well-formed envelope in ``ops``, else ``None``."""
    ops = list(ops)
    for i, op in enumerate(ops):
        if op == OP_FALSE and i + 1 < len(ops) and ops[i + 1] == OP_IF:
            env = _parse_at(ops, i)
            if env is not None:
                return env
    return None


# -- interpreter ------------------------------------------------------------

SigChecker = Callable[[bytes, bytes], bool]


@dataclass
class ExecContext:
    checker: SigChecker
    confirmations: int = 0


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.accepted


class _Reject(Exception):
    pass


def _truthy(item: bytes) -> bool:
    for i, b in enumerate(item):
        if b != 0:
            # negative zero is false
            return not (i == len(item) - 1 and b == 0x80)
    return False


def execute_script(ops: Sequence[Op], witness: Sequence[bytes], ctx: ExecContext) -> Verdict:
    """Run ``ops`` over the initial stack ``witness`` (last item on top)."""
    stack: list[bytes] = [bytes(w) for w in witness]
    branches: list[bool] = []

    def pop() -> bytes:
        if not stack:
            raise _Reject("stack underflow")
        return stack.pop()

    try:
        for op in ops:
            executing = all(branches)
            if op == OP_IF:
                branches.append(_truthy(pop()) if executing else False)
                continue
            if op == OP_ENDIF:
                if not branches:
                    raise _Reject("unbalanced OP_ENDIF")
                branches.pop()
                continue
            if not executing:
                continue
            if isinstance(op, bytes):
                stack.append(op)
            elif op == OP_0:
                stack.append(b"")
            elif OP_1 <= op <= OP_16:
                stack.append(encode_num(op - OP_1 + 1))
            elif op == OP_DROP:
                pop()
            elif op in (OP_CHECKSIG, OP_CHECKSIGVERIFY):
                pubkey, sig = pop(), pop()
                ok = bool(sig) and ctx.checker(sig, pubkey)
                if op == OP_CHECKSIGVERIFY:
                    if not ok:
                        raise _Reject("OP_CHECKSIGVERIFY failed")
                else:
                    stack.append(b"\x01" if ok else b"")
            elif op == OP_CHECKSIGADD:
                pubkey, counter, sig = pop(), decode_num(pop()), pop()
                ok = bool(sig) and ctx.checker(sig, pubkey)
                stack.append(encode_num(counter + (1 if ok else 0)))
            elif op == OP_CHECKSEQUENCEVERIFY:
                if not stack:
                    raise _Reject("stack underflow")
                delay = decode_num(stack[-1])
                if delay < 0:
                    raise _Reject("negative relative delay")
                if ctx.confirmations < delay:
                    raise _Reject(f"relative delay {delay} not met ({ctx.confirmations} confirmations)")
            elif op in (OP_NUMEQUAL, OP_GREATERTHANOREQUAL):
                b, a = decode_num(pop()), decode_num(pop())
                ok = a == b if op == OP_NUMEQUAL else a >= b
                stack.append(b"\x01" if ok else b"")
            else:
                raise _Reject(f"unsupported opcode {OPCODE_NAMES.get(op, hex(op))}")
    except _Reject as exc:
        return Verdict(False, str(exc))
    if branches:
        return Verdict(False, "unbalanced OP_IF")
    if not stack:
        return Verdict(False, "empty stack at end of script")
    if not _truthy(stack[-1]):
        return Verdict(False, "false value on top of stack")
    return Verdict(True)
