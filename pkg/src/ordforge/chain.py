"""Deterministic in-memory chain with sat-range annotated UTXOs.

There is no proof of work and no mempool.  Each call to :meth:`Chain.mine_block`
validates a list of transactions against the current UTXO set, builds a
coinbase paying ``subsidy + fees`` to the miner and appends the block.

Coinbase sat order: the block's fresh subsidy range first, then the fee
ranges of each transaction in block order.  This keeps the first sat of every
block's subsidy at offset 0 of the coinbase output.

Spending rules: outputs of the form ``OP_1 <33-byte key>`` are taproot
outputs and are checked (key path or script path) when
``validate_signatures`` is on.  Any other script_pubkey is treated as
anyone-can-spend.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

from . import schnorr
from .sat_math import MAINNET, NetworkParams, first_sat_of_height, subsidy_at_height
from .script import OP_1, ExecContext, ScriptDecodeError, decode_script, execute_script
from .tx import (
    InsufficientFundsError,
    OutPoint,
    SatRange,
    Transaction,
    TxOut,
    apply_fifo,
    check_block_limits,
    coalesce,
    deserialize,
    id_to_hex,
    locate_sat,
    serialize_base,
    serialize_full,
    sha256d,
    txid,
)

SIGHASH_TAG = b"ord-forge/sighash"
STATE_FORMAT = "ord-forge/chain-v1"


class ChainError(Exception):
    pass


class TxValidationError(ChainError):
    def __init__(self, tx_index: int, reason: str):
        super().__init__(f"tx {tx_index}: {reason}")
        self.tx_index = tx_index
        self.reason = reason


class StateError(ChainError):
    """A state file could not be parsed; ``location`` says where."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


# -- taproot outputs --------------------------------------------------------

def p2tr_script(output_key, curve: schnorr.CurveParams = schnorr.SECP256K1) -> bytes:
    key = curve.encode_point(output_key)
    return bytes([OP_1, len(key)]) + key


def p2tr_key(script_pubkey: bytes) -> Optional[bytes]:
    """Return the encoded output key if ``script_pubkey`` is a taproot output."""
    if len(script_pubkey) == 35 and script_pubkey[0] == OP_1 and script_pubkey[1] == 33:
        return script_pubkey[2:]
    return None


def key_spend_script(internal_key, curve: schnorr.CurveParams = schnorr.SECP256K1) -> bytes:
    """Taproot script_pubkey for a key-path-only output of ``internal_key``."""
    return p2tr_script(schnorr.taproot_output(internal_key, None, curve).output_key, curve)


def sighash(tx: Transaction, index: int, prevout: OutPoint) -> bytes:
    data = (SIGHASH_TAG + serialize_base(tx) + index.to_bytes(4, "little")
            + prevout.txid + prevout.vout.to_bytes(4, "little"))
    return hashlib.sha256(data).digest()


def sign_key_spend(tx: Transaction, index: int, prevout: OutPoint, secret: int,
                   root: Optional[bytes] = None, curve: schnorr.CurveParams = schnorr.SECP256K1,
                   entropy: schnorr.Entropy = schnorr._system_entropy) -> bytes:
    """Key-path signature for input ``index`` spending an output of ``secret``."""
    tweaked = schnorr.tweak_secret(secret, root, curve)
    return schnorr.sign(tweaked, sighash(tx, index, prevout), entropy, curve).to_bytes(curve)


def signature_checker(message: bytes, curve: schnorr.CurveParams = schnorr.SECP256K1):
    def check(sig: bytes, pubkey: bytes) -> bool:
        try:
            Q = curve.decode_point(pubkey)
            return schnorr.verify(Q, message, schnorr.Signature.from_bytes(sig, curve), curve)
        except ValueError:
            return False
    return check


def control_block(internal_key, proof: Sequence[bytes],
                  curve: schnorr.CurveParams = schnorr.SECP256K1) -> bytes:
    return curve.encode_point(internal_key) + b"".join(proof)


def parse_control_block(data: bytes, curve: schnorr.CurveParams = schnorr.SECP256K1):
    plen = 1 + curve.coord_size
    if len(data) < plen or (len(data) - plen) % 32:
        raise ValueError("malformed control block")
    P = curve.decode_point(data[:plen])
    proof = [data[i:i + 32] for i in range(plen, len(data), 32)]
    return P, proof


# -- state ------------------------------------------------------------------

@dataclass
class Utxo:
    value: int
    script_pubkey: bytes
    ranges: list[SatRange]
    height: int


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    txs: tuple[Transaction, ...]
    hash: bytes

    @property
    def coinbase(self) -> Transaction:
        return self.txs[0]


def tx_root(txs: Sequence[Transaction]) -> bytes:
    level = [txid(tx) for tx in txs]
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [sha256d(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


def block_hash(height: int, prev_hash: bytes, txs: Sequence[Transaction]) -> bytes:
    return sha256d(height.to_bytes(8, "little") + prev_hash + tx_root(txs))


class _BlockView:
    """UTXO lookups during block validation without touching the base set."""

    def __init__(self, base: dict[OutPoint, Utxo]):
        self.base = base
        self.spent: set[OutPoint] = set()
        self.created: dict[OutPoint, Utxo] = {}

    def get(self, op: OutPoint) -> Optional[Utxo]:
        if op in self.created:
            return self.created[op]
        if op in self.spent:
            return None
        return self.base.get(op)

    def spend(self, op: OutPoint) -> None:
        if self.created.pop(op, None) is None:
            self.spent.add(op)


class Chain:
    def __init__(self, params: NetworkParams = MAINNET, validate_signatures: bool = True,
                 curve: schnorr.CurveParams = schnorr.SECP256K1):
        self.params = params
        self.validate_signatures = validate_signatures
        self.curve = curve
        self.blocks: list[Block] = []
        self.utxos: dict[OutPoint, Utxo] = {}

    @property
    def height(self) -> int:
        """Height of the next block to be mined."""
        return len(self.blocks)

    @property
    def tip_hash(self) -> bytes:
        return self.blocks[-1].hash if self.blocks else bytes(32)

    def issued(self) -> int:
        """Number of sats mined so far."""
        return first_sat_of_height(min(self.height, self.params.last_height + 1), self.params)

    def subsidy_range(self, height: int) -> Optional[SatRange]:
        if height > self.params.last_height:
            return None
        start = first_sat_of_height(height, self.params)
        return SatRange(start, start + subsidy_at_height(height, self.params))

    # -- validation ------------------------------------------------------

    def _check_spend(self, tx: Transaction, index: int, utxo: Utxo, height: int) -> None:
        key_bytes = p2tr_key(utxo.script_pubkey)
        if key_bytes is None or not self.validate_signatures:
            return
        witness = tx.witnesses[index]
        curve = self.curve
        message = sighash(tx, index, tx.inputs[index].prevout)
        try:
            output_key = curve.decode_point(key_bytes)
        except ValueError:
            raise TxValidationError(index, "unspendable taproot output key")
        if not witness:
            raise TxValidationError(index, "empty witness for taproot spend")
        if len(witness) == 1:
            try:
                sig = schnorr.Signature.from_bytes(witness[0], curve)
            except ValueError as exc:
                raise TxValidationError(index, f"malformed key-path signature: {exc}")
            if not schnorr.verify(output_key, message, sig, curve):
                raise TxValidationError(index, "key-path signature does not verify")
            return
        *stack, script_bytes, control = witness
        try:
            internal, proof = parse_control_block(control, curve)
        except ValueError as exc:
            raise TxValidationError(index, f"bad control block: {exc}")
        commitment = schnorr.TaprootCommitment(
            internal, schnorr.root_from_proof(script_bytes, proof), output_key)
        if not schnorr.verify_script_path(commitment, script_bytes, proof, curve):
            raise TxValidationError(index, "script is not committed to by the output key")
        try:
            ops = decode_script(script_bytes)
        except ScriptDecodeError as exc:
            raise TxValidationError(index, f"undecodable tapscript: {exc}")
        ctx = ExecContext(signature_checker(message, curve), confirmations=height - utxo.height)
        verdict = execute_script(ops, stack, ctx)
        if not verdict:
            raise TxValidationError(index, f"script rejected: {verdict.reason}")

    # -- mining ----------------------------------------------------------

    def mine_block(self, txs: Sequence[Transaction] = (), miner_script: bytes = b"") -> Block:
        """Validate ``txs``, append a block and update the UTXO set.

        On any error the chain is left untouched.
        """
        h = self.height
        view = _BlockView(self.utxos)
        fee_ranges: list[SatRange] = []
        fees = 0
        for i, tx in enumerate(txs):
            if tx.is_coinbase:
                raise TxValidationError(i, "only the block's own coinbase may have no inputs")
            input_ranges, input_value = [], 0
            seen = set()
            for j, txin in enumerate(tx.inputs):
                op = txin.prevout
                if op in seen:
                    raise TxValidationError(i, f"input {j} spends {op} twice")
                seen.add(op)
                utxo = view.get(op)
                if utxo is None:
                    reason = "double-spend of" if op in view.spent or op in self.utxos else "missing input"
                    raise TxValidationError(i, f"{reason} {op}")
                try:
                    self._check_spend(tx, j, utxo, h)
                except TxValidationError as exc:
                    raise TxValidationError(i, f"input {j}: {exc.reason}") from None
                input_ranges.append(utxo.ranges)
                input_value += utxo.value
            try:
                out_ranges, fee = apply_fifo(input_ranges, [o.value for o in tx.outputs])
            except InsufficientFundsError as exc:
                raise TxValidationError(i, str(exc)) from None
            for op in tx.inputs:
                view.spend(op.prevout)
            tid = txid(tx)
            for vout, (out, ranges) in enumerate(zip(tx.outputs, out_ranges)):
                op = OutPoint(tid, vout)
                if view.get(op) is not None:
                    raise TxValidationError(i, f"duplicate output {op}")
                view.created[op] = Utxo(out.value, out.script_pubkey, ranges, h)
            fee_ranges.extend(fee)
            fees += input_value - sum(o.value for o in tx.outputs)

        fresh = self.subsidy_range(h)
        coinbase_ranges = coalesce(([fresh] if fresh else []) + fee_ranges)
        subsidy = fresh.size if fresh else 0
        coinbase = Transaction((), (TxOut(subsidy + fees, miner_script),), locktime=h)
        all_txs = (coinbase, *txs)
        check_block_limits(all_txs)

        block = Block(h, self.tip_hash, all_txs, block_hash(h, self.tip_hash, all_txs))
        for op in view.spent:
            del self.utxos[op]
        self.utxos[OutPoint(txid(coinbase), 0)] = Utxo(subsidy + fees, miner_script, coinbase_ranges, h)
        self.utxos.update(view.created)
        self.blocks.append(block)
        return block

    def fast_forward(self, height: int, miner_script: bytes = b"") -> None:
        """Mine empty blocks until the next block to mine is ``height``."""
        while self.height < height:
            self.mine_block((), miner_script)

    # -- queries ---------------------------------------------------------

    def sat_location(self, sat: int) -> Optional[tuple[OutPoint, int]]:
        if not 0 <= sat < self.issued():
            raise ValueError(f"sat {sat} has not been mined yet")
        for op, utxo in self.utxos.items():
            offset = locate_sat(utxo.ranges, sat)
            if offset is not None:
                return op, offset
        return None

    def list_utxos(self, script_pubkey: bytes) -> list[tuple[OutPoint, Utxo]]:
        return [(op, u) for op, u in self.utxos.items() if u.script_pubkey == script_pubkey]

    def balance_of(self, script_pubkey: bytes) -> int:
        return sum(u.value for _, u in self.list_utxos(script_pubkey))

    def transactions(self) -> Iterator[tuple[int, Transaction]]:
        for block in self.blocks:
            for tx in block.txs:
                yield block.height, tx

    # -- persistence -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": STATE_FORMAT,
            "params": self.params.to_json(),
            "validate_signatures": self.validate_signatures,
            "blocks": [
                {
                    "height": b.height,
                    "prev_hash": b.prev_hash.hex(),
                    "hash": b.hash.hex(),
                    "txs": [serialize_full(tx).hex() for tx in b.txs],
                }
                for b in self.blocks
            ],
            "utxos": [
                {
                    "outpoint": str(op),
                    "value": str(u.value),
                    "script_pubkey": u.script_pubkey.hex(),
                    "ranges": [[str(r.start), str(r.end)] for r in u.ranges],
                    "height": u.height,
                }
                for op, u in self.utxos.items()
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def save(self, path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(self.dumps())
        os.replace(tmp, path)

    @classmethod
    def from_json(cls, doc, curve: schnorr.CurveParams = schnorr.SECP256K1) -> "Chain":
        def field(obj, key, where):
            if not isinstance(obj, dict) or key not in obj:
                raise StateError(where, f"missing field {key!r}")
            return obj[key]

        def convert(fn, value, where):
            try:
                return fn(value)
            except (TypeError, ValueError) as exc:
                raise StateError(where, str(exc)) from None

        if field(doc, "format", "$") != STATE_FORMAT:
            raise StateError("$.format", "unsupported state format")
        params = convert(NetworkParams.from_json, field(doc, "params", "$"), "$.params")
        chain = cls(params, bool(field(doc, "validate_signatures", "$")), curve)
        for i, b in enumerate(field(doc, "blocks", "$")):
            where = f"$.blocks[{i}]"
            txs = tuple(
                convert(lambda h: deserialize(bytes.fromhex(h)), t, f"{where}.txs[{j}]")
                for j, t in enumerate(field(b, "txs", where))
            )
            prev = convert(bytes.fromhex, field(b, "prev_hash", where), f"{where}.prev_hash")
            stored = convert(bytes.fromhex, field(b, "hash", where), f"{where}.hash")
            if field(b, "height", where) != i or prev != chain.tip_hash:
                raise StateError(where, "block does not extend the previous block")
            if not txs or block_hash(i, prev, txs) != stored:
                raise StateError(f"{where}.hash", "block hash does not match contents")
            chain.blocks.append(Block(i, prev, txs, stored))
        for i, u in enumerate(field(doc, "utxos", "$")):
            where = f"$.utxos[{i}]"
            op = convert(OutPoint.parse, field(u, "outpoint", where), f"{where}.outpoint")
            ranges = [
                convert(lambda r: SatRange(int(r[0]), int(r[1])), r, f"{where}.ranges[{j}]")
                for j, r in enumerate(field(u, "ranges", where))
            ]
            chain.utxos[op] = Utxo(
                convert(int, field(u, "value", where), f"{where}.value"),
                convert(bytes.fromhex, field(u, "script_pubkey", where), f"{where}.script_pubkey"),
                ranges,
                convert(int, field(u, "height", where), f"{where}.height"),
            )
        return chain

    @classmethod
    def loads(cls, text: str) -> "Chain":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
        return cls.from_json(doc)

    @classmethod
    def load(cls, path) -> "Chain":
        return cls.loads(Path(path).read_text())


def block_summary(block: Block) -> dict:
    return {
        "height": block.height,
        "hash": id_to_hex(block.hash),
        "txids": [id_to_hex(txid(tx)) for tx in block.txs],
    }
