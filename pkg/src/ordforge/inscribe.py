"""Commit/reveal inscriptions and the index that follows inscribed sats.

The commit transaction pays into a taproot output whose script tree has a
single leaf::

    <internal key> OP_CHECKSIG OP_FALSE OP_IF "ord" 0x01 <mime> OP_0 <body...> OP_ENDIF

The reveal transaction spends that output through the script path, which
puts the envelope on chain in its witness.  An inscription binds to the first
sat of the reveal transaction's first output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import schnorr
from .chain import (
    Block,
    control_block,
    key_spend_script,
    p2tr_script,
    sighash,
    sign_key_spend,
)
from .sat_math import MAINNET, NetworkParams, Rarity, first_sat_of_height, rarity, subsidy_at_height
from .script import (
    OP_CHECKSIG,
    Envelope,
    ScriptDecodeError,
    build_envelope,
    decode_script,
    encode_script,
    parse_envelope,
)
from .tx import (
    InsufficientFundsError,
    OutPoint,
    SatRange,
    Transaction,
    TxIn,
    TxOut,
    apply_fifo,
    coalesce,
    id_to_hex,
    locate_sat,
    txid,
)

DUST = 1


class NotFoundError(KeyError):
    pass


def reveal_script(internal_key, mime: str, body: bytes,
                  curve: schnorr.CurveParams = schnorr.SECP256K1) -> bytes:
    ops = [curve.encode_point(internal_key), OP_CHECKSIG] + build_envelope(mime, body)
    return encode_script(ops)


@dataclass(frozen=True)
class InscriptionPlan:
    commit: Transaction
    reveal: Transaction
    commitment: schnorr.TaprootCommitment
    script: bytes

    @property
    def inscription_id(self) -> str:
        return f"{id_to_hex(txid(self.reveal))}i0"


def plan_inscription(content: bytes, mime: str, funding: OutPoint, funding_value: int,
                     funding_secret: int, destination: bytes, fee: int,
                     postage: Optional[int] = None, change_script: Optional[bytes] = None,
                     curve: schnorr.CurveParams = schnorr.SECP256K1,
                     entropy: schnorr.Entropy = schnorr._system_entropy) -> InscriptionPlan:
    """Build and sign the commit and reveal transactions.

    ``funding`` must be a key-path output of ``funding_secret`` (see
    :func:`ordforge.chain.key_spend_script`).  Without ``postage`` the whole
    funding value, less two fees, lands on ``destination``.  With it, the
    destination receives exactly ``postage`` sats and the rest returns to
    ``change_script`` from the commit transaction.
    """
    if fee < 0:
        raise ValueError("fee must be non-negative")
    internal = curve.mul_g(funding_secret)
    script = reveal_script(internal, mime, content, curve)
    commitment = schnorr.taproot_output(internal, schnorr.merkle_root([script]), curve)

    if postage is None:
        if funding_value < DUST + 2 * fee:
            raise InsufficientFundsError(
                f"funding {funding_value} below dust {DUST} plus two fees of {fee}")
        commit_outputs = [TxOut(funding_value - fee, p2tr_script(commitment.output_key, curve))]
    else:
        if postage < DUST:
            raise ValueError(f"postage must be at least {DUST}")
        change = funding_value - postage - 2 * fee
        if change < 0:
            raise InsufficientFundsError(
                f"funding {funding_value} cannot cover postage {postage} and two fees of {fee}")
        commit_outputs = [TxOut(postage + fee, p2tr_script(commitment.output_key, curve))]
        if change:
            if change_script is None:
                change_script = key_spend_script(internal, curve)
            commit_outputs.append(TxOut(change, change_script))

    commit = Transaction((TxIn(funding),), tuple(commit_outputs))
    sig = sign_key_spend(commit, 0, funding, funding_secret, curve=curve, entropy=entropy)
    commit = commit.with_witnesses([(sig,)])

    prevout = OutPoint(txid(commit), 0)
    reveal = Transaction((TxIn(prevout),), (TxOut(commit_outputs[0].value - fee, destination),))
    message = sighash(reveal, 0, prevout)
    reveal_sig = schnorr.sign(funding_secret, message, entropy, curve).to_bytes(curve)
    control = control_block(internal, schnorr.merkle_proof([script], 0), curve)
    reveal = reveal.with_witnesses([(reveal_sig, script, control)])
    return InscriptionPlan(commit, reveal, commitment, script)


def find_envelope(tx: Transaction) -> Optional[Envelope]:
    """First well-formed envelope in the tapscript of any input, else None."""
    for stack in tx.witnesses:
        if len(stack) < 2:
            continue
        try:
            ops = decode_script(stack[-2])
        except ScriptDecodeError:
            continue
        env = parse_envelope(ops)
        if env is not None:
            return env
    return None


# -- index ------------------------------------------------------------------

@dataclass
class InscriptionRecord:
    id: str
    number: int
    sat: int
    mime: str
    body: bytes
    genesis_height: int
    genesis_tx_index: int
    satpoint: tuple[OutPoint, int]

    def to_json(self, params: NetworkParams = MAINNET) -> dict:
        op, offset = self.satpoint
        return {
            "id": self.id,
            "number": self.number,
            "sat": str(self.sat),
            "rarity": rarity(self.sat, params).value,
            "mime": self.mime,
            "body": self.body.hex(),
            "genesis_height": self.genesis_height,
            "satpoint": f"{op}:{offset}",
        }


@dataclass(frozen=True)
class Created:
    record: InscriptionRecord
    owner: bytes


@dataclass(frozen=True)
class Moved:
    record: InscriptionRecord
    old_satpoint: tuple[OutPoint, int]
    new_satpoint: tuple[OutPoint, int]
    old_owner: bytes
    new_owner: bytes
    via_fee: bool


@dataclass
class _Output:
    value: int
    script_pubkey: bytes
    ranges: list[SatRange]


@dataclass
class InscriptionIndex:
    params: NetworkParams = MAINNET
    records: dict[str, InscriptionRecord] = field(default_factory=dict)
    outputs: dict[OutPoint, _Output] = field(default_factory=dict)
    by_sat: dict[int, str] = field(default_factory=dict)

    def owner(self, record: InscriptionRecord) -> bytes:
        return self.outputs[record.satpoint[0]].script_pubkey

    def apply_block(self, block: Block) -> list:
        """Index one block; returns Created/Moved events in chain order."""
        events: list = []
        in_fees: list[tuple[InscriptionRecord, bytes, tuple[OutPoint, int]]] = []
        fee_ranges: list[SatRange] = []
        for tx_index, tx in enumerate(block.txs[1:], start=1):
            tid = txid(tx)
            spent = {i.prevout: self.outputs.pop(i.prevout) for i in tx.inputs}
            moving = [(r, spent[r.satpoint[0]].script_pubkey, r.satpoint)
                      for r in self.records.values() if r.satpoint[0] in spent]
            out_ranges, fee = apply_fifo([o.ranges for o in spent.values()],
                                         [o.value for o in tx.outputs])
            for vout, (o, ranges) in enumerate(zip(tx.outputs, out_ranges)):
                self.outputs[OutPoint(tid, vout)] = _Output(o.value, o.script_pubkey, ranges)
            fee_ranges.extend(fee)
            # track: each moving sat lands in an output or in the fee remainder
            for record, old_owner, old_sp in moving:
                for vout, ranges in enumerate(out_ranges):
                    offset = locate_sat(ranges, record.sat)
                    if offset is not None:
                        record.satpoint = (OutPoint(tid, vout), offset)
                        events.append(Moved(record, old_sp, record.satpoint, old_owner,
                                            tx.outputs[vout].script_pubkey, False))
                        break
                else:
                    in_fees.append((record, old_owner, old_sp))
            env = find_envelope(tx)
            if env is not None and out_ranges and out_ranges[0]:
                sat = out_ranges[0][0].start
                if sat in self.by_sat:
                    continue  # one inscription per sat; later ones are ignored
                record = InscriptionRecord(
                    id=f"{id_to_hex(tid)}i0",
                    number=len(self.records),
                    sat=sat,
                    mime=env.mime,
                    body=env.body,
                    genesis_height=block.height,
                    genesis_tx_index=tx_index,
                    satpoint=(OutPoint(tid, 0), 0),
                )
                self.records[record.id] = record
                self.by_sat[sat] = record.id
                events.append(Created(record, tx.outputs[0].script_pubkey))

        coinbase = block.coinbase
        cb_ranges: list[SatRange] = []
        if block.height <= self.params.last_height:
            start = first_sat_of_height(block.height, self.params)
            cb_ranges.append(SatRange(start, start + subsidy_at_height(block.height, self.params)))
        cb_ranges = coalesce(cb_ranges + fee_ranges)
        cb_op = OutPoint(txid(coinbase), 0)
        cb_out = coinbase.outputs[0]
        self.outputs[cb_op] = _Output(cb_out.value, cb_out.script_pubkey, cb_ranges)
        for record, old_owner, old_sp in in_fees:
            record.satpoint = (cb_op, locate_sat(cb_ranges, record.sat))
            events.append(Moved(record, old_sp, record.satpoint, old_owner, cb_out.script_pubkey, True))
        return events

    def index_block(self, block: Block) -> list[InscriptionRecord]:
        return [e.record for e in self.apply_block(block) if isinstance(e, Created)]

    def get(self, inscription_id: str) -> InscriptionRecord:
        try:
            return self.records[inscription_id]
        except KeyError:
            raise NotFoundError(inscription_id) from None

    def list(self, mime: Optional[str] = None, height: Optional[int] = None,
             min_rarity: Optional[Rarity] = None, exact_rarity: Optional[Rarity] = None
             ) -> list[InscriptionRecord]:
        out = []
        for r in self.records.values():
            if mime is not None and r.mime.split(";")[0].strip() != mime.split(";")[0].strip():
                continue
            if height is not None and r.genesis_height != height:
                continue
            tier = rarity(r.sat, self.params)
            if exact_rarity is not None and tier != exact_rarity:
                continue
            if min_rarity is not None and tier < min_rarity:
                continue
            out.append(r)
        return sorted(out, key=lambda r: (r.genesis_height, r.genesis_tx_index))
