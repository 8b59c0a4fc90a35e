"""A chain plus the indexes that follow it, and wallet-side spend helpers."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from . import schnorr
from .brc20 import Brc20Indexer
from .chain import Block, Chain, Utxo, block_hash, key_spend_script, sighash
from .inscribe import InscriptionIndex, InscriptionPlan, plan_inscription
from .sat_math import Rarity, first_sat_of_height, rarity, subsidy_at_height
from .tx import (
    InsufficientFundsError,
    OutPoint,
    Transaction,
    TxIn,
    TxOut,
    check_block_limits,
    total_size,
)


def sign_inputs(tx: Transaction, prevouts: Sequence[OutPoint], secret: int,
                curve: schnorr.CurveParams = schnorr.SECP256K1) -> Transaction:
    """Key-path sign every input with deterministic nonces."""
    tweaked = schnorr.tweak_secret(secret, None, curve)
    witnesses = []
    for index, prevout in enumerate(prevouts):
        message = sighash(tx, index, prevout)
        k = schnorr.deterministic_nonce(tweaked, message, curve)
        witnesses.append((schnorr.sign(tweaked, message, curve=curve, nonce=k).to_bytes(curve),))
    return tx.with_witnesses(witnesses)


def build_payment(coins: Sequence[tuple[OutPoint, Utxo]], destination: bytes, amount: int,
                  fee: int, secret: int, change_script: Optional[bytes] = None,
                  curve: schnorr.CurveParams = schnorr.SECP256K1) -> Transaction:
    """Pay ``amount`` to ``destination`` from ``coins``, in order, with change."""
    if amount < 0 or fee < 0:
        raise ValueError("amount and fee must be non-negative")
    chosen, total = [], 0
    for op, utxo in coins:
        if total >= amount + fee:
            break
        chosen.append(op)
        total += utxo.value
    if total < amount + fee:
        raise InsufficientFundsError(f"need {amount + fee} sats, have {total}")
    outputs = [TxOut(amount, destination)]
    change = total - amount - fee
    if change:
        if change_script is None:
            change_script = key_spend_script(curve.mul_g(secret), curve)
        outputs.append(TxOut(change, change_script))
    tx = Transaction(tuple(TxIn(op) for op in chosen), tuple(outputs))
    return sign_inputs(tx, chosen, secret, curve)


class Node:
    def __init__(self, chain: Chain, strict_ticks: bool = True):
        self.chain = chain
        self.inscriptions = InscriptionIndex(chain.params)
        self.brc20 = Brc20Indexer(strict_ticks)
        for block in chain.blocks:
            self._index(block)

    def _index(self, block: Block) -> list:
        events = self.inscriptions.apply_block(block)
        self.brc20.apply(events, block.height)
        return events

    def mine(self, txs: Iterable[Transaction] = (), miner_script: bytes = b"") -> Block:
        block = self.chain.mine_block(tuple(txs), miner_script)
        self._index(block)
        return block

    def fast_forward(self, height: int, miner_script: bytes = b"") -> None:
        """Mine and index empty blocks until the next block to mine is ``height``."""
        while self.chain.height < height:
            self.mine((), miner_script)

    def inscribed_outpoints(self) -> set[OutPoint]:
        return {r.satpoint[0] for r in self.inscriptions.records.values()}

    def spendable(self, script_pubkey: bytes) -> list[tuple[OutPoint, Utxo]]:
        """UTXOs of ``script_pubkey`` that carry no inscription, largest first."""
        inscribed = self.inscribed_outpoints()
        coins = [(op, u) for op, u in self.chain.list_utxos(script_pubkey) if op not in inscribed]
        return sorted(coins, key=lambda c: -c[1].value)

    def inscribe(self, content: bytes, mime: str, secret: int, destination: bytes, fee: int,
                 postage: Optional[int] = None, miner_script: bytes = b"") -> InscriptionPlan:
        """Commit in one block, reveal in the next."""
        curve = self.chain.curve
        script = key_spend_script(curve.mul_g(secret), curve)
        coins = self.spendable(script)
        if not coins:
            raise InsufficientFundsError("no spendable funding output")
        funding, utxo = coins[0]
        plan = plan_inscription(
            content, mime, funding, utxo.value, secret, destination, fee, postage=postage,
            curve=curve, entropy=_nonce_source(secret, content, curve))
        self.mine([plan.commit], miner_script)
        self.mine([plan.reveal], miner_script)
        return plan

    # -- invariants ------------------------------------------------------

    def verify(self) -> list[tuple[str, bool, str]]:
        """Re-check every cross-module invariant; returns (name, ok, detail)."""
        chain, params = self.chain, self.chain.params
        results = []

        def check(name, problems):
            results.append((name, not problems, "; ".join(problems[:5])))

        issued = chain.issued()
        total_value = sum(u.value for u in chain.utxos.values())
        subsidies = sum(subsidy_at_height(h, params) for h in range(chain.height))
        check("conservation", [] if total_value == subsidies == issued
              else [f"utxo value {total_value}, subsidies {subsidies}, issued {issued}"])

        problems = []
        ranges = sorted(r for u in chain.utxos.values() for r in u.ranges)
        cursor = 0
        for r in ranges:
            if r.start != cursor:
                problems.append(f"gap or overlap at sat {cursor} (next range {r.start})")
                break
            cursor = r.end
        if cursor != issued and not problems:
            problems.append(f"ranges end at {cursor}, issued {issued}")
        for op, u in chain.utxos.items():
            if total_size(u.ranges) != u.value:
                problems.append(f"{op}: ranges hold {total_size(u.ranges)} sats, value {u.value}")
        check("sat-partition", problems)

        problems = []
        for h in range(min(chain.height, params.last_height + 1)):
            first = first_sat_of_height(h, params)
            if rarity(first, params) < Rarity.UNCOMMON:
                problems.append(f"first sat of block {h} is common")
            if subsidy_at_height(h, params) > 1 and rarity(first + 1, params) != Rarity.COMMON:
                problems.append(f"second sat of block {h} is not common")
        check("uncommon-census", problems)

        problems = []
        prev = bytes(32)
        for block in chain.blocks:
            if block.prev_hash != prev or block_hash(block.height, prev, block.txs) != block.hash:
                problems.append(f"block {block.height} hash chain broken")
            try:
                check_block_limits(block.txs)
            except ValueError as exc:
                problems.append(f"block {block.height}: {exc}")
            prev = block.hash
        check("block-chain", problems)

        problems = []
        for record in self.inscriptions.records.values():
            where = chain.sat_location(record.sat)
            if where != record.satpoint:
                problems.append(f"{record.id}: index says {record.satpoint}, chain says {where}")
        check("inscription-locations", problems)

        index_view = {op: (o.value, o.script_pubkey, o.ranges)
                      for op, o in self.inscriptions.outputs.items()}
        chain_view = {op: (u.value, u.script_pubkey, u.ranges) for op, u in chain.utxos.items()}
        check("index-utxo-agreement", [] if index_view == chain_view else ["index and chain UTXO sets differ"])

        check("brc20-conservation", self.brc20.state.check_conservation())
        replayed = Node(chain, self.brc20.strict_ticks)
        check("brc20-replay", [] if replayed.brc20.state.state_hash() == self.brc20.state.state_hash()
              else ["replayed BRC-20 state differs"])
        return results


def _nonce_source(secret: int, salt: bytes, curve: schnorr.CurveParams):
    """Deterministic stand-in for an entropy source (repeatable simulator runs)."""
    counter = [0]

    def draw(bound: int) -> int:
        counter[0] += 1
        data = salt + counter[0].to_bytes(4, "big")
        return schnorr.deterministic_nonce(secret, data, curve) % bound

    return draw

