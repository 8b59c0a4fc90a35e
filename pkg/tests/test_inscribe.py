import pytest

from conftest import ALICE, BOB, CAROL
from ordforge.inscribe import (
    Created,
    InscriptionIndex,
    NotFoundError,
    find_envelope,
    plan_inscription,
    reveal_script,
)
from ordforge.node import build_payment
from ordforge.sat_math import TOY, Rarity
from ordforge.script import Envelope, decode_script
from ordforge.tx import InsufficientFundsError, OutPoint, txid


def test_reveal_script_layout():
    ops = decode_script(reveal_script(ALICE.pubkey, "text/plain", b"hi"))
    assert ops[1:] == [0xAC, 0, 0x63, b"ord", b"\x01", b"text/plain", 0, b"hi", 0x68]


def test_inscribe_binds_first_sat_of_first_output(toy_node):
    plan = toy_node.inscribe(b"Hello", "text/plain", ALICE.secret, BOB.script, fee=10, postage=500)
    record = toy_node.inscriptions.get(plan.inscription_id)
    assert record.body == b"Hello" and record.mime == "text/plain"
    assert record.satpoint == (OutPoint(txid(plan.reveal), 0), 0)
    assert toy_node.chain.sat_location(record.sat) == record.satpoint
    assert toy_node.chain.utxos[record.satpoint[0]].value == 500
    assert toy_node.chain.utxos[record.satpoint[0]].script_pubkey == BOB.script
    assert find_envelope(plan.reveal) == Envelope("text/plain", b"Hello")
    assert find_envelope(plan.commit) is None
    # the funding coin was the first Alice coin, so the inscribed sat is sat 0
    assert record.sat == 0 and record.number == 0
    assert record.to_json(TOY)["rarity"] == "mythic"


def test_inscription_follows_transfers_and_fees(toy_node):
    plan = toy_node.inscribe(b"x", "text/plain", ALICE.secret, BOB.script, fee=1, postage=100)
    record = toy_node.inscriptions.get(plan.inscription_id)

    # Bob pays it to Carol, and Alice gives Carol a plain coin
    op, utxo = record.satpoint[0], toy_node.chain.utxos[record.satpoint[0]]
    to_carol = build_payment([(op, utxo)], CAROL.script, 100, 0, BOB.secret)
    gift = build_payment(toy_node.spendable(ALICE.script), CAROL.script, 1000, 0, ALICE.secret)
    toy_node.mine([to_carol, gift])
    assert record.satpoint == (OutPoint(txid(to_carol), 0), 0)

    # Carol spends the plain coin first and the inscribed one last, paying the latter as fee
    coin = toy_node.spendable(CAROL.script)[0]
    inscribed = (record.satpoint[0], toy_node.chain.utxos[record.satpoint[0]])
    tx = build_payment([coin, inscribed], CAROL.script, 1000, 100, CAROL.secret)
    block = toy_node.mine([tx], BOB.script)
    assert record.satpoint[0] == OutPoint(txid(block.coinbase), 0)
    assert toy_node.chain.sat_location(record.sat) == record.satpoint
    assert toy_node.inscriptions.owner(record) == BOB.script


def test_reinscribing_a_sat_is_ignored(toy_node):
    plan = toy_node.inscribe(b"one", "text/plain", ALICE.secret, ALICE.script, fee=0, postage=1)
    # spend the inscribed 1-sat output as the sole funding of a new inscription
    inscribed = plan.reveal
    op = OutPoint(txid(inscribed), 0)
    second = plan_inscription(b"two", "text/plain", op, 1, ALICE.secret, ALICE.script, 0,
                              entropy=lambda n: 7)
    toy_node.mine([second.commit])
    toy_node.mine([second.reveal])
    assert len(toy_node.inscriptions.records) == 1
    record = toy_node.inscriptions.get(plan.inscription_id)
    assert record.satpoint[0] == OutPoint(txid(second.reveal), 0)


def test_plan_errors():
    op = OutPoint(bytes(32), 0)
    with pytest.raises(InsufficientFundsError):
        plan_inscription(b"x", "text/plain", op, 10, ALICE.secret, BOB.script, fee=5)
    with pytest.raises(InsufficientFundsError):
        plan_inscription(b"x", "text/plain", op, 10, ALICE.secret, BOB.script, fee=1, postage=9)
    with pytest.raises(ValueError):
        plan_inscription(b"x", "text/plain", op, 10, ALICE.secret, BOB.script, fee=-1)


def test_queries(toy_node):
    toy_node.inscribe(b"{}", "application/json", ALICE.secret, ALICE.script, fee=0, postage=10)
    toy_node.inscribe(b"<p>", "text/html;charset=utf-8", ALICE.secret, ALICE.script, fee=0, postage=10)
    index = toy_node.inscriptions
    assert [r.mime for r in index.list(mime="text/html")] == ["text/html;charset=utf-8"]
    assert len(index.list(min_rarity=Rarity.COMMON)) == 2
    assert len(index.list(exact_rarity=Rarity.MYTHIC)) == 1
    heights = [r.genesis_height for r in index.list()]
    assert heights == sorted(heights)
    assert index.list(height=heights[0])[0].genesis_height == heights[0]
    with pytest.raises(NotFoundError):
        index.get("00" * 32 + "i0")


def test_events_in_order(toy_node):
    index = InscriptionIndex(TOY)
    for block in toy_node.chain.blocks:
        index.apply_block(block)
    plan = toy_node.inscribe(b"e", "text/plain", ALICE.secret, BOB.script, fee=0, postage=5)
    events = index.apply_block(toy_node.chain.blocks[-2]) + index.apply_block(toy_node.chain.blocks[-1])
    assert [type(e) for e in events] == [Created]
    assert events[0].record.id == plan.inscription_id and events[0].owner == BOB.script


def test_node_fast_forward_keeps_indexes_in_step(toy_node):
    toy_node.inscribe(b"ff", "text/plain", ALICE.secret, BOB.script, fee=0, postage=5)
    toy_node.fast_forward(toy_node.chain.height + 30, CAROL.script)
    assert toy_node.chain.height == 34
    assert all(ok for _, ok, _ in toy_node.verify())
