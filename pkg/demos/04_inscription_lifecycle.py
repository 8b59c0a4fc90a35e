"""
Following an inscription
========================

An inscription is created in two steps. A commit transaction pays to a
taproot output whose hidden script carries the content, and a reveal
transaction spends it and exposes that script in its witness. The content is
bound to the first sat of the reveal's first output, and from then on it
travels with that sat, even when the sat is paid as a fee.
"""

from ordforge import TOY, Chain, Node, schnorr
from ordforge.chain import key_spend_script
from ordforge.inscribe import find_envelope
from ordforge.node import build_payment, sign_inputs
from ordforge.tx import Transaction, TxIn, TxOut, txid

C = schnorr.SECP256K1
alice, bob, carol = 0xA11CE, 0xB0B, 0xCA501
script = {d: key_spend_script(C.mul_g(d)) for d in (alice, bob, carol)}
name = {script[alice]: "alice", script[bob]: "bob", script[carol]: "carol", b"": "nobody"}

node = Node(Chain(TOY))
node.mine((), script[alice])
node.mine((), script[carol])


def show(label, record):
    op, offset = record.satpoint
    owner = name.get(node.chain.utxos[op].script_pubkey, "?")
    assert node.chain.sat_location(record.sat) == record.satpoint
    print(f"{label:<28} sat {record.sat} at {op.txid.hex()[:12]}..:{op.vout}:{offset} owned by {owner}")


plan = node.inscribe(b"gm, ordinals", "text/plain;charset=utf-8", alice, script[bob], fee=20, postage=600)
record = node.inscriptions.get(plan.inscription_id)
print("inscription", record.id)
print("commit", txid(plan.commit).hex(), "reveal", txid(plan.reveal).hex())
print("envelope in reveal witness:", find_envelope(plan.reveal))
show("after reveal", record)

# Bob sends it to Carol. The inscribed sat sits at offset 0, so it lands at
# the start of the first output.
coin = (record.satpoint[0], node.chain.utxos[record.satpoint[0]])
node.mine([build_payment([coin], script[carol], 600, 0, bob)])
show("bob -> carol", record)

# Carol spends a plain coin first and the inscribed coin second, paying most
# of the plain coin to Alice and keeping two outputs. Sats flow first in
# first out, so the inscribed sat ends up 100 sats into Carol's last output.
plain = node.spendable(script[carol])[0]
coin = record.satpoint[0]
tx = Transaction((TxIn(plain[0]), TxIn(coin)),
                 (TxOut(plain[1].value - 1100, script[alice]), TxOut(1000, script[carol]),
                  TxOut(700, script[carol])))
node.mine([sign_inputs(tx, [plain[0], coin], carol)])
show("carol split", record)

# Finally the inscribed coin is spent entirely as fee after a plain input.
# The miner of the block collects it in the coinbase, behind the subsidy.
plain = node.spendable(script[carol])[0]
coin = record.satpoint[0]
tx = Transaction((TxIn(plain[0]), TxIn(coin)), (TxOut(plain[1].value, script[carol]),))
node.mine([sign_inputs(tx, [plain[0], coin], carol)], script[bob])
show("spent as fee", record)

print("\ninvariants:")
for check, ok, detail in node.verify():
    print(f"  {check:<22} {'ok' if ok else detail}")
