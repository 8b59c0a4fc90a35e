"""
A BRC-20 token from deploy to transfer
======================================

BRC-20 balances are not enforced by Bitcoin at all. They are a reading of
JSON inscriptions: a deploy fixes a ticker and its supply, mints credit the
inscriber, and a transfer is inscribed first and only moves the balance when
that inscription is sent on.
"""

import json

from ordforge import TOY, Chain, Node, schnorr
from ordforge.brc20 import Brc20Event, event_json
from ordforge.chain import key_spend_script
from ordforge.node import build_payment

C = schnorr.SECP256K1
alice, bob = 0xA11CE, 0xB0B
script = {d: key_spend_script(C.mul_g(d)) for d in (alice, bob)}
addr = {d: s.hex() for d, s in script.items()}

node = Node(Chain(TOY))
node.mine((), script[alice])
node.mine((), script[bob])


def inscribe(secret, event):
    body = event_json(event)
    plan = node.inscribe(body, "text/plain;charset=utf-8", secret, script[secret], fee=0, postage=546)
    print("inscribed", body.decode())
    return plan.inscription_id


def balances(label):
    state = node.brc20.state
    row = {who: state.balance(addr[d], "ordi") for who, d in (("alice", alice), ("bob", bob))}
    print(f"  {label:<34}" + "  ".join(f"{who}: {b.available}+{b.transferable}" for who, b in row.items()))


inscribe(alice, Brc20Event("deploy", "ordi", max=1000, lim=300))
inscribe(alice, Brc20Event("mint", "ordi", amt=300))
inscribe(bob, Brc20Event("mint", "ordi", amt=300))
balances("after two mints (avail+transfer)")

# Over the per-mint limit, so nothing happens and the audit log says why.
inscribe(bob, Brc20Event("mint", "ordi", amt=301))
print("  audit:", [(e.op, e.reason) for e in node.brc20.state.audit_log()])

# Alice locks 120 of her balance into a transfer inscription.
ticket = inscribe(alice, Brc20Event("transfer", "ordi", amt=120))
balances("transfer inscribed")

# Sending the inscription to Bob completes the transfer.
record = node.inscriptions.get(ticket)
coin = (record.satpoint[0], node.chain.utxos[record.satpoint[0]])
node.mine([build_payment([coin], script[bob], 546, 0, alice)])
balances("transfer sent to bob")

# Mints are clipped to what is left of the supply.
inscribe(bob, Brc20Event("mint", "ordi", amt=300))
inscribe(alice, Brc20Event("mint", "ordi", amt=300))
balances("supply exhausted")
info = node.brc20.state.tick_info("ordi")
print(f"\nminted {info.minted} of {info.max}")
print("state hash", node.brc20.state.state_hash())
print(json.dumps(node.brc20.state.to_json()["ticks"], indent=2, sort_keys=True))
