"""
Three spending paths behind one key
===================================

Alice, Bob and Carol lock coins to a single taproot output. Behind it sit
a 2-of-3 multisig leaf, an Alice-only leaf that waits 52,560 blocks, and a
key path that all three can sign cooperatively. On chain, the output looks
like any other single-key output.
"""

import random

from ordforge import schnorr
from ordforge.chain import Chain, TxValidationError, control_block, key_spend_script, p2tr_script, sighash
from ordforge.node import Node, sign_inputs
from ordforge.sat_math import TOY
from ordforge.script import (OP_CHECKSEQUENCEVERIFY, OP_CHECKSIG, OP_CHECKSIGADD, OP_DROP,
                             OP_GREATERTHANOREQUAL, encode_script, push_int)
from ordforge.tx import OutPoint, Transaction, TxIn, TxOut, txid

C = schnorr.SECP256K1
rng = random.Random(2024)
secrets = {name: rng.randrange(1, C.n) for name in ("alice", "bob", "carol")}
keys = {name: C.mul_g(d) for name, d in secrets.items()}

# Build the two leaves and commit to them with a Merkle root.
multisig = encode_script([
    C.encode_point(keys["alice"]), OP_CHECKSIG,
    C.encode_point(keys["bob"]), OP_CHECKSIGADD,
    C.encode_point(keys["carol"]), OP_CHECKSIGADD,
    push_int(2), OP_GREATERTHANOREQUAL])
timelock = encode_script([push_int(52_560), OP_CHECKSEQUENCEVERIFY, OP_DROP,
                          C.encode_point(keys["alice"]), OP_CHECKSIG])
leaves = [multisig, timelock]
root = schnorr.merkle_root(leaves)

internal = schnorr.aggregate_keys(list(keys.values()))
commitment = schnorr.taproot_output(internal, root)
locking = p2tr_script(commitment.output_key)
print("output key:", C.encode_point(commitment.output_key).hex())

# Alice mines a block and funds three outputs under the shared key.
node = Node(Chain(TOY))
alice_script = key_spend_script(keys["alice"])
node.mine((), alice_script)
(coin, utxo), = node.spendable(alice_script)
fund = Transaction((TxIn(coin),), (TxOut(1000, locking),) * 3
                   + (TxOut(utxo.value - 3000, alice_script),))
fund = sign_inputs(fund, [coin], secrets["alice"])
node.mine([fund])
funded_at = node.chain.height - 1
outs = [OutPoint(txid(fund), i) for i in range(3)]


def leaf_spend(op, leaf, signers):
    tx = Transaction((TxIn(op),), (TxOut(1000, alice_script),))
    msg = sighash(tx, 0, op)
    sig = {n: schnorr.sign(secrets[n], msg, rng.randrange).to_bytes() for n in signers}
    if leaf == 0:
        # CHECKSIGADD pops in reverse key order, an empty item counts as "no"
        stack = [sig.get("carol", b""), sig.get("bob", b""), sig.get("alice", b"")]
    else:
        stack = [sig["alice"]]
    proof = control_block(internal, schnorr.merkle_proof(leaves, leaf))
    return tx.with_witnesses([(*stack, leaves[leaf], proof)])


# Path 1: the multisig leaf. One signature is not enough, two are.
try:
    node.mine([leaf_spend(outs[0], 0, ["alice"])])
except TxValidationError as err:
    print("alice alone:", err)
node.mine([leaf_spend(outs[0], 0, ["alice", "bob"])])
print("alice + bob: accepted")

# Path 2: the timelock leaf. Skip ahead to one block short of the delay.
node.fast_forward(funded_at + 52_559)
try:
    node.mine([leaf_spend(outs[1], 1, ["alice"])])
except TxValidationError as err:
    print("after 52,559 blocks:", err)
node.fast_forward(funded_at + 52_560)
node.mine([leaf_spend(outs[1], 1, ["alice"])])
print("after 52,560 blocks: accepted")

# Path 3: the key path. Summing the three secrets gives the secret of the
# aggregated key; the tweak binds it to the script tree.
tx = Transaction((TxIn(outs[2]),), (TxOut(1000, alice_script),))
tweaked = schnorr.tweak_secret(sum(secrets.values()) % C.n, root)
sig = schnorr.sign(tweaked, sighash(tx, 0, outs[2]), rng.randrange)
node.mine([tx.with_witnesses([(sig.to_bytes(),)])])
print("cooperative key path: accepted, witness is one", len(sig.to_bytes()), "byte signature")

print("\nall invariants hold:", all(ok for _, ok, _ in node.verify()))
