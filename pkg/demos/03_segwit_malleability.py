"""
Why witness data cannot change a txid
=====================================

A transaction id hashes the serialization without witnesses. Witness bytes
only reach the wtxid, so tampering with a signature cannot create a second
id for the same payment. Witness bytes also cost a quarter of what base bytes
do in block weight.
"""

from ordforge.tx import (OutPoint, Transaction, TxIn, TxOut, serialize_base, serialize_full,
                         txid, weight, wtxid)

tx = Transaction(
    inputs=(TxIn(OutPoint(bytes.fromhex("11" * 32), 0)),),
    outputs=(TxOut(50_000, bytes.fromhex("5121" + "02" + "ab" * 32)),),
    witnesses=((b"\x30" * 65,),),
)

print("base bytes:", len(serialize_base(tx)), " full bytes:", len(serialize_full(tx)))
print("weight:", weight(tx), "= 3 x base + full")
print("txid :", txid(tx).hex())
print("wtxid:", wtxid(tx).hex())

# Flip one bit of the signature.
sig = bytearray(tx.witnesses[0][0])
sig[10] ^= 0x01
mutated = tx.with_witnesses([(bytes(sig),)])
print("\nafter flipping one witness bit")
print("txid :", txid(mutated).hex(), "(unchanged)" if txid(mutated) == txid(tx) else "(changed!)")
print("wtxid:", wtxid(mutated).hex())

# A 99-byte witness item plus its length prefix adds 100 weight units. The
# same 100 bytes in an output script add 400.
padded = tx.with_witnesses([(bytes(sig), b"\x00" * 99)])
fat_output = Transaction(tx.inputs, (TxOut(50_000, tx.outputs[0].script_pubkey + b"\x00" * 100),),
                         tx.witnesses)
print("\nextra weight from 100 witness bytes:", weight(padded) - weight(tx))
print("extra weight from 100 output bytes: ", weight(fat_output) - weight(tx))
