"""
The ord-forge command line
==========================

Everything above is also reachable from a small command line tool that keeps
its chain in a JSON state file. Output is JSON by default and identical
from run to run, since keys and nonces are derived deterministically.
This walkthrough runs it in a scratch directory.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="ordforge-demo-"))
state = work / "state.json"


def ord_forge(*args, check=True):
    cmd = [sys.executable, "-m", "ordforge", "--state", str(state), "--params", "toy", *map(str, args)]
    print("$ ord-forge", " ".join(map(str, args)))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if check and proc.returncode:
        raise SystemExit(proc.stderr)
    out = proc.stdout if proc.returncode == 0 else proc.stderr
    print("  ", out.strip().replace("\n", "\n   ")[:400], f"[exit {proc.returncode}]" if proc.returncode else "")
    return json.loads(out)


# Describe a sat using the real calendar.
ord_forge("sat", "1938930000000000", "--params", "mainnet")

# Two wallets, a few blocks and a payment.
ord_forge("keygen", "--name", "alice")
ord_forge("keygen", "--name", "bob")
ord_forge("mine", "--to", "alice")
ord_forge("mine", "--to", "alice")
ord_forge("send", "--from", "alice", "--to", "bob", "--amount", 25_000, "--fee", 100)

# Inscribe a file for Bob, then find its sat.
(work / "note.txt").write_text("hello from the command line")
ins = ord_forge("inscribe", "--file", work / "note.txt", "--mime", "text/plain",
                "--from", "alice", "--dest", "bob", "--fee", 50)["inscription"]
ord_forge("where", ins["sat"])

# A token, with a transfer to Bob.
ord_forge("brc20", "deploy", "--from", "alice", "--tick", "demo", "--max", 21_000, "--lim", 1_000)
ord_forge("brc20", "mint", "--from", "alice", "--tick", "demo", "--amt", 1_000)
ticket = ord_forge("brc20", "transfer-inscribe", "--from", "alice", "--tick", "demo", "--amt", 250)
ord_forge("brc20", "transfer-send", "--from", "alice", "--to", "bob", "--inscription", ticket["inscription"]["id"])
ord_forge("brc20", "balance", "--address", "bob", "--tick", "demo")

# Errors are JSON on stderr with distinct exit codes.
ord_forge("brc20", "mint", "--tick", "demo", check=False)
ord_forge("inscriptions", "get", "00" * 32 + "i0", check=False)

# A full consistency check across chain, inscriptions and tokens.
assert ord_forge("verify-state")["ok"]
print("\nstate file:", state, f"({state.stat().st_size} bytes)")
