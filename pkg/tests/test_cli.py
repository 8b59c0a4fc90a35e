import json
import subprocess
import sys

import pytest

from ordforge.cli import main


class Cli:
    def __init__(self, tmp_path, capsys):
        self.base = ["--state", str(tmp_path / "state.json"), "--params", "toy"]
        self.tmp, self.capsys = tmp_path, capsys

    def __call__(self, *args, expect=0):
        code = main([*self.base, *map(str, args)])
        out, err = self.capsys.readouterr()
        assert code == expect, err
        if expect:
            return json.loads(err)
        return json.loads(out)


@pytest.fixture
def cli(tmp_path, capsys):
    return Cli(tmp_path, capsys)


def test_sat_worked_example(cli):
    doc = cli("sat", "1938930000000000", "--params", "mainnet")
    assert doc["decimal"] == "792288.0"
    assert doc["degree"] == "0°162288′0″0‴"
    assert doc["percentile"] == "92.33000010156304%"
    assert doc["name"] == "acqgzfkezav"
    assert doc["rarity"] == "rare"
    assert cli("sat", "0")["rarity"] == "mythic"
    assert cli("sat", doc["name"], "--params", "mainnet")["integer"] == "1938930000000000"


def test_demo_flow(cli):
    alice = cli("keygen", "--name", "alice")
    bob = cli("keygen", "--name", "bob")
    assert alice["script_pubkey"].startswith("5121")
    assert cli("address", "alice") == alice
    cli("mine", "--to", "alice")
    cli("mine", "--to", "alice")
    sent = cli("send", "--from", "alice", "--to", "bob", "--amount", 1234, "--fee", 10)
    assert len(sent["txid"]) == 64

    (cli.tmp / "hello.txt").write_bytes(b"Hello, world")
    ins = cli("inscribe", "--file", cli.tmp / "hello.txt", "--mime", "text/plain", "--from", "alice",
              "--dest", "bob", "--fee", 5)["inscription"]
    assert ins["id"].endswith("i0")
    assert cli("inscriptions", "get", ins["id"]) == ins
    assert [r["id"] for r in cli("inscriptions", "list")["inscriptions"]] == [ins["id"]]
    sat = cli("sat-of", ins["id"])
    assert sat["integer"] == ins["sat"]
    where = cli("where", ins["sat"])
    assert f"{where['outpoint']}:{where['offset']}" == ins["satpoint"]
    assert where["script_pubkey"] == bob["script_pubkey"]

    cli("brc20", "deploy", "--from", "alice", "--tick", "ordi", "--max", 1000, "--lim", 500)
    cli("brc20", "mint", "--from", "alice", "--tick", "ordi", "--amt", 500)
    bal = cli("brc20", "balance", "--address", "alice", "--tick", "ORDI")
    assert bal == {"tick": "ORDI", "available": "500", "transferable": "0"}
    t = cli("brc20", "transfer-inscribe", "--from", "alice", "--tick", "ordi", "--amt", 200)
    cli("brc20", "transfer-send", "--from", "alice", "--to", "bob", "--inscription", t["inscription"]["id"])
    assert cli("brc20", "balance", "--address", "bob", "--tick", "ordi")["available"] == "200"
    info = cli("brc20", "info", "--tick", "ordi")
    assert info["minted"] == "500" and len(info["holders"]) == 2
    cli("brc20", "mint", "--from", "alice", "--tick", "ordi", "--amt", 501)
    assert cli("brc20", "audit")["audit"][0]["reason"] == "over-limit"

    report = cli("verify-state")
    assert report["ok"] and len(report["checks"]) == 8
    exported = cli("export")
    assert set(exported) == {"chain", "inscriptions", "brc20"}


def test_errors_and_exit_codes(cli):
    assert cli("brc20", "mint", "--tick", "ordi", expect=2)["error"] == "usage"
    assert cli("nonsense", expect=2)["error"] == "usage"
    assert cli("address", "nobody", expect=3)["error"] == "validation"
    assert cli("sat", "not-a-sat", expect=3)["error"] == "validation"
    cli("keygen", "--name", "a")
    assert cli("keygen", "--name", "a", expect=3)["error"] == "validation"
    assert cli("inscriptions", "get", "ff" * 32 + "i0", expect=3)["error"] == "not-found"
    assert cli("brc20", "info", "--tick", "none", expect=3)["error"] == "not-found"
    assert cli("send", "--from", "a", "--to", "a", "--amount", 1, expect=3)["error"] == "validation"
    (cli.tmp / "state.json").write_text('{"format": 1, "params"')
    assert cli("export", expect=4)["error"] == "state-corruption"


def test_verify_state_reports_violations(cli, capsys):
    cli("keygen", "--name", "a")
    cli("mine", "--to", "a")
    path = cli.tmp / "state.json"
    doc = json.loads(path.read_text())
    doc["utxos"][0]["value"] = "1"
    path.write_text(json.dumps(doc))
    code = main([*cli.base, "verify-state"])
    out, err = capsys.readouterr()
    assert code == 3
    report = json.loads(out)
    failing = {c["name"] for c in report["checks"] if not c["ok"]}
    assert {"conservation", "sat-partition", "index-utxo-agreement"} <= failing
    assert json.loads(err)["error"] == "invariant-violation"


def test_table_output(cli, capsys):
    assert main([*cli.base, "sat", "0", "--output", "table"]) == 0
    out = capsys.readouterr().out
    assert "rarity: mythic" in out.splitlines()


SCRIPT = [
    ["keygen", "--name", "alice"],
    ["mine", "--to", "alice"],
    ["inscribe", "--file", "{f}", "--mime", "text/plain", "--from", "alice"],
    ["brc20", "deploy", "--from", "alice", "--tick", "abcd", "--max", "10"],
    ["brc20", "mint", "--from", "alice", "--tick", "abcd", "--amt", "10"],
    ["brc20", "balance", "--address", "alice", "--tick", "abcd"],
    ["verify-state"],
]


def run_script(workdir):
    (workdir / "f.txt").write_text("same")
    outputs = []
    for step in SCRIPT:
        args = [a.format(f=workdir / "f.txt") for a in step]
        proc = subprocess.run(
            [sys.executable, "-m", "ordforge", "--state", str(workdir / "s.json"), "--params", "toy", *args],
            capture_output=True, check=True)
        outputs.append(proc.stdout)
    return outputs


def test_runs_are_byte_identical(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first, second = run_script(tmp_path / "a"), run_script(tmp_path / "b")
    assert first == second
    assert json.loads(first[5])["available"] == "10"
    assert json.loads(first[-1])["ok"]
