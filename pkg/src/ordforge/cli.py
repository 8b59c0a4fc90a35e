"""Command line front end for the simulator.

Every command prints one JSON document on stdout.  Failures print a single
JSON line on stderr and exit with 2 (usage), 3 (validation) or 4 (corrupt
state).
"""

from __future__ import annotations

import argparse
import fcntl
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

from . import schnorr
from .brc20 import Brc20Event, NotFoundError as TickNotFound, event_json
from .chain import Chain, StateError, block_summary, key_spend_script
from .inscribe import NotFoundError as InscriptionNotFound
from .node import Node, build_payment
from .sat_math import PRESETS, Rarity, describe, parse_notation
from .tx import deserialize, id_to_hex, txid

EXIT_USAGE, EXIT_VALIDATION, EXIT_STATE = 2, 3, 4
DEFAULT_SEED = "ord-forge simulator"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- keystore ---------------------------------------------------------------

class Keystore:
    """Named secrets in a JSON file.  Keys are unencrypted; simulator use only."""

    def __init__(self, path: Path):
        self.path = path
        if path.exists():
            try:
                self.doc = json.loads(path.read_text())
                self.doc["keys"]
            except (ValueError, KeyError, TypeError) as exc:
                raise StateError(str(path), f"unreadable keystore: {exc}") from None
        else:
            self.doc = {"seed": DEFAULT_SEED, "counter": 0, "keys": {}}

    def save(self) -> None:
        self.path.write_text(json.dumps(self.doc, sort_keys=True, indent=1) + "\n")

    def generate(self, name: Optional[str], random: bool) -> tuple[str, int]:
        counter = self.doc["counter"]
        name = name or f"key{counter}"
        if name in self.doc["keys"]:
            raise ValueError(f"key {name!r} already exists")
        if random:
            d = schnorr.keygen().d
        else:
            seed = f"{self.doc['seed']}/{counter}".encode()
            d = schnorr.deterministic_nonce(1, seed)
        self.doc["counter"] = counter + 1
        self.doc["keys"][name] = {"secret": f"{d:064x}"}
        return name, d

    def secret(self, name: str) -> int:
        try:
            return int(self.doc["keys"][name]["secret"], 16)
        except KeyError:
            raise ValueError(f"unknown key {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self.doc["keys"])


def key_info(name: str, d: int) -> dict:
    curve = schnorr.SECP256K1
    Q = curve.mul_g(d)
    commitment = schnorr.taproot_output(Q)
    return {
        "name": name,
        "pubkey": curve.encode_point(Q).hex(),
        "output_key": curve.encode_point(commitment.output_key).hex(),
        "script_pubkey": key_spend_script(Q).hex(),
    }


# -- session ----------------------------------------------------------------

class Session:
    def __init__(self, args):
        self.args = args
        self.state_path = Path(args.state)
        self.keystore = Keystore(Path(args.keystore) if args.keystore
                                 else self.state_path.with_name(self.state_path.stem + ".keys.json"))
        if self.state_path.exists():
            chain = Chain.load(self.state_path)
        else:
            chain = Chain(PRESETS[args.params], validate_signatures=not args.no_validate)
        self.node = Node(chain, strict_ticks=not args.relaxed_ticks)

    @property
    def chain(self) -> Chain:
        return self.node.chain

    def save(self) -> None:
        self.chain.save(self.state_path)
        self.keystore.save()

    def script_for(self, dest: str) -> bytes:
        """A keystore name or a hex script_pubkey."""
        if dest in self.keystore.doc["keys"]:
            return key_spend_script(schnorr.SECP256K1.mul_g(self.keystore.secret(dest)))
        try:
            return bytes.fromhex(dest)
        except ValueError:
            raise ValueError(f"{dest!r} is neither a key name nor a hex script") from None


@contextmanager
def _locked(path: Path):
    lock_path = path.with_name(path.name + ".lock")
    with open(lock_path, "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


# -- commands ---------------------------------------------------------------

def cmd_sat(args, session=None):
    params = PRESETS[args.params]
    return describe(parse_notation(args.notation, params), params)


def cmd_keygen(args, s: Session):
    name, d = s.keystore.generate(args.name, args.random)
    s.keystore.save()
    return key_info(name, d)


def cmd_address(args, s: Session):
    return key_info(args.name, s.keystore.secret(args.name))


def cmd_mine(args, s: Session):
    txs = [deserialize(bytes.fromhex(Path(f).read_text().strip())) for f in args.tx or []]
    block = s.node.mine(txs, s.script_for(args.to) if args.to else b"")
    s.save()
    return block_summary(block)


def cmd_send(args, s: Session):
    secret = s.keystore.secret(args.sender)
    source = s.script_for(args.sender)
    tx = build_payment(s.node.spendable(source), s.script_for(args.to), args.amount, args.fee, secret)
    block = s.node.mine([tx], s.script_for(args.miner) if args.miner else source)
    s.save()
    return {"txid": id_to_hex(txid(tx)), "block": block_summary(block)}


def cmd_inscribe(args, s: Session):
    content = Path(args.file).read_bytes()
    return _inscribe(s, args.sender, content, args.mime, args.dest, args.fee, args.postage, args.miner)


def _inscribe(s: Session, sender, content, mime, dest, fee, postage, miner):
    secret = s.keystore.secret(sender)
    destination = s.script_for(dest) if dest else s.script_for(sender)
    miner_script = s.script_for(miner) if miner else s.script_for(sender)
    plan = s.node.inscribe(content, mime, secret, destination, fee, postage, miner_script)
    s.save()
    record = s.node.inscriptions.get(plan.inscription_id)
    return {
        "inscription": record.to_json(s.chain.params),
        "commit_txid": id_to_hex(txid(plan.commit)),
        "reveal_txid": id_to_hex(txid(plan.reveal)),
    }


def cmd_inscriptions(args, s: Session):
    params = s.chain.params
    if args.action == "get":
        if not args.id:
            raise UsageError("inscriptions get needs an inscription id")
        return s.node.inscriptions.get(args.id).to_json(params)
    records = s.node.inscriptions.list(
        mime=args.mime, height=args.height,
        exact_rarity=Rarity(args.rarity) if args.rarity else None,
        min_rarity=Rarity(args.min_rarity) if args.min_rarity else None)
    return {"inscriptions": [r.to_json(params) for r in records]}


def cmd_sat_of(args, s: Session):
    record = s.node.inscriptions.get(args.id)
    return {"inscription": record.id, **describe(record.sat, s.chain.params)}


def cmd_where(args, s: Session):
    sat = parse_notation(args.sat, s.chain.params)
    found = s.chain.sat_location(sat)
    if found is None:
        return {"sat": str(sat), "location": None}
    op, offset = found
    utxo = s.chain.utxos[op]
    return {"sat": str(sat), "outpoint": str(op), "offset": str(offset),
            "script_pubkey": utxo.script_pubkey.hex(), "value": str(utxo.value)}


def cmd_brc20(args, s: Session):
    state = s.node.brc20.state
    action = args.action
    if action in ("deploy", "mint", "transfer-inscribe"):
        if action == "deploy":
            event = Brc20Event("deploy", args.tick, max=args.max, lim=args.lim)
        else:
            event = Brc20Event("mint" if action == "mint" else "transfer", args.tick, amt=args.amt)
        return _inscribe(s, args.sender, event_json(event), "text/plain;charset=utf-8",
                         None, args.fee, args.postage, args.miner)
    if action == "transfer-send":
        record = s.node.inscriptions.get(args.inscription)
        op = record.satpoint[0]
        utxo = s.chain.utxos[op]
        secret = s.keystore.secret(args.sender)
        if utxo.script_pubkey != s.script_for(args.sender):
            raise ValueError(f"inscription {record.id} is not held by {args.sender}")
        tx = build_payment([(op, utxo)], s.script_for(args.to), utxo.value - args.fee, args.fee, secret)
        block = s.node.mine([tx], s.script_for(args.miner) if args.miner else utxo.script_pubkey)
        s.save()
        return {"txid": id_to_hex(txid(tx)), "block": block_summary(block)}
    if action == "balance":
        bal = state.balance(s.script_for(args.address).hex(), args.tick)
        return {"tick": args.tick, "available": str(bal.available), "transferable": str(bal.transferable)}
    if action == "info":
        info = state.tick_info(args.tick)
        return {"tick": info.tick, "max": str(info.max), "lim": str(info.lim),
                "minted": str(info.minted), "deploy_inscription": info.deploy_inscription,
                "deploy_height": info.deploy_height,
                "holders": {a: {"available": str(b.available), "transferable": str(b.transferable)}
                            for a, b in state.holders(args.tick).items()}}
    if action == "audit":
        return {"audit": [e.__dict__ for e in state.audit_log(args.from_height, args.to_height)]}
    raise UsageError(f"unknown brc20 action {action}")


def cmd_export(args, s: Session):
    return {
        "chain": s.chain.to_json(),
        "inscriptions": [r.to_json(s.chain.params) for r in s.node.inscriptions.list()],
        "brc20": s.node.brc20.state.to_json(),
    }


def cmd_verify_state(args, s: Session):
    results = s.node.verify()
    report = {"checks": [{"name": n, "ok": ok, "detail": d} for n, ok, d in results],
              "ok": all(ok for _, ok, _ in results)}
    if not report["ok"]:
        raise _Failed(report)
    return report


class _Failed(Exception):
    def __init__(self, report):
        super().__init__("invariant check failed")
        self.report = report


# -- parser -----------------------------------------------------------------

def _global_options(p: argparse.ArgumentParser, suppress: bool) -> None:
    def default(value):
        return argparse.SUPPRESS if suppress else value

    p.add_argument("--state", default=default(os.environ.get("ORDFORGE_STATE", "ordforge-state.json")))
    p.add_argument("--keystore", default=default(os.environ.get("ORDFORGE_KEYSTORE")))
    p.add_argument("--params", choices=sorted(PRESETS), default=default("mainnet"),
                   help="calendar preset for new state files and for `sat`")
    p.add_argument("--no-validate", action="store_true", default=default(False),
                   help="create state without signature checks")
    p.add_argument("--relaxed-ticks", action="store_true", default=default(False),
                   help="accept non-letter BRC-20 ticks")
    p.add_argument("--output", choices=("json", "table"), default=default("json"))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ord-forge", description="Ordinals, inscriptions and BRC-20 on a local chain")
    _global_options(p, suppress=False)
    # the same options are accepted after the subcommand name too
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    c = sub.add_parser("sat", help="all notations and rarity of a sat")
    c.add_argument("notation")
    c.set_defaults(func=cmd_sat, stateless=True)

    c = sub.add_parser("keygen")
    c.add_argument("--name")
    c.add_argument("--random", action="store_true", help="use system entropy instead of the seed")
    c.set_defaults(func=cmd_keygen)

    c = sub.add_parser("address")
    c.add_argument("name")
    c.set_defaults(func=cmd_address)

    c = sub.add_parser("mine")
    c.add_argument("--to")
    c.add_argument("--tx", action="append", help="file holding a hex transaction")
    c.set_defaults(func=cmd_mine)

    c = sub.add_parser("send")
    c.add_argument("--from", dest="sender", required=True)
    c.add_argument("--to", required=True)
    c.add_argument("--amount", type=int, required=True)
    c.add_argument("--fee", type=int, default=0)
    c.add_argument("--miner")
    c.set_defaults(func=cmd_send)

    c = sub.add_parser("inscribe")
    c.add_argument("--file", required=True)
    c.add_argument("--mime", required=True)
    c.add_argument("--from", dest="sender", required=True)
    c.add_argument("--dest")
    c.add_argument("--fee", type=int, default=0)
    c.add_argument("--postage", type=int, default=10_000)
    c.add_argument("--miner")
    c.set_defaults(func=cmd_inscribe)

    c = sub.add_parser("inscriptions")
    c.add_argument("action", choices=("list", "get"))
    c.add_argument("id", nargs="?")
    c.add_argument("--mime")
    c.add_argument("--height", type=int)
    c.add_argument("--rarity", choices=[r.value for r in Rarity])
    c.add_argument("--min-rarity", choices=[r.value for r in Rarity])
    c.set_defaults(func=cmd_inscriptions)

    c = sub.add_parser("sat-of")
    c.add_argument("id")
    c.set_defaults(func=cmd_sat_of)

    c = sub.add_parser("where")
    c.add_argument("sat")
    c.set_defaults(func=cmd_where)

    c = sub.add_parser("brc20")
    c.add_argument("action", choices=("deploy", "mint", "transfer-inscribe", "transfer-send",
                                      "balance", "info", "audit"))
    c.add_argument("--from", dest="sender")
    c.add_argument("--to")
    c.add_argument("--tick")
    c.add_argument("--max", type=int)
    c.add_argument("--lim", type=int)
    c.add_argument("--amt", type=int)
    c.add_argument("--inscription")
    c.add_argument("--address")
    c.add_argument("--fee", type=int, default=0)
    c.add_argument("--postage", type=int, default=546)
    c.add_argument("--miner")
    c.add_argument("--from-height", type=int, default=0)
    c.add_argument("--to-height", type=int)
    c.set_defaults(func=cmd_brc20)

    c = sub.add_parser("export")
    c.set_defaults(func=cmd_export)

    c = sub.add_parser("verify-state")
    c.set_defaults(func=cmd_verify_state)
    return p


_REQUIRED = {
    "deploy": ("sender", "tick", "max"),
    "mint": ("sender", "tick", "amt"),
    "transfer-inscribe": ("sender", "tick", "amt"),
    "transfer-send": ("sender", "inscription", "to"),
    "balance": ("address", "tick"),
    "info": ("tick",),
    "audit": (),
}
_FLAG_NAMES = {"sender": "--from"}


def _render(doc, mode: str) -> str:
    if mode == "json":
        return json.dumps(doc, sort_keys=True, ensure_ascii=False)
    lines = []

    def walk(prefix, value):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        elif isinstance(value, list):
            for i, v in enumerate(value):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}: {value}")

    walk("", doc)
    return "\n".join(lines)


def _fail(code: int, kind: str, message: str, extra: Optional[dict] = None) -> int:
    doc = {"error": kind, "message": message, **(extra or {})}
    print(json.dumps(doc, sort_keys=True, ensure_ascii=False), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "brc20":
            missing = [f for f in _REQUIRED[args.action] if getattr(args, f) is None]
            if missing:
                flags = ", ".join(_FLAG_NAMES.get(m, "--" + m) for m in missing)
                raise UsageError(f"brc20 {args.action} requires {flags}")
        if getattr(args, "stateless", False):
            result = args.func(args)
        else:
            state_path = Path(args.state)
            with _locked(state_path):
                result = args.func(args, Session(args))
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except StateError as exc:
        return _fail(EXIT_STATE, "state-corruption", str(exc))
    except _Failed as exc:
        print(_render(exc.report, "json"))
        return _fail(EXIT_VALIDATION, "invariant-violation", str(exc))
    except (TickNotFound, InscriptionNotFound) as exc:
        return _fail(EXIT_VALIDATION, "not-found", str(exc.args[0]))
    except (ValueError, OSError) as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    print(_render(result, args.output))
    return 0


if __name__ == "__main__":
    sys.exit(main())
