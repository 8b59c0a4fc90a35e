"""BRC-20 token state driven by inscription events.

Operations never reject anything at the chain level.  An operation that is
not valid for the current token state is *inert*: it changes nothing and is
written to the audit log with a reason.

Transfers take two steps.  Inscribing a ``transfer`` moves ``amt`` from the
owner's available balance to their transferable balance and attaches a
pending credit to the inscription.  When that inscription first changes hands
on chain, the credit settles to the receiver's available balance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .inscribe import Created, Moved
from .script import Envelope

PROTOCOL = "brc-20"
MAX_AMOUNT = 2**64 - 1
OPS = ("deploy", "mint", "transfer")


class NotFoundError(KeyError):
    pass


@dataclass(frozen=True)
class Brc20Event:
    op: str
    tick: str
    max: Optional[int] = None
    lim: Optional[int] = None
    amt: Optional[int] = None
    p: str = PROTOCOL

    @property
    def key(self) -> str:
        return self.tick.casefold()


def _amount(value) -> Optional[int]:
    if not isinstance(value, str) or not value.isascii() or not value.isdigit():
        return None
    n = int(value)
    return n if n <= MAX_AMOUNT else None


def valid_tick(tick, strict: bool = True) -> bool:
    if not isinstance(tick, str) or len(tick) != 4 or not tick.isascii():
        return False
    if strict:
        return tick.isalpha()
    return all(c.isprintable() and not c.isspace() for c in tick)


def _is_text(mime: str) -> bool:
    base = mime.split(";")[0].strip().lower()
    return base.startswith("text/") or base == "application/json"


def parse_brc20(envelope: Envelope, strict: bool = True) -> Optional[Brc20Event]:
    if not _is_text(envelope.mime):
        return None
    try:
        doc = json.loads(envelope.body.decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        return None
    if not isinstance(doc, dict) or doc.get("p") != PROTOCOL:
        return None
    op, tick = doc.get("op"), doc.get("tick")
    if op not in OPS or not valid_tick(tick, strict):
        return None
    if op == "deploy":
        max_ = _amount(doc.get("max"))
        lim = _amount(doc["lim"]) if "lim" in doc else None
        if max_ is None or ("lim" in doc and lim is None):
            return None
        return Brc20Event(op, tick, max=max_, lim=lim)
    amt = _amount(doc.get("amt"))
    if amt is None:
        return None
    return Brc20Event(op, tick, amt=amt)


def event_json(event: Brc20Event) -> bytes:
    """Canonical inscription body for an event."""
    doc = {"p": PROTOCOL, "op": event.op, "tick": event.tick}
    for name in ("max", "lim", "amt"):
        value = getattr(event, name)
        if value is not None:
            doc[name] = str(value)
    return json.dumps(doc, separators=(",", ":")).encode()


@dataclass
class TickInfo:
    tick: str
    max: int
    lim: int
    minted: int
    deploy_inscription: str
    deploy_height: int


@dataclass
class Balance:
    available: int = 0
    transferable: int = 0


@dataclass
class PendingTransfer:
    key: str
    amt: int
    owner: str
    consumed: bool = False


@dataclass(frozen=True)
class AuditEntry:
    height: int
    inscription: str
    op: str
    tick: str
    reason: str


@dataclass
class Brc20State:
    ticks: dict[str, TickInfo] = field(default_factory=dict)
    balances: dict[tuple[str, str], Balance] = field(default_factory=dict)
    pending: dict[str, PendingTransfer] = field(default_factory=dict)
    audit: list[AuditEntry] = field(default_factory=list)

    def _inert(self, height, inscription, op, tick, reason) -> None:
        self.audit.append(AuditEntry(height, inscription, op, tick, reason))

    def _balance(self, address: str, key: str) -> Balance:
        return self.balances.setdefault((address, key), Balance())

    def apply_deploy(self, event: Brc20Event, inscription: str, owner: str, height: int) -> None:
        key = event.key
        if key in self.ticks:
            return self._inert(height, inscription, "deploy", event.tick, "duplicate-tick")
        if not event.max:
            return self._inert(height, inscription, "deploy", event.tick, "zero-max")
        lim = event.max if event.lim is None else event.lim
        if lim == 0:
            return self._inert(height, inscription, "deploy", event.tick, "zero-lim")
        if lim > event.max:
            return self._inert(height, inscription, "deploy", event.tick, "lim-exceeds-max")
        self.ticks[key] = TickInfo(event.tick, event.max, lim, 0, inscription, height)

    def apply_mint(self, event: Brc20Event, receiver: str, height: int, inscription: str = "") -> None:
        info = self.ticks.get(event.key)
        if info is None:
            return self._inert(height, inscription, "mint", event.tick, "unknown-tick")
        if not event.amt:
            return self._inert(height, inscription, "mint", event.tick, "zero-amount")
        if event.amt > info.lim:
            return self._inert(height, inscription, "mint", event.tick, "over-limit")
        remaining = info.max - info.minted
        if remaining == 0:
            return self._inert(height, inscription, "mint", event.tick, "supply-exhausted")
        credit = min(event.amt, remaining)
        self._balance(receiver, event.key).available += credit
        info.minted += credit

    def apply_transfer_inscribe(self, event: Brc20Event, owner: str, inscription: str,
                                height: int = 0) -> None:
        info = self.ticks.get(event.key)
        if info is None:
            return self._inert(height, inscription, "transfer", event.tick, "unknown-tick")
        if not event.amt:
            return self._inert(height, inscription, "transfer", event.tick, "zero-amount")
        bal = self._balance(owner, event.key)
        if event.amt > bal.available:
            return self._inert(height, inscription, "transfer", event.tick, "insufficient-available")
        bal.available -= event.amt
        bal.transferable += event.amt
        self.pending[inscription] = PendingTransfer(event.key, event.amt, owner)

    def apply_transfer_send(self, inscription: str, sender: str, receiver: str, height: int = 0) -> bool:
        """Settle a pending transfer credit.  Returns whether anything changed.

        The credit is debited from the address that inscribed it; ``sender`` is
        informational and normally equals that address.
        """
        credit = self.pending.get(inscription)
        if credit is None or credit.consumed:
            return False
        credit.consumed = True
        self._balance(credit.owner, credit.key).transferable -= credit.amt
        self._balance(receiver, credit.key).available += credit.amt
        return True

    # -- queries ---------------------------------------------------------

    def tick_info(self, tick: str) -> TickInfo:
        try:
            return self.ticks[tick.casefold()]
        except KeyError:
            raise NotFoundError(tick) from None

    def balance(self, address: str, tick: str) -> Balance:
        bal = self.balances.get((address, tick.casefold()))
        return Balance(bal.available, bal.transferable) if bal else Balance()

    def holders(self, tick: str) -> dict[str, Balance]:
        key = self.tick_info(tick).tick.casefold()
        return {addr: Balance(b.available, b.transferable)
                for (addr, k), b in sorted(self.balances.items())
                if k == key and (b.available or b.transferable)}

    def audit_log(self, start: int = 0, end: Optional[int] = None) -> list[AuditEntry]:
        return [a for a in self.audit if a.height >= start and (end is None or a.height < end)]

    def to_json(self) -> dict:
        return {
            "ticks": {
                k: {
                    "tick": t.tick,
                    "max": str(t.max),
                    "lim": str(t.lim),
                    "minted": str(t.minted),
                    "deploy_inscription": t.deploy_inscription,
                    "deploy_height": t.deploy_height,
                }
                for k, t in sorted(self.ticks.items())
            },
            "balances": [
                {"address": a, "tick": k, "available": str(b.available),
                 "transferable": str(b.transferable)}
                for (a, k), b in sorted(self.balances.items())
            ],
            "pending": {
                i: {"tick": p.key, "amt": str(p.amt), "owner": p.owner, "consumed": p.consumed}
                for i, p in sorted(self.pending.items())
            },
            "audit": [a.__dict__ for a in self.audit],
        }

    def state_hash(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def check_conservation(self) -> list[str]:
        """Return a description of every broken balance invariant (empty if none)."""
        problems = []
        totals: dict[str, int] = {}
        for (addr, key), b in self.balances.items():
            if b.available < 0 or b.transferable < 0:
                problems.append(f"negative balance for {addr} in {key}")
            totals[key] = totals.get(key, 0) + b.available + b.transferable
        for key, info in self.ticks.items():
            if totals.get(key, 0) != info.minted:
                problems.append(f"{key}: balances sum to {totals.get(key, 0)}, minted {info.minted}")
            if info.minted > info.max:
                problems.append(f"{key}: minted {info.minted} exceeds max {info.max}")
        return problems


class Brc20Indexer:
    """Feeds inscription index events into a :class:`Brc20State`."""

    def __init__(self, strict_ticks: bool = True):
        self.strict_ticks = strict_ticks
        self.state = Brc20State()

    def apply(self, events, height: int) -> None:
        for ev in events:
            if isinstance(ev, Created):
                record = ev.record
                parsed = parse_brc20(Envelope(record.mime, record.body), self.strict_ticks)
                if parsed is None:
                    continue
                owner = ev.owner.hex()
                if parsed.op == "deploy":
                    self.state.apply_deploy(parsed, record.id, owner, height)
                elif parsed.op == "mint":
                    self.state.apply_mint(parsed, owner, height, record.id)
                else:
                    self.state.apply_transfer_inscribe(parsed, owner, record.id, height)
            elif isinstance(ev, Moved):
                # a transfer spent as fee returns to its sender
                receiver = ev.old_owner if ev.via_fee else ev.new_owner
                self.state.apply_transfer_send(ev.record.id, ev.old_owner.hex(), receiver.hex(), height)
