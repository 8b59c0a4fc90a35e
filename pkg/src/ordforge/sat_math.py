"""Ordinal numbering of satoshis.

Sats are numbered in the order they are mined. This module maps a sat index to
the block that mined it and renders the index in the usual notations
(integer, decimal, degree, percentile, name), plus its rarity tier.

All functions take an optional :class:`NetworkParams` so that scaled-down
calendars can be used in tests and in the toy simulator preset.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from decimal import Decimal
from functools import cached_property
from typing import NamedTuple


class NotationError(ValueError):
    """Raised when a notation string cannot be parsed.

    ``field`` names the component that was malformed or out of range.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class NetworkParams:
    subsidy_interval: int = 210_000
    difficulty_period: int = 2_016
    initial_subsidy: int = 5_000_000_000

    def __post_init__(self):
        if self.subsidy_interval <= 0 or self.difficulty_period <= 0:
            raise ValueError("calendar periods must be positive")
        if self.initial_subsidy <= 0:
            raise ValueError("initial subsidy must be positive")

    @property
    def cycle_blocks(self) -> int:
        return math.lcm(self.subsidy_interval, self.difficulty_period)

    @cached_property
    def halvings(self) -> int:
        """Number of epochs with a nonzero subsidy."""
        return self.initial_subsidy.bit_length()

    @cached_property
    def last_height(self) -> int:
        """Highest block height that still carries a subsidy."""
        return self.halvings * self.subsidy_interval - 1

    @cached_property
    def supply(self) -> int:
        return sum(
            self.subsidy_interval * (self.initial_subsidy >> epoch)
            for epoch in range(self.halvings)
        )

    def to_json(self) -> dict:
        return {
            "subsidy_interval": self.subsidy_interval,
            "difficulty_period": self.difficulty_period,
            "initial_subsidy": str(self.initial_subsidy),
        }

    @classmethod
    def from_json(cls, data: dict) -> "NetworkParams":
        return cls(
            subsidy_interval=int(data["subsidy_interval"]),
            difficulty_period=int(data["difficulty_period"]),
            initial_subsidy=int(data["initial_subsidy"]),
        )


MAINNET = NetworkParams()
# cycle = lcm(12, 8) = 24 blocks
TOY = NetworkParams(subsidy_interval=12, difficulty_period=8)

PRESETS = {"mainnet": MAINNET, "toy": TOY}


class Rarity(enum.Enum):
    COMMON = "common"
    UNCOMMON = "uncommon"
    RARE = "rare"
    EPIC = "epic"
    LEGENDARY = "legendary"
    MYTHIC = "mythic"

    @property
    def rank(self) -> int:
        return list(Rarity).index(self)

    def __lt__(self, other: "Rarity") -> bool:
        return self.rank < other.rank

    def __le__(self, other: "Rarity") -> bool:
        return self.rank <= other.rank

    def __str__(self) -> str:
        return self.value


class Degree(NamedTuple):
    cycle: int
    epoch_offset: int
    period_offset: int
    block_offset: int

    def __str__(self) -> str:
        return f"{self.cycle}°{self.epoch_offset}′{self.period_offset}″{self.block_offset}‴"


def subsidy_at_height(h: int, params: NetworkParams = MAINNET) -> int:
    epoch = h // params.subsidy_interval
    return params.initial_subsidy >> epoch if epoch < 64 else 0


def first_sat_of_height(h: int, params: NetworkParams = MAINNET) -> int:
    """Index of the first sat mined at height ``h``.

    ``h`` may be one past the last subsidized block, in which case the result
    is the total supply (the exclusive end of the last block's range).
    """
    if h < 0 or h > params.last_height + 1:
        raise ValueError(f"height {h} outside subsidized range [0, {params.last_height + 1}]")
    epoch, rem = divmod(h, params.subsidy_interval)
    total = 0
    for e in range(epoch):
        total += params.subsidy_interval * (params.initial_subsidy >> e)
    return total + rem * subsidy_at_height(h, params)


def _check_sat(n: int, params: NetworkParams) -> None:
    if not 0 <= n < params.supply:
        raise ValueError(f"sat {n} outside [0, {params.supply})")


def sat_height(n: int, params: NetworkParams = MAINNET) -> tuple[int, int]:
    """Return ``(height, offset)`` of the block that mined sat ``n``."""
    _check_sat(n, params)
    epoch_start = 0
    for epoch in range(params.halvings):
        subsidy = params.initial_subsidy >> epoch
        epoch_sats = subsidy * params.subsidy_interval
        if n < epoch_start + epoch_sats:
            blocks, offset = divmod(n - epoch_start, subsidy)
            return epoch * params.subsidy_interval + blocks, offset
        epoch_start += epoch_sats
    raise AssertionError("unreachable: sat below supply")


def sat_to_decimal(n: int, params: NetworkParams = MAINNET) -> str:
    height, offset = sat_height(n, params)
    return f"{height}.{offset}"


def sat_to_degree(n: int, params: NetworkParams = MAINNET) -> Degree:
    h, offset = sat_height(n, params)
    return Degree(
        cycle=h // params.cycle_blocks,
        epoch_offset=h % params.subsidy_interval,
        period_offset=h % params.difficulty_period,
        block_offset=offset,
    )


def sat_to_percentile(n: int, params: NetworkParams = MAINNET) -> str:
    _check_sat(n, params)
    value = n / (params.supply - 1) * 100.0
    # shortest round-trip digits, always positional (no exponent)
    text = format(Decimal(repr(value)), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text + "%"


def sat_to_name(n: int, params: NetworkParams = MAINNET) -> str:
    _check_sat(n, params)
    x = params.supply - n
    out = []
    while x > 0:
        out.append(chr(ord("a") + (x - 1) % 26))
        x = (x - 1) // 26
    return "".join(reversed(out))


def rarity(n: int, params: NetworkParams = MAINNET) -> Rarity:
    if n == 0:
        _check_sat(n, params)
        return Rarity.MYTHIC
    h, offset = sat_height(n, params)
    if offset != 0:
        return Rarity.COMMON
    if h % params.cycle_blocks == 0:
        return Rarity.LEGENDARY
    if h % params.subsidy_interval == 0:
        return Rarity.EPIC
    if h % params.difficulty_period == 0:
        return Rarity.RARE
    return Rarity.UNCOMMON


def describe(n: int, params: NetworkParams = MAINNET) -> dict:
    """All notations of a sat plus its rarity, as JSON-friendly strings."""
    return {
        "integer": str(n),
        "decimal": sat_to_decimal(n, params),
        "degree": str(sat_to_degree(n, params)),
        "percentile": sat_to_percentile(n, params),
        "name": sat_to_name(n, params),
        "rarity": rarity(n, params).value,
    }


# -- parsing -----------------------------------------------------------------

_DEGREE_RE = re.compile(r"^\s*(\d+)\s*°\s*(\d+)\s*′\s*(\d+)\s*″\s*(\d+)\s*‴\s*$", re.ASCII)
_DECIMAL_RE = re.compile(r"^(\d+)\.(\d+)$", re.ASCII)


def _from_decimal(height: int, offset: int, params: NetworkParams) -> int:
    if height > params.last_height:
        raise NotationError("height", f"{height} is beyond the last subsidized block")
    if offset >= subsidy_at_height(height, params):
        raise NotationError("offset", f"{offset} exceeds block subsidy at height {height}")
    return first_sat_of_height(height, params) + offset


def _from_degree(deg: Degree, params: NetworkParams) -> int:
    if deg.epoch_offset >= params.subsidy_interval:
        raise NotationError("epoch_offset", f"{deg.epoch_offset} >= {params.subsidy_interval}")
    if deg.period_offset >= params.difficulty_period:
        raise NotationError("period_offset", f"{deg.period_offset} >= {params.difficulty_period}")
    base = deg.cycle * params.cycle_blocks + deg.epoch_offset
    for epoch in range(params.cycle_blocks // params.subsidy_interval):
        h = base + epoch * params.subsidy_interval
        if h % params.difficulty_period == deg.period_offset:
            break
    else:
        raise NotationError("period_offset", "inconsistent with epoch_offset")
    if h > params.last_height:
        raise NotationError("cycle", f"height {h} is beyond the last subsidized block")
    if deg.block_offset >= subsidy_at_height(h, params):
        raise NotationError("block_offset", f"{deg.block_offset} exceeds block subsidy at height {h}")
    return first_sat_of_height(h, params) + deg.block_offset


def _from_name(name: str, params: NetworkParams) -> int:
    x = 0
    for c in name:
        x = x * 26 + (ord(c) - ord("a") + 1)
    if not 1 <= x <= params.supply:
        raise NotationError("name", f"{name!r} is out of range")
    return params.supply - x


def parse_notation(text: str, params: NetworkParams = MAINNET) -> int:
    """Parse integer, decimal, degree or name notation back to a sat index."""
    text = text.strip()
    if not text:
        raise NotationError("notation", "empty input")
    if text.isdigit() and text.isascii():
        n = int(text)
        if n >= params.supply:
            raise NotationError("integer", f"{n} >= supply {params.supply}")
        return n
    if m := _DECIMAL_RE.match(text):
        return _from_decimal(int(m[1]), int(m[2]), params)
    if "°" in text:
        m = _DEGREE_RE.match(text)
        if not m:
            raise NotationError("degree", f"malformed degree {text!r}")
        return _from_degree(Degree(*map(int, m.groups())), params)
    if text.isascii() and text.isalpha() and text.islower():
        return _from_name(text, params)
    raise NotationError("notation", f"unrecognized notation {text!r}")
