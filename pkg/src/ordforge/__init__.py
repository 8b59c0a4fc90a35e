"""Ordinal theory, inscriptions and BRC-20 on a simulated taproot chain."""

from .sat_math import MAINNET, TOY, NetworkParams, Rarity, describe, parse_notation
from .chain import Chain
from .node import Node

__all__ = ["MAINNET", "TOY", "NetworkParams", "Rarity", "describe", "parse_notation", "Chain", "Node"]
__version__ = "0.1.0"
