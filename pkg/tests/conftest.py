import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ordforge import schnorr  # noqa: E402
from ordforge.chain import Chain, key_spend_script  # noqa: E402
from ordforge.node import Node  # noqa: E402
from ordforge.sat_math import TOY  # noqa: E402


@dataclass(frozen=True)
class Wallet:
    secret: int

    @property
    def pubkey(self):
        return schnorr.SECP256K1.mul_g(self.secret)

    @property
    def script(self) -> bytes:
        return key_spend_script(self.pubkey)

    @property
    def address(self) -> str:
        return self.script.hex()


ALICE, BOB, CAROL = Wallet(0xA11CE), Wallet(0xB0B), Wallet(0xCA501)


@pytest.fixture
def wallets():
    return ALICE, BOB, CAROL


@pytest.fixture
def toy_node():
    """A toy-calendar node where Alice mined the first two blocks."""
    node = Node(Chain(TOY))
    node.mine((), ALICE.script)
    node.mine((), ALICE.script)
    return node


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
