"""
Naming a satoshi
================

Every sat gets a serial number in mining order. From that number alone we can
work out the block it came from, where it sits in the halving and difficulty
calendar, a short alphabetic name and a rarity class.
"""

from ordforge import MAINNET, NetworkParams, describe, parse_notation
from ordforge.sat_math import Rarity, rarity, sat_height, subsidy_at_height

# Start with a sat deep inside the chain. describe() renders every notation.
sat = 1_938_930_000_000_000
for key, value in describe(sat).items():
    print(f"{key:>12}: {value}")

# Decimal, degree and name notations parse back to the same integer. The
# percentile is rounded, so it only goes one way.
for text in ["792288.0", "0°162288′0″0‴", "acqgzfkezav"]:
    assert parse_notation(text) == sat, text
print("\nall notations resolve to", sat)

# The subsidy halves every 210,000 blocks, so the total supply is a little
# under 21 million coins once integer division rounds each epoch down.
epochs = range(0, MAINNET.last_height + 1, MAINNET.subsidy_interval)
total = sum(subsidy_at_height(h) for h in epochs) * MAINNET.subsidy_interval
print(f"\nsupply: {MAINNET.supply:,} sats (epoch sum gives {total:,})")

# Halvings and difficulty adjustments line up every 1,260,000 blocks. The
# first sat mined after such a coincidence is legendary.
print("cycle length:", MAINNET.cycle_blocks)
first_of_cycle = sum(subsidy_at_height(h) for h in epochs[:6]) * MAINNET.subsidy_interval
height, offset = sat_height(first_of_cycle)
print(f"first sat of cycle 1: {rarity(first_of_cycle).value}, block {height} offset {offset}")

# A tiny calendar (halving every 6 blocks, adjustment every 4, 40 sats per
# block at first) is small enough to census sat by sat.
tiny = NetworkParams(subsidy_interval=6, difficulty_period=4, initial_subsidy=40)
counts = {r: 0 for r in Rarity}
for s in range(tiny.supply):
    counts[rarity(s, tiny)] += 1
print(f"\n{tiny.supply} sats in a tiny calendar, by rarity:")
for r, n in counts.items():
    print(f"  {r.value:>10}: {n}")
