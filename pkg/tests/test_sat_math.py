import math

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from ordforge.sat_math import (
    MAINNET,
    TOY,
    Degree,
    NetworkParams,
    NotationError,
    Rarity,
    describe,
    first_sat_of_height,
    parse_notation,
    rarity,
    sat_height,
    sat_to_degree,
    sat_to_name,
    sat_to_percentile,
    subsidy_at_height,
)

# small calendar with a short supply so that every sat can be enumerated
TINY = NetworkParams(subsidy_interval=6, difficulty_period=4, initial_subsidy=40)


def test_subsidy_schedule_matches_scan():
    expected = oracles.subsidies(TINY.subsidy_interval, TINY.initial_subsidy)
    got = [subsidy_at_height(h, TINY) for h in range(TINY.last_height + 1)]
    assert got == expected
    assert subsidy_at_height(TINY.last_height + 1, TINY) == 0
    assert TINY.supply == sum(expected)


def test_mainnet_constants():
    assert MAINNET.supply == 2_099_999_997_690_000
    assert MAINNET.cycle_blocks == 1_260_000
    assert MAINNET.halvings == 33
    assert MAINNET.last_height == 6_929_999


def test_first_sat_of_height_boundaries():
    assert first_sat_of_height(0) == 0
    assert first_sat_of_height(1) == 5_000_000_000
    assert first_sat_of_height(210_000) == 210_000 * 5_000_000_000
    assert first_sat_of_height(MAINNET.last_height + 1) == MAINNET.supply
    with pytest.raises(ValueError):
        first_sat_of_height(MAINNET.last_height + 2)
    with pytest.raises(ValueError):
        first_sat_of_height(-1)


def test_every_tiny_sat_against_scan():
    for sat in range(TINY.supply):
        assert sat_height(sat, TINY) == oracles.height_of(sat, TINY.subsidy_interval, TINY.initial_subsidy)
        assert rarity(sat, TINY).value == oracles.rarity_by_scan(
            sat, TINY.subsidy_interval, TINY.difficulty_period, TINY.initial_subsidy)
        assert sat_to_name(sat, TINY) == oracles.bijective26(TINY.supply - sat)


def test_worked_example():
    doc = describe(1_938_930_000_000_000)
    assert doc == {
        "integer": "1938930000000000",
        "decimal": "792288.0",
        "degree": "0°162288′0″0‴",
        "percentile": "92.33000010156304%",
        "name": "acqgzfkezav",
        "rarity": "rare",
    }


def test_extremes():
    assert rarity(0) is Rarity.MYTHIC
    last = MAINNET.supply - 1
    assert sat_to_name(last) == "a"
    assert sat_to_percentile(last) == "100%"
    assert sat_to_percentile(0) == "0%"
    assert sat_to_name(0) == oracles.bijective26(MAINNET.supply)
    # late blocks mint a single sat, which is therefore the first of its block
    assert subsidy_at_height(MAINNET.last_height) == 1
    assert rarity(last) is Rarity.UNCOMMON
    with pytest.raises(ValueError):
        describe(MAINNET.supply)


def test_rarity_tiers_on_mainnet():
    assert rarity(first_sat_of_height(1)) is Rarity.UNCOMMON
    assert rarity(first_sat_of_height(2016)) is Rarity.RARE
    assert rarity(first_sat_of_height(210_000)) is Rarity.EPIC
    assert rarity(first_sat_of_height(1_260_000)) is Rarity.LEGENDARY
    assert rarity(first_sat_of_height(1) + 1) is Rarity.COMMON
    assert Rarity.COMMON < Rarity.UNCOMMON < Rarity.RARE < Rarity.EPIC < Rarity.LEGENDARY < Rarity.MYTHIC


def test_toy_census_per_cycle():
    # one cycle of the toy calendar: 1 legendary/mythic, cycle/interval - 1 epic, ...
    cycle = TOY.cycle_blocks
    assert cycle == math.lcm(TOY.subsidy_interval, TOY.difficulty_period) == 24
    tiers = [rarity(first_sat_of_height(h, TOY), TOY) for h in range(cycle, 2 * cycle)]
    assert tiers.count(Rarity.LEGENDARY) == 1
    assert tiers.count(Rarity.EPIC) == cycle // TOY.subsidy_interval - 1
    assert tiers.count(Rarity.RARE) == cycle // TOY.difficulty_period - 1
    assert tiers.count(Rarity.UNCOMMON) == cycle - 1 - tiers.count(Rarity.EPIC) - tiers.count(Rarity.RARE)


def test_degree_fields():
    n = first_sat_of_height(1_260_000 + 210_000 + 5) + 7
    assert sat_to_degree(n) == Degree(1, 5, (1_470_005) % 2016, 7)


@pytest.mark.parametrize("text,field", [
    ("", "notation"),
    ("abc1", "notation"),
    ("6930000.0", "height"),
    ("0.5000000000", "offset"),
    ("0°210000′0″0‴", "epoch_offset"),
    ("0°0′2016″0‴", "period_offset"),
    ("0°1′0″0‴", "period_offset"),
    ("0°0′0″", "degree"),
    ("2099999997690000", "integer"),
    ("zzzzzzzzzzzz", "name"),
    ("１２", "notation"),
])
def test_parse_errors_name_the_field(text, field):
    with pytest.raises(NotationError) as info:
        parse_notation(text)
    assert info.value.field == field


def test_parse_degree_with_display_spaces():
    assert parse_notation("0° 162288′ 0″ 0‴") == 1_938_930_000_000_000


def test_params_json_round_trip():
    for params in (MAINNET, TOY, TINY):
        assert NetworkParams.from_json(params.to_json()) == params


sats = st.integers(min_value=0, max_value=MAINNET.supply - 1)


@settings(max_examples=300, deadline=None)
@given(sats)
def test_all_notations_round_trip(n):
    doc = describe(n)
    for key in ("integer", "decimal", "degree", "name"):
        assert parse_notation(doc[key]) == n


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=TOY.supply - 1))
def test_toy_round_trip(n):
    doc = describe(n, TOY)
    for key in ("integer", "decimal", "degree", "name"):
        assert parse_notation(doc[key], TOY) == n


@settings(max_examples=200, deadline=None)
@given(sats, sats)
def test_name_order_reverses_sat_order(a, b):
    na, nb = sat_to_name(a), sat_to_name(b)
    # shorter names are later sats; equal lengths compare alphabetically in reverse
    assert (a < b) == ((len(na), na) > (len(nb), nb))
