"""Local-financing game tests: payoffs, tensor enumeration, pure equilibria,
and the diversification verdict."""

import itertools
from fractions import Fraction

import pytest

from conftest import RECEPTION_TABLE, make_instance
from wardalloc import (
    DiversificationVerdict,
    InstanceTooLargeError,
    InvalidInstanceError,
    PayoffTensor,
    StrategyProfile,
    build_payoff_tensor,
    diversification_verdict,
    enumerate_pure_nash,
    equilibrium_report_to_dict,
    generate_scenario,
    payoff,
)


def profile_of(inst, *wards):
    return StrategyProfile(hospitals=inst.hospitals, wards=wards)


# ---------------------------------------------------------------------------
# payoffs


def test_payoff_single_hospital_takes_whole_group():
    inst = make_instance((120, 30), (Fraction(1),))
    assert payoff(inst, profile_of(inst, "r1")) == (120,)
    assert payoff(inst, profile_of(inst, "r2")) == (30,)


def test_payoff_three_way_split():
    inst = make_instance(
        (800, 100), (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))
    )
    assert payoff(inst, profile_of(inst, "r1", "r1", "r1")) == (400, 200, 200)


def test_payoff_comparable_market_cells(comparable_market):
    inst = comparable_market
    assert payoff(inst, profile_of(inst, "r1", "r1")) == (250, 750)
    assert payoff(inst, profile_of(inst, "r1", "r2")) == (1000, 400)
    assert payoff(inst, profile_of(inst, "r2", "r1")) == (400, 1000)
    assert payoff(inst, profile_of(inst, "r2", "r2")) == (100, 300)


def test_payoff_rejects_mismatched_profile(comparable_market):
    foreign = StrategyProfile(hospitals=("a", "b"), wards=("r1", "r2"))
    with pytest.raises(InvalidInstanceError, match="profile"):
        payoff(comparable_market, foreign)
    with pytest.raises(InvalidInstanceError, match="unknown ward"):
        payoff(comparable_market, profile_of(comparable_market, "r1", "zz"))


def test_profile_shape_validation():
    with pytest.raises(InvalidInstanceError):
        StrategyProfile(hospitals=("a", "b"), wards=("r1",))
    with pytest.raises(InvalidInstanceError):
        StrategyProfile(hospitals=(), wards=())


def test_profile_uniformity():
    p = StrategyProfile(hospitals=("a", "b"), wards=("r1", "r1"))
    assert p.is_uniform
    q = StrategyProfile(hospitals=("a", "b"), wards=("r1", "r2"))
    assert not q.is_uniform
    assert q.choice("b") == "r2"
    assert q.as_dict() == {"a": "r1", "b": "r2"}


# ---------------------------------------------------------------------------
# tensor enumeration


def test_tensor_matches_pointwise_payoff():
    inst = generate_scenario(4, (2, 3))
    tensor = build_payoff_tensor(inst)
    assert len(tensor.payoffs) == 3**2
    for wards in itertools.product(inst.wards, repeat=2):
        assert tensor.payoffs[wards] == payoff(inst, profile_of(inst, *wards))


def test_tensor_shares_conserve_chosen_groups():
    inst = generate_scenario(9, (3, 3))
    tensor = build_payoff_tensor(inst)
    sizes = dict(zip(inst.wards, inst.group_sizes))
    for wards, values in tensor.payoffs.items():
        assert sum(values) == sum(sizes[w] for w in set(wards))


def test_tensor_scales_with_group_sizes():
    base = generate_scenario(2, (2, 2))
    scaled = make_instance(
        tuple(7 * s for s in base.group_sizes),
        base.population,
        hospitals=base.hospitals,
        wards=base.wards,
    )
    t0 = build_payoff_tensor(base)
    t1 = build_payoff_tensor(scaled)
    for key, values in t0.payoffs.items():
        assert t1.payoffs[key] == tuple(7 * v for v in values)
    e0 = enumerate_pure_nash(t0)
    e1 = enumerate_pure_nash(t1)
    assert [p.wards for p in e0.equilibria] == [p.wards for p in e1.equilibria]


def test_tensor_guard_rejects_huge_games():
    # 2 ** 20 joint profiles crosses the million-profile guard
    inst = make_instance((5, 5), tuple(Fraction(1, 20) for _ in range(20)))
    with pytest.raises(InstanceTooLargeError, match="profiles"):
        build_payoff_tensor(inst)


def test_tensor_validates_entry_count():
    with pytest.raises(InvalidInstanceError, match="tensor"):
        PayoffTensor(
            hospitals=("a", "b"),
            strategies=("x", "y"),
            payoffs={("x", "x"): (Fraction(1), Fraction(1))},
        )


def test_tensor_validates_arity():
    keys = [("x", "x"), ("x", "y"), ("y", "x"), ("y", "y")]
    payoffs = {k: (Fraction(1),) for k in keys}
    with pytest.raises(InvalidInstanceError, match="arity"):
        PayoffTensor(hospitals=("a", "b"), strategies=("x", "y"), payoffs=payoffs)


# ---------------------------------------------------------------------------
# equilibria


def test_reception_game_equilibria(reception_game):
    report = enumerate_pure_nash(reception_game)
    found = {p.wards for p in report.equilibria}
    assert found == {("SW", "WC"), ("WC", "SW")}
    assert report.uniform_equilibria == ()
    assert len(report.diversified_equilibria) == 2


def test_reception_game_payoffs(reception_game):
    for key, (a, b) in RECEPTION_TABLE.items():
        assert reception_game.payoffs[key] == (a, b)
    assert reception_game.payoffs[("SW", "SC")] == (57, 43)


def test_comparable_market_equilibrium(comparable_market):
    # the larger group is worth sharing: the only stable profile sends the
    # high-population hospital to the big group and the other one away
    report = enumerate_pure_nash(build_payoff_tensor(comparable_market))
    assert [p.wards for p in report.equilibria] == [("r2", "r1")]
    assert report.uniform_equilibria == ()


def test_lopsided_market_equilibrium(lopsided_market):
    # the small group is negligible, so both cluster on the big one
    report = enumerate_pure_nash(build_payoff_tensor(lopsided_market))
    assert [p.wards for p in report.equilibria] == [("r1", "r1")]
    assert report.uniform_equilibria == report.equilibria


def test_equilibria_deviation_closure():
    # every reported equilibrium is deviation-proof and every non-equilibrium
    # has a strictly improving unilateral deviation, checked from scratch
    for seed, dims in [(0, (2, 3)), (1, (3, 2)), (2, (2, 2)), (3, (3, 3))]:
        inst = generate_scenario(seed, dims)
        tensor = build_payoff_tensor(inst)
        report = enumerate_pure_nash(tensor)
        stable = {p.wards for p in report.equilibria}
        for key in tensor.payoffs:
            improvable = False
            for qi in range(len(inst.hospitals)):
                for alt in inst.wards:
                    if alt == key[qi]:
                        continue
                    deviated = key[:qi] + (alt,) + key[qi + 1 :]
                    if tensor.payoffs[deviated][qi] > tensor.payoffs[key][qi]:
                        improvable = True
            assert improvable == (key not in stable)


def test_equilibrium_split_by_shape():
    inst = generate_scenario(14, (2, 2))
    report = enumerate_pure_nash(build_payoff_tensor(inst))
    assert set(report.equilibria) == set(
        report.uniform_equilibria + report.diversified_equilibria
    )
    for p in report.uniform_equilibria:
        assert p.is_uniform
    for p in report.diversified_equilibria:
        assert not p.is_uniform


# ---------------------------------------------------------------------------
# diversification verdict


def test_verdict_comparable_market(comparable_market):
    v = diversification_verdict(comparable_market)
    assert v == DiversificationVerdict(
        assumption1_holds=True, has_uniform_ne=False, has_diversified_ne=True
    )
    assert v.implication_holds


def test_verdict_lopsided_market(lopsided_market):
    v = diversification_verdict(lopsided_market)
    assert v.assumption1_holds is False
    assert v.has_uniform_ne is True
    assert v.has_diversified_ne is False
    # the balance condition fails, so the prediction claims nothing
    assert v.implication_holds


def test_verdict_flags_violations():
    broken = DiversificationVerdict(
        assumption1_holds=True, has_uniform_ne=True, has_diversified_ne=True
    )
    assert not broken.implication_holds
    missing = DiversificationVerdict(
        assumption1_holds=True, has_uniform_ne=False, has_diversified_ne=False
    )
    assert not missing.implication_holds


# ---------------------------------------------------------------------------
# report document


def test_report_dict_shape(comparable_market):
    tensor = build_payoff_tensor(comparable_market)
    eq = enumerate_pure_nash(tensor)
    verdict = diversification_verdict(comparable_market)
    doc = equilibrium_report_to_dict(tensor, eq, verdict)
    assert doc["hospitals"] == ["q1", "q2"]
    assert doc["strategies"] == ["r1", "r2"]
    assert doc["equilibria"] == [
        {
            "profile": {"q1": "r2", "q2": "r1"},
            "payoffs": {"q1": "400/1", "q2": "1000/1"},
        }
    ]
    assert doc["diversification"]["matches_predicted_pattern"] is True
    assert len(doc["payoff_table"]) == 4


def test_report_dict_omits_large_table():
    inst = make_instance(
        tuple(200 + i for i in range(6)),
        tuple(Fraction(1, 4) for _ in range(4)),
    )
    tensor = build_payoff_tensor(inst)
    eq = enumerate_pure_nash(tensor)
    doc = equilibrium_report_to_dict(
        tensor,
        eq,
        DiversificationVerdict(
            assumption1_holds=False, has_uniform_ne=False, has_diversified_ne=True
        ),
    )
    # 6 ** 4 = 1296 profiles exceed the embedded-table cap
    assert "payoff_table" not in doc
