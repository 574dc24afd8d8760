"""Local-financing regime: each hospital picks one ward type to make
excellent, patients split proportionally to district population, and the
predicted outcomes are the pure Nash equilibria of the resulting game."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import InstanceTooLargeError, InvalidInstanceError
from .scenario import ScenarioInstance, check_assumption1, format_rational

# Hard cap on |R| ** |Q| when building the full payoff tensor.
PROFILE_ENUMERATION_CAP = 10**6

# Full payoff tables are embedded in JSON reports only up to this many profiles.
REPORT_TABLE_CAP = 1024


@dataclass(frozen=True)
class StrategyProfile:
    """One joint choice: ward picked by each hospital, index-aligned."""

    hospitals: tuple[str, ...]
    wards: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "hospitals", tuple(self.hospitals))
        object.__setattr__(self, "wards", tuple(self.wards))
        if len(self.hospitals) != len(self.wards) or not self.hospitals:
            raise InvalidInstanceError(
                "profile must assign exactly one ward to every hospital"
            )

    def choice(self, hospital: str) -> str:
        return self.wards[self.hospitals.index(hospital)]

    def as_dict(self) -> dict[str, str]:
        return dict(zip(self.hospitals, self.wards))

    @property
    def is_uniform(self) -> bool:
        """True when every hospital picked the same ward type."""
        return len(set(self.wards)) == 1


@dataclass
class PayoffTensor:
    """Payoffs of the full game: one entry per joint strategy choice.

    payoffs maps the tuple of chosen strategies (aligned with hospitals) to
    the tuple of hospital payoffs. strategies lists the choices available to
    every hospital; for instance-built tensors they are the ward ids.
    """

    hospitals: tuple[str, ...]
    strategies: tuple[str, ...]
    payoffs: dict[tuple[str, ...], tuple[Fraction, ...]]

    def __post_init__(self):
        expected = len(self.strategies) ** len(self.hospitals)
        if len(self.payoffs) != expected:
            raise InvalidInstanceError(
                f"payoff tensor must hold exactly {expected} profiles, "
                f"got {len(self.payoffs)}"
            )
        for key, values in self.payoffs.items():
            if len(key) != len(self.hospitals) or len(values) != len(self.hospitals):
                raise InvalidInstanceError(
                    f"payoff tensor entry {key!r} has the wrong arity"
                )

    def payoff_for(self, profile: StrategyProfile) -> tuple[Fraction, ...]:
        return self.payoffs[profile.wards]

    def profiles(self):
        for key in self.payoffs:
            yield StrategyProfile(hospitals=self.hospitals, wards=key)


def payoff(inst: ScenarioInstance, profile: StrategyProfile) -> tuple[Fraction, ...]:
    """Patient capture for one joint choice.

    A hospital choosing ward r takes the whole group when it chooses alone;
    hospitals sharing a choice split the group proportionally to their
    district population fractions.
    """
    if profile.hospitals != inst.hospitals:
        raise InvalidInstanceError("profile hospitals do not match the instance")
    for w in profile.wards:
        if w not in inst.wards:
            raise InvalidInstanceError(f"profile chooses unknown ward {w!r}")
    result = []
    for qi, r in enumerate(profile.wards):
        size = inst.group_sizes[inst.ward_index(r)]
        chooser_pop = sum(
            inst.population[j] for j, other in enumerate(profile.wards) if other == r
        )
        result.append(Fraction(size) * inst.population[qi] / chooser_pop)
    return tuple(result)


def build_payoff_tensor(inst: ScenarioInstance) -> PayoffTensor:
    """Enumerate all |R| ** |Q| joint choices and their payoffs."""
    count = inst.num_wards**inst.num_hospitals
    if count > PROFILE_ENUMERATION_CAP:
        raise InstanceTooLargeError(
            f"{count} joint profiles exceed the enumeration guard of "
            f"{PROFILE_ENUMERATION_CAP}"
        )
    sizes = [Fraction(s) for s in inst.group_sizes]
    pop = inst.population
    ward_ids = inst.wards
    payoffs: dict[tuple[str, ...], tuple[Fraction, ...]] = {}
    for combo in itertools.product(range(inst.num_wards), repeat=inst.num_hospitals):
        chooser_pop = {}
        for qi, ri in enumerate(combo):
            chooser_pop[ri] = chooser_pop.get(ri, Fraction(0)) + pop[qi]
        values = tuple(
            sizes[ri] * pop[qi] / chooser_pop[ri] for qi, ri in enumerate(combo)
        )
        payoffs[tuple(ward_ids[ri] for ri in combo)] = values
    return PayoffTensor(hospitals=inst.hospitals, strategies=ward_ids, payoffs=payoffs)


@dataclass(frozen=True)
class EquilibriumReport:
    """Pure Nash equilibria of a payoff tensor, split by shape."""

    equilibria: tuple[StrategyProfile, ...]
    uniform_equilibria: tuple[StrategyProfile, ...]
    diversified_equilibria: tuple[StrategyProfile, ...]


def enumerate_pure_nash(tensor: PayoffTensor) -> EquilibriumReport:
    """Exhaustive weak-equilibrium search with exact comparisons.

    A profile survives when no hospital has a strictly better unilateral
    deviation.
    """
    nq = len(tensor.hospitals)
    equilibria = []
    for key, values in tensor.payoffs.items():
        stable = True
        for qi in range(nq):
            current = values[qi]
            for alt in tensor.strategies:
                if alt == key[qi]:
                    continue
                deviated = key[:qi] + (alt,) + key[qi + 1 :]
                if tensor.payoffs[deviated][qi] > current:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            equilibria.append(StrategyProfile(hospitals=tensor.hospitals, wards=key))
    uniform = tuple(p for p in equilibria if p.is_uniform)
    diversified = tuple(p for p in equilibria if not p.is_uniform)
    return EquilibriumReport(
        equilibria=tuple(equilibria),
        uniform_equilibria=uniform,
        diversified_equilibria=diversified,
    )


@dataclass(frozen=True)
class DiversificationVerdict:
    """Does the market satisfy the balance condition, and do the equilibria
    show the diversified pattern it predicts?"""

    assumption1_holds: bool
    has_uniform_ne: bool
    has_diversified_ne: bool

    @property
    def implication_holds(self) -> bool:
        """Balance condition => no uniform equilibrium and at least one
        diversified equilibrium."""
        if not self.assumption1_holds:
            return True
        return not self.has_uniform_ne and self.has_diversified_ne


def diversification_verdict(inst: ScenarioInstance) -> DiversificationVerdict:
    report = check_assumption1(inst)
    eq = enumerate_pure_nash(build_payoff_tensor(inst))
    return DiversificationVerdict(
        assumption1_holds=report.holds,
        has_uniform_ne=bool(eq.uniform_equilibria),
        has_diversified_ne=bool(eq.diversified_equilibria),
    )


def _profile_entry(tensor: PayoffTensor, key: tuple[str, ...]) -> dict:
    values = tensor.payoffs[key]
    return {
        "profile": dict(zip(tensor.hospitals, key)),
        "payoffs": {
            h: format_rational(v) for h, v in zip(tensor.hospitals, values)
        },
    }


def equilibrium_report_to_dict(
    tensor: PayoffTensor, eq: EquilibriumReport, verdict: DiversificationVerdict
) -> dict:
    """JSON-ready local-game report: profiles as hospital->ward mappings and
    payoffs as "num/den" strings."""
    doc = {
        "hospitals": list(tensor.hospitals),
        "strategies": list(tensor.strategies),
        "equilibria": [_profile_entry(tensor, p.wards) for p in eq.equilibria],
        "uniform_equilibria": [p.as_dict() for p in eq.uniform_equilibria],
        "diversified_equilibria": [p.as_dict() for p in eq.diversified_equilibria],
        "diversification": {
            "assumption1_holds": verdict.assumption1_holds,
            "has_uniform_equilibrium": verdict.has_uniform_ne,
            "has_diversified_equilibrium": verdict.has_diversified_ne,
            "matches_predicted_pattern": verdict.implication_holds,
        },
    }
    if len(tensor.payoffs) <= REPORT_TABLE_CAP:
        doc["payoff_table"] = [_profile_entry(tensor, key) for key in tensor.payoffs]
    return doc
