"""Scenario data model: instances, demand derivation, assumption checks,
seeded generation, and the JSON scenario file format.

All quantities are exact rationals (fractions.Fraction); nothing in this
package ever compares floats.
"""

from __future__ import annotations

import functools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import GenerationError, InvalidInstanceError

SCHEMA_VERSION = 1

PROFILE_UNCONSTRAINED = "unconstrained"
PROFILE_A1 = "assumption1-satisfying"
PROFILE_A45 = "assumption4&5-satisfying"
PROFILES = (PROFILE_UNCONSTRAINED, PROFILE_A1, PROFILE_A45)

# Rejection-sampling cap for constrained generation profiles.
_REJECTION_CAP = 1000


def parse_rational(value, name: str = "value") -> Fraction:
    """Parse a JSON-borne rational: an int or a "num/den" string."""
    if isinstance(value, bool):
        raise InvalidInstanceError(f"{name}: expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInstanceError(f"{name}: cannot parse rational {value!r}") from exc
    raise InvalidInstanceError(
        f"{name}: expected int or 'num/den' string, got {type(value).__name__}"
    )


def format_rational(x: Fraction) -> str:
    """Canonical serialized form, always "num/den"."""
    return f"{x.numerator}/{x.denominator}"


def _coerce_rational_vector(values, name):
    return tuple(parse_rational(v, f"{name}[{i}]") for i, v in enumerate(values))


def _coerce_rational_matrix(rows, name):
    return tuple(
        _coerce_rational_vector(row, f"{name}[{i}]") for i, row in enumerate(rows)
    )


def _coerce_rational_cube(planes, name):
    return tuple(
        _coerce_rational_matrix(plane, f"{name}[{i}]") for i, plane in enumerate(planes)
    )


@dataclass(frozen=True)
class DemandCell:
    """Patients of one ward type living in one district.

    district: district id (districts coincide with hospital ids)
    ward: ward-type id
    count: number of patients, a non-negative integer
    """

    district: str
    ward: str
    count: int


@dataclass(frozen=True)
class ScenarioInstance:
    """One market: hospitals with their district populations, ward types with
    their patient groups, and the cost data of the central-financing regime.

    hospitals: hospital ids, one per district, index-aligned with population
    wards: ward-type ids
    population: fraction of total population per district; strictly positive,
        sums to exactly 1
    group_sizes: patients per ward type, non-negative integers
    excel_cost: excellence upgrade cost, indexed [hospital][ward]
    internal_cost: patient cost when treated inside the system, indexed
        [district][hospital][ward]
    out_cost: patient cost when treated outside the system, indexed
        [district][ward]
    budget: total upgrade budget, non-negative
    """

    hospitals: tuple[str, ...]
    wards: tuple[str, ...]
    population: tuple[Fraction, ...]
    group_sizes: tuple[int, ...]
    excel_cost: tuple[tuple[Fraction, ...], ...]
    internal_cost: tuple[tuple[tuple[Fraction, ...], ...], ...]
    out_cost: tuple[tuple[Fraction, ...], ...]
    budget: Fraction

    def __post_init__(self):
        object.__setattr__(self, "hospitals", tuple(self.hospitals))
        object.__setattr__(self, "wards", tuple(self.wards))
        object.__setattr__(
            self, "population", _coerce_rational_vector(self.population, "population")
        )
        object.__setattr__(self, "group_sizes", tuple(self.group_sizes))
        object.__setattr__(
            self, "excel_cost", _coerce_rational_matrix(self.excel_cost, "excel_cost")
        )
        object.__setattr__(
            self,
            "internal_cost",
            _coerce_rational_cube(self.internal_cost, "internal_cost"),
        )
        object.__setattr__(
            self, "out_cost", _coerce_rational_matrix(self.out_cost, "out_cost")
        )
        object.__setattr__(self, "budget", parse_rational(self.budget, "budget"))
        self._validate()

    def _validate(self):
        nq, nr = len(self.hospitals), len(self.wards)
        if nq < 1:
            raise InvalidInstanceError("hospitals: need at least one hospital")
        if nr < 1:
            raise InvalidInstanceError("wards: need at least one ward type")
        for name, ids in (("hospitals", self.hospitals), ("wards", self.wards)):
            if any(not isinstance(i, str) or not i for i in ids):
                raise InvalidInstanceError(f"{name}: ids must be non-empty strings")
            if len(set(ids)) != len(ids):
                raise InvalidInstanceError(f"{name}: ids must be unique")
        if len(self.population) != nq:
            raise InvalidInstanceError(
                f"population: expected {nq} entries, got {len(self.population)}"
            )
        if any(a <= 0 for a in self.population):
            raise InvalidInstanceError("population: every fraction must be strictly positive")
        if sum(self.population) != 1:
            raise InvalidInstanceError(
                f"population: fractions must sum to exactly 1, got {sum(self.population)}"
            )
        if len(self.group_sizes) != nr:
            raise InvalidInstanceError(
                f"group_sizes: expected {nr} entries, got {len(self.group_sizes)}"
            )
        for i, s in enumerate(self.group_sizes):
            if isinstance(s, bool) or not isinstance(s, int) or s < 0:
                raise InvalidInstanceError(
                    f"group_sizes[{i}]: must be a non-negative integer, got {s!r}"
                )
        self._check_matrix("excel_cost", self.excel_cost, nq, nr)
        if len(self.internal_cost) != nq:
            raise InvalidInstanceError(
                f"internal_cost: expected {nq} district planes, got {len(self.internal_cost)}"
            )
        for d, plane in enumerate(self.internal_cost):
            self._check_matrix(f"internal_cost[{d}]", plane, nq, nr)
        self._check_matrix("out_cost", self.out_cost, nq, nr)
        if self.budget < 0:
            raise InvalidInstanceError(f"budget: must be non-negative, got {self.budget}")

    @staticmethod
    def _check_matrix(name, matrix, rows, cols):
        if len(matrix) != rows:
            raise InvalidInstanceError(f"{name}: expected {rows} rows, got {len(matrix)}")
        for i, row in enumerate(matrix):
            if len(row) != cols:
                raise InvalidInstanceError(
                    f"{name}[{i}]: expected {cols} entries, got {len(row)}"
                )
            for j, v in enumerate(row):
                if v < 0:
                    raise InvalidInstanceError(f"{name}[{i}][{j}]: cost must be non-negative")

    @property
    def num_hospitals(self) -> int:
        return len(self.hospitals)

    @property
    def num_wards(self) -> int:
        return len(self.wards)

    def hospital_index(self, hospital: str) -> int:
        try:
            return self.hospitals.index(hospital)
        except ValueError:
            raise InvalidInstanceError(f"unknown hospital id {hospital!r}") from None

    def ward_index(self, ward: str) -> int:
        try:
            return self.wards.index(ward)
        except ValueError:
            raise InvalidInstanceError(f"unknown ward id {ward!r}") from None

    def demand_cells(self) -> tuple[DemandCell, ...]:
        """Demand cells of this instance; districts are the hospital ids."""
        return _demand_cells_cached(self)


@functools.lru_cache(maxsize=512)
def _demand_cells_cached(inst: ScenarioInstance) -> tuple[DemandCell, ...]:
    return build_demand_cells(
        inst.group_sizes, inst.population, districts=inst.hospitals, wards=inst.wards
    )


def largest_remainder_split(total: int, shares: Sequence[Fraction]) -> list[int]:
    """Split `total` into integer parts proportional to `shares` (summing to 1).

    Floors every quota, then hands the leftover units to the largest
    fractional remainders; remainder ties go to the lowest index.
    """
    quotas = [total * s for s in shares]
    parts = [int(q) for q in quotas]  # quotas are >= 0, so int() floors
    leftover = total - sum(parts)
    by_remainder = sorted(range(len(shares)), key=lambda i: (parts[i] - quotas[i], i))
    for i in by_remainder[:leftover]:
        parts[i] += 1
    return parts


def build_demand_cells(
    group_sizes: Sequence[int],
    population: Sequence[Fraction],
    districts: Sequence[str] | None = None,
    wards: Sequence[str] | None = None,
) -> tuple[DemandCell, ...]:
    """Distribute each ward type's patient group over the districts.

    Counts follow the population fractions with largest-remainder rounding,
    ties broken by district index, so each group's counts sum exactly to its
    size. Cells are returned ward-major ((d1,r1), (d2,r1), ..., (d1,r2), ...).
    """
    population = _coerce_rational_vector(population, "population")
    if not population:
        raise InvalidInstanceError("population: need at least one district")
    if any(a <= 0 for a in population):
        raise InvalidInstanceError("population: every fraction must be strictly positive")
    if sum(population) != 1:
        raise InvalidInstanceError(
            f"population: fractions must sum to exactly 1, got {sum(population)}"
        )
    for i, s in enumerate(group_sizes):
        if isinstance(s, bool) or not isinstance(s, int) or s < 0:
            raise InvalidInstanceError(
                f"group_sizes[{i}]: must be a non-negative integer, got {s!r}"
            )
    if districts is None:
        districts = tuple(f"d{i + 1}" for i in range(len(population)))
    if wards is None:
        wards = tuple(f"r{i + 1}" for i in range(len(group_sizes)))
    if len(districts) != len(population):
        raise InvalidInstanceError("districts: length must match population")
    if len(wards) != len(group_sizes):
        raise InvalidInstanceError("wards: length must match group_sizes")

    cells = []
    for ri, size in enumerate(group_sizes):
        for di, count in enumerate(largest_remainder_split(size, population)):
            cells.append(DemandCell(district=districts[di], ward=wards[ri], count=count))
    return tuple(cells)


@dataclass(frozen=True)
class Violation:
    """One concrete witness of a failed assumption check.

    code: machine-readable kind of failure
    where: named ids/indices pinpointing the witness
    lhs, rhs: the two sides of the inequality or equality that failed
    message: human-readable rendering
    """

    code: str
    where: dict
    lhs: Fraction
    rhs: Fraction
    message: str

    def __str__(self):
        return self.message


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of one assumption check; holds iff violations is empty."""

    assumption: int
    holds: bool
    violations: tuple[Violation, ...]


def _report(assumption: int, violations: list[Violation]) -> AssumptionReport:
    return AssumptionReport(
        assumption=assumption, holds=not violations, violations=tuple(violations)
    )


def _smallest_other_slice(group_sizes, population, k):
    """Smallest |P_i| * a_j over i != k and all districts j, with its indices.

    Returns None when there is no other ward type to compare against.
    """
    best = None
    for i, size in enumerate(group_sizes):
        if i == k:
            continue
        for j, a in enumerate(population):
            key = (Fraction(size) * a, i, j)
            if best is None or key < best:
                best = key
    return best


def check_assumption1(inst: ScenarioInstance) -> AssumptionReport:
    """Each patient group strictly outnumbers the smallest per-district slice
    of every other group. Vacuously true with a single ward type."""
    violations = []
    for k in range(inst.num_wards):
        best = _smallest_other_slice(inst.group_sizes, inst.population, k)
        if best is None:
            continue
        value, i, j = best
        lhs = Fraction(inst.group_sizes[k])
        if not lhs > value:
            violations.append(
                Violation(
                    code="group-not-above-smallest-district-slice",
                    where={
                        "ward": inst.wards[k],
                        "other_ward": inst.wards[i],
                        "district": inst.hospitals[j],
                    },
                    lhs=lhs,
                    rhs=value,
                    message=(
                        f"group {inst.wards[k]} has {lhs} patients, not more than the "
                        f"{value} patients of group {inst.wards[i]} living in district "
                        f"{inst.hospitals[j]}"
                    ),
                )
            )
    return _report(1, violations)


def check_assumption2(inst: ScenarioInstance) -> AssumptionReport:
    """The budget buys at least the cheapest upgrade, and treating everyone
    inside saves strictly more patient cost than all upgrades together cost."""
    violations = []
    min_cost = min(min(row) for row in inst.excel_cost)
    if inst.budget < min_cost:
        violations.append(
            Violation(
                code="budget-below-cheapest-upgrade",
                where={},
                lhs=inst.budget,
                rhs=min_cost,
                message=(
                    f"budget {inst.budget} is below the cheapest upgrade cost {min_cost}"
                ),
            )
        )
    benefit = Fraction(0)
    for cell in inst.demand_cells():
        d = inst.hospital_index(cell.district)
        r = inst.ward_index(cell.ward)
        for q in range(inst.num_hospitals):
            benefit += cell.count * (inst.out_cost[d][r] - inst.internal_cost[d][q][r])
    total_upgrade = sum(sum(row) for row in inst.excel_cost)
    if not benefit > total_upgrade:
        violations.append(
            Violation(
                code="inside-benefit-not-above-upgrade-cost",
                where={},
                lhs=benefit,
                rhs=total_upgrade,
                message=(
                    f"total inside-treatment benefit {benefit} does not exceed the "
                    f"total upgrade cost {total_upgrade}"
                ),
            )
        )
    return _report(2, violations)


def check_assumption3(inst: ScenarioInstance) -> AssumptionReport:
    """Accepting the greedy plan even when it is not optimal is a modeling
    stance, not a property of instance data, so this check always holds."""
    return _report(3, [])


def check_assumption4(inst: ScenarioInstance) -> AssumptionReport:
    """Internal patient costs do not depend on the ward type; the report
    carries the first counterexample found."""
    violations = []
    for d in range(inst.num_hospitals):
        for q in range(inst.num_hospitals):
            base = inst.internal_cost[d][q][0]
            for r in range(1, inst.num_wards):
                value = inst.internal_cost[d][q][r]
                if value != base:
                    violations.append(
                        Violation(
                            code="internal-cost-depends-on-ward",
                            where={
                                "district": inst.hospitals[d],
                                "hospital": inst.hospitals[q],
                                "ward": inst.wards[0],
                                "other_ward": inst.wards[r],
                            },
                            lhs=base,
                            rhs=value,
                            message=(
                                f"internal cost from district {inst.hospitals[d]} to "
                                f"hospital {inst.hospitals[q]} differs across ward types: "
                                f"{base} for {inst.wards[0]} vs {value} for {inst.wards[r]}"
                            ),
                        )
                    )
                    return _report(4, violations)
    return _report(4, violations)


def check_assumption5(inst: ScenarioInstance) -> AssumptionReport:
    """Every upgrade costs the same; the report carries the first
    counterexample found."""
    violations = []
    base = inst.excel_cost[0][0]
    for q in range(inst.num_hospitals):
        for r in range(inst.num_wards):
            value = inst.excel_cost[q][r]
            if value != base:
                violations.append(
                    Violation(
                        code="upgrade-cost-not-uniform",
                        where={
                            "hospital": inst.hospitals[0],
                            "ward": inst.wards[0],
                            "other_hospital": inst.hospitals[q],
                            "other_ward": inst.wards[r],
                        },
                        lhs=base,
                        rhs=value,
                        message=(
                            f"upgrade cost is not uniform: "
                            f"({inst.hospitals[0]}, {inst.wards[0]}) costs {base} but "
                            f"({inst.hospitals[q]}, {inst.wards[r]}) costs {value}"
                        ),
                    )
                )
                return _report(5, violations)
    return _report(5, violations)


def all_assumptions(inst: ScenarioInstance) -> tuple[AssumptionReport, ...]:
    """Run the five assumption checkers in order."""
    return (
        check_assumption1(inst),
        check_assumption2(inst),
        check_assumption3(inst),
        check_assumption4(inst),
        check_assumption5(inst),
    )


# ---------------------------------------------------------------------------
# Seeded generation


def _distinct_sample(rng: random.Random, count: int, lo: int, step: int = 1) -> list[int]:
    # sample without replacement from a range wide enough to stay cheap
    span = max(4 * count, 256)
    return rng.sample(range(lo, lo + span * step, step), count)


def _ids(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def _gen_default(rng: random.Random, nq: int, nr: int, require_a1: bool) -> ScenarioInstance:
    hospitals = _ids("q", nq)
    wards = _ids("r", nr)
    if require_a1:
        weights = rng.sample(range(90, 90 + max(24, nq + 1)), nq)
    else:
        weights = _distinct_sample(rng, nq, 40)
    total_w = sum(weights)
    population = tuple(Fraction(w, total_w) for w in weights)

    if require_a1:
        for _ in range(_REJECTION_CAP):
            sizes = tuple(rng.sample(range(500, 1600), nr))
            if all(
                (best := _smallest_other_slice(sizes, population, k)) is None
                or Fraction(sizes[k]) > best[0]
                for k in range(nr)
            ):
                break
        else:
            raise GenerationError(
                f"profile {PROFILE_A1!r}: found no admissible group sizes "
                f"within {_REJECTION_CAP} tries"
            )
    else:
        sizes = tuple(_distinct_sample(rng, nr, 200))

    excel_nums = _distinct_sample(rng, nq * nr, 401, step=2)
    excel_cost = tuple(
        tuple(Fraction(excel_nums[q * nr + r], 4) for r in range(nr)) for q in range(nq)
    )
    in_nums = _distinct_sample(rng, nq * nq * nr, 11, step=2)
    internal_cost = tuple(
        tuple(
            tuple(Fraction(in_nums[(d * nq + q) * nr + r], 4) for r in range(nr))
            for q in range(nq)
        )
        for d in range(nq)
    )
    out_nums = _distinct_sample(rng, nq * nr, 1, step=2)
    out_cost = tuple(
        tuple(Fraction(out_nums[d * nr + r], 4) for r in range(nr)) for d in range(nq)
    )
    sum_cost = sum(sum(row) for row in excel_cost)
    budget_cap = (sum_cost.numerator * 6) // (sum_cost.denominator * 5) + 1
    budget = Fraction(rng.randint(0, budget_cap))
    return ScenarioInstance(
        hospitals=hospitals,
        wards=wards,
        population=population,
        group_sizes=sizes,
        excel_cost=excel_cost,
        internal_cost=internal_cost,
        out_cost=out_cost,
        budget=budget,
    )


def _gen_a45(rng: random.Random, nq: int, nr: int) -> ScenarioInstance:
    """Distance-derived internal costs constant across wards, uniform upgrade
    cost, and group sizes that are exact multiples of the population-weight
    total (so demand cells carry no rounding error)."""
    hospitals = _ids("q", nq)
    wards = _ids("r", nr)
    weights = rng.sample(range(60, 60 + max(81, nq + 1)), nq)
    total_w = sum(weights)
    population = tuple(Fraction(w, total_w) for w in weights)
    multipliers = rng.sample(range(2, 2 + max(80, nr + 1)), nr)
    sizes = tuple(m * total_w for m in multipliers)

    positions = rng.sample(range(0, max(120, 3 * nq)), nq)
    jitters = _distinct_sample(rng, nq * nq, 0)
    base_in = [
        [
            Fraction(1000 * abs(positions[d] - positions[q]) + jitters[d * nq + q], 100)
            for q in range(nq)
        ]
        for d in range(nq)
    ]
    out_nums = rng.sample(range(30001, 180001, 2), nq)
    base_out = [Fraction(n, 100) for n in out_nums]

    internal_cost = tuple(
        tuple(tuple(base_in[d][q] for _ in range(nr)) for q in range(nq))
        for d in range(nq)
    )
    out_cost = tuple(tuple(base_out[d] for _ in range(nr)) for d in range(nq))

    # Calibrate the uniform upgrade cost against the average patient-cost gain
    # so that greedy stops at varied depths across seeds.
    z_empty = sum(
        m * sum(w * base_out[d] for d, w in enumerate(weights)) for m in multipliers
    )
    z_full = sum(
        m * sum(w * min(base_out[d], min(base_in[d])) for d, w in enumerate(weights))
        for m in multipliers
    )
    mean_gain = (z_empty - z_full) / (nq * nr)
    upgrade = mean_gain * Fraction(rng.randint(20, 300), 100)
    excel_cost = tuple(tuple(upgrade for _ in range(nr)) for _ in range(nq))
    budget = upgrade * rng.randint(1, nq * nr)
    return ScenarioInstance(
        hospitals=hospitals,
        wards=wards,
        population=population,
        group_sizes=sizes,
        excel_cost=excel_cost,
        internal_cost=internal_cost,
        out_cost=out_cost,
        budget=budget,
    )


def generate_scenario(
    seed: int, dims: tuple[int, int], profile: str = PROFILE_UNCONSTRAINED
) -> ScenarioInstance:
    """Deterministically generate a scenario instance.

    Args:
        seed: RNG seed; identical (seed, dims, profile) yields an identical
            instance.
        dims: (number of hospitals, number of ward types), both >= 1.
        profile: "unconstrained" draws wide tie-avoiding rationals;
            "assumption1-satisfying" draws balanced populations and
            same-magnitude group sizes by rejection until check_assumption1
            holds (generation error after 1000 tries);
            "assumption4&5-satisfying" builds distance-derived internal costs
            constant across wards and a uniform upgrade cost.
    """
    nq, nr = dims
    if nq < 1 or nr < 1:
        raise InvalidInstanceError("dims: need at least one hospital and one ward type")
    if profile not in PROFILES:
        raise InvalidInstanceError(
            f"profile: unknown generation profile {profile!r}; choose from {PROFILES}"
        )
    rng = random.Random(seed)
    if profile == PROFILE_A45:
        return _gen_a45(rng, nq, nr)
    return _gen_default(rng, nq, nr, require_a1=profile == PROFILE_A1)


# ---------------------------------------------------------------------------
# Scenario file format


def instance_to_dict(inst: ScenarioInstance) -> dict:
    """JSON-ready document; rationals become "num/den" strings."""
    return {
        "schema": SCHEMA_VERSION,
        "hospitals": list(inst.hospitals),
        "wards": list(inst.wards),
        "population": [format_rational(a) for a in inst.population],
        "group_sizes": list(inst.group_sizes),
        "excel_cost": [[format_rational(c) for c in row] for row in inst.excel_cost],
        "internal_cost": [
            [[format_rational(c) for c in row] for row in plane]
            for plane in inst.internal_cost
        ],
        "out_cost": [[format_rational(c) for c in row] for row in inst.out_cost],
        "budget": format_rational(inst.budget),
    }


def instance_from_dict(doc) -> ScenarioInstance:
    if not isinstance(doc, dict):
        raise InvalidInstanceError("scenario document must be a JSON object")
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        raise InvalidInstanceError(
            f"schema: unsupported version {schema!r}, expected {SCHEMA_VERSION}"
        )
    required = (
        "hospitals",
        "wards",
        "population",
        "group_sizes",
        "excel_cost",
        "internal_cost",
        "out_cost",
        "budget",
    )
    for key in required:
        if key not in doc:
            raise InvalidInstanceError(f"{key}: missing required field")
    for key in ("hospitals", "wards"):
        ids = doc[key]
        if not isinstance(ids, list) or any(not isinstance(i, str) for i in ids):
            raise InvalidInstanceError(f"{key}: must be a list of strings")
    sizes = doc["group_sizes"]
    if not isinstance(sizes, list):
        raise InvalidInstanceError("group_sizes: must be a list of integers")
    return ScenarioInstance(
        hospitals=tuple(doc["hospitals"]),
        wards=tuple(doc["wards"]),
        population=tuple(doc["population"]),
        group_sizes=tuple(sizes),
        excel_cost=doc["excel_cost"],
        internal_cost=doc["internal_cost"],
        out_cost=doc["out_cost"],
        budget=doc["budget"],
    )


def dumps_scenario(inst: ScenarioInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def save_scenario(inst: ScenarioInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scenario(inst))


def load_scenario(path) -> ScenarioInstance:
    """Load and validate a scenario file; any defect raises an invalid-instance
    error naming the offending field."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInstanceError(f"malformed JSON in scenario file: {exc}") from exc
    return instance_from_dict(doc)
