"""Central-financing regime: pick a budget-feasible set of ward upgrades
("excellence set"), send every demand cell to its cheapest destination, and
minimize upgrade cost plus total patient cost.

Provides the greedy heuristic, an exhaustive exact solver for desk-scale
instances, convenience orders over hospitals and wards, the staircase verdict
for greedy solutions, and a CPLEX-LP model export."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    AssumptionViolationError,
    BudgetExceededError,
    InstanceTooLargeError,
    InvalidInstanceError,
)
from .scenario import (
    DemandCell,
    ScenarioInstance,
    check_assumption4,
    check_assumption5,
    format_rational,
)

# Destination marker for patients treated outside the system.
OUTSIDE = "outside"

# Hard cap on |Q| * |R| for the exhaustive solver (2^24 subsets).
EXACT_ENUMERATION_CAP = 24


@dataclass(frozen=True)
class ExcellenceSet:
    """A set of (hospital id, ward id) upgrades."""

    members: frozenset[tuple[str, str]]

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(tuple(m) for m in self.members))

    @classmethod
    def of(cls, pairs) -> "ExcellenceSet":
        return cls(members=frozenset((q, r) for q, r in pairs))

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def validate_against(self, inst: ScenarioInstance) -> None:
        for q, r in self.members:
            if q not in inst.hospitals or r not in inst.wards:
                raise InvalidInstanceError(
                    f"excellence pair ({q!r}, {r!r}) is not in the instance"
                )

    def sorted_members(self, inst: ScenarioInstance) -> tuple[tuple[str, str], ...]:
        return tuple(
            sorted(
                self.members,
                key=lambda p: (inst.hospital_index(p[0]), inst.ward_index(p[1])),
            )
        )

    def cost(self, inst: ScenarioInstance) -> Fraction:
        return sum(
            (
                inst.excel_cost[inst.hospital_index(q)][inst.ward_index(r)]
                for q, r in self.members
            ),
            Fraction(0),
        )


EMPTY_EXCELLENCE = ExcellenceSet(frozenset())


@dataclass(frozen=True)
class Assignment:
    """Destination of every demand cell: (hospital id, ward id) or OUTSIDE."""

    destinations: dict

    def destination_of(self, cell: DemandCell):
        return self.destinations[cell]


@dataclass(frozen=True)
class GreedyStep:
    added: tuple[str, str]
    z_before: Fraction
    z_after: Fraction


@dataclass(frozen=True)
class PlanSolution:
    """An excellence set with its optimal assignment and cost breakdown.

    z_value == excel_cost_part + patient_cost_part, and the excellence cost
    never exceeds the budget. trace is non-empty only for greedy solutions.
    """

    excellence: ExcellenceSet
    assignment: Assignment
    z_value: Fraction
    excel_cost_part: Fraction
    patient_cost_part: Fraction
    trace: tuple[GreedyStep, ...] = ()


def admissible(excellence: ExcellenceSet, inst: ScenarioInstance) -> bool:
    """True when the set's total upgrade cost fits the budget."""
    excellence.validate_against(inst)
    return excellence.cost(inst) <= inst.budget


def evaluate_Z(excellence: ExcellenceSet, inst: ScenarioInstance) -> PlanSolution:
    """Cost of an admissible excellence set with each cell sent to its
    cheapest destination.

    Cells may go to a hospital excellent in their own ward type or outside.
    Cost ties prefer OUTSIDE, then the lowest hospital index.
    """
    excellence.validate_against(inst)
    excel_part = excellence.cost(inst)
    if excel_part > inst.budget:
        raise BudgetExceededError(
            f"excellence cost {excel_part} exceeds budget {inst.budget}"
        )
    by_ward: dict[int, list[int]] = {}
    for q, r in excellence.members:
        by_ward.setdefault(inst.ward_index(r), []).append(inst.hospital_index(q))
    for qs in by_ward.values():
        qs.sort()
    patient_part = Fraction(0)
    destinations = {}
    for cell in inst.demand_cells():
        d = inst.hospital_index(cell.district)
        r = inst.ward_index(cell.ward)
        best_cost = inst.out_cost[d][r]
        best_dest = OUTSIDE
        for qi in by_ward.get(r, ()):
            c = inst.internal_cost[d][qi][r]
            if c < best_cost:
                best_cost = c
                best_dest = (inst.hospitals[qi], cell.ward)
        patient_part += cell.count * best_cost
        destinations[cell] = best_dest
    return PlanSolution(
        excellence=excellence,
        assignment=Assignment(destinations=destinations),
        z_value=excel_part + patient_part,
        excel_cost_part=excel_part,
        patient_cost_part=patient_part,
    )


def _cell_table(inst: ScenarioInstance):
    """Demand cells as index triples plus a ward -> cell positions map."""
    cells = []
    by_ward: dict[int, list[int]] = {}
    for pos, cell in enumerate(inst.demand_cells()):
        d = inst.hospital_index(cell.district)
        r = inst.ward_index(cell.ward)
        cells.append((d, r, cell.count))
        by_ward.setdefault(r, []).append(pos)
    return cells, by_ward


def greedy_solve(inst: ScenarioInstance) -> PlanSolution:
    """Grow the excellence set one budget-feasible upgrade at a time.

    Each step adds the pair whose addition gives the lowest resulting cost,
    ties broken by (hospital index, ward index); stops when nothing fits the
    budget, nothing strictly improves, or every pair is already in. Elements
    are never removed once inserted.
    """
    nq, nr = inst.num_hospitals, inst.num_wards
    cells, by_ward = _cell_table(inst)
    current = [inst.out_cost[d][r] for d, r, _ in cells]
    z_current = sum(
        (count * c for (_, _, count), c in zip(cells, current)), Fraction(0)
    )
    chosen: set[tuple[int, int]] = set()
    spent = Fraction(0)
    trace = []
    while len(chosen) < nq * nr:
        best = None
        for qi in range(nq):
            for ri in range(nr):
                if (qi, ri) in chosen:
                    continue
                price = inst.excel_cost[qi][ri]
                if spent + price > inst.budget:
                    continue
                saving = Fraction(0)
                for pos in by_ward.get(ri, ()):
                    d, _, count = cells[pos]
                    c_in = inst.internal_cost[d][qi][ri]
                    if c_in < current[pos]:
                        saving += count * (current[pos] - c_in)
                key = (z_current + price - saving, qi, ri)
                if best is None or key < best:
                    best = key
        if best is None:
            break
        z_new, qi, ri = best
        if not z_new < z_current:
            break
        chosen.add((qi, ri))
        spent += inst.excel_cost[qi][ri]
        for pos in by_ward.get(ri, ()):
            d, _, _ = cells[pos]
            c_in = inst.internal_cost[d][qi][ri]
            if c_in < current[pos]:
                current[pos] = c_in
        trace.append(
            GreedyStep(
                added=(inst.hospitals[qi], inst.wards[ri]),
                z_before=z_current,
                z_after=z_new,
            )
        )
        z_current = z_new
    excellence = ExcellenceSet.of(
        (inst.hospitals[qi], inst.wards[ri]) for qi, ri in chosen
    )
    solution = evaluate_Z(excellence, inst)
    if solution.z_value != z_current:
        raise AssertionError(
            "greedy bookkeeping diverged from evaluation: "
            f"{solution.z_value} != {z_current}"
        )
    return PlanSolution(
        excellence=solution.excellence,
        assignment=solution.assignment,
        z_value=solution.z_value,
        excel_cost_part=solution.excel_cost_part,
        patient_cost_part=solution.patient_cost_part,
        trace=tuple(trace),
    )


def exact_solve(inst: ScenarioInstance) -> PlanSolution:
    """Exhaustive optimum over all budget-admissible excellence sets.

    Supersets of budget-infeasible sets are pruned. Ties prefer fewer members,
    then the lexicographically smallest member list. Guarded to
    |Q| * |R| <= 24.
    """
    nq, nr = inst.num_hospitals, inst.num_wards
    n = nq * nr
    if n > EXACT_ENUMERATION_CAP:
        raise InstanceTooLargeError(
            f"|Q|*|R| = {n} exceeds the exact enumeration cap of "
            f"{EXACT_ENUMERATION_CAP}"
        )
    pairs = [(qi, ri) for qi in range(nq) for ri in range(nr)]
    cells, by_ward = _cell_table(inst)
    current = [inst.out_cost[d][r] for d, r, _ in cells]
    patient = sum((count * c for (_, _, count), c in zip(cells, current)), Fraction(0))
    budget = inst.budget

    state = {
        "spent": Fraction(0),
        "patient": patient,
        "chosen": [],
        "best": None,  # (z, member count, member tuple)
    }

    def visit(i: int) -> None:
        if i == len(pairs):
            z = state["spent"] + state["patient"]
            key = (z, len(state["chosen"]), tuple(state["chosen"]))
            if state["best"] is None or key < state["best"]:
                state["best"] = key
            return
        visit(i + 1)  # exclude pairs[i]
        qi, ri = pairs[i]
        price = inst.excel_cost[qi][ri]
        if state["spent"] + price > budget:
            return  # every superset is infeasible too
        undo = []
        for pos in by_ward.get(ri, ()):
            d, _, count = cells[pos]
            c_in = inst.internal_cost[d][qi][ri]
            if c_in < current[pos]:
                undo.append((pos, current[pos]))
                state["patient"] -= count * (current[pos] - c_in)
                current[pos] = c_in
        state["spent"] += price
        state["chosen"].append((qi, ri))
        visit(i + 1)
        state["chosen"].pop()
        state["spent"] -= price
        for pos, old in undo:
            d, _, count = cells[pos]
            state["patient"] += count * (old - current[pos])
            current[pos] = old

    visit(0)
    _, _, members = state["best"]
    excellence = ExcellenceSet.of(
        (inst.hospitals[qi], inst.wards[ri]) for qi, ri in members
    )
    solution = evaluate_Z(excellence, inst)
    if solution.z_value != state["best"][0]:
        raise AssertionError(
            "exact enumeration diverged from evaluation: "
            f"{solution.z_value} != {state['best'][0]}"
        )
    return solution


def ward_order(inst: ScenarioInstance) -> tuple[str, ...]:
    """Ward types by patient-group size, largest first; ties keep the
    original index order."""
    ranked = sorted(
        range(inst.num_wards), key=lambda ri: (-inst.group_sizes[ri], ri)
    )
    return tuple(inst.wards[ri] for ri in ranked)


def hospital_order(inst: ScenarioInstance, ward: str | None = None) -> tuple[str, ...]:
    """Hospitals by convenience: iteratively append the hospital whose
    addition to the excellent-in-one-ward set lowers that ward's patient cost
    the most (ties by hospital index).

    Requires ward-independent internal costs and a uniform upgrade cost; with
    the uniform upgrade cost the upgrade part cancels in every comparison, so
    only patient-cost marginals are compared. The optional ward argument
    (default: the first ward) exists so callers can verify the order does not
    depend on the choice.
    """
    a4 = check_assumption4(inst)
    if not a4.holds:
        raise AssumptionViolationError(
            "hospital convenience order requires internal costs independent of "
            f"the ward type (assumption 4): {a4.violations[0]}"
        )
    a5 = check_assumption5(inst)
    if not a5.holds:
        raise AssumptionViolationError(
            "hospital convenience order requires a uniform upgrade cost "
            f"(assumption 5): {a5.violations[0]}"
        )
    ri = inst.ward_index(ward) if ward is not None else 0
    counts = {}
    for cell in inst.demand_cells():
        if inst.ward_index(cell.ward) == ri:
            counts[inst.hospital_index(cell.district)] = cell.count
    current = {d: inst.out_cost[d][ri] for d in range(inst.num_hospitals)}
    remaining = list(range(inst.num_hospitals))
    order = []
    while remaining:
        best = None
        for qi in remaining:
            score = sum(
                (
                    counts[d] * min(current[d], inst.internal_cost[d][qi][ri])
                    for d in current
                ),
                Fraction(0),
            )
            if best is None or (score, qi) < best:
                best = (score, qi)
        _, qi = best
        remaining.remove(qi)
        order.append(qi)
        for d in current:
            c = inst.internal_cost[d][qi][ri]
            if c < current[d]:
                current[d] = c
    return tuple(inst.hospitals[qi] for qi in order)


@dataclass(frozen=True)
class TotalOrders:
    """The two convenience orders a staircase is measured against."""

    ward_order: tuple[str, ...]
    hospital_order: tuple[str, ...]


def total_orders(inst: ScenarioInstance) -> TotalOrders:
    return TotalOrders(ward_order=ward_order(inst), hospital_order=hospital_order(inst))


@dataclass(frozen=True)
class StaircaseVerdict:
    """Is the excellence set downward closed in both convenience orders?

    violation, when present, is ((q, r), (q2, r2)): (q, r) is in the set while
    the dominated pair (q2, r2) is not.
    """

    holds: bool
    violation: tuple[tuple[str, str], tuple[str, str]] | None


def check_staircase(solution: PlanSolution, orders: TotalOrders) -> StaircaseVerdict:
    """Verify that whenever (q, r) is excellent, so is every (q', r') with q'
    at least as convenient and r' at least as large-ordered."""
    members = solution.excellence.members
    hrank = {q: i for i, q in enumerate(orders.hospital_order)}
    wrank = {r: i for i, r in enumerate(orders.ward_order)}
    for q, r in sorted(members, key=lambda p: (hrank[p[0]], wrank[p[1]])):
        for q2 in orders.hospital_order[: hrank[q] + 1]:
            for r2 in orders.ward_order[: wrank[r] + 1]:
                if (q2, r2) not in members:
                    return StaircaseVerdict(holds=False, violation=((q, r), (q2, r2)))
    return StaircaseVerdict(holds=True, violation=None)


# ---------------------------------------------------------------------------
# CPLEX-LP model export


def _lp_num(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return repr(x.numerator / x.denominator)


def _lp_expr(terms: list[tuple[Fraction, str]], fallback_var: str) -> list[str]:
    """Render coefficient/variable terms, several per line, skipping zeros."""
    rendered = [f"{_lp_num(coef)} {var}" for coef, var in terms if coef != 0]
    if not rendered:
        rendered = [f"0 {fallback_var}"]
    lines = []
    for i in range(0, len(rendered), 6):
        prefix = " " if i == 0 else "   + "
        lines.append(prefix + " + ".join(rendered[i : i + 6]))
    return lines


def export_ilp(
    inst: ScenarioInstance, forced_excellence: ExcellenceSet | None = None
) -> str:
    """Serialize the planning problem as a CPLEX-LP text model.

    One binary y per (hospital, ward) upgrade, one binary x per (cell,
    hospital) internal placement of the cell's own ward type, and one binary
    per cell for the outside option. Constraints: one destination per cell,
    internal placement only at upgraded hospitals, upgrades within budget.
    forced_excellence pins those y variables to 1 via the bounds section
    (fix-and-solve cross checks).
    """
    nq, nr = inst.num_hospitals, inst.num_wards
    cells = inst.demand_cells()

    def y(qi, ri):
        return f"y_{qi}_{ri}"

    def x(di, ri, qi):
        return f"x_{di}_{ri}_{qi}"

    def xout(di, ri):
        return f"xout_{di}_{ri}"

    obj_terms: list[tuple[Fraction, str]] = []
    for qi in range(nq):
        for ri in range(nr):
            obj_terms.append((inst.excel_cost[qi][ri], y(qi, ri)))
    cell_indices = []
    for cell in cells:
        di = inst.hospital_index(cell.district)
        ri = inst.ward_index(cell.ward)
        cell_indices.append((di, ri, cell.count))
        for qi in range(nq):
            obj_terms.append(
                (cell.count * inst.internal_cost[di][qi][ri], x(di, ri, qi))
            )
        obj_terms.append((cell.count * inst.out_cost[di][ri], xout(di, ri)))

    lines = ["Minimize"]
    expr = _lp_expr(obj_terms, y(0, 0))
    lines.append(" obj:" + expr[0])
    lines.extend(expr[1:])

    lines.append("Subject To")
    for di, ri, _ in cell_indices:
        vars_ = [xout(di, ri)] + [x(di, ri, qi) for qi in range(nq)]
        lines.append(f" assign_{di}_{ri}: " + " + ".join(vars_) + " = 1")
    for di, ri, _ in cell_indices:
        for qi in range(nq):
            lines.append(
                f" link_{di}_{ri}_{qi}: {x(di, ri, qi)} - {y(qi, ri)} <= 0"
            )
    budget_terms = [
        (inst.excel_cost[qi][ri], y(qi, ri)) for qi in range(nq) for ri in range(nr)
    ]
    expr = _lp_expr(budget_terms, y(0, 0))
    budget_lines = [" budget:" + expr[0]] + expr[1:]
    budget_lines[-1] += f" <= {_lp_num(inst.budget)}"
    lines.extend(budget_lines)

    lines.append("Bounds")
    if forced_excellence is not None:
        forced_excellence.validate_against(inst)
        for q, r in forced_excellence.sorted_members(inst):
            lines.append(f" {y(inst.hospital_index(q), inst.ward_index(r))} = 1")

    lines.append("Binary")
    for qi in range(nq):
        for ri in range(nr):
            lines.append(f" {y(qi, ri)}")
    for di, ri, _ in cell_indices:
        for qi in range(nq):
            lines.append(f" {x(di, ri, qi)}")
        lines.append(f" {xout(di, ri)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def plan_to_dict(
    inst: ScenarioInstance,
    solution: PlanSolution,
    staircase: StaircaseVerdict | None = None,
    orders: TotalOrders | None = None,
) -> dict:
    """JSON-ready planning report with rationals as "num/den" strings."""
    doc = {
        "excellence": [
            {"hospital": q, "ward": r}
            for q, r in solution.excellence.sorted_members(inst)
        ],
        "z_value": format_rational(solution.z_value),
        "excel_cost_part": format_rational(solution.excel_cost_part),
        "patient_cost_part": format_rational(solution.patient_cost_part),
        "assignment": [],
        "trace": [
            {
                "added": {"hospital": step.added[0], "ward": step.added[1]},
                "z_before": format_rational(step.z_before),
                "z_after": format_rational(step.z_after),
            }
            for step in solution.trace
        ],
    }
    for cell in inst.demand_cells():
        dest = solution.assignment.destination_of(cell)
        doc["assignment"].append(
            {
                "district": cell.district,
                "ward": cell.ward,
                "count": cell.count,
                "destination": OUTSIDE
                if dest == OUTSIDE
                else {"hospital": dest[0], "ward": dest[1]},
            }
        )
    if staircase is not None and orders is not None:
        doc["staircase"] = {
            "holds": staircase.holds,
            "violation": None
            if staircase.violation is None
            else [list(staircase.violation[0]), list(staircase.violation[1])],
            "ward_order": list(orders.ward_order),
            "hospital_order": list(orders.hospital_order),
        }
    return doc
