"""Exact-rational domain types and fairness/efficiency checkers for chore division.

All quantities are `fractions.Fraction`; no verdict anywhere in this package
depends on floating point.  Agents and chores are 0-based indices internally
(the CLI converts to 1-based on the wire).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Optional, Sequence

Rat = Fraction

DEFAULT_ORACLE_BUDGET = 10**7


class BudgetExceededError(RuntimeError):
    """An enumeration oracle was asked to exceed its configured budget."""


class CertificationError(RuntimeError):
    """The solve pipeline could not certify an output (implementation bug)."""


def rat(x) -> Fraction:
    """Coerce ints, "p/q" strings and Fractions to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool) or isinstance(x, float):
        raise TypeError(f"refusing inexact value {x!r}")
    return Fraction(x)


@dataclass(frozen=True)
class CheckReport:
    """Verdict of a property checker; a false verdict carries a witness."""

    name: str
    verdict: bool
    witness: object = None

    def __bool__(self) -> bool:
        return self.verdict


@dataclass(frozen=True)
class Instance:
    """A chore-division instance: cost matrix c_ij and entitlements alpha_i.

    Costs are non-negative; the market/perturbation layers require strict
    positivity, which `preprocess_zero_costs` establishes.
    """

    costs: tuple[tuple[Fraction, ...], ...]
    entitlements: tuple[Fraction, ...]

    def __init__(self, costs, entitlements=None):
        rows = tuple(tuple(rat(c) for c in row) for row in costs)
        if len(rows) < 1:
            raise ValueError("need at least one agent")
        m = len(rows[0])
        if any(len(row) != m for row in rows):
            raise ValueError("ragged cost matrix")
        if any(c < 0 for row in rows for c in row):
            raise ValueError("negative cost")
        if entitlements is None:
            ent = tuple(Fraction(1) for _ in rows)
        else:
            ent = tuple(rat(a) for a in entitlements)
        if len(ent) != len(rows):
            raise ValueError("entitlement vector length mismatch")
        if any(a <= 0 for a in ent):
            raise ValueError("entitlements must be positive")
        object.__setattr__(self, "costs", rows)
        object.__setattr__(self, "entitlements", ent)

    @property
    def n(self) -> int:
        return len(self.costs)

    @property
    def m(self) -> int:
        return len(self.costs[0])

    @cached_property
    def c_max(self) -> Fraction:
        return max(c for row in self.costs for c in row)

    @cached_property
    def c_min(self) -> Fraction:
        return min(c for row in self.costs for c in row)

    @cached_property
    def strictly_positive(self) -> bool:
        return self.m == 0 or self.c_min > 0

    def require_positive(self) -> None:
        if not self.strictly_positive:
            raise ValueError("operation requires strictly positive costs; "
                             "run preprocess_zero_costs first")

    @cached_property
    def alpha_min(self) -> Fraction:
        return min(self.entitlements)

    @cached_property
    def int_rows(self) -> tuple[tuple[int, ...], ...]:
        """Per-agent integer view: row i scaled by `row_scales[i]`.

        Within-agent comparisons (EF1, Pareto caps) are exact on these ints.
        """
        return tuple(tuple(int(c * s) for c in row)
                     for row, s in zip(self.costs, self.row_scales))

    @cached_property
    def row_scales(self) -> tuple[int, ...]:
        return tuple(lcm(*(c.denominator for c in row)) if row else 1
                     for row in self.costs)

    @cached_property
    def int_matrix(self) -> tuple[tuple[int, ...], ...]:
        """Globally scaled integer view; cross-agent products stay exact."""
        s = self.global_scale
        return tuple(tuple(int(c * s) for c in row) for row in self.costs)

    @cached_property
    def global_scale(self) -> int:
        dens = [c.denominator for row in self.costs for c in row]
        return lcm(*dens) if dens else 1

    def with_entitlements(self, entitlements) -> "Instance":
        return Instance(self.costs, entitlements)


@dataclass(frozen=True)
class Allocation:
    """An n-partition of the chore set into per-agent bundles."""

    bundles: tuple[frozenset[int], ...]

    def __init__(self, bundles: Iterable[Iterable[int]]):
        object.__setattr__(self, "bundles",
                           tuple(frozenset(b) for b in bundles))

    @classmethod
    def from_assignment(cls, n: int, assignment: Sequence[int]) -> "Allocation":
        bundles: list[set[int]] = [set() for _ in range(n)]
        for j, i in enumerate(assignment):
            bundles[i].add(j)
        return cls(bundles)

    @property
    def n(self) -> int:
        return len(self.bundles)

    def assignment(self, m: int) -> tuple[int, ...]:
        owner = [-1] * m
        for i, b in enumerate(self.bundles):
            for j in b:
                owner[j] = i
        return tuple(owner)

    def validate_for(self, inst: Instance) -> None:
        seen: set[int] = set()
        for b in self.bundles:
            for j in b:
                if not (0 <= j < inst.m):
                    raise ValueError(f"chore index {j} out of range")
                if j in seen:
                    raise ValueError(f"chore {j} allocated twice")
                seen.add(j)
        if len(self.bundles) != inst.n:
            raise ValueError("bundle count != agent count")
        if len(seen) != inst.m:
            raise ValueError("allocation does not cover all chores")


@dataclass(frozen=True)
class PriceVector:
    """Dual prices p_j; strictly positive by Observation 2.4's structure."""

    prices: tuple[Fraction, ...]

    def __init__(self, prices: Iterable):
        ps = tuple(rat(p) for p in prices)
        if any(p <= 0 for p in ps):
            raise ValueError("prices must be strictly positive")
        object.__setattr__(self, "prices", ps)

    def total(self, bundle: Iterable[int]) -> Fraction:
        return sum((self.prices[j] for j in bundle), Fraction(0))

    def total_less_max(self, bundle: Iterable[int]) -> Fraction:
        """Bundle price after dropping its most expensive chore (0 if empty)."""
        b = list(bundle)
        if not b:
            return Fraction(0)
        return self.total(b) - max(self.prices[j] for j in b)


def preprocess_zero_costs(inst: Instance) -> tuple[Instance, tuple[tuple[int, int], ...]]:
    """Peel off zero-cost chores, forcing each onto its cheapest agent.

    Returns the strictly-positive reduced instance (chores keep their relative
    order) and the forced (chore, agent) pairs in original indices; lowest
    agent index breaks ties.
    """
    forced: list[tuple[int, int]] = []
    kept: list[int] = []
    for j in range(inst.m):
        zero_agents = [i for i in range(inst.n) if inst.costs[i][j] == 0]
        if zero_agents:
            forced.append((j, zero_agents[0]))
        else:
            kept.append(j)
    reduced = Instance(
        [[inst.costs[i][j] for j in kept] for i in range(inst.n)],
        inst.entitlements,
    )
    return reduced, tuple(forced)


def reattach_forced(reduced_alloc: Allocation,
                    forced: Sequence[tuple[int, int]],
                    m: int) -> Allocation:
    """Map a reduced-instance allocation back to original chore indices."""
    forced_chores = {j for j, _ in forced}
    kept = [j for j in range(m) if j not in forced_chores]
    bundles = [set() for _ in range(reduced_alloc.n)]
    for i, b in enumerate(reduced_alloc.bundles):
        for jr in b:
            bundles[i].add(kept[jr])
    for j, i in forced:
        bundles[i].add(j)
    return Allocation(bundles)


def bundle_cost(inst: Instance, agent: int, bundle: Iterable[int]) -> Fraction:
    """Exact additive cost c_agent(bundle); the empty bundle costs 0."""
    if not (0 <= agent < inst.n):
        raise IndexError(f"agent {agent} out of range")
    total = Fraction(0)
    row = inst.costs[agent]
    for j in bundle:
        if not (0 <= j < inst.m):
            raise IndexError(f"chore {j} out of range")
        total += row[j]
    return total


def check_wef1(inst: Instance, x: Allocation) -> CheckReport:
    """Weighted envy-freeness up to one chore; with unit entitlements this is EF1.

    Verdict is false iff some agent i weighted-envies i' even after removing
    its own best single chore; the witness is that (i, i') pair.
    """
    x.validate_for(inst)
    n = inst.n
    rows = inst.int_rows
    # alpha-scaled integer comparisons: a_num/a_den per agent.
    anum = [a.numerator for a in inst.entitlements]
    aden = [a.denominator for a in inst.entitlements]
    bundles = [sorted(b) for b in x.bundles]
    totals = [sum(rows[i][j] for j in bundles[i]) for i in range(n)]
    cross = [[sum(rows[i][j] for j in bundles[k]) for k in range(n)]
             for i in range(n)]
    for i in range(n):
        best_drop = max((rows[i][j] for j in bundles[i]), default=0)
        reduced = totals[i] - best_drop
        for k in range(n):
            if i == k:
                continue
            # c_i(x_i)/alpha_i > c_i(x_k)/alpha_k, cross-multiplied exactly
            lhs = cross[i][i] * anum[k] * aden[i]
            rhs = cross[i][k] * anum[i] * aden[k]
            if lhs > rhs:
                if reduced * anum[k] * aden[i] > rhs:
                    return CheckReport("wef1", False, (i, k))
    return CheckReport("wef1", True)


def check_wpef1(p: PriceVector, x: Allocation,
                entitlements: Sequence[Fraction]) -> CheckReport:
    """Observation-1/3 test: max_i phat(x_i)/alpha_i <= min_k p(x_k)/alpha_k."""
    alphas = [rat(a) for a in entitlements]
    hats = [p.total_less_max(b) / a for b, a in zip(x.bundles, alphas)]
    fulls = [p.total(b) / a for b, a in zip(x.bundles, alphas)]
    hi = max(range(x.n), key=lambda i: (hats[i], -i))
    lo = min(range(x.n), key=lambda i: (fulls[i], i))
    if hats[hi] <= fulls[lo]:
        return CheckReport("wpef1", True)
    return CheckReport("wpef1", False, (hi, lo))


def check_po_bruteforce(inst: Instance, x: Allocation,
                        budget: int = DEFAULT_ORACLE_BUDGET) -> CheckReport:
    """Ground-truth Pareto test by exhaustive search over all n^m allocations.

    Branch-and-bound on per-agent cost caps; fails loudly when n^m exceeds
    the budget rather than degrading to sampling.
    """
    x.validate_for(inst)
    n, m = inst.n, inst.m
    if n**m > budget:
        raise BudgetExceededError(
            f"oracle infeasible: n^m = {n}**{m} exceeds budget {budget}")
    if n == 1 or m == 0:
        return CheckReport("po", True)
    rows = inst.int_rows
    caps = [sum(rows[i][j] for j in x.bundles[i]) for i in range(n)]
    # Assign chores in descending min-cost order so pruning bites early.
    order = sorted(range(m), key=lambda j: (-min(rows[i][j] for i in range(n)), j))
    suffix_min = [0] * (m + 1)
    for t in range(m - 1, -1, -1):
        suffix_min[t] = suffix_min[t + 1] + min(rows[i][order[t]] for i in range(n))
    assign = [-1] * m
    spent = [0] * n

    def dfs(t: int) -> Optional[list[int]]:
        if t == m:
            if any(spent[i] < caps[i] for i in range(n)):
                return list(assign)
            return None
        if sum(caps[i] - spent[i] for i in range(n)) < suffix_min[t]:
            return None
        j = order[t]
        for i in range(n):
            c = rows[i][j]
            if spent[i] + c <= caps[i]:
                spent[i] += c
                assign[j] = i
                hit = dfs(t + 1)
                if hit is not None:
                    return hit
                spent[i] -= c
                assign[j] = -1
        return None

    dominator = dfs(0)
    if dominator is None:
        return CheckReport("po", True)
    return CheckReport("po", False, Allocation.from_assignment(n, dominator))


def _exchange_ratios(inst: Instance, x: Allocation):
    """Arc multipliers rho[i][k] = min_{j in x_i} c_kj / c_ij (None if x_i empty)."""
    inst.require_positive()
    n = inst.n
    rho: list[list[Optional[Fraction]]] = [[None] * n for _ in range(n)]
    for i in range(n):
        if not x.bundles[i]:
            continue
        for k in range(n):
            if k == i:
                continue
            rho[i][k] = min(Fraction(inst.costs[k][j], 1) / inst.costs[i][j]
                            for j in x.bundles[i])
    return rho


def _float_bf_candidate(rho, n: int) -> Optional[list[int]]:
    """Float log-domain Bellman-Ford filter; returns a candidate agent cycle.

    Only a hint: any reported cycle is re-verified exactly by the caller.
    """
    import math
    dist = [0.0] * n
    pred: list[Optional[int]] = [None] * n
    logs = [[math.log(float(rho[i][k])) if rho[i][k] is not None else None
             for k in range(n)] for i in range(n)]
    touched = None
    for _ in range(n):
        touched = None
        for i in range(n):
            for k in range(n):
                w = logs[i][k]
                if w is None:
                    continue
                if dist[i] + w < dist[k] - 1e-15:
                    dist[k] = dist[i] + w
                    pred[k] = i
                    touched = k
        if touched is None:
            return None
    v = touched
    for _ in range(n):
        v = pred[v]
    cycle = [v]
    u = pred[v]
    while u != v:
        cycle.append(u)
        u = pred[u]
    cycle.reverse()
    return cycle


def _cycle_product_below_one(rho, cycle: Sequence[int]) -> bool:
    num = Fraction(1)
    for t in range(len(cycle)):
        i, k = cycle[t], cycle[(t + 1) % len(cycle)]
        r = rho[i][k]
        if r is None:
            return False
        num *= r
    return num < 1


def _find_improving_cycle(inst: Instance, x: Allocation) -> Optional[list[int]]:
    """Exact search for an agent cycle with exchange-ratio product < 1."""
    n = inst.n
    rho = _exchange_ratios(inst, x)
    hint = _float_bf_candidate(rho, n) if n >= 2 else None
    if hint is not None and _cycle_product_below_one(rho, hint):
        return hint
    # Exhaustive simple-cycle enumeration; every cycle agent gives away a
    # chore, so cycles live on agents with nonempty bundles.  Canonical
    # start = smallest agent of the cycle.
    active = [i for i in range(n) if x.bundles[i]]

    def extend(start: int, cur: int, prod: Fraction,
               path: list[int]) -> Optional[list[int]]:
        if len(path) >= 2:
            r = rho[cur][start]
            if r is not None and prod * r < 1:
                return list(path)
        for k in active:
            if k <= start or k in path or rho[cur][k] is None:
                continue
            hit = extend(start, k, prod * rho[cur][k], path + [k])
            if hit is not None:
                return hit
        return None

    for start in active:
        hit = extend(start, start, Fraction(1), [start])
        if hit is not None:
            return hit
    return None


def find_fpo_weights(inst: Instance, x: Allocation) -> Optional[tuple[Fraction, ...]]:
    """Construct positive weights certifying x fractionally Pareto optimal.

    Multiplicative Bellman-Ford potentials on the exchange graph: returns w
    with max entry 1 such that every j in x_i attains min_k w_k c_kj, or None
    iff a strictly improving exchange cycle exists.
    """
    x.validate_for(inst)
    n = inst.n
    if inst.m == 0:
        return tuple(Fraction(1) for _ in range(n))
    rho = _exchange_ratios(inst, x)
    w = [Fraction(1)] * n
    for _ in range(n):
        changed = False
        for i in range(n):
            for k in range(n):
                r = rho[i][k]
                if r is None:
                    continue
                # feasibility target: w_i c_ij <= w_k c_kj for all j in x_i,
                # i.e. w_i <= w_k * rho[i][k]
                cand = w[k] * r
                if cand < w[i]:
                    w[i] = cand
                    changed = True
        if not changed:
            break
    else:
        return None  # still relaxing after n full passes: improving cycle
    top = max(w)
    return tuple(wi / top for wi in w)


def verify_fpo_weights(inst: Instance, x: Allocation,
                       w: Sequence[Fraction]) -> bool:
    """Re-check a weight certificate: each owned chore sits at an argmin."""
    for i in range(inst.n):
        for j in x.bundles[i]:
            mine = w[i] * inst.costs[i][j]
            if any(w[k] * inst.costs[k][j] < mine for k in range(inst.n)):
                return False
    return True


def check_fpo(inst: Instance, x: Allocation) -> CheckReport:
    """Fractional Pareto optimality via absence of an improving exchange cycle.

    A true verdict carries a certifying weight vector; a false verdict carries
    the improving agent cycle together with the transferred chores.
    """
    x.validate_for(inst)
    if inst.n == 1 or inst.m == 0:
        return CheckReport("fpo", True, tuple(Fraction(1) for _ in range(inst.n)))
    cycle = _find_improving_cycle(inst, x)
    if cycle is None:
        w = find_fpo_weights(inst, x)
        assert w is not None and verify_fpo_weights(inst, x, w)
        return CheckReport("fpo", True, w)
    # materialize the chores realizing each arc's minimum ratio
    chores = []
    for t in range(len(cycle)):
        i, k = cycle[t], cycle[(t + 1) % len(cycle)]
        j = min(x.bundles[i],
                key=lambda j: (Fraction(inst.costs[k][j], 1) / inst.costs[i][j], j))
        chores.append(j)
    return CheckReport("fpo", False, {"agents": cycle, "chores": chores})
