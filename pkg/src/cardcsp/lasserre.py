"""Level-k moment relaxation for globally constrained CSPs.

The relaxation is expressed as a conic program over a single symmetric
moment matrix G indexed by (subset, local assignment) pairs, with the empty
index housing the constant vector.  Feasible points of the program are
exactly the moment solutions: G is PSD, compatible entries agree with the
local distributions, marginalization holds, and the cardinality constraint
is enforced on all conditioning events.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .errors import CapacityError, CardCspError, InconsistentSolutionError
from .instance import CspInstance

PROB_FLOOR = 1e-9  # probabilities below this are treated as zero events

MomentIndex = tuple[tuple[int, ...], tuple[int, ...]]  # (sorted subset, assignment)


def build_index_set(n: int, q: int, level: int) -> list[MomentIndex]:
    """All (S, alpha) with |S| <= level, empty index first."""
    indices: list[MomentIndex] = [((), ())]
    for size in range(1, level + 1):
        for subset in combinations(range(n), size):
            for alpha in product(range(q), repeat=size):
                indices.append((subset, alpha))
    return indices


def merge_assignments(s, alpha, t, beta):
    """Merged (subset, assignment) of two compatible indexed events, or None."""
    merged = dict(zip(s, alpha))
    for var, val in zip(t, beta):
        if merged.setdefault(var, val) != val:
            return None
    subset = tuple(sorted(merged))
    return subset, tuple(merged[v] for v in subset)


@dataclass
class MomentSolution:
    """A candidate solution to the level-k relaxation."""

    level: int
    n: int
    q: int
    indices: list[MomentIndex]
    gram: np.ndarray
    objective_value: float = float("nan")

    def __post_init__(self):
        self.pos = {idx: r for r, idx in enumerate(self.indices)}

    def prob(self, subset, assignment) -> float:
        """P(X_S = alpha) read off the canonical gram entry."""
        subset = tuple(subset)
        assignment = tuple(assignment)
        if not subset:
            return float(self.gram[0, 0])
        return float(self.gram[0, self.pos[(subset, assignment)]])

    def entry(self, idx_a: MomentIndex, idx_b: MomentIndex) -> float:
        return float(self.gram[self.pos[idx_a], self.pos[idx_b]])

    def copy(self):
        return MomentSolution(self.level, self.n, self.q, list(self.indices),
                              self.gram.copy(), self.objective_value)

    def to_json(self) -> str:
        tril = [[float(self.gram[r, c]) for c in range(r + 1)]
                for r in range(len(self.indices))]
        doc = {
            "schema": "cardcsp.moment_solution/1",
            "level": self.level,
            "n": self.n,
            "q": self.q,
            "indices": [[list(s), list(a)] for s, a in self.indices],
            "gram_lower": tril,
            "objective_value": self.objective_value,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "MomentSolution":
        doc = json.loads(text)
        indices = [(tuple(s), tuple(a)) for s, a in doc["indices"]]
        d = len(indices)
        gram = np.zeros((d, d))
        for r, row in enumerate(doc["gram_lower"]):
            for c, v in enumerate(row):
                gram[r, c] = gram[c, r] = v
        return cls(doc["level"], doc["n"], doc["q"], indices, gram,
                   doc["objective_value"])


@dataclass
class LocalDistribution:
    subset: tuple[int, ...]
    probabilities: np.ndarray  # row-major over [q]^subset

    def as_matrix(self):
        q = round(len(self.probabilities) ** (1 / max(1, len(self.subset))))
        return self.probabilities.reshape((q,) * len(self.subset))


def local_distribution(solution: MomentSolution, subset, tol=1e-5) -> LocalDistribution:
    """Read mu_S off the canonical gram entries, clip and renormalize."""
    subset = tuple(sorted(subset))
    if len(subset) > solution.level:
        raise CardCspError(f"subset size {len(subset)} exceeds level {solution.level}")
    if not subset:
        return LocalDistribution((), np.array([1.0]))
    probs = np.array([solution.prob(subset, a)
                      for a in product(range(solution.q), repeat=len(subset))])
    drift = max(0.0, -probs.min()) + abs(probs.sum() - 1.0)
    if drift > tol:
        raise InconsistentSolutionError(
            f"inconsistent solution: local distribution on {subset} drifts by {drift:.3g}")
    probs = np.clip(probs, 0.0, 1.0)
    return LocalDistribution(subset, probs / probs.sum())


# -- conic program ---------------------------------------------------------

@dataclass
class ConicProgram:
    """maximize <objective, G> over PSD G subject to sparse affine rows."""

    dim: int
    indices: list[MomentIndex]
    # each row: (list of (r, c, coefficient) on the symmetric matrix, rhs)
    constraints: list[tuple[list[tuple[int, int, float]], float]]
    objective: list[tuple[int, int, float]]
    level: int
    n: int
    q: int
    sense: str = "max"

    def to_json(self) -> str:
        doc = {
            "schema": "cardcsp.program/1",
            "dim": self.dim,
            "level": self.level,
            "n": self.n,
            "q": self.q,
            "sense": self.sense,
            "indices": [[list(s), list(a)] for s, a in self.indices],
            "constraints": [{"triplets": [[r, c, v] for r, c, v in row], "rhs": rhs}
                            for row, rhs in self.constraints],
            "objective": [[r, c, v] for r, c, v in self.objective],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ConicProgram":
        doc = json.loads(text)
        return cls(
            dim=doc["dim"],
            indices=[(tuple(s), tuple(a)) for s, a in doc["indices"]],
            constraints=[([(r, c, v) for r, c, v in row["triplets"]], row["rhs"])
                         for row in doc["constraints"]],
            objective=[(r, c, v) for r, c, v in doc["objective"]],
            level=doc["level"], n=doc["n"], q=doc["q"], sense=doc["sense"],
        )


DEFAULT_INDEX_CAP = 6000


def build_relaxation(instance: CspInstance, level: int = 2,
                     index_cap: int = DEFAULT_INDEX_CAP) -> ConicProgram:
    """Build the level-k relaxation of an instance as a conic program."""
    if level < 2:
        raise CardCspError("level must be at least 2")
    n, q = instance.n, instance.q
    size = sum(
        q ** s * _comb(n, s) for s in range(level + 1))
    if size > index_cap:
        raise CapacityError(
            f"level {level} too high for n={n}: index set size {size} exceeds "
            f"cap {index_cap}")
    indices = build_index_set(n, q, level)
    pos = {idx: r for r, idx in enumerate(indices)}

    def canon(subset, assignment):
        if not subset:
            return (0, 0)
        return (0, pos[(subset, assignment)])

    constraints: list[tuple[list[tuple[int, int, float]], float]] = []

    # constant vector is a unit vector
    constraints.append(([(0, 0, 1.0)], 1.0))

    # consistency: every entry with |S u T| <= level ties to its canonical
    # representative (or vanishes for incompatible assignments)
    for r in range(len(indices)):
        s_set, s_asn = indices[r]
        for c in range(r, len(indices)):
            t_set, t_asn = indices[c]
            union = set(s_set) | set(t_set)
            if len(union) > level:
                continue
            merged = merge_assignments(s_set, s_asn, t_set, t_asn)
            if merged is None:
                constraints.append(([(r, c, 1.0)], 0.0))
                continue
            cr, cc = canon(*merged)
            if (r, c) == (cr, cc):
                continue
            constraints.append(([(r, c, 1.0), (cr, cc, -1.0)], 0.0))

    # marginalization: sum_a P(S u {j} = alpha u a) = P(S = alpha)
    for subset, alpha in indices:
        if len(subset) >= level:
            continue
        base = canon(subset, alpha)
        for j in range(n):
            if j in subset:
                continue
            row = [(base[0], base[1], -1.0)]
            for a in range(q):
                merged = merge_assignments(subset, alpha, (j,), (a,))
                ext = canon(*merged)
                row.append((ext[0], ext[1], 1.0))
            constraints.append((row, 0.0))

    # cardinality on every conditioning event:
    #   sum_j W_j P(x_j = v, X_S = alpha) = c_v P(X_S = alpha)
    w = instance.weights_array
    c_target = instance.cardinality.as_floats()
    for subset, alpha in indices:
        if len(subset) >= level:
            continue
        base = canon(subset, alpha)
        for v in range(q):
            coeffs: dict[tuple[int, int], float] = {}
            for j in range(n):
                if j in subset:
                    if alpha[subset.index(j)] == v:
                        coeffs[base] = coeffs.get(base, 0.0) + w[j]
                else:
                    merged = merge_assignments(subset, alpha, (j,), (v,))
                    ext = canon(*merged)
                    coeffs[ext] = coeffs.get(ext, 0.0) + w[j]
            coeffs[base] = coeffs.get(base, 0.0) - c_target[v]
            row = [(r, c, coef) for (r, c), coef in coeffs.items() if coef != 0.0]
            constraints.append((row, 0.0))

    # objective: E_{S ~ W} sum_beta P_S(beta) mu_S(beta)
    obj: dict[tuple[int, int], float] = {}
    for term in instance.payoffs:
        scope = tuple(sorted(term.scope))
        for beta in product(range(q), repeat=len(scope)):
            local = tuple(beta[scope.index(v)] for v in term.scope)
            val = term.value(local)
            if val == 0.0:
                continue
            rc = canon(scope, beta)
            obj[rc] = obj.get(rc, 0.0) + term.weight * val
    objective = [(r, c, v) for (r, c), v in obj.items()]

    return ConicProgram(dim=len(indices), indices=indices,
                        constraints=constraints, objective=objective,
                        level=level, n=n, q=q, sense=instance.sense)


def _comb(n, k):
    from math import comb
    return comb(n, k)


# -- feasibility checking --------------------------------------------------

@dataclass
class FeasibilityReport:
    psd_violation: float
    consistency_violation: float
    cardinality_violation: float

    def passes(self, tol=1e-6):
        return (self.psd_violation <= tol
                and self.consistency_violation <= tol
                and self.cardinality_violation <= tol)


def check_feasibility(solution: MomentSolution, instance: CspInstance,
                      prob_floor=PROB_FLOOR) -> FeasibilityReport:
    """Report the largest PSD / consistency / cardinality violations."""
    gram = solution.gram
    level = solution.level
    n, q = solution.n, solution.q
    eigs = np.linalg.eigvalsh((gram + gram.T) / 2)
    psd_violation = max(0.0, float(-eigs.min()))

    consistency = abs(gram[0, 0] - 1.0)
    pos = solution.pos
    indices = solution.indices
    for r in range(len(indices)):
        s_set, s_asn = indices[r]
        for c in range(r, len(indices)):
            t_set, t_asn = indices[c]
            union = set(s_set) | set(t_set)
            if len(union) > level:
                continue
            merged = merge_assignments(s_set, s_asn, t_set, t_asn)
            if merged is None:
                consistency = max(consistency, abs(gram[r, c]))
            else:
                canonical = solution.prob(*merged)
                consistency = max(consistency, abs(gram[r, c] - canonical))
    # marginalization
    for subset, alpha in indices:
        if len(subset) >= level:
            continue
        base = solution.prob(subset, alpha)
        for j in range(n):
            if j in subset:
                continue
            total = sum(solution.prob(*merge_assignments(subset, alpha, (j,), (a,)))
                        for a in range(q))
            consistency = max(consistency, abs(total - base))

    # cardinality, in conditional form on events above the probability floor
    w = instance.weights_array
    c_target = instance.cardinality.as_floats()
    cardinality = 0.0
    for subset, alpha in indices:
        if len(subset) >= level:
            continue
        p_event = solution.prob(subset, alpha)
        if p_event <= prob_floor:
            continue
        for v in range(q):
            acc = 0.0
            for j in range(n):
                if j in subset:
                    acc += w[j] * (1.0 if alpha[subset.index(j)] == v else 0.0)
                else:
                    acc += w[j] * (solution.prob(
                        *merge_assignments(subset, alpha, (j,), (v,))) / p_event)
            cardinality = max(cardinality, abs(acc - c_target[v]))

    return FeasibilityReport(psd_violation, consistency, cardinality)


def integral_lift(instance: CspInstance, assignment, level: int = 2) -> MomentSolution:
    """Moment matrix of a deterministic assignment."""
    assignment = tuple(int(a) for a in assignment)
    indices = build_index_set(instance.n, instance.q, level)
    d = len(indices)
    vec = np.array([1.0 if all(assignment[v] == a for v, a in zip(s, al)) else 0.0
                    for s, al in indices])
    gram = np.outer(vec, vec)
    return MomentSolution(level, instance.n, instance.q, indices, gram,
                          objective_value=instance.evaluate(assignment))


def solution_objective(solution: MomentSolution, instance: CspInstance) -> float:
    """Instance objective evaluated on the solution's local distributions."""
    total = 0.0
    for term in instance.payoffs:
        scope = tuple(sorted(term.scope))
        for beta in product(range(instance.q), repeat=len(scope)):
            local = tuple(beta[scope.index(v)] for v in term.scope)
            val = term.value(local)
            if val:
                total += term.weight * val * solution.prob(scope, beta)
    return total


def pair_correlation(solution: MomentSolution, i: int, j: int) -> float:
    """E[x_i x_j] in +-1 convention (value 0 -> +1), from pair marginals."""
    if i == j:
        return 1.0
    a, b = min(i, j), max(i, j)
    mu = local_distribution(solution, (a, b)).probabilities
    return float(mu[0] + mu[3] - mu[1] - mu[2])


def bias(solution: MomentSolution, i: int) -> float:
    """E[x_i] in +-1 convention."""
    mu = local_distribution(solution, (i,)).probabilities
    return float(mu[0] - mu[1])
