"""CSP instances with a global cardinality constraint.

An instance is a collection of weighted payoff terms on small variable
subsets, a probability distribution over the variables (vertex weights) and
a cardinality function prescribing the fraction of variables per domain
value.  Max/Min Bisection, alpha-Max Cut and globally constrained Max 2-Sat
all fit this shape with domain size q = 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product

import numpy as np

from .errors import ParseError, CardCspError

CUT_KINDS = ("maxcut-bisection", "mincut-bisection", "alpha-cut")
KNOWN_KINDS = CUT_KINDS + ("max2sat",)


@dataclass(frozen=True)
class CardinalityFunction:
    """Target fraction of variables per domain value.  Must sum to 1."""

    proportions: tuple[Fraction, ...]

    def __post_init__(self):
        props = tuple(Fraction(p) for p in self.proportions)
        object.__setattr__(self, "proportions", props)
        if sum(props) != 1:
            raise CardCspError(f"cardinality proportions sum to {sum(props)}, not 1")
        if any(p < 0 or p > 1 for p in props):
            raise CardCspError("cardinality proportions must lie in [0, 1]")

    @property
    def q(self):
        return len(self.proportions)

    def as_floats(self):
        return np.array([float(p) for p in self.proportions])


def bisection_cardinality(q=2):
    return CardinalityFunction(tuple(Fraction(1, q) for _ in range(q)))


@dataclass(frozen=True)
class PayoffTerm:
    """A payoff on an ordered variable subset.

    ``table`` is row-major over local assignments in [q]^scope; all values
    lie in [0, 1].  ``weight`` is the term's probability mass under W.
    """

    scope: tuple[int, ...]
    table: tuple[float, ...]
    weight: float
    q: int = 2

    def __post_init__(self):
        if len(set(self.scope)) != len(self.scope):
            raise CardCspError(f"repeated variable in scope {self.scope}")
        if len(self.table) != self.q ** len(self.scope):
            raise CardCspError("payoff table size does not match scope")
        if any(v < -1e-12 or v > 1 + 1e-12 for v in self.table):
            raise CardCspError("payoff values must lie in [0, 1]")
        if self.weight < 0:
            raise CardCspError("payoff weight must be nonnegative")

    def value(self, local_assignment):
        idx = 0
        for a in local_assignment:
            idx = idx * self.q + int(a)
        return self.table[idx]


@dataclass(frozen=True)
class CspInstance:
    """Immutable CSP instance with global cardinality constraint."""

    n: int
    q: int
    payoffs: tuple[PayoffTerm, ...]
    vertex_weights: tuple[float, ...]
    cardinality: CardinalityFunction
    kind: str = "maxcut-bisection"

    def __post_init__(self):
        if not self.payoffs:
            raise CardCspError("no payoff terms")
        total = sum(t.weight for t in self.payoffs)
        if abs(total - 1.0) > 1e-9:
            raise CardCspError(f"payoff weights sum to {total}, not 1")
        if len(self.vertex_weights) != self.n:
            raise CardCspError("vertex weight vector length mismatch")
        if any(w < 0 for w in self.vertex_weights):
            raise CardCspError("vertex weights must be nonnegative")
        if abs(sum(self.vertex_weights) - 1.0) > 1e-9:
            raise CardCspError("vertex weights must sum to 1")
        if self.cardinality.q != self.q:
            raise CardCspError("cardinality domain size mismatch")
        for t in self.payoffs:
            if any(v < 0 or v >= self.n for v in t.scope):
                raise CardCspError(f"scope {t.scope} out of range")

    @property
    def sense(self):
        """'max' or 'min' depending on the problem kind."""
        return "min" if self.kind == "mincut-bisection" else "max"

    @property
    def weights_array(self):
        return np.asarray(self.vertex_weights)

    def evaluate(self, assignment) -> float:
        """Weighted payoff of an assignment in [q]^n."""
        assignment = np.asarray(assignment, dtype=int)
        if assignment.shape != (self.n,):
            raise CardCspError(f"assignment length {assignment.shape} != n={self.n}")
        return float(
            sum(t.weight * t.value(assignment[list(t.scope)]) for t in self.payoffs)
        )

    def balance(self, assignment):
        """Weighted frequency of each domain value under the assignment."""
        assignment = np.asarray(assignment, dtype=int)
        w = self.weights_array
        return np.array([float(w[assignment == a].sum()) for a in range(self.q)])

    def weighted_degrees(self):
        """Per-variable total payoff weight of incident terms."""
        deg = np.zeros(self.n)
        for t in self.payoffs:
            for v in t.scope:
                deg[v] += t.weight
        return deg

    # -- JSON round trip ----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema": "cardcsp.instance/1",
            "n": self.n,
            "q": self.q,
            "kind": self.kind,
            "cardinality": [str(p) for p in self.cardinality.proportions],
            "vertex_weights": [repr(float(w)) for w in self.vertex_weights],
            "payoffs": [
                {
                    "scope": list(t.scope),
                    "table": [repr(float(v)) for v in t.table],
                    "weight": repr(float(t.weight)),
                }
                for t in self.payoffs
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CspInstance":
        doc = json.loads(text)
        q = doc["q"]
        payoffs = tuple(
            PayoffTerm(
                scope=tuple(t["scope"]),
                table=tuple(float(v) for v in t["table"]),
                weight=float(t["weight"]),
                q=q,
            )
            for t in doc["payoffs"]
        )
        return cls(
            n=doc["n"],
            q=q,
            payoffs=payoffs,
            vertex_weights=tuple(float(w) for w in doc["vertex_weights"]),
            cardinality=CardinalityFunction(tuple(Fraction(p) for p in doc["cardinality"])),
            kind=doc["kind"],
        )


# -- payoff tables ---------------------------------------------------------

CUT_TABLE = (0.0, 1.0, 1.0, 0.0)  # row-major over (a, b) in {0,1}^2


def clause_table(sign_i: int, sign_j: int):
    """Max 2-Sat clause table.  Domain value 0 means literal sign +1 (true)."""
    table = []
    for a, b in product((0, 1), (0, 1)):
        lit_i = 1 - 2 * a  # value 0 -> +1, value 1 -> -1
        lit_j = 1 - 2 * b
        satisfied = (lit_i == sign_i) or (lit_j == sign_j)
        table.append(1.0 if satisfied else 0.0)
    return tuple(table)


def cut_instance(n, edges, kind="maxcut-bisection", vertex_weights=None,
                 cardinality=None):
    """Build a cut instance from weighted edges [(u, v, w), ...]."""
    if not edges:
        raise CardCspError("no payoff terms")
    total = sum(w for _, _, w in edges)
    payoffs = tuple(
        PayoffTerm(scope=(min(u, v), max(u, v)), table=CUT_TABLE, weight=w / total)
        for u, v, w in edges
    )
    if vertex_weights is None:
        vertex_weights = tuple(1.0 / n for _ in range(n))
    if cardinality is None:
        cardinality = bisection_cardinality()
    return CspInstance(n=n, q=2, payoffs=payoffs, vertex_weights=tuple(vertex_weights),
                       cardinality=cardinality, kind=kind)


def max2sat_instance(n, clauses, vertex_weights=None, cardinality=None):
    """Build a globally constrained Max 2-Sat instance.

    ``clauses`` is a list of (i, j, sign_i, sign_j, weight).
    """
    if not clauses:
        raise CardCspError("no payoff terms")
    total = sum(c[4] for c in clauses)
    payoffs = []
    for i, j, si, sj, w in clauses:
        if i > j:
            i, j, si, sj = j, i, sj, si
        payoffs.append(PayoffTerm(scope=(i, j), table=clause_table(si, sj),
                                  weight=w / total))
    if vertex_weights is None:
        vertex_weights = tuple(1.0 / n for _ in range(n))
    if cardinality is None:
        cardinality = bisection_cardinality()
    return CspInstance(n=n, q=2, payoffs=tuple(payoffs),
                       vertex_weights=tuple(vertex_weights),
                       cardinality=cardinality, kind="max2sat")


# -- edge-list loader ------------------------------------------------------

def load_edge_list(text: str) -> CspInstance:
    """Parse an edge-list document.

    Format::

        kind maxcut-bisection            # optional header
        vertex 0 0.25                    # optional vertex-weight lines
        0 1 [weight]                     # one edge per line

    For ``kind max2sat`` the edge lines hold nonzero DIMACS-style literals
    (variable ids are |lit| - 1, the sign is the literal sign).
    ``kind alpha-cut <alpha>`` sets the cardinality to (alpha, 1 - alpha).
    """
    kind = "maxcut-bisection"
    alpha = None
    edges = []
    vertex_weights = {}
    max_vertex = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "kind":
            if len(parts) < 2 or parts[1] not in KNOWN_KINDS:
                raise ParseError(f"unknown problem kind {parts[1:]}", lineno)
            kind = parts[1]
            if kind == "alpha-cut":
                if len(parts) != 3:
                    raise ParseError("alpha-cut requires a fraction", lineno)
                try:
                    alpha = Fraction(parts[2])
                except ValueError:
                    raise ParseError(f"bad alpha {parts[2]!r}", lineno) from None
                if not 0 <= alpha <= 1:
                    raise ParseError("alpha must be in [0, 1]", lineno)
            continue
        if parts[0] == "vertex":
            try:
                v, w = int(parts[1]), float(parts[2])
            except (IndexError, ValueError):
                raise ParseError(f"malformed vertex line {line!r}", lineno) from None
            vertex_weights[v] = w
            max_vertex = max(max_vertex, v)
            continue
        if len(parts) not in (2, 3):
            raise ParseError(f"malformed edge line {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(f"malformed edge line {line!r}", lineno) from None
        if w < 0:
            raise ParseError("negative edge weight", lineno)
        if kind == "max2sat":
            if u == 0 or v == 0:
                raise ParseError("literal 0 is not allowed", lineno)
            si, sj = (1 if u > 0 else -1), (1 if v > 0 else -1)
            i, j = abs(u) - 1, abs(v) - 1
            if i == j:
                raise ParseError("clause on a single variable", lineno)
            edges.append((i, j, si, sj, w))
            max_vertex = max(max_vertex, i, j)
        else:
            if u < 0 or v < 0:
                raise ParseError("vertex ids must be nonnegative", lineno)
            if u == v:
                raise ParseError(f"self-loop {u}-{v} rejected for cut problems", lineno)
            edges.append((u, v, w))
            max_vertex = max(max_vertex, u, v)
    if not edges:
        raise ParseError("no payoff terms")
    n = max_vertex + 1
    weights = None
    if vertex_weights:
        weights = [0.0] * n
        for v, w in vertex_weights.items():
            weights[v] = w
        total = sum(weights)
        if total <= 0:
            raise ParseError("vertex weights must have positive total")
        weights = tuple(w / total for w in weights)
    cardinality = None
    if kind == "alpha-cut":
        cardinality = CardinalityFunction((alpha, 1 - alpha))
    if kind == "max2sat":
        return max2sat_instance(n, edges, vertex_weights=weights)
    return cut_instance(n, edges, kind=kind, vertex_weights=weights,
                        cardinality=cardinality)


# -- generators ------------------------------------------------------------

def generate(family: str, n: int, seed: int = 0, **params) -> CspInstance:
    """Deterministic instance generators: cycle, complete, gnp, two_cliques,
    planted (near-bisectable with parameter eps)."""
    if n < 2:
        raise CardCspError("n must be at least 2")
    if n % 2 != 0:
        raise CardCspError("bisection instances require an even number of vertices")
    if family == "cycle":
        edges = [(i, (i + 1) % n, 1.0) for i in range(n)]
    elif family == "complete":
        edges = [(i, j, 1.0) for i, j in combinations(range(n), 2)]
    elif family == "gnp":
        p = params.get("p", 0.5)
        if not 0 < p <= 1:
            raise CardCspError("gnp requires edge probability in (0, 1]")
        rng = np.random.default_rng(seed)
        edges = [(i, j, 1.0) for i, j in combinations(range(n), 2)
                 if rng.random() < p]
        if not edges:
            edges = [(0, 1, 1.0)]
    elif family == "two_cliques":
        # two disjoint copies of K_{n/2}: the classic Max Cut -> Max Bisection
        # reduction shape
        half = n // 2
        edges = [(i, j, 1.0) for i, j in combinations(range(half), 2)]
        edges += [(half + i, half + j, 1.0) for i, j in combinations(range(half), 2)]
        if not edges:
            edges = [(0, 1, 1.0)]
    elif family == "planted":
        eps = params.get("eps", 0.05)
        if not 0 <= eps < 1:
            raise CardCspError("planted requires eps in [0, 1)")
        rng = np.random.default_rng(seed)
        half = n // 2
        crossing = [(i, half + j) for i in range(half) for j in range(half)]
        inside = [(i, j) for i, j in combinations(range(half), 2)]
        inside += [(half + i, half + j) for i, j in combinations(range(half), 2)]
        m_cross = max(1, n)
        m_in = len(inside)
        cross_sel = [crossing[t] for t in
                     rng.choice(len(crossing), size=min(m_cross, len(crossing)),
                                replace=False)]
        in_sel = [inside[t] for t in
                  rng.choice(m_in, size=min(max(1, m_in // 2), m_in),
                             replace=False)] if eps > 0 else []
        w_cross = (1.0 - eps) / len(cross_sel)
        edges = [(u, v, w_cross) for u, v in cross_sel]
        if in_sel:
            w_in = eps / len(in_sel)
            edges += [(u, v, w_in) for u, v in in_sel]
    else:
        raise CardCspError(f"unknown family {family!r}")
    return cut_instance(n, edges)
