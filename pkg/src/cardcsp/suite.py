"""Built-in benchmark suite: small cut instances with brute-force ground
truth, run end to end through the solve/decorrelate/round/repair pipeline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CardCspError
from .instance import CspInstance, generate
from .oracle import brute_force
from .rounding import pipeline


def default_suite() -> list[tuple[str, CspInstance]]:
    """Twelve named instances, all even-order cut problems small enough to
    enumerate exactly."""
    entries = [
        ("cycle4", generate("cycle", 4)),
        ("cycle6", generate("cycle", 6)),
        ("complete4", generate("complete", 4)),
        ("complete6", generate("complete", 6)),
        ("two_cliques8", generate("two_cliques", 8)),
        ("two_cliques10", generate("two_cliques", 10)),
        ("gnp10_a", generate("gnp", 10, seed=7, p=0.5)),
        ("gnp10_b", generate("gnp", 10, seed=11, p=0.35)),
        ("planted10_e01", generate("planted", 10, seed=3, eps=0.01)),
        ("planted10_e05", generate("planted", 10, seed=5, eps=0.05)),
        ("planted12_e10", generate("planted", 12, seed=9, eps=0.1)),
        ("gnp12", generate("gnp", 12, seed=17, p=0.4)),
    ]
    return entries


@dataclass
class BenchRow:
    name: str
    n: int
    optimum: float
    sdp_objective: float
    rounded_value: float
    ratio: float
    balance: float
    achieved_alpha: float
    seed: int

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("name", "n", "optimum", "sdp_objective", "rounded_value",
                 "ratio", "balance", "achieved_alpha", "seed")}


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    min_ratio: float = float("inf")

    def to_json(self):
        return json.dumps({
            "schema": "cardcsp.bench/1",
            "min_ratio": self.min_ratio,
            "rows": [r.as_dict() for r in self.rows],
        }, indent=2)


def run_bench(entries=None, level: int = 2, trials: int = 32, seed: int = 0,
              alpha_target: float = 0.1, solver_config=None) -> BenchReport:
    """Pipeline each instance and compare the repaired value against the
    brute-force bisection optimum."""
    if entries is None:
        entries = default_suite()
    if not entries:
        raise CardCspError("empty benchmark configuration")
    report = BenchReport()
    seeds = np.random.SeedSequence(seed).spawn(len(entries))
    for (name, instance), sub in zip(entries, seeds):
        sub_seed = int(sub.generate_state(1)[0])
        exact = brute_force(instance)
        result = pipeline(instance, level=level, trials=trials, seed=sub_seed,
                          alpha_target=alpha_target, solver_config=solver_config)
        opt = exact.optimum
        ratio = result.best.value / opt if opt > 0 else 1.0
        report.rows.append(BenchRow(
            name=name, n=instance.n, optimum=opt,
            sdp_objective=result.sdp_objective,
            rounded_value=result.best.value, ratio=float(ratio),
            balance=result.best.balance,
            achieved_alpha=result.achieved_alpha, seed=sub_seed))
        report.min_ratio = min(report.min_ratio, float(ratio))
    return report


def entries_from_config(doc: dict) -> list[tuple[str, CspInstance]]:
    """Benchmark config: {"instances": [{"name", "family", "n", "seed",
    "params"}, ...]}."""
    items = doc.get("instances", [])
    if not items:
        raise CardCspError("benchmark config lists no instances")
    entries = []
    for item in items:
        instance = generate(item["family"], item["n"],
                            seed=item.get("seed", 0), **item.get("params", {}))
        entries.append((item.get("name", item["family"]), instance))
    return entries
