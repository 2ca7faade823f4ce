"""Data generation and the replication study.

Every replicate draws from its own random stream keyed by
``(seed, scenario label, replicate index)``, so results do not depend on
scenario order or on how replicates are spread over worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .exceptions import InfeasibleScenario
from .tables import Direction, DualRecordTable

CSV_HEADER = ("label", "n_true", "phi", "direction", "mean", "rmse", "ci_lo", "ci_hi", "failures")

CHUNK = 250


class Probs(NamedTuple):
    p: float
    c: float


def derive_probs(p1dot: float, pdot1: float, phi: float) -> Probs:
    """Solve pdot1 = p1dot * c + (1 - p1dot) * p with c = phi * p."""
    if not (0.0 < p1dot < 1.0 and 0.0 < pdot1 < 1.0):
        raise InfeasibleScenario(f"p1dot={p1dot}, pdot1={pdot1} must lie in (0, 1)")
    if not phi > 0:
        raise InfeasibleScenario(f"phi must be positive, got {phi}")
    p = pdot1 / (1.0 - p1dot + phi * p1dot)
    c = phi * p
    if p >= 1.0 or c >= 1.0:
        raise InfeasibleScenario(f"derived p={p:.6g}, c={c:.6g}: not a probability")
    return Probs(p, c)


def _cell_probs(p1dot, c, p):
    cells = [p1dot * c, p1dot * (1.0 - c), (1.0 - p1dot) * p]
    # the unobserved cell absorbs rounding
    cells.append(max(0.0, 1.0 - sum(cells)))
    return cells


def simulate_table(n_true: int, p1dot: float, c: float, p: float,
                   rng: np.random.Generator) -> DualRecordTable:
    """Draw one table: list 1 w.p. p1dot, then list 2 w.p. c if caught, p if not."""
    x11, x10, x01, _ = rng.multinomial(n_true, _cell_probs(p1dot, c, p))
    return DualRecordTable(int(x11), int(x10), int(x01))


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def replicate_rng(seed: int, label: str, index: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(label_key(label), index))
    return np.random.Generator(np.random.PCG64(ss))


def simulate_tables(n_true: int, p1dot: float, c: float, p: float, reps: int,
                    seed: int, label: str, start: int = 0):
    """Cell arrays ``(x11, x10, x01)`` for replicates ``start .. start + reps - 1``."""
    probs = _cell_probs(p1dot, c, p)
    out = np.empty((reps, 3), dtype=np.int64)
    for i in range(reps):
        out[i] = replicate_rng(seed, label, start + i).multinomial(n_true, probs)[:3]
    return out[:, 0], out[:, 1], out[:, 2]


@dataclass(frozen=True)
class Scenario:
    label: str
    n_true: int
    p1dot: float
    pdot1: float
    phi: float
    direction: Direction = Direction.UNKNOWN

    def probs(self) -> Probs:
        return derive_probs(self.p1dot, self.pdot1, self.phi)


@dataclass(frozen=True)
class StudyConfig:
    scenarios: tuple[Scenario, ...]
    reps: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise ValueError("scenario labels must be unique")


@dataclass(frozen=True)
class ScenarioSummary:
    label: str
    n_true: int
    phi: float
    direction: Direction
    mean: float
    rmse: float
    ci_lo: float
    ci_hi: float
    failures: int
    estimates: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def bias(self) -> float:
        return self.mean - self.n_true

    def csv_row(self) -> list[str]:
        return [self.label, str(self.n_true), repr(self.phi), self.direction.value,
                repr(self.mean), repr(self.rmse), repr(self.ci_lo), repr(self.ci_hi),
                str(self.failures)]


class StudySummary(list):
    """List of :class:`ScenarioSummary` rows with lookup by label."""

    def by_label(self, label: str) -> ScenarioSummary:
        for row in self:
            if row.label == label:
                return row
        raise KeyError(label)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self:
            w.writerow(row.csv_row())
        return buf.getvalue()


def summarize(scenario: Scenario, estimates: np.ndarray, failures: int) -> ScenarioSummary:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        nan = math.nan
        return ScenarioSummary(scenario.label, scenario.n_true, scenario.phi, scenario.direction,
                               nan, nan, nan, nan, failures, est)
    lo, hi = np.percentile(est, [2.5, 97.5])
    return ScenarioSummary(
        scenario.label, scenario.n_true, scenario.phi, scenario.direction,
        float(np.mean(est)), float(np.sqrt(np.mean((est - scenario.n_true) ** 2))),
        float(lo), float(hi), failures, est)


def _run_chunk(args):
    scenario, seed, start, stop = args
    p, c = scenario.probs()
    cells = simulate_tables(scenario.n_true, scenario.p1dot, c, p, stop - start,
                            seed=seed, label=scenario.label, start=start)
    point, _, status = _kernels.estimate_batch(*cells, scenario.direction.code)
    return np.where(status == _kernels.OK, point, -1)


def run_scenario(scenario: Scenario, reps: int, seed: int) -> ScenarioSummary:
    return run_study(StudyConfig((scenario,), reps=reps, seed=seed))[0]


def run_study(config: StudyConfig, workers: int = 1) -> StudySummary:
    """Simulate, estimate and aggregate every scenario.

    Infeasible scenarios and failed replicates never abort the study; they
    surface as ``failures`` (all replicates, for an infeasible scenario).
    """
    feasible = []
    for s in config.scenarios:
        try:
            s.probs()
            feasible.append(s)
        except InfeasibleScenario:
            pass
    tasks = [(s, config.seed, start, min(start + CHUNK, config.reps))
             for s in feasible for start in range(0, config.reps, CHUNK)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]

    by_label: dict[str, list[np.ndarray]] = {}
    for (s, *_), part in zip(tasks, parts):
        by_label.setdefault(s.label, []).append(part)

    out = StudySummary()
    for s in config.scenarios:
        if s.label not in by_label:
            out.append(summarize(s, np.empty(0), config.reps))
            continue
        pts = np.concatenate(by_label[s.label])
        good = pts[pts >= 0]
        out.append(summarize(s, good, int(pts.size - good.size)))
    return out


# -- built-in and file configs ----------------------------------------------

CAPTURE_PAIRS = ((0.50, 0.65), (0.60, 0.70), (0.80, 0.70), (0.70, 0.55), (0.55, 0.75), (0.70, 0.50))
PRONE_PHI = (1.25, 1.50)
AVERSE_PHI = (0.60, 0.80)
SIZES = (200, 500)


def scenario_label(prefix: str, k: int, phi: float, n_true: int) -> str:
    return f"{prefix}{k}-phi{phi:g}-N{n_true}"


def builtin_scenarios() -> tuple[Scenario, ...]:
    """The twelve populations at both phi values and both sizes (48 scenarios)."""
    out = []
    for prefix, phis, direction in (("P", PRONE_PHI, Direction.PRONE),
                                    ("A", AVERSE_PHI, Direction.AVERSE)):
        for n_true in SIZES:
            for phi in phis:
                for k, (p1, pd1) in enumerate(CAPTURE_PAIRS, start=1):
                    out.append(Scenario(scenario_label(prefix, k, phi, n_true),
                                        n_true, p1, pd1, phi, direction))
    return tuple(out)


class ConfigError(ValueError):
    pass


SCENARIO_KEYS = ("label", "n_true", "p1dot", "pdot1", "phi", "direction")


def scenarios_from_json(obj) -> tuple[Scenario, ...]:
    if not isinstance(obj, list) or not obj:
        raise ConfigError("config must be a non-empty JSON list of scenarios")
    out = []
    for i, item in enumerate(obj):
        if not isinstance(item, dict):
            raise ConfigError(f"scenario {i}: expected an object")
        missing = [k for k in SCENARIO_KEYS if k not in item]
        if missing:
            raise ConfigError(f"scenario {i}: missing {', '.join(missing)}")
        try:
            n_true = int(item["n_true"])
            if n_true < 1 or n_true != item["n_true"]:
                raise ValueError("n_true must be a positive integer")
            out.append(Scenario(str(item["label"]), n_true, float(item["p1dot"]),
                                float(item["pdot1"]), float(item["phi"]),
                                Direction.parse(item["direction"])))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"scenario {i}: {exc}") from None
    labels = [s.label for s in out]
    if len(set(labels)) != len(labels):
        raise ConfigError("scenario labels must be unique")
    return tuple(out)


def scenarios_to_json(scenarios: Iterable[Scenario]) -> str:
    return json.dumps([{"label": s.label, "n_true": s.n_true, "p1dot": s.p1dot,
                        "pdot1": s.pdot1, "phi": s.phi, "direction": s.direction.value}
                       for s in scenarios], indent=2)


def load_scenarios(source: str) -> tuple[Scenario, ...]:
    """Read scenarios from a JSON file, or the built-in set for ``paper-tables``."""
    if source == "paper-tables":
        return builtin_scenarios()
    try:
        obj = json.loads(Path(source).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {source}: {exc}") from None
    return scenarios_from_json(obj)


def expected_table_counts(scenario: Scenario) -> tuple[float, float, float]:
    """Expected (x11, x10, x01) under the scenario; real-valued."""
    p, c = scenario.probs()
    n = scenario.n_true
    return (n * scenario.p1dot * c, n * scenario.p1dot * (1 - c), n * (1 - scenario.p1dot) * p)
