"""Finite-count coincidence statistics for the CHSH experiment.

Noise is a single visibility parameter (Werner mixing with white noise). For
every setting pair the four coincidence counts are one multinomial draw; S and
its standard error follow from the empirical correlators.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import qstate as qs
from .bell import SIGNS, MeasurementSettings, chsh_settings

# Outcome order within a setting pair: (+,+), (+,-), (-,+), (-,-).
OUTCOME_PRODUCTS = np.array([1, -1, -1, 1])
CSV_COLUMNS = ("x", "y", "n_pp", "n_pm", "n_mp", "n_mm")


class DegenerateTableError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    visibility: float

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must be in [0, 1], got {self.visibility}")

    def apply(self, state_or_rho) -> np.ndarray:
        """V |psi><psi| + (1 - V) I/4."""
        rho = as_density(state_or_rho)
        return self.visibility * rho + (1 - self.visibility) * np.eye(4) / 4


def as_density(state_or_rho) -> np.ndarray:
    a = np.asarray(state_or_rho, dtype=complex)
    if a.shape == (4,):
        return qs.density(a)
    if a.shape == (4, 4):
        return a
    raise ValueError(f"expected a 4-vector or 4x4 density matrix, got {a.shape}")


def outcome_distribution(state_or_rho, a, b) -> np.ndarray:
    """Born-rule probabilities of (+,+), (+,-), (-,+), (-,-) for a (x) b."""
    rho = as_density(state_or_rho)
    proj_a = [(np.eye(2) + a) / 2, (np.eye(2) - a) / 2]
    proj_b = [(np.eye(2) + b) / 2, (np.eye(2) - b) / 2]
    p = np.array([np.trace(rho @ np.kron(pa, pb)).real for pa in proj_a for pb in proj_b])
    # roundoff can leave -1e-17 on exact zeros
    return np.clip(p, 0.0, None)


def setting_probabilities(state_or_rho, settings: MeasurementSettings | None = None) -> np.ndarray:
    """Array (2, 2, 4) of outcome probabilities for every setting pair."""
    settings = settings or chsh_settings()
    return np.array(
        [[outcome_distribution(state_or_rho, a, b) for b in settings.bob] for a in settings.alice]
    )


def correlator(p) -> float:
    return float(np.dot(OUTCOME_PRODUCTS, p))


def chsh_from_probabilities(probs) -> float:
    e = np.tensordot(np.asarray(probs), OUTCOME_PRODUCTS, axes=([2], [0]))
    return float(np.sum(SIGNS * e))


@dataclass(frozen=True, eq=False)
class CountTable:
    counts: np.ndarray  # (2, 2, 4) integers
    shots_per_setting: int

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (2, 2, 4) or np.any(c < 0):
            raise ValueError("counts must be a nonnegative (2, 2, 4) integer array")
        if np.any(c.sum(axis=2) != self.shots_per_setting):
            raise ValueError("every setting pair must sum to shots_per_setting")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def __eq__(self, other):
        if not isinstance(other, CountTable):
            return NotImplemented
        return (self.shots_per_setting == other.shots_per_setting
                and np.array_equal(self.counts, other.counts))

    __hash__ = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for x in (0, 1):
            for y in (0, 1):
                w.writerow([x, y, *self.counts[x, y].tolist()])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CountTable":
        rows = list(csv.DictReader(io.StringIO(text)))
        counts = np.zeros((2, 2, 4), dtype=np.int64)
        seen = set()
        for r in rows:
            x, y = int(r["x"]), int(r["y"])
            counts[x, y] = [int(r[k]) for k in CSV_COLUMNS[2:]]
            seen.add((x, y))
        if seen != {(0, 0), (0, 1), (1, 0), (1, 1)}:
            raise ValueError("CSV must hold exactly one row per setting pair")
        totals = counts.sum(axis=2)
        if np.any(totals != totals[0, 0]):
            raise ValueError("setting pairs have different shot totals")
        return cls(counts, int(totals[0, 0]))


def sample_counts(probs, shots_per_setting: int, seed) -> CountTable:
    """One multinomial draw per setting pair; reproducible for a fixed seed."""
    if shots_per_setting < 1:
        raise ValueError("shots_per_setting must be at least 1")
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (2, 2, 4):
        raise ValueError("probabilities must have shape (2, 2, 4)")
    rng = np.random.default_rng(seed)
    p = probs / probs.sum(axis=2, keepdims=True)
    counts = np.array([[rng.multinomial(shots_per_setting, p[x, y]) for y in (0, 1)] for x in (0, 1)])
    return CountTable(counts, shots_per_setting)


@dataclass(frozen=True)
class ChshEstimate:
    s: float
    stderr: float


def empirical_correlators(table: CountTable) -> np.ndarray:
    totals = table.counts.sum(axis=2)
    if np.any(totals == 0):
        x, y = np.argwhere(totals == 0)[0]
        raise DegenerateTableError(f"setting pair ({x}, {y}) has no counts")
    return table.counts @ OUTCOME_PRODUCTS / totals


def estimate_s(table: CountTable) -> ChshEstimate:
    e = empirical_correlators(table)
    s = float(np.sum(SIGNS * e))
    var = np.sum((1.0 - e**2) / table.shots_per_setting)
    return ChshEstimate(s, float(np.sqrt(max(var, 0.0))))


def bootstrap_stderr(table: CountTable, n_boot: int = 1000, seed=0) -> float:
    """Parametric bootstrap of S by resampling each setting from its frequencies."""
    rng = np.random.default_rng(seed)
    freq = table.counts / table.shots_per_setting
    n = table.shots_per_setting
    draws = rng.multinomial(n, freq.reshape(4, 4), size=(n_boot, 4)) / n
    e = draws @ OUTCOME_PRODUCTS
    s = e @ SIGNS.reshape(4)
    return float(np.std(s, ddof=1))


def repetition_seed(seed: int, rep: int) -> np.random.SeedSequence:
    """Seed for repetition ``rep``; independent of how repetitions are scheduled."""
    return np.random.SeedSequence([int(seed), int(rep)])


@dataclass(frozen=True)
class MonteCarloRun:
    estimates: tuple  # of ChshEstimate

    @property
    def s(self) -> np.ndarray:
        return np.array([e.s for e in self.estimates])

    @property
    def stderr(self) -> np.ndarray:
        return np.array([e.stderr for e in self.estimates])

    @property
    def mean(self) -> float:
        return float(np.mean(self.s))

    @property
    def std(self) -> float:
        return float(np.std(self.s, ddof=1)) if len(self.estimates) > 1 else 0.0

    @property
    def violation_fraction(self) -> float:
        return float(np.mean(self.s > 2.0))


def run_repetitions(probs, shots_per_setting: int, repetitions: int, seed: int) -> MonteCarloRun:
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    return MonteCarloRun(
        tuple(
            estimate_s(sample_counts(probs, shots_per_setting, repetition_seed(seed, r)))
            for r in range(repetitions)
        )
    )


def visibility_for(target_s: float, ideal_s: float = 2 * np.sqrt(2)) -> float:
    """Werner visibility mapping the ideal S onto ``target_s`` (S scales with V)."""
    return target_s / ideal_s


def shots_for_stderr(probs, target_stderr: float) -> int:
    """Smallest shots per setting whose predicted stderr is at most the target."""
    e = np.tensordot(np.asarray(probs), OUTCOME_PRODUCTS, axes=([2], [0]))
    return int(np.ceil(np.sum(1.0 - e**2) / target_stderr**2))
