from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

# ---------- Records ----------

@dataclass(frozen=True)
class MeasurementRecord:
    setting: float       # analysis phase (rad) or coupling duration (s)
    repetitions: int
    up_counts: int
    seed: int
    index: int = 0       # position of the setting in its grid, part of the stream key
    expectation: Optional[float] = None   # exact value the counts were drawn from
    label: str = ""

    def __post_init__(self):
        if self.repetitions <= 0:
            raise ValueError(f"repetitions must be > 0, got {self.repetitions}")
        if not 0 <= self.up_counts <= self.repetitions:
            raise ValueError(f"up_counts {self.up_counts} outside [0, {self.repetitions}]")

    @property
    def p_up(self) -> float:
        return self.up_counts / self.repetitions

    @property
    def estimate(self) -> float:
        """σ-estimate 2·P(↑) − 1."""
        return 2.0 * self.up_counts / self.repetitions - 1.0


# ---------- Streams ----------

class ProjectionSampler:
    """
    Deterministic binomial draws of projective σ_z outcomes.

    Every setting index gets its own counter-based Philox stream keyed by
    (seed, index); repetition k is the k-th draw of that stream, so a
    record never depends on how many other settings were sampled or in
    which order.
    """
    def __init__(self, seed: int):
        if seed is None or seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
        self.seed = int(seed)

    def stream(self, index: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, int(index)])))

    def draw(self, expectation: float, reps: int, index: int = 0, setting: float = 0.0,
             label: str = "") -> MeasurementRecord:
        if not -1.0 - 1e-12 <= expectation <= 1.0 + 1e-12:
            raise ValueError(f"expectation {expectation} outside [-1, 1]")
        p_up = min(1.0, max(0.0, 0.5 * (1.0 + expectation)))
        counts = int(self.stream(index).binomial(reps, p_up))
        return MeasurementRecord(
            setting=float(setting),
            repetitions=int(reps),
            up_counts=counts,
            seed=self.seed,
            index=int(index),
            expectation=float(expectation),
            label=label,
        )

    def draw_many(self, expectations: Sequence[float], reps: int, settings: Iterable[float],
                  offset: int = 0, label: str = "") -> List[MeasurementRecord]:
        return [
            self.draw(e, reps, index=offset + i, setting=s, label=label)
            for i, (e, s) in enumerate(zip(expectations, settings))
        ]


def sample_projective(expectation: float, reps: int, seed: int, index: int = 0,
                      setting: float = 0.0) -> MeasurementRecord:
    return ProjectionSampler(seed).draw(expectation, reps, index=index, setting=setting)
