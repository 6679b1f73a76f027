"""Fit statistics against the human reference and report emission."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .categorize import CATEGORIES
from .corpus import HumanReference, human_reference
from .distribution import Distribution, jsd, jsd_bits

AGGREGATE = "ALL"


def _vector(x) -> np.ndarray:
    if isinstance(x, HumanReference):
        return np.array(x.vector(), dtype=float)
    if isinstance(x, Distribution):
        return x.vector(CATEGORIES)
    if isinstance(x, dict):
        return np.array([x[c] for c in CATEGORIES], dtype=float)
    return np.asarray(x, dtype=float)


def _normalized(v: np.ndarray) -> np.ndarray:
    # published human proportions are rounded and need not sum to exactly 1
    return v / v.sum()


def uniform_baseline() -> np.ndarray:
    return np.full(len(CATEGORIES), 1.0 / len(CATEGORIES))


def jsd_to_human(model, human: HumanReference | None = None) -> float:
    human = human or human_reference()
    return jsd_bits(_normalized(_vector(model)), _normalized(_vector(human)))


def baseline_jsd(human: HumanReference | None = None) -> float:
    return jsd_to_human(uniform_baseline(), human)


def delta(model, human: HumanReference | None = None) -> float:
    """JSD(uniform, human) - JSD(model, human); positive beats the baseline."""
    return baseline_jsd(human) - jsd_to_human(model, human)


def aggregate(per_vignette: Sequence) -> np.ndarray:
    """Mean category distribution over vignettes."""
    rows = np.array([_vector(v) for v in per_vignette], dtype=float)
    return rows.mean(axis=0)


def bootstrap_ci(
    per_vignette: Sequence, reps: int = 1000, level: float = 0.95, seed: int = 0,
    statistic=None,
) -> tuple[float, float]:
    """Percentile bootstrap over vignettes of ``statistic`` (default: delta)."""
    rows = np.array([_vector(v) for v in per_vignette], dtype=float)
    if len(rows) < 2:
        raise ValueError("bootstrap needs at least 2 vignettes")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    statistic = statistic or (lambda props: delta(props))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(rows), size=(reps, len(rows)))
    stats = np.array([statistic(rows[i].mean(axis=0)) for i in idx])
    tail = (1.0 - level) / 2.0
    low, high = np.quantile(stats, [tail, 1.0 - tail])
    return float(low), float(high)


@dataclass
class VariantSummary:
    variant: str
    proportions: dict
    jsd_to_human: float
    delta: float
    ci_low: float | None
    ci_high: float | None
    n_vignettes: int
    per_vignette: dict
    partial_mention: dict
    unclassified: int
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "proportions": {str(c): self.proportions[c] for c in CATEGORIES},
            "jsd_to_human": self.jsd_to_human,
            "delta": self.delta,
            "bootstrap_ci": [self.ci_low, self.ci_high],
            "n_vignettes": self.n_vignettes,
            "per_vignette": {
                vid: {str(c): props[c] for c in CATEGORIES} for vid, props in self.per_vignette.items()
            },
            "partial_mention": self.partial_mention,
            "unclassified": self.unclassified,
            "failures": self.failures,
        }


def summarize(result, reps: int = 1000, seed: int | None = None) -> VariantSummary:
    """Fit statistics for a :class:`~pragqa.variants.VariantResult`."""
    seed = result.config.seed if seed is None else seed
    rows = list(result.per_vignette.values())
    if not rows:
        nan = math.nan
        props = {c: nan for c in CATEGORIES}
        return VariantSummary(result.variant, props, nan, nan, None, None, 0, {}, {}, 0,
                              [f.__dict__ for f in result.failures])
    props = [r.proportions for r in rows]
    agg = aggregate(props)
    ci = bootstrap_ci(props, reps=reps, seed=seed) if len(rows) >= 2 else (None, None)
    return VariantSummary(
        variant=result.variant,
        proportions={c: float(p) for c, p in zip(CATEGORIES, agg)},
        jsd_to_human=jsd_to_human(agg),
        delta=delta(agg),
        ci_low=ci[0],
        ci_high=ci[1],
        n_vignettes=len(rows),
        per_vignette={r.vignette: dict(r.proportions) for r in rows},
        partial_mention={r.vignette: r.partial_mention for r in rows},
        unclassified=sum(r.unclassified for r in rows),
        failures=[dict(f.__dict__) for f in result.failures],
    )


@dataclass
class EvaluationReport:
    summaries: list

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["variant", "vignette", "category", "proportion"])
        for s in self.summaries:
            for vid, props in s.per_vignette.items():
                for c in CATEGORIES:
                    writer.writerow([s.variant, vid, str(c), repr(float(props[c]))])
            for c in CATEGORIES:
                writer.writerow([s.variant, AGGREGATE, str(c), repr(float(s.proportions[c]))])
        return buf.getvalue()

    def summary_json(self) -> str:
        doc = {
            "human_reference": {str(c): p for c, p in human_reference().proportions.items()},
            "baseline_jsd": baseline_jsd(),
            "variants": [s.to_json() for s in self.summaries],
        }
        return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"

    def files(self) -> dict[str, str]:
        return {"report.csv": self.csv_text(), "summary.json": self.summary_json()}


def digest(files: dict[str, str]) -> str:
    """Content digest over file names and bytes, in name order."""
    h = hashlib.sha256()
    for name in sorted(files):
        data = files[name].encode("utf-8")
        h.update(f"{name}\0{len(data)}\0".encode())
        h.update(data)
    return h.hexdigest()


def write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


__all__ = [
    "AGGREGATE", "EvaluationReport", "VariantSummary", "aggregate", "baseline_jsd",
    "bootstrap_ci", "delta", "digest", "jsd", "jsd_to_human", "summarize", "uniform_baseline",
    "write_atomic",
]
