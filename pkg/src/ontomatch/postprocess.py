"""Filtering and label-mapping stages applied after alignment.

* :func:`threshold_filter` drops correspondences below a score floor.
* :func:`cardinality_filter` optionally enforces one-to-one mappings with
  a greedy highest-score-first sweep.
* :func:`map_label` turns free-form generated text into one of a fixed set
  of labels, for reading yes/no answers out of completions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .mapping import Correspondence
from .retrieval import TfidfModel

_CARDINALITIES = ("many_to_many", "one_to_one_greedy")


@dataclass(frozen=True)
class LabelMapperConfig:
    """Label set for :func:`map_label`.

    Attributes:
        labels: candidate labels in priority order; order breaks ties.
        synonyms: label -> extra surface forms that also indicate it.
    """

    labels: tuple[str, ...] = ("yes", "no")
    synonyms: dict[str, tuple[str, ...]] = field(default_factory=dict, hash=False)

    def validate(self) -> None:
        if len(self.labels) < 2:
            raise ConfigError("label mapper needs at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("label mapper labels must be unique")
        for label in self.synonyms:
            if label not in self.labels:
                raise ConfigError(f"synonym map names unknown label {label!r}")


class LabelMapper:
    """Maps generated text onto the closest configured label.

    A case-folded substring hit on a label string itself short-circuits
    with confidence 1.0.  Otherwise every surface form (labels plus
    synonyms) becomes one TF-IDF document and the best cosine against the
    generated text wins; ties fall to the earlier label in the configured
    order.  Text sharing no vocabulary with any surface maps to the first
    label with confidence 0.0.
    """

    def __init__(self, cfg: LabelMapperConfig | None = None):
        self.cfg = cfg or LabelMapperConfig()
        self.cfg.validate()
        self._surfaces: list[tuple[str, str]] = []  # (owning label, surface)
        for label in self.cfg.labels:
            self._surfaces.append((label, label))
            for synonym in self.cfg.synonyms.get(label, ()):
                self._surfaces.append((label, synonym))
        self._model = TfidfModel().fit([surface for _, surface in self._surfaces])
        self._matrix = self._model.transform([surface for _, surface in self._surfaces])

    def map(self, text: str) -> tuple[str, float]:
        folded = text.casefold()
        for label in self.cfg.labels:
            if label.casefold() in folded:
                return label, 1.0
        query = self._model.transform([text])
        sims = np.asarray((query @ self._matrix.T).todense()).ravel()
        best_label = self.cfg.labels[0]
        best_score = 0.0
        for (label, _), sim in zip(self._surfaces, sims):
            if sim > best_score:
                best_label, best_score = label, float(sim)
        return best_label, best_score


def map_label(text: str, cfg: LabelMapperConfig | None = None) -> tuple[str, float]:
    """One-shot form of :class:`LabelMapper` for single calls."""
    return LabelMapper(cfg).map(text)


@dataclass(frozen=True)
class PostprocessConfig:
    """Which post-alignment filters run, and with what settings."""

    threshold: float | None = None
    cardinality: str = "many_to_many"

    def validate(self) -> None:
        if self.threshold is not None and not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"postprocess threshold must be in [0, 1], got {self.threshold}")
        if self.cardinality not in _CARDINALITIES:
            raise ConfigError(f"unknown cardinality policy: {self.cardinality!r}")


def apply_postprocess(
    correspondences: list[Correspondence],
    cfg: PostprocessConfig,
) -> list[Correspondence]:
    """Run the configured threshold and cardinality filters in order."""
    cfg.validate()
    out = correspondences
    if cfg.threshold is not None:
        out = threshold_filter(out, cfg.threshold)
    return cardinality_filter(out, cfg.cardinality)


def threshold_filter(correspondences: list[Correspondence], threshold: float) -> list[Correspondence]:
    """Keep correspondences scoring at least ``threshold``, order preserved."""
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"filter threshold must be in [0, 1], got {threshold}")
    return [c for c in correspondences if c.score >= threshold]


def cardinality_filter(
    correspondences: list[Correspondence],
    policy: str = "one_to_one_greedy",
) -> list[Correspondence]:
    """Constrain how many times each concept may be mapped.

    ``many_to_many`` passes everything through.  ``one_to_one_greedy``
    walks pairs by descending score (ties by source IRI then target IRI)
    and keeps a pair only when both endpoints are still unused, so no IRI
    appears twice on either side.
    """
    if policy not in _CARDINALITIES:
        raise ConfigError(f"unknown cardinality policy: {policy!r}")
    if policy == "many_to_many":
        return list(correspondences)
    ranked = sorted(correspondences, key=lambda c: (-c.score, c.source, c.target))
    used_sources: set[str] = set()
    used_targets: set[str] = set()
    kept = []
    for corr in ranked:
        if corr.source in used_sources or corr.target in used_targets:
            continue
        used_sources.add(corr.source)
        used_targets.add(corr.target)
        kept.append(corr)
    return kept
