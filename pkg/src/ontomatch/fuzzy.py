"""Lightweight string-similarity alignment.

Three scoring methods over encoded concept texts:

* ``simple``    normalized indel similarity, ``2*LCS(a, b) / (|a| + |b|)``;
* ``token_set`` order-insensitive comparison of deduplicated token sets;
* ``weighted``  token_set with per-token weights scaling each character's
  contribution (weight 1.0 everywhere degenerates to token_set exactly).

Scoring every pair is quadratic in the ontology sizes, which is fine for
small ontologies and a deliberate non-goal beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .encoding import EncodedCorpus, tokenize
from .errors import ConfigError, EmptyCorpus, ViewMismatch
from .mapping import Correspondence

_METHODS = ("simple", "token_set", "weighted")


@dataclass(frozen=True)
class FuzzyConfig:
    """Settings for :func:`align_fuzzy`.

    Attributes:
        method: "simple", "token_set", or "weighted".
        threshold: minimum score for a correspondence to be emitted.
        weights: token -> weight map for the weighted method; unlisted
            tokens weigh 1.0.
    """

    method: str = "simple"
    threshold: float = 0.0
    weights: dict[str, float] | None = field(default=None, hash=False)

    def validate(self) -> None:
        if self.method not in _METHODS:
            raise ConfigError(f"unknown fuzzy method: {self.method!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"fuzzy threshold must be in [0, 1], got {self.threshold}")
        if self.weights is not None:
            for token, weight in self.weights.items():
                if weight <= 0:
                    raise ConfigError(f"fuzzy weight for {token!r} must be positive, got {weight}")


def _char_masks(text: str) -> dict[str, int]:
    masks: dict[str, int] = {}
    bit = 1
    for ch in text:
        masks[ch] = masks.get(ch, 0) | bit
        bit <<= 1
    return masks


def _lcs_masked(masks: dict[str, int], length: int, other: str) -> int:
    """Bit-parallel LCS length: zero bits of v mark matched positions."""
    if not length or not other:
        return 0
    full = (1 << length) - 1
    v = full
    for ch in other:
        u = v & masks.get(ch, 0)
        if u:
            v = ((v + u) | (v - u)) & full
    return length - bin(v).count("1")


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence of two strings."""
    return _lcs_masked(_char_masks(a), len(a), b)


def fuzzy_ratio(a: str, b: str) -> float:
    """Normalized indel similarity in [0, 1]; 1.0 when both are empty."""
    if not a and not b:
        return 1.0
    return 2.0 * lcs_length(a, b) / (len(a) + len(b))


def _token_set(text: str) -> list[str]:
    return sorted(set(tokenize(text)))


def _join(*parts: str) -> str:
    return " ".join(p for p in parts if p)


def _token_set_strings(a: str, b: str) -> tuple[str, str, str] | None:
    """The (intersection, intersection+rest_a, intersection+rest_b) strings."""
    tokens_a = _token_set(a)
    tokens_b = _token_set(b)
    if not tokens_a and not tokens_b:
        return None
    set_b = set(tokens_b)
    set_a = set(tokens_a)
    common = " ".join(t for t in tokens_a if t in set_b)
    rest_a = " ".join(t for t in tokens_a if t not in set_b)
    rest_b = " ".join(t for t in tokens_b if t not in set_a)
    return common, _join(common, rest_a), _join(common, rest_b)


def token_set_ratio(a: str, b: str) -> float:
    """Best indel similarity across intersection/remainder recombinations."""
    strings = _token_set_strings(a, b)
    if strings is None:
        return 1.0
    t0, t1, t2 = strings
    return max(fuzzy_ratio(t0, t1), fuzzy_ratio(t0, t2), fuzzy_ratio(t1, t2))


def _char_weights(text: str, weights: dict[str, float]) -> list[float]:
    """Per-character weights: each character inherits its token's weight."""
    out = []
    for token in text.split(" "):
        if out:
            out.append(1.0)  # the separator space
        w = weights.get(token, 1.0)
        out.extend([w] * len(token))
    return out


def _weighted_ratio(a: str, wa: list[float], b: str, wb: list[float]) -> float:
    """Weighted indel similarity; a match credits the smaller char weight."""
    if not a and not b:
        return 1.0
    total = sum(wa) + sum(wb)
    if total == 0:
        return 1.0
    prev = [0.0] * (len(b) + 1)
    for i, ch_a in enumerate(a):
        row = [0.0] * (len(b) + 1)
        for j, ch_b in enumerate(b):
            if ch_a == ch_b:
                row[j + 1] = prev[j] + min(wa[i], wb[j])
            else:
                row[j + 1] = max(prev[j + 1], row[j])
        prev = row
    return 2.0 * prev[len(b)] / total


def weighted_token_set_ratio(a: str, b: str, weights: dict[str, float] | None = None) -> float:
    """Token-set similarity with per-token weights; weights of 1.0 give
    exactly :func:`token_set_ratio`."""
    strings = _token_set_strings(a, b)
    if strings is None:
        return 1.0
    table = weights or {}
    t0, t1, t2 = strings
    w0, w1, w2 = (_char_weights(t, table) for t in (t0, t1, t2))
    return max(
        _weighted_ratio(t0, w0, t1, w1),
        _weighted_ratio(t0, w0, t2, w2),
        _weighted_ratio(t1, w1, t2, w2),
    )


def _scorer(cfg: FuzzyConfig) -> Callable[[str, str], float]:
    if cfg.method == "simple":
        return fuzzy_ratio
    if cfg.method == "token_set":
        return token_set_ratio
    weights = cfg.weights
    return lambda a, b: weighted_token_set_ratio(a, b, weights)


def align_fuzzy(
    source: EncodedCorpus,
    target: EncodedCorpus,
    cfg: FuzzyConfig,
    *,
    all_pairs: bool = False,
) -> list[Correspondence]:
    """Best-match fuzzy alignment between two encoded corpora.

    For each source concept the single best-scoring target is kept when its
    score reaches ``cfg.threshold``; score ties go to the ascending target
    IRI.  With ``all_pairs=True`` every pair at or above the threshold is
    emitted instead.

    Raises:
        ViewMismatch: corpora encoded under different views.
        EmptyCorpus: either corpus has no texts.
        ConfigError: invalid method, threshold, or weights.
    """
    cfg.validate()
    if source.view is not target.view:
        raise ViewMismatch(f"source view {source.view.value} != target view {target.view.value}")
    if not source.texts or not target.texts:
        raise EmptyCorpus("both corpora need at least one text")

    provenance = f"fuzzy:{cfg.method}"
    out: list[Correspondence] = []

    if cfg.method == "simple" and not all_pairs:
        # Reuse each source's character masks across the whole target side.
        for src_iri, src_text in zip(source.iris, source.texts):
            masks = _char_masks(src_text)
            length = len(src_text)
            best_score = -1.0
            best_iri = ""
            for tgt_iri, tgt_text in zip(target.iris, target.texts):
                if not length and not tgt_text:
                    score = 1.0
                else:
                    score = 2.0 * _lcs_masked(masks, length, tgt_text) / (length + len(tgt_text))
                if score > best_score or (score == best_score and tgt_iri < best_iri):
                    best_score, best_iri = score, tgt_iri
            if best_score >= cfg.threshold:
                out.append(Correspondence(src_iri, best_iri, "=", best_score, provenance))
        return out

    score_pair = _scorer(cfg)
    for src_iri, src_text in zip(source.iris, source.texts):
        if all_pairs:
            for tgt_iri, tgt_text in zip(target.iris, target.texts):
                score = score_pair(src_text, tgt_text)
                if score >= cfg.threshold:
                    out.append(Correspondence(src_iri, tgt_iri, "=", score, provenance))
            continue
        best_score = -1.0
        best_iri = ""
        for tgt_iri, tgt_text in zip(target.iris, target.texts):
            score = score_pair(src_text, tgt_text)
            if score > best_score or (score == best_score and tgt_iri < best_iri):
                best_score, best_iri = score, tgt_iri
        if best_score >= cfg.threshold:
            out.append(Correspondence(src_iri, best_iri, "=", best_score, provenance))
    return out
