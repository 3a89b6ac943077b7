"""LLM-backed alignment: exhaustive pairwise prompting and RAG.

The pairwise aligner asks the model about every (source, target) pair and
reads the answer out of the generated text with a label mapper.  That is
quadratic in ontology size, so a hard pair cap refuses oversized inputs
up front.

The RAG aligner first retrieves a shortlist of candidate targets per
source over plain concept labels, then asks the model only about the
shortlisted pairs using first-position token probabilities, keeping pairs
whose yes-confidence reaches the threshold.  Few-shot prompting prepends
worked examples.  Decided pairs are appended to a JSON-lines journal per
completed batch, so an interrupted run resumes without re-asking.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .encoding import EncodedCorpus, EncodingView, encode, render_concept
from .errors import ConfigError, PairCapExceeded, TemplateError
from .llm import LLMConfig, make_llm_client
from .mapping import Correspondence
from .parsing import Ontology
from .postprocess import LabelMapper, LabelMapperConfig
from .retrieval import RetrievalConfig, align_retrieval, make_embedding_provider

logger = logging.getLogger(__name__)

DEFAULT_PAIR_CAP = 200 * 200

DEFAULT_PREAMBLE = (
    "Classify if the two concepts refer to the same real-world entity. "
    "Answer with yes or no."
)
DEFAULT_QUERY_BLOCK = "### First concept: {src}\n### Second concept: {tgt}\n### Answer: "
DEFAULT_SHOT_BLOCK = "### First concept: {src}\n### Second concept: {tgt}\n### Answer: {answer}\n"


@dataclass(frozen=True)
class Exemplar:
    """A worked example shown before the query in few-shot prompts."""

    source: str
    target: str
    answer: str

    def validate(self) -> None:
        if self.answer not in ("yes", "no"):
            raise ConfigError(f"exemplar answer must be yes or no, got {self.answer!r}")


DEFAULT_EXEMPLARS = (
    Exemplar("car", "automobile", "yes"),
    Exemplar("car", "banana", "no"),
)


@dataclass(frozen=True)
class PromptTemplate:
    """The three building blocks of a decision prompt."""

    preamble: str = DEFAULT_PREAMBLE
    query_block: str = DEFAULT_QUERY_BLOCK
    shot_block: str = DEFAULT_SHOT_BLOCK

    def validate(self) -> None:
        for name, block, placeholders in (
            ("query_block", self.query_block, ("{src}", "{tgt}")),
            ("shot_block", self.shot_block, ("{src}", "{tgt}", "{answer}")),
        ):
            for placeholder in placeholders:
                if block.count(placeholder) != 1:
                    raise TemplateError(f"{name} must contain {placeholder} exactly once")


@dataclass(frozen=True)
class RAGConfig:
    """Settings for :func:`align_rag`.

    Attributes:
        retrieval: shortlist settings (its threshold plays the T_r role).
        llm: endpoint settings for the generator.
        llm_threshold: minimum yes-confidence to keep a pair (T_l).
        shots: worked examples per prompt (0 = plain zero-shot RAG).
        view: how much hierarchy context prompts carry (C, CC, CP).
        exemplars: few-shot examples; ignored when shots == 0.
        exemplars_path: optional JSON file overriding ``exemplars``.
        journal_path: optional JSON-lines checkpoint for resumable runs.
    """

    retrieval: RetrievalConfig = field(default_factory=lambda: RetrievalConfig(top_k=5))
    llm: LLMConfig = field(default_factory=LLMConfig)
    llm_threshold: float = 0.5
    shots: int = 0
    view: EncodingView = EncodingView.C
    exemplars: tuple[Exemplar, ...] = DEFAULT_EXEMPLARS
    exemplars_path: str | None = None
    template: PromptTemplate = field(default_factory=PromptTemplate)
    journal_path: str | None = None

    def validate(self) -> None:
        self.retrieval.validate()
        self.llm.validate()
        self.template.validate()
        if not 0.0 <= self.llm_threshold <= 1.0:
            raise ConfigError(f"llm_threshold must be in [0, 1], got {self.llm_threshold}")
        if self.shots < 0:
            raise ConfigError(f"shots must be >= 0, got {self.shots}")
        for exemplar in self.exemplars:
            exemplar.validate()


def load_exemplars(path: str | Path) -> tuple[Exemplar, ...]:
    """Load few-shot exemplars from a JSON array of source/target/answer."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"exemplar file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise ConfigError(f"exemplar file {path} must hold a JSON array")
    out = []
    for i, item in enumerate(raw):
        try:
            exemplar = Exemplar(str(item["source"]), str(item["target"]), str(item["answer"]))
        except (KeyError, TypeError):
            raise ConfigError(f"exemplar {i} in {path} needs source/target/answer") from None
        exemplar.validate()
        out.append(exemplar)
    if not out:
        raise ConfigError(f"exemplar file {path} is empty")
    return tuple(out)


def build_prompt(
    source_text: str,
    target_text: str,
    shots: tuple[Exemplar, ...] = (),
    template: PromptTemplate | None = None,
) -> str:
    """Assemble preamble, worked examples, and the query into one prompt."""
    template = template or PromptTemplate()
    template.validate()
    parts = [template.preamble, "\n"]
    for shot in shots:
        parts.append(
            template.shot_block.replace("{src}", shot.source)
            .replace("{tgt}", shot.target)
            .replace("{answer}", shot.answer)
        )
    parts.append(template.query_block.replace("{src}", source_text).replace("{tgt}", target_text))
    return "".join(parts)


def _prompt_text(corpus: EncodedCorpus, index: int, view: EncodingView) -> str:
    record = corpus.structured[index]
    return render_concept(record.concept_label, record.related_labels, view)


# --------------------------------------------------------------------------
# Exhaustive pairwise alignment
# --------------------------------------------------------------------------


def align_llm_pairwise(
    source: EncodedCorpus,
    target: EncodedCorpus,
    cfg: LLMConfig,
    *,
    mapper: LabelMapper | None = None,
    template: PromptTemplate | None = None,
    pair_cap: int = DEFAULT_PAIR_CAP,
    client=None,
    seed: int = 0,
) -> list[Correspondence]:
    """Ask the model about every pair; keep the pairs mapped to yes.

    Raises:
        PairCapExceeded: |source| * |target| exceeds ``pair_cap``.
    """
    cfg.validate()
    total = len(source.texts) * len(target.texts)
    if total > pair_cap:
        raise PairCapExceeded(
            f"{len(source.texts)}x{len(target.texts)} = {total} pairs exceed the cap of {pair_cap}"
        )
    if client is None:
        client = make_llm_client(cfg, seed=seed)
    if mapper is None:
        mapper = LabelMapper(LabelMapperConfig())
    template = template or PromptTemplate()
    view = source.view

    pairs = [(i, j) for i in range(len(source.texts)) for j in range(len(target.texts))]
    out: list[Correspondence] = []
    for start in range(0, len(pairs), cfg.batch_size):
        batch = pairs[start:start + cfg.batch_size]
        prompts = [
            build_prompt(_prompt_text(source, i, view), _prompt_text(target, j, view), (), template)
            for i, j in batch
        ]
        for (i, j), generated in zip(batch, client.complete_many(prompts)):
            label, confidence = mapper.map(generated)
            if label == mapper.cfg.labels[0]:
                out.append(
                    Correspondence(source.iris[i], target.iris[j], "=", confidence, "llm:pairwise")
                )
    return out


# --------------------------------------------------------------------------
# Retrieve-then-generate alignment
# --------------------------------------------------------------------------


def _load_journal(path: str) -> dict[tuple[str, str], float]:
    decided: dict[tuple[str, str], float] = {}
    journal = Path(path)
    if not journal.exists():
        return decided
    for line_no, line in enumerate(journal.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            decided[(entry["source"], entry["target"])] = float(entry["confidence"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            logger.warning("skipping malformed journal line %d in %s", line_no, path)
    return decided


def align_rag(
    source: Ontology,
    target: Ontology,
    cfg: RAGConfig,
    *,
    client=None,
    provider=None,
    seed: int = 0,
) -> list[Correspondence]:
    """Retrieve candidate pairs, then keep those the model says yes to.

    Retrieval always runs over plain concept labels; prompts render the
    configured view.  Output is sorted by source concept, then descending
    confidence, then target IRI.
    """
    cfg.validate()
    exemplars = load_exemplars(cfg.exemplars_path) if cfg.exemplars_path else cfg.exemplars
    shots = exemplars[:cfg.shots] if cfg.shots else ()
    if cfg.shots and len(shots) < cfg.shots:
        raise ConfigError(f"{cfg.shots} shots requested but only {len(shots)} exemplars available")

    src_corpus = encode(source, cfg.view, target="rag")
    tgt_corpus = encode(target, cfg.view, target="rag")
    src_index = {iri: i for i, iri in enumerate(src_corpus.iris)}
    tgt_index = {iri: i for i, iri in enumerate(tgt_corpus.iris)}

    if cfg.retrieval.backend == "embedding" and provider is None:
        provider = make_embedding_provider(cfg.retrieval, seed=seed)
    candidates = align_retrieval(src_corpus, tgt_corpus, cfg.retrieval, provider=provider, seed=seed)
    pairs = [(src_index[c.source], tgt_index[c.target]) for c in candidates]

    decided = _load_journal(cfg.journal_path) if cfg.journal_path else {}
    pending = [
        (i, j) for i, j in pairs
        if (src_corpus.iris[i], tgt_corpus.iris[j]) not in decided
    ]

    if pending and client is None:
        client = make_llm_client(cfg.llm, seed=seed)

    journal = Path(cfg.journal_path) if cfg.journal_path else None
    for start in range(0, len(pending), cfg.llm.batch_size):
        batch = pending[start:start + cfg.llm.batch_size]
        items = []
        for i, j in batch:
            prompt = build_prompt(
                _prompt_text(src_corpus, i, cfg.view),
                _prompt_text(tgt_corpus, j, cfg.view),
                shots,
                cfg.template,
            )
            meta = (src_corpus.structured[i].concept_label, tgt_corpus.structured[j].concept_label)
            items.append((prompt, meta))
        decisions = client.decide_many(items)
        lines = []
        for (i, j), decision in zip(batch, decisions):
            key = (src_corpus.iris[i], tgt_corpus.iris[j])
            decided[key] = decision.confidence
            lines.append(json.dumps(
                {"source": key[0], "target": key[1], "confidence": decision.confidence},
                sort_keys=True,
            ))
        if journal is not None and lines:
            with journal.open("a", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
                fh.flush()

    provenance = "rag:fewshot" if cfg.shots else "rag"
    out = []
    for i, j in pairs:
        confidence = decided[(src_corpus.iris[i], tgt_corpus.iris[j])]
        if confidence >= cfg.llm_threshold:
            out.append(Correspondence(
                src_corpus.iris[i], tgt_corpus.iris[j], "=", confidence, provenance,
            ))
    out.sort(key=lambda c: (src_index[c.source], -c.score, c.target))
    return out


def plain_rag_config(cfg: RAGConfig) -> RAGConfig:
    """The same settings with few-shot prompting turned off."""
    return replace(cfg, shots=0)
