"""End-to-end alignment runs: parse, encode, align, filter, score, export.

:class:`PipelineConfig` mirrors the JSON config-file schema one to one;
:func:`run_pipeline` executes it and writes the alignment plus a run
report (config echo, counts, metrics, per-stage seconds) next to the
output file.  With mock endpoints and a fixed seed a run is fully
deterministic: repeated runs produce byte-identical alignment files.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .encoding import EncodingView, encode
from .errors import ConfigError
from .evaluation import Metrics, evaluate
from .export import AlignmentDocument, atomic_write, load_json_alignment, write_alignment
from .fuzzy import FuzzyConfig, align_fuzzy
from .llm import LLMConfig
from .mapping import Correspondence
from .parsing import parse_ontology, parse_reference_alignment
from .postprocess import PostprocessConfig, apply_postprocess
from .rag import DEFAULT_PAIR_CAP, Exemplar, PromptTemplate, RAGConfig, align_llm_pairwise, align_rag
from .retrieval import RetrievalConfig, align_retrieval

_METHODS = ("fuzzy", "retrieval", "llm", "rag", "fewshot_rag")
_DEFAULT_FEWSHOT = 2


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one alignment run needs.

    The JSON config file uses exactly these field names; nested sections
    (fuzzy, retrieval, rag, postprocess) map to the corresponding config
    dataclasses.  CLI flags override individual values.
    """

    source_path: str = ""
    target_path: str = ""
    reference_path: str | None = None
    method: str = "fuzzy"
    view: str = "C"
    fuzzy: FuzzyConfig = field(default_factory=FuzzyConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    rag: RAGConfig = field(default_factory=RAGConfig)
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)
    output_path: str = "alignment.xml"
    output_format: str = "xml"
    pair_cap: int = DEFAULT_PAIR_CAP
    seed: int = 0

    def validate(self) -> None:
        if not self.source_path:
            raise ConfigError("source_path is required")
        if not self.target_path:
            raise ConfigError("target_path is required")
        if self.method not in _METHODS:
            raise ConfigError(f"unknown method: {self.method!r}")
        EncodingView.parse(self.view)
        if self.output_format not in ("xml", "json"):
            raise ConfigError(f"unknown output format: {self.output_format!r}")
        if self.pair_cap < 1:
            raise ConfigError(f"pair_cap must be positive, got {self.pair_cap}")
        self.fuzzy.validate()
        self.retrieval.validate()
        self.rag.validate()
        self.postprocess.validate()

    # -- config file plumbing -------------------------------------------

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        """Build a config from the JSON schema, rejecting unknown keys."""
        data = dict(data)
        sections = {
            "fuzzy": _section(FuzzyConfig, data.pop("fuzzy", None), "fuzzy"),
            "retrieval": _section(RetrievalConfig, data.pop("retrieval", None), "retrieval"),
            "rag": _rag_section(data.pop("rag", None)),
            "postprocess": _section(PostprocessConfig, data.pop("postprocess", None), "postprocess"),
        }
        known = {f.name for f in dataclasses.fields(cls)} - set(sections)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key {sorted(unknown)[0]!r} at the top level")
        return cls(**data, **sections)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["rag"]["view"] = self.rag.view.value
        out["rag"]["exemplars"] = [dataclasses.asdict(e) for e in self.rag.exemplars]
        return out


def _section(section_cls, data: dict | None, name: str):
    if data is None:
        return section_cls()
    if not isinstance(data, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    allowed = {f.name for f in dataclasses.fields(section_cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r} in section {name!r}")
    return section_cls(**data)


def _rag_section(data: dict | None) -> RAGConfig:
    if data is None:
        return RAGConfig()
    if not isinstance(data, dict):
        raise ConfigError("config section 'rag' must be an object")
    data = dict(data)
    kwargs: dict[str, Any] = {}
    kwargs["retrieval"] = _section(RetrievalConfig, data.pop("retrieval", None), "rag.retrieval")
    kwargs["llm"] = _section(LLMConfig, data.pop("llm", None), "rag.llm")
    kwargs["template"] = _section(PromptTemplate, data.pop("template", None), "rag.template")
    if "view" in data:
        kwargs["view"] = EncodingView.parse(data.pop("view"))
    if "exemplars" in data:
        raw = data.pop("exemplars")
        if not isinstance(raw, list):
            raise ConfigError("rag.exemplars must be an array")
        exemplars = []
        for i, item in enumerate(raw):
            try:
                exemplars.append(Exemplar(str(item["source"]), str(item["target"]), str(item["answer"])))
            except (KeyError, TypeError):
                raise ConfigError(f"rag.exemplars[{i}] needs source/target/answer") from None
        kwargs["exemplars"] = tuple(exemplars)
    allowed = {f.name for f in dataclasses.fields(RAGConfig)} - set(kwargs)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r} in section 'rag'")
    return RAGConfig(**data, **kwargs)


@dataclass(frozen=True)
class RunReport:
    """What happened during one pipeline run."""

    method: str
    view: str
    correspondences: int
    seconds: dict[str, float]
    output_path: str
    metrics: Metrics | None = None
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "method": self.method,
            "view": self.view,
            "correspondences": self.correspondences,
            "seconds": self.seconds,
            "output_path": self.output_path,
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "config": self.config,
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def report_path_for(output_path: str | Path) -> Path:
    return Path(str(output_path) + ".report.json")


class _StageClock:
    """Monotonic per-stage timing, reported in seconds at one decimal."""

    def __init__(self) -> None:
        self.seconds: dict[str, float] = {}
        self._start = time.monotonic()

    def time(self, stage: str):
        clock = self

        class _Span:
            def __enter__(self):
                self.begin = time.monotonic()

            def __exit__(self, *exc):
                clock.seconds[stage] = clock.seconds.get(stage, 0.0) + (time.monotonic() - self.begin)
                return False

        return _Span()

    def finish(self) -> dict[str, float]:
        total = time.monotonic() - self._start
        out = {name: round(value, 1) for name, value in self.seconds.items()}
        out["total"] = round(total, 1)
        return out


def _load_reference(path: str):
    if path.endswith(".json"):
        return load_json_alignment(path)
    return parse_reference_alignment(path)


def run_pipeline(
    cfg: PipelineConfig,
    *,
    llm_client=None,
    embedding_provider=None,
) -> tuple[list[Correspondence], RunReport]:
    """Execute one alignment run and write its output and report files.

    Args:
        cfg: validated pipeline settings.
        llm_client: optional injected client (otherwise built from config;
            "mock:" endpoints select the offline mock).
        embedding_provider: optional injected embedding backend.

    Returns:
        The final correspondences and the run report.
    """
    cfg.validate()
    view = EncodingView.parse(cfg.view)
    clock = _StageClock()

    with clock.time("parse"):
        source = parse_ontology(cfg.source_path)
        target = parse_ontology(cfg.target_path)

    corpora = None
    if cfg.method in ("fuzzy", "retrieval", "llm"):
        encode_target = "llm" if cfg.method == "llm" else "lightweight"
        with clock.time("encode"):
            corpora = (encode(source, view, encode_target), encode(target, view, encode_target))
    else:
        clock.seconds["encode"] = 0.0  # rag encodes inside the aligner

    with clock.time("align"):
        if cfg.method == "fuzzy":
            correspondences = align_fuzzy(corpora[0], corpora[1], cfg.fuzzy)
        elif cfg.method == "retrieval":
            correspondences = align_retrieval(
                corpora[0], corpora[1], cfg.retrieval,
                provider=embedding_provider, seed=cfg.seed,
            )
        elif cfg.method == "llm":
            correspondences = align_llm_pairwise(
                corpora[0], corpora[1], cfg.rag.llm,
                template=cfg.rag.template, pair_cap=cfg.pair_cap,
                client=llm_client, seed=cfg.seed,
            )
        else:
            shots = 0 if cfg.method == "rag" else (cfg.rag.shots or _DEFAULT_FEWSHOT)
            rag_cfg = replace(cfg.rag, view=view, shots=shots)
            correspondences = align_rag(
                source, target, rag_cfg,
                client=llm_client, provider=embedding_provider, seed=cfg.seed,
            )

    with clock.time("postprocess"):
        correspondences = apply_postprocess(correspondences, cfg.postprocess)

    metrics = None
    if cfg.reference_path:
        with clock.time("evaluate"):
            metrics = evaluate(correspondences, _load_reference(cfg.reference_path))

    with clock.time("export"):
        document = AlignmentDocument.from_correspondences(
            correspondences, onto1=cfg.source_path, onto2=cfg.target_path,
        )
        write_alignment(document, cfg.output_path, cfg.output_format)

    report = RunReport(
        method=cfg.method,
        view=view.value,
        correspondences=len(correspondences),
        seconds=clock.finish(),
        output_path=str(cfg.output_path),
        metrics=metrics,
        config=cfg.to_dict(),
    )
    atomic_write(report_path_for(cfg.output_path), report.to_json())
    return correspondences, report
