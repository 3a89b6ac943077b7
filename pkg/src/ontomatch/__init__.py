"""Modular ontology-alignment toolkit.

Parse OWL/RDF ontologies, encode their concepts under label/children/
parents views, align them with fuzzy, retrieval, or LLM-backed methods,
filter the result, evaluate it against a reference, and export it in the
OAEI cell XML vocabulary or JSON.
"""

from .encoding import ConceptText, EncodedCorpus, EncodingView, encode, normalize, tokenize
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyCorpus,
    EmptyOntology,
    EndpointUnreachable,
    InvalidScore,
    LogprobsUnsupported,
    MalformedDocument,
    MissingEntity,
    OntomatchError,
    PairCapExceeded,
    ProviderError,
    TemplateError,
    UnsupportedFormat,
    ViewMismatch,
)
from .evaluation import ComparisonTable, Metrics, compare, evaluate
from .export import (
    AlignmentDocument,
    atomic_write,
    export_json,
    export_xml,
    format_measure,
    load_json_alignment,
    write_alignment,
)
from .fuzzy import (
    FuzzyConfig,
    align_fuzzy,
    fuzzy_ratio,
    lcs_length,
    token_set_ratio,
    weighted_token_set_ratio,
)
from .llm import Decision, HttpLLMClient, LLMConfig, MockLLMClient, make_llm_client
from .mapping import Correspondence
from .parsing import (
    AlignmentCell,
    ConceptRecord,
    Ontology,
    ReferenceAlignment,
    derive_label,
    parse_ontology,
    parse_reference_alignment,
)
from .pipeline import PipelineConfig, RunReport, run_pipeline
from .postprocess import (
    LabelMapper,
    LabelMapperConfig,
    PostprocessConfig,
    apply_postprocess,
    cardinality_filter,
    map_label,
    threshold_filter,
)
from .rag import (
    Exemplar,
    PromptTemplate,
    RAGConfig,
    align_llm_pairwise,
    align_rag,
    build_prompt,
    load_exemplars,
)
from .retrieval import (
    HttpEmbeddingProvider,
    MockEmbeddingProvider,
    RetrievalConfig,
    TfidfModel,
    VectorMatrix,
    align_retrieval,
    cosine_topk,
    embed,
    tfidf_fit,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentCell",
    "AlignmentDocument",
    "ComparisonTable",
    "ConceptRecord",
    "ConceptText",
    "ConfigError",
    "Correspondence",
    "Decision",
    "DimensionMismatch",
    "EmptyCorpus",
    "EmptyOntology",
    "EncodedCorpus",
    "EncodingView",
    "EndpointUnreachable",
    "Exemplar",
    "FuzzyConfig",
    "HttpEmbeddingProvider",
    "HttpLLMClient",
    "InvalidScore",
    "LLMConfig",
    "LabelMapper",
    "LabelMapperConfig",
    "LogprobsUnsupported",
    "MalformedDocument",
    "Metrics",
    "MissingEntity",
    "MockEmbeddingProvider",
    "MockLLMClient",
    "Ontology",
    "OntomatchError",
    "PairCapExceeded",
    "PipelineConfig",
    "PostprocessConfig",
    "PromptTemplate",
    "ProviderError",
    "RAGConfig",
    "ReferenceAlignment",
    "RetrievalConfig",
    "RunReport",
    "TemplateError",
    "TfidfModel",
    "UnsupportedFormat",
    "VectorMatrix",
    "ViewMismatch",
    "align_fuzzy",
    "align_llm_pairwise",
    "align_rag",
    "align_retrieval",
    "apply_postprocess",
    "atomic_write",
    "build_prompt",
    "cardinality_filter",
    "compare",
    "cosine_topk",
    "derive_label",
    "embed",
    "encode",
    "evaluate",
    "export_json",
    "export_xml",
    "format_measure",
    "fuzzy_ratio",
    "lcs_length",
    "load_exemplars",
    "load_json_alignment",
    "make_llm_client",
    "map_label",
    "normalize",
    "parse_ontology",
    "parse_reference_alignment",
    "run_pipeline",
    "tfidf_fit",
    "threshold_filter",
    "token_set_ratio",
    "tokenize",
    "weighted_token_set_ratio",
    "write_alignment",
]
