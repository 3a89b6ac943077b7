"""The correspondence record shared by every aligner, filter, and exporter."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Correspondence:
    """One class-to-class mapping between two ontologies.

    Attributes:
        source: IRI of the source-ontology concept.
        target: IRI of the target-ontology concept.
        relation: relation string, "=" for equivalence.
        score: confidence in [0, 1].
        provenance: short tag naming the producing aligner, e.g. "fuzzy:simple".
    """

    source: str
    target: str
    relation: str = "="
    score: float = 1.0
    provenance: str = field(default="", compare=False)

    def key(self) -> tuple[str, str, str]:
        """Identity triple used for de-duplication and evaluation."""
        return (self.source, self.target, self.relation)
