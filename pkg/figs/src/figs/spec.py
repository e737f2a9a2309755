"""Figure specification: what to read, what to draw, where to write it."""

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

KINDS = (
    "acceptance-vs-steps",
    "acceptance-vs-step-size",
    "efficiency-vs-acceptance",
    "acceptance-vs-dimension",
    "tuning-curves",
    "dataset-scatter",
)


class SchemaError(ValueError):
    """An input CSV is missing a column the figure kind requires."""


@dataclass
class FigureSpec:
    """One figure: a kind, an input CSV, an output image path.

    ``series`` names the column whose values become separate lines in the
    multi-line kinds. Axis labels and the title fall back to per-kind
    defaults when left unset.
    """

    kind: str
    csv: str
    out: str
    series: str = "activation"
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {KINDS}")

    @classmethod
    def from_dict(cls, doc: dict) -> "FigureSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown figure-spec keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "FigureSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        doc = {f.name: getattr(self, f.name) for f in fields(self)
               if getattr(self, f.name) is not None}
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
