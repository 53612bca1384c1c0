"""Structured verdict records and curve tables emitted by every suite.

A verdict states one quantitative claim, the estimate with its confidence
band, and a three-valued outcome: ``pass``, ``fail`` or ``inconclusive``.
Inconclusive marks an underpowered Monte-Carlo run and is deliberately
distinct from failure.
"""

import csv
import json
from dataclasses import dataclass, field

__all__ = ["Verdict", "Curve", "PASS", "FAIL", "INCONCLUSIVE"]

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

_OUTCOMES = (PASS, FAIL, INCONCLUSIVE)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        try:
            return value.item()
        except (AttributeError, ValueError):
            pass
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


@dataclass
class Verdict:
    """One claim, one outcome."""

    claim: str
    statement: str
    verdict: str
    estimate: float = None
    band: float = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in _OUTCOMES:
            raise ValueError(f"verdict must be one of {_OUTCOMES}")

    @property
    def passed(self):
        return self.verdict == PASS

    @property
    def failed(self):
        return self.verdict == FAIL

    def to_record(self):
        return {
            "claim": self.claim,
            "statement": self.statement,
            "estimate": _jsonable(self.estimate),
            "band": _jsonable(self.band),
            "verdict": self.verdict,
            "details": _jsonable(self.details),
        }

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


@dataclass
class Curve:
    """Tabular curve data destined for a CSV file."""

    name: str
    columns: tuple
    rows: list

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_jsonable(v) for v in row])
        return path
