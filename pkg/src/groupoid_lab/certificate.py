"""Machine-readable verdict records emitted by every auditor."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .errors import InvalidInput

TOOL_VERSION = "0.1.0"
VERDICTS = ("pass", "fail", "vacuous")


def rational_str(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise InvalidInput(f"not a rational: {text!r}") from None


def to_jsonable(obj: Any) -> Any:
    """Recursively convert library values to JSON-ready data (rationals become ``"p/q"``)."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Fraction):
        return rational_str(obj)
    if isinstance(obj, float):
        raise InvalidInput("floating point values are not allowed in certificates")
    if hasattr(obj, "to_json"):
        return to_jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(to_jsonable(k)): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted((to_jsonable(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return str(obj)


@dataclass
class Certificate:
    property: str
    parameters: dict = field(default_factory=dict)
    verdict: str = "pass"
    witnesses: Any = None
    values: dict = field(default_factory=dict)
    seed: int | None = None
    tool_version: str = TOOL_VERSION

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise InvalidInput(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"

    def as_dict(self) -> dict:
        return {
            "property": self.property,
            "parameters": to_jsonable(self.parameters),
            "verdict": self.verdict,
            "witnesses": to_jsonable(self.witnesses),
            "values": to_jsonable(self.values),
            "seed": self.seed,
            "tool_version": self.tool_version,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> Certificate:
        try:
            return cls(
                property=data["property"],
                parameters=data.get("parameters") or {},
                verdict=data["verdict"],
                witnesses=data.get("witnesses"),
                values=data.get("values") or {},
                seed=data.get("seed"),
                tool_version=data.get("tool_version", TOOL_VERSION),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed certificate: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> Certificate:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"certificate is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidInput("certificate must be a JSON object")
        return cls.from_dict(data)


def merge_verdict(*verdicts: str) -> str:
    if "fail" in verdicts:
        return "fail"
    if verdicts and all(v == "vacuous" for v in verdicts):
        return "vacuous"
    return "pass"
