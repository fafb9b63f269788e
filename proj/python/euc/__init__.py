"""Python bindings for the EUC spreadsheet control library.

Workbooks, reports, plans and records are plain dicts in the canonical JSON
shapes used by ``eucctl``.
"""

from __future__ import annotations

import json
import os
from typing import Any, Optional, Union

from . import _core
from ._core import EucError

__all__ = [
    "EucError",
    "Inventory",
    "audit",
    "build_plan",
    "canonical_formula",
    "diff",
    "load_workbook",
    "normalize_r1c1",
    "required_controls",
]

Workbook = Union[dict, str, os.PathLike]


def _dump(value: Optional[Any]) -> Optional[str]:
    return None if value is None else json.dumps(value)


def _workbook_json(workbook: Workbook) -> str:
    if isinstance(workbook, dict):
        return json.dumps(workbook)
    text, _ = _core.load_workbook(os.fspath(workbook))
    return text


def load_workbook(path: Union[str, os.PathLike]) -> tuple[dict, list[tuple[str, str, str]]]:
    """Imports an .xlsx or canonical JSON file; returns (workbook, warnings)."""
    text, warnings = _core.load_workbook(os.fspath(path))
    return json.loads(text), warnings


def audit(
    workbook: Workbook,
    config: Optional[dict] = None,
    location: Optional[str] = None,
    at: Optional[str] = None,
) -> dict:
    """Runs every design-standard and integrity rule. `at` is an ISO-8601 UTC timestamp."""
    return json.loads(_core.audit(_workbook_json(workbook), _dump(config), location, at))


def build_plan(report: dict, owner: str = "") -> dict:
    return json.loads(_core.build_plan(json.dumps(report), owner))


def diff(before: Workbook, after: Workbook, rules: Optional[dict] = None) -> dict:
    """Cell-level diff plus the alert rules it triggers (all rules on by default)."""
    return json.loads(_core.diff(_workbook_json(before), _workbook_json(after), _dump(rules)))


def normalize_r1c1(formula: str, host: str) -> str:
    return _core.normalize_r1c1(formula, host)


def canonical_formula(formula: str) -> str:
    return _core.canonical_formula(formula)


def required_controls(category: str, tier: str) -> dict:
    return json.loads(_core.required_controls(category, tier))


class Inventory:
    """The application register stored under `data_dir`."""

    def __init__(self, data_dir: Union[str, os.PathLike]):
        self._inv = _core.Inventory(os.fspath(data_dir))

    def __len__(self) -> int:
        return len(self._inv)

    def register(self, fields: dict, principal: str) -> dict:
        return json.loads(self._inv.register(json.dumps(fields), principal))

    def update(self, record_id: str, patch: dict, principal: str) -> dict:
        return json.loads(self._inv.update(record_id, json.dumps(patch), principal))

    def record(self, record_id: str) -> Optional[dict]:
        text = self._inv.record(record_id)
        return None if text is None else json.loads(text)

    def seed_demo(self, principal: str = "seed-demo") -> int:
        return self._inv.seed_demo(principal)

    def audit(
        self,
        record_id: str,
        workbook: Workbook,
        config: Optional[dict] = None,
        location: Optional[str] = None,
    ) -> dict:
        return json.loads(self._inv.audit(record_id, _workbook_json(workbook), _dump(config), location))

    def plan(self, record_id: str) -> Optional[dict]:
        text = self._inv.plan(record_id)
        return None if text is None else json.loads(text)

    def summary(self, today: Optional[str] = None) -> dict:
        return json.loads(self._inv.summary(today))
