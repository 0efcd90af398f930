"""Structured run reports emitted by the command-line driver."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

SCHEMA_VERSION = "1.0"


def load_schema() -> dict:
    """The JSON schema every report validates against."""
    return json.loads(resources.files("rhls").joinpath("schema/run_report.schema.json").read_text())


def _clean(value):
    # JSON has no NaN or infinity; they become null
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


@dataclass
class RunReport:
    """One command's inputs, named numeric outputs and their error estimates.

    Booleans in ``outputs`` are verdicts and carry no error estimate; every
    numeric output must have one (0 for closed forms).
    """

    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    error_estimates: dict = field(default_factory=dict)
    seed: int = 0
    wall_time_ms: int = 0
    schema_version: str = SCHEMA_VERSION

    def add(self, name: str, value, error: float | None = 0.0) -> None:
        """Record an output; ``error=None`` marks a value whose error is unknown."""
        if isinstance(value, bool):
            self.outputs[name] = value
            return
        self.outputs[name] = _clean(float(value))
        self.error_estimates[name] = None if error is None else _clean(abs(float(error)))

    def check(self) -> None:
        missing = [k for k, v in self.outputs.items() if not isinstance(v, bool) and k not in self.error_estimates]
        if missing:
            raise ValueError(f"outputs without error estimates: {missing}")

    def as_dict(self) -> dict:
        self.check()
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "inputs": {k: _clean(v) for k, v in self.inputs.items()},
            "outputs": dict(self.outputs),
            "error_estimates": dict(self.error_estimates),
            "seed": int(self.seed),
            "wall_time_ms": int(self.wall_time_ms),
        }

    def to_json(self) -> str:
        """Canonical serialisation: sorted keys, shortest round-trip floats."""
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"
