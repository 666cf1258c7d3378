"""Run configuration: a strict, fully serializable parameter snapshot.

A RunConfig captures everything a pipeline invocation needs; feeding an
emitted config back in reproduces the run exactly.  Unknown keys are
rejected so stale or misspelled configs fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ParameterError

# Paper-reported defaults: k=15 neighbors, bandwidth 5x mean neighbor
# distance, penalty 3 for low-dimensional synthetic data and 2 for
# high-dimensional data.
DEFAULT_K = 15
DEFAULT_BANDWIDTH_MULTIPLIER = 5.0
DEFAULT_LAM_SYNTHETIC = 3.0
DEFAULT_LAM_HIGHDIM = 2.0
HIGHDIM_THRESHOLD = 4  # ambient dimension at which presets switch


def _strict(cls, payload, where):
    if payload is None:
        return cls()
    if not isinstance(payload, dict):
        raise ParameterError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(payload) - known
    if unknown:
        raise ParameterError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**payload)


@dataclass
class DatasetSpec:
    name: str = "scurve"            # scurve | sphere | box | csv
    n: int = 3000
    seed: int = 0
    noise: float = 0.0
    hole: list | str | None = None  # None | "default" | [s0, s1, w0, w1]
    lengths: list | None = None
    stretch_ns: float = 1.0
    stretch_ew: float = 1.02
    path: str | None = None


@dataclass
class GraphSpec:
    kind: str = "knn"               # knn | epsilon
    k: int = DEFAULT_K
    epsilon: float | None = None
    bandwidth_multiplier: float = DEFAULT_BANDWIDTH_MULTIPLIER


@dataclass
class MethodSpec:
    method: str = "deflation"       # baseline | deflation
    m: int = 2
    lam: float | None = None        # None -> preset by refinement policy
    refinement: str = "auto"        # auto | project_rescale | row_normalize | none
    include_self: bool = True
    vfi: bool = False
    alpha: float | None = None

    def resolve_refinement(self, ambient_dim: int) -> str:
        if self.refinement != "auto":
            return self.refinement
        return "project_rescale" if ambient_dim < HIGHDIM_THRESHOLD else "row_normalize"

    def resolve_lam(self, refinement: str) -> float:
        if self.lam is not None:
            return self.lam
        if refinement == "row_normalize":
            return DEFAULT_LAM_HIGHDIM
        return DEFAULT_LAM_SYNTHETIC


@dataclass
class SolverSpec:
    tol: float = 1e-8
    max_iter: int = 5000
    seed: int = 0


@dataclass
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    graph: GraphSpec = field(default_factory=GraphSpec)
    method: MethodSpec = field(default_factory=MethodSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        if not isinstance(payload, dict):
            raise ParameterError("config: expected an object")
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ParameterError(f"config: unknown keys {sorted(unknown)}")
        outputs = payload.get("outputs", {})
        if not isinstance(outputs, dict):
            raise ParameterError("config.outputs: expected an object")
        return cls(
            dataset=_strict(DatasetSpec, payload.get("dataset"), "config.dataset"),
            graph=_strict(GraphSpec, payload.get("graph"), "config.graph"),
            method=_strict(MethodSpec, payload.get("method"), "config.method"),
            solver=_strict(SolverSpec, payload.get("solver"), "config.solver"),
            outputs=dict(outputs),
        )

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config: invalid JSON ({exc})") from exc
        return cls.from_dict(payload)
