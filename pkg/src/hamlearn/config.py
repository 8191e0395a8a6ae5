"""Strict experiment configuration: YAML documents validated by pydantic models.

Unknown keys are rejected.  Validation errors carry the line number of the
offending key in the source document when it is known.
"""
from __future__ import annotations

import math
from importlib import resources
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

PRESET_PACKAGE = "hamlearn.presets"


class ConfigError(ValueError):
    """Configuration could not be read or failed validation.

    ``problems`` is a list of (line or None, dotted location, message).
    """

    def __init__(self, source: str, problems):
        self.source = source
        self.problems = list(problems)
        super().__init__("\n".join(self.lines()))

    def lines(self):
        out = []
        for line, loc, msg in self.problems:
            where = f"{self.source}:{line}" if line is not None else self.source
            out.append(f"{where}: {loc or '<root>'}: {msg}")
        return out


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GraphSection(_Strict):
    kind: Literal["full", "layered", "explicit"] = "full"
    n_hidden: int = Field(5, ge=1)
    d: int = Field(1, ge=1)
    self_loops: bool = True
    sizes: Optional[list[int]] = None
    n: Optional[int] = None
    arcs: Optional[list[tuple[int, int]]] = None
    outputs: Optional[list[int]] = None

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "layered" and not self.sizes:
            raise ValueError("layered graph needs sizes")
        if self.kind == "explicit":
            if self.n is None or self.arcs is None or self.outputs is None:
                raise ValueError("explicit graph needs n, arcs and outputs")
            if self.d >= self.n:
                raise ValueError(f"d must be < n (got d={self.d}, n={self.n})")
        return self


class InputSection(_Strict):
    kind: Literal["constant", "sinusoid"] = "constant"
    value: float = 1.0
    amplitude: float = 1.0
    frequency: float = Field(1.0, ge=0)
    phase: float = 0.0
    offset: float = 0.0


class DynamicsSection(_Strict):
    activation: Literal["tanh", "logistic"] = "tanh"
    speed: Union[float, list[float]] = 1.0
    input: InputSection = InputSection()

    @field_validator("speed")
    @classmethod
    def _positive(cls, v):
        vals = v if isinstance(v, list) else [v]
        if not vals or any(not (x > 0 and math.isfinite(x)) for x in vals):
            raise ValueError("speed constants must be positive and finite")
        return v


class HamiltonianSection(_Strict):
    q: float = Field(100.0, ge=0)
    r: float = Field(0.1, gt=0)
    r_w: float = Field(1.0, ge=0)
    theta: float = 1.0


class IntegratorSection(_Strict):
    tau: float = Field(1e-4, gt=0)
    T: float = Field(10.0, gt=0)
    scheme: Literal["euler", "rk4"] = "euler"
    record_stride: int = Field(100, ge=1)
    system: Literal["costate_flipped", "hamiltonian"] = "costate_flipped"
    blowup: float = Field(1e12, gt=0)

    @model_validator(mode="after")
    def _tau_le_T(self):
        if self.tau > self.T:
            raise ValueError(f"tau ({self.tau}) must not exceed T ({self.T})")
        return self


class PolicySection(_Strict):
    kind: Literal["forward", "periodic", "track_ball"] = "forward"
    track_radius: Optional[float] = Field(None, gt=0)
    flip_frequency: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _params(self):
        if self.kind == "periodic" and self.flip_frequency is None:
            raise ValueError("periodic policy needs flip_frequency")
        if self.kind == "track_ball" and self.track_radius is None:
            raise ValueError("track_ball policy needs track_radius")
        return self


class SegmentSection(_Strict):
    duration: float = Field(gt=0)
    amplitude: Optional[float] = None
    frequency: Optional[float] = None
    value: Optional[float] = None

    @model_validator(mode="after")
    def _one_kind(self):
        cosine = self.amplitude is not None or self.frequency is not None
        if cosine == (self.value is not None):
            raise ValueError("segment needs either amplitude+frequency or value")
        if cosine and (self.amplitude is None or self.frequency is None):
            raise ValueError("cosine segment needs both amplitude and frequency")
        return self


class TargetSection(_Strict):
    kind: Literal["sinusoid", "piecewise"] = "sinusoid"
    amplitude: float = 0.5
    frequency: float = Field(0.2, ge=0)
    phase: float = 0.0
    offset: float = 0.0
    segments: Optional[list[SegmentSection]] = None


class OutputSection(_Strict):
    dir: Optional[str] = None


class ExperimentConfig(_Strict):
    """Fully resolved experiment description; every field has a documented default."""

    seed: int = Field(0, ge=0)
    init_weight_scale: float = Field(0.3, ge=0)
    graph: GraphSection = GraphSection()
    dynamics: DynamicsSection = DynamicsSection()
    hamiltonian: HamiltonianSection = HamiltonianSection()
    integrator: IntegratorSection = IntegratorSection()
    policy: PolicySection = PolicySection()
    target: TargetSection = TargetSection()
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _segments_tile(self):
        segs = self.target.segments
        if self.target.kind == "piecewise" and segs:
            total = sum(s.duration for s in segs)
            if abs(total - self.integrator.T) > 1e-9 * max(1.0, self.integrator.T):
                raise ValueError(f"target segments cover {total}, horizon T is {self.integrator.T}")
        return self

    def replace(self, path: str, value) -> "ExperimentConfig":
        """Copy with one dotted field replaced, re-validated."""
        return self.replace_many({path: value})

    def replace_many(self, changes: dict) -> "ExperimentConfig":
        """Copy with several dotted fields replaced, validated once at the end."""
        data = self.model_dump()
        for path, value in changes.items():
            node = data
            keys = path.split(".")
            for key in keys[:-1]:
                if not isinstance(node, dict) or key not in node:
                    raise KeyError(path)
                node = node[key]
            if not isinstance(node, dict) or keys[-1] not in node:
                raise KeyError(path)
            node[keys[-1]] = value
        return ExperimentConfig.model_validate(data)

    def echo(self) -> str:
        """Resolved configuration as YAML with all defaults filled in."""
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


# Short names accepted by sweeps and the CLI for frequently varied fields.
AXIS_ALIASES = {
    "q": "hamiltonian.q",
    "r": "hamiltonian.r",
    "r_w": "hamiltonian.r_w",
    "theta": "hamiltonian.theta",
    "speed": "dynamics.speed",
    "tau": "integrator.tau",
    "T": "integrator.T",
    "flip_frequency": "policy.flip_frequency",
    "track_radius": "policy.track_radius",
    "seed": "seed",
}


def resolve_axis(axis: str) -> str:
    return AXIS_ALIASES.get(axis, axis)


def _key_lines(node, prefix=()):
    """Map dotted key paths to 1-based line numbers from a composed YAML node tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (str(k.value),)
            out[path] = k.start_mark.line + 1
            out.update(_key_lines(v, path))
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            path = prefix + (str(i),)
            out[path] = v.start_mark.line + 1
            out.update(_key_lines(v, path))
    return out


def _line_for(loc, lines):
    path = tuple(str(p) for p in loc)
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(source, [(line, "", f"parse error: {getattr(exc, 'problem', exc)}")]) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(source, [(1, "", "top level must be a mapping")])
    lines = _key_lines(node) if node is not None else {}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            loc = tuple(p for p in err["loc"] if not (isinstance(p, str) and p.startswith("function-")))
            msg = err["msg"]
            if err["type"] == "extra_forbidden":
                msg = f"unknown key {loc[-1]!r}"
            problems.append((_line_for(loc, lines), ".".join(str(p) for p in loc), msg))
        raise ConfigError(source, problems) from None


def preset_names():
    root = resources.files(PRESET_PACKAGE)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(path_or_name) -> ExperimentConfig:
    """Load a config file, or a shipped preset by bare name (``sinusoid_q100``)."""
    path = Path(path_or_name)
    if path.is_file():
        return parse_config(path.read_text(), str(path))
    name = path.name
    for suffix in (".yaml", ".yml", ".cfg"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    res = resources.files(PRESET_PACKAGE) / f"{name}.yaml"
    if res.is_file():
        return parse_config(res.read_text(), f"preset:{name}")
    raise ConfigError(str(path_or_name), [(None, "", "no such file or preset")])


def with_seed(cfg: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    return cfg if seed is None else cfg.replace("seed", int(seed))
