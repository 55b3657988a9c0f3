"""Strict structured-text run configuration (TOML) and ``--set`` overrides."""

from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

import tomli
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from ..errors import ConfigError
from ..grid import BC, GridSpec

BCKind = Literal["wall", "periodic", "inflow", "outflow"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class GridCfg(_Strict):
    nx: int = 32
    ny: Optional[int] = None
    lx: float = 1.0
    ly: Optional[float] = None
    origin: Tuple[float, float] = (0.0, 0.0)
    left: BCKind = "wall"
    right: BCKind = "wall"
    bottom: BCKind = "wall"
    top: BCKind = "wall"
    inflow: Tuple[float, float] = (1.0, 0.0)

    @field_validator("nx", "ny")
    @classmethod
    def _cells(cls, v):
        if v is not None and v < 4:
            raise ValueError("at least 4 cells per direction")
        return v

    @field_validator("lx", "ly")
    @classmethod
    def _length(cls, v):
        if v is not None and not v > 0:
            raise ValueError("domain lengths must be positive")
        return v

    def resolved_ny(self):
        if self.ny is not None:
            return self.ny
        ly = self.lx if self.ly is None else self.ly
        return max(4, int(round(self.nx * ly / self.lx)))

    def build(self):
        ny = self.resolved_ny()
        ly = self.lx * ny / self.nx if self.ly is None else self.ly
        sides = {}
        for s in ("left", "right", "bottom", "top"):
            kind = getattr(self, s)
            sides[s] = BC(kind, self.inflow) if kind == "inflow" else BC(kind)
        return GridSpec.box(self.nx, ny, self.lx, ly, self.origin, **sides)


class FluidCfg(_Strict):
    rho: float = 1.0
    mu: float = 0.01
    implicit_diffusion: bool = True
    upwind: float = 0.0
    cfl: float = 0.5
    check_cfl: bool = True


class BodyCfg(_Strict):
    shape: Literal["disc", "ellipse", "rectangle", "fiber"] = "disc"
    radius: float = 0.5
    a: float = 0.5
    b: float = 0.25
    width: float = 1.0
    height: float = 0.5
    length: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)
    angle: float = 0.0
    rho_s: float = 1.0
    motion: Literal["fixed", "prescribed", "free", "elastic"] = "fixed"
    U: Tuple[float, float] = (0.0, 0.0)
    omega: float = 0.0
    spacing: float = 1.0  # marker spacing in grid cells


class ConstraintCfg(_Strict):
    scheme: Literal["ibm_elastic", "fdm_fts", "direct_forcing", "brinkman", "penalty"] = "fdm_fts"
    locus: Literal["surface", "volume"] = "volume"
    kernel: Literal["peskin4", "linear2", "cosine3", "mls"] = "peskin4"
    mls_degree: int = 1
    mls_radius: float = 2.6
    kappa: Optional[float] = None
    k: float = 0.0
    c: float = 0.0
    forcing_iterations: int = 1
    smooth_chi: bool = True
    picard: int = 0


class ScalarCfg(_Strict):
    mode: Literal["dirichlet", "neumann", "robin"] = "neumann"
    a: float = 1.0
    b: float = 0.0
    g: Optional[str] = None
    zeta: float = 0.0
    D: float = 1.0
    eta: Optional[float] = None
    eta_sweep: List[float] = []
    smooth_chi: bool = False


class OutputCfg(_Strict):
    dir: Optional[str] = None
    snapshot_every: int = 0
    vtk: bool = True
    markers: bool = True


class RunConfig(_Strict):
    scenario: str
    t_end: Optional[float] = None
    dt: Optional[float] = None
    max_steps: Optional[int] = None
    seed: int = 0
    grid: GridCfg = GridCfg()
    fluid: FluidCfg = FluidCfg()
    body: Dict[str, BodyCfg] = {}
    constraint: ConstraintCfg = ConstraintCfg()
    scalar: ScalarCfg = ScalarCfg()
    params: Dict[str, float] = {}
    output: OutputCfg = OutputCfg()


# ---------------------------------------------------------------------------


def parse_value(text):
    """Interpret an override value as a TOML literal, else as a bare string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_override(data, assignment):
    """Apply ``a.b.c=value`` to a nested dict in place."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value")
    key, text = assignment.split("=", 1)
    key = key.strip()
    parts = key.split(".")
    if not all(parts):
        raise ConfigError(f"malformed override key {key!r}")
    node = data
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {key!r}: {p!r} is not a section")
        node = nxt
    node[parts[-1]] = parse_value(text.strip())
    return data


def merge(base, extra):
    """Recursive dict merge (``extra`` wins)."""
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _describe(err):
    parts = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"])
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def validate(data, defaults=None):
    """Merge ``data`` over scenario ``defaults`` and validate strictly."""
    merged = merge(defaults or {}, data)
    if defaults is not None:
        unknown = set(merged.get("params", {})) - set(defaults.get("params", {}))
        if unknown:
            raise ConfigError(f"unknown scenario parameter(s): {', '.join(sorted('params.' + u for u in unknown))}")
    try:
        cfg = RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_describe(e)}") from None
    for name, v in cfg.params.items():
        if not math.isfinite(v):
            raise ConfigError(f"params.{name} must be finite")
    return cfg


def load_file(path):
    """Read a TOML config file into a plain dict."""
    p = Path(path)
    try:
        with p.open("rb") as fh:
            return tomli.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"config {path} is not valid TOML: {e}") from None
