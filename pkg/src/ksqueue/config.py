"""Flat key=value run configuration (UTF-8, ``#`` comments)."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ParameterError
from .generator import QueueParams
from .mc import SamplerBackend, SimConfig, default_times
from .specfun import KSParams

__all__ = ["RunConfig", "parse_config", "serialize_config", "load_config", "DEFAULT_SWEEP"]

# (alpha, gamma) pairs overlaid in the figures
DEFAULT_SWEEP = ((1.0, 0.0), (0.8, 0.0), (0.8, 0.2), (0.6, 0.2))

# file key -> attribute name
_KEYS = {
    "lambda": "lam",
    "mu": "mu",
    "alpha": "alpha",
    "gamma": "gamma",
    "t_max": "t_max",
    "n_times": "n_times",
    "replications": "replications",
    "t_star": "t_star",
    "n_max": "n_max",
    "m_z": "m_z",
    "seed": "seed",
    "sampler_backend": "sampler_backend",
    "out_dir": "out_dir",
}


@dataclass(frozen=True)
class RunConfig:
    lam: float = 0.8
    mu: float = 1.0
    alpha: float = 1.0
    gamma: float = 0.0
    t_max: float = 20.0
    n_times: int = 250
    replications: int = 3000
    t_star: float = 8.0
    n_max: int = 35
    m_z: int = 250
    seed: int = 20260117
    sampler_backend: str = "auto"
    out_dir: str = "out"

    def __post_init__(self):
        if self.n_times < 2:
            raise ParameterError("n_times must be >= 2")
        if self.sampler_backend != "auto":
            try:
                SamplerBackend(self.sampler_backend)
            except ValueError:
                raise ParameterError(f"unknown sampler_backend {self.sampler_backend!r}") from None

    @property
    def queue(self) -> QueueParams:
        return QueueParams(self.lam, self.mu)

    @property
    def ks(self) -> KSParams:
        return KSParams(self.alpha, self.gamma)

    def times(self):
        return default_times(self.t_max, self.n_times)

    def sim_config(self, ks: KSParams | None = None, backend: str | None = None) -> SimConfig:
        ks = ks if ks is not None else self.ks
        name = backend or self.sampler_backend
        return SimConfig(
            queue=self.queue,
            ks=ks,
            times=tuple(self.times()),
            replications=self.replications,
            t_star=self.t_star,
            n_max=self.n_max,
            m_z=self.m_z,
            seed=self.seed,
            sampler_backend=None if name == "auto" else SamplerBackend(name),
        )


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(attr: str, raw: str):
    kind = _TYPES[attr]
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
    except ValueError:
        raise ParameterError(f"bad value for {attr}: {raw!r}") from None
    return raw


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
        values[_KEYS[key]] = _convert(_KEYS[key], raw)
    base = base or RunConfig()
    merged = {f.name: getattr(base, f.name) for f in fields(RunConfig)}
    merged.update(values)
    return RunConfig(**merged)


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key, attr in _KEYS.items():
        v = getattr(cfg, attr)
        lines.append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
