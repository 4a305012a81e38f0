"""Compiled-in experiment setups and the flat key = value config format."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .grid import Grid
from .inversion import InverseProblemSpec
from .model import AffineProfile, ConstantProfile, DegeneracyKind, DiffusionModel, QuadraticProfile
from .observations import synthesize

INITIAL_DATA = {
    "cubic": lambda x: 0.5 * x ** 2 * (1 - x),
    "quartic": lambda x: 0.3 * x ** 2 * (1 - x) ** 2,
    "sine": lambda x: np.sin(np.pi * x),
    "zero": lambda x: np.zeros_like(x),
}
SOURCES = {
    "none": None,
    "2xt": lambda x, t: 2.0 * x * t,
}
FAMILIES = {
    "a": ("a",),
    "alpha": ("alpha",),
    "bc": ("b", "c"),
    "bch": ("b", "c", "h"),
}
NOISE_LEVELS = (0.01, 0.001, 0.0001, 0.00001, 0.0)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "custom"
    observation: str = "interior"
    kind: str = "strong"
    ell: float = 1.0
    T: float = 5.0
    nx: int = 200
    nt: int = 2000
    u0: str = "cubic"
    source: str = "none"
    family: str = "a"
    alpha: float = 1.0
    truth: tuple = (1.7,)
    initial: tuple = (0.7,)
    bounds: tuple = ((0.1, 3.0),)
    t0: float = 0.2
    weight: str = "x"
    noise_levels: tuple = NOISE_LEVELS
    seeds: tuple = (0, 1, 2, 3, 4)
    refine_space: int = 2
    refine_time: int = 4
    scheme: str = "sdirk3"

    def validate(self) -> "ExperimentConfig":
        if self.observation not in ("interior", "boundary"):
            raise ConfigError(f"observation must be interior or boundary, got {self.observation!r}")
        try:
            kind = DegeneracyKind.parse(self.kind)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.u0 not in INITIAL_DATA:
            raise ConfigError(f"unknown u0 {self.u0!r}; choose from {sorted(INITIAL_DATA)}")
        if self.source not in SOURCES:
            raise ConfigError(f"unknown source {self.source!r}; choose from {sorted(SOURCES)}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {sorted(FAMILIES)}")
        n = len(FAMILIES[self.family])
        if not (len(self.truth) == len(self.initial) == len(self.bounds) == n):
            raise ConfigError(f"family {self.family} needs {n} truth/initial/bounds entries")
        if self.family != "alpha" and not kind.admits(self.alpha):
            raise ConfigError(f"alpha={self.alpha} not admissible for {kind.value} degeneracy")
        if any(level < 0 for level in self.noise_levels):
            raise ConfigError("noise levels must be >= 0")
        if self.refine_space < 2 or self.refine_time < 1:
            raise ConfigError("data grid must be strictly finer (refine_space >= 2)")
        try:
            Grid(self.ell, self.nx, self.T, self.nt)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    # flat text serialization -------------------------------------------------

    def dumps(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            lines.append(f"{k} = {_encode(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        values = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"malformed config line: {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
        if "preset" in values and base is None:
            base = preset_config(values["preset"])
        return (base or cls()).override(**values)

    def override(self, **values) -> "ExperimentConfig":
        """Copy with fields replaced; string values are parsed by field type."""
        types = {f.name: f for f in fields(self)}
        parsed = {}
        for k, v in values.items():
            if v is None:
                continue
            if k not in types:
                raise ConfigError(f"unknown config key {k!r}")
            parsed[k] = _decode(k, v, getattr(self, k)) if isinstance(v, str) else _coerce(k, v, getattr(self, k))
        return replace(self, **parsed).validate()


def _encode(v) -> str:
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ", ".join(":".join(_encode(e) for e in pair) for pair in v)
        return ", ".join(_encode(e) for e in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _decode(key, text, current):
    try:
        if isinstance(current, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
        if isinstance(current, tuple):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            if key == "bounds":
                return tuple(tuple(float(e) for e in p.split(":")) for p in parts)
            if key == "seeds":
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        return text
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {text!r}") from None


def _coerce(key, v, current):
    if isinstance(current, tuple):
        if key == "bounds":
            return tuple(tuple(float(e) for e in p) for p in v)
        if key == "seeds":
            return tuple(int(e) for e in v)
        return tuple(float(e) for e in np.atleast_1d(v))
    return type(current)(v)


# presets ----------------------------------------------------------------------

_A_BOX = ((0.1, 3.0),)
_WEAK_BOX = ((0.01, 0.99),)
_STRONG_BOX = ((1.0, 1.99),)


def _linear(name, truth, initial, obs, t0=0.2, source="none"):
    return ExperimentConfig(preset=name, observation=obs, kind="strong", ell=1.0, T=5.0,
                            nt=2000, u0="cubic", source=source, family="a", alpha=1.0,
                            truth=(truth,), initial=(initial,), bounds=_A_BOX, t0=t0, weight="x")


def _power(name, kind, truth, initial, obs, ell=1.0):
    box = _WEAK_BOX if kind == "weak" else _STRONG_BOX
    return ExperimentConfig(preset=name, observation=obs, kind=kind, ell=ell, T=10.0, nt=4000,
                            u0="quartic", family="alpha", alpha=truth, truth=(truth,),
                            initial=(initial,), bounds=box, t0=0.2, weight="x2")


PRESETS = {
    "test1": _linear("test1", 1.7, 0.7, "interior"),
    "test2": _linear("test2", 1.0, 0.2, "interior"),
    "test3": _linear("test3", 0.2, 0.7, "interior"),
    "test4": _linear("test4", 1.7, 0.7, "interior", t0=0.4, source="2xt"),
    "test5": _linear("test5", 1.7, 0.7, "boundary"),
    "test6": _linear("test6", 1.0, 0.2, "boundary"),
    "test7": _linear("test7", 0.2, 0.7, "boundary"),
    "test8": _power("test8", "weak", 0.4, 0.8, "interior"),
    "test9": _power("test9", "strong", 1.3, 1.6, "interior"),
    "test10": _power("test10", "weak", 0.6, 0.2, "boundary"),
    "test11": _power("test11", "strong", 1.3, 1.6, "boundary", ell=0.99),
    "test12": _power("test12", "strong", 1.3, 1.6, "boundary"),
    "test13": ExperimentConfig(preset="test13", observation="boundary", kind="weak", ell=1.0,
                               T=5.0, nt=2000, u0="quartic", family="bc", alpha=0.6,
                               truth=(5.0, 1.5), initial=(1.0, 1.0),
                               bounds=((0.0, 10.0), (0.1, 5.0))),
    "test14": ExperimentConfig(preset="test14", observation="boundary", kind="weak", ell=1.0,
                               T=5.0, nt=2000, u0="quartic", family="bch", alpha=0.6,
                               truth=(4.0, 3.0, 1.0), initial=(3.5, 2.5, 0.5),
                               bounds=((0.0, 10.0), (0.0, 10.0), (0.1, 5.0))),
    "custom": ExperimentConfig(),
}


def preset_config(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _model(cfg: ExperimentConfig, params) -> DiffusionModel:
    params = tuple(float(p) for p in params)
    if cfg.family == "a":
        return DiffusionModel(cfg.alpha, ConstantProfile(params[0]))
    if cfg.family == "alpha":
        return DiffusionModel(params[0], ConstantProfile(1.0))
    if cfg.family == "bc":
        return DiffusionModel(cfg.alpha, AffineProfile(*params))
    return DiffusionModel(cfg.alpha, QuadraticProfile(*params))


def true_model(cfg: ExperimentConfig) -> DiffusionModel:
    return _model(cfg, cfg.truth)


def grid_of(cfg: ExperimentConfig) -> Grid:
    return Grid(cfg.ell, cfg.nx, cfg.T, cfg.nt)


def build_problem(cfg: ExperimentConfig) -> InverseProblemSpec:
    """Synthesize the noiseless target for cfg and wrap it as an inverse problem."""
    cfg = cfg.validate()
    grid = grid_of(cfg)
    u0 = INITIAL_DATA[cfg.u0]
    f = SOURCES[cfg.source]
    data_grid = grid.refined(cfg.refine_space, cfg.refine_time)
    obs = synthesize(true_model(cfg), cfg.kind, grid, u0, f, cfg.observation, t0=cfg.t0,
                     weight=cfg.weight, data_grid=data_grid, scheme=cfg.scheme)
    return InverseProblemSpec(
        base_model=_model(cfg, cfg.initial), free=FAMILIES[cfg.family], bounds=cfg.bounds,
        initial=cfg.initial, kind=cfg.kind, grid=grid, u0=u0, observation=obs, f=f,
        scheme=cfg.scheme,
    )
