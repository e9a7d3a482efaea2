"""Run configuration: strict parsing of TOML documents and flat metadata output."""
from __future__ import annotations

import math
import sys
from dataclasses import MISSING, asdict, dataclass, field, fields, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

MODEL_NAMES = ("damped_ho", "forced_ho", "duffing")
RUN_STEPPERS = ("qsd", "qj", "qj_diffusive", "master")
OUTPUT_FORMATS = ("trajectory", "jumps", "poincare", "summary")
# sections that metadata documents carry but configs never read back
IGNORED_SECTIONS = ("meta", "result")


@dataclass(frozen=True)
class ModelSection:
    name: str
    omega: float = 1.0
    gamma: float = 1.0
    nbar: float = 0.0
    force: float = 0.0
    beta: float = 1.0
    damping: float = 0.125
    drive_amplitude: float = 0.3
    drive_frequency: float = 1.0


@dataclass(frozen=True)
class InitialSection:
    alpha_re: float = 0.0
    alpha_im: float = 0.0


@dataclass(frozen=True)
class RunSection:
    stepper: str
    t_final: float
    dim: int = 30
    dt: float = 1e-3
    sample_every: int = 1
    n_traj: int = 1
    seed: int = 0
    checkpoints: tuple = ()
    scheme: str = "em"


@dataclass(frozen=True)
class FrameSection:
    enabled: bool = False
    frame_dim: int = 20
    recenter_threshold: float = 0.1


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: tuple = OUTPUT_FORMATS
    poincare_skip_periods: float = 20.0


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection
    run: RunSection
    initial: InitialSection = field(default_factory=InitialSection)
    frame: FrameSection = field(default_factory=FrameSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def alpha0(self):
        return complex(self.initial.alpha_re, self.initial.alpha_im)

    def to_flat(self):
        """Every field, defaults included, as {"section.key": value}."""
        out = {}
        for sec in fields(self):
            for key, value in asdict(getattr(self, sec.name)).items():
                out[f"{sec.name}.{key}"] = value
        return out


SECTIONS = {"model": ModelSection, "initial": InitialSection, "run": RunSection,
            "frame": FrameSection, "output": OutputSection}
# model keys that only make sense for a given model family
HO_KEYS = {"omega", "gamma", "nbar", "force"}
DUFFING_KEYS = {"beta", "damping", "drive_amplitude", "drive_frequency"}


def _coerce(key, kind, value):
    if kind in ("float", float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
        return value
    if kind in ("int", int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if kind in ("bool", bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true or false, got {value!r}")
        return value
    if kind in ("str", str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if kind in ("tuple", tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return tuple(value)
    raise AssertionError(kind)


def _section(name, cls, table):
    if not isinstance(table, dict):
        raise ConfigError(name, "expected a table")
    known = {f.name: f for f in fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
    kwargs = {}
    for fname, f in known.items():
        key = f"{name}.{fname}"
        if fname in table:
            kwargs[fname] = _coerce(key, f.type, table[fname])
        elif f.default is MISSING and f.default_factory is MISSING:
            raise ConfigError(key, "missing required key")
    return cls(**kwargs)


def _validate(cfg):
    m, r, fr, o = cfg.model, cfg.run, cfg.frame, cfg.output

    def need(ok, key, message):
        if not ok:
            raise ConfigError(key, message)

    need(m.name in MODEL_NAMES, "model.name", f"must be one of {MODEL_NAMES}")
    need(m.gamma >= 0, "model.gamma", "must be >= 0")
    need(m.nbar >= 0, "model.nbar", "must be >= 0")
    need(m.beta > 0, "model.beta", "must be > 0")
    need(m.damping >= 0, "model.damping", "must be >= 0")
    need(m.drive_frequency > 0, "model.drive_frequency", "must be > 0")
    need(r.stepper in RUN_STEPPERS, "run.stepper", f"must be one of {RUN_STEPPERS}")
    need(r.dim >= 2, "run.dim", "must be >= 2")
    need(r.dt > 0, "run.dt", "must be > 0")
    need(r.t_final >= 0, "run.t_final", "must be >= 0")
    need(r.sample_every >= 1, "run.sample_every", "must be >= 1")
    need(r.n_traj >= 1, "run.n_traj", "must be >= 1")
    need(r.seed >= 0, "run.seed", "must be >= 0")
    need(r.scheme in ("em", "cayley"), "run.scheme", "must be em or cayley")
    for t in r.checkpoints:
        need(_is_number(t) and 0 <= t <= r.t_final,
             "run.checkpoints", f"checkpoint {t!r} outside [0, t_final]")
    if r.stepper == "master":
        need(r.n_traj == 1, "run.n_traj", "master runs are deterministic; n_traj must be 1")
        need(not fr.enabled, "frame.enabled", "the master equation has no moving-frame mode")
    need(fr.frame_dim >= 2, "frame.frame_dim", "must be >= 2")
    need(fr.recenter_threshold >= 0, "frame.recenter_threshold", "must be >= 0")
    if fr.enabled:
        need(not r.checkpoints, "run.checkpoints", "checkpoint density matrices need a lab-frame run")
    for f in o.formats:
        need(f in OUTPUT_FORMATS, "output.formats", f"unknown format {f!r}; expected {OUTPUT_FORMATS}")
    need(o.poincare_skip_periods >= 0, "output.poincare_skip_periods", "must be >= 0")


def from_tables(doc):
    for key in doc:
        if key not in SECTIONS and key not in IGNORED_SECTIONS:
            raise ConfigError(key, "unknown section")
    for name in ("model", "run"):
        if name not in doc:
            raise ConfigError(name, "missing required section")
    parts = {name: _section(name, cls, doc.get(name, {})) for name, cls in SECTIONS.items()}
    cfg = RunConfig(**parts)
    mkeys = set(doc["model"]) - {"name"}
    family = DUFFING_KEYS if cfg.model.name == "duffing" else HO_KEYS
    for key in sorted(mkeys - family):
        raise ConfigError(f"model.{key}", f"not a parameter of {cfg.model.name}")
    _validate(cfg)
    return replace(cfg, run=replace(cfg.run, checkpoints=tuple(float(t) for t in cfg.run.checkpoints)))


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_config(text):
    """Parse and validate a TOML document (nested tables or dotted keys)."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<document>", str(exc).replace("\n", " ")) from exc
    return from_tables(doc)


def parse_value(text):
    """A command-line override value: TOML literal if it parses, else a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg, overrides):
    """Re-validate ``cfg`` with {"section.key": value} replacements."""
    doc = {}
    for key, value in cfg.to_flat().items():
        sec, name = key.split(".", 1)
        doc.setdefault(sec, {})[name] = list(value) if isinstance(value, tuple) else value
    # family-specific model keys are re-added only when explicitly set
    family = DUFFING_KEYS if doc["model"]["name"] == "duffing" else HO_KEYS
    for key in list(doc["model"]):
        if key != "name" and key not in family:
            del doc["model"][key]
    for key, value in overrides.items():
        if "." not in key:
            raise ConfigError(key, "override keys take the form section.key")
        sec, name = key.split(".", 1)
        if sec not in SECTIONS:
            raise ConfigError(key, "unknown section")
        doc.setdefault(sec, {})[name] = value
    if overrides.get("model.name") is not None:
        family = DUFFING_KEYS if doc["model"]["name"] == "duffing" else HO_KEYS
        for key in list(doc["model"]):
            if key != "name" and key not in family and f"model.{key}" not in overrides:
                del doc["model"][key]
    return from_tables(doc)


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def dump_flat(items):
    """Flat key-value TOML: one ``section.key = value`` line per entry."""
    return "".join(f"{key} = {_toml_value(value)}\n" for key, value in items.items())


def metadata_document(cfg, extra):
    """Resolved config plus ``extra`` (keys under the ignored sections)."""
    items = {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.to_flat().items()}
    family = DUFFING_KEYS if cfg.model.name == "duffing" else HO_KEYS
    items = {k: v for k, v in items.items()
             if not k.startswith("model.") or k == "model.name" or k.split(".", 1)[1] in family}
    items.update(extra)
    return dump_flat(items)
