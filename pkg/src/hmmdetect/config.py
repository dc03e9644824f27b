"""JSON run configuration with embedded defaults.

An empty document ``{}`` runs the standard experiment. Every section is
optional; unknown keys are rejected so typos surface as errors naming the
offending field. Parameters are re-validated through the owning module's
constructors at load time.
"""
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .detection import RULES, CostModel, normalize_rule
from .hmm_filter import BOUNDARY_MODES, TransitionModel
from .morphology import StructuringElement

SCHEMA_VERSION = 1

# patch offsets by name, (dx, dy) with dy = -1 the row above
PATCH_NAMES = {
    "self": (0, 0), "left": (-1, 0), "right": (1, 0),
    "up_left": (-1, -1), "up": (0, -1), "up_right": (1, -1),
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


@dataclass
class MorphologyConfig:
    size: int = 3
    mask: list = None     # optional explicit 0/1 mask overriding ``size``

    def build(self):
        if self.mask is not None:
            return StructuringElement.from_mask(self.mask)
        return StructuringElement.square(self.size)


@dataclass
class TransitionConfig:
    # relative weights; scaled to sum to 1 - p_death
    patch: dict = field(default_factory=lambda: {
        "self": 0.7, "left": 0.1, "right": 0.1,
        "up_left": 0.0333, "up": 0.0333, "up_right": 0.0333})
    p_birth: float = 0.05
    p_death: float = 0.05
    boundary: str = "exit"

    def build(self):
        weights = {}
        for name, v in self.patch.items():
            if name not in PATCH_NAMES:
                raise ConfigError(f"transition.patch.{name}",
                                  f"unknown offset; expected one of {sorted(PATCH_NAMES)}")
            weights[PATCH_NAMES[name]] = float(v)
        return TransitionModel.from_weights(weights, p_birth=self.p_birth,
                                            p_death=self.p_death, boundary=self.boundary)


@dataclass
class DetectionConfig:
    rules: list = field(default_factory=lambda: list(RULES))
    # partial documents override individual rules
    thresholds: dict = field(default_factory=lambda: {"isd": 0.9974, "g1": 0.53, "g2": 0.21},
                             metadata={"merge": True})


@dataclass
class CostConfig:
    delay: float = 1.0     # every pixel entry of c_bar1
    c2: float = 9.0
    w: float = 0.0


@dataclass
class OracleConfig:
    width: int = 2
    height: int = 1
    resolution: int = 50
    alphabet_size: int = 3
    correct: float = 0.6
    # the oracle's own motion model: uniform patch, no deaths
    p_birth: float = 0.05
    p_death: float = 0.0
    boundary: str = "renormalize"
    tol: float = 1e-10
    max_sweeps: int = 20000
    trials: int = 10000
    concavity_pairs: int = 10000
    policy_trials: int = 200
    seed: int = 0


@dataclass
class SuiteConfig:
    master_seed: int = 2024
    width: int = 64
    height: int = 48
    frame_count: int = 150


@dataclass
class EvaluationConfig:
    radius: int = 2
    zfa_mode: str = "first_crossing"
    plot: bool = False


@dataclass
class PipelineConfig:
    schema_version: int = SCHEMA_VERSION
    morphology: MorphologyConfig = field(default_factory=MorphologyConfig)
    transition: TransitionConfig = field(default_factory=TransitionConfig)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    cost: CostConfig = field(default_factory=CostConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    out: str = "out"
    workers: int = 1

    # ---------------------------------------------------------------- build

    def structuring_element(self):
        return _wrap("morphology", self.morphology.build)

    def transition_model(self):
        return _wrap("transition", self.transition.build)

    def cost_model(self, width, height):
        c = self.cost
        return _wrap("cost", lambda: CostModel.uniform(width, height, c.delay, c.c2, c.w))

    def oracle_transition_model(self):
        o = self.oracle
        return _wrap("oracle", lambda: TransitionModel.from_weights(
            p_birth=o.p_birth, p_death=o.p_death, boundary=o.boundary))

    def rules(self):
        return [normalize_rule(r) for r in self.detection.rules]

    def threshold(self, rule):
        return float(self.detection.thresholds[normalize_rule(rule)])

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {self.schema_version!r}, "
                                                f"expected {SCHEMA_VERSION}")
        self.structuring_element()
        self.transition_model()
        if self.transition.boundary not in BOUNDARY_MODES:
            raise ConfigError("transition.boundary", f"must be one of {BOUNDARY_MODES}")
        if not self.detection.rules:
            raise ConfigError("detection.rules", "at least one rule is required")
        for r in self.detection.rules:
            _wrap("detection.rules", lambda: normalize_rule(r))
        for k, v in self.detection.thresholds.items():
            _wrap(f"detection.thresholds.{k}", lambda: normalize_rule(k))
            _number(f"detection.thresholds.{k}", v)
        for r in self.rules():
            if r not in self.detection.thresholds:
                raise ConfigError(f"detection.thresholds.{r}",
                                  "missing threshold for selected rule")
        self.cost_model(1, 1)
        o = self.oracle
        if o.width * o.height > 3 or o.width < 1 or o.height < 1:
            raise ConfigError("oracle.width", "oracle image must have 1 to 3 pixels")
        for name in ("resolution", "alphabet_size", "max_sweeps", "trials", "policy_trials"):
            if getattr(o, name) < 1:
                raise ConfigError(f"oracle.{name}", "must be >= 1")
        if o.alphabet_size < 2:
            raise ConfigError("oracle.alphabet_size", "need at least two symbols")
        if not 0.0 <= o.correct <= 1.0:
            raise ConfigError("oracle.correct", "must lie in [0, 1]")
        self.oracle_transition_model()
        if not o.tol > 0:
            raise ConfigError("oracle.tol", "must be positive")
        s = self.suite
        if s.width < 16 or s.height < 16:
            raise ConfigError("suite.width", "suite frames must be at least 16x16")
        if s.frame_count < 100:
            raise ConfigError("suite.frame_count", "must be >= 100 (onsets fall in frames 50-89)")
        if not 0 <= s.master_seed < 2 ** 64:
            raise ConfigError("suite.master_seed", "must be an unsigned 64-bit integer")
        if self.evaluation.radius < 0:
            raise ConfigError("evaluation.radius", "must be >= 0")
        if self.evaluation.zfa_mode not in ("first_crossing", "supremum"):
            raise ConfigError("evaluation.zfa_mode", "must be 'first_crossing' or 'supremum'")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        return self

    # -------------------------------------------------------------- (de)ser

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        cfg = _fill(cls, doc, "")
        return cfg.validate()


def _fill(cls, doc, prefix):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, val in doc.items():
        path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(path, "unknown field")
        default = known[key].default_factory() if callable(known[key].default_factory) \
            else known[key].default
        if is_dataclass(default):
            if not isinstance(val, dict):
                raise ConfigError(path, "expected an object")
            kwargs[key] = _fill(type(default), val, path + ".")
        else:
            kwargs[key] = _coerce(path, val, default)
            if known[key].metadata.get("merge"):
                kwargs[key] = {**default, **kwargs[key]}
    return cls(**kwargs)


def _coerce(path, val, default):
    if default is None or val is None:
        return val
    if isinstance(default, bool):
        if not isinstance(val, bool):
            raise ConfigError(path, "expected true or false")
        return val
    if isinstance(default, int):
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(path, f"expected an integer, got {val!r}")
        return val
    if isinstance(default, float):
        return _number(path, val)
    if isinstance(default, str):
        if not isinstance(val, str):
            raise ConfigError(path, f"expected a string, got {val!r}")
        return val
    if isinstance(default, list):
        if not isinstance(val, list):
            raise ConfigError(path, "expected a list")
        return val
    if isinstance(default, dict):
        if not isinstance(val, dict):
            raise ConfigError(path, "expected an object")
        for k, v in val.items():
            _number(f"{path}.{k}", v)
        return dict(val)
    return val


def _number(path, val):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {val!r}")
    return float(val)


def _wrap(path, fn):
    try:
        return fn()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def load_config(path=None):
    """Read a config file; ``None`` gives the embedded defaults."""
    if path is None:
        return PipelineConfig().validate()
    text = Path(path).read_text()
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return PipelineConfig.from_dict(doc)
