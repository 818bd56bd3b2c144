"""
Pipeline configuration: one flat ``section.key = value`` file.

The file is read with python-dotenv, so comments, quoting and blank lines
follow the ``.env`` rules. Every key is backed by a field of a section
dataclass listed in ``SECTION_REGISTRY``; the same registry generates the
``--section.key`` command-line flags. Sensor rigs get one ``rigN`` section
each.

Precedence, lowest first: dataclass defaults, config file, environment
(``COURT_FUSION_OUTPUT_DIR`` only), command-line flags.
"""

from __future__ import annotations

import argparse
import os
import re
import types
from collections import defaultdict
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence, Union, get_args, get_origin, get_type_hints

import numpy as np
from dotenv import dotenv_values

from .detection.oracle import CameraNoiseModel, OracleNoiseModel
from .errors import ConfigurationError
from .fusion.matching import SearchConfig
from .fusion.runner import ReidConfig
from .geometry.bev import BevGrid
from .geometry.camera import DEFAULT_FOV_DEG, DEFAULT_IMAGE_SIZE, CameraModel
from .geometry.region import COURT_LENGTH, COURT_WIDTH, DEFAULT_Z_RANGE, CourtRegion
from .geometry.transforms import RigidTransform
from .metrics.matching import MatchingConfig
from .simulator.embeddings import EmbeddingModel
from .simulator.rigs import CameraSpec, LidarSpec, RigSpec, default_rigs
from .simulator.scenario import BodyModel, MotionModel, ScenarioConfig
from .tracking.tracker import TrackerConfig

OUTPUT_DIR_ENV = "COURT_FUSION_OUTPUT_DIR"
SCENARIO_FILE = "scenario.cfg"

_RIG_RE = re.compile(r"^rig(\d+)$")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


# ── Sections ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PathsSection:
    """Input layout (relative to ``input_dir``) and the output directory."""

    input_dir: str = "."
    clouds: str = "clouds"
    ground_truth: str = "gt.txt"
    camera_gt: str = "camera_gt"
    camera_detections: str = "camera_dets"
    embeddings: str = "embeddings.txt"
    detections: str = ""
    output_dir: str = "output"

    def resolve(self, name: str) -> Path | None:
        """Path of input *name*, or ``None`` when it is configured empty."""
        value = getattr(self, name)
        if not value:
            return None
        path = Path(value)
        return path if path.is_absolute() else Path(self.input_dir) / path


@dataclass(frozen=True)
class CourtSection:
    length: float = COURT_LENGTH
    width: float = COURT_WIDTH
    z_min: float = DEFAULT_Z_RANGE[0]
    z_max: float = DEFAULT_Z_RANGE[1]

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ConfigurationError("court length and width must be > 0")


@dataclass(frozen=True)
class BevSection:
    resolution: float = 0.05
    margin: float = 1.0

    def __post_init__(self):
        if self.margin < 0:
            raise ConfigurationError("bev.margin must be >= 0")


@dataclass(frozen=True)
class DetectorSection:
    """BEV detector choice plus the oracle noise parameters."""

    kind: str = "oracle"
    seed: int = 0
    position_sigma: float = 0.0
    size_jitter: float = 0.0
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    merge_distance: float = 0.0
    min_points: int = 10

    def noise(self) -> OracleNoiseModel:
        return OracleNoiseModel(
            self.position_sigma, self.size_jitter, self.miss_rate,
            self.false_positive_rate, self.merge_distance,
        )


@dataclass(frozen=True)
class CameraDetectorSection:
    seed: int = 0
    position_sigma: float = 0.0
    size_jitter: float = 0.0
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    min_visibility: float = 0.3
    merge_iou: float = 0.7

    def noise(self, body_height: float = 1.9) -> CameraNoiseModel:
        base = OracleNoiseModel(self.position_sigma, self.size_jitter, self.miss_rate, self.false_positive_rate)
        return CameraNoiseModel(base, self.min_visibility, self.merge_iou, body_height)


@dataclass(frozen=True)
class ReidSection:
    """Embedding source and remap policy.

    ``provider`` is ``synthetic`` (embeddings drawn from camera ground truth),
    ``file`` (``paths.embeddings``) or ``none``.
    """

    provider: str = "synthetic"
    key: str = "gt"
    scope: str = "all"
    min_cosine: float | None = None
    workers: int = 1
    seed: int = 0
    dim: int = 128
    base_sigma: float = 0.05
    visibility_gain: float = 2.0
    anchors: str = "random"

    def __post_init__(self):
        if self.provider not in ("synthetic", "file", "none"):
            raise ConfigurationError(f"unknown reid.provider '{self.provider}'")
        self.runner()
        self.embedding_model()

    def runner(self) -> ReidConfig:
        return ReidConfig(self.scope, self.min_cosine, self.workers)

    def embedding_model(self) -> EmbeddingModel:
        return EmbeddingModel(self.dim, self.base_sigma, self.visibility_gain, self.anchors)


@dataclass(frozen=True)
class MetricsSection:
    distance_threshold: float | None = None
    hota_sweep: bool = False

    def matching(self) -> MatchingConfig:
        return MatchingConfig(self.distance_threshold)


@dataclass(frozen=True)
class SimulatorSection:
    seed: int = 0
    player_count: int = 10
    duration_s: float = 20.0
    frame_rate: float = 10.0
    crossings: int = 0
    pass_through_s: float = 1.5
    lead_s: float = 4.0
    max_speed: float = 4.0
    max_accel: float = 5.0
    max_turn_rate_deg: float = 360.0
    body_radius: float = 0.30
    body_height: float = 1.90
    write_clouds: bool = True
    write_embeddings: bool = False
    lidar_h_resolution_deg: float = 0.18
    lidar_v_resolution_deg: float = 0.23
    lidar_h_fov_deg: float = 125.0
    lidar_v_fov_deg: float = 25.0
    lidar_max_range: float = 40.0
    lidar_range_noise: float = 0.02

    def lidar(self) -> LidarSpec:
        return LidarSpec(
            self.lidar_h_resolution_deg, self.lidar_v_resolution_deg,
            self.lidar_h_fov_deg, self.lidar_v_fov_deg,
            self.lidar_max_range, self.lidar_range_noise,
        )

    def body(self) -> BodyModel:
        return BodyModel(self.body_radius, self.body_height)


@dataclass(frozen=True)
class OutputSection:
    snapshot_frames: tuple[int, ...] = ()
    write_patches: bool = True


@dataclass(frozen=True)
class SuiteSection:
    """Scripted-crossing comparison of LiDAR-only and fused tracking."""

    scenarios: int = 20
    min_crossings: int = 2
    max_crossings: int = 4
    workers: int = 4
    seed: int = 0
    merge_distance: float = 0.8
    anchors: str = "orthogonal"

    def __post_init__(self):
        if self.scenarios < 1 or self.workers < 1:
            raise ConfigurationError("suite.scenarios and suite.workers must be >= 1")
        if not 0 <= self.min_crossings <= self.max_crossings:
            raise ConfigurationError("suite crossings must satisfy 0 <= min_crossings <= max_crossings")


@dataclass(frozen=True)
class RigSection:
    """One LiDAR + camera mount.

    ``lidar_rotation`` (row-major 3x3) and ``lidar_translation`` override the
    LiDAR pose derived from ``position``/``yaw_deg``/``lidar_pitch_deg``.
    """

    position: tuple[float, ...] = ()
    yaw_deg: float = 0.0
    lidar_pitch_deg: float = -5.0
    camera_pitch_deg: float = -10.0
    lidar_rotation: tuple[float, ...] = ()
    lidar_translation: tuple[float, ...] = ()
    image_size: tuple[int, ...] = DEFAULT_IMAGE_SIZE
    fov_deg: tuple[float, ...] = DEFAULT_FOV_DEG

    def __post_init__(self):
        if len(self.position) != 3:
            raise ConfigurationError("rig position needs three values x,y,z")
        if len(self.image_size) != 2 or len(self.fov_deg) != 2:
            raise ConfigurationError("rig image_size and fov_deg need two values each")
        if self.lidar_rotation and len(self.lidar_rotation) != 9:
            raise ConfigurationError("rig lidar_rotation needs nine values (row-major 3x3)")
        if self.lidar_translation and len(self.lidar_translation) != 3:
            raise ConfigurationError("rig lidar_translation needs three values")

    @classmethod
    def from_spec(cls, rig: RigSpec) -> "RigSection":
        return cls(
            tuple(rig.position), rig.yaw_deg, rig.lidar_pitch_deg, rig.camera_pitch_deg,
            image_size=tuple(rig.camera.image_size), fov_deg=tuple(rig.camera.fov_deg),
        )

    def spec(self, name: str, lidar: LidarSpec | None = None) -> RigSpec:
        camera = CameraSpec(tuple(self.image_size), tuple(self.fov_deg))
        return RigSpec(
            name, tuple(self.position), self.yaw_deg, self.lidar_pitch_deg,
            self.camera_pitch_deg, lidar or LidarSpec(), camera,
        )

    def lidar_pose(self, name: str) -> RigidTransform:
        if not self.lidar_rotation:
            return self.spec(name).lidar_pose()
        translation = self.lidar_translation or self.position
        return RigidTransform(np.asarray(self.lidar_rotation, dtype=np.float64).reshape(3, 3),
                              np.asarray(translation, dtype=np.float64))


@dataclass
class SectionSpec:
    """One configuration section.

    Attributes:
        name: Key prefix in the config file and on the command line.
        schema: Dataclass whose fields are the section's keys.
        description: One-line help shown in the flag group.
    """

    name: str
    schema: type
    description: str = ""


SECTION_REGISTRY: list[SectionSpec] = [
    SectionSpec("paths", PathsSection, "input layout and output directory"),
    SectionSpec("court", CourtSection, "court rectangle and height band"),
    SectionSpec("bev", BevSection, "BEV grid"),
    SectionSpec("detector", DetectorSection, "BEV detector"),
    SectionSpec("camera_detector", CameraDetectorSection, "simulated image detector"),
    SectionSpec("tracker", TrackerConfig, "two-stage BEV tracker"),
    SectionSpec("search", SearchConfig, "camera frame search gates"),
    SectionSpec("reid", ReidSection, "appearance re-identification"),
    SectionSpec("metrics", MetricsSection, "evaluation"),
    SectionSpec("simulator", SimulatorSection, "synthetic scenario"),
    SectionSpec("output", OutputSection, "optional outputs"),
    SectionSpec("suite", SuiteSection, "crossing suite"),
]

_SECTIONS = {spec.name: spec for spec in SECTION_REGISTRY}


def _hints(schema: type) -> dict[str, Any]:
    hints = get_type_hints(schema)
    return {f.name: hints[f.name] for f in fields(schema)}


# ── Value coercion ───────────────────────────────────────────────────────────

def _coerce(raw: str, hint: Any, key: str) -> Any:
    text = raw.strip()
    origin = get_origin(hint)
    try:
        if origin in (Union, types.UnionType):
            if text.lower() in ("", "none"):
                return None
            inner = [a for a in get_args(hint) if a is not type(None)]
            return _coerce(text, inner[0], key)
        if origin is tuple:
            args = get_args(hint)
            parts = [p.strip() for p in text.split(",") if p.strip()]
            if args and args[-1] is not Ellipsis and len(parts) != len(args):
                raise ValueError(f"expected {len(args)} comma-separated values")
            item_types = [args[0]] * len(parts) if args and args[-1] is Ellipsis else list(args)
            return tuple(_coerce(p, t, key) for p, t in zip(parts, item_types))
        if hint is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError("expected true or false")
        if hint in (int, float, str):
            return hint(text)
    except ValueError as exc:
        raise ConfigurationError(f"{key}: cannot read '{raw}' ({exc})") from exc
    raise ConfigurationError(f"{key}: unsupported field type {hint!r}")


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if not text or any(c.isspace() or c == "#" for c in text):
        return '"' + text.replace('"', '\\"') + '"'
    return text


def _build(schema: type, raw: Mapping[str, str], prefix: str) -> Any:
    hints = _hints(schema)
    kwargs = {}
    for name, value in raw.items():
        if name not in hints:
            raise ConfigurationError(f"unknown configuration key '{prefix}.{name}'")
        kwargs[name] = _coerce(value, hints[name], f"{prefix}.{name}")
    try:
        return schema(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"section '{prefix}': {exc}") from exc


# ── PipelineConfig ───────────────────────────────────────────────────────────

def _rig_order(name: str) -> int:
    return int(_RIG_RE.match(name).group(1))


@dataclass(frozen=True)
class PipelineConfig:
    paths: PathsSection = field(default_factory=PathsSection)
    court: CourtSection = field(default_factory=CourtSection)
    bev: BevSection = field(default_factory=BevSection)
    detector: DetectorSection = field(default_factory=DetectorSection)
    camera_detector: CameraDetectorSection = field(default_factory=CameraDetectorSection)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    reid: ReidSection = field(default_factory=ReidSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    simulator: SimulatorSection = field(default_factory=SimulatorSection)
    output: OutputSection = field(default_factory=OutputSection)
    suite: SuiteSection = field(default_factory=SuiteSection)
    rigs: Mapping[str, RigSection] = field(default_factory=dict)

    # Derived domain objects

    def region(self) -> CourtRegion:
        return CourtRegion.rectangle(0.0, 0.0, self.court.length, self.court.width,
                                     (self.court.z_min, self.court.z_max))

    def grid(self) -> BevGrid:
        m = self.bev.margin
        return BevGrid.covering(
            (self.court.length + 2 * m, self.court.width + 2 * m), self.bev.resolution, (-m, -m)
        )

    def frame_period(self) -> float:
        return 1.0 / self.simulator.frame_rate

    def require_rigs(self) -> list[str]:
        if not self.rigs:
            raise ConfigurationError(
                "no rig calibration configured (add rig1.position = x,y,z ... or point at a simulated directory)"
            )
        return sorted(self.rigs, key=_rig_order)

    def rig_specs(self) -> tuple[RigSpec, ...]:
        """Configured rigs, or the default three-unit layout when none is configured."""
        lidar = self.simulator.lidar()
        if not self.rigs:
            return default_rigs(lidar)
        return tuple(self.rigs[name].spec(name, lidar) for name in self.require_rigs())

    def lidar_poses(self) -> list[RigidTransform]:
        return [self.rigs[name].lidar_pose(name) for name in self.require_rigs()]

    def cameras(self) -> list[CameraModel]:
        return [self.rigs[name].spec(name).camera_model() for name in self.require_rigs()]

    def scenario_config(self) -> ScenarioConfig:
        sim = self.simulator
        motion = MotionModel(
            max_speed=sim.max_speed,
            cruise_speed=(min(1.0, sim.max_speed), min(3.0, sim.max_speed)),
            max_accel=sim.max_accel,
            max_turn_rate_deg=sim.max_turn_rate_deg,
        )
        return ScenarioConfig(
            player_count=sim.player_count,
            duration_s=sim.duration_s,
            frame_rate=sim.frame_rate,
            court_length=self.court.length,
            court_width=self.court.width,
            motion=motion,
            body=sim.body(),
            rigs=self.rig_specs(),
        )

    # Serialization

    def sections(self) -> list[tuple[str, Any]]:
        out = [(spec.name, getattr(self, spec.name)) for spec in SECTION_REGISTRY]
        out.extend((name, self.rigs[name]) for name in sorted(self.rigs, key=_rig_order))
        return out

    def to_lines(self) -> list[str]:
        lines = []
        for name, section in self.sections():
            lines.append(f"# {name}")
            for f in fields(section):
                lines.append(f"{name}.{f.name} = {format_value(getattr(section, f.name))}")
            lines.append("")
        return lines

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return {
            name: {f.name: getattr(section, f.name) for f in fields(section)}
            for name, section in self.sections()
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()), encoding="utf-8")
        return path


def with_rigs(cfg: PipelineConfig, rigs: Sequence[RigSpec]) -> PipelineConfig:
    """Copy of *cfg* whose rig sections describe *rigs*."""
    return replace(cfg, rigs={r.name: RigSection.from_spec(r) for r in rigs})


# ── Loading ──────────────────────────────────────────────────────────────────

def _place(values: dict[str, dict[str, str]], key: str, raw: str | None, source: str) -> None:
    section, _, name = key.partition(".")
    if not name:
        raise ConfigurationError(f"{source}: key '{key}' is not of the form section.key")
    if section not in _SECTIONS and not _RIG_RE.match(section):
        raise ConfigurationError(f"{source}: unknown configuration section '{section}' (key '{key}')")
    if raw is None:
        raise ConfigurationError(f"{source}: key '{key}' has no value")
    values[section][name] = raw


def read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    return dict(dotenv_values(path))


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, str] | None = None,
    environ: Mapping[str, str] | None = None,
) -> PipelineConfig:
    """Resolve defaults, *path*, the environment and *overrides* into a config."""
    environ = os.environ if environ is None else environ
    values: dict[str, dict[str, str]] = defaultdict(dict)
    if path is not None:
        for key, raw in read_config_file(path).items():
            _place(values, key, raw, str(path))
    if environ.get(OUTPUT_DIR_ENV):
        values["paths"]["output_dir"] = environ[OUTPUT_DIR_ENV]
    for key, raw in (overrides or {}).items():
        _place(values, key, raw, "command line")

    built: dict[str, Any] = {}
    for spec in SECTION_REGISTRY:
        built[spec.name] = _build(spec.schema, values.get(spec.name, {}), spec.name)
    rigs = {
        name: _build(RigSection, raw, name)
        for name, raw in sorted(values.items(), key=lambda kv: kv[0])
        if _RIG_RE.match(name)
    }
    return PipelineConfig(**built, rigs=rigs)


# ── Command-line flags ───────────────────────────────────────────────────────

def _metavar(hint: Any) -> str:
    origin = get_origin(hint)
    if origin is tuple:
        return "A,B,..."
    if origin in (Union, types.UnionType):
        return _metavar([a for a in get_args(hint) if a is not type(None)][0])
    return getattr(hint, "__name__", "VALUE").upper()


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """Add one ``--section.key`` flag per registered field (``rigN`` flags are free-form)."""
    for spec in SECTION_REGISTRY:
        group = parser.add_argument_group(f"{spec.name} ({spec.description})")
        for name, hint in _hints(spec.schema).items():
            group.add_argument(
                f"--{spec.name}.{name}", dest=f"{spec.name}.{name}",
                default=None, metavar=_metavar(hint),
            )


def collect_overrides(args: argparse.Namespace, extra: Sequence[str] = ()) -> dict[str, str]:
    """Dotted flags that were given on the command line, including ``--rigN.key``."""
    overrides = {k: v for k, v in vars(args).items() if "." in k and v is not None}
    extra = list(extra)
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--") or "." not in token:
            raise ConfigurationError(f"unrecognized argument '{token}'")
        key, eq, value = token[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise ConfigurationError(f"flag '{token}' needs a value")
            value = extra[i + 1]
            i += 1
        if not _RIG_RE.match(key.partition(".")[0]):
            raise ConfigurationError(f"unrecognized argument '{token}'")
        overrides[key] = value
        i += 1
    return overrides
