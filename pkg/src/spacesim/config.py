"""Run configuration: declared defaults for sizes, materials, solver, labels and camera.

The on-disk format is TOML. ``RunConfig.text`` keeps the exact text a config
was parsed from so it can be echoed verbatim into scene manifests.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

FPS = 50
FRAME_COUNT = 150
FRAME_DT = 1.0 / FPS
PROBE_SPEED = 1.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeSizes:
    tessellation: int = 16
    density: float = 1000.0
    sphere_radius: float = 0.15
    cube_half_extent: float = 0.14
    cylinder_radius: float = 0.1
    cylinder_height: float = 0.3
    cone_radius: float = 0.15
    cone_height: float = 0.3
    torus_major_radius: float = 0.12
    torus_minor_radius: float = 0.05


@dataclass(frozen=True)
class HolderSizes:
    tessellation: int = 24
    box_half_x: float = 0.4
    box_half_y: float = 0.4
    box_depth: float = 0.5
    box_wall: float = 0.04
    glass_radius: float = 0.25
    glass_depth: float = 0.5
    glass_wall: float = 0.03
    mug_radius: float = 0.25
    mug_depth: float = 0.45
    mug_wall: float = 0.03
    mug_handle_reach: float = 0.12
    pot_radius: float = 0.4
    pot_depth: float = 0.35
    pot_wall: float = 0.04
    wine_bowl_top_radius: float = 0.3
    wine_bowl_bottom_radius: float = 0.12
    wine_bowl_depth: float = 0.35
    wine_stem_height: float = 0.3
    wine_stem_radius: float = 0.03
    wine_base_radius: float = 0.22
    wine_wall: float = 0.03
    floor_thickness: float = 0.05


@dataclass(frozen=True)
class MaterialConfig:
    friction: float = 0.5
    restitution: float = 0.1
    ground_friction: float = 0.5
    ground_restitution: float = 0.1
    holder_friction: float = 0.5
    holder_restitution: float = 0.1


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-step solver settings. ``substeps`` per 1/50 s frame."""

    gravity: float = -9.81
    substeps: int = 4
    velocity_iterations: int = 20
    baumgarte: float = 0.2
    slop: float = 0.001
    restitution_threshold: float = 0.25
    sleep_linear: float = 1e-3
    sleep_angular: float = 1e-2
    sleep_time: float = 0.25
    epa_max_iterations: int = 64

    def __post_init__(self):
        for name in ("substeps", "velocity_iterations", "baumgarte", "slop",
                     "sleep_linear", "sleep_angular", "sleep_time", "epa_max_iterations"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"solver.{name} must be positive")

    @property
    def dt(self) -> float:
        return FRAME_DT / self.substeps


@dataclass(frozen=True)
class LabelConfig:
    stability_angle_threshold: float = 0.175
    contact_displacement_threshold: float = 0.01
    settle_delay: float = 0.2
    contact_settle_frame: int = 10
    height_tolerance: float = 0.1

    def __post_init__(self):
        if self.stability_angle_threshold <= 0 or self.contact_displacement_threshold <= 0:
            raise ConfigError("label thresholds must be positive")


@dataclass(frozen=True)
class CameraConfig:
    width: int = 160
    height: int = 120
    fx: float = 100.0
    fy: float = 100.0
    cx: float = 80.0
    cy: float = 60.0
    distance: float = 5.0
    elevation_deg: float = 35.0
    azimuth_deg: float = -90.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("camera focal lengths must be positive")


@dataclass(frozen=True)
class ScenegenConfig:
    containment_base_height: float = 3.0
    stability_base_height: float = 1.0
    height_step: float = 0.5
    stability_offsets: tuple = (0.3, 0.2, 0.1, 0.0, -0.1, -0.2, -0.3)
    grid_cells: int = 6
    grid_pitch: float = 1.0
    probe_radius: float = 0.15
    probe_lane_occupied_probability: float = 0.7
    release_spin: float = 0.1
    max_placement_tries: int = 100


_SECTIONS = {
    "shapes": ShapeSizes,
    "holders": HolderSizes,
    "materials": MaterialConfig,
    "solver": SolverConfig,
    "labels": LabelConfig,
    "camera": CameraConfig,
    "scenegen": ScenegenConfig,
}


@dataclass(frozen=True)
class RunConfig:
    shapes: ShapeSizes = field(default_factory=ShapeSizes)
    holders: HolderSizes = field(default_factory=HolderSizes)
    materials: MaterialConfig = field(default_factory=MaterialConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    labels: LabelConfig = field(default_factory=LabelConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    scenegen: ScenegenConfig = field(default_factory=ScenegenConfig)
    text: str = field(default="", compare=False, repr=False)

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config is not valid TOML: {exc}") from exc
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        parts = {}
        for name, klass in _SECTIONS.items():
            values = dict(data.get(name, {}))
            known = {f.name: f for f in dataclasses.fields(klass)}
            extra = set(values) - set(known)
            if extra:
                raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
            for key, value in values.items():
                default = known[key].default
                if isinstance(default, tuple):
                    values[key] = tuple(float(v) for v in value)
                elif isinstance(default, bool):
                    values[key] = bool(value)
                elif isinstance(default, int):
                    if int(value) != value:
                        raise ConfigError(f"[{name}].{key} must be an integer")
                    values[key] = int(value)
                else:
                    values[key] = float(value)
            parts[name] = klass(**values)
        return cls(**parts, text=text)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "RunConfig":
        if path is None:
            return cls.default()
        return cls.from_toml(Path(path).read_text())

    @classmethod
    def default(cls) -> "RunConfig":
        return cls.from_toml(default_config_text())

    def as_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            section = dataclasses.asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in section.items()}
        return out


def default_config_text() -> str:
    return resources.files("spacesim").joinpath("default_config.toml").read_text()
