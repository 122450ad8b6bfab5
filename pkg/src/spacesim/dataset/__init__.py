"""On-disk dataset: binary formats, scene directories, statistics and validation."""

from .analyze import EmptyDatasetError, StatsReport, TaskStats, analyze_dataset, validate_dataset, validate_scene
from .formats import (
    DatasetError,
    MagicError,
    SchemaError,
    SizeMismatchError,
    VersionError,
    read_flo,
    read_pfm,
    read_pgm,
    read_trajectory,
    write_flo,
    write_pfm,
    write_pgm,
    write_trajectory,
)
from .scene import build_manifest, generate_scene, read_manifest, read_scene, run_scene, write_scene
