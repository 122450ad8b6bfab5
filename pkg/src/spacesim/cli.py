"""Command-line entry point: generate, replay, analyze, validate.

Exit codes: 0 success, 2 validation failure, 1 runtime error. Errors are
written to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from multiprocessing import Pool
from pathlib import Path

from .config import ConfigError, RunConfig
from .dataset import formats as F
from .dataset.analyze import EmptyDatasetError, analyze_dataset, validate_dataset
from .dataset.scene import config_from_manifest, generate_scene, read_scene, run_scene, scene_dirs
from .scenegen import TASKS, ScenarioSpec

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INVALID = 2


def emit_error(code: str, message: str, **extra):
    print(json.dumps({"level": "error", "code": code, "message": message, **extra}, sort_keys=True),
          file=sys.stderr)


def _generate_job(args):
    task, seed, index, global_index, config_text, out, maps = args
    config = RunConfig.from_toml(config_text)
    return str(generate_scene(task, seed, index, global_index, config, out, maps))


def cmd_generate(ns) -> int:
    config = RunConfig.load(ns.config)
    tasks = [t.value for t in TASKS] if ns.task == "all" else [ns.task]
    jobs = []
    for ti, task in enumerate(tasks):
        for i in range(ns.count):
            jobs.append((task, ns.seed, i, ti * ns.count + i, config.text, ns.out, ns.maps == "on"))
    Path(ns.out).mkdir(parents=True, exist_ok=True)
    if ns.jobs > 1:
        with Pool(ns.jobs) as pool:
            paths = pool.map(_generate_job, jobs, chunksize=1)
    else:
        paths = [_generate_job(j) for j in jobs]
    print(json.dumps({"generated": len(paths), "out": str(ns.out)}))
    return EXIT_OK


def replay_scene(scene: Path) -> dict | None:
    """None if the scene reproduces byte-identically, else a problem record."""
    manifest, traj, _ = read_scene(scene)
    config = config_from_manifest(manifest)
    spec = ScenarioSpec.from_dict(manifest["scenario"])
    new_traj, labels = run_scene(spec, config)
    stored = (scene / manifest["files"]["trajectory"]).read_bytes()
    fresh = F.encode_trajectory(new_traj)
    frame = F.first_divergent_frame(stored, fresh, new_traj.body_count)
    if frame is not None:
        return {"code": "replay_mismatch", "scene": str(scene), "frame": frame,
                "message": f"trajectory diverges at frame {frame}"}
    if labels.to_dict() != manifest["labels"]:
        return {"code": "label_mismatch", "scene": str(scene),
                "message": "recomputed labels differ from the manifest"}
    return None


def cmd_replay(ns) -> int:
    scenes = [Path(ns.scene)] if ns.scene else scene_dirs(ns.root)
    if not scenes:
        emit_error("empty_dataset", f"{ns.root}: no scenes found")
        return EXIT_RUNTIME
    failures = 0
    for scene in scenes:
        try:
            problem = replay_scene(scene)
        except F.DatasetError as exc:
            problem = {"code": type(exc).__name__, "scene": str(scene), "message": str(exc)}
        if problem:
            failures += 1
            emit_error(**problem)
    print(json.dumps({"replayed": len(scenes), "mismatches": failures}))
    return EXIT_INVALID if failures else EXIT_OK


def cmd_analyze(ns) -> int:
    try:
        report = analyze_dataset(ns.root, ns.csv)
    except EmptyDatasetError as exc:
        emit_error("empty_dataset", str(exc))
        return EXIT_RUNTIME
    except F.DatasetError as exc:
        emit_error(type(exc).__name__, str(exc))
        return EXIT_INVALID
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(ns) -> int:
    count, problems = validate_dataset(ns.root, check_maps=not ns.skip_maps)
    if count == 0:
        emit_error("empty_dataset", f"{ns.root}: no scenes found")
        return EXIT_RUNTIME
    for p in problems:
        emit_error(**p)
    print(json.dumps({"scenes": count, "violations": len(problems)}))
    return EXIT_INVALID if problems else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spacesim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample, simulate, label and write scenes")
    g.add_argument("--task", choices=[t.value for t in TASKS] + ["all"], required=True)
    g.add_argument("--count", type=int, required=True, help="scenes per task")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--config", default=None, help="TOML run configuration")
    g.add_argument("--maps", choices=["on", "off"], default="off")
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("replay", help="re-simulate scenes and verify byte identity")
    grp = r.add_mutually_exclusive_group(required=True)
    grp.add_argument("--scene")
    grp.add_argument("--root")
    r.set_defaults(func=cmd_replay)

    a = sub.add_parser("analyze", help="per-task histograms and per-class success rates")
    a.add_argument("--root", required=True)
    a.add_argument("--csv", default=None)
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate", help="format and invariant checks over a dataset")
    v.add_argument("--root", required=True)
    v.add_argument("--skip-maps", action="store_true")
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(ns, "count", 1) is not None and getattr(ns, "count", 1) < 0:
        emit_error("bad_argument", "--count must be non-negative")
        return EXIT_RUNTIME
    try:
        return ns.func(ns)
    except ConfigError as exc:
        emit_error("config_error", str(exc))
        return EXIT_RUNTIME
    except OSError as exc:
        emit_error("io_error", str(exc))
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime error line
        emit_error("runtime_error", f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
