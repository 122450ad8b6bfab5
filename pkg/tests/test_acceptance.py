"""Acceptance criteria at their stated tolerances, one summary line each.

Run with ``pytest tests/test_acceptance.py``; the PASS/FAIL lines appear in the
"acceptance criteria" section of the terminal summary.
"""

import filecmp
import json
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from label_oracles import oracle_suite, run_oracle
from physics_helpers import CONFIG, body, energy, momentum, world
from spacesim import cli
from spacesim.annotate import Camera
from spacesim.dataset import formats as F
from spacesim.dataset.analyze import analyze_dataset
from spacesim.dataset.scene import config_from_manifest, read_scene, scene_dirs
from spacesim.geometry.rng import Rng
from spacesim.geometry.shapes import (
    OBJECT_CLASSES,
    ShapeClass,
    Sphere,
    make_shape,
    mass_properties,
    rest_height,
    shape_from_config,
    support_point,
)
from spacesim.physics import run_world, step
from spacesim.scenegen import TASKS, ScenarioSpec, TaskKind, grid_centers, sample_scenario, scene_seed
from test_physics import drop_apex, inelastic_world
from test_shapes import DENSITY, SIZES, monte_carlo_mass


def spacesim(*args):
    return subprocess.run([sys.executable, "-m", "spacesim.cli", *map(str, args)],
                          capture_output=True, text=True)


def same_tree(a, b) -> bool:
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    return files_a == files_b and all(filecmp.cmp(a / p, b / p, shallow=False) for p in files_a)


@pytest.fixture(scope="module")
def hundred_per_task(tmp_path_factory):
    root = tmp_path_factory.mktemp("acc") / "ds"
    assert cli.main(["generate", "--task", "all", "--count", "100", "--seed", "7",
                     "--out", str(root)]) == 0
    return root


def test_1_determinism(tmp_path, acceptance):
    t0 = time.perf_counter()
    runs = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = spacesim("generate", "--task", "all", "--count", 10, "--seed", 7, "--out", out)
        assert proc.returncode == 0, proc.stderr
        runs.append(out)
    elapsed_generate = (time.perf_counter() - t0) / 2
    identical = same_tree(*runs)
    t1 = time.perf_counter()
    replay = spacesim("replay", "--root", runs[0])
    elapsed_replay = time.perf_counter() - t1
    n = len(scene_dirs(runs[0]))
    runtime = elapsed_generate + elapsed_replay
    ok = identical and replay.returncode == 0 and n == 30 and runtime < 120
    acceptance(1, "determinism", ok,
               f"{n} scenes, trees identical={identical}, replay exit {replay.returncode}, "
               f"generate+replay {runtime:.1f}s")
    assert ok, replay.stderr


def test_2_structure_constants(hundred_per_task, capsys, acceptance):
    code = cli.main(["validate", "--root", str(hundred_per_task)])
    summary = json.loads(capsys.readouterr().out)
    config = CONFIG
    centers = grid_centers(config)
    offsets = set(config.scenegen.stability_offsets)
    independent = []
    for d in scene_dirs(hundred_per_task):
        manifest, traj, _ = read_scene(d)
        spec = ScenarioSpec.from_dict(manifest["scenario"])
        if traj.frame_count != 150 or traj.dt != np.float32(1 / 50):
            independent.append((d.name, "frames"))
        if len(spec.objects) not in (1, 2, 3):
            independent.append((d.name, "N"))
        for o in spec.objects:
            x, y, _ = o.spawn_pose.position
            if spec.task is TaskKind.STABILITY and not {x, y} <= offsets:
                independent.append((d.name, "offset"))
            if spec.task is TaskKind.CONTACT and not (np.isclose(centers, x).any()
                                                      and np.isclose(centers, y).any()):
                independent.append((d.name, "grid"))
        if spec.task is TaskKind.CONTACT:
            speed = np.linalg.norm(traj.linear_velocities[:, -1], axis=1)
            if np.linalg.norm(spec.probe.velocity) != 1.0 or np.any(np.abs(speed - 1.0) > 1e-6):
                independent.append((d.name, "probe"))
    ok = code == 0 and summary == {"scenes": 300, "violations": 0} and not independent
    acceptance(2, "structure constants", ok,
               f"validate exit {code} over {summary['scenes']} scenes, "
               f"{summary['violations']} violations, {len(independent)} independent findings")
    assert ok, independent[:5]


def test_3_physics_oracles(acceptance):
    apex = drop_apex(drop=1.0, e=0.5)
    ok_a = abs(apex - 0.25) <= 0.05 * 0.25

    cube = shape_from_config(ShapeClass.CUBE, CONFIG.shapes)
    traj = run_world(world([body(cube, (0.0, 0.0, rest_height(cube)))]), 150)
    drift = float(np.linalg.norm(traj.positions[:, 0] - traj.positions[0, 0], axis=1).max())
    ok_b = drift < 2e-3

    a = body(Sphere(0.15), (-1.0, 0.0, 2.0), velocity=(2.0, 0.0, 0.0), friction=0.0)
    b = body(Sphere(0.1), (0.5, 0.06, 2.0), velocity=(-1.0, 0.0, 0.0), friction=0.0)
    w = world([a, b], gravity=(0, 0, 0), ground=False)
    p0 = momentum(w)
    dp = 0.0
    for _ in range(150):
        step(w)
        dp = max(dp, float(np.abs(momentum(w) - p0).max()))
    ok_c = dp <= 1e-6 and w.vel[0, 0] != 2.0

    rise = -np.inf
    for seed in range(20):
        w = inelastic_world(seed)
        e_prev = energy(w)
        for _ in range(149):
            step(w)
            e = energy(w)
            rise = max(rise, e - e_prev)
            e_prev = e
    ok_d = rise <= 1e-3

    ok = ok_a and ok_b and ok_c and ok_d
    acceptance(3, "physics oracles", ok,
               f"(a) apex {apex:.4f} m [{ok_a}] (b) drift {drift * 1e3:.3f} mm [{ok_b}] "
               f"(c) max momentum error {dp:.2e} [{ok_c}] "
               f"(d) max energy rise {rise:.2e} J/frame over 20 scenes [{ok_d}]")
    assert ok


def test_4_label_oracles(acceptance):
    per_task = {}
    misses = []
    for task, items in oracle_suite(CONFIG).items():
        good = 0
        for name, spec, expected in items:
            got = run_oracle(spec, CONFIG).label
            good += got == expected
            if got != expected:
                misses.append(f"{task.value}/{name}")
        per_task[task.value] = (good, len(items))
    total = sum(g for g, _ in per_task.values())
    ok = total == 30 and all(n == 10 for _, n in per_task.values())
    acceptance(4, "label oracle suite", ok,
               f"{total}/30 correct ({', '.join(f'{t} {g}/{n}' for t, (g, n) in per_task.items())})")
    assert ok, misses


def test_5_geometry_oracles(acceptance):
    worst_mass = worst_inertia = worst_support = 0.0
    dirs = np.random.default_rng(42).normal(size=(1000, 3))
    for cls in OBJECT_CLASSES:
        spec = shape_from_config(cls, SIZES)
        props = mass_properties(spec, DENSITY)
        mass, _, diag = monte_carlo_mass(cls)
        worst_mass = max(worst_mass, abs(props.mass - mass) / mass)
        worst_inertia = max(worst_inertia, float(np.max(np.abs(np.diag(props.inertia) - diag) / diag)))
        mesh = make_shape(spec)
        brute = (mesh.vertices @ dirs.T).max(axis=0)
        got = np.array([support_point(mesh, d) @ d for d in dirs])
        worst_support = max(worst_support, float(np.max(np.abs(got - brute)
                                                         / np.linalg.norm(dirs, axis=1))))
    ok = worst_mass < 0.01 and worst_inertia < 0.03 and worst_support <= 1e-6
    acceptance(5, "geometry oracles", ok,
               f"7 shapes: worst mass error {worst_mass:.2%}, inertia {worst_inertia:.2%}, "
               f"support {worst_support:.1e} m over 1000 directions")
    assert ok


def test_6_sampler_distributions(acceptance):
    pvalues = {}
    for task in TASKS:
        specs = [sample_scenario(task, Rng(scene_seed(7, task, i)), CONFIG) for i in range(10_000)]
        n = Counter(len(s.objects) for s in specs)
        c = Counter(cls for s in specs for cls in s.classes)
        pvalues[task.value] = (chisquare([n[k] for k in (1, 2, 3)]).pvalue,
                               chisquare([c[k] for k in OBJECT_CLASSES]).pvalue)
    ok = all(p > 0.01 for pair in pvalues.values() for p in pair)
    acceptance(6, "sampler distributions", ok,
               "; ".join(f"{t} p(N)={a:.3f} p(class)={b:.3f}" for t, (a, b) in pvalues.items()))
    assert ok


def test_7_annotation_invariants(tmp_path, acceptance):
    out = tmp_path / "maps"
    assert cli.main(["generate", "--task", "contact", "--count", "1", "--seed", "7",
                     "--out", str(out), "--maps", "on"]) == 0
    scene = scene_dirs(out)[0]
    manifest, traj, frames = read_scene(scene)
    camera = Camera.from_config(config_from_manifest(manifest).camera)
    probe = traj.body_count - 1
    valid_ids = set(range(traj.body_count + 2))
    problems = Counter()
    ball_errors = []
    checked = list(range(0, 140, 7))
    for f in checked:
        seg, depth, normals, flow = (frames.segmentation(f), frames.depth(f), frames.normals(f),
                                     frames.flow(f))
        problems["partition"] += seg.shape != depth.shape or not set(np.unique(seg)) <= valid_ids
        hit = np.isfinite(depth)
        problems["normals"] += bool(np.any(np.abs(np.linalg.norm(normals[hit], axis=-1) - 1) > 1e-4))
        still = {0} | {b + 1 for b in range(traj.body_count)
                       if np.array_equal(traj.positions[f, b], traj.positions[f + 1, b])
                       and np.array_equal(traj.orientations[f, b], traj.orientations[f + 1, b])}
        problems["static_flow"] += bool(np.any(flow[np.isin(seg, list(still))]))
        c0, c1 = traj.positions[f, probe], traj.positions[f + 1, probe]
        u, v = np.rint(camera.project(c0)).astype(int)
        if 0 <= v < seg.shape[0] and 0 <= u < seg.shape[1] and seg[v, u] == probe + 1:
            want = camera.project(c1) - camera.project(c0)
            ball_errors.append(float(np.abs(flow[v, u] - want).max()))
    parsed = 0
    for path in sorted((scene / "maps").iterdir()):
        reader = {".pgm": F.read_pgm, ".pfm": F.read_pfm, ".flo": F.read_flo}[path.suffix]
        reader(path)
        parsed += 1
    worst_ball = max(ball_errors, default=np.inf)
    ok = (not any(problems.values()) and len(ball_errors) >= 5 and worst_ball <= 0.5
          and parsed == 150 * 3 + 149)
    acceptance(7, "annotation invariants", ok,
               f"{len(checked)} frames, failures {dict(problems)}, ball centre flow error "
               f"max {worst_ball:.3f} px over {len(ball_errors)} visible frames, {parsed} files parsed")
    assert ok


def test_8_success_rate_ordering(hundred_per_task, capsys, acceptance):
    code = cli.main(["analyze", "--root", str(hundred_per_task)])
    report = json.loads(capsys.readouterr().out)
    assert analyze_dataset(hundred_per_task).to_dict() == report
    rates = report["stability"]["success_rate"]
    sphere, cube = rates["sphere"], rates["cube"]
    lowest = min((r, c) for c, r in rates.items() if r is not None)[1]
    ok = (code == 0 and all(report[t]["scene_count"] >= 100 for t in report)
          and sphere < cube and lowest == "inverted_cone")
    acceptance(8, "success-rate ordering", ok,
               f"stability sphere {sphere:.2f} < cube {cube:.2f}; minimum {lowest} "
               f"{rates[lowest]:.2f}; N histogram {report['stability']['n_histogram']}")
    assert ok
