"""Per-class success rates from in-memory scenes (nothing written to disk).

    python scripts/class_success_report.py --count 100 --seed 7
"""

import argparse
import time
from collections import Counter

from spacesim.config import RunConfig
from spacesim.dataset.scene import run_scene
from spacesim.geometry.rng import Rng
from spacesim.geometry.shapes import OBJECT_CLASSES
from spacesim.scenegen import TASKS, sample_scenario, scene_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100, help="scenes per task")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--task", choices=[t.value for t in TASKS], action="append")
    ap.add_argument("--config", help="TOML config overriding the defaults")
    args = ap.parse_args()
    config = RunConfig.load(args.config)
    tasks = [t for t in TASKS if not args.task or t.value in args.task]
    for task in tasks:
        seen, ok = Counter(), Counter()
        t0 = time.time()
        for i in range(args.count):
            spec = sample_scenario(task, Rng(scene_seed(args.seed, task, i)), config)
            _, labels = run_scene(spec, config)
            for cls, lab in zip(spec.classes, labels.labels):
                seen[cls] += 1
                ok[cls] += lab
        print(f"{task.value}: {args.count} scenes in {time.time() - t0:.1f}s")
        for cls in OBJECT_CLASSES:
            n = seen[cls]
            rate = ok[cls] / n if n else float("nan")
            print(f"  {cls.value:<18} {rate:5.2f}  ({ok[cls]}/{n})")


if __name__ == "__main__":
    main()
