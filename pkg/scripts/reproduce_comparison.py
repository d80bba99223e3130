"""Baseline vs adaptive on an all-owner trace, with an overhead sweep.

    python scripts/reproduce_comparison.py --frames 1000 --overheads 0 99 236
"""
import argparse

from gatesim.scheduler import GatingPolicy
from gatesim.simulator import ScenarioSpec, compare, generate_trace
from gatesim.stages import NoiseConfig, StageCostModel, synthetic_enrollment


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--frames", type=int, default=1000)
    parser.add_argument("--presence", type=float, default=1.0)
    parser.add_argument("--period", type=int, default=5)
    parser.add_argument("--overheads", type=float, nargs="+", default=[0.0, 99.0, 236.0])
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    trace = generate_trace(ScenarioSpec(frame_count=args.frames, person_presence_rate=args.presence, seed=args.seed))
    db = synthetic_enrollment("owner", 100, 0.05, args.seed)
    noise = NoiseConfig(seed=args.seed)

    print(f"{'overhead':>8} {'base ms':>9} {'adapt ms':>9} {'base fps':>9} {'adapt fps':>9} "
          f"{'fps x':>6} {'time -%':>8} {'module -%':>9}")
    for overhead in args.overheads:
        c = compare(trace, db, StageCostModel(overhead_ms=overhead), noise, GatingPolicy(face_period=args.period))
        b, a = c.baseline, c.adaptive
        print(f"{overhead:8.1f} {b.avg_cost_per_frame_ms:9.2f} {a.avg_cost_per_frame_ms:9.2f} "
              f"{b.average_fps:9.3f} {a.average_fps:9.3f} {c.fps_ratio:6.2f} "
              f"{c.time_per_frame_reduction_pct:8.2f} {c.module_compute_reduction_pct:9.2f}")
    print(c.calibration()["note"])


if __name__ == "__main__":
    main()
