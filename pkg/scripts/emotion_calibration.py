"""Per-class one-vs-rest AUC/AP and windowed accuracy for the mock emotion stage."""
import argparse

from gatesim.scheduler import GatingPolicy
from gatesim.simulator import ScenarioSpec, generate_trace, run_simulation
from gatesim.stages import NoiseConfig, StageCostModel, synthetic_enrollment


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--frames", type=int, default=5000)
    parser.add_argument("--accuracy", type=float, default=0.75)
    parser.add_argument("--window", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    trace = generate_trace(ScenarioSpec(frame_count=args.frames, seed=args.seed))
    db = synthetic_enrollment("owner", 100, 0.05, args.seed)
    report = run_simulation(trace, GatingPolicy(mode="baseline"), db, StageCostModel(),
                            NoiseConfig(emotion_accuracy=args.accuracy, seed=args.seed), args.window)
    emotion = report.to_dict()["metrics"]["emotion"]
    print(f"faces: {emotion['samples']}  dominant accuracy: {emotion['accuracy']:.4f}")
    for label, entry in emotion["per_class"].items():
        print(f"  {label:<8} auc={entry['auc']:.4f} ap={entry['ap']:.4f}")
    values = [a for _, a in emotion["windowed_accuracy"]["points"]]
    if values:
        print(f"window {args.window}: min {min(values):.3f} max {max(values):.3f}")


if __name__ == "__main__":
    main()
