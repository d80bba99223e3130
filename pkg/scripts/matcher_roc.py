"""Owner-vs-intruder separability of the mock matcher across probe noise levels."""
import argparse

from gatesim.core import GroundFace
from gatesim.embeddings import match
from gatesim.metrics import ScoredSample, auc, average_precision, confusion_matrix
from gatesim.stages import IdentityPrototypes, NoiseConfig, mock_embed, synthetic_enrollment

INTRUDERS = ["mallory", "trent", "eve", "oscar"]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--probes", type=int, default=2000)
    parser.add_argument("--enroll-sigma", type=float, default=0.05)
    parser.add_argument("--sigmas", type=float, nargs="+", default=[0.1, 0.5, 1.0, 2.0, 3.0])
    parser.add_argument("--threshold", type=float, default=0.7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    db = synthetic_enrollment("owner", 100, args.enroll_sigma, args.seed)
    protos = IdentityPrototypes.build(args.seed, INTRUDERS, anchor="owner")
    print(f"{'sigma':>6} {'auc':>8} {'ap':>8} {'acc@t':>8}")
    for sigma in args.sigmas:
        noise = NoiseConfig(embedding_sigma=sigma, seed=args.seed + 1)
        samples, preds = [], []
        for i in range(args.probes):
            who = "owner" if i % 2 == 0 else INTRUDERS[(i // 2) % len(INTRUDERS)]
            result = match(db, mock_embed(GroundFace(who, "Neutral", (0, 0, 1, 1)), protos, noise, i, 0),
                           args.threshold)
            samples.append(ScoredSample(result.similarity, who == "owner"))
            preds.append(result.is_owner)
        cm = confusion_matrix(preds, [s.label for s in samples])
        print(f"{sigma:6.2f} {auc(samples):8.4f} {average_precision(samples):8.4f} {cm.accuracy:8.4f}")


if __name__ == "__main__":
    main()
