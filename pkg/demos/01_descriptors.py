"""Walk one synthetic finger through enhancement, extraction and description.

Prints how far apart descriptors of the same physical minutia land across
impressions, compared with descriptors of different minutiae.

    python demos/01_descriptors.py [--train-fingers 30]
"""

import argparse

import numpy as np

from minudesc import Pipeline, SynthParams, build_training_set, generate_finger, train
from minudesc.synth import nearest_truth

parser = argparse.ArgumentParser()
parser.add_argument("--train-fingers", type=int, default=30)
parser.add_argument("--seed", type=int, default=314)
args = parser.parse_args()

print(f"training PCA+LDA on {args.train_fingers} synthetic fingers ...")
transform = train(build_training_set(args.train_fingers, SynthParams(), seed=1000))
pipe = Pipeline(transform=transform)

impressions = generate_finger(SynthParams(seed=args.seed, impressions=4))
print(f"finger {args.seed}: {len(impressions[0][1].base)} planted minutiae, {len(impressions)} impressions")

# descriptors keyed by the planted minutia each extracted one lands on
by_truth = {}
for k, (img, gt) in enumerate(impressions):
    t = pipe.template(img)
    hits = 0
    for m, d in zip(t.minutiae, t.descriptors):
        j = nearest_truth(m, gt.minutiae, 8.0, np.pi / 6)
        if j is not None:
            by_truth.setdefault(j, []).append(d)
            hits += 1
    print(f"  impression {k + 1}: {len(t)} minutiae extracted, {hits} on a planted one")

same, other = [], []
keys = sorted(by_truth)
for a in keys:
    for b in keys:
        for u in by_truth[a]:
            for v in by_truth[b]:
                if u is v:
                    continue
                (same if a == b else other).append(np.linalg.norm(u - v))

print(f"\ndescriptor distance, same minutia:      median {np.median(same):6.2f}  ({len(same)} pairs)")
print(f"descriptor distance, different minutia: median {np.median(other):6.2f}  ({len(other)} pairs)")
print(f"SimD = log(100 / (1 + Ed)) at those medians: "
      f"{np.log(100 / (1 + np.median(same))):.2f} vs {max(0, np.log(100 / (1 + np.median(other)))):.2f}")
