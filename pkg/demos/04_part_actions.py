#!/usr/bin/env python3
# The 40-category part-action layer: inspect the taxonomy, train the
# per-part classifier on synthetic features, and read out the score
# vector that fusion uses as the part-network feature.

import numpy as np

from partaction import Box, FeatureVector, PartKind
from partaction.part_actions import (
    embedded_scores,
    labels_for,
    part_action_accuracy,
    predict_part_action,
    taxonomy,
    train_part_action,
)

print(f"taxonomy: {len(taxonomy())} labels")
for part in (PartKind.HEAD, PartKind.TORSO, PartKind.ARM, PartKind.HAND, PartKind.LEG):
    names = [lab.name for lab in labels_for(part)]
    print(f"  {part.label:>6} ({len(names):2d}): {', '.join(names[:4])}, ...")

# Synthetic training set: four torso actions, each a Gaussian blob in a
# 6-dim feature space.
rng = np.random.default_rng(1)
torso_labels = labels_for(PartKind.TORSO)
region = Box(0, 0, 10, 10)
pairs = []
for k, lab in enumerate(torso_labels):
    center = np.zeros(6)
    center[k] = 4.0
    for _ in range(25):
        values = center + rng.standard_normal(6)
        pairs.append((FeatureVector(values, "toy", region), lab))

model = train_part_action(pairs, seed=0)
print(f"\ntraining accuracy: {part_action_accuracy(model, pairs):.3f}")

probe = FeatureVector(np.array([4.0, 0, 0, 0, 0, 0]), "toy", region)
probs = predict_part_action(model, PartKind.TORSO, probe)
print("probabilities for a 'bending-like' sample:",
      {lab.name: round(float(p), 3) for lab, p in zip(torso_labels, probs)})

emb = embedded_scores(model, PartKind.TORSO, probe)
print(f"fusion feature: 40-dim, {np.count_nonzero(emb)} nonzero entries "
      f"(the torso block at indices {[lab.index for lab in torso_labels]})")
