#!/usr/bin/env python3
# Decode a noisy label grid into per-part boxes, and watch the fallback
# chain: detected -> arm-endpoint (for a missed hand) -> prior mean box.

import numpy as np

from partaction import Box, LabelGrid, PartKind, compute_priors, locate_parts
from partaction.core import PERSON_PARTS, BodyActionLabel, InstanceAnnotation

# Priors come from "training" annotations with part boxes.
rng = np.random.default_rng(0)
training = []
for i in range(20):
    person = Box(0, 0, 100, 200)
    boxes = {
        PartKind.HEAD: Box(30, 0, 70, 40),
        PartKind.TORSO: Box(25, 40, 75, 120),
        PartKind.ARM: Box(0, 40, 25, 110),
        PartKind.HAND: Box(0 + rng.uniform(0, 4), 110, 20, 130),
        PartKind.LEG: Box(25, 120, 75, 200),
    }
    training.append(InstanceAnnotation(
        f"train{i}", (100, 200), person, BodyActionLabel(0, "whatever"),
        part_boxes=boxes,
    ))
priors = compute_priors(training)
print("prior mean hand box (person-normalized):",
      tuple(round(v, 3) for v in priors.boxes[PartKind.HAND].corners()))

# A predicted grid where the hand was missed entirely but the arm shows up
# as a diagonal strip; the head has a stray mislabeled cell far away.
grid = np.full((16, 16), int(PartKind.BACKGROUND), np.int8)
grid[1:4, 6:10] = int(PartKind.HEAD)
grid[15, 0] = int(PartKind.HEAD)          # stray cell: smaller component, ignored
grid[4:12, 7:10] = int(PartKind.TORSO)
for r in range(4, 11):                     # arm strip running down the side
    grid[r, 3] = int(PartKind.ARM)
grid[12:16, 6:10] = int(PartKind.LEG)

located = locate_parts(LabelGrid(grid), Box(0, 0, 100, 200), priors)
for part in PERSON_PARTS:
    lp = located.parts[part]
    corners = tuple(round(v, 1) for v in lp.box.corners())
    print(f"{part.label:>6}: {lp.provenance:<9} {corners}")
print("hand endpoint boxes:",
      [tuple(round(v, 1) for v in b.corners()) for b in located.hand_endpoints])
