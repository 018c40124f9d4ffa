#!/usr/bin/env python3
# Coarse localization targets: build a 16x16 part-label grid two ways
# (downsample a mask, or label pixels by nearest joint) and score it.

import numpy as np

from partaction import LabelGrid, PartKind, joints_to_grid, pixel_accuracy, resize_nearest

# A crude 64x64 "mask": head on top, torso in the middle, legs below.
mask = np.full((64, 64), int(PartKind.BACKGROUND), np.int8)
mask[2:14, 24:40] = int(PartKind.HEAD)
mask[16:40, 20:44] = int(PartKind.TORSO)
mask[42:62, 24:40] = int(PartKind.LEG)

grid = resize_nearest(LabelGrid(mask), (16, 16))
print("mask-derived 16x16 grid (first 6 rows):")
for row in grid.labels[:6]:
    print(" ".join(PartKind(v).label[:2] for v in row))

# The same scene described by joints only: every pixel takes the part of
# its nearest joint, ties broken by part ordinal, then list order.
joints = [
    (PartKind.HEAD, 32.0, 8.0),
    (PartKind.TORSO, 32.0, 28.0),
    (PartKind.ARM, 12.0, 28.0),
    (PartKind.HAND, 8.0, 44.0),
    (PartKind.LEG, 32.0, 52.0),
]
full = joints_to_grid(joints, (64, 64))
joint_grid = resize_nearest(full, (16, 16))

# Joint-derived grids cover every pixel, so they disagree with the sparse
# mask wherever the mask says background.
acc = pixel_accuracy(joint_grid, grid)
print(f"\npixel accuracy of joint-derived grid vs mask-derived grid: {acc:.3f}")
print("(joint grids have no background cells, so the gap is expected)")
