#!/usr/bin/env python3
# Discriminative part selection: score each part by the largest
# generalized Rayleigh quotient of its between/within scatter and keep
# the top two. On synthetic data with signal planted in hand and head,
# those two should win by a wide margin.

import numpy as np

from partaction import SynthConfig, synth_generate
from partaction.fusion import FusionConfig
from partaction.lda import format_scores_report, part_score, scatter_pair, select_parts
from partaction.pipeline import lda_part_scores

# First the mechanics on a tiny hand-checkable case: two 1-D classes
# {0, 1} and {2, 3} give within-scatter 1 and between-scatter 4.
groups = {0: np.array([[0.0], [1.0]]), 1: np.array([[2.0], [3.0]])}
pair = scatter_pair(groups)
print(f"1-D example: S_w={pair.s_w[0,0]}, S_b={pair.s_b[0,0]}, "
      f"score={part_score(0, pair.s_w, pair.s_b, ridge=0.0).score}")

# Now the full per-part scoring on a generated dataset.
ds = synth_generate(SynthConfig(seed=0, snr=5.0))
scores = lda_part_scores(ds.annotations, ds.store, FusionConfig())
selected = select_parts(scores, 2)
print("\n" + format_scores_report(scores, selected))
print("selected parts:", [p.label for p in selected],
      "(signal was planted in hand and head)")
