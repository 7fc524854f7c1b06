"""
Fusing a wide acoustic block and filtering it
=============================================

Transition features are concatenated with auxiliary blocks, here a
synthetic 88-column micro-expression block and a 4366-column acoustic
block.  A Pearson filter then keeps a tenth of the columns.
"""

# %%
from estdetect import SynthConfig, fuse, generate_corpus, pearson_scores, select_top_k

corpus = generate_corpus(SynthConfig(n_clips_per_class=40, frames_min=150, frames_max=600,
                                     aux_blocks=(("me", 88), ("is13", 4366)), seed=3))
records = fuse([corpus.est_block(), corpus.blocks["me"], corpus.blocks["is13"]], corpus.manifest)
print("fused dimension:", records[0].dimension)

# %%
# Scores are absolute correlations with the label.  The default ratio keeps
# round(0.1 * 4503) = 450 columns.
mask = select_top_k(pearson_scores(records))
print("kept:", mask.k)

# %%
# Where did the kept columns come from?  The layout records each block's
# width, in fused order.
start = 0
for name, width in records[0].layout:
    inside = sum(start <= i < start + width for i in mask.columns)
    print(f"  {name:<5} {inside:>4} of {width}")
    start += width

# %%
# Scoring on the whole corpus like this is fine for inspection, but during
# evaluation the mask is refitted on every training split.
