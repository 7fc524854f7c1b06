"""
Voting and transition features on a hand-made clip
==================================================

A visual recogniser emits one emotion per frame; an audio recogniser emits
one per half-second segment.  This script walks a tiny clip through the
voting step and the transition feature, printing each intermediate.
"""

# %%
# A short clip
# ------------
# Five visual frames and one audio segment.  The audio factor is shrunk to 5
# so that a single segment covers the whole clip.
from estdetect import EmotionTrack, est_feature, expand_audio, revise, top_transitions

visual = EmotionTrack.visual("demo", ["Neutral", "Sad", "Sad", "Fear", "Fear"])
audio = EmotionTrack.audio("demo", ["Sad"])
expanded = expand_audio(audio, factor=5)
print("visual  :", visual.states.tolist())
print("audio x5:", expanded.tolist())

# %%
# Voting
# ------
# Each frame looks at itself, the next visual frame and the aligned audio
# state.  When the next frame and the audio agree, the frame moves early.
# Codes follow the order Angry, Disgust, Fear, Happy, Sad, Surprise, Neutral.
revised = revise(visual, expanded)
print("revised :", revised.states.tolist())

# %%
# The transition feature
# ----------------------
# A run of repeated states counts once as a self-transition, so the
# feature describes how emotions change rather than how long they last.
est = est_feature(revised)
print("counted transitions:", est.transitions.total)
for src, dst, value in top_transitions(est, 3):
    print(f"  {src.label:>8} -> {dst.label:<8} {value:.3f}")

# %%
# A single frame has no transitions; its vector is zero and flagged.
print("single frame degenerate:", est_feature([3]).degenerate)
