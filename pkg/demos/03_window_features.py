"""
Window segmentation and per-channel features
============================================

Cuts a recording into overlapping windows and walks through the ten
statistics extracted from each channel.
"""

import numpy as np

from eegid import (
    FEATURE_NAMES,
    SynthProfile,
    extract_feature_matrix,
    extract_feature_vector,
    feature_column_names,
    generate_synthetic_subject,
    segment_windows,
)

FS = 250.0

# Ten seconds of signal from one synthetic subject.
profile = SynthProfile(components=((9.0, 1.5, 8.0), (27.0, 3.0, 4.0)),
                       noise_floor=0.8, seed=3)
rec = generate_synthetic_subject(profile, duration_s=10.0, fs=FS)

# 0.8 s windows advancing by 0.4 s: each window shares half its samples
# with the previous one.
windows = segment_windows(rec, subject_id=0)
w0, w1 = windows[0], windows[1]
print(f"{len(windows)} windows of {w0.data.shape[1]} samples "
      f"({w0.data.shape[1] / FS:g} s), hop {w1.start_index - w0.start_index}")
shared = np.array_equal(w0.data[:, 100:], w1.data[:, :100])
print(f"second half of window 0 == first half of window 1: {shared}")

# The feature extractor computes ten numbers per channel.
print(f"\nper-channel features: {FEATURE_NAMES}")
fv = extract_feature_vector(w0)
print(f"vector length: {fv.values.size} "
      f"({rec.data.shape[0]} channels x {len(FEATURE_NAMES)})")

# Show the ten values for the first channel, by name.
print(f"\nchannel {rec.channels[0]}, window 0:")
for name, value in zip(FEATURE_NAMES, fv.values[:10]):
    print(f"  {name:>16}: {value:12.5f}")

# Stack every window into a matrix -- the input to the classifier stages.
X, labels, starts = extract_feature_matrix(windows)
print(f"\nfeature matrix: {X.shape}, labels {np.unique(labels)}, "
      f"first starts {starts[:3]}")
cols = feature_column_names(len(rec.channels))
print(f"column names: {cols[0]} ... {cols[-1]}")

# Time-domain statistics ride along with amplitude, while normalized
# quantities (skewness, entropies) do not. Doubling the signal doubles
# the RMS but leaves skewness alone.
doubled = extract_feature_vector(
    type(w0)(data=w0.data * 2.0, fs=w0.fs, subject_id=0,
             start_index=w0.start_index))
print(f"\nafter doubling the amplitude:")
print(f"  rms        {fv.values[0]:10.5f} -> {doubled.values[0]:10.5f}")
print(f"  skewness   {fv.values[2]:10.5f} -> {doubled.values[2]:10.5f}")
