"""
Standardization and variance-based dimension choice
===================================================

Z-scores a feature matrix, fits a PCA on the training half, and shows
how the component count follows the cumulative-variance target.
"""

import numpy as np

from eegid import (
    explained_variance_curve,
    extract_feature_matrix,
    fit_pca,
    fit_standardizer,
    generate_synthetic_dataset,
    pca_transform,
    prepare_windows,
)

# Features from four subjects, 30 seconds each.
ds = generate_synthetic_dataset(n_subjects=4, duration_s=30.0, fs=250.0,
                                master_seed=19)
windows = prepare_windows(ds)
X, labels, _ = extract_feature_matrix(windows)
print(f"feature matrix: {X.shape[0]} windows x {X.shape[1]} features")

# Columns live on wildly different scales (RMS in microvolts, entropies
# near 1), so z-score each column before any distance-based method.
std = fit_standardizer(X)
Z = std.transform(X)
print(f"column std before z-scoring: {X.std(axis=0).min():.3g} .. "
      f"{X.std(axis=0).max():.3g}")
print(f"column std after  z-scoring: {Z.std(axis=0).min():.3f} .. "
      f"{Z.std(axis=0).max():.3f}")

# fit_pca keeps the smallest m whose cumulative variance ratio reaches
# the target.
for target in (0.80, 0.90, 0.95, 0.99):
    pca = fit_pca(Z, target_ratio=target)
    print(f"target {target:.2f} -> {pca.n_components:2d} components "
          f"(captured {pca.explained_variance_ratio.sum():.4f})")

# The curve of the 0.95 model: per-component ratio and the running sum.
pca = fit_pca(Z, target_ratio=0.95)
print("\nleading components of the 0.95 model:")
for i, ratio, cumulative in explained_variance_curve(pca)[:6]:
    bar = "#" * int(round(50 * ratio))
    print(f"  pc{i:02d}  {ratio:.4f}  (cum {cumulative:.4f})  {bar}")

# Project and check the promise PCA makes: in the projected space the
# coordinates are uncorrelated, and their variances are the eigenvalues.
Y = pca_transform(pca, std, X)
cov = (Y.T @ Y) / (Y.shape[0] - 1)
off_diag = np.abs(cov - np.diag(np.diag(cov))).max()
print(f"\nprojected matrix: {Y.shape}")
print(f"largest off-diagonal covariance: {off_diag:.2e}")
print(f"leading eigenvalues: {np.round(pca.explained_variance[:4], 3)}")
