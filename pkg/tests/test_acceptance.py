"""Acceptance gate: one test per release criterion, each at its stated
tolerance, printing an explicit [PASS] line (run with -s or -rA to see them;
pytest's own PASSED/FAILED per test is the machine-readable verdict).

The synthetic end-to-end run (12 subjects x 300 s at 250 Hz) is computed
once in a session fixture and shared by the accuracy, runtime, and
kernel-ordering criteria.
"""

import os
import time

import numpy as np
import pytest

from eegid import (
    KernelSpec,
    PreprocessFlags,
    Recording,
    SplitSpec,
    apply_filter,
    design_butterworth_bandpass,
    design_notch,
    evaluate_features,
    fit_from_features,
    fit_pca,
    fit_pipeline,
    fit_standardizer,
    generate_synthetic_dataset,
    load_model,
    prepare_windows,
    save_model,
    segment_windows,
    split_dataset,
)
from eegid.dsp import Window, frequency_response, is_stable
from eegid.errors import CorruptModel
from eegid.features import extract_feature_matrix, extract_feature_vector
from eegid.reduction import pca_transform
from eegid.svm import (
    dual_objective,
    gram,
    max_kkt_violation,
    predict_batch,
    train_binary_smo,
)
from qp_oracle import reference_dual_objective, solve_dual_reference
from test_features import oracle_channel

MASTER_SEED = 2026
FS = 250.0


def report(line: str) -> None:
    print(f"[PASS] {line}")


@pytest.fixture(scope="session")
def e2e():
    """Timed synthetic end-to-end run shared across criteria.

    Returns the elapsed wall time of the accuracy-bearing part (data
    generation through the three RBF fits) plus everything the ordering
    criterion needs to train further kernels on the same split.
    """
    t0 = time.perf_counter()
    ds = generate_synthetic_dataset(n_subjects=12, duration_s=300.0, fs=FS,
                                    master_seed=MASTER_SEED)
    windows = prepare_windows(ds, PreprocessFlags())
    train, test = split_dataset(windows, SplitSpec(train_fraction=0.8))
    X, y, _ = extract_feature_matrix(train)
    Xt, yt, _ = extract_feature_matrix(test)
    rbf_acc = {}
    for gamma in (1.0, 0.1, 0.01):
        model = fit_from_features(X, y, KernelSpec("rbf", c=100.0, gamma=gamma))
        rep = evaluate_features(model, Xt, yt)
        rbf_acc[gamma] = rep.accuracy
    elapsed = time.perf_counter() - t0
    return {
        "X": X, "y": y, "Xt": Xt, "yt": yt,
        "rbf_acc": rbf_acc, "elapsed": elapsed,
        "n_train": len(train), "n_test": len(test),
    }


def _accuracy(e2e, spec, max_passes=20000):
    model = fit_from_features(e2e["X"], e2e["y"], spec, max_passes=max_passes)
    return evaluate_features(model, e2e["Xt"], e2e["yt"]).accuracy


def test_synthetic_end_to_end_accuracy_and_runtime(e2e):
    """12 subjects x 300 s, RBF C=100 tuned over gamma {1, 0.1, 0.01},
    chronological 80/20: >= 85% window accuracy within 2 minutes."""
    best_gamma, best = max(e2e["rbf_acc"].items(), key=lambda kv: kv[1])
    assert best >= 0.85, f"best RBF accuracy {best:.4f} < 0.85"
    assert e2e["elapsed"] <= 120.0, f"end-to-end took {e2e['elapsed']:.1f}s > 120s"
    report(
        f"synthetic end-to-end: accuracy {best:.4f} (gamma={best_gamma}) on "
        f"{e2e['n_test']} test windows, {e2e['elapsed']:.1f}s <= 120s"
    )


def test_kernel_ordering(e2e):
    """Best RBF >= best poly >= best linear - 2 points on the shared run."""
    rbf_best = max(e2e["rbf_acc"].values())
    poly_best = max(
        _accuracy(e2e, spec)
        for spec in (
            KernelSpec("poly", c=1.0, gamma=0.1, degree=2),
            KernelSpec("poly", c=1.0, gamma=0.1, degree=3),
            KernelSpec("poly", c=1.0, gamma=0.01, degree=2),
        )
    )
    linear_best = max(
        _accuracy(e2e, KernelSpec("linear", c=c)) for c in (0.1, 1.0, 10.0)
    )
    assert rbf_best >= poly_best, (
        f"rbf {rbf_best:.4f} < poly {poly_best:.4f}"
    )
    assert poly_best >= linear_best - 0.02, (
        f"poly {poly_best:.4f} < linear {linear_best:.4f} - 0.02"
    )
    report(
        f"kernel ordering: rbf {rbf_best:.4f} >= poly {poly_best:.4f} >= "
        f"linear {linear_best:.4f} - 0.02"
    )


def test_filter_suite():
    """Notch+bandpass chain: >= 40 dB at 60 Hz, 10 Hz within +/-1 dB,
    band edges -3 +/- 0.5 dB, every pole inside the unit circle, <= 5 s."""
    t0 = time.perf_counter()
    notch = design_notch(60.0, 30.0, FS)
    band = design_butterworth_bandpass(4, 0.1, 100.0, FS)

    assert is_stable(notch) and is_stable(band), "pole on/outside unit circle"

    t = np.arange(int(FS) * 20) / FS
    sixty = np.sin(2 * np.pi * 60.0 * t)
    rec = Recording(channels=("A",), fs=FS, data=sixty[None, :])
    out = apply_filter(band, apply_filter(notch, rec)).data[0]
    tail_in = sixty[int(FS) * 10:]
    tail_out = out[int(FS) * 10:]
    atten_db = 20 * np.log10(
        np.sqrt(np.mean(tail_out**2)) / np.sqrt(np.mean(tail_in**2))
    )
    assert atten_db <= -40.0, f"60 Hz attenuation only {-atten_db:.1f} dB"

    def chain_gain_db(f):
        h = (frequency_response(notch, [f], FS)[0]
             * frequency_response(band, [f], FS)[0])
        return 20 * np.log10(abs(h))

    ten = chain_gain_db(10.0)
    assert abs(ten) <= 1.0, f"10 Hz gain {ten:+.2f} dB outside +/-1 dB"

    for edge in (0.1, 100.0):
        g = 20 * np.log10(abs(frequency_response(band, [edge], FS)[0]))
        assert abs(g + 3.0) <= 0.5, f"edge {edge} Hz gain {g:.2f} dB not -3 +/- 0.5"

    elapsed = time.perf_counter() - t0
    assert elapsed <= 5.0, f"filter suite took {elapsed:.1f}s > 5s"
    report(
        f"filter suite: 60 Hz {-atten_db:.1f} dB, 10 Hz {ten:+.2f} dB, "
        f"edges -3 +/- 0.5 dB, all poles stable, {elapsed:.2f}s <= 5s"
    )


def test_feature_oracles():
    """All 10 features match direct-formula oracles on 50 seeded windows
    (rel 1e-9; 1e-10 for the moment features) and obey the scale/shift
    invariance table to 1e-9."""
    rng = np.random.default_rng(7321)
    moment_idx = {2, 3}  # skew, kurt
    checked = 0
    for _ in range(50):
        data = rng.normal(scale=rng.uniform(0.5, 20.0), size=(2, 200))
        w = Window(data=data, subject_id=0, start_index=0, fs=FS)
        got = extract_feature_vector(w).values
        for ch in range(2):
            want = oracle_channel(data[ch], FS)
            for j, (g, t) in enumerate(zip(got[ch * 10:(ch + 1) * 10], want)):
                tol = 1e-10 if j in moment_idx else 1e-9
                assert abs(g - t) <= tol * max(1.0, abs(t)), (
                    f"feature {j} ch {ch}: {g} vs oracle {t}"
                )
        checked += 1
    assert checked == 50

    # scale/shift behavior
    x = rng.normal(size=(1, 200))
    base = extract_feature_vector(
        Window(data=x, subject_id=0, start_index=0, fs=FS)).values
    a = 3.7
    scaled = extract_feature_vector(
        Window(data=a * x, subject_id=0, start_index=0, fs=FS)).values
    shifted = extract_feature_vector(
        Window(data=x + 11.0, subject_id=0, start_index=0, fs=FS)).values

    def close(u, v, tol=1e-9):
        return abs(u - v) <= tol * max(1.0, abs(v))

    # scale: rms/std scale by a, hj_act/band_pow by a^2, the rest invariant
    assert close(scaled[0], a * base[0]) and close(scaled[1], a * base[1])
    assert close(scaled[4], a * a * base[4]) and close(scaled[9], a * a * base[9])
    for j in (2, 3, 5, 6, 7, 8):
        assert close(scaled[j], base[j]), f"feature {j} not scale-invariant"
    # shift: everything except rms is invariant
    for j in range(1, 10):
        assert close(shifted[j], base[j]), f"feature {j} not shift-invariant"
    assert not close(shifted[0], base[0])
    report("feature oracles: 50 windows x 10 features within 1e-9 "
           "(1e-10 moments); scale/shift table holds at 1e-9")


def test_pca_suite():
    """Rank-3 data recovers m=3 at target 0.95; projected training
    covariance is diagonal to 1e-8; full-spectrum ratios sum to 1 +/- 1e-9."""
    rng = np.random.default_rng(88)
    basis, _ = np.linalg.qr(rng.normal(size=(8, 3)))
    coords = rng.normal(size=(600, 3)) * np.array([2.0, 1.5, 1.0])
    X3 = coords @ basis.T + 0.001 * rng.normal(size=(600, 8))
    std3 = fit_standardizer(X3)
    pca3 = fit_pca(std3.transform(X3), 0.95)
    assert pca3.n_components == 3, f"expected 3 components, got {pca3.n_components}"

    X = rng.normal(size=(400, 6)) @ rng.normal(size=(6, 6))
    std = fit_standardizer(X)
    pca = fit_pca(std.transform(X), 1.0)
    T = pca_transform(pca, std, X)
    cov = np.cov(T, rowvar=False, ddof=1)
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) <= 1e-8, "projected covariance not diagonal"
    assert np.allclose(np.diag(cov), pca.explained_variance, atol=1e-8)
    assert abs(pca.explained_variance_ratio.sum() - 1.0) <= 1e-9
    report("PCA: rank-3 -> m=3 at 0.95; projected covariance diagonal "
           "to 1e-8; ratios sum to 1 +/- 1e-9")


def test_smo_against_reference_solver():
    """>= 20 seeded instances of <= 12 points: SMO dual objective within
    1e-4 of a projected-gradient reference; KKT violation <= 1e-3."""
    rng = np.random.default_rng(4242)
    specs = [
        KernelSpec("linear", c=1.0),
        KernelSpec("linear", c=10.0),
        KernelSpec("rbf", c=1.0, gamma=0.5),
        KernelSpec("rbf", c=10.0, gamma=0.1),
        KernelSpec("poly", c=1.0, gamma=1.0, degree=2),
        KernelSpec("poly", c=5.0, gamma=0.5, degree=3),
        KernelSpec("rbf", c=2.0, gamma=1.0),
    ]
    checked = 0
    for trial in range(21):
        spec = specs[trial % len(specs)]
        n = int(rng.integers(4, 13))
        X = rng.normal(size=(n, 2))
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        if np.unique(y).size < 2:
            y[0] = -y[0]
        machine = train_binary_smo(X, y, spec, tol=1e-8, max_passes=50000)
        K = gram(spec, X, X)
        # recover alpha from the trained machine
        alpha = np.zeros(n)
        for sv, coef in zip(machine.support_vectors, machine.dual_coef):
            row = np.flatnonzero(np.all(X == sv, axis=1))[0]
            alpha[row] += coef * y[row]
        w_smo = dual_objective(spec, X, y, alpha)
        kkt = max_kkt_violation(spec, X, y, alpha, machine.bias)
        assert kkt <= 1e-3, f"instance {trial}: KKT violation {kkt:.2e}"
        alpha_ref = solve_dual_reference(K, y, spec.c)
        w_ref = reference_dual_objective(K, y, alpha_ref)
        assert abs(w_smo - w_ref) <= 1e-4, (
            f"instance {trial} ({spec.describe()}, n={n}): "
            f"{w_smo:.8f} vs {w_ref:.8f}"
        )
        checked += 1
    assert checked >= 20
    report(f"SMO vs reference solver: {checked} instances within 1e-4; "
           "KKT <= 1e-3 on all")


def test_windowing_counts():
    """75000 samples at 250 Hz -> exactly 749 windows of 200 samples with
    100-sample hops; adjacent windows share their overlapping half exactly."""
    rng = np.random.default_rng(99)
    rec = Recording(channels=("A", "B"), fs=FS,
                    data=rng.normal(size=(2, 75000)))
    windows = segment_windows(rec, subject_id=4)
    assert len(windows) == 749, f"got {len(windows)} windows"
    assert all(w.data.shape == (2, 200) for w in windows)
    assert [w.start_index for w in windows[:3]] == [0, 100, 200]
    for a, b in zip(windows[:-1], windows[1:]):
        assert b.start_index - a.start_index == 100
        assert np.array_equal(a.data[:, 100:], b.data[:, :100])
    report("windowing: 75000 samples -> 749 windows of 200/100; "
           "overlap consistency exact")


def test_persistence_round_trip(tmp_path):
    """Save/load preserves predictions exactly on 100 random vectors;
    a corrupted file is rejected by checksum."""
    ds = generate_synthetic_dataset(n_subjects=2, duration_s=12.0, fs=FS,
                                    master_seed=31)
    flags = PreprocessFlags()
    windows = prepare_windows(ds, flags)
    train, _ = split_dataset(windows, SplitSpec())
    model = fit_pipeline(train, KernelSpec("rbf", c=100.0, gamma=0.01),
                         flags=flags)
    path = tmp_path / "model.txt"
    save_model(model, path)
    loaded = load_model(path)
    X = np.random.default_rng(17).normal(size=(100, 80))
    before = predict_batch(model.svm, model.transform(X))
    after = predict_batch(loaded.svm, loaded.transform(X))
    assert np.array_equal(before, after), "round-trip changed predictions"

    text = path.read_text()
    pos = text.index("[pca]")
    corrupted = text[:pos] + text[pos:].replace("5", "6", 1)
    bad = tmp_path / "bad.txt"
    bad.write_text(corrupted)
    with pytest.raises(CorruptModel):
        load_model(bad)
    report("persistence: bit-exact predictions on 100 vectors after "
           "round-trip; corruption detected by checksum")


@pytest.mark.skipif("EEGID_DATASET" not in os.environ,
                    reason="set EEGID_DATASET to a dataset directory to run "
                           "the source-data reproduction")
def test_source_dataset_reproduction():
    """Optional: on the external dataset (random 80/20, PCA 0.95, RBF
    C=100 gamma=0.01), window accuracy >= 85%; the 95% PCA component
    count is reported (typically 27 +/- 4, data-dependent)."""
    from eegid import load_dataset

    ds = load_dataset(os.environ["EEGID_DATASET"])
    windows = prepare_windows(ds, PreprocessFlags())
    train, test = split_dataset(
        windows, SplitSpec(train_fraction=0.8, mode="random", seed=0))
    model = fit_pipeline(train, KernelSpec("rbf", c=100.0, gamma=0.01))
    from eegid import evaluate

    rep = evaluate(model, test, split_description="random 0.8/0.2 seed=0")
    m = model.pca.n_components
    if not (23 <= m <= 31):
        import warnings

        warnings.warn(f"PCA kept {m} components at 0.95 "
                      "(outside the typical 27 +/- 4)")
    assert rep.accuracy >= 0.85, f"accuracy {rep.accuracy:.4f} < 0.85"
    report(f"source-data reproduction: accuracy {rep.accuracy:.4f}, "
           f"{m} components at 0.95")
