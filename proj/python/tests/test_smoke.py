"""Smoke tests for the compiled module: cross-check the exposed operations
against straightforward numpy computations."""

import numpy as np
import pytest

import tsdlab


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_svd_matches_numpy(rng):
    w = rng.standard_normal((6, 9))
    f = tsdlab.svd(w)
    s_np = np.linalg.svd(w, compute_uv=False)
    assert np.allclose(f.sigma, s_np, atol=1e-12)
    recon = f.u @ np.diag(f.sigma) @ f.vt
    assert np.allclose(recon, w, atol=1e-10)
    # canonical signs: the largest-magnitude entry of each left vector is positive
    u = f.u
    for j in range(u.shape[1]):
        assert u[np.argmax(np.abs(u[:, j])), j] > 0


def test_change_rates_match_numpy(rng):
    w = rng.standard_normal((8, 12))
    dw = rng.standard_normal((8, 12))
    f = tsdlab.svd(w)
    cr = tsdlab.change_rates(f, dw)
    expected = np.array([f.u[:, i] @ dw @ f.vt[i, :] / (f.sigma[i] + 1e-6) for i in range(8)])
    assert np.allclose(cr.signed_delta, expected, atol=1e-12)
    assert np.allclose(cr.delta, np.abs(expected), atol=1e-12)
    assert list(cr.ranking) == list(np.argsort(-np.abs(expected), kind="stable"))


def test_projection_diagonal_is_sigma(rng):
    w = rng.standard_normal((5, 11))
    f = tsdlab.svd(w)
    coeffs = tsdlab.project_global(f, w)
    assert coeffs.shape == (5, 11)
    assert np.allclose(np.diag(coeffs), f.sigma, atol=1e-10)
    off = coeffs - np.diag(f.sigma) @ np.eye(5, 11)
    np.fill_diagonal(off, 0.0)
    assert np.max(np.abs(off)) < 1e-10


def test_planted_ground_truth():
    task = tsdlab.gen_task(n=16, m=32, planted_indices=[5, 9, 12], planted_coeffs=[1.5, -1.1, 0.9], seed=3)
    truth = tsdlab.ground_truth_tsd(task.base_w, task.w_star)
    assert sorted(truth.rates.ranking[:3]) == [5, 9, 12]
    precision, recall = tsdlab.pr_score([5, 9, 12, 0], truth)
    assert recall >= 0.75
    assert precision >= 0.75


def test_fresh_states_merge_to_base(rng):
    w = rng.standard_normal((8, 10))
    lora = tsdlab.make_lora_state(w, r=2, alpha=2.0, seed=1)
    assert np.array_equal(tsdlab.merged_weight(lora), w)
    f = tsdlab.svd(w)
    init = tsdlab.make_init_state(w, f, [0, 3], alpha=2.0)
    assert np.allclose(tsdlab.merged_weight(init), w, atol=1e-10)
    w_res, a0, b0 = tsdlab.tsd_init_split(w, f, [0, 3])
    assert np.allclose(w_res + a0 @ b0, w, atol=1e-10)


def test_training_reduces_loss_and_is_deterministic():
    task = tsdlab.gen_task(n=12, m=16, planted_indices=[4, 7], planted_coeffs=[1.3, -0.9],
                           noise_std=0.01, n_train=96, n_val=32, seed=5)
    f = tsdlab.svd(task.base_w)
    state = tsdlab.make_dash_state(task.base_w, r=2, alpha=2.0, seed=9)
    kwargs = dict(lr=0.01, steps=60, batch=16, t_prelaunch=30, s_dash=4, record_every=30, seed=11)
    trace = tsdlab.train(state, task, f, **kwargs)
    assert trace.losses[-1] < trace.losses[0]
    assert trace.final_state.phase == "dash"
    assert len(trace.final_state.dash_indices) == 4

    again = tsdlab.train(state, task, f, **kwargs)
    assert trace.losses == again.losses


def test_scaled_rate_and_overlap():
    assert tsdlab.scaled_rate(0.0) == 0.0
    assert abs(tsdlab.scaled_rate(np.e - 1.0) - 1.0 / 3.0) < 1e-14
    a = tsdlab.gen_task(n=16, m=32, planted_indices=[2, 5, 8, 11], planted_coeffs=[1.6, -1.2, 1.0, 0.8], seed=13)
    b = tsdlab.gen_task(n=16, m=32, planted_indices=[3, 6, 9, 12], planted_coeffs=[1.6, -1.2, 1.0, 0.8], seed=13)
    ta = tsdlab.ground_truth_tsd(a.base_w, a.w_star)
    tb = tsdlab.ground_truth_tsd(b.base_w, b.w_star)
    assert tsdlab.task_overlap(ta, tb, 4) == 0.0
    assert tsdlab.task_overlap(ta, ta, 4) == 1.0


def test_matrix_io_round_trip(tmp_path, rng):
    w = rng.standard_normal((5, 7))
    path = tmp_path / "w.tsdw"
    tsdlab.save_matrix(w, str(path))
    assert np.array_equal(tsdlab.load_matrix(str(path)), w)
    csv_path = tmp_path / "w.csv"
    tsdlab.save_matrix(w, str(csv_path))
    assert np.array_equal(tsdlab.load_matrix(str(csv_path)), w)


def test_adapter_round_trip(tmp_path):
    task = tsdlab.gen_task(n=8, m=10, planted_indices=[2], planted_coeffs=[1.0], seed=17)
    f = tsdlab.svd(task.base_w)
    state = tsdlab.make_tsd_state(task.base_w, r=2, alpha=2.0, seed=19)
    trace = tsdlab.train(state, task, f, lr=0.01, steps=20, batch=16, t_prelaunch=10, s_dash=4,
                         record_every=10, seed=21)
    out = tmp_path / "state"
    tsdlab.save_adapter(trace.final_state, str(out))
    back = tsdlab.load_adapter(str(out))
    assert back.method == "tsd"
    assert back.phase == "dash"
    assert np.array_equal(tsdlab.merged_weight(back), tsdlab.merged_weight(trace.final_state))


def test_run_experiment_rows():
    rows = tsdlab.run_experiment(
        "n=12\nm=16\nplanted_indices=4,7\nplanted_coeffs=1.2,-0.9\nnoise_std=0.01\n"
        "n_train=96\nn_val=32\nlr=0.01\nsteps=20\nt_prelaunch=10\ns_dash=4\nr=2\n"
        "methods=lora,dash\nseeds=1,2\n"
    )
    assert len(rows) == 4
    assert {row["method"] for row in rows} == {"lora", "dash"}
    for row in rows:
        assert np.isfinite(row["final_val_loss"])


def test_errors_surface_as_exceptions():
    with pytest.raises(Exception):
        tsdlab.svd(np.array([[np.nan, 1.0], [0.0, 2.0]]))
    with pytest.raises(Exception):
        tsdlab.scaled_rate(-1.0)
