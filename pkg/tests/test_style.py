import math

import numpy as np
import pytest
import torch

from starenh.style import (
    StyleLatent,
    average_latent,
    classify_loss,
    cosine_logits,
    recall_at_1,
)


def test_uniform_cosines_give_log_q():
    f = np.array([1.0, 0.0, 0.0])
    w = np.tile(np.array([0.0, 1.0, 1.0]), (4, 1))
    assert float(classify_loss(f, w, 0, scale=7.0)) == pytest.approx(math.log(4), abs=1e-9)


def test_two_class_reference_value():
    f = np.array([1.0, 0.0])
    w = np.array([[1.0, 0.0], [0.0, 1.0]])
    # cos_p = 1, cos_other = 0, s = 1 -> ln(1 + e^-1)
    assert float(classify_loss(f, w, 0, scale=1.0)) == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-9)


def test_scale_invariance_in_embedding():
    rng = np.random.RandomState(0)
    f = rng.randn(8)
    w = rng.randn(5, 8)
    base = float(classify_loss(f, w, 2))
    for c in (0.01, 3.0, 1000.0):
        assert abs(float(classify_loss(c * f, w, 2)) - base) < 1e-9


def test_loss_nonnegative_and_monotone_in_target_cosine():
    w = np.eye(4)[:3]  # classes live on the first three axes
    prev = None
    for cos_p in np.linspace(-0.8, 0.8, 15):
        # 4th component soaks up the norm so the off-class cosines stay at 0.3
        filler = math.sqrt(1.0 - cos_p**2 - 2 * 0.3**2)
        f = np.array([cos_p, 0.3, 0.3, filler])
        loss = float(classify_loss(f, w, 0, scale=5.0))
        assert loss >= 0
        if prev is not None:
            assert loss < prev
        prev = loss


def test_classify_loss_validation():
    with pytest.raises(ValueError):
        classify_loss(np.zeros(4), np.eye(4), 0)
    with pytest.raises(ValueError):
        classify_loss(np.ones(4), np.zeros((4, 4)), 0)
    with pytest.raises(ValueError):
        classify_loss(np.ones(4), np.eye(4), 7)
    with pytest.raises(ValueError):
        cosine_logits(torch.ones(1, 4), torch.eye(4), -1.0)


def test_classify_loss_gradient_matches_finite_differences():
    rng = np.random.RandomState(1)
    for _ in range(10):
        f = rng.randn(6)
        w = rng.randn(4, 6)
        f_t = torch.from_numpy(f).requires_grad_()
        classify_loss(f_t, torch.from_numpy(w), 1, scale=10.0).backward()
        eps = 1e-6
        for k in range(6):
            fp, fm = f.copy(), f.copy()
            fp[k] += eps
            fm[k] -= eps
            fd = (
                float(classify_loss(fp, w, 1, scale=10.0)) - float(classify_loss(fm, w, 1, scale=10.0))
            ) / (2 * eps)
            assert float(f_t.grad[k]) == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_average_single_vector():
    latent = average_latent([np.array([3.0, 4.0])])
    np.testing.assert_allclose(latent.values, [0.6, 0.8], atol=1e-12)


def test_average_orthogonal_units():
    latent = average_latent([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    np.testing.assert_allclose(latent.values, [1 / math.sqrt(2)] * 2, atol=1e-12)


def test_average_antipodal_degenerate():
    with pytest.raises(ValueError):
        average_latent([np.array([1.0, 0.0]), np.array([-1.0, 0.0])])


def test_average_empty_rejected():
    with pytest.raises(ValueError):
        average_latent([])


def test_average_unit_norm_and_permutation_invariance():
    rng = np.random.RandomState(2)
    vecs = [rng.randn(16) for _ in range(9)]
    a = average_latent(vecs)
    assert abs(np.linalg.norm(a.values) - 1.0) < 1e-6
    b = average_latent(list(reversed(vecs)))
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_recall_perfect_when_embeddings_are_centers():
    centers = {
        0: StyleLatent(np.array([1.0, 0.0])),
        1: StyleLatent(np.array([0.0, 1.0])),
    }
    embeddings = [centers[0].values, centers[1].values, centers[0].values]
    recall = recall_at_1(embeddings, [0, 1, 0], centers)
    assert recall == {0: 1.0, 1: 1.0}


def test_recall_tie_breaks_to_lowest_index():
    centers = {
        0: StyleLatent(np.array([1.0, 0.0])),
        1: StyleLatent(np.array([0.0, 1.0])),
    }
    tied = np.array([1.0, 1.0]) / math.sqrt(2)
    assert recall_at_1([tied], [0], centers)[0] == 1.0
    assert recall_at_1([tied], [1], centers)[1] == 0.0


def test_recall_matches_bruteforce():
    rng = np.random.RandomState(3)
    centers_raw = {q: rng.randn(8) for q in range(4)}
    centers = {q: StyleLatent(v / np.linalg.norm(v)) for q, v in centers_raw.items()}
    embeddings, labels = [], []
    for q in range(4):
        for _ in range(20):
            embeddings.append(centers[q].values * 3 + rng.randn(8) * 0.3)
            labels.append(q)
    recall = recall_at_1(embeddings, labels, centers)
    # brute force
    hits = {q: 0 for q in range(4)}
    for f, label in zip(embeddings, labels):
        best_q, best_sim = None, -np.inf
        for q in range(4):
            sim = float(np.dot(f / np.linalg.norm(f), centers[q].values))
            if sim > best_sim:
                best_q, best_sim = q, sim
        hits[label] += int(best_q == label)
    for q in range(4):
        assert recall[q] == pytest.approx(hits[q] / 20)


def test_recall_missing_center_rejected():
    centers = {0: StyleLatent(np.array([1.0, 0.0]))}
    with pytest.raises(ValueError):
        recall_at_1([np.array([1.0, 0.0])], [1], centers)


def test_latent_json_roundtrip():
    rng = np.random.RandomState(4)
    v = rng.randn(32)
    latent = StyleLatent(v / np.linalg.norm(v), provenance="user gallery")
    loaded = StyleLatent.from_json(latent.to_json())
    np.testing.assert_array_equal(loaded.values, latent.values)
    assert loaded.provenance == "user gallery"


def test_latent_validation():
    with pytest.raises(ValueError):
        StyleLatent(np.array([1.0, 1.0]))  # not unit norm
