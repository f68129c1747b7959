import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from lapmap.cluster import kmeans


def _blobs(seed=0, centers=((0, 0), (8, 8), (-8, 8)), per=30, scale=0.5):
    rng = np.random.default_rng(seed)
    points = []
    truth = []
    for i, c in enumerate(centers):
        points.append(np.asarray(c) + scale * rng.standard_normal((per, 2)))
        truth.extend([i] * per)
    return np.concatenate(points), np.array(truth)


class TestKmeans:
    def test_recovers_separated_blobs(self):
        points, truth = _blobs()
        labels, centers = kmeans(points, 3, seed=1)
        assert adjusted_rand_score(truth, labels) == pytest.approx(1.0)
        assert centers.shape == (3, 2)

    def test_labels_shape_and_range(self):
        points, _ = _blobs(per=10)
        labels, _ = kmeans(points, 3, seed=0)
        assert labels.shape == (30,)
        assert set(labels) == {0, 1, 2}

    def test_deterministic(self):
        points, _ = _blobs(seed=2)
        l1, c1 = kmeans(points, 3, seed=7)
        l2, c2 = kmeans(points, 3, seed=7)
        np.testing.assert_array_equal(l1, l2)
        np.testing.assert_array_equal(c1, c2)

    def test_k_equals_n(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        labels, centers = kmeans(points, 3, seed=0)
        assert sorted(labels) == [0, 1, 2]

    def test_single_cluster_center_is_mean(self):
        points, _ = _blobs(per=20)
        labels, centers = kmeans(points, 1, seed=0)
        np.testing.assert_array_equal(labels, 0)
        np.testing.assert_allclose(centers[0], points.mean(axis=0), atol=1e-12)

    def test_duplicate_points_ok(self):
        points = np.zeros((10, 3))
        labels, centers = kmeans(points, 2, seed=0)
        assert labels.shape == (10,)
        assert np.isfinite(centers).all()

    def test_validation(self):
        points, _ = _blobs(per=2)
        with pytest.raises(ValueError):
            kmeans(points, 0)
        with pytest.raises(ValueError):
            kmeans(points, 7)

    def test_centers_minimize_locally(self):
        """Lloyd fixed point: every center is the mean of its members."""
        points, _ = _blobs(seed=4)
        labels, centers = kmeans(points, 3, seed=3)
        for i in range(3):
            members = points[labels == i]
            np.testing.assert_allclose(centers[i], members.mean(axis=0),
                                       atol=1e-10)
