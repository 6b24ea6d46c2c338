import numpy as np
import pytest

from hgspec.augment import (
    AugmentConfig,
    SpectralAugmenter,
    apply_scheme,
    complement_matrix,
    learn_schemes,
    load_scheme,
    materialize_views,
    objective_value,
    save_scheme,
)
from hgspec.hetgraph import MetaPath, MetaPathView
from hgspec.spectral import (
    graph_spectrum,
    normalized_laplacian,
    spectrum_norm,
    spectrum_norm_grad,
)

from conftest import charpoly_eigenvalues, random_view_adjacency


def as_view(a: np.ndarray, name: str = "mp") -> MetaPathView:
    return MetaPathView(MetaPath(name, ("t", "x", "t"), ("r", "r")), np.asarray(a, float))


class TestComplement:
    def test_existing_edge_negated(self):
        a = np.array([[0.0, 0.5], [0.5, 0.0]])
        assert np.array_equal(complement_matrix(a), [[0.0, -0.5], [-0.5, 0.0]])

    def test_all_zero_gives_off_diagonal_ones(self):
        c = complement_matrix(np.zeros((3, 3)))
        assert np.array_equal(c, np.ones((3, 3)) - np.eye(3))

    def test_mixed(self):
        a = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.5], [0.0, 0.5, 0.0]])
        expect = np.array([[0.0, -1.0, 1.0], [-1.0, 0.0, -0.5], [1.0, -0.5, 0.0]])
        assert np.array_equal(complement_matrix(a), expect)

    def test_literal_keeps_sign(self):
        a = np.array([[0.0, 0.5], [0.5, 0.0]])
        assert np.array_equal(complement_matrix(a, literal=True), [[0.0, 0.5], [0.5, 0.0]])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            complement_matrix(np.array([[0.0, 1.5], [1.5, 0.0]]))


class TestApplyScheme:
    def test_zero_scheme_is_identity(self, rng):
        a = random_view_adjacency(rng, 5)
        assert np.array_equal(apply_scheme(a, np.zeros_like(a)), a)

    def test_full_flip(self, rng):
        a = random_view_adjacency(rng, 5)
        b = np.ones_like(a) - np.eye(5)
        t = apply_scheme(a, b)
        assert np.all(t[a > 0] == 0.0)
        off = ~np.eye(5, dtype=bool)
        assert np.all(t[(a == 0) & off] == 1.0)

    def test_partial_weights(self):
        a = np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])
        b = np.full((3, 3), 0.4) - 0.4 * np.eye(3)
        t = apply_scheme(a, b)
        assert t[0, 1] == pytest.approx(0.3)
        assert t[0, 2] == pytest.approx(0.4)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            apply_scheme(np.zeros((3, 3)), np.zeros((4, 4)))

    def test_b_out_of_range(self):
        with pytest.raises(ValueError):
            apply_scheme(np.zeros((2, 2)), np.array([[0.0, 1.5], [1.5, 0.0]]))

    def test_closure_fuzz(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 9))
            a = random_view_adjacency(rng, n)
            u = np.triu(rng.random((n, n)), 1)
            b = u + u.T
            t = apply_scheme(a, b)
            assert np.array_equal(t, t.T)
            assert np.all(np.diag(t) == 0)
            assert t.min() >= 0.0 and t.max() <= 1.0


class TestObjectiveValue:
    def test_single_zero_scheme(self, rng):
        a = random_view_adjacency(rng, 5)
        assert objective_value(a, np.zeros_like(a), kind="single") == pytest.approx(0.0, abs=1e-9)

    def test_single_max_zero_scheme(self, rng):
        a = random_view_adjacency(rng, 5)
        assert objective_value(a, np.zeros_like(a), kind="single_max") == pytest.approx(1.0)

    def test_double_max_matches_oracle(self, rng):
        a = random_view_adjacency(rng, 6)
        u1 = np.triu(rng.random((6, 6)), 1)
        u2 = np.triu(rng.random((6, 6)), 1)
        b1, b2 = u1 + u1.T, u2 + u2.T
        lam1 = charpoly_eigenvalues(normalized_laplacian(apply_scheme(a, b1)))
        lam2 = charpoly_eigenvalues(normalized_laplacian(apply_scheme(a, b2)))
        expect = np.linalg.norm(lam1) / np.linalg.norm(lam2)
        got = objective_value(a, b1, b2, kind="double_max")
        assert got == pytest.approx(expect, abs=1e-8)

    def test_double_requires_second_scheme(self, rng):
        a = random_view_adjacency(rng, 4)
        with pytest.raises(ValueError, match="second scheme"):
            objective_value(a, np.zeros_like(a), kind="double")


class TestLearnSchemes:
    def test_zero_iterations(self, rng):
        view = as_view(random_view_adjacency(rng, 6))
        s1, s2 = learn_schemes(view, AugmentConfig(iterations=0))
        assert np.array_equal(s1.probs, np.zeros((6, 6)))
        assert np.array_equal(s2.probs, np.zeros((6, 6)))
        assert s1.trace == [1.0] and s2.trace == [1.0]

    def test_ascent_on_seeded_view(self, rng):
        view = as_view(random_view_adjacency(rng, 20, density=0.2))
        cfg = AugmentConfig(lr=0.1, iterations=50)
        s1, s2 = learn_schemes(view, cfg)
        t1, t2 = np.array(s1.trace), np.array(s2.trace)
        assert np.all(np.diff(t1) >= -1e-6)
        assert np.all(np.diff(t2) >= -1e-6)
        assert t1[-1] >= 1.0 and t2[-1] >= 1.0
        norm_orig = spectrum_norm(graph_spectrum(normalized_laplacian(view.adjacency)))
        aug2 = apply_scheme(view.adjacency, s2.probs)
        norm_down = spectrum_norm(graph_spectrum(normalized_laplacian(aug2)))
        assert norm_down <= norm_orig + 1e-9

    def test_small_lr_monotone_without_budget(self):
        for seed in range(5):
            gen = np.random.default_rng(seed)
            view = as_view(random_view_adjacency(gen, 8))
            s1, _ = learn_schemes(view, AugmentConfig(lr=0.01, iterations=20))
            assert np.all(np.diff(np.array(s1.trace)) >= -1e-6)

    def test_all_zero_view_rejected(self):
        view = as_view(np.zeros((4, 4)))
        with pytest.raises(ValueError, match="all-zero"):
            learn_schemes(view, AugmentConfig())

    def test_isolated_pair_gradient_zero(self):
        # single edge between an otherwise isolated pair: flat direction
        a = np.zeros((5, 5))
        a[0, 1] = a[1, 0] = 1.0
        a[2, 3] = a[3, 2] = 0.6
        a[3, 4] = a[4, 3] = 0.8
        grad = spectrum_norm_grad(a)
        assert grad[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_budget_projection_caps_mass(self, rng):
        view = as_view(random_view_adjacency(rng, 10, density=0.3))
        cfg = AugmentConfig(lr=0.1, iterations=30, budget_fraction=0.5)
        s1, s2 = learn_schemes(view, cfg)
        budget = 0.5 * np.count_nonzero(view.adjacency)
        assert s1.probs.sum() <= budget + 1e-9
        assert s2.probs.sum() <= budget + 1e-9


class TestMaterialize:
    def test_zero_schemes_reproduce_input(self, rng):
        view = as_view(random_view_adjacency(rng, 6))
        s1, s2 = learn_schemes(view, AugmentConfig(iterations=0))
        v1, v2 = materialize_views(view, s1, s2)
        assert np.array_equal(v1.adjacency, view.adjacency)
        assert np.array_equal(v2.adjacency, view.adjacency)

    def test_bernoulli_all_ones_is_full_flip(self, rng):
        view = as_view(random_view_adjacency(rng, 5))
        s1, s2 = learn_schemes(view, AugmentConfig(iterations=0))
        ones = np.ones_like(view.adjacency) - np.eye(5)
        s1.probs = ones
        s2.probs = ones.copy()
        det1, _ = materialize_views(view, s1, s2, mode="deterministic")
        ber1, _ = materialize_views(view, s1, s2, mode="bernoulli", seed=3)
        assert np.array_equal(det1.adjacency, ber1.adjacency)

    def test_bernoulli_seed_determinism(self, rng):
        view = as_view(random_view_adjacency(rng, 8))
        s1, s2 = learn_schemes(view, AugmentConfig(lr=0.1, iterations=10))
        a1, b1 = materialize_views(view, s1, s2, mode="bernoulli", seed=7)
        a2, b2 = materialize_views(view, s1, s2, mode="bernoulli", seed=7)
        assert np.array_equal(a1.adjacency, a2.adjacency)
        assert np.array_equal(b1.adjacency, b2.adjacency)

    def test_view_mismatch_rejected(self, rng):
        view = as_view(random_view_adjacency(rng, 6))
        other = as_view(random_view_adjacency(rng, 6))
        s1, s2 = learn_schemes(view, AugmentConfig(iterations=0))
        with pytest.raises(ValueError, match="not learned on this view"):
            materialize_views(other, s1, s2)


class TestCheckpoints:
    def test_round_trip(self, tmp_path, rng):
        view = as_view(random_view_adjacency(rng, 7))
        s1, _ = learn_schemes(view, AugmentConfig(lr=0.1, iterations=15))
        path = str(tmp_path / "scheme_mp_1.tsv")
        save_scheme(s1, path, header_comment="config=abc seed=0")
        loaded = load_scheme(path, view)
        assert np.array_equal(loaded.probs, s1.probs)
        assert loaded.final_objective == pytest.approx(s1.final_objective)
        # re-saving a loaded scheme reproduces the matrix block bit-for-bit
        path2 = str(tmp_path / "again.tsv")
        save_scheme(loaded, path2, header_comment="config=abc seed=0")
        body = open(path).read().splitlines()[2:]
        body2 = open(path2).read().splitlines()[2:]
        assert body == body2


class TestEstimator:
    def test_fit_transform_on_adjacency(self, rng):
        a = random_view_adjacency(rng, 10, density=0.3)
        aug = SpectralAugmenter(lr=0.1, iterations=20)
        up, down = aug.fit_transform(a)
        assert up.shape == a.shape and down.shape == a.shape
        assert aug.separation() > 0

    def test_get_params_round_trip(self):
        aug = SpectralAugmenter(lr=0.05, iterations=10)
        params = aug.get_params()
        assert params["lr"] == 0.05
        clone = SpectralAugmenter(**params)
        assert clone.get_params() == params

    def test_unfitted_transform_rejected(self, rng):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            SpectralAugmenter().transform(random_view_adjacency(rng, 4))

    def test_literal_flip_config(self, rng):
        a = random_view_adjacency(rng, 6, density=0.4)
        view = as_view(a)
        cfg = AugmentConfig(lr=0.1, iterations=5, literal_flip=True)
        s1, _ = learn_schemes(view, cfg)
        # literal rule doubles existing edges instead of deleting them
        t = a + s1.flips * s1.probs
        assert t[a > 0].min() >= a[a > 0].min()
