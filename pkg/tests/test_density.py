import numpy as np
import pytest

from genuq.density import (DensityArtifacts, GaussianFit, HuqConfig,
                           fit_gaussian, fit_mcd_gaussian, fit_rde,
                           huq_combine, load_density_artifacts, mahalanobis,
                           rde_score, relative_mahalanobis,
                           save_density_artifacts)
from genuq.errors import (InputError, InsufficientDataError, NumericError,
                          ShapeError)


class TestFitGaussian:
    def test_all_equal_is_degenerate(self):
        fit = fit_gaussian([[1.0, 2.0]] * 5, reg=0.5)
        assert np.allclose(fit.mu, [1.0, 2.0])
        assert fit.degenerate
        assert np.allclose(fit.sigma, 0.5 * np.eye(2))

    def test_hand_covariance(self):
        pts = [(1, 0), (-1, 0), (0, 1), (0, -1)]
        fit = fit_gaussian(pts, reg=1e-9)
        assert np.allclose(fit.mu, [0, 0])
        assert np.allclose(fit.sigma, np.diag([0.5, 0.5]) + 1e-9 * np.eye(2))

    def test_zero_reg_singular_data(self):
        pts = [(0, 0), (1, 1), (2, 2)]  # rank-1
        with pytest.raises(NumericError):
            fit_gaussian(pts, reg=0.0)

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            fit_gaussian([[1.0, 2.0]])

    def test_inverse_identity(self):
        rng = np.random.default_rng(0)
        fit = fit_gaussian(rng.normal(size=(50, 4)))
        assert np.abs(fit.sigma_inv @ fit.sigma - np.eye(4)).max() < 1e-4


class TestMahalanobis:
    def test_zero_at_centroid(self):
        fit = fit_gaussian(np.random.default_rng(1).normal(size=(30, 3)))
        assert mahalanobis(fit, fit.mu) == 0.0

    def test_identity_covariance_squared_euclid(self):
        fit = GaussianFit(mu=np.zeros(2), sigma=np.eye(2),
                          sigma_inv=np.eye(2), dim=2, reg=0.0)
        assert mahalanobis(fit, [3.0, 4.0]) == pytest.approx(25.0, abs=1e-12)

    def test_diagonal_quadratic_form(self):
        fit = GaussianFit(mu=np.zeros(2), sigma=np.diag([4.0, 1.0]),
                          sigma_inv=np.diag([0.25, 1.0]), dim=2, reg=0.0)
        assert mahalanobis(fit, [2.0, 1.0]) == pytest.approx(2.0, abs=1e-12)

    def test_shape_mismatch(self):
        fit = fit_gaussian(np.random.default_rng(2).normal(size=(20, 3)))
        with pytest.raises(ShapeError):
            mahalanobis(fit, [1.0, 2.0])

    def test_affine_equivariance(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(200, 5))
        a = rng.normal(size=(5, 5)) + 3 * np.eye(5)
        b = rng.normal(size=5)
        h = rng.normal(size=5)
        plain = mahalanobis(fit_gaussian(x, reg=0.0), h)
        mapped = mahalanobis(fit_gaussian(x @ a.T + b, reg=0.0), a @ h + b)
        assert mapped == pytest.approx(plain, abs=1e-6)


class TestRelativeMahalanobis:
    def test_identical_fits_zero(self):
        rng = np.random.default_rng(3)
        fit = fit_gaussian(rng.normal(size=(40, 3)))
        assert relative_mahalanobis(fit, fit, rng.normal(size=3)) == 0.0

    def test_h_at_background_centroid(self):
        rng = np.random.default_rng(4)
        fit = fit_gaussian(rng.normal(size=(40, 2)) + 5.0)
        bg = fit_gaussian(rng.normal(size=(40, 2)))
        got = relative_mahalanobis(fit, bg, bg.mu)
        assert got == pytest.approx(mahalanobis(fit, bg.mu), abs=1e-12)

    def test_compositional(self):
        rng = np.random.default_rng(5)
        fit = fit_gaussian(rng.normal(size=(30, 3)))
        bg = fit_gaussian(rng.normal(size=(30, 3)) * 2)
        h = rng.normal(size=3)
        assert relative_mahalanobis(fit, bg, h) == pytest.approx(
            mahalanobis(fit, h) - mahalanobis(bg, h), abs=1e-12)


class TestMcd:
    def test_full_support_equals_plain_fit(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(60, 3))
        robust = fit_mcd_gaussian(x, support_fraction=1.0, seed=0)
        plain = fit_gaussian(x)
        assert np.abs(robust.mu - plain.mu).max() < 1e-8
        assert np.abs(robust.sigma - plain.sigma).max() < 1e-8

    def test_outliers_pull_plain_mean_not_mcd(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            inliers = rng.normal(size=(90, 2))
            outliers = rng.normal(size=(10, 2)) + 8.0
            x = np.vstack([inliers, outliers])
            robust = fit_mcd_gaussian(x, support_fraction=0.75, seed=seed)
            plain = fit_gaussian(x)
            inlier_mean = inliers.mean(axis=0)
            assert (np.linalg.norm(robust.mu - inlier_mean)
                    < np.linalg.norm(plain.mu - inlier_mean))

    def test_deterministic_under_seed(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(50, 2))
        a = fit_mcd_gaussian(x, seed=13)
        b = fit_mcd_gaussian(x, seed=13)
        assert np.array_equal(a.mu, b.mu)
        assert np.array_equal(a.sigma, b.sigma)


class TestRde:
    def test_lowrank_reconstruction(self):
        rng = np.random.default_rng(9)
        basis = np.linalg.qr(rng.normal(size=(5, 2)))[0]
        x = rng.normal(size=(80, 2)) @ basis.T  # lies in a 2-D subspace
        fit = fit_rde(x, target_dim=2, mcd_support_fraction=1.0)
        z = (x - fit.pca_mean) @ fit.projection
        recon = z @ fit.projection.T + fit.pca_mean
        assert np.abs(recon - x).max() < 1e-6
        assert fit.explained_variance == pytest.approx(1.0, abs=1e-9)

    def test_projection_columns_orthonormal(self):
        rng = np.random.default_rng(10)
        fit = fit_rde(rng.normal(size=(60, 6)), target_dim=3)
        gram = fit.projection.T @ fit.projection
        assert np.abs(gram - np.eye(3)).max() < 1e-6

    def test_score_near_zero_at_mean(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(100, 4))
        fit = fit_rde(x, target_dim=2, mcd_support_fraction=1.0)
        assert rde_score(fit, x.mean(axis=0)) < 1e-12

    def test_discarded_directions_do_not_move_score(self):
        rng = np.random.default_rng(12)
        # huge variance in first two axes, the rest is noise
        x = rng.normal(size=(200, 4)) * np.array([10.0, 8.0, 0.1, 0.1])
        fit = fit_rde(x, target_dim=2, mcd_support_fraction=1.0)
        h = rng.normal(size=4)
        null = np.eye(4) - fit.projection @ fit.projection.T
        moved = h + null @ rng.normal(size=4) * 5
        assert rde_score(fit, moved) == pytest.approx(rde_score(fit, h),
                                                      abs=1e-8)

    def test_compositional_projection_oracle(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=(50, 5))
        fit = fit_rde(x, target_dim=3, mcd_support_fraction=1.0)
        h = rng.normal(size=5)
        z = (h - fit.pca_mean) @ fit.projection
        assert rde_score(fit, h) == pytest.approx(
            mahalanobis(fit.reduced_fit, z), abs=1e-12)

    def test_target_dim_validation(self):
        rng = np.random.default_rng(14)
        with pytest.raises(InputError):
            fit_rde(rng.normal(size=(30, 3)), target_dim=3)
        with pytest.raises(InsufficientDataError):
            fit_rde(rng.normal(size=(3, 5)), target_dim=2)


class TestHuq:
    def cfg(self, alpha=0.5):
        return HuqConfig(alpha=alpha,
                         calibration_density=tuple(range(1, 11)),
                         calibration_info=tuple(range(1, 11)))

    def test_both_at_maximum(self):
        assert huq_combine(self.cfg(), 10.0, 10.0) == 1.0

    def test_alpha_one_is_density_rank(self):
        assert huq_combine(self.cfg(alpha=1.0), 2.0, 9.0) == pytest.approx(0.2)

    def test_interpolation(self):
        assert huq_combine(self.cfg(alpha=0.5), 2.0, 6.0) == pytest.approx(0.4)

    def test_rank_invariance_under_monotone_transform(self):
        rng = np.random.default_rng(15)
        dens = tuple(sorted(rng.normal(size=20)))
        info = tuple(sorted(rng.normal(size=20)))
        cfg = HuqConfig(alpha=0.3, calibration_density=dens,
                        calibration_info=info)
        transformed = HuqConfig(
            alpha=0.3,
            calibration_density=tuple(np.exp(3 * np.asarray(dens))),
            calibration_info=info)
        d, i = dens[7], info[4]
        assert huq_combine(cfg, d, i) == huq_combine(
            transformed, float(np.exp(3 * d)), i)

    def test_calibration_length_validation(self):
        with pytest.raises(InputError):
            HuqConfig(calibration_density=(1.0,), calibration_info=(1.0,))


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(16)
        x = rng.normal(size=(60, 4))
        artifacts = DensityArtifacts(
            fit=fit_gaussian(x),
            background=fit_gaussian(rng.normal(size=(60, 4)) + 1),
            rde=fit_rde(x, target_dim=2, seed=3))
        path = tmp_path / "fit.bin"
        save_density_artifacts(artifacts, str(path))
        loaded = load_density_artifacts(str(path))
        assert np.array_equal(loaded.fit.mu, artifacts.fit.mu)
        assert np.array_equal(loaded.fit.sigma_inv, artifacts.fit.sigma_inv)
        assert np.array_equal(loaded.background.mu, artifacts.background.mu)
        assert np.array_equal(loaded.rde.projection, artifacts.rde.projection)
        assert loaded.rde.explained_variance == artifacts.rde.explained_variance
        h = rng.normal(size=4)
        assert rde_score(loaded.rde, h) == rde_score(artifacts.rde, h)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a fit file")
        with pytest.raises(InputError):
            load_density_artifacts(str(path))
