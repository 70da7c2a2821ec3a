import numpy as np
import pytest

from src.config import SNR_CAP, SNR_FLOOR
from src.denoise import (
    SpatioTemporalSignal,
    add_noise,
    arma_divergence_region,
    denoise_signal,
    denoise_sweep,
    dirichlet_energy,
    load_dataset,
    load_points,
    penalty_filterspec,
    penalty_value,
    product_shifts,
    random_points,
    save_dataset,
    save_points,
    snr,
    synth_dataset,
    tikhonov_filterspec,
)
from src.errors import InvalidInputError, InvalidPenaltyError, UndefinedNormalizationError, ZeroReferenceError
from src.filter_engine import apply_filter, dense_matrix
from src.graph_core import build_circulant, build_path


@pytest.fixture
def grid_shifts():
    """Product of path(6) in time with the 4-cycle in space, n = 24."""
    return product_shifts(build_circulant(4, [1]), build_path(6))


@pytest.fixture(scope="module")
def dataset():
    W, spatial, temporal = synth_dataset(seed=2024)
    return W, product_shifts(spatial, temporal)


def tikhonov_dense(S1, S2, g1, g2):
    return np.eye(S1.n) + g1 * S1.toarray() + g2 * S2.toarray()


class TestSignal:
    def test_vectorization_is_time_major(self):
        values = np.arange(24.0).reshape(2, 4, 3)
        W = SpatioTemporalSignal(values)
        block = W.vectorized()
        assert block.shape == (8, 3)
        np.testing.assert_array_equal(block[1 * 4 + 2], values[1, 2])
        np.testing.assert_array_equal(SpatioTemporalSignal.from_vectorized(block, 2, 4).values, values)

    def test_single_channel_promoted(self):
        assert SpatioTemporalSignal(np.ones((3, 5))).channels == 1

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            SpatioTemporalSignal(np.array([[[np.nan]]]))


class TestFilters:
    def test_zero_penalty_is_identity(self, grid_shifts, rng):
        noisy = SpatioTemporalSignal(rng.standard_normal((6, 4, 2)))
        w_hat, _ = denoise_signal(noisy, *grid_shifts, 0.0, 0.0)
        np.testing.assert_allclose(w_hat.values, noisy.values, atol=1e-12)

    def test_cipa_matches_dense_solve(self, grid_shifts, rng):
        S1, S2 = grid_shifts
        noisy = SpatioTemporalSignal(rng.standard_normal((6, 4, 3)))
        exact = np.linalg.solve(tikhonov_dense(S1, S2, 0.5, 0.8), noisy.vectorized())
        w_hat, _ = denoise_signal(noisy, S1, S2, 0.5, 0.8, solver="cipa", M=3, m=10)
        assert np.linalg.norm(w_hat.vectorized() - exact) <= 1e-8 * np.linalg.norm(exact)

    def test_tikhonov_dense_form(self, grid_shifts):
        S1, S2 = grid_shifts
        np.testing.assert_allclose(dense_matrix(tikhonov_filterspec(0.3, 1.2, S1, S2)),
                                   tikhonov_dense(S1, S2, 0.3, 1.2), atol=1e-12)

    def test_negative_penalty_rejected(self, grid_shifts):
        with pytest.raises(InvalidPenaltyError):
            tikhonov_filterspec(-0.1, 1.0, *grid_shifts)
        with pytest.raises(InvalidPenaltyError):
            penalty_filterspec(1.0, -0.1, *grid_shifts)

    def test_penalty_spectrum(self, grid_shifts):
        eigs = np.linalg.eigvalsh(dense_matrix(penalty_filterspec(0.7, 0.4, *grid_shifts)))
        assert eigs.min() >= -1e-12
        assert eigs.max() <= 2 * (0.7 + 0.4) + 1e-12

    def test_product_shifts_layout(self):
        S1, S2 = product_shifts(build_circulant(5, [1]), build_path(3))
        assert S1.n == S2.n == 15
        # S1 acts inside each time slice, S2 along time at a fixed vertex
        assert S1.matrix[0, 1] != 0 and S1.matrix[0, 5] == 0
        assert S2.matrix[0, 5] != 0 and S2.matrix[0, 1] == 0

    def test_unknown_solver(self, grid_shifts):
        with pytest.raises(InvalidInputError):
            denoise_signal(SpatioTemporalSignal(np.ones((6, 4))), *grid_shifts, 1.0, 1.0, solver="lsqr")


class TestNoise:
    def test_noise_level(self, rng):
        W = SpatioTemporalSignal(rng.uniform(-1, 1, (20, 200, 3)))
        noisy = add_noise(W, 0.2, seed=3)
        ratio = np.linalg.norm(noisy.values - W.values) / W.norm()
        assert 0.19 <= ratio <= 0.21

    def test_seeded_noise_is_reproducible(self, rng):
        W = SpatioTemporalSignal(rng.standard_normal((5, 6, 2)))
        np.testing.assert_array_equal(add_noise(W, 0.3, seed=[7, 1]).values, add_noise(W, 0.3, seed=[7, 1]).values)
        assert not np.array_equal(add_noise(W, 0.3, seed=[7, 1]).values, add_noise(W, 0.3, seed=[7, 2]).values)

    def test_zero_signal(self):
        with pytest.raises(UndefinedNormalizationError):
            add_noise(SpatioTemporalSignal(np.zeros((3, 4, 1))), 0.2, seed=0)

    @pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
    def test_fraction_bounds(self, fraction):
        with pytest.raises(InvalidInputError):
            add_noise(SpatioTemporalSignal(np.ones((3, 4, 1))), fraction, seed=0)

    def test_snr_examples(self, rng):
        w = rng.standard_normal(50)
        assert snr(w, w) == SNR_CAP
        assert snr(1.1 * w, w) == pytest.approx(20.0)
        assert snr(np.zeros(50), w) == pytest.approx(0.0)
        with pytest.raises(ZeroReferenceError):
            snr(w, np.zeros(50))


class TestSynthetic:
    def test_deterministic(self):
        a, _, _ = synth_dataset(T=5, n_points=20, k=3, seed=11)
        b, _, _ = synth_dataset(T=5, n_points=20, k=3, seed=11)
        np.testing.assert_array_equal(a.values, b.values)

    def test_points_stream(self):
        np.testing.assert_array_equal(random_points(10, seed=4), np.random.default_rng([4, 0]).uniform(size=(10, 3)))

    def test_no_smoothing_gives_white_noise(self):
        W, spatial, temporal = synth_dataset(T=4, n_points=12, k=3, smoothness=0.0, seed=9)
        np.testing.assert_array_equal(W.values, np.random.default_rng([9, 1]).standard_normal((4, 12, 3)))
        assert spatial.n == 12 and temporal.n == 4

    def test_smoothing_lowers_energy_and_keeps_norm(self):
        white, spatial, temporal = synth_dataset(T=8, n_points=40, k=4, smoothness=0.0, seed=5)
        smooth, _, _ = synth_dataset(T=8, n_points=40, k=4, smoothness=10.0, seed=5)
        S1, S2 = product_shifts(spatial, temporal)
        assert smooth.norm() == pytest.approx(white.norm())
        assert np.all(dirichlet_energy(smooth, S1, S2) < 0.5 * dirichlet_energy(white, S1, S2))

    def test_parameter_checks(self):
        with pytest.raises(InvalidInputError):
            synth_dataset(T=1)
        with pytest.raises(InvalidInputError):
            synth_dataset(n_points=5, k=5)


class TestDenoising:
    def test_cipa_improves_snr(self, dataset):
        W, (S1, S2) = dataset
        noisy = add_noise(W, 0.2, seed=[2024, 0])
        w_hat, _ = denoise_signal(noisy, S1, S2, 1.0, 1.0, solver="cipa", M=3, m=3)
        assert snr(w_hat.values, W.values) >= snr(noisy.values, W.values) + 3.0

    def test_cipa_beats_ogda_at_equal_iterations(self, dataset):
        W, (S1, S2) = dataset
        noisy = add_noise(W, 0.2, seed=[2024, 0])
        cipa, _ = denoise_signal(noisy, S1, S2, 1.0, 1.0, solver="cipa", M=3, m=3)
        ogda, _ = denoise_signal(noisy, S1, S2, 1.0, 1.0, solver="ogda", m=3)
        assert snr(cipa.values, W.values) >= snr(ogda.values, W.values)

    def test_energy_decreases_with_penalty(self, grid_shifts, rng):
        S1, S2 = grid_shifts
        noisy = SpatioTemporalSignal(rng.standard_normal((6, 4, 1)))
        energies = []
        for g in (0.0, 0.5, 1.0, 2.0):
            w_hat, _ = denoise_signal(noisy, S1, S2, g, g, solver="cipa", M=4, m=20)
            energies.append(float(dirichlet_energy(w_hat, S1, S2)[0]))
        assert all(b < a for a, b in zip(energies, energies[1:]))

    @pytest.mark.parametrize("gammas", [(1.0, 1.0), (1.5, 0.5), (0.2, 3.0)])
    def test_penalty_of_estimate_below_noisy(self, grid_shifts, rng, gammas):
        S1, S2 = grid_shifts
        noisy = SpatioTemporalSignal(rng.standard_normal((6, 4, 2)))
        w_hat, _ = denoise_signal(noisy, S1, S2, *gammas, M=4, m=20)
        assert np.all(penalty_value(w_hat, S1, S2, *gammas) <= penalty_value(noisy, S1, S2, *gammas))

    def test_channels_are_independent(self, grid_shifts, rng):
        S1, S2 = grid_shifts
        values = rng.standard_normal((6, 4, 3))
        joint, _ = denoise_signal(SpatioTemporalSignal(values), S1, S2, 0.6, 0.3, M=3, m=4)
        for c in range(3):
            single, _ = denoise_signal(SpatioTemporalSignal(values[:, :, c]), S1, S2, 0.6, 0.3, M=3, m=4)
            np.testing.assert_allclose(joint.values[:, :, c], single.values[:, :, 0], atol=1e-13)

    def test_solution_is_stationary_point(self, grid_shifts, rng):
        S1, S2 = grid_shifts
        noisy = SpatioTemporalSignal(rng.standard_normal((6, 4, 2)))
        w_hat, _ = denoise_signal(noisy, S1, S2, 1.5, 0.5, M=4, m=15)
        H = tikhonov_filterspec(1.5, 0.5, S1, S2)
        residual = apply_filter(H, w_hat.vectorized()) - noisy.vectorized()
        assert np.linalg.norm(residual) <= 1e-9 * noisy.norm()

    def test_reference_records_errors(self, grid_shifts, rng):
        S1, S2 = grid_shifts
        W = SpatioTemporalSignal(rng.standard_normal((6, 4, 1)))
        _, trace = denoise_signal(add_noise(W, 0.2, seed=1), S1, S2, 0.5, 0.5, m=2, reference=W)
        assert len(trace.rel_errors) == 3


@pytest.fixture(scope="module")
def arma_instance():
    W, spatial, temporal = synth_dataset(T=5, n_points=30, k=4, seed=3)
    return W, product_shifts(spatial, temporal, interval_method="dense-eig")


class TestArmaRegion:
    GAMMAS = [0.0, 0.2, 0.45, 0.7, 0.95]

    def test_flags_match_dense_radius(self, arma_instance):
        W, (S1, S2) = arma_instance
        region = arma_divergence_region(S1, S2, self.GAMMAS)
        noisy = add_noise(W, 0.2, seed=0)
        for row in region.itertuples():
            _, trace = denoise_signal(noisy, S1, S2, row.γ1, row.γ2, solver="arma", m=3)
            assert trace.diverged == row.diverges

    def test_sweep_floors_divergent_points(self, arma_instance):
        W, (S1, S2) = arma_instance
        region = arma_divergence_region(S1, S2, self.GAMMAS)
        sweep = denoise_sweep(W, S1, S2, [0.2], self.GAMMAS, solver="arma", m=3)
        assert len(sweep) == len(region) == 25
        assert region["diverges"].any() and not region["diverges"].all()
        assert (sweep.loc[region["diverges"].to_numpy(), "mean_snr"] == SNR_FLOOR).all()
        assert (sweep["mean_snr"] >= SNR_FLOOR).all()
        assert sweep["M"].isna().all()


class TestSweep:
    def test_columns_and_shared_noise(self, grid_shifts, rng):
        W = SpatioTemporalSignal(rng.standard_normal((6, 4, 2)))
        df = denoise_sweep(W, *grid_shifts, [0.1, 0.3], [0.0, 1.0], solver="cipa", M=2, m=2, trials=2, seed=5)
        assert list(df.columns) == ["fraction", "γ1", "γ2", "solver", "M", "m", "mean_snr", "input_snr",
                                    "trials", "seed"]
        assert len(df) == 2 * 4
        assert df.groupby("fraction")["input_snr"].nunique().eq(1).all()
        again = denoise_sweep(W, *grid_shifts, [0.1, 0.3], [0.0, 1.0], solver="cipa", M=2, m=2, trials=2, seed=5)
        np.testing.assert_array_equal(df["mean_snr"], again["mean_snr"])


class TestFormats:
    def test_dataset_file(self, tmp_path, rng):
        W = SpatioTemporalSignal(rng.standard_normal((3, 4, 2)))
        path = save_dataset(W, tmp_path / "dataset.txt")
        assert path.read_text().splitlines()[0] == "3 4 2"
        np.testing.assert_array_equal(load_dataset(path).values, W.values)

    def test_dataset_size_checked(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2 1\n1.0\n2.0\n3.0\n")
        with pytest.raises(InvalidInputError):
            load_dataset(path)

    def test_points_file(self, tmp_path):
        pts = random_points(7, seed=1)
        path = save_points(pts, tmp_path / "points.txt")
        assert path.read_text().splitlines()[0] == "7 3"
        np.testing.assert_array_equal(load_points(path), pts)
