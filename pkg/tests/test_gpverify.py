import numpy as np
import pytest
from scipy import stats

from kernelprobe.definiteness import psd_check
from kernelprobe.distances import all_permutations, distance, distance_matrix
from kernelprobe.gpverify import (
    GpFitError,
    GpModel,
    concentrated_loglik,
    factorize,
    fit_gp,
    make_dataset,
    predict,
    rmse_experiment,
)
from kernelprobe.sampler import random_solution_set

INDEFINITE = ("lev", "int", "ins", "lcstr", "che")


def test_dataset_targets():
    rng = np.random.default_rng(0)
    x, y = make_dataset("ham", 10, 5, rng)
    assert np.all((0 <= y) & (y <= 1))
    for xi, yi in zip(x, y):
        assert yi == distance("ham", xi, [1, 2, 3, 4, 5])


def test_dataset_identity_and_reverse():
    x = np.array([[4, 3, 2, 1], [1, 2, 3, 4]])
    y = [distance("ham", xi, [1, 2, 3, 4]) for xi in x]
    assert y == [1, 0]


def test_factorize_ladder():
    f, nug = factorize(np.eye(3))
    assert nug == 0
    # singular PSD matrix: needs a nugget
    f, nug = factorize(np.ones((3, 3)))
    assert f is not None and 0 < nug <= 1e-4
    f, nug = factorize(np.array([[1, 2], [2, 1]], float))
    assert f is None and nug is None


def test_profiled_parameters_are_maximizers():
    rng = np.random.default_rng(1)
    x, y = make_dataset("ham", 12, 6, rng)
    d = distance_matrix("ham", x)
    ll, _ = concentrated_loglik(d, y, 2.0)
    model = GpModel.at_theta(x, y, "ham", 2.0)
    for delta in (1e-3, 1e-2, 1e-1):
        for sign in (1, -1):
            shifted, _ = concentrated_loglik(d, y, 2.0, mu=model.mu_hat + sign * delta)
            assert shifted < ll
            scaled, _ = concentrated_loglik(d, y, 2.0, sigma2=model.sigma2_hat * (1 + sign * delta))
            assert scaled < ll


def test_loglik_matches_direct_formula():
    rng = np.random.default_rng(2)
    x, y = make_dataset("int", 8, 5, rng)
    d = distance_matrix("int", x)
    theta = 3.0
    k = np.exp(-theta * d)
    one = np.ones_like(y)
    ki = np.linalg.inv(k)
    mu = one @ ki @ y / (one @ ki @ one)
    r = y - mu
    s2 = r @ ki @ r / y.size
    expected = -0.5 * y.size * np.log(s2) - 0.5 * np.linalg.slogdet(k)[1] - 0.5 * y.size
    ll, nug = concentrated_loglik(d, y, theta)
    assert nug == 0
    assert ll == pytest.approx(expected, rel=1e-9)


def test_fit_on_cnsd_measure():
    rng = np.random.default_rng(3)
    x, y = make_dataset("ham", 15, 6, rng)
    model = fit_gp(x, y, "ham")
    assert 1e-3 <= model.theta <= 1e3
    assert np.isfinite(model.loglik)
    for th in (1e-3, 1.0, 1e3):
        assert psd_check(np.exp(-th * distance_matrix("ham", x))).is_psd


def test_fit_input_errors():
    x = random_solution_set(5, 6, np.random.default_rng(0))
    with pytest.raises(ValueError):
        fit_gp(x, np.full(6, 0.3), "ham")
    with pytest.raises(ValueError):
        fit_gp(x[:2], np.array([0.0, 1.0]), "ham")
    with pytest.raises(ValueError):
        fit_gp(x, np.zeros(5), "ham")


def test_fit_failure_carries_diagnostics(monkeypatch):
    import kernelprobe.gpverify as gp

    monkeypatch.setattr(gp, "factorize", lambda k: (None, None))
    x, y = make_dataset("ham", 6, 5, np.random.default_rng(0))
    with pytest.raises(GpFitError) as info:
        gp.fit_gp(x, y, "ham", likelihood_budget=50)
    assert info.value.diagnostics["evaluations"] > 0
    assert info.value.diagnostics["failed"] == info.value.diagnostics["evaluations"]


def test_interpolates_training_points():
    rng = np.random.default_rng(4)
    x, y = make_dataset("lev", 12, 6, rng)
    model = fit_gp(x, y, "lev")
    assert model.nugget == 0
    np.testing.assert_allclose(predict(model, x), y, atol=1e-6)
    assert predict(model, x[0]) == pytest.approx(y[0], abs=1e-6)


def test_single_point_predicts_its_value():
    model = GpModel.at_theta([[1, 3, 2]], [0.4], "ham", 0.7)
    for p in all_permutations(3):
        assert predict(model, p) == pytest.approx(0.4)


def test_far_points_revert_to_mean():
    x = np.array([[1, 2, 3, 4, 5], [2, 1, 3, 4, 5], [1, 2, 3, 5, 4]])
    model = GpModel.at_theta(x, [0.0, 0.4, 0.4], "ham", 1e3)
    assert predict(model, [5, 4, 1, 3, 2]) == pytest.approx(model.mu_hat, abs=1e-12)


def test_unfitted_predict_raises():
    model = GpModel(np.zeros((1, 3), int), np.zeros(1), "ham", 1.0, 0.0, 1.0, 0.0)
    with pytest.raises(RuntimeError):
        predict(model, [1, 2, 3])


def test_exhaustive_rmse_at_m4():
    x, y = make_dataset("ins", 8, 4, np.random.default_rng(5))
    model = fit_gp(x, y, "ins")
    grid = all_permutations(4)
    truth = np.array([distance("ins", p, [1, 2, 3, 4]) for p in grid])
    rmse = np.sqrt(np.mean((predict(model, grid) - truth) ** 2))
    assert np.isfinite(rmse) and rmse < 1


def test_rmse_run_record():
    run = rmse_experiment("euc", 10, 6, test_size=200, seed=3)
    assert run.fit_status == "ok"
    assert run.lambda_n <= 1e-10
    assert run.rmse >= 0
    assert set(run.row()) == {"measure", "n", "m", "seed", "lambda_n", "theta", "nugget", "rmse", "fit_status"}
    again = rmse_experiment("euc", 10, 6, test_size=200, seed=3)
    assert again == run


def test_euclidean_runs_never_positive():
    assert all(rmse_experiment("euc", 12, m, test_size=50, seed=s).lambda_n <= 1e-10 for m in (5, 6) for s in range(5))


def test_chebyshev_runs_reach_positive_lambda():
    lams = [rmse_experiment("che", 15, m, test_size=50, seed=s).lambda_n for m in (5, 6, 7, 8) for s in range(5)]
    assert max(lams) > 1e-10


def test_test_points_avoid_training_set(monkeypatch):
    import kernelprobe.gpverify as gp

    captured = {}
    real = gp.predict

    def spy(model, pts):
        captured["train"] = {tuple(p) for p in model.x}
        captured["test"] = [tuple(p) for p in np.atleast_2d(pts)]
        return real(model, pts)

    monkeypatch.setattr(gp, "predict", spy)
    gp.rmse_experiment("ins", 20, 4, test_size=1000, seed=0)
    assert len(captured["test"]) == 1000
    assert not set(captured["test"]) & captured["train"]
    assert len(set(captured["test"])) == 4


def test_fit_failure_recorded_not_raised(monkeypatch):
    import kernelprobe.gpverify as gp

    monkeypatch.setattr(gp, "factorize", lambda k: (None, None))
    run = gp.rmse_experiment("ham", 6, 5, test_size=10, seed=0, likelihood_budget=30)
    assert run.fit_status.startswith("failed")
    assert np.isnan(run.rmse)


def test_theta_pushed_up_for_indefinite_measure():
    ups, ratios = 0, []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = random_solution_set(6, 15, rng)
        ref = np.arange(1, 7)
        th = {}
        for measure in ("int", "ham"):
            y = np.array([distance(measure, xi, ref) for xi in x])
            th[measure] = fit_gp(x, y, measure).theta
        ups += th["int"] > th["ham"]
        ratios.append(np.log10(th["int"] / th["ham"]))
        k = np.exp(-th["int"] * distance_matrix("int", x))
        assert factorize(k)[0] is not None
    assert ups >= 15
    assert np.median(ratios) > 0


@pytest.mark.slow
def test_lambda_rmse_trend():
    lam, err = [], []
    for k in range(50):
        run = rmse_experiment(INDEFINITE[k % 5], 15, 5 + k % 3, test_size=1000, seed=k)
        assert run.fit_status == "ok"
        lam.append(run.lambda_n)
        err.append(run.rmse)
    assert stats.spearmanr(lam, err).statistic > 0
