import json
import math

import numpy as np
import pytest

from freehull.moments import build_hankel, moments_from_representation
from freehull.ncpoly import MatrixTuple, eval_poly, parse_poly
from freehull.pencils import TvScreenConfig
from freehull.scenarios import (SCENARIOS, ScenarioConfig, complete_reduced_hankel,
                                crossterm_witness, malicious_checks, malicious_point,
                                reduced_hankel, run_scenario, sample_classical_lift_point)

MU = (3 - math.sqrt(5)) / 2


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_screen_config_invariants(alpha):
    cfg = TvScreenConfig(alpha=alpha)
    assert abs(cfg.gamma4 - (1 + alpha ** 2)) <= 1e-12
    assert cfg.gamma ** 4 == pytest.approx(1 + alpha ** 2, abs=1e-12)
    assert cfg.gamma2 ** 2 == pytest.approx(cfg.gamma4, abs=1e-12)
    assert abs(np.linalg.norm(cfg.mu * np.array([[2, 1], [1, 1]]), 2) - 1) <= 1e-10


def test_malicious_point_values():
    X, Y, W = malicious_point()
    assert MU == pytest.approx(2 / (3 + math.sqrt(5)), abs=1e-15)
    assert math.sqrt(MU) == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-15)
    assert np.allclose(Y @ Y, MU * np.diag([1.0, 0.0]))
    assert np.allclose(W - Y @ Y, MU * np.ones((2, 2)))
    c = malicious_checks()
    assert c["W_minus_Y2_min_eig"] == pytest.approx(0.0, abs=1e-12)
    assert c["p_min_eig"] == pytest.approx(-0.023676, abs=1e-6)
    # I - X^2 - Y^4 = W^2 - Y^4 = mu^2 [[4,3],[3,2]]
    I = np.eye(2)
    assert np.allclose(I - X @ X - np.linalg.matrix_power(Y, 4),
                       MU ** 2 * np.array([[4, 3], [3, 2]]), atol=1e-12)


def test_reduced_hankel_scalar_completion_is_full_hankel():
    # for commuting scalars with w = y^2 the completion is the true order-2 Hankel
    x, y = 0.4, -0.3
    Hc = reduced_hankel(np.array([[x]]), np.array([[y]]), np.array([[y * y]]))
    H = complete_reduced_hankel(Hc, np.array([[x]]), np.array([[y]]))
    Y = moments_from_representation(MatrixTuple.scalar([x, y]), [[1.0]], 4)
    assert np.allclose(H, build_hankel(Y, 2).dense(), atol=1e-15)


def test_completion_preserves_psd(rng):
    for _ in range(30):
        X1, X2, W = sample_classical_lift_point(rng, 2)
        Hc = reduced_hankel(X1, X2, W)
        assert np.linalg.eigvalsh(Hc)[0] >= -1e-9
        assert np.linalg.eigvalsh(complete_reduced_hankel(Hc, X1, X2))[0] >= -1e-8


def test_crossterm_witness(rng):
    p = parse_poly("1 - x1*x2^2*x1", 2)
    for n in (1, 2):
        X = rng.standard_normal((n, n))
        X = X + X.T
        Y = np.eye(n) * 1.7
        Z, V = crossterm_witness(X, Y)
        assert np.allclose(V.T @ Z[0] @ V, X) and np.allclose(V.T @ Z[1] @ V, Y)
        assert np.allclose(eval_poly(p, Z), np.eye(2 * n), atol=1e-12)


@pytest.mark.parametrize("sid", list(SCENARIOS))
def test_every_scenario_passes(sid, scenario_reports):
    rep = scenario_reports(sid)
    failed = [c.name for c in rep.checks if not c.passed]
    assert rep.checks and not failed


def test_reports_are_byte_stable():
    for sid in ("tv-archimedean", "projection-not-closed", "exactness-box"):
        a = json.dumps(run_scenario(sid, ScenarioConfig(seed=3)).to_json(), sort_keys=True)
        b = json.dumps(run_scenario(sid, ScenarioConfig(seed=3)).to_json(), sort_keys=True)
        assert a == b
    rep = run_scenario("exactness-box", ScenarioConfig(seed=3, per_side=4)).to_json(timing=True)
    assert "seconds" in rep and rep["seed"] == 3


def test_failing_check_fails_report():
    rep = run_scenario("tv-archimedean")
    rep.check("forced", 1, 2, False)
    assert not rep.passed and rep.to_json()["pass"] is False


def test_unknown_scenario():
    with pytest.raises(KeyError):
        run_scenario("no-such-scenario")


def test_d1_separation_details(scenario_reports):
    det = scenario_reports("tv-d1-separates").details
    assert det["d0_status"] == "Infeasible"
    assert det["lift_status"] == "Marginal"
    assert det["d1_margin"] < 0
    assert set(det["functional"]) >= {"c0", "C", "provenance", "level"}
