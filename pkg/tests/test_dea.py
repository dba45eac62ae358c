import numpy as np
import pytest

from oracles import dea_ratio_oracle
from paneleff.dea import DeaSpec, run_panel_dea, solve_bcc, solve_ccr
from paneleff.errors import UsageError, ValidationFailedError
from paneleff.panel_data import CrossSection, PanelDataset, VariableDef


def cross_section(inputs, outputs, period="t"):
    X = np.asarray(inputs, float)
    Y = np.asarray(outputs, float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    return CrossSection(period, tuple(f"d{i}" for i in range(X.shape[0])), X, Y)


def random_cs(rng, n=10, m=3, s=2):
    return cross_section(rng.uniform(1, 10, (n, m)), rng.uniform(1, 10, (n, s)))


def test_single_dmu_is_efficient_and_its_own_peer():
    cs = cross_section([2.0], [3.0])
    r = solve_ccr(cs, "d0")
    assert r.score == 1.0
    assert r.peers == (0,)
    assert r.lambdas[0] == pytest.approx(1.0)


def test_two_dmu_ratio_example():
    cs = cross_section([2.0, 4.0], [4.0, 4.0])
    assert solve_ccr(cs, "d0").score == 1.0
    assert solve_ccr(cs, "d1").score == pytest.approx(0.5, abs=1e-9)


def test_duplicating_an_efficient_dmu_changes_no_score():
    rng = np.random.default_rng(21)
    cs = random_cs(rng, n=8)
    base = [solve_ccr(cs, d).score for d in cs.dmus]
    best = int(np.argmax(base))
    X2 = np.vstack([cs.inputs, cs.inputs[best]])
    Y2 = np.vstack([cs.outputs, cs.outputs[best]])
    cs2 = cross_section(X2, Y2)
    for i, dmu in enumerate(cs.dmus):
        assert solve_ccr(cs2, dmu).score == pytest.approx(base[i], abs=1e-9)


def test_bcc_boundary_points_example():
    cs = cross_section([1.0, 2.0, 4.0], [1.0, 3.0, 4.0])
    for dmu in cs.dmus:
        r = solve_bcc(cs, dmu)
        assert r.score == 1.0
        assert r.lambdas.sum() == pytest.approx(1.0, abs=1e-9)


def test_bcc_dominates_ccr():
    rng = np.random.default_rng(77)
    for _ in range(20):
        cs = random_cs(rng, n=8, m=2, s=2)
        for dmu in cs.dmus:
            assert solve_bcc(cs, dmu).score >= solve_ccr(cs, dmu).score - 1e-9


def test_bcc_single_dmu_efficient():
    cs = cross_section([5.0], [1.0])
    assert solve_bcc(cs, "d0").score == 1.0


def test_ratio_oracle_on_random_single_ratio_instances():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 21))
        x = rng.uniform(0.5, 20, n)
        y = rng.uniform(0.5, 20, n)
        cs = cross_section(x, y)
        expected = dea_ratio_oracle(x, y)
        for i, dmu in enumerate(cs.dmus):
            assert solve_ccr(cs, dmu).score == pytest.approx(expected[i], abs=1e-9)


def test_at_least_one_efficient_dmu_per_cross_section():
    rng = np.random.default_rng(11)
    for _ in range(10):
        cs = random_cs(rng)
        scores = [solve_ccr(cs, d).score for d in cs.dmus]
        assert max(scores) == 1.0


def test_units_invariance_ccr_and_bcc():
    rng = np.random.default_rng(13)
    cs = random_cs(rng, n=8, m=2, s=2)
    base_ccr = [solve_ccr(cs, d).score for d in cs.dmus]
    base_bcc = [solve_bcc(cs, d).score for d in cs.dmus]
    for factor in (1e-3, 1e3):
        X2 = cs.inputs.copy()
        X2[:, 1] *= factor
        cs2 = cross_section(X2, cs.outputs)
        for i, dmu in enumerate(cs.dmus):
            assert solve_ccr(cs2, dmu).score == pytest.approx(base_ccr[i], abs=1e-6)
            assert solve_bcc(cs2, dmu).score == pytest.approx(base_bcc[i], abs=1e-6)


def test_dominated_dmu_insertion_changes_nothing():
    rng = np.random.default_rng(17)
    cs = random_cs(rng, n=7, m=2, s=2)
    base = [solve_ccr(cs, d).score for d in cs.dmus]
    dominated_x = cs.inputs[0] * 1.5
    dominated_y = cs.outputs[0] * 0.5
    cs2 = cross_section(np.vstack([cs.inputs, dominated_x]), np.vstack([cs.outputs, dominated_y]))
    for i, dmu in enumerate(cs.dmus):
        assert solve_ccr(cs2, dmu).score == pytest.approx(base[i], abs=1e-9)


def test_multiplier_weights_reproduce_the_score():
    rng = np.random.default_rng(23)
    cs = random_cs(rng, n=6, m=2, s=2)
    for i, dmu in enumerate(cs.dmus):
        r = solve_ccr(cs, dmu)
        # input orientation: v . x_o = 1 and u . y_o = theta
        assert r.multiplier_v @ cs.inputs[i] == pytest.approx(1.0, abs=1e-7)
        assert r.multiplier_u @ cs.outputs[i] == pytest.approx(r.score, abs=1e-6)


def test_strongly_efficient_dmu_is_its_own_sole_peer():
    rng = np.random.default_rng(29)
    cs = random_cs(rng, n=8)
    for i, dmu in enumerate(cs.dmus):
        r = solve_ccr(cs, dmu)
        if r.score == 1.0 and not r.weakly_efficient:
            assert r.peers == (i,)
            assert r.lambdas[i] == pytest.approx(1.0)


def test_output_orientation_is_reciprocal_under_crs():
    rng = np.random.default_rng(31)
    cs = random_cs(rng, n=6, m=2, s=2)
    for dmu in cs.dmus:
        theta = solve_ccr(cs, dmu, orientation="input").score
        phi = solve_ccr(cs, dmu, orientation="output").score
        assert phi >= 1.0
        assert phi == pytest.approx(1.0 / theta, rel=1e-6)


def test_output_orientation_vrs_bounded_by_crs():
    # the VRS envelopment's feasible set is a subset of the CRS one, and the
    # internal multiplier/envelopment cross-check must hold for both
    rng = np.random.default_rng(53)
    cs = random_cs(rng, n=8, m=2, s=2)
    for dmu in cs.dmus:
        phi_vrs = solve_bcc(cs, dmu, orientation="output").score
        phi_crs = solve_ccr(cs, dmu, orientation="output").score
        assert 1.0 <= phi_vrs <= phi_crs + 1e-9


def make_panel(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    values = np.stack([x, y], axis=2)
    dmus = tuple(f"D{i}" for i in range(values.shape[0]))
    periods = tuple(str(1998 + p) for p in range(values.shape[1]))
    schema = (VariableDef("x", "dea_input"), VariableDef("y", "dea_output"))
    return PanelDataset(dmus, periods, schema, values)


def test_run_panel_dea_shapes_and_means():
    rng = np.random.default_rng(37)
    panel = make_panel(rng.uniform(1, 9, (27, 10)), rng.uniform(1, 9, (27, 10)))
    result = run_panel_dea(panel, DeaSpec(("x",), ("y",)))
    assert result.scores.shape == (27, 10)
    assert result.means.shape == (27,)
    assert np.all(result.scores > 0) and np.all(result.scores <= 1)
    for d in range(27):
        assert result.means[d] == result.scores[d].sum() / 10


def test_planted_dominant_dmu_has_mean_exactly_one():
    rng = np.random.default_rng(41)
    x = rng.uniform(1, 9, (10, 10))
    ratio = rng.uniform(0.2, 0.9, (10, 10))
    ratio[3] = 1.0  # best ratio in every period
    y = x * ratio
    panel = make_panel(x, y)
    result = run_panel_dea(panel, DeaSpec(("x",), ("y",)))
    assert result.means[3] == 1.0
    assert np.all(result.means[np.arange(10) != 3] < 1.0)


def test_constant_data_gives_identical_per_period_scores():
    rng = np.random.default_rng(43)
    x = np.repeat(rng.uniform(1, 9, (8, 1)), 10, axis=1)
    y = np.repeat(rng.uniform(1, 9, (8, 1)), 10, axis=1)
    panel = make_panel(x, y)
    result = run_panel_dea(panel, DeaSpec(("x",), ("y",)))
    for d in range(8):
        assert np.all(result.scores[d] == result.scores[d, 0])


def test_run_panel_dea_requires_valid_data():
    x = np.ones((3, 2))
    x[1, 1] = -1.0
    panel = make_panel(x, np.ones((3, 2)))
    with pytest.raises(ValidationFailedError):
        run_panel_dea(panel, DeaSpec(("x",), ("y",)))


def test_unknown_dmu_rejected():
    cs = cross_section([1.0], [1.0])
    with pytest.raises(UsageError):
        solve_ccr(cs, "nope")


def test_spec_validation():
    with pytest.raises(UsageError):
        DeaSpec((), ("y",))
    with pytest.raises(UsageError):
        DeaSpec(("x",), ("x",))
    with pytest.raises(UsageError):
        DeaSpec(("x",), ("y",), returns_to_scale="DRS")
