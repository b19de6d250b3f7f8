import pytest
from hypothesis import given, settings, strategies as st

from cartframes.duel import (
    DuelConfig,
    combined_update,
    cost,
    delta,
    encode_state,
    preferred_index,
    run,
)
from cartframes.errors import ValidationError


def config(xi, eta=0.5, n0=2.0, k=3, rule="attraction", **kw):
    return DuelConfig(
        k=k, p1=(1, 0, 0) + (0,) * (k - 3), p2=(0,) * (k - 1) + (1,),
        xi=xi, eta=eta, n0=n0, rule=rule, **kw
    )


# -- encoding -------------------------------------------------------------------


def test_encode_fractional():
    assert encode_state(1.75, 3).tolist() == [0.25, 0.75, 0.0]


def test_encode_integer_index():
    assert encode_state(2.0, 3).tolist() == [0.0, 1.0, 0.0]


def test_encode_boundaries():
    assert encode_state(1.0, 3).tolist() == [1.0, 0.0, 0.0]
    assert encode_state(3.0, 3).tolist() == [0.0, 0.0, 1.0]


def test_encode_out_of_range():
    with pytest.raises(ValidationError):
        encode_state(0.5, 3)
    with pytest.raises(ValidationError):
        encode_state(3.1, 3)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1.0, max_value=5.0), st.integers(min_value=5, max_value=5))
def test_encode_is_probability_on_adjacent_support(n, k):
    vec = encode_state(n, k)
    assert abs(vec.sum() - 1.0) < 1e-12
    assert (vec >= 0).all()
    support = [i for i, p in enumerate(vec) if p > 0]
    assert 1 <= len(support) <= 2
    if len(support) == 2:
        assert support[1] - support[0] == 1


# -- preferences and costs ---------------------------------------------------------


def test_preferred_index():
    assert preferred_index([1, 0, 0]) == 1
    assert preferred_index([0, 0, 1]) == 3
    assert preferred_index([0, 1, 0]) == 2


def test_preferred_index_rejects_non_one_hot():
    for bad in ([0.5, 0.5, 0], [0, 0, 0], [1, 1, 0], [2, 0, 0]):
        with pytest.raises(ValidationError):
            preferred_index(bad)


def test_cost_orderings():
    cfg = config(xi=0.5)
    assert cost(1, 1, cfg) == 0
    assert cost(1, 3, cfg) == 2
    assert cost(1, 1, cfg) < cost(1, 2, cfg) < cost(1, 3, cfg)
    assert cost(2, 3, cfg) < cost(2, 2, cfg) < cost(2, 1, cfg)
    assert cost(2, 1, cfg) == 2


# -- updates -------------------------------------------------------------------------


def test_delta_pulls_toward_preference():
    cfg = config(xi=0.5, eta=0.5)
    assert delta(1, 2.0, cfg) == pytest.approx(-0.5)
    assert delta(2, 2.0, cfg) == pytest.approx(+0.5)
    assert delta(1, 1.0, cfg) == 0.0
    assert delta(2, 3.0, cfg) == 0.0


def test_combined_update_endpoints():
    cfg1 = config(xi=1.0, eta=0.5)
    assert combined_update(2.0, cfg1) == pytest.approx(2.0 + delta(1, 2.0, cfg1))
    cfg0 = config(xi=0.0, eta=0.5)
    assert combined_update(2.0, cfg0) == pytest.approx(2.0 + delta(2, 2.0, cfg0))


def test_combined_update_arithmetic():
    cfg = config(xi=0.25, eta=0.5)
    assert combined_update(2.0, cfg) == pytest.approx(2.25)


def test_combined_update_clamps():
    cfg = config(xi=1.0, eta=5.0)
    assert combined_update(3.0, cfg) == 1.0  # overshoot clamps to the low edge


def test_dot_rule_stalls_far_from_preference():
    cfg = config(xi=1.0, eta=0.5, rule="dot")
    assert delta(1, 3.0, cfg) == 0.0  # a full index away: overlap is zero
    assert delta(1, 1.5, cfg) == pytest.approx(-0.25)  # overlap 0.5 toward 1


# -- runs -----------------------------------------------------------------------------


def test_run_xi_one_reaches_agent1_preference():
    report = run(config(xi=1.0, eta=0.1, n0=2.0))
    assert report.converged
    assert report.final_n == pytest.approx(1.0, abs=1e-6)


def test_run_mixed_influence_fixed_point():
    report = run(config(xi=0.25, eta=0.1, n0=2.0))
    assert report.final_n == pytest.approx(2.5, abs=1e-6)


def test_run_symmetric_split():
    report = run(config(xi=0.5, eta=0.1, n0=1.3))
    assert report.final_n == pytest.approx(2.0, abs=1e-6)
    j1, j2 = report.final_costs
    assert j1 == pytest.approx(j2, abs=1e-6)


@pytest.mark.parametrize("xi", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_equilibrium_matches_convex_combination(xi):
    report = run(config(xi=xi, eta=0.1, n0=2.0))
    target = xi * 1 + (1 - xi) * 3
    assert report.converged
    assert report.final_n == pytest.approx(target, abs=1e-6)


@pytest.mark.parametrize("xi", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_counterfactual_preference_along_trajectory(xi):
    report = run(config(xi=xi, eta=0.1, n0=2.0))
    for row in report.trajectory:
        assert row.j1_solo <= row.j1_next + 1e-12
        assert row.j2_solo <= row.j2_next + 1e-12


def test_equilibrium_monotone_in_xi():
    finals = [run(config(xi=xi, eta=0.1, n0=2.0)).final_n for xi in
              (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)]
    assert all(a >= b - 1e-9 for a, b in zip(finals, finals[1:]))


def test_improves_without_other_flags():
    report = run(config(xi=0.25, eta=0.1, n0=2.0))
    assert report.improves_without_other == (True, True)
    solo = run(config(xi=1.0, eta=0.1, n0=2.0))
    # agent 1 already owns the update; dropping agent 2 changes nothing
    assert solo.improves_without_other[0] is False


def test_trajectory_shape_and_clamping():
    report = run(config(xi=0.9, eta=2.0, n0=3.0, max_steps=50))
    assert len(report.trajectory) == report.iterations + 1
    for row in report.trajectory:
        assert 1.0 <= row.n <= 3.0


def test_config_validation():
    with pytest.raises(ValidationError):
        config(xi=1.5)
    with pytest.raises(ValidationError):
        config(xi=0.5, eta=-1.0)
    with pytest.raises(ValidationError):
        config(xi=0.5, n0=9.0)
    with pytest.raises(ValidationError):
        DuelConfig(k=1, p1=(1,), p2=(1,), xi=0.5, eta=0.1, n0=1.0)
    with pytest.raises(ValidationError):
        config(xi=0.5, rule="nope")


def test_max_steps_bound():
    report = run(config(xi=0.4, eta=1e-6, n0=2.0, max_steps=5))
    assert not report.converged
    assert report.iterations == 5
