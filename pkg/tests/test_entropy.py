import math

import numpy as np
import pytest

from conftest import dense_schmidt_weights, oracle_midcut_marginal
from depevap import ModelParams
from depevap.entropy import (
    entropy_dp,
    entropy_exact,
    entropy_formula,
    fit_power_law,
    mid_cut_row,
    midcut_distribution,
    schmidt_spectrum,
)
from depevap.errors import CapacityError, InvalidParameterError
from depevap.exact import build_state


def test_midcut_examples():
    params = ModelParams(L=3, p=0.5, boundary_mode="reflecting", colored=True)
    dist = midcut_distribution(params, 1)
    assert dist.table == pytest.approx({(0, 1, 0, 1, 0): 0.9, (0, 1, 2, 1, 0): 0.1})
    assert dist.mean_area == pytest.approx(0.2)
    assert dist.mean_color_units == pytest.approx(0.1)
    point = midcut_distribution(params.with_(p=0.0), 1)
    assert point.table == {(0, 1, 0, 1, 0): 1.0}


def test_midcut_sums_to_one_L9():
    dist = midcut_distribution(ModelParams(L=9, p=0.8), mid_cut_row(9))
    assert math.fsum(dist.table.values()) == pytest.approx(1.0, abs=1e-10)


def test_midcut_matches_oracle_marginal():
    for L in (3, 5):
        for mode in ("reflecting", "absorbing"):
            params = ModelParams(L=L, p=0.7, boundary_mode=mode, colored=True)
            cut = mid_cut_row(L)
            dist = midcut_distribution(params, cut)
            want = oracle_midcut_marginal(L, 0.7, mode, True, cut)
            assert dist.table == pytest.approx(want, abs=1e-12)


def test_schmidt_point_mass():
    state = build_state(ModelParams(L=3, p=0.0, colored=True))
    spec = schmidt_spectrum(state, 1)
    assert len(spec) == 1 and spec[0][1] == pytest.approx(1.0)
    assert entropy_exact(state, 1).S_total == pytest.approx(0.0, abs=1e-12)


def test_schmidt_sectors_L3(l3_state_reflecting):
    spec = schmidt_spectrum(l3_state_reflecting, 1)
    weights = sorted((lam for _, lam in spec), reverse=True)
    assert weights == pytest.approx([0.9, 0.05, 0.05])
    labels = [label for label, _ in spec]
    raised = [lab for lab in labels if lab[0] == (0, 1, 2, 1, 0)]
    assert len(raised) == 2  # one sector per unmatched pair color
    assert {lab[1] for lab in raised} == {((), (1,), ()), ((), (2,), ())}
    assert math.fsum(weights) == pytest.approx(1.0, abs=1e-10)


def test_entropy_exact_closed_form(l3_state_reflecting):
    report = entropy_exact(l3_state_reflecting, 1)
    q0, q2 = 0.9, 0.1
    expected = -q0 * math.log2(q0) - q2 * math.log2(q2) + q2
    assert report.S_total == pytest.approx(expected, abs=1e-12)
    assert report.color_term == pytest.approx(q2, abs=1e-12)


def test_colored_not_less_than_uncolored():
    for mode in ("reflecting", "absorbing"):
        colored = ModelParams(L=5, p=0.6, boundary_mode=mode, colored=True)
        unc = colored.with_(colored=False)
        sc = entropy_exact(build_state(colored), 2).S_total
        su = entropy_exact(build_state(unc), 2).S_total
        assert sc >= su - 1e-12


def test_formula_matches_svd_grid():
    for L in (3, 5):
        for p in (0.25, 0.5, 0.8):
            for mode in ("reflecting", "absorbing"):
                params = ModelParams(L=L, p=p, boundary_mode=mode, colored=True)
                cut = mid_cut_row(L)
                svd = entropy_exact(build_state(params), cut)
                formula = entropy_formula(midcut_distribution(params, cut))
                assert svd.S_total == pytest.approx(formula.S_total, abs=1e-9)
                assert svd.S_uncolored == pytest.approx(formula.S_uncolored, abs=1e-9)


def test_formula_identity_and_dp_method():
    params = ModelParams(L=7, p=0.6, colored=True)
    report = entropy_dp(params)
    assert report.method == "dp"
    assert report.S_total == pytest.approx(report.color_term + report.S_uncolored, abs=1e-12)


def test_gram_path_matches_global_svd():
    params = ModelParams(L=5, p=0.5, boundary_mode="reflecting", colored=True)
    state = build_state(params)
    for cut in (1, 2, 3):
        got = sorted((lam for _, lam in schmidt_spectrum(state, cut)), reverse=True)
        want = dense_schmidt_weights(state, cut)
        assert got == pytest.approx(want, abs=1e-11)


def test_time_cut_entropy_is_lower():
    params = ModelParams(L=5, p=0.5, boundary_mode="reflecting", colored=True)
    state = build_state(params)
    space = entropy_exact(state, 2).S_total
    spec_time = schmidt_spectrum(state, 2, axis="time")
    lams = np.array([lam for _, lam in spec_time])
    time_S = float(-(lams * np.log2(lams)).sum())
    assert math.fsum(lams) == pytest.approx(1.0, abs=1e-10)
    assert time_S <= space + 1e-12


def test_cut_location_symmetry():
    for L in (5, 7):
        for mode in ("reflecting", "absorbing"):
            params = ModelParams(L=L, p=0.65, boundary_mode=mode, colored=True)
            for cut in range(1, L // 2 + 1):
                a = midcut_distribution(params, cut)
                b = midcut_distribution(params, L - cut)
                assert a.table == pytest.approx(b.table, abs=1e-10)


def test_entropy_monotone_in_p_at_L9():
    values = [entropy_dp(ModelParams(L=9, p=p, colored=True)).S_total
              for p in (0.25, 0.5, 0.8)]
    assert values[0] < values[1] < values[2]


def test_schmidt_rejects_unnormalized(l3_state_reflecting):
    from depevap.exact import SparseState
    bad = SparseState(amplitudes={k: 0.5 * a for k, a in
                                  l3_state_reflecting.amplitudes.items()},
                      params=l3_state_reflecting.params)
    with pytest.raises(InvalidParameterError):
        schmidt_spectrum(bad, 1)


def test_capacity_guard():
    with pytest.raises(CapacityError):
        midcut_distribution(ModelParams(L=9, p=0.5), 4, max_profiles=2)


def test_fit_power_law_examples():
    xs = [1.0, 2.0, 3.0, 4.0]
    exp, amp, r2 = fit_power_law(xs, xs)
    assert exp == pytest.approx(1.0) and r2 == pytest.approx(1.0)
    exp, _, _ = fit_power_law(xs, [x * x for x in xs])
    assert exp == pytest.approx(2.0)
    rng = np.random.default_rng(5)
    xs = np.linspace(10, 1000, 40)
    ys = 3.0 * xs ** 0.25 * (1 + 0.01 * rng.standard_normal(40))
    exp, amp, r2 = fit_power_law(xs, ys)
    assert exp == pytest.approx(0.25, abs=0.02)
    with pytest.raises(InvalidParameterError):
        fit_power_law([1, 2, 3], [1, -1, 2])
    with pytest.raises(InvalidParameterError):
        fit_power_law([1, 2], [1, 2])
