import math

import numpy as np
import pytest

from hopfmcf.csf import (
    CsfError,
    CsfParams,
    EmbeddednessError,
    InstabilityError,
    extinction_tbar,
    initial_state,
    predicted_area,
    run_until,
    step,
)
from hopfmcf.curve import CurveFamilySpec, SphereCurve, make_family

from hopfmcf.verify import figure_eight

from conftest import star_curve


def latitude(theta, n=512):
    return make_family(CurveFamilySpec("latitude", n=n, theta0=theta))


# -- closed forms -----------------------------------------------------------------


def test_predicted_area_examples():
    for tb in (0.0, 0.3, 2.0):
        assert predicted_area(math.pi / 2, tb) == math.pi / 2
    assert predicted_area(math.pi / 4, 0.25 * math.log(2)) == pytest.approx(0.0, abs=1e-15)
    assert predicted_area(math.pi / 4, 0.0) == math.pi / 4
    assert predicted_area(0.3, 1.0) < 0  # past extinction


def test_predicted_area_solves_area_ode():
    a0, tb, h = 0.7, 0.05, 1e-6
    d = (predicted_area(a0, tb + h) - predicted_area(a0, tb - h)) / (2 * h)
    assert d == pytest.approx(4 * predicted_area(a0, tb) - 2 * math.pi, rel=1e-8)


def test_extinction_tbar_examples():
    assert extinction_tbar(math.pi / 2) == math.inf
    assert extinction_tbar(math.pi / 4) == pytest.approx(0.173287, abs=1e-6)
    assert extinction_tbar(math.pi / 4) == pytest.approx(0.25 * math.log(2), rel=1e-15)
    assert 0 < extinction_tbar(1e-9) < 1e-9
    assert predicted_area(0.9, extinction_tbar(0.9)) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("a0", [0.0, -1.0, 2.0])
def test_closed_forms_reject_bad_area(a0):
    with pytest.raises(ValueError):
        predicted_area(a0, 0.1)
    with pytest.raises(ValueError):
        extinction_tbar(a0)


def test_params_validation():
    with pytest.raises(ValueError):
        CsfParams(cfl=0.0)
    with pytest.raises(ValueError):
        CsfParams(resample_every=0)
    with pytest.raises(ValueError):
        CsfParams(length_epsilon=0.0)
    with pytest.raises(ValueError):
        CsfParams(min_points=4)


# -- single steps -------------------------------------------------------------------


def test_step_great_circle_is_stationary():
    s0 = initial_state(make_family(CurveFamilySpec("great_circle", n=256)))
    s1 = step(s0)
    dt = s1.tbar - s0.tbar
    assert dt > 0 and s1.step_count == 1
    assert np.max(np.linalg.norm(s1.curve.points - s0.curve.points, axis=1)) <= 1e-6 * dt


def test_step_area_follows_area_ode(rng):
    for pts in (star_curve(rng, 256), latitude(1.0, 256).points):
        s0 = initial_state(SphereCurve(pts).canonical())
        s1 = step(s0)
        dt = s1.tbar - s0.tbar
        a0 = s0.area
        expected = a0 + dt * (4 * a0 - 2 * math.pi)
        # O(dt^2) plus the spatial error of the discrete area rate
        assert abs(s1.area - expected) <= 1e-2 * dt * abs(4 * a0 - 2 * math.pi)


def test_step_shortens_length(rng):
    s = initial_state(SphereCurve(star_curve(rng, 200)))
    lengths = [s.curve.length]
    for _ in range(25):
        s = step(s)
        lengths.append(s.curve.length)
    assert np.all(np.diff(lengths) < 1e-12)


def test_step_respects_resample_cadence():
    params = CsfParams(resample_every=3)
    c = make_family(CurveFamilySpec("perturbed_great_circle", n=128, m=3, epsilon=0.05))
    s = initial_state(c)
    for _ in range(3):
        s = step(s, params)
    ell = s.curve.segment_lengths
    assert np.ptp(ell) <= 1e-12 * ell.mean()


def test_step_after_extinction_raises():
    s = run_until(initial_state(latitude(0.3, 64)), math.inf)
    assert s.extinct
    with pytest.raises(CsfError):
        step(s)


def test_unstable_cfl_raises():
    with pytest.raises((InstabilityError, EmbeddednessError)) as info:
        run_until(initial_state(latitude(math.pi / 4, 512)), 0.05, CsfParams(cfl=2.0))
    assert info.value.tbar >= 0


# -- driver -------------------------------------------------------------------------


def test_run_until_current_time_is_identity():
    s = initial_state(latitude(1.0, 64))
    assert run_until(s, s.tbar) is s
    with pytest.raises(ValueError):
        run_until(s, -1.0)


def test_run_until_lands_on_target_and_observes():
    seen = []
    s = run_until(initial_state(latitude(1.0, 128)), 0.01, observer=lambda *a: seen.append(a), observe_every=0.002)
    assert s.tbar == pytest.approx(0.01, abs=1e-15)
    assert not s.extinct
    tb = [o[0] for o in seen]
    assert tb[0] == 0.0 and tb[-1] == s.tbar
    assert np.all(np.diff(tb[:-1]) >= 0.002 - 1e-15)
    assert all(len(o) == 4 for o in seen)


def test_latitude_exact_solution_and_extinction():
    theta0 = math.pi / 3
    s = initial_state(latitude(theta0))
    for tb in (0.02, 0.06, 0.1, 0.14):
        s = run_until(s, tb)
        cos = np.mean(s.curve.points[:, 2]) / 0.5
        assert cos == pytest.approx(math.cos(theta0) * math.exp(4 * tb), rel=1e-3)
    s = run_until(s, math.inf)
    assert s.extinct
    assert s.tbar == pytest.approx(0.25 * math.log(2), abs=2e-3)
    np.testing.assert_allclose(s.extinction_point, [0, 0, 0.5], atol=1e-8)


def test_great_circle_never_goes_extinct():
    areas = []
    s = run_until(
        initial_state(make_family(CurveFamilySpec("great_circle", n=128))),
        1.0,
        observer=lambda tb, L, A, k: areas.append(A),
        observe_every=0.05,
    )
    assert not s.extinct and s.tbar == pytest.approx(1.0)
    assert max(abs(a - math.pi / 2) for a in areas) <= 1e-3


def test_perturbed_great_circle_relaxes_to_geodesic():
    eps = 0.05
    kappas, lengths = [], []

    def obs(tb, L, A, k):
        kappas.append(k)
        lengths.append(L)

    s = run_until(initial_state(make_family(CurveFamilySpec("perturbed_great_circle", n=256, m=3, epsilon=eps))), 1.0, observer=obs, observe_every=0.01)
    assert kappas[-1] < eps / 10
    assert np.all(np.diff(lengths) < 1e-12)
    assert s.curve.length == pytest.approx(math.pi, rel=1e-6)


def test_area_law_general_curve(rng):
    c = SphereCurve(star_curve(rng, 256)).canonical()
    a0 = c.area
    tau = extinction_tbar(a0)
    s = initial_state(c)
    for f in (0.2, 0.5, 0.8):
        s = run_until(s, f * tau)
        assert abs(s.area - predicted_area(a0, s.tbar)) <= 1e-3 * math.pi / 2


def test_halving_cfl_changes_area_within_budget():
    def final_area(cfl):
        return run_until(initial_state(latitude(math.pi / 4, 256)), 0.1, CsfParams(cfl=cfl)).area

    a1, a2 = final_area(0.25), final_area(0.125)
    exact = predicted_area(latitude(math.pi / 4, 256).area, 0.1)
    assert abs(a1 - a2) < 1e-3 * math.pi / 2
    # time error roughly halves with the step
    assert abs(a2 - exact) < abs(a1 - exact)


def test_embeddedness_tripwire():
    # the flow is started from a crossing curve; the first simplicity check trips
    s = initial_state(SphereCurve(figure_eight(128)))
    with pytest.raises(EmbeddednessError) as info:
        step(s, CsfParams(resample_every=1))
    assert "non-simple" in str(info.value)
