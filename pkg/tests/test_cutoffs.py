"""Tests for the smooth cutoff profiles."""
import numpy as np
import pytest

from semispec.cutoffs import bridge, decay_profile, flat_exp, radial_cutoff, smoothstep


def test_flat_exp_vanishes_for_nonpositive_arguments():
    theta, d1, d2 = flat_exp(np.array([-1.0, 0.0, 1e-5]))
    assert np.all(theta == 0.0)
    assert np.all(d1 == 0.0)
    assert np.all(d2 == 0.0)
    assert flat_exp(1.0)[0] == pytest.approx(np.exp(-1.0))


def test_flat_exp_derivatives_match_finite_differences():
    u = np.linspace(0.2, 2.0, 7)
    step = 1e-5
    theta, d1, d2 = flat_exp(u)
    fd1 = (flat_exp(u + step)[0] - flat_exp(u - step)[0]) / (2 * step)
    fd2 = (flat_exp(u + step)[1] - flat_exp(u - step)[1]) / (2 * step)
    np.testing.assert_allclose(d1, fd1, rtol=1e-6)
    np.testing.assert_allclose(d2, fd2, rtol=1e-5, atol=1e-8)


def test_smoothstep_limits_and_monotonicity():
    u = np.linspace(-0.5, 1.5, 201)
    s, s1, _ = smoothstep(u)
    assert np.all(s[u <= 0] == 0.0)
    assert np.all(s[u >= 1] == 1.0)
    assert smoothstep(0.5)[0] == pytest.approx(0.5)
    assert np.all(np.diff(s) >= 0)
    assert np.all(s1 >= 0)


def test_bridge_requires_ordered_radii():
    with pytest.raises(ValueError):
        bridge(1.0, 2.0, 2.0)
    values = bridge(np.array([0.5, 1.0, 3.0, 4.0]), 1.0, 3.0)[0]
    np.testing.assert_allclose(values, [1.0, 1.0, 0.0, 0.0])


def test_radial_cutoff_gradient_and_hessian():
    pts = np.array([[0.0, 0.0], [0.3, -0.2], [1.1, 0.7], [-0.9, 1.2], [5.0, 0.0]])
    chi, grad, hess = radial_cutoff(pts, 1.0, 2.0)
    np.testing.assert_allclose(chi[:2], 1.0)
    np.testing.assert_allclose(grad[:2], 0.0)
    assert chi[-1] == 0.0

    step = 1e-5
    for k in range(2):
        e = np.zeros(2)
        e[k] = step
        ahead, behind = radial_cutoff(pts + e, 1.0, 2.0), radial_cutoff(pts - e, 1.0, 2.0)
        fd = (ahead[0] - behind[0]) / (2 * step)
        np.testing.assert_allclose(grad[:, k], fd, atol=1e-7)
        fd_grad = (ahead[1] - behind[1]) / (2 * step)
        np.testing.assert_allclose(hess[:, :, k], fd_grad, atol=1e-5)


def test_decay_profile_matches_its_ends():
    t = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 10.0])
    np.testing.assert_allclose(decay_profile(t), [1.0, 1.0, 1.0, 0.5, 0.25, 0.1])
    middle = decay_profile(np.linspace(1.0, 2.0, 50))
    assert np.all(np.diff(middle) <= 0)
