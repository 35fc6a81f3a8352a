import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluidq.errors import DomainError, NegativeTime, OnCaustic, WrongRegion
from fluidq.model import y0_curve
from fluidq.rays import (
    G_asymptotic, density_asymptotic, forward_ray, in_region_R, invert_ray, log_density,
    psi_K, ray_extremes, rays_from_infinity,
)

# grid scan over (s, t) in [-10, 10] x (0, 20] followed by fsolve on the forward map
SHADOW_ROOT = (5.340000087123343, 0.2790957162132506)


def test_rays_start_at_source(fig_model):
    for s in (-3.0, -0.1, 0.0, 0.2, 4.0):
        st_ = forward_ray(fig_model, s, 0.0)
        assert (st_.y, st_.z) == (0.0, 1.0)


def test_negative_time_rejected(fig_model):
    with pytest.raises(NegativeTime):
        forward_ray(fig_model, 0.3, -1e-9)


def test_s_zero_ray_follows_y0(fig_model):
    m = fig_model
    t0 = 0.5 / m.drift_gap
    st_ = forward_ray(m, 0.0, t0)
    assert st_.z == pytest.approx(1.5, abs=1e-14)
    assert st_.y == pytest.approx(0.234610, abs=5e-7)
    assert st_.y == pytest.approx(y0_curve(m, 1.5), rel=1e-13)
    assert math.isinf(st_.amp) and math.isfinite(st_.s_amp)


def test_forward_satisfies_exponential_identity(fig_model):
    m = fig_model
    s, t = -0.8, 1.2
    r = forward_ray(m, s, t)
    rhs = 1.0 + s / (2.0 * m.mu) * (r.z - 1.0 + r.y * s + t * (m.lam + m.mu))
    assert math.exp(s * t) == pytest.approx(rhs, rel=1e-12)


def test_pq_invariants(fig_model):
    r = forward_ray(fig_model, -0.7, 2.1)
    assert r.p == -0.7
    assert r.q == pytest.approx(fig_model.log_rho + 0.7 * 2.1, rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(-2.0, 2.0).filter(lambda v: abs(v) > 1e-4), t=st.floats(1e-3, 5.0))
def test_eikonal_residual_property(fig_model, s, t):
    r = forward_ray(fig_model, s, t)
    scale = fig_model.mu * math.exp(r.q) + fig_model.lam * math.exp(-r.q) + abs((r.z - 1.0) * r.p)
    assert abs(r.eikonal_residual(fig_model)) < 1e-10 * max(1.0, scale)


@settings(max_examples=200, deadline=None)
@given(s=st.floats(-2.0, 2.0).filter(lambda v: abs(v) > 1e-3), t=st.floats(0.05, 5.0))
def test_round_trip_property(fig_model, s, t):
    r = forward_ray(fig_model, s, t)
    if r.z < 0.0 or r.y <= 1e-8:
        return
    s2, t2 = invert_ray(fig_model, r.y, r.z)
    back = forward_ray(fig_model, s2, t2)
    assert back.y == pytest.approx(r.y, rel=1e-10, abs=1e-14)
    assert back.z == pytest.approx(r.z, rel=1e-10, abs=1e-14)


def test_round_trip_example(fig_model):
    r = forward_ray(fig_model, -0.8, 1.2)
    s, t = invert_ray(fig_model, r.y, r.z)
    assert s == pytest.approx(-0.8, abs=1e-10)
    assert t == pytest.approx(1.2, abs=1e-10)


def test_invert_on_y0(fig_model):
    m = fig_model
    assert invert_ray(m, y0_curve(m, 1.5), 1.5) == (0.0, pytest.approx(0.5 / m.drift_gap, rel=1e-14))


def test_invert_shadow_point_matches_scan(fig_model):
    s, t = invert_ray(fig_model, 0.05, 1.5)
    assert s > 0.0
    assert s == pytest.approx(SHADOW_ROOT[0], rel=1e-10)
    assert t == pytest.approx(SHADOW_ROOT[1], rel=1e-10)


def test_invert_rejects_source_and_axis(fig_model):
    with pytest.raises(DomainError):
        invert_ray(fig_model, 0.0, 1.0)
    with pytest.raises(DomainError):
        invert_ray(fig_model, 0.0, 1.4)
    with pytest.raises(DomainError):
        invert_ray(fig_model, -0.1, 0.5)


def test_branch_signs(fig_model):
    m = fig_model
    Y0 = y0_curve(m, 1.5)
    assert invert_ray(m, 0.5 * Y0, 1.5)[0] > 0.0
    assert invert_ray(m, 2.0 * Y0, 1.5)[0] < 0.0
    assert invert_ray(m, 0.3, 0.4)[0] < 0.0


def test_ray_extremes_closed_form(fig_model):
    m = fig_model
    ex = ray_extremes(m, -1.0)
    assert ex.T1 == pytest.approx(0.49554, abs=5e-5)
    assert ex.T2 == pytest.approx(0.99108, abs=5e-5)
    assert forward_ray(m, -1.0, ex.T1).z == pytest.approx(ex.z_max, rel=1e-12)
    assert forward_ray(m, -1.0, ex.T2).y == pytest.approx(ex.y_max, rel=1e-12)
    with pytest.raises(DomainError):
        ray_extremes(m, 0.0)


def test_ray_extremes_are_maxima(fig_model):
    m = fig_model
    ex = ray_extremes(m, -0.6)
    for dt in (-1e-3, 1e-3):
        assert forward_ray(m, -0.6, ex.T1 + dt).z < ex.z_max
        assert forward_ray(m, -0.6, ex.T2 + dt).y < ex.y_max


def test_psi_on_y0_is_linear_in_z(fig_model):
    m = fig_model
    for z in (1.2, 1.5, 1.9):
        Y0 = y0_curve(m, z)
        with pytest.raises(OnCaustic):
            psi_K(m, Y0, z)
        # just off the curve the exponent tends to z ln rho
        assert psi_K(m, Y0 * (1 + 1e-7), z).Psi == pytest.approx(z * m.log_rho, abs=1e-12)


def test_psi_at_z_one_two_paths(fig_model):
    m = fig_model
    for y in (0.1, 0.5, 2.0):
        via_inversion = psi_K(m, y, 1.0).Psi
        closed = 2.0 * y * (-m.zeta / math.sqrt(y)) + m.log_rho
        assert via_inversion == pytest.approx(closed, rel=1e-8)


def test_psi_gradient_matches_p_q(fig_model):
    m = fig_model
    y, z, h = 0.5, 0.5, 1e-5
    pk = psi_K(m, y, z)
    dy = (psi_K(m, y + h, z).Psi - psi_K(m, y - h, z).Psi) / (2 * h)
    dz = (psi_K(m, y, z + h).Psi - psi_K(m, y, z - h).Psi) / (2 * h)
    assert dy == pytest.approx(pk.s, abs=1e-6)
    assert dz == pytest.approx(m.log_rho - pk.s * pk.t, abs=1e-6)


@pytest.mark.parametrize("y,z", [(0.3, 0.2), (0.5, 0.5), (0.8, 1.2), (1.0, 1.6)])
def test_psi_below_linear_inside_R(fig_model, y, z):
    assert in_region_R(fig_model, y, z)
    assert psi_K(fig_model, y, z).Psi < z * fig_model.log_rho


def test_small_t_jacobian(fig_model):
    m = fig_model
    for s in (-1.0, 0.5):
        t = 5e-3
        law = (m.mu ** 2 - m.lam ** 2) * t ** 3 / 3.0
        assert forward_ray(m, s, t).jac == pytest.approx(law, rel=1e-2)


def test_jacobian_matches_finite_difference(fig_model):
    m = fig_model
    h = 1e-6
    for s, t in [(-0.8, 1.2), (0.4, 0.7), (1.5, 2.0)]:
        ys = (forward_ray(m, s + h, t).y - forward_ray(m, s - h, t).y) / (2 * h)
        zs = (forward_ray(m, s + h, t).z - forward_ray(m, s - h, t).z) / (2 * h)
        yt = (forward_ray(m, s, t + h).y - forward_ray(m, s, t - h).y) / (2 * h)
        zt = (forward_ray(m, s, t + h).z - forward_ray(m, s, t - h).z) / (2 * h)
        det = yt * zs - ys * zt
        assert forward_ray(m, s, t).jac == pytest.approx(det, rel=1e-5)


def test_G_tends_to_tail_limit_far_out(fig_model):
    m = fig_model
    k = 5
    r = G_asymptotic(m, 20.0 * m.c ** 2, k)
    assert r.log_F == pytest.approx(math.log(1 - m.rho) + k * m.log_rho, abs=1e-10)


def test_G_shadow_ordering(fig_model):
    m = fig_model
    k = int(1.5 * m.c)
    x = 0.1 * m.c ** 2
    r = G_asymptotic(m, x, k)
    assert r.log_F < r.log_p
    assert r.log_F > -math.inf


def test_G_zero_at_origin_above_c(fig_model):
    r = G_asymptotic(fig_model, 0.0, 12)
    assert r.log_F == -math.inf and r.diagnostics["exact_zero"]


def test_density_forms_agree_near_y0(models):
    """The Gaussian profile approaches the ray form as c grows."""
    gaps = []
    for c in sorted(models):
        m = models[c]
        y = y0_curve(m, 1.5) + 0.02
        ray = log_density(m, y, 1.5, "ray")
        gauss = log_density(m, y, 1.5, "gaussian")
        gaps.append(abs(math.expm1(gauss - ray)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_gaussian_density_normalizes(fig_model):
    # integrating over x at fixed k should give F_k(inf) = (1 - rho) rho^k
    m = fig_model
    z = 1.5
    Y0 = y0_curve(m, z)
    ys = np.linspace(Y0 - 1.0, Y0 + 1.0, 20001)
    vals = np.exp([log_density(m, y, z, "gaussian") for y in ys])
    total = np.trapezoid(vals, ys) / m.eps ** 2
    assert total == pytest.approx((1 - m.rho) * math.exp(z * m.log_rho / m.eps), rel=1e-10)


def test_density_peaks_on_y0(fig_model):
    m = fig_model
    Y0 = y0_curve(m, 1.5)
    ys = np.linspace(0.02, 1.0, 491)
    lv = [log_density(m, y, 1.5) for y in ys]
    assert abs(ys[int(np.argmax(lv))] - Y0) < 0.1


def test_density_max_at_origin_below_c(fig_model):
    m = fig_model
    ys = np.linspace(1e-4, 2.0, 200)
    lv = [log_density(m, y, 0.5) for y in ys]
    assert np.all(np.diff(lv) < 0.0)


def test_density_rejects_unknown_form(fig_model):
    with pytest.raises(DomainError):
        log_density(fig_model, 0.5, 0.5, "nope")
    with pytest.raises(WrongRegion):
        log_density(fig_model, 0.5, 0.5, "gaussian")


def test_density_finite_across_caustic(fig_model):
    m = fig_model
    Y0 = y0_curve(m, 1.5)
    v = [log_density(m, Y0 * (1 + d), 1.5) for d in (-1e-6, 0.0, 1e-6)]
    assert all(math.isfinite(a) for a in v)
    assert max(v) - min(v) < 1e-4


def test_rays_from_infinity(fig_model):
    m = fig_model
    sep = rays_from_infinity(m, 0.0, 1.0)
    for z in (1.0, 1.5, 2.5):
        assert sep(z) == pytest.approx(y0_curve(m, z), rel=1e-14, abs=1e-15)
    r = rays_from_infinity(m, 0.5, 0.0)
    assert r(1.0) == pytest.approx(0.5 - 1.0 / (2 * m.drift_gap), rel=1e-14)
    zs = np.linspace(0.0, 2.0, 401)
    assert zs[int(np.argmin([r(z) for z in zs]))] == pytest.approx(1.0)


def test_rays_from_infinity_rejects_bad_start(fig_model):
    with pytest.raises(DomainError):
        rays_from_infinity(fig_model, 0.5, 0.5)
    with pytest.raises(DomainError):
        rays_from_infinity(fig_model, 0.0, 1.5)


def test_region_membership(fig_model):
    m = fig_model
    assert all(in_region_R(m, y, z) for y in (0.0, 0.3, 5.0) for z in (0.0, 0.7, 1.0))
    assert not in_region_R(m, 0.5 * y0_curve(m, 1.5), 1.5)
    assert in_region_R(m, 2.0 * y0_curve(m, 1.5), 1.5)


def test_density_asymptotic_unscaled(fig_model):
    m = fig_model
    f, lf = density_asymptotic(m, 0.5 * m.c ** 2, 5)
    assert lf == pytest.approx(log_density(m, 0.5, 5 * m.eps), rel=1e-14)
    assert f == pytest.approx(math.exp(lf), rel=1e-14)
    with pytest.raises(WrongRegion):
        density_asymptotic(m, 0.0, 5, "gaussian")
