import numpy as np
import pytest

from hyperkin import kinematics as K
from hyperkin.ambient import poincare_half_plane, warped_space
from hyperkin.surface import geom_frame

from conftest import BALLOON, motion

SPHERE_ROT = ["cos(u + 0.7*t)*sin(v)", "sin(u + 0.7*t)*sin(v)", "cos(v)"]
TRANSLATE = ["cos(u)*sin(v) + 0.2*t", "sin(u)*sin(v) - 0.1*t", "cos(v) + t"]
ELLIPSOID_PAR = [
    "cos(u)*sin(v) + (t - 1)*cos(u)*sin(v)/sqrt(sin(v)^2 + (cos(v)/0.8)^2)",
    "sin(u)*sin(v) + (t - 1)*sin(u)*sin(v)/sqrt(sin(v)^2 + (cos(v)/0.8)^2)",
    "0.8*cos(v) + (t - 1)*(cos(v)/0.8)/sqrt(sin(v)^2 + (cos(v)/0.8)^2)",
]
X = np.array([[0.3, 0.5], [1.4, 0.9], [2.5, 1.3]])


def frames(components, t=1.0, ambient=None, coords=("u", "v"), pts=X):
    spec = motion(components, ambient, coords=coords)
    fr = geom_frame(spec, pts, t)
    return spec, fr, K.kin_frame(fr)


def test_balloon_velocity_and_gradient():
    _, fr, kin = frames(BALLOON)
    assert np.allclose(kin.v.value, fr.position.value, atol=1e-14)
    assert np.allclose(kin.G.value, fr.F.value, atol=1e-14)
    # v_n = gbar(j, n) with n = j - (0,0,1): equals 1 on the equator v = pi/4
    _, fr2, kin2 = frames(BALLOON, pts=np.array([[0.4, np.pi / 4]]))
    assert abs(abs(kin2.v_n.value[0]) - 1) < 1e-12


def test_rigid_translation():
    _, fr, kin = frames(TRANSLATE)
    assert np.allclose(kin.v.value, [0.2, -0.1, 1.0])
    assert np.abs(kin.G.value).max() < 1e-14
    assert np.abs(kin.D.value).max() < 1e-14
    assert np.abs(kin.W_F).max() < 1e-14 and np.abs(kin.W_n).max() < 1e-14


def test_parallel_motion_kinematics():
    _, fr, kin = frames(ELLIPSOID_PAR)
    n = fr.normal.value
    vn = kin.v_n.value
    assert np.allclose(np.abs(vn), 1.0, atol=1e-12)
    assert np.abs(kin.v_par.value).max() < 1e-12
    assert np.allclose(kin.v.value, vn[:, None] * n, atol=1e-12)
    # G = -v_n F S and D = -v_n S
    assert np.allclose(kin.G.value, -vn[:, None, None] * (fr.F.value @ fr.S.value), atol=1e-12)
    assert np.allclose(kin.D.value, -vn[:, None, None] * fr.S.value, atol=1e-12)
    assert np.allclose(kin.D_kin.value, kin.D.value, atol=1e-12)
    assert np.abs(kin.W_n).max() < 1e-12


def test_tangential_rotation():
    _, fr, kin = frames(SPHERE_ROT)
    assert np.abs(kin.v_n.value).max() < 1e-14
    assert np.abs(kin.D_kin.value).max() < 1e-13
    WF = kin.W_F
    gb = fr.ambient.metric.value
    a = np.einsum("pa,pab,pb->p", WF[..., 0], gb, fr.F.value[..., 1])
    b = np.einsum("pa,pab,pb->p", fr.F.value[..., 0], gb, WF[..., 1])
    assert np.allclose(a, -b, atol=1e-14)
    # W acts as rotation about the z-axis with angular speed 0.7
    Wm = K.rotation_rate_matrix(fr, kin)
    expect = 0.7 * np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    assert np.allclose(Wm, expect, atol=1e-12)


def test_tau_metric_examples():
    spec = motion(BALLOON)
    g1 = K.tau_metric(spec, X, 1.0)
    for tau in (0.5, 1.5, 2.0):
        assert np.allclose(K.tau_metric(spec, X, tau), tau ** 2 * g1, atol=1e-12)
    cyl = motion(["t*v", "t*sin(2*u/t)", "2*t*sin(u/t)^2"])
    for tau in (0.7, 1.0, 1.9):
        assert np.allclose(K.tau_metric(cyl, X, tau), np.diag([4.0, tau ** 2]), atol=1e-12)
    fr = geom_frame(cyl, X, 1.0)
    assert np.array_equal(K.tau_metric(cyl, X, 1.0), fr.g.value)


def test_tau_metric_parallel_motion():
    spec, fr, kin = frames(ELLIPSOID_PAR)
    g, B, III = fr.g.value, fr.B.value, fr.III.value
    vn = kin.v_n.value[:, None, None]  # eps(tau) = (tau - 1) along n, with n = +-normal
    for tau in (0.8, 1.2):
        eps = (tau - 1) * vn
        assert np.allclose(K.tau_metric(spec, X, tau), g - 2 * eps * B + eps ** 2 * III, atol=1e-12)


def test_stretching_examples():
    _, fr, kin = frames(BALLOON)
    assert np.allclose(kin.D.value, np.eye(2), atol=1e-10)
    assert np.allclose(kin.D_flat.value, fr.g.value, atol=1e-10)
    _, fr, kin = frames(["t*v", "t*sin(2*u/t)", "2*t*sin(u/t)^2"])
    assert np.allclose(kin.D_flat.value, np.diag([0.0, 1.0]), atol=1e-10)
    assert np.allclose(kin.delta_g.value, 2 * kin.D_flat.value, atol=0)


@pytest.mark.parametrize("components,ambient,coords", [
    (BALLOON, None, ("u", "v")),
    (["t*v", "t*sin(2*u/t)", "2*t*sin(u/t)^2"], None, ("u", "v")),
    (SPHERE_ROT, None, ("u", "v")),
    (ELLIPSOID_PAR, None, ("u", "v")),
    (["u + 0.1*t*v", "v + 0.2*sin(t*u)", "0.3*u*v + 0.2*t*cos(v) + 0.1*t^2*u"], warped_space(), ("u", "v")),
    (["(1.5 - 0.5*t)*cos(u)", "2 + (1.5 - 0.5*t)*sin(u)"], poincare_half_plane(), ("u",)),
])
def test_kinematic_identities(components, ambient, coords):
    pts = X[:, :len(coords)]
    spec, fr, kin = frames(components, ambient=ambient, coords=coords, pts=pts)
    assert K.split_residual(fr, kin).max() < 1e-10
    cg = K.cauchy_green_rate(spec, pts, 1.0)
    cg_fd = K.cauchy_green_rate(spec, pts, 1.0, fd=True)
    for other in (kin.D_kin.value, cg, cg_fd):
        assert np.abs(other - kin.D.value).max() / (1 + np.abs(kin.D.value).max()) < 1e-8
    assert K.g_symmetry_residual(fr, kin.D.value).max() < 1e-9
    assert K.velocity_gradient_residual(fr, kin).max() < 1e-8
    assert K.antisymmetry_residual(fr, kin).max() < 1e-8
    assert np.abs(K.normal_transport(fr, kin.v) - kin.delta_n).max() < 1e-7
    assert np.abs(K.normal_transport_fd(spec, pts, 1.0) - kin.delta_n).max() < 1e-7
    g_kin = np.einsum("...ki,...kj->...ij", fr.g.value, kin.D_kin.value)
    assert np.abs(kin.delta_g.value - 2 * g_kin).max() < 1e-9


def test_delta_normal_vanishes():
    for comps in (BALLOON, TRANSLATE):
        _, fr, kin = frames(comps)
        assert np.abs(K.delta_normal(fr, kin)).max() < 1e-12


def test_fd_time_derivative():
    d = K.fd_time_derivative(lambda t: np.sin(3 * t), 0.4)
    assert abs(d - 3 * np.cos(1.2)) < 1e-10


def test_tensor_norm():
    g = np.diag([4.0, 1.0])
    assert K.tensor_norm(np.array([1.0, 0.0]), "u", g, np.linalg.inv(g)) == pytest.approx(2.0)
    assert K.tensor_norm(np.eye(2), "ud", g, np.linalg.inv(g)) == pytest.approx(np.sqrt(2))
