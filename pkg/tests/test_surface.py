import numpy as np
import pytest

from hyperkin import surface as S
from hyperkin.ambient import euclidean, poincare_half_plane, warped_space
from hyperkin.surface import DegenerateFrameError, geom_frame

from conftest import motion

P8 = np.pi / 8


def test_balloon_deformation_gradient(balloon):
    X = np.array([[0.7, 0.4]])
    u, v = X[0]
    J = np.array([[-np.sin(u) * np.sin(2 * v), 2 * np.cos(u) * np.cos(2 * v)],
                  [np.cos(u) * np.sin(2 * v), 2 * np.sin(u) * np.cos(2 * v)],
                  [0.0, 2 * np.sin(2 * v)]])
    assert np.allclose(geom_frame(balloon, X, 1.0).F.value[0], J, atol=1e-14)
    assert np.allclose(geom_frame(balloon, X, 2.0).F.value[0], 2 * J, atol=1e-14)


def test_cylinder_deformation_gradient(cylinder):
    X = np.array([[0.2, 0.5], [1.1, 0.9]])
    F = geom_frame(cylinder, X, 1.0).F.value
    for k, (u, _) in enumerate(X):
        assert np.allclose(F[k], [[0, 1], [2 * np.cos(2 * u), 0], [2 * np.sin(2 * u), 0]], atol=1e-14)


def test_induced_metrics(balloon, cylinder):
    fr = geom_frame(balloon, np.array([[0.3927, P8]]), 1.0)
    assert np.allclose(fr.g.value[0], np.diag([0.5, 4.0]), atol=1e-12)
    fr = geom_frame(cylinder, np.array([[0.3, 0.4]]), 1.0)
    assert np.allclose(fr.g.value[0], np.diag([4.0, 1.0]), atol=1e-12)


def test_degenerate_frame(balloon):
    with pytest.raises(DegenerateFrameError):
        geom_frame(balloon, np.array([[0.3, 0.0]]), 1.0)


def test_unit_normals(balloon, cylinder):
    X = np.array([[0.3, 0.4], [2.0, 1.1]])
    fr = geom_frame(balloon, X, 1.0)
    radial = fr.position.value - np.array([0, 0, 1.0])
    assert np.allclose(np.abs(np.einsum("pa,pa->p", fr.normal.value, radial)), 1.0, atol=1e-12)
    plane = motion(["u", "v", "0"])
    assert np.allclose(geom_frame(plane, X, 0.0).normal.value, [0, 0, 1])
    fr = geom_frame(cylinder, X, 1.0)
    u = X[:, 0]
    expect = np.stack([0 * u, np.sin(2 * u), -np.cos(2 * u)], -1)
    assert np.allclose(np.abs(np.einsum("pa,pa->p", fr.normal.value, expect)), 1.0, atol=1e-12)


def test_projection(balloon):
    fr = geom_frame(balloon, np.array([[0.3, 0.5]]), 1.0)
    n = fr.normal.value
    F = fr.F.value
    assert np.allclose(fr.project(n).value, 0, atol=1e-14)
    assert np.allclose(fr.project(F[..., 0]).value, [[1, 0]], atol=1e-14)
    assert np.allclose(fr.project(F[..., 0] + 3 * n).value, [[1, 0]], atol=1e-14)
    W = np.array([[0.3, -1.2, 0.8]])
    nW = np.einsum("pa,pa->p", W, n)
    assert np.allclose(fr.push(fr.project(W)).value + nW[:, None] * n, W, atol=1e-12)


def test_second_fundamental_forms(balloon, cylinder):
    plane = motion(["u + 0.3*v", "v", "0"])
    fr = geom_frame(plane, np.array([[0.2, 0.3]]), 0.0)
    assert np.allclose(fr.B.value, 0) and np.allclose(fr.S.value, 0)
    fr = geom_frame(balloon, np.array([[0.3, 0.5], [1.0, 1.2]]), 1.0)
    sigma = fr.S.value[0, 0, 0]
    assert abs(abs(sigma) - 1) < 1e-12
    assert np.allclose(fr.S.value, sigma * np.eye(2), atol=1e-12)
    fr = geom_frame(cylinder, np.array([[0.3, 0.5]]), 1.0)
    # g-orthonormalized shape operator has eigenvalues {0, +-1}
    ev = np.sort(np.abs(np.linalg.eigvals(fr.S.value[0])))
    assert np.allclose(ev, [0, 1], atol=1e-12)
    assert np.allclose(fr.III.value, np.swapaxes(fr.III.value, -1, -2))


def test_weingarten_sign_convention(balloon):
    fr = geom_frame(balloon, np.array([[0.3, 0.5]]), 1.3)
    assert np.abs(S.weingarten_residual(fr)).max() < 1e-9


def test_balloon_christoffels(balloon):
    v = np.array([P8, 0.3, 0.7])
    X = np.stack([np.full(3, 0.5), v], -1)
    G = geom_frame(balloon, X, 1.0).christoffel.value
    assert np.allclose(G[:, 0, 0, 1], 2 / np.tan(2 * v), atol=1e-10)
    assert np.allclose(G[:, 0, 1, 0], 2 / np.tan(2 * v), atol=1e-10)
    assert np.allclose(G[:, 1, 0, 0], -0.25 * np.sin(4 * v), atol=1e-10)
    assert G[0, 0, 0, 1] == pytest.approx(2.0)
    assert G[0, 1, 0, 0] == pytest.approx(-0.25)


@pytest.mark.parametrize("t", [0.5, 1.0, 1.7])
def test_cylinder_flat(cylinder, t):
    fr = geom_frame(cylinder, np.array([[0.3, 0.4], [0.9, 0.1]]), t)
    assert np.abs(fr.christoffel.value).max() < 1e-12
    assert np.abs(fr.riemann.value).max() < 1e-12


def test_sphere_curvature(balloon):
    fr = geom_frame(balloon, np.array([[0.3, 0.5], [2.0, 1.0]]), 1.0)
    assert np.allclose(S.sectional_curvature(fr), 1.0, atol=1e-10)
    assert np.abs(fr.grad_S.value).max() < 1e-10


def test_curve_has_no_curvature():
    c = motion(["(1.5 - 0.5*t)*cos(u)", "2 + (1.5 - 0.5*t)*sin(u)"], poincare_half_plane(), coords=("u",))
    fr = geom_frame(c, np.array([[0.3], [2.0]]), 1.0)
    assert np.array_equal(fr.riemann.value, np.zeros_like(fr.riemann.value))


@pytest.mark.parametrize("components,ambient,coords", [
    (["t*cos(u)*sin(2*v)", "t*sin(u)*sin(2*v)", "2*t*sin(v)^2"], euclidean(3), ("u", "v")),
    (["u + 0.1*t*v", "v + 0.2*sin(t*u)", "0.3*u*v + 0.2*t*cos(v)"], warped_space(), ("u", "v")),
    (["(1.5 - 0.5*t)*cos(u)", "2 + (1.5 - 0.5*t)*sin(u)"], poincare_half_plane(), ("u",)),
])
def test_structure_equations(components, ambient, coords):
    spec = motion(components, ambient, coords=coords)
    X = np.random.default_rng(3).uniform(0.2, 0.9, size=(12, len(coords)))
    fr = geom_frame(spec, X, 1.0)
    nn, nF = S.normal_residuals(fr)
    assert np.abs(nn).max() < 1e-10 and np.abs(nF).max() < 1e-10
    assert np.abs(S.gauss_residual(fr)).max() < 1e-8
    assert np.abs(S.codazzi_residual(fr)).max() < 1e-8
    assert np.abs(S.metric_compat_residual(fr)).max() < 1e-10
    assert np.abs(S.flat_sharp_commutation_residual(fr)).max() < 1e-9
    B = fr.B.value
    assert np.abs(B - np.swapaxes(B, -1, -2)).max() < 1e-10


def test_codazzi_ambient_term_nonzero():
    """In the half-plane the Codazzi ambient term is nonzero and matches the left side."""
    c = motion(["(1.5 - 0.5*t)*cos(u)", "2 + (1.5 - 0.5*t)*sin(u)"], poincare_half_plane(), coords=("u",))
    fr = geom_frame(c, np.array([[0.3], [2.0]]), 1.0)
    # m = 1: the antisymmetrized left side and the ambient term both vanish identically
    assert np.abs(S.codazzi_residual(fr)).max() < 1e-12
    w = motion(["u + 0.1*t*v", "v + 0.2*sin(t*u)", "0.3*u*v + 0.2*t*cos(v)"], warped_space())
    fr = geom_frame(w, np.array([[0.4, 0.6]]), 1.0)
    assert np.abs(S._rbar_flat_tttn(fr)).max() > 1e-3
    assert np.abs(S.codazzi_residual(fr)).max() < 1e-8


def test_flat_sharp(balloon):
    fr = geom_frame(balloon, np.array([[0.3, 0.5]]), 1.0)
    assert np.allclose(S.flat(fr.S.value, fr.g.value), fr.B.value, atol=1e-14)
    e1 = np.array([[1.0, 0.0]])
    assert np.allclose(S.sharp(S.flat(e1, fr.g.value), fr.g_inv.value), e1, atol=1e-12)


def test_motion_spec_validation():
    with pytest.raises(ValueError, match="components"):
        motion(["u", "v"])
    with pytest.raises(ValueError, match="w"):
        motion(["u", "w", "t"])
    with pytest.raises(ValueError, match="dimension"):
        motion(["u", "v", "0"], poincare_half_plane())
    with pytest.raises(ValueError, match="empty"):
        motion(["u", "v", "0"], domain=[(1, 0), (0, 1)])


def test_exclusions(balloon):
    spec = motion(["t*cos(u)*sin(2*v)", "t*sin(u)*sin(2*v)", "2*t*sin(v)^2"], exclusions=["sin(2*v)"])
    mask = spec.excluded(np.array([[0.3, 0.0], [0.3, 0.5], [0.3, np.pi / 2 - 1e-4]]), 1.0)
    assert mask.tolist() == [True, False, True]
