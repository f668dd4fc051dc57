import numpy as np
import pytest
from hypothesis import given, strategies as st

from spiralkit import nufft, trajgen
from spiralkit.errors import CoordOutOfRange, NonPositiveWeight, NumericalBreakdown, ShapeMismatch, ValidationError

from conftest import cartesian_coords, crandn


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def random_coords(rng, m):
    return rng.uniform(-0.5, 0.5, (m, 2))


def centered_dft(img):
    """Oracle for the full grid: sum_p img(p) exp(-2 pi i k p) with k = (q - n/2)/n."""
    n = img.shape[-1]
    shifted = np.fft.ifftshift(img, axes=(-2, -1))
    return np.fft.fftshift(np.fft.fft2(shifted), axes=(-2, -1))


def test_full_grid_forward_is_dft(rng):
    n = 16
    img = crandn(rng, (n, n))
    plan = nufft.plan_create(cartesian_coords(n), n)
    got = nufft.forward(plan, img)[0]
    # cartesian_coords enumerates kx-major; reshape to [kx, ky] then transpose to [ky, kx]
    want = centered_dft(img).T.ravel()
    assert rel(got, want) < 1e-5


@pytest.mark.parametrize("n", [16, 32, 64])
def test_forward_adjoint_match_oracle(rng, n):
    coords = random_coords(rng, 300)
    plan = nufft.plan_create(coords, n)
    img = crandn(rng, (n, n))
    y = crandn(rng, 300)
    assert rel(nufft.forward(plan, img)[0], nufft.nudft_forward_oracle(coords, img)) < 1e-5
    assert rel(nufft.adjoint(plan, y)[0], nufft.nudft_adjoint_oracle(coords, y, n)) < 1e-5


def test_oracle_on_spiral(rng, desk_traj, desk_plan):
    coords = nufft.normalize_coords(desk_traj.flat_k(), desk_traj.spec.fov_cm, desk_traj.spec.matrix_size)
    img = crandn(rng, (64, 64))
    assert rel(nufft.forward(desk_plan, img)[0], nufft.nudft_forward_oracle(coords, img)) < 1e-5


def test_sixteen_by_fifty_oracle(rng):
    coords = random_coords(rng, 50)
    plan = nufft.plan_create(coords, 16)
    img = rng.standard_normal((16, 16))
    assert rel(nufft.forward(plan, img)[0], nufft.nudft_forward_oracle(coords, img)) < 1e-5
    y = crandn(rng, 50)
    assert rel(nufft.adjoint(plan, y)[0], nufft.nudft_adjoint_oracle(coords, y, 16)) < 1e-5


def test_center_delta_has_unit_spectrum(rng):
    n = 32
    img = np.zeros((n, n))
    img[n // 2, n // 2] = 1
    plan = nufft.plan_create(random_coords(rng, 100), n)
    np.testing.assert_allclose(np.abs(nufft.forward(plan, img)[0]), 1.0, atol=1e-5)


def test_dc_measurement_gives_constant_image():
    plan = nufft.plan_create(np.zeros((1, 2)), 16)
    out = nufft.adjoint(plan, np.ones(1))[0]
    np.testing.assert_allclose(out, out[0, 0], rtol=1e-5)
    assert out[0, 0] == pytest.approx(1.0, rel=1e-5)


def test_oracle_examples(rng):
    coords = random_coords(rng, 40)
    assert np.all(nufft.nudft_forward_oracle(coords, np.zeros((8, 8))) == 0)
    delta = np.zeros((8, 8))
    delta[4, 4] = 1
    back = nufft.nudft_adjoint_oracle(coords, nufft.nudft_forward_oracle(coords, delta), 8)
    assert back[4, 4] == pytest.approx(40.0)
    x, z = crandn(rng, (8, 8)), crandn(rng, (8, 8))
    a, b = 1.5 - 0.5j, -2.0
    lhs = nufft.nudft_forward_oracle(coords, a * x + b * z)
    rhs = a * nufft.nudft_forward_oracle(coords, x) + b * nufft.nudft_forward_oracle(coords, z)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_nudft_matrix_agrees_with_oracle(rng):
    coords = random_coords(rng, 30)
    img = crandn(rng, (8, 8))
    mat = nufft.nudft_matrix(coords, 8)
    np.testing.assert_allclose(mat @ img.ravel(), nufft.nudft_forward_oracle(coords, img), atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 16, 24]), st.integers(1, 3))
def test_adjoint_dot_product(seed, n, coils):
    rng = np.random.default_rng(seed)
    plan = nufft.plan_create(random_coords(rng, 64), n)
    x = crandn(rng, (coils, n, n))
    y = crandn(rng, (coils, 64))
    ax = nufft.forward(plan, x)
    lhs = np.vdot(y, ax)
    rhs = np.vdot(nufft.adjoint(plan, y), x)
    assert abs(lhs - rhs) / (np.linalg.norm(ax) * np.linalg.norm(y)) < 1e-6


@given(st.integers(0, 2**32 - 1))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    plan = nufft.plan_create(random_coords(rng, 80), 16)
    x, z = crandn(rng, (16, 16)), crandn(rng, (16, 16))
    a, b = complex(*rng.standard_normal(2)), complex(*rng.standard_normal(2))
    lhs = nufft.forward(plan, a * x + b * z)
    rhs = a * nufft.forward(plan, x) + b * nufft.forward(plan, z)
    assert rel(lhs, rhs) < 1e-10
    y, w = crandn(rng, 80), crandn(rng, 80)
    lhs = nufft.adjoint(plan, a * y + b * w)
    rhs = a * nufft.adjoint(plan, y) + b * nufft.adjoint(plan, w)
    assert rel(lhs, rhs) < 1e-10


def test_coil_independence(rng, desk_plan):
    x = crandn(rng, (3, 64, 64))
    joint = nufft.forward(desk_plan, x)
    for c in range(3):
        assert np.array_equal(joint[c], nufft.forward(desk_plan, x[c])[0])
    back = nufft.adjoint(desk_plan, joint)
    for c in range(3):
        assert np.array_equal(back[c], nufft.adjoint(desk_plan, joint[c])[0])


def test_plan_is_deterministic(rng):
    coords = random_coords(rng, 100)
    a, b = nufft.plan_create(coords, 16), nufft.plan_create(coords, 16)
    assert np.array_equal(a.interp_indices, b.interp_indices)
    assert np.array_equal(a.interp_weights, b.interp_weights)
    assert np.all(a.apodization > 0)


def test_plan_errors(rng):
    with pytest.raises(ValidationError):
        nufft.plan_create(np.zeros((0, 2)), 16)
    with pytest.raises(CoordOutOfRange):
        nufft.plan_create(np.array([[0.6, 0.0]]), 16)
    with pytest.raises(CoordOutOfRange):
        nufft.plan_create(np.array([[np.nan, 0.0]]), 16)
    traj = trajgen.Trajectory(np.zeros((1, 3, 2)), np.zeros((1, 3, 2)), 1e-5, 1.0)
    with pytest.raises(ValidationError):
        nufft.plan_create(traj, 16)


def test_edge_coordinate_wraps():
    plan = nufft.plan_create(np.array([[0.5, -0.5]]), 16)
    assert plan.sample_coords[0, 0] == -0.5


def test_shape_mismatch(rng):
    plan = nufft.plan_create(random_coords(rng, 10), 16)
    with pytest.raises(ShapeMismatch):
        nufft.forward(plan, np.zeros((2, 8, 8)))
    with pytest.raises(ShapeMismatch):
        nufft.adjoint(plan, np.zeros((2, 11)))


def test_cg_full_grid_recovers_image(rng):
    n = 32
    plan = nufft.plan_create(cartesian_coords(n), n)
    x = crandn(rng, (4, n, n))
    info = nufft.CGInfo()
    est = nufft.cg_inverse(plan, nufft.forward(plan, x), info=info)
    assert rel(est, x) < 1e-6
    assert max(info.iterations) <= 50


def test_cg_zero_measurements():
    plan = nufft.plan_create(np.array([[0.1, 0.2], [-0.3, 0.0]]), 8)
    assert np.all(nufft.cg_inverse(plan, np.zeros((2, 2))) == 0)


def test_cg_matches_dense_regularized_solve(rng):
    n, m, lam = 16, 200, 1e-3
    coords = random_coords(rng, m)
    plan = nufft.plan_create(coords, n)
    y = crandn(rng, m)
    mat = nufft.nudft_matrix(coords, n)
    dense = np.linalg.solve(mat.conj().T @ mat + lam * np.eye(n * n), mat.conj().T @ y).reshape(n, n)
    est = nufft.cg_inverse(plan, y, max_iters=1000, tol=1e-10, l2_reg=lam)[0]
    assert rel(est, dense) < 1e-4


def test_cg_residuals_never_increase(rng, desk_plan):
    info = nufft.CGInfo()
    nufft.cg_inverse(desk_plan, crandn(rng, (2, desk_plan.num_samples)), max_iters=40, tol=1e-12, info=info)
    for hist in info.residuals:
        assert np.all(np.diff(hist) <= 1e-12)
        assert len(hist) == 41


def test_cg_breakdown_on_nonfinite(desk_plan):
    y = np.zeros(desk_plan.num_samples, dtype=complex)
    y[3] = np.inf
    with pytest.raises(NumericalBreakdown):
        nufft.cg_inverse(desk_plan, y)
    with pytest.raises(ValidationError):
        nufft.cg_inverse(desk_plan, np.zeros(desk_plan.num_samples), tol=0)


def test_frequency_weighting():
    y = np.arange(1, 7, dtype=complex).reshape(2, 3)
    assert np.array_equal(nufft.apply_frequency_weighting(y, np.ones(3)), y)
    w = np.array([1.0, 2.0, 1.0])
    out = nufft.apply_frequency_weighting(y, w)
    assert np.array_equal(out[:, 1], 2 * y[:, 1]) and np.array_equal(out[:, 0], y[:, 0])
    with pytest.raises(NonPositiveWeight):
        nufft.apply_frequency_weighting(y, np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ShapeMismatch):
        nufft.apply_frequency_weighting(y, np.ones(4))
    np.testing.assert_array_equal(nufft.radial_weights(np.linspace(0, 0.5, 7), 1.0, 0.0), 1.0)
    assert nufft.radial_weights(0.5, 2.0, 4.0) == pytest.approx(np.e / 2)


def test_kernel_helpers():
    beta = nufft.kaiser_bessel_beta(4, 2.0)
    assert beta == pytest.approx(np.pi * np.sqrt(4 * 1.5**2 - 0.8))
    u = np.linspace(-3, 3, 13)
    vals = nufft.kaiser_bessel(u, 4, beta)
    assert np.all(vals[np.abs(u) > 2] == 0) and np.all(vals[np.abs(u) < 2] > 0)
    np.testing.assert_allclose(vals, vals[::-1])
    assert nufft.normalize_coords(np.array([[5.818, 0.0]]), 22.0, 256)[0, 0] == pytest.approx(0.5, abs=1e-4)
