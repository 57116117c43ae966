import math

import numpy as np
import pytest
from oracles import dense_laplace_fill, random_blob_mask, random_smooth_plane

from cervprep.inpaint import (
    FundamentalSolutionParams,
    PoissonRhs,
    SolverConfig,
    component_boundary_values,
    discrete_laplacian,
    fundamental_solution,
    inpaint_image,
    inpaint_plane,
    mask_components,
    verify_radial_harmonicity,
)

ALL_METHODS = ["jacobi", "gauss-seidel", "sor"]


def affine_plane(h, w):
    y, x = np.mgrid[0:h, 0:w].astype(float)
    return 2 * x + 3 * y + 5


def test_laplacian_examples():
    assert discrete_laplacian(np.full((5, 5), 3.3), 2, 2) == 0
    a = affine_plane(6, 7)
    assert all(discrete_laplacian(a, x, y) == 0 for x in range(1, 6) for y in range(1, 5))
    q = np.mgrid[0:5, 0:6][1].astype(float) ** 2
    assert discrete_laplacian(q, 3, 2) == 2.0


@pytest.mark.parametrize("x, y", [(0, 2), (2, 0), (4, 2), (2, 4)])
def test_laplacian_rejects_border(x, y):
    with pytest.raises(ValueError):
        discrete_laplacian(np.zeros((5, 5)), x, y)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="sor", omega=2.0)
    with pytest.raises(ValueError):
        SolverConfig(method="multigrid")
    with pytest.raises(ValueError):
        SolverConfig(tol=0)
    assert SolverConfig(method="gs").method == "gauss-seidel"
    # omega only constrains SOR
    SolverConfig(method="jacobi", omega=5.0)


@pytest.mark.parametrize("method", ALL_METHODS)
def test_constant_neighbourhood(method):
    p = np.full((3, 3), 7.0)
    p[1, 1] = 200.0
    m = np.zeros((3, 3), bool)
    m[1, 1] = True
    out, stats = inpaint_plane(p, m, SolverConfig(method=method, tol=1e-9))
    assert out[1, 1] == pytest.approx(7.0, abs=1e-9)
    assert stats.converged


@pytest.mark.parametrize("method", ALL_METHODS)
def test_one_dimensional_fill_is_linear(method):
    tol = 1e-6
    p = np.array([[0.0, 99, 99, 99, 99, 10.0]])
    m = np.array([[False, True, True, True, True, False]])
    out, stats = inpaint_plane(p, m, SolverConfig(method=method, tol=tol))
    assert stats.converged
    np.testing.assert_allclose(out[0, 1:5], [2, 4, 6, 8], atol=10 * tol)


def test_affine_reproduction_16x16():
    h = w = 16
    truth = affine_plane(h, w)
    m = np.zeros((h, w), bool)
    m[5:11, 5:11] = True
    start = truth.copy()
    start[m] = 0
    exact = dense_laplace_fill(start, m)
    # the dense oracle confirms the linear function is the discrete solution
    np.testing.assert_allclose(exact[m], truth[m], atol=1e-9)
    for method in ALL_METHODS:
        out, stats = inpaint_plane(start, m, SolverConfig(method=method, tol=1e-6, max_iters=100000))
        assert stats.converged
        np.testing.assert_allclose(out[m], truth[m], atol=1e-3)


def test_matches_dense_oracle_on_border_masks(rng):
    # masks touching the frame exercise the mirrored stencil
    for _ in range(10):
        h, w = int(rng.integers(4, 14)), int(rng.integers(4, 14))
        plane = random_smooth_plane(rng, h, w)
        m = random_blob_mask(rng, h, w, max_fraction=0.35, max_radius=3)
        m[0, : w // 2] = True
        exact = dense_laplace_fill(plane, m)
        out, stats = inpaint_plane(plane, m, SolverConfig(tol=1e-9))
        assert stats.converged
        np.testing.assert_allclose(out, exact, atol=1e-6)


def test_poisson_source_term(rng):
    h, w = 9, 11
    plane = random_smooth_plane(rng, h, w)
    f = rng.normal(size=(h, w))
    m = np.zeros((h, w), bool)
    m[2:7, 3:9] = True
    exact = dense_laplace_fill(plane, m, f=f)
    out, stats = inpaint_plane(plane, m, SolverConfig(tol=1e-10), rhs=PoissonRhs(f))
    assert stats.converged
    np.testing.assert_allclose(out, exact, atol=1e-7)


def test_quadratic_from_constant_source():
    # -Δu = -2 is solved by u = x^2
    h, w = 8, 12
    x = np.mgrid[0:h, 0:w][1].astype(float)
    truth = x**2
    m = np.zeros((h, w), bool)
    m[2:6, 3:9] = True
    start = np.where(m, 0.0, truth)
    out, _ = inpaint_plane(start, m, SolverConfig(tol=1e-9), rhs=PoissonRhs(np.full((h, w), -2.0)))
    np.testing.assert_allclose(out[m], truth[m], atol=1e-6)


def test_exterior_is_untouched(rng):
    plane = random_smooth_plane(rng, 20, 20)
    m = random_blob_mask(rng, 20, 20)
    out, _ = inpaint_plane(plane, m, SolverConfig())
    assert np.array_equal(out[~m], plane[~m])


def test_full_mask_is_an_error():
    with pytest.raises(ValueError, match="entire plane"):
        inpaint_plane(np.zeros((3, 3)), np.ones((3, 3), bool))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        inpaint_plane(np.zeros((3, 3)), np.ones((3, 4), bool))


def test_non_convergence_is_reported_not_raised(rng):
    plane = random_smooth_plane(rng, 30, 30)
    m = np.zeros((30, 30), bool)
    m[5:25, 5:25] = True
    out, stats = inpaint_plane(plane, m, SolverConfig(method="jacobi", tol=1e-10, max_iters=5))
    assert not stats.converged
    assert stats.iterations == 5
    assert stats.final_residual > 1e-10
    assert np.all(np.isfinite(out))


def test_idempotent(rng):
    tol = 1e-6
    plane = random_smooth_plane(rng, 24, 24)
    m = random_blob_mask(rng, 24, 24)
    once, _ = inpaint_plane(plane, m, SolverConfig(tol=tol))
    twice, _ = inpaint_plane(once, m, SolverConfig(tol=tol))
    assert np.abs(twice - once).max() <= 10 * tol


@pytest.mark.parametrize("method", ALL_METHODS)
def test_left_right_symmetry(rng, method):
    tol = 1e-6
    half = random_smooth_plane(rng, 16, 10)
    plane = np.concatenate([half, half[:, ::-1]], axis=1)
    mhalf = random_blob_mask(rng, 16, 10, max_radius=4)
    m = np.concatenate([mhalf, mhalf[:, ::-1]], axis=1)
    out, _ = inpaint_plane(plane, m, SolverConfig(method=method, tol=tol))
    assert np.abs(out - out[:, ::-1]).max() <= 10 * tol


def test_component_boundary_values():
    p = np.arange(25, dtype=float).reshape(5, 5)
    m = np.zeros((5, 5), bool)
    m[1, 1] = True
    m[3, 3] = True
    labels, values = component_boundary_values(p, m)
    assert mask_components(m)[1] == 2
    assert sorted(values[0].tolist()) == [1, 5, 7, 11]
    assert sorted(values[1].tolist()) == [13, 17, 19, 23]
    assert labels[1, 1] == 1 and labels[3, 3] == 2


def test_inpaint_image_empty_mask():
    img = np.random.default_rng(0).integers(0, 256, (6, 5, 3), dtype=np.uint8)
    out, stats = inpaint_image(img, np.zeros((6, 5), bool))
    np.testing.assert_array_equal(out, img)
    assert [s.iterations for s in stats] == [0, 0, 0]


def test_inpaint_image_single_pixel():
    img = np.full((5, 5, 3), 100, np.uint8)
    img[2, 2] = 255
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    out, stats = inpaint_image(img, m)
    assert out[2, 2].tolist() == [100, 100, 100]
    assert len(stats) == 3 and all(s.converged for s in stats)


def test_inpaint_image_grayscale_mode():
    img = np.zeros((5, 5, 3), np.uint8)
    img[...] = (200, 100, 50)
    img[2, 2] = 255
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    out, stats = inpaint_image(img, m, grayscale=True)
    luma = 0.299 * 200 + 0.587 * 100 + 0.114 * 50
    assert out[2, 2].tolist() == [round(luma)] * 3
    assert len(stats) == 1
    np.testing.assert_array_equal(out[~m], img[~m])


def test_inpaint_image_on_phantom_stays_in_envelope():
    from cervprep.phantom import PhantomSpec, generate_phantom
    from cervprep.specular import detect_specular, dilate

    img, truth = generate_phantom(PhantomSpec(width=160, height=120, axes=(60, 45), n_speculars=5, specular_radius_range=(2, 4), seed=7))
    m = dilate(detect_specular(img))
    cfg = SolverConfig(tol=1e-4)
    out, stats = inpaint_image(img, m, cfg)
    assert all(s.converged and s.final_residual <= cfg.tol for s in stats)
    labels, _ = mask_components(m)
    for c in range(3):
        _, ring = component_boundary_values(img[..., c].astype(float), m)
        for comp, vals in enumerate(ring, start=1):
            filled = out[..., c][labels == comp]
            assert filled.min() >= vals.min() and filled.max() <= vals.max()
    # filled pixels are close to the noiseless tissue colour underneath
    assert np.abs(out[m].astype(float) - truth.clean_image[m]).mean() < 5


def test_fundamental_solution_examples():
    assert fundamental_solution(FundamentalSolutionParams(2, 1, 0), [1.0, 0.0]) == 0.0
    assert fundamental_solution(FundamentalSolutionParams(3, 1, 0), [0.0, 2.0, 0.0]) == pytest.approx(-0.5)
    for x in ([0.3, -4.0], [1e-3, 0.0], [7.0, 7.0]):
        assert fundamental_solution(FundamentalSolutionParams(2, 0, 3.25), x) == 3.25
    assert fundamental_solution(FundamentalSolutionParams(4, 2, 1), [1.0, 1.0, 1.0, 1.0]) == pytest.approx(2 / (-2 * 4) + 1)


def test_fundamental_solution_errors():
    with pytest.raises(ValueError):
        fundamental_solution(FundamentalSolutionParams(2, 1, 0), [0.0, 0.0])
    with pytest.raises(ValueError):
        fundamental_solution(FundamentalSolutionParams(3, 1, 0), [1.0, 0.0])
    with pytest.raises(ValueError):
        FundamentalSolutionParams(1, 1, 0)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_fundamental_solution_is_harmonic_off_origin(n):
    # central second differences in R^n, independent of the grid verifier
    p = FundamentalSolutionParams(n, 1.7, -0.4)
    x0 = np.linspace(0.6, 1.3, n)
    h = 1e-3
    lap = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        lap += fundamental_solution(p, x0 + e) - 2 * fundamental_solution(p, x0) + fundamental_solution(p, x0 - e)
    assert abs(lap / h**2) < 1e-4


def test_radial_consistency_ratio():
    p = FundamentalSolutionParams(2, 1, 0)
    coarse = verify_radial_harmonicity(p, 0.02, 1.0, 2.0)
    fine = verify_radial_harmonicity(p, 0.01, 1.0, 2.0)
    assert 3.4 <= coarse / fine <= 4.6


def test_radial_exact_cases():
    assert verify_radial_harmonicity(FundamentalSolutionParams(2, 0, 5), 0.01, 1.0, 2.0) == 0.0
    r = verify_radial_harmonicity(FundamentalSolutionParams(2, 1, 0), 0.01, 1.0, 2.0, sampler=lambda X, Y: 3 * X - 2 * Y)
    assert r <= 1e-9


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(p=FundamentalSolutionParams(3, 1, 0), h=0.01, inner=1, outer=2),
        dict(p=FundamentalSolutionParams(2, 1, 0), h=0.01, inner=0, outer=2),
        dict(p=FundamentalSolutionParams(2, 1, 0), h=0.5, inner=1, outer=2),
    ],
)
def test_radial_verifier_preconditions(kwargs):
    with pytest.raises(ValueError):
        verify_radial_harmonicity(**kwargs)


def test_random_instances_match_oracle(rng):
    for _ in range(15):
        h, w = int(rng.integers(5, 16)), int(rng.integers(5, 16))
        plane = random_smooth_plane(rng, h, w)
        m = random_blob_mask(rng, h, w, max_radius=3)
        exact = dense_laplace_fill(plane, m)
        out, _ = inpaint_plane(plane, m, SolverConfig(method="sor", omega=1.5, tol=1e-8))
        assert math.isclose(np.abs(out - exact).max(), 0.0, abs_tol=1e-6)
