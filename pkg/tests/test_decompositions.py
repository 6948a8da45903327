import numpy as np
import pytest

from dcfw.core import SmoothFunction, check_convexity, inner_product, numerical_gradient, phi, \
    sq_norm
from dcfw.decompositions import (
    DecompositionSpec,
    build,
    composite_pgm,
    composite_ppm,
    pgm,
    ppm,
    qap_direct,
    qap_linesearch,
    qap_phi,
    qap_smoothness,
    qap_v1,
    qap_v2,
    qap_v3,
    weakly_convex_pgm,
)
from dcfw.fw_inner import StepRule, SurrogateProblem, fw_solve, step_demyanov_rubinov
from dcfw.oracles import Birkhoff, BoxLinf


def sincos():
    return SmoothFunction(lambda x: np.sin(x[0]) * np.cos(x[1]) + 0.1 * x[2] ** 3,
                          lambda x: np.array([np.cos(x[0]) * np.cos(x[1]),
                                              -np.sin(x[0]) * np.sin(x[1]), 0.3 * x[2] ** 2]),
                          smoothness=2.0)


def qap_problems(A, B, s):
    return {"direct": qap_direct(A, B, s), "v1": qap_v1(A, B, s), "v2": qap_v2(A, B, s),
            "v3": qap_v3(A, B, s)}


def segment_oracle(fun, n=100_001):
    grid = np.linspace(0.0, 1.0, n)
    return grid[int(np.argmin([fun(e) for e in grid]))]


def test_pgm_identity(rng):
    half = SmoothFunction(lambda x: 0.5 * sq_norm(x), lambda x: x, smoothness=1.0)
    p = pgm(half, 1.0, BoxLinf(0.0, 1.0, dim=3))
    for _ in range(10):
        x = rng.uniform(-1, 1, 3)
        assert p.eval_f(x) - p.eval_g(x) == pytest.approx(0.5 * sq_norm(x))
        assert p.strong_convexity_f == 1.0


@pytest.mark.parametrize("builder", [pgm, ppm])
def test_nonpositive_constant(builder):
    with pytest.raises(ValueError):
        builder(sincos(), 0.0, BoxLinf(0.0, 1.0, dim=3))


def test_build_dispatch_and_unknown():
    s = BoxLinf(0.0, 1.0, dim=3)
    p = build(DecompositionSpec("ppm", {"phi": sincos(), "L": 2.0, "feasible_set": s}))
    assert p.kind == "ppm"
    with pytest.raises(ValueError, match="unknown decomposition"):
        DecompositionSpec("magic")


def test_qap_v1_identity_random(rng):
    A, B = rng.standard_normal((2, 3, 3))
    s = Birkhoff(3)
    p = qap_v1(A, B, s)
    for _ in range(20):
        X = s.random_point(rng)
        assert phi(p, X) == pytest.approx(inner_product(A.T @ X, X @ B), rel=1e-10, abs=1e-12)


def test_phi_agrees_across_qap_variants(rng):
    A, B = rng.standard_normal((2, 5, 5))
    s = Birkhoff(5)
    probs = qap_problems(A, B, s)
    for _ in range(20):
        X = s.random_point(rng)
        ref = phi(probs["direct"], X)
        for p in probs.values():
            assert phi(p, X) == pytest.approx(ref, rel=1e-8, abs=1e-10)


def test_gradients_match_finite_differences(rng):
    A, B = rng.standard_normal((2, 4, 4))
    s3 = BoxLinf(0.0, 0.9, dim=3)
    problems = list(qap_problems(A, B, Birkhoff(4)).values()) + [
        pgm(sincos(), 2.0, s3), ppm(sincos(), 2.0, s3)]
    for p in problems:
        for _ in range(20):
            x = p.set.random_point(rng)
            for fun, grad in ((p.eval_f, p.grad_f), (p.eval_g, p.subgrad_g)):
                g = grad(x)
                num = numerical_gradient(fun, x)
                assert np.linalg.norm(g - num) <= 1e-4 * max(1.0, np.linalg.norm(g))


def test_convexity_of_all_splits(rng):
    A, B = rng.standard_normal((2, 4, 4))
    s3 = BoxLinf(0.0, 1.0, dim=3)
    sc = sincos()
    for p in list(qap_problems(A, B, Birkhoff(4)).values())[1:] + [pgm(sc, 2.0, s3),
                                                                   ppm(sc, 2.0, s3)]:
        check_convexity(p, rng, pairs=1000, tol=1e-9)


def test_pgm_f_strongly_convex(rng):
    L = 2.5
    p = pgm(sincos(), L, BoxLinf(0.0, 1.0, dim=3))
    for _ in range(200):
        a, b = rng.uniform(-1, 1, (2, 3))
        lhs = p.eval_f((a + b) / 2)
        assert lhs <= (p.eval_f(a) + p.eval_f(b)) / 2 - L / 8 * sq_norm(a - b) + 1e-12


def test_weakly_convex_split(rng):
    # phi = -||x||_1, whose negative is convex
    p = weakly_convex_pgm(lambda x: -np.abs(x).sum(), np.sign, 1.0, BoxLinf(0.0, 1.0, dim=3))
    for _ in range(20):
        x = rng.uniform(-1, 1, 3)
        assert phi(p, x) == pytest.approx(-np.abs(x).sum())
    check_convexity(p, rng, pairs=500)


@pytest.mark.parametrize("builder", [composite_pgm, composite_ppm])
def test_composite_splits(builder, rng):
    c = np.array([0.3, -0.1, 0.5])
    p_fun = SmoothFunction(lambda x: 0.5 * sq_norm(x - c), lambda x: x - c, smoothness=1.0,
                           curvature=sq_norm)
    lam = 0.2
    prob = builder(p_fun, lambda x: lam * np.abs(x).sum(), lambda x: lam * np.sign(x), 1.0,
                   BoxLinf(0.0, 1.0, dim=3))
    for _ in range(20):
        x = rng.uniform(-1, 1, 3)
        assert phi(prob, x) == pytest.approx(0.5 * sq_norm(x - c) - lam * np.abs(x).sum())
    check_convexity(prob, rng, pairs=500)
    if builder is composite_ppm:
        assert prob.smoothness_f == 2.0


def test_v2_surrogate_minimizer_is_projected_gradient_point(rng):
    sc = sincos()
    s = BoxLinf(0.0, 1.0, dim=3)
    L = 2.0
    p = pgm(sc, L, s)
    for _ in range(5):
        x = rng.uniform(-1, 1, 3)
        u = p.subgrad_g(x)
        sur = SurrogateProblem(grad=lambda y: p.grad_f(y) - u, set=s, L=L,
                               value=lambda y: p.eval_f(y) - inner_product(u, y),
                               linesearch=lambda y, d, g: p.exact_linesearch(y, d, u))
        res = fw_solve(sur, x, 1e-12, 100_000)
        np.testing.assert_allclose(res.x, s.project(x - sc.grad(x) / L), atol=1e-5)


def test_qap_linesearch_zero_direction(rng):
    A, B, X = rng.standard_normal((3, 3, 3))
    for v in (1, 2, 3):
        assert qap_linesearch(v, A, B, X, np.zeros((3, 3)), np.zeros((3, 3)), L=1.0) == 0.0


def test_qap_linesearch_matches_grid(rng):
    A, B = rng.standard_normal((2, 4, 4))
    s = Birkhoff(4)
    for variant, p in ((1, qap_v1(A, B, s)), (2, qap_v2(A, B, s)), (3, qap_v3(A, B, s))):
        Xt = s.random_point(rng)
        u = p.subgrad_g(Xt)
        X = s.random_point(rng)
        S = s.lmo(p.grad_f(X) - u).vertex
        D = S - X
        eta = p.exact_linesearch(X, D, u)
        best = segment_oracle(lambda e: p.eval_f(X + e * D) - inner_product(u, X + e * D))
        assert eta == pytest.approx(best, abs=1e-4), variant


def test_qap_v2_linesearch_equals_dr(rng):
    A, B = rng.standard_normal((2, 4, 4))
    s = Birkhoff(4)
    p = qap_v2(A, B, s)
    for _ in range(10):
        X = s.random_point(rng)
        u = p.subgrad_g(s.random_point(rng))
        grad = p.grad_f(X) - u
        S = s.lmo(grad).vertex
        assert p.exact_linesearch(X, S - X, u) == pytest.approx(
            step_demyanov_rubinov(grad, X, S, p.smoothness_f), abs=1e-12)


def test_qap_v3_nonconvex_direction_falls_back(caplog):
    # L far below the smoothness of phi makes the variant-3 segment concave
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = -A
    X = np.eye(2)
    D = np.array([[-1.0, 1.0], [1.0, -1.0]])
    with caplog.at_level("WARNING"):
        eta = qap_linesearch(3, A, B, X, D, np.zeros((2, 2)), L=1e-3)
    assert 0.0 <= eta <= 1.0
    assert "nonconvex" in caplog.text


def test_qap_smoothness_bounds_curvature(rng):
    A, B = rng.standard_normal((2, 5, 5))
    phi_q = qap_phi(A, B)
    L = qap_smoothness(A, B)
    for _ in range(50):
        D = rng.standard_normal((5, 5))
        assert abs(phi_q.curvature(D)) <= L * sq_norm(D) + 1e-9
