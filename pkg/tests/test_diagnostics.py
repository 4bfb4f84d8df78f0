import numpy as np
import pytest

from conesolve import (
    BallFunction,
    BallGrid,
    LogSigmaK,
    MatrixField,
    MongeAmpere,
    PeriodicGrid,
    ScalarField,
    abp_check,
    contact_set,
    hmw_ratio,
    strong_concavity_flags,
    trace_estimate_check,
)


def quadratic_well(a, grid=None):
    grid = grid or BallGrid(2, 64)
    return BallFunction.from_callable(grid, lambda x, y: a * (x**2 + y**2))


def test_contact_set_quadratic():
    v = quadratic_well(0.4)
    p = contact_set(v, 0.4)
    # gradient condition: 0.8 |x| < 0.2
    assert p.count > 0
    assert np.linalg.norm(p.points, axis=1).max() <= 0.25 * (1 + 1e-12)
    # for convex v the plane test is redundant: the gradient condition alone
    # gives the same set
    grads = v.gradient()
    gnorm = np.sqrt(grads[0] ** 2 + grads[1] ** 2)
    expected = int((v.grid.interior_mask() & (gnorm < 0.2)).sum())
    assert p.count == expected


def test_contact_set_empty_cases():
    grid = BallGrid(2, 64)
    # linear with slope above eps/2 has no small-gradient points; tilt gently
    # so the precondition still holds via the quadratic term
    v = BallFunction.from_callable(grid, lambda x, y: 0.6 * (x**2 + y**2) + 0.5 * x)
    p = contact_set(v, 0.08)
    assert p.count > 0
    for pt in p.points:
        g = 1.2 * pt + np.array([0.5, 0.0])
        assert np.linalg.norm(g) < 0.04

    with pytest.raises(ValueError):
        contact_set(quadratic_well(0.4), 0.0)
    # strictly concave: precondition cannot hold
    w = BallFunction.from_callable(grid, lambda x, y: -(x**2 + y**2))
    with pytest.raises(ValueError):
        contact_set(w, 0.1)


def test_abp_quadratic_closed_form():
    rep = abp_check(quadratic_well(0.4), 0.4)
    derived = 0.04 * np.pi
    assert rep.integral_det == pytest.approx(derived, rel=0.05)
    assert rep.lower_bound == pytest.approx(derived, rel=1e-12)
    assert rep.passed
    assert rep.contact_volume_fraction == pytest.approx(1 / 16, rel=0.05)


def test_abp_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        abp_check(quadratic_well(0.4), 0.0)
    # too large an epsilon violates the boundary-gap precondition
    with pytest.raises(ValueError):
        abp_check(quadratic_well(0.4), 0.6)


def test_abp_fuzz_wells():
    grid = BallGrid(2, 64)
    rng = np.random.default_rng(0)
    done = 0
    while done < 50:
        a = rng.uniform(0.5, 1.5)
        b = rng.uniform(-0.2, 0.2, 2)
        amp = rng.uniform(0.0, 0.05)
        kx, ky = rng.integers(1, 4, 2)

        def fn(x, y, a=a, b=b, amp=amp, kx=kx, ky=ky):
            return a * ((x - b[0]) ** 2 + (y - b[1]) ** 2) + amp * np.sin(
                np.pi * kx * x) * np.cos(np.pi * ky * (y + 0.3))

        v = BallFunction.from_callable(grid, fn)
        room = float(v.boundary_values.min() - v.center_value())
        if room <= 0.1:
            continue
        rep = abp_check(v, min(0.45, 0.9 * room))
        assert rep.passed
        done += 1


def test_hmw_ratio_values():
    g = PeriodicGrid.make("complex", 1, 64, 1.0)
    assert hmw_ratio(ScalarField.zeros(g), np.eye(1)).ratio == 0.0

    a = 0.3
    x, _ = g.coordinates()
    u = ScalarField(g, a * np.cos(2 * np.pi * x))
    rep = hmw_ratio(u, np.eye(1))
    assert rep.sup_dd_u == pytest.approx(a * np.pi**2, rel=1e-10)
    assert rep.sup_grad_sq == pytest.approx(a**2 * np.pi**2, rel=1e-10)
    k = rep.sup_grad_sq + 1.0
    assert rep.ratio == pytest.approx(rep.sup_dd_u / k)
    assert rep.phi_params["K"] == pytest.approx(k)
    assert rep.phi_params["phi_prime_low"] == pytest.approx(1 / (4 * k))
    assert rep.phi_params["phi_prime_high"] == pytest.approx(1 / (2 * k))
    assert 0 < rep.psi_params["tau"] <= 1

    with pytest.raises(ValueError):
        hmw_ratio(ScalarField.zeros(PeriodicGrid.make("real", 2, 8, 1.0)), np.eye(2))


def test_trace_estimate():
    g = PeriodicGrid.make("complex", 2, 16, 1.0, reduced=True)
    u = ScalarField.zeros(g)
    gfield = MatrixField.constant(g, np.eye(2))
    rep = trace_estimate_check(u, gfield, np.eye(2), 1.0, threshold=2.5)
    assert rep.c_fit == pytest.approx(2.0)
    assert rep.passed and bool(rep)
    assert not trace_estimate_check(u, gfield, np.eye(2), 1.0, threshold=1.5)


def test_strong_concavity_flags():
    rng = np.random.default_rng(1)
    ma = MongeAmpere(3)
    samples = rng.uniform(0.2, 5.0, (10_000, 3))
    flag_a, flag_b = strong_concavity_flags(ma, samples)
    assert flag_a and flag_b
    # the first condition is an exact zero for the log-det operator
    lam = -np.sort(-samples, axis=-1)
    g = ma.gradient(lam)
    h = ma.hessian(lam)
    assert np.abs(h[..., 0, 0] + g[..., 0] / lam[..., 0]).max() < 1e-12

    assert strong_concavity_flags(ma, [[1.0, 1.0, 1.0]]) == (True, True)
    # the linear operator fails both at (2, 1)
    assert strong_concavity_flags(LogSigmaK(2, 1), [[2.0, 1.0]]) == (False, False)

    with pytest.raises(ValueError):
        strong_concavity_flags(ma, [])
