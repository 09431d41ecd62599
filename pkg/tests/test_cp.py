"""Canonical tensor arithmetic and the alternating least-squares fitters."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as oc
from tensorpde.basis import BasisSpec
from tensorpde.cp import (ALSApproxConfig, CPTensor, add, cp_approx_als,
                          inner_product, norm, pad_rank, random_cp,
                          rank_reduce_als, scale)

SPECS = (BasisSpec(5, 1.5), BasisSpec(7, 2.0), BasisSpec(3, 0.8))


def _dense_inner(f, g):
    # orthonormal basis: <f, g> is the flat coefficient inner product
    return np.vdot(oc.dense_cp(f), oc.dense_cp(g))


def test_constructor_validation():
    with pytest.raises(ValueError, match="one factor matrix per dimension"):
        CPTensor(SPECS, [np.zeros((5, 1))] * 2)
    with pytest.raises(ValueError, match="inconsistent ranks"):
        CPTensor(SPECS, [np.zeros((5, 1)), np.zeros((7, 2)), np.zeros((3, 1))])
    with pytest.raises(ValueError, match="rows != Q"):
        CPTensor(SPECS, [np.zeros((4, 1)), np.zeros((7, 1)), np.zeros((3, 1))])


def test_evaluate_matches_dense_grid(rng):
    f = random_cp(SPECS, 3, rng)
    axes = [np.linspace(-s.b, s.b, 4) for s in SPECS]
    ref = oc.dense_grid(f, axes)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    got = f.evaluate(grid).reshape(4, 4, 4)
    assert np.allclose(got, ref, atol=1e-12)


def test_evaluate_single_point_returns_scalar(rng):
    f = random_cp(SPECS, 2, rng)
    v = f.evaluate(np.zeros(3))
    assert isinstance(v, complex)
    with pytest.raises(ValueError, match="coordinates"):
        f.evaluate(np.zeros(4))


def test_add_and_scale_against_dense(rng):
    f = random_cp(SPECS, 2, rng)
    g = random_cp(SPECS, 3, rng)
    s = add(f, scale(g, 0.5 - 2.0j))
    assert s.rank == 5
    ref = oc.dense_cp(f) + (0.5 - 2.0j) * oc.dense_cp(g)
    assert np.allclose(oc.dense_cp(s), ref, atol=1e-13)


def test_add_rejects_mismatched_domains(rng):
    f = random_cp(SPECS, 2, rng)
    g = random_cp((BasisSpec(5, 1.5), BasisSpec(7, 2.0), BasisSpec(3, 0.9)), 2, rng)
    with pytest.raises(ValueError, match="different bases"):
        add(f, g)


def test_inner_product_and_norm_against_dense(rng):
    f = random_cp(SPECS, 2, rng)
    g = random_cp(SPECS, 4, rng)
    assert abs(inner_product(f, g) - _dense_inner(f, g)) < 1e-12
    assert abs(norm(f) - np.sqrt(_dense_inner(f, f).real)) < 1e-12


def test_inner_product_conjugates_first_argument(rng):
    f = random_cp(SPECS, 2, rng)
    g = random_cp(SPECS, 2, rng)
    assert abs(inner_product(f, g) - np.conj(inner_product(g, f))) < 1e-13
    assert abs(inner_product(scale(f, 1j), f) + 1j * inner_product(f, f)) < 1e-13


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_cauchy_schwarz(seed):
    r = np.random.default_rng(seed)
    f = random_cp(SPECS[:2], int(r.integers(1, 4)), r)
    g = random_cp(SPECS[:2], int(r.integers(1, 4)), r)
    lhs = abs(inner_product(f, g))
    assert lhs <= norm(f) * norm(g) * (1 + 1e-12), \
        f"|<f,g>| = {lhs} exceeds ||f|| ||g|| = {norm(f) * norm(g)}"


def test_random_cp_terms_are_normalized(rng):
    f = random_cp(SPECS, 4, rng)
    for fk in f.factors:
        assert np.allclose(np.linalg.norm(fk, axis=0), 1.0, atol=1e-13)


def test_pad_rank_keeps_value_and_grows_rank(rng):
    f = random_cp(SPECS, 2, rng)
    padded = pad_rank(f, 5, rng)
    assert padded.rank == 5
    # padding terms are 1e-8-relative noise
    assert norm(add(padded, scale(f, -1.0))) < 1e-6 * norm(f)
    with pytest.raises(ValueError, match="cannot pad"):
        pad_rank(f, 1, rng)
    assert pad_rank(f, 2, rng).factors[0] is not f.factors[0]


def test_als_recovers_exactly_representable_target(rng):
    # stall detection stops sweeps a little above machine precision
    target = random_cp(SPECS, 2, rng)
    fit = cp_approx_als(target, 2, ALSApproxConfig(max_sweeps=400, seed=3))
    err = norm(add(fit, scale(target, -1.0))) / norm(target)
    assert err < 1e-6, f"rank-2 self-fit stalled at relative error {err:.2e}"


def test_als_residual_trace_is_monotone(rng):
    target = random_cp(SPECS, 4, rng)
    trace: list = []
    cp_approx_als(target, 2, ALSApproxConfig(max_sweeps=60), trace=trace)
    assert len(trace) >= 2
    diffs = np.diff(trace)
    assert np.all(diffs <= 1e-10 * max(trace[0], 1.0)), \
        "sweep residuals must not increase"


def test_als_callable_target_matches_closed_form_projection():
    # fitting exp(-z1^2 - z2^2) by quadrature must land on the exact
    # per-dimension spectral projection of the Gaussian
    from tensorpde.models import AdvectionSpec, gaussian_cp, spiral_matrix
    prob = AdvectionSpec(spiral_matrix(2), b=6.0, Q=17)
    exact = gaussian_cp(prob)

    def fun(pts):
        return np.exp(-np.sum(pts**2, axis=1))

    # dense rule so the discrete projection matches the continuum one; the
    # stall check trips once sweep gains sink under the out-of-span residual
    fit = cp_approx_als(fun, 1, ALSApproxConfig(max_sweeps=200, quad_points=160),
                        specs=prob.specs)
    err = norm(add(fit, scale(exact, -1.0))) / norm(exact)
    assert err < 1e-6, f"quadrature fit disagrees with projection by {err:.2e}"


def test_als_rejects_bad_inputs(rng):
    target = random_cp(SPECS, 2, rng)
    with pytest.raises(ValueError, match="specs"):
        cp_approx_als(lambda p: np.ones(len(p)), 1)
    wrong = random_cp(SPECS, 3, rng)
    with pytest.raises(ValueError, match="init"):
        cp_approx_als(target, 2, init=wrong)


def test_rank_reduce_strips_noise_terms(rng):
    clean = random_cp(SPECS, 2, rng)
    noisy = pad_rank(clean, 4, rng, rel_scale=1e-9)
    red = rank_reduce_als(noisy, 2, eps=1e-7)
    assert red.rank <= 2
    err = norm(add(red, scale(noisy, -1.0))) / norm(noisy)
    assert err < 1e-7


def test_rank_reduce_error_improves_with_budget(rng):
    # best-so-far bookkeeping: a larger rank budget never fits worse,
    # because the adaptive loop revisits the same warm-started small ranks
    f = random_cp(SPECS, 5, rng)
    errs = {}
    for r_target in (1, 3):
        red = rank_reduce_als(f, r_target, eps=1e-12)
        assert red.rank <= r_target
        errs[r_target] = norm(add(red, scale(f, -1.0))) / norm(f)
    assert errs[3] <= errs[1] + 1e-12, f"rank budgets fit at {errs}"


def test_rank_reduce_validation(rng):
    f = random_cp(SPECS, 2, rng)
    with pytest.raises(ValueError, match="at least 1"):
        rank_reduce_als(f, 0, eps=1e-6)
    zero = scale(f, 0.0)
    out = rank_reduce_als(zero, 3, eps=1e-6)
    assert out.rank == 1 and norm(out) == 0.0
