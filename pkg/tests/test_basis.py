"""Basis evaluation and the Galerkin kernel tables against quadrature.

Every closed-form table in the basis module is checked entry by entry
against a high-order Gauss-Legendre rule that knows nothing about the
closed forms.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as oc
from tensorpde.basis import (BasisSpec, FactorKind, cached_kernel_families,
                             clear_caches, eval_basis, factor_matrix,
                             integration_weights, pair_matrix)

KINDS = list(FactorKind)


@pytest.mark.parametrize("Q,b", [(3, 1.0), (7, 2.3), (15, 0.4), (31, 11.0)])
def test_eval_basis_matches_definition(Q, b):
    spec = BasisSpec(Q, b)
    z = np.linspace(-b, b, 9)
    vals = eval_basis(spec, z)
    assert vals.shape == (9, Q)
    for j in range(Q):
        ref = oc.phi(Q, b, z, j)
        assert np.allclose(vals[:, j], ref, atol=1e-14)


def test_eval_basis_scalar_shape():
    spec = BasisSpec(5, 2.0)
    out = eval_basis(spec, 0.3)
    assert out.shape == (5,)
    assert np.allclose(out, eval_basis(spec, [0.3])[0])


def test_eval_basis_rejects_points_outside_domain():
    spec = BasisSpec(5, 2.0)
    with pytest.raises(ValueError, match="outside"):
        eval_basis(spec, 2.0 + 1e-6)
    # boundary itself is fine
    eval_basis(spec, [-2.0, 2.0])


@pytest.mark.parametrize("Q", [0, -3, 4, 10])
def test_spec_rejects_bad_mode_count(Q):
    with pytest.raises(ValueError):
        BasisSpec(Q, 1.0)


def test_spec_rejects_bad_halfwidth():
    with pytest.raises(ValueError):
        BasisSpec(5, 0.0)


def test_modes_are_symmetric_integers():
    spec = BasisSpec(9, 3.0)
    assert list(spec.modes) == [-4, -3, -2, -1, 0, 1, 2, 3, 4]


def test_orthonormality_under_conjugated_pairing():
    spec = BasisSpec(9, 1.7)
    x = spec.b * oc._NODES
    w = spec.b * oc._WEIGHTS
    vals = eval_basis(spec, x)
    gram = (vals.conj() * w[:, None]).T @ vals
    assert np.allclose(gram, np.eye(9), atol=1e-13)


@given(st.floats(-1.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_constant_modulus(frac):
    # plane waves: |phi_s(z)| = 1/sqrt(2b) everywhere
    spec = BasisSpec(7, 3.1)
    vals = eval_basis(spec, frac * spec.b)
    assert np.allclose(np.abs(vals), 1.0 / np.sqrt(2 * spec.b), atol=1e-14)


@pytest.mark.parametrize("kind", KINDS, ids=[k.value for k in KINDS])
@pytest.mark.parametrize("Q,b", [(5, 1.0), (9, 2.6)])
def test_factor_matrix_matches_quadrature(kind, Q, b):
    spec = BasisSpec(Q, b)
    ref = oc.quad_factor_matrix(spec, kind)
    assert np.allclose(factor_matrix(spec, kind), ref, atol=1e-11), \
        f"factor table for {kind.value} deviates from quadrature"


def test_factor_matrix_composition_order():
    # coord-times-derivative must be z * (d/dz phi), not d/dz (z phi)
    spec = BasisSpec(7, 1.5)
    composed = factor_matrix(spec, FactorKind.COORD_MULTIPLY) @ \
        factor_matrix(spec, FactorKind.DERIVATIVE)
    assert np.allclose(factor_matrix(spec, FactorKind.COORD_TIMES_DERIVATIVE),
                       composed, atol=1e-13)


@pytest.mark.parametrize("e", KINDS, ids=[k.value for k in KINDS])
@pytest.mark.parametrize("z", KINDS, ids=[k.value for k in KINDS])
def test_pair_matrix_matches_quadrature(e, z):
    spec = BasisSpec(7, 2.3)
    ref = oc.quad_pair_matrix(spec, e, z)
    assert np.allclose(pair_matrix(spec, e, z), ref, atol=1e-11), \
        f"pair table ({e.value}, {z.value}) deviates from quadrature"


def test_identity_pair_is_the_flip_matrix():
    # no conjugation: Int phi_s phi_h = delta_{s+h,0}
    spec = BasisSpec(5, 1.0)
    tab = pair_matrix(spec, FactorKind.IDENTITY, FactorKind.IDENTITY)
    assert np.allclose(tab, np.eye(5)[::-1], atol=1e-14)


def test_pair_matrix_is_cached_and_frozen():
    spec = BasisSpec(5, 1.0)
    a = pair_matrix(spec, FactorKind.DERIVATIVE, FactorKind.COORD_MULTIPLY)
    b = pair_matrix(spec, FactorKind.DERIVATIVE, FactorKind.COORD_MULTIPLY)
    assert a is b
    with pytest.raises(ValueError):
        a[0, 0] = 0.0


def test_four_kernel_families_cover_everything():
    """All 16 pair tables and 4 factor tables build from 4 distinct integrals."""
    clear_caches()
    spec = BasisSpec(9, 1.3)
    for e in KINDS:
        factor_matrix(spec, e)
        for z in KINDS:
            pair_matrix(spec, e, z)
    integration_weights(spec, 0)
    integration_weights(spec, 1)
    integration_weights(spec, 2)
    assert cached_kernel_families() == {"H0", "H1", "H2", "D"}


@pytest.mark.parametrize("p", [0, 1, 2])
def test_integration_weights_match_quadrature(p):
    spec = BasisSpec(9, 2.6)
    assert np.allclose(integration_weights(spec, p),
                       oc.quad_weight_vector(spec, p), atol=1e-11)


def test_integration_weights_reject_high_powers():
    with pytest.raises(ValueError):
        integration_weights(BasisSpec(5, 1.0), 3)


def test_weights_integrate_an_expansion_exactly():
    # Int z^2 * (sum_s c_s phi_s) over [-b, b], against direct quadrature
    rng = np.random.default_rng(7)
    spec = BasisSpec(11, 1.8)
    c = rng.standard_normal(11) + 1j * rng.standard_normal(11)
    got = integration_weights(spec, 2) @ c
    x = spec.b * oc._NODES
    w = spec.b * oc._WEIGHTS
    ref = np.sum(w * x**2 * (eval_basis(spec, x) @ c))
    assert abs(got - ref) < 1e-12
