import numpy as np
import pytest

from weylgap.algebra import (
    CurvTensor,
    SymForm,
    VectorValuedForm,
    cartan_check,
    cartan_lorentzian_form,
    curvature_of_form,
    decompose,
    is_flat,
    kn_product,
    kn_product_valued,
    nullity_space,
    weyl_map,
)


def random_sym(rng, n):
    a = rng.normal(size=(n, n))
    return SymForm(0.5 * (a + a.T))


def test_kn_product_symmetries():
    rng = np.random.default_rng(0)
    a, b = random_sym(rng, 5), random_sym(rng, 5)
    t = kn_product(a, b).entries
    assert np.allclose(t, -t.transpose(1, 0, 2, 3))
    assert np.allclose(t, -t.transpose(0, 1, 3, 2))
    # pair symmetry holds for equal factors
    s = kn_product(a, a).entries
    assert np.allclose(s, s.transpose(2, 3, 0, 1))


def test_kn_identity_sectional():
    # (g KN g)/2 has all unit sectional curvatures
    g = SymForm.identity(4)
    t = 0.5 * kn_product(g, g)
    assert t.entries[0, 1, 0, 1] == pytest.approx(1.0)
    assert t.entries[0, 1, 1, 0] == pytest.approx(-1.0)
    assert t.entries[0, 1, 2, 3] == pytest.approx(0.0)


def test_vector_valued_reduces_to_scalar():
    rng = np.random.default_rng(1)
    a = random_sym(rng, 4)
    t1 = kn_product(a, a)
    t2 = kn_product_valued(VectorValuedForm.from_sym(a),
                           VectorValuedForm.from_sym(a))
    assert np.allclose(t1.entries, t2.entries)


def test_flatness_and_nullity():
    # beta(x, y) = <x, e1><y, e1> v is flat and has nullity span(e2..en)
    n = 4
    e = np.zeros((n, n, 1))
    e[0, 0, 0] = 1.0
    beta = VectorValuedForm(e, (1,))
    assert is_flat(beta)
    basis = nullity_space(beta)
    assert basis.shape == (n, n - 1)
    assert np.allclose(basis[0], 0.0)

    rng = np.random.default_rng(2)
    generic = VectorValuedForm.from_sym(random_sym(rng, n))
    assert not is_flat(generic)
    assert nullity_space(generic).shape[1] == 0


def test_weyl_anchor_values():
    w1 = weyl_map(SymForm.diagonal([1, 1, -1, -1])).norm_sq()
    assert w1 == pytest.approx(64.0 / 3.0, rel=1e-12)
    w2 = weyl_map(SymForm.diagonal([2, -1, -1, 0])).norm_sq()
    assert w2 == pytest.approx(12.0, rel=1e-12)


def test_weyl_matches_decomposition():
    rng = np.random.default_rng(3)
    for n in (4, 5, 6):
        beta = random_sym(rng, n)
        direct = weyl_map(beta)
        via_dec = decompose(curvature_of_form(beta)).weyl
        assert np.allclose(direct.entries, via_dec.entries, atol=1e-10)


def test_decompose_orthogonal_and_reassembles():
    rng = np.random.default_rng(4)
    for n in (4, 5):
        tensor = curvature_of_form(random_sym(rng, n), ambient_c=rng.normal())
        dec = decompose(tensor)
        parts = (dec.weyl, dec.scalar_part, dec.traceless_ricci_part)
        scale = tensor.norm_sq()
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(parts[i].inner(parts[j])) <= 1e-10 * scale
        total = parts[0] + parts[1] + parts[2]
        assert total.norm_sq() - 2 * total.inner(tensor) + tensor.norm_sq() \
            <= 1e-12 * scale


def test_constant_curvature_has_no_weyl():
    g = SymForm.identity(5)
    dec = decompose(0.5 * kn_product(g, g))
    assert dec.weyl.norm_sq() == pytest.approx(0.0, abs=1e-20)
    assert dec.scal == pytest.approx(5 * 4)


def test_cartan_check_both_directions():
    rng = np.random.default_rng(5)
    for n in (4, 5, 6):
        lam = np.full(n, rng.normal())
        lam[-1] = lam[0] + 3.0
        v = cartan_check(SymForm.diagonal(lam))
        assert v.degenerate and v.multiplicity >= n - 1
        assert v.residual_weyl_norm <= 1e-9 * (1 + np.sum(lam ** 2))

        generic = np.sort(rng.normal(size=n))
        while np.min(np.diff(generic)) < 0.3:
            generic = np.sort(rng.normal(0, 2, size=n))
        v2 = cartan_check(SymForm.diagonal(generic))
        assert not v2.degenerate
        assert v2.residual_weyl_norm > 1e-3


def test_cartan_lorentzian_flat_iff_umbilic():
    rng = np.random.default_rng(6)
    lam = np.full(5, 1.7)
    lam[0] = -2.2  # multiplicity n-1
    assert is_flat(cartan_lorentzian_form(SymForm.diagonal(lam)))
    assert not is_flat(cartan_lorentzian_form(random_sym(rng, 5)))


def test_curvtensor_rejects_bad_symmetry():
    with pytest.raises(ValueError):
        CurvTensor(np.ones((4, 4, 4, 4)))


def test_json_round_trip():
    rng = np.random.default_rng(7)
    f = random_sym(rng, 4)
    assert np.allclose(SymForm.from_json(f.to_json()).entries, f.entries)
    t = curvature_of_form(f)
    assert np.allclose(CurvTensor.from_json(t.to_json()).entries, t.entries)


def test_spectrum_descending():
    s = SymForm.diagonal([3.0, -1.0, 2.0, 0.5]).spectrum()
    assert np.all(np.diff(s.values) <= 0)
    assert s.values[0] == pytest.approx(3.0)
