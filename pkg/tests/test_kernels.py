import numpy as np
import pytest

from optomech import _kernels_py as pure

compiled = pytest.importorskip("optomech._kernels")

RNG = np.random.default_rng(11)
ROOTS = RNG.standard_normal(9) + 1j * RNG.standard_normal(9)
COEFFS = RNG.standard_normal(8) + 1j * RNG.standard_normal(8)
X = np.linspace(-3, 3, 17) + 0.2j


def test_poly_from_roots():
    np.testing.assert_allclose(compiled.poly_from_roots(ROOTS, 1.5 - 0.5j),
                               pure.poly_from_roots(ROOTS, 1.5 - 0.5j), rtol=1e-14, atol=1e-13)


def test_poly_from_roots_matches_numpy():
    expected = np.poly(ROOTS)[::-1] * 2.0
    np.testing.assert_allclose(pure.poly_from_roots(ROOTS, 2.0), expected, atol=1e-12)


def test_horner():
    np.testing.assert_allclose(compiled.horner(COEFFS, X), pure.horner(COEFFS, X), rtol=1e-14)
    np.testing.assert_allclose(pure.horner(COEFFS, X),
                               np.polynomial.polynomial.polyval(X, COEFFS), rtol=1e-13)


def test_taylor_shift():
    p = 0.4 - 1.1j
    a = compiled.taylor_shift(COEFFS, p, 5)
    b = pure.taylor_shift(COEFFS, p, 5)
    np.testing.assert_allclose(a, b, rtol=1e-13)
    # the zeroth coefficient is the value, the first the derivative
    assert b[0] == pytest.approx(pure.horner(COEFFS, np.array([p]))[0])
    d = np.polynomial.polynomial.polyder(COEFFS)
    assert b[1] == pytest.approx(np.polynomial.polynomial.polyval(p, d))


def test_simple_residues():
    poles = ROOTS[:4]
    a = compiled.simple_residues(COEFFS[:3], 2.0 + 0j, poles)
    b = pure.simple_residues(COEFFS[:3], 2.0 + 0j, poles)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_product_eval():
    np.testing.assert_allclose(compiled.product_eval(ROOTS, 0.7 + 0j, X),
                               pure.product_eval(ROOTS, 0.7 + 0j, X), rtol=1e-13)


def test_read_only_input():
    r = ROOTS.copy()
    r.setflags(write=False)
    compiled.poly_from_roots(r, 1.0 + 0j)
