"""Pure-Python implementations of the polynomial kernels.

These mirror the compiled versions in ``_kernels.pyx`` one-to-one and are used
whenever the extension module is not available (or when the environment
variable ``OPTOMECH_PURE_PYTHON`` is set).  All coefficient arrays are complex
and stored in ascending order of degree.
"""
import numpy as np


def poly_from_roots(roots, lead):
    """Expand ``lead * prod(x - r)`` into ascending coefficients."""
    roots = np.asarray(roots, dtype=complex)
    c = np.zeros(roots.size + 1, dtype=complex)
    c[0] = lead
    n = 1
    for r in roots:
        # multiply the current degree n-1 polynomial by (x - r)
        c[1:n + 1] = c[0:n] - r * c[1:n + 1]
        c[0] = -r * c[0]
        n += 1
    return c


def horner(coeffs, x):
    """Evaluate the polynomial with ascending ``coeffs`` at every point of ``x``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    x = np.asarray(x, dtype=complex)
    out = np.full(x.shape, coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        out = out * x + c
    return out


def taylor_shift(coeffs, p, order):
    """Return the first ``order + 1`` Taylor coefficients of the polynomial at ``p``.

    The k-th entry is the coefficient of ``h**k`` in ``poly(p + h)``.  The
    computation is repeated synthetic division by ``(x - p)``.
    """
    work = np.array(coeffs, dtype=complex)
    out = np.zeros(order + 1, dtype=complex)
    n = work.size
    for k in range(min(order + 1, n)):
        acc = 0j
        for j in range(n - 1, -1, -1):
            acc = acc * p + work[j]
            work[j] = acc
        out[k] = work[0]
        work = work[1:n]
        n -= 1
    return out


def simple_residues(num, lead, poles):
    """Residues ``num(p_i) / (lead * prod_{j != i} (p_i - p_j))`` at simple poles."""
    poles = np.asarray(poles, dtype=complex)
    vals = horner(num, poles)
    out = np.empty(poles.size, dtype=complex)
    for i in range(poles.size):
        diff = poles[i] - np.delete(poles, i)
        out[i] = vals[i] / (lead * np.prod(diff))
    return out


def product_eval(roots, lead, x):
    """Evaluate ``lead * prod(x - r)`` at every point of ``x``."""
    x = np.asarray(x, dtype=complex)
    out = np.full(x.shape, lead, dtype=complex)
    for r in np.asarray(roots, dtype=complex):
        out = out * (x - r)
    return out
