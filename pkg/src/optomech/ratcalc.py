"""Exact calculus on rational functions of a frequency variable.

Every transfer function and spectrum in the package is a
:class:`RationalFunction` with complex coefficients.  The operations needed by
Wiener filtering are provided here: arithmetic with common-denominator
bookkeeping, root finding, spectral factorization, causal projection and
half-line integration by residues.

Conventions
-----------
Signals are transformed as ``f(t) = int dW/2pi exp(-i W t) f(W)``, so a
function analytic in the upper half ``W`` plane is causal.  Poles in the lower
half-plane therefore belong to the causal part.

Polynomials keep a cache of their roots.  Polynomials built from roots
(``Polynomial.from_roots``) treat the roots as the primary data; products of
such polynomials concatenate their roots, so denominators assembled from
known factors never need to be re-rooted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._backend import kernels
from .errors import (
    DivergentIntegralError,
    DomainError,
    MarginalPoleError,
    MarginalSpectrumError,
    NotASpectrumError,
)

MAX_DEGREE = 32
ROOT_MATCH_TOL = 1e-12
CANCEL_TOL = 1e-10
CLUSTER_TOL = 1e-7
AXIS_TOL = 1e-13
TRIM_TOL = 1e-13


def _as_complex_array(values):
    return np.atleast_1d(np.asarray(values, dtype=complex))


class Polynomial:
    """Polynomial with complex coefficients in ascending order of degree.

    Parameters
    ----------
    coeffs : array_like
        Coefficients ``c[k]`` of ``x**k``.  Trailing exact zeros are removed.
    roots : array_like, optional
        Known roots.  If given, they are treated as exact and the polynomial is
        evaluated in product form.
    """

    __slots__ = ("_c", "_roots", "_root_primary")

    def __init__(self, coeffs, roots=None):
        c = _as_complex_array(coeffs).copy()
        n = c.size
        while n > 1 and c[n - 1] == 0:
            n -= 1
        c = c[:n] if n > 0 else np.zeros(1, dtype=complex)
        if c.size - 1 > MAX_DEGREE:
            raise DomainError(f"polynomial degree {c.size - 1} exceeds {MAX_DEGREE}")
        c.setflags(write=False)
        self._c = c
        self._root_primary = roots is not None
        if roots is not None:
            r = _as_complex_array(roots) if len(roots) else np.zeros(0, dtype=complex)
            if r.size != c.size - 1:
                raise DomainError("root list does not match the polynomial degree")
            r.setflags(write=False)
            self._roots = r
        elif c.size == 1 and c[0] != 0:
            self._roots = np.zeros(0, dtype=complex)
        else:
            self._roots = None

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        """Build ``lead * prod(x - r)`` keeping the roots exactly."""
        r = np.asarray(roots, dtype=complex).ravel()
        if lead == 0:
            return cls([0.0])
        if r.size > MAX_DEGREE:
            raise DomainError(f"polynomial degree {r.size} exceeds {MAX_DEGREE}")
        coeffs = kernels.poly_from_roots(r, complex(lead))
        return cls(coeffs, roots=r)

    @classmethod
    def monomial(cls):
        """The identity polynomial ``x``."""
        return cls.from_roots([0.0])

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        return self._c.size - 1

    @property
    def lead(self):
        return complex(self._c[-1])

    @property
    def is_zero(self):
        return self._c.size == 1 and self._c[0] == 0

    @property
    def has_roots(self):
        return self._roots is not None

    def __repr__(self):
        return f"Polynomial({np.array2string(self._c, precision=6)})"

    def __call__(self, x):
        if self._root_primary and self.degree >= 1:
            return kernels.product_eval(self._roots, self.lead, x)
        return kernels.horner(self._c, x)

    def coefficient_scale(self, x):
        """Return ``sum |c_k| |x|**k``, the natural size of the terms at ``x``."""
        return kernels.horner(np.abs(self._c), np.abs(np.asarray(x, dtype=complex))).real

    def roots(self):
        """Return all roots with multiplicity (see :func:`roots`)."""
        if self._roots is None:
            self._roots = _compute_roots(self._c)
            self._roots.setflags(write=False)
        return self._roots.copy()

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other
        return Polynomial([other])

    def __add__(self, other):
        if not isinstance(other, (Polynomial, int, float, complex, np.number)):
            return NotImplemented
        o = self._coerce(other)
        n = max(self._c.size, o._c.size)
        c = np.zeros(n, dtype=complex)
        c[: self._c.size] += self._c
        c[: o._c.size] += o._c
        return Polynomial(c)

    __radd__ = __add__

    def __neg__(self):
        if self._root_primary:
            return Polynomial.from_roots(self._roots, -self.lead)
        return Polynomial(-self._c)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if self.is_zero or other.is_zero:
                return Polynomial([0.0])
            if self._roots is not None and other._roots is not None:
                return Polynomial.from_roots(
                    np.concatenate([self._roots, other._roots]), self.lead * other.lead
                )
            return Polynomial(np.convolve(self._c, other._c))
        if isinstance(other, (int, float, complex, np.number)):
            if other == 0:
                return Polynomial([0.0])
            if self._roots is not None:
                return Polynomial.from_roots(self._roots, self.lead * other)
            return Polynomial(self._c * other)
        return NotImplemented

    __rmul__ = __mul__

    def conj(self):
        """Polynomial whose value at real ``x`` is the conjugate of ``self(x)``."""
        if self._roots is not None:
            return Polynomial.from_roots(np.conj(self._roots), np.conj(self.lead))
        return Polynomial(np.conj(self._c))

    def reflect(self):
        """Polynomial ``x -> self(-x)``."""
        signs = (-1.0) ** np.arange(self._c.size)
        if self._roots is not None:
            return Polynomial(self._c * signs, roots=-self._roots)
        return Polynomial(self._c * signs)

    def deflate(self, r):
        """Divide by ``(x - r)``, discarding the remainder."""
        if self.degree < 1:
            raise DomainError("cannot deflate a constant polynomial")
        if self._roots is not None:
            idx = int(np.argmin(np.abs(self._roots - r)))
            rest = np.delete(self._roots, idx)
            if self._root_primary:
                return Polynomial.from_roots(rest, self.lead)
        else:
            rest = None
        q = np.zeros(self.degree, dtype=complex)
        acc = 0j
        for j in range(self.degree, 0, -1):
            acc = acc * r + self._c[j]
            q[j - 1] = acc
        out = Polynomial(q)
        if rest is not None and rest.size == out.degree:
            out._roots = rest
            rest.setflags(write=False)
        return out

    def derivative(self):
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(self._c[1:] * np.arange(1, self._c.size))

    def trim(self, scale, tol=TRIM_TOL):
        """Drop leading coefficients negligible at frequency scale ``scale``.

        A leading term ``c_n x**n`` is dropped when ``|c_n| scale**n`` is below
        ``tol`` times the largest term ``|c_k| scale**k``.  This removes the
        rounding residue left when leading terms cancel in a sum.
        """
        c = self._c
        mags = np.abs(c) * float(scale) ** np.arange(c.size)
        top = mags.max() if c.size else 0.0
        n = c.size
        while n > 1 and mags[n - 1] <= tol * top:
            n -= 1
        if n == c.size:
            return self
        return Polynomial(c[:n])


def _compute_roots(c):
    """Companion-matrix roots with Newton polish and cluster merging."""
    n = c.size - 1
    if n < 1:
        if c[0] == 0:
            raise DomainError("the zero polynomial has no well-defined roots")
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[0] / c[1]], dtype=complex)
    comp = np.zeros((n, n), dtype=complex)
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    r = np.linalg.eigvals(comp)

    scale = max(1.0, float(np.max(np.abs(r))))
    # merge numerically split multiple roots
    order = np.argsort(r.real)
    r = r[order]
    labels = np.arange(n)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(r[i] - r[j]) <= CLUSTER_TOL * scale:
                labels[labels == labels[j]] = labels[i]
    out = r.copy()
    dp = np.arange(1, n + 1) * c[1:]
    for lab in np.unique(labels):
        members = labels == lab
        if members.sum() > 1:
            out[members] = r[members].mean()
            continue
        x = r[members][0]
        fx = kernels.horner(c, np.array([x]))[0]
        dfx = kernels.horner(dp, np.array([x]))[0]
        if dfx != 0:
            xn = x - fx / dfx
            if abs(kernels.horner(c, np.array([xn]))[0]) < abs(fx):
                x = xn
        out[members] = x
    return out


def roots(p):
    """All complex roots of ``p`` with multiplicity.

    Parameters
    ----------
    p : Polynomial
        Polynomial of degree at least one.

    Returns
    -------
    numpy.ndarray
        Complex roots.  Roots that agree to within ``1e-7`` of the root scale are
        merged into an exact multiple root.

    Raises
    ------
    DomainError
        If ``p`` is the zero polynomial.
    """
    if p.is_zero:
        raise DomainError("the zero polynomial has no well-defined roots")
    return p.roots()


def _on_axis(z):
    z = np.asarray(z, dtype=complex)
    return np.abs(z.imag) <= AXIS_TOL * np.maximum(1.0, np.abs(z))


def _match_roots(ra, rb, tol=ROOT_MATCH_TOL):
    """Greedy multiset matching of ``rb`` into ``ra``.

    Returns index arrays of the unmatched elements of ``ra`` and ``rb``.
    """
    used = np.zeros(ra.size, dtype=bool)
    unmatched_b = []
    for j, z in enumerate(rb):
        if ra.size:
            d = np.abs(ra - z)
            d[used] = np.inf
            i = int(np.argmin(d))
            if d[i] <= tol * max(1.0, abs(z)):
                used[i] = True
                continue
        unmatched_b.append(j)
    return np.flatnonzero(~used), np.array(unmatched_b, dtype=int)


def _group_poles(r):
    """Group a root multiset into ``(pole, multiplicity)`` pairs."""
    groups = []
    for z in r:
        for g in groups:
            if abs(g[0] - z) <= ROOT_MATCH_TOL * max(1.0, abs(z)):
                g[1] += 1
                break
        else:
            groups.append([complex(z), 1])
    return [(g[0], g[1]) for g in groups]


def _structural_cancel(num, den):
    """Cancel exactly matching roots of a root-primary numerator and a denominator.

    No polynomial is evaluated, so nearly coincident but distinct roots (for
    example a weakly damped pole and its mirror image) are never confused.
    """
    if not num._root_primary or num.degree < 1 or den.degree < 1:
        return num, den
    rn, rd = num._roots, den.roots()
    rest_d, rest_n = _match_roots(rd, rn)
    if rest_n.size == rn.size:
        return num, den
    return (Polynomial.from_roots(rn[rest_n], num.lead),
            Polynomial.from_roots(rd[rest_d], den.lead))


def _den_product(a, b):
    """Product of denominators that always keeps the roots exact."""
    if a.degree == 0 or b.degree == 0:
        return a * b
    return Polynomial.from_roots(np.concatenate([a.roots(), b.roots()]), a.lead * b.lead)


class RationalFunction:
    """Ratio ``num(x) / den(x)`` of complex polynomials.

    Parameters
    ----------
    num, den : Polynomial or scalar
        Numerator and denominator.  ``den`` defaults to 1.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = num if isinstance(num, Polynomial) else Polynomial([num])
        den = Polynomial([1.0]) if den is None else den
        den = den if isinstance(den, Polynomial) else Polynomial([den])
        if den.is_zero:
            raise DomainError("denominator is identically zero")
        if num.is_zero:
            den = Polynomial([1.0])
        self.num = num
        self.den = den

    @classmethod
    def constant(cls, value):
        return cls(Polynomial([value]))

    @classmethod
    def omega(cls):
        """The identity function ``x``."""
        return cls(Polynomial.monomial())

    def __repr__(self):
        return f"RationalFunction(num={self.num!r}, den={self.den!r})"

    def __call__(self, x):
        return self.num(x) / self.den(x)

    @property
    def is_zero(self):
        return self.num.is_zero

    def poles(self):
        return self.den.roots()

    def zeros(self):
        return self.num.roots()

    def relative_degree(self):
        """``deg(den) - deg(num)``; large for the zero function."""
        if self.is_zero:
            return 10**6
        return self.den.degree - self.num.degree

    def limit_at_infinity(self):
        """Value at infinity (requires a proper function)."""
        rd = self.relative_degree()
        if rd < 0:
            raise DomainError("improper rational function")
        return self.num.lead / self.den.lead if rd == 0 else 0j

    def frequency_scale(self):
        """Characteristic frequency of the function: max(1, largest |pole|)."""
        p = self.den.roots()
        return max(1.0, float(np.max(np.abs(p)))) if p.size else 1.0

    # arithmetic -----------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Polynomial):
            return RationalFunction(other)
        if isinstance(other, (int, float, complex, np.number)):
            return RationalFunction(Polynomial([other]))
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_zero:
            return o
        if o.is_zero:
            return self
        if self.den is o.den or (
            self.den.degree == o.den.degree and np.array_equal(self.den.coeffs, o.den.coeffs)
        ):
            return RationalFunction(self.num + o.num, self.den)
        ra, rb = self.den.roots(), o.den.roots()
        extra_a, extra_b = _match_roots(ra, rb)
        den = Polynomial.from_roots(np.concatenate([ra, rb[extra_b]]), 1.0)
        num = self.num * Polynomial.from_roots(rb[extra_b], 1.0 / self.den.lead)
        num = num + o.num * Polynomial.from_roots(ra[extra_a], 1.0 / o.den.lead)
        return RationalFunction(num, den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return RationalFunction(self.num * other, self.den)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_zero or o.is_zero:
            return RationalFunction(0.0)
        na, da = _structural_cancel(self.num, o.den)
        nb, db = _structural_cancel(o.num, self.den)
        return RationalFunction(na * nb, _den_product(db, da))

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            return NotImplemented
        if n < 0:
            return self.reciprocal() ** (-n)
        out = RationalFunction(1.0)
        for _ in range(n):
            out = out * self
        return out

    def reciprocal(self):
        if self.is_zero:
            raise DomainError("reciprocal of the zero function")
        return RationalFunction(self.den, self.num)

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return RationalFunction(self.num * (1.0 / other), self.den)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def conj(self):
        """``x -> conj(self(conj(x)))``; equals ``conj(self(x))`` on the real axis."""
        return RationalFunction(self.num.conj(), self.den.conj())

    def reflect(self):
        """``x -> self(-x)``."""
        return RationalFunction(self.num.reflect(), self.den.reflect())

    def abs2(self):
        """``|self|**2`` on the real axis, as a rational function."""
        return self * self.conj()

    def cancel(self, tol=CANCEL_TOL, candidates=None):
        """Remove common numerator/denominator factors and trim the numerator.

        Each denominator root ``r`` is removed together with a numerator factor
        whenever ``|num(r)|`` is below ``tol`` times the numerator's term
        scale at ``r``.  The test is only reliable when the numerator is not a
        sum of terms of wildly different size; ``candidates`` restricts it to
        roots that are known to cancel analytically.
        """
        if self.is_zero:
            return RationalFunction(0.0)
        num = self.num
        keep = []
        cand = None if candidates is None else np.asarray(candidates, dtype=complex)
        for r in self.den.roots():
            if cand is not None and not np.any(
                np.abs(cand - r) <= ROOT_MATCH_TOL * max(1.0, abs(r))
            ):
                keep.append(r)
                continue
            if num.degree >= 1:
                val = abs(num(np.array([r]))[0])
                if val <= tol * num.coefficient_scale(np.array([r]))[0]:
                    num = num.deflate(r)
                    continue
            keep.append(r)
        den = Polynomial.from_roots(np.array(keep, dtype=complex), self.den.lead)
        scale = max([1.0] + [abs(k) for k in keep])
        num = num.trim(scale)
        return RationalFunction(num, den)


def _principal_parts(rf, groups):
    """Laurent principal-part coefficients at each ``(pole, multiplicity)``.

    Returns a list of ``(pole, coeffs)`` where ``coeffs[k-1]`` multiplies
    ``(x - pole)**(-k)``.
    """
    allr = rf.den.roots()
    lead = rf.den.lead
    out = []
    simple = [g for g in groups if g[1] == 1]
    if simple and len(simple) == len(groups):
        res = kernels.simple_residues(rf.num.coeffs, lead, np.array([g[0] for g in groups]))
        return [(g[0], np.array([c])) for g, c in zip(groups, res)]
    for p, m in groups:
        close = np.abs(allr - p) <= ROOT_MATCH_TOL * max(1.0, abs(p))
        others = allr[~close]
        series = kernels.taylor_shift(rf.num.coeffs, p, m - 1) / lead
        for q in others:
            d = p - q
            geo = (-1.0 / d) ** np.arange(m) / d
            series = np.convolve(series, geo)[:m]
        coeffs = np.array([series[m - k] for k in range(1, m + 1)])
        out.append((p, coeffs))
    return out


class PointwiseAnalytic:
    """A rational function paired with a more accurate pointwise evaluator.

    :func:`partial_fractions_at` uses ``func(z)`` for the value at a simple
    pole of the other factors, where ``rf`` is analytic; in every other case it
    falls back to the expanded ``rf``.
    """

    def __init__(self, func, rf):
        self.func = func
        self.rf = rf

    @property
    def is_zero(self):
        return self.rf.is_zero


def _laurent(rf, z, order):
    """Laurent data of ``rf`` about ``z``.

    Returns ``(k, series)`` with ``rf(z + t) = t**(-k) * sum(series[i] t**i)``
    for ``i < order``, where ``k`` is the pole order of ``rf`` at ``z``.
    """
    if isinstance(rf, PointwiseAnalytic):
        if order == 1:
            k, _ = _laurent(rf.rf, z, 1)
            if k == 0:
                return 0, np.array([complex(rf.func(z))])
        return _laurent(rf.rf, z, order)
    num = rf.num
    if num._root_primary and num.degree >= 1:
        nser = np.zeros(order, dtype=complex)
        nser[0] = num.lead
        for r in num._roots:
            nser = np.convolve(nser, [z - r, 1.0])[:order]
    else:
        nser = kernels.taylor_shift(num.coeffs, z, order - 1)
        if nser.size < order:
            nser = np.concatenate([nser, np.zeros(order - nser.size, dtype=complex)])
    dr = rf.den.roots() if rf.den.degree >= 1 else np.zeros(0, dtype=complex)
    close = np.abs(dr - z) <= ROOT_MATCH_TOL * max(1.0, abs(z))
    series = nser / rf.den.lead
    for q in dr[~close]:
        d = z - q
        series = np.convolve(series, (-1.0 / d) ** np.arange(order) / d)[:order]
    return int(close.sum()), series


def partial_fractions_at(products, poles, const=0.0):
    """Rational function assembled from principal parts at known poles.

    Parameters
    ----------
    products : list of tuple
        Each entry is ``(weight, factors)``; the function being represented is
        ``sum(weight * prod(factors))`` over entries.
    poles : array_like
        All poles of the represented function, with multiplicity.  Poles of
        individual products elsewhere must cancel in the sum and are ignored.
    const : complex
        Value at infinity.

    Notes
    -----
    Principal parts are computed per product from Laurent series about each
    pole, so nothing is evaluated near the ignored (cancelling) poles.  This
    keeps full accuracy when those poles sit very close to the real axis.
    """
    groups = _group_poles(np.asarray(poles, dtype=complex))
    if not groups:
        return RationalFunction(const)
    parts = []
    for z, m in groups:
        acc = np.zeros(m, dtype=complex)
        for weight, factors in products:
            data = [_laurent(f, z, m) for f in factors if not f.is_zero]
            if len(data) < len(factors):
                continue
            k = sum(d[0] for d in data)
            if k == 0:
                continue
            if k > m:
                # a single product may have a higher-order pole than the
                # cancelled total; its series must reach t**(k - 1)
                data = [_laurent(f, z, k) for f in factors]
            series = np.array([weight], dtype=complex)
            for _, ser in data:
                series = np.convolve(series, ser)[:k]
            # coefficient of t**(-j) is series[k - j]
            for j in range(1, min(k, m) + 1):
                acc[j - 1] += series[k - j]
        parts.append((z, acc))
    return assemble_partial_fractions(parts, const)


def assemble_partial_fractions(parts, const=0.0):
    """Rational function ``const + sum_j sum_k a_jk / (x - z_j)**k``.

    Parameters
    ----------
    parts : list of tuple
        ``(z_j, coeffs)`` with ``coeffs[k-1] = a_jk``; the ``z_j`` must be
        distinct.
    """
    parts = [(complex(z), np.asarray(a, dtype=complex)) for z, a in parts]
    if not parts:
        return RationalFunction(const)
    allp = np.concatenate([np.full(a.size, z) for z, a in parts])
    den = Polynomial.from_roots(allp, 1.0)
    num = Polynomial([const]) * den if const != 0 else Polynomial([0.0])
    for i, (z, acc) in enumerate(parts):
        m = acc.size
        rest = np.concatenate([np.full(a.size, zz) for j, (zz, a) in enumerate(parts) if j != i]
                              + [np.zeros(0, dtype=complex)])
        for k in range(1, m + 1):
            if acc[k - 1] == 0:
                continue
            num = num + Polynomial.from_roots(np.concatenate([rest, np.full(m - k, z)]),
                                              acc[k - 1])
    return RationalFunction(num, den)


def principal_parts_by_contour(func, poles, avoid=(), n=96):
    """Principal parts of a pointwise-evaluated function at known poles.

    Each coefficient ``a_k`` of ``(x - z)**(-k)`` is the contour integral
    ``(1/2 pi i) \oint f(x) (x - z)**(k-1) dx`` over a circle around ``z``,
    evaluated by the trapezoidal rule (exponentially convergent for analytic
    integrands).  The radius is a third of the distance to the nearest other
    pole or ``avoid`` point, so no singularity or cancelling near-singularity
    of the evaluation lies close to the contour.

    Parameters
    ----------
    func : callable
        ``func(x)`` returning a complex array (one value per output).
    poles : array_like
        Poles with multiplicity; coincident entries form one higher-order pole.
    avoid : array_like
        Extra points the contour must keep away from.
    n : int
        Number of trapezoid nodes per circle.

    Returns
    -------
    list of tuple
        ``(z, coeffs)`` with ``coeffs`` of shape ``(m, nout)``.
    """
    groups = _group_poles(np.asarray(poles, dtype=complex))
    avoid = np.asarray(avoid, dtype=complex)
    out = []
    theta = 2.0 * np.pi * np.arange(n) / n
    unit = np.exp(1j * theta)
    for z, m in groups:
        others = [g[0] for g in groups if g[0] != z] + list(avoid)
        dist = min([abs(z - o) for o in others] + [max(1.0, abs(z))])
        rho = dist / 3.0
        vals = np.array([np.atleast_1d(func(z + rho * u)) for u in unit])
        coeffs = []
        for k in range(1, m + 1):
            # dx = i rho u dtheta; (x - z)**(k-1) = (rho u)**(k-1)
            w = (rho * unit) ** k / n
            coeffs.append(np.tensordot(w, vals, axes=(0, 0)))
        out.append((z, np.array(coeffs)))
    return out


def principal_parts(rf):
    """Partial-fraction principal parts of ``rf`` at all of its poles."""
    return _principal_parts(rf, _group_poles(rf.den.roots()))


def causal_part(r):
    """Causal projection ``[r]_+`` of a proper rational function.

    The result is the constant term at infinity plus the principal parts at
    all lower-half-plane poles; it is analytic in the closed upper half-plane.

    Raises
    ------
    DomainError
        If ``r`` is improper.
    MarginalPoleError
        If ``r`` has a pole on the real axis.
    """
    if r.is_zero:
        return RationalFunction(0.0)
    if r.relative_degree() < 0:
        raise DomainError("causal_part requires a proper rational function")
    poles = r.den.roots()
    if np.any(_on_axis(poles)):
        raise MarginalPoleError("pole on the real axis")
    const = r.limit_at_infinity()
    groups = [g for g in _group_poles(poles) if g[0].imag < 0]
    if not groups:
        return RationalFunction(Polynomial([const]))
    parts = _principal_parts(r, _group_poles(poles))
    parts = [pp for pp in parts if pp[0].imag < 0]
    den_roots = np.concatenate([np.full(m, p) for p, m in groups])
    num = Polynomial.from_roots(den_roots, const) if const != 0 else Polynomial([0.0])
    for (p, m), (_, coeffs) in zip(groups, parts):
        for k, ck in enumerate(coeffs, start=1):
            if ck == 0:
                continue
            idx = np.flatnonzero(den_roots == p)[:k]
            rest = np.delete(den_roots, idx)
            num = num + Polynomial.from_roots(rest, ck)
    return RationalFunction(num, Polynomial.from_roots(den_roots, 1.0))


def anticausal_part(r):
    """``r - causal_part(r)``: the part with only upper-half-plane poles."""
    return (r - causal_part(r)).cancel()


def _is_hermitian(s, scale):
    w = scale * np.array([0.137, 0.71, 1.9, 5.3])
    a = s(-w)
    b = np.conj(s(w))
    return np.all(np.abs(a - b) <= 1e-9 * np.maximum(np.abs(a) + np.abs(b), 1e-300))


def integrate_halfline(s, method="residue"):
    """Return ``Re int_0^inf dW/2pi s(W)``.

    Parameters
    ----------
    s : RationalFunction
        Integrand decaying at least as ``W**-2``.
    method : {"residue", "quad"}
        ``"residue"`` evaluates the integral in closed form.  For Hermitian
        integrands (``s(-W) = conj(s(W))``) the real part is even and the
        result is half the full-line integral, i.e. ``i`` times the sum of
        upper-half-plane residues.  Otherwise the keyhole formula
        ``int_0^inf f = -sum Res[f(z) log(-z)]`` over all poles is used.
        ``"quad"`` uses adaptive quadrature as an independent check.

    Raises
    ------
    DivergentIntegralError
        If ``s`` decays slower than ``W**-2``.
    MarginalPoleError
        If ``s`` has a real-axis pole.
    """
    if s.is_zero:
        return 0.0
    scale = s.frequency_scale()
    num = s.num.trim(scale)
    if num.is_zero:
        return 0.0
    s = RationalFunction(num, s.den)
    if s.relative_degree() < 2:
        raise DivergentIntegralError("integrand decays slower than W**-2")
    poles = s.den.roots()
    if np.any(_on_axis(poles)):
        raise MarginalPoleError("pole on the real axis")
    if method == "quad":
        return _integrate_quad(s, poles)
    if method != "residue":
        raise ValueError(f"unknown method {method!r}")
    groups = _group_poles(poles)
    parts = _principal_parts(s, groups)
    if _is_hermitian(s, scale):
        total = sum(c[0] for p, c in parts if p.imag > 0)
        return float(0.5 * (1j * total).real)
    total = 0j
    for p, coeffs in parts:
        total += coeffs[0] * np.log(-p)
        for k in range(2, coeffs.size + 1):
            total += coeffs[k - 1] * (-1.0) ** k / ((k - 1) * p ** (k - 1))
    return float((-total).real / (2.0 * np.pi))


def _integrate_quad(s, poles):
    """Adaptive quadrature with breakpoints at resonances."""
    width = np.maximum(np.abs(poles.imag), 1e-300)
    centers = poles.real
    pts = {0.0}
    for c, wdt in zip(centers, width):
        if c > 0:
            for k in (-20.0, -3.0, -1.0, 0.0, 1.0, 3.0, 20.0):
                x = c + k * wdt
                if x > 0:
                    pts.add(float(x))
    top = 10.0 * max(1.0, float(np.max(np.abs(poles))))
    pts = {x for x in pts if x < top}
    pts.add(top)
    grid = np.array(sorted(pts))

    def f(w):
        return float(np.real(s(np.array([w]))[0]))

    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        total += integrate.quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-12)[0]
    total += integrate.quad(f, top, np.inf, limit=400, epsabs=0.0, epsrel=1e-12)[0]
    return total / (2.0 * np.pi)


@dataclass(frozen=True)
class SpectralFactors:
    """Factors with ``psi_plus * psi_minus = s`` on the real axis.

    ``psi_plus`` and its reciprocal are analytic in the upper half-plane.
    ``zeros_lower`` lists every lower-half-plane zero of the spectrum, including
    any that cancel against a pole inside ``psi_plus``.
    """

    psi_plus: RationalFunction
    psi_minus: RationalFunction
    zeros_lower: np.ndarray = None


def _polish_zeros(zr, pr, lead, evaluator, iters=8):
    """Refine zeros of a rational function against an accurate evaluator.

    Uses simultaneous Weierstrass corrections, where the derivative at each
    zero comes from the factored form built from the current estimates.  A
    correction is kept only while it lowers the evaluated magnitude.
    """
    z = np.array(zr, dtype=complex)
    for _ in range(iters):
        moved = False
        for j in range(z.size):
            others = np.delete(z, j)
            dfac = lead * np.prod(z[j] - others) / np.prod(z[j] - pr)
            if dfac == 0 or not np.isfinite(dfac):
                continue
            f0 = evaluator(z[j])
            if f0 == 0:
                continue
            cand = z[j] - f0 / dfac
            if abs(evaluator(cand)) < abs(f0):
                moved = moved or cand != z[j]
                z[j] = cand
        if not moved:
            break
    return z


def _symmetrize_even(r):
    """Enforce the ``r <-> -conj(r)`` pairing of an even spectrum's roots."""
    r = np.array(r, dtype=complex)
    out = r.copy()
    used = np.zeros(r.size, dtype=bool)
    for j in range(r.size):
        if used[j]:
            continue
        target = -np.conj(r[j])
        free = np.flatnonzero(~used)
        k = free[np.argmin(np.abs(r[free] - target))]
        if k == j:
            out[j] = 1j * r[j].imag
        else:
            out[j] = 0.5 * (r[j] - np.conj(r[k]))
            out[k] = -np.conj(out[j])
        used[j] = used[k] = True
    return out


def spectral_factorize(s, grid_scale=None, evaluator=None, even=False):
    """Factor a nonnegative spectrum as ``psi_plus * psi_minus``.

    Parameters
    ----------
    s : RationalFunction
        Hermitian, real and positive on the real axis.
    grid_scale : float, optional
        Frequency scale of the positivity check, which samples ``10**3``
        points on ``[0, 100 * grid_scale]`` (and the mirrored negative axis).
        Defaults to the largest root modulus of ``s``.
    evaluator : callable, optional
        Accurate pointwise evaluation of ``s`` at complex frequencies (for
        example a sum over noise channels).  When given, the zeros found from
        the expanded numerator are refined against it, which matters when
        zeros nearly coincide with poles.
    even : bool
        Whether ``s(-W) = s(W)``, as for the spectrum of a real process.  The
        roots are then paired as ``r, -conj(r)`` exactly.

    Returns
    -------
    SpectralFactors
        Lower-half-plane zeros and poles go to ``psi_plus``; the positive
        leading constant is split evenly.

    Raises
    ------
    NotASpectrumError
        If ``s`` is negative on the sample grid.
    MarginalSpectrumError
        If a zero or pole lies on the real axis.
    """
    if s.is_zero:
        raise MarginalSpectrumError("zero spectrum")
    zr = s.num.roots() if s.num.degree >= 1 else np.zeros(0, dtype=complex)
    pr = s.den.roots() if s.den.degree >= 1 else np.zeros(0, dtype=complex)
    if grid_scale is None:
        allr = np.concatenate([zr, pr])
        grid_scale = max(1.0, float(np.max(np.abs(allr)))) if allr.size else 1.0
    w = np.linspace(0.0, 100.0 * grid_scale, 1000)
    vals = np.concatenate([s(w), s(-w)])
    top = float(np.max(np.abs(vals)))
    if np.any(vals.real < -1e-12 * top):
        raise NotASpectrumError("spectrum takes negative values on the real axis")
    if np.any(np.abs(vals.imag) > 1e-8 * np.maximum(np.abs(vals.real), 1e-300 + 1e-12 * top)):
        raise NotASpectrumError("spectrum is not real on the real axis")
    if np.any(_on_axis(zr)) or np.any(_on_axis(pr)):
        raise MarginalSpectrumError("zero or pole on the real axis")
    if evaluator is not None and zr.size:
        zr = _polish_zeros(zr, pr, s.num.lead / s.den.lead, evaluator)
    if even:
        zr, pr = _symmetrize_even(zr), _symmetrize_even(pr)
    zl = zr[zr.imag < 0]
    pl = pr[pr.imag < 0]
    if 2 * zl.size != zr.size or 2 * pl.size != pr.size:
        raise MarginalSpectrumError("zeros or poles are not paired across the real axis")
    c = s.num.lead / s.den.lead
    if c.real <= 0 or abs(c.imag) > 1e-8 * abs(c):
        raise NotASpectrumError("leading constant of the spectrum is not positive")
    root_c = np.sqrt(c.real)
    keep_z, keep_p = _match_roots(zl, pl)
    # common lower-half factors cancel inside psi_plus
    psi_plus = RationalFunction(
        Polynomial.from_roots(zl[keep_z], root_c), Polynomial.from_roots(pl[keep_p], 1.0)
    )
    return SpectralFactors(psi_plus=psi_plus, psi_minus=psi_plus.conj(), zeros_lower=zl)


__all__ = [
    "MAX_DEGREE",
    "assemble_partial_fractions",
    "principal_parts_by_contour",
    "PointwiseAnalytic",
    "Polynomial",
    "RationalFunction",
    "SpectralFactors",
    "anticausal_part",
    "causal_part",
    "integrate_halfline",
    "partial_fractions_at",
    "principal_parts",
    "roots",
    "spectral_factorize",
]
