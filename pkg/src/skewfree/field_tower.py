"""Exact arithmetic in Q, Q(t) and Q(t)(Y).

Every element of the tower is stored as a reduced fraction ``num/den`` of
polynomials in Q[Y, t] (python-flint ``fmpq_mpoly`` in lex order with
Y > t).  Since Q(t)(Y) = Q(t, Y), a gcd-reduced fraction whose denominator
has leading coefficient 1 is a canonical representative: two elements are
equal exactly when their numerators and denominators are identical.  An
element whose representation does not involve Y lives at level ``Qt``.

Rational scalars are plain :class:`fractions.Fraction` values (``BigRat``).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from flint import fmpq, fmpq_mpoly, fmpq_mpoly_ctx

BigRat = Fraction

QT = "Qt"
QTY = "QtY"
LEVELS = (QT, QTY)

RING = fmpq_mpoly_ctx.get(("Y", "t"), "lex")
_Y, _T = RING.gens()
_ONE = RING.constant(1)
_ZERO = RING.constant(0)
# auxiliary ring for substituting rational images: Y = a/b, t = c/d
_HOM = fmpq_mpoly_ctx.get(("a", "b", "c", "d"), "lex")

Poly = fmpq_mpoly


class DivisionByZero(ZeroDivisionError):
    pass


class NotCleared(ValueError):
    """The proposed clearer is not a multiple of the element's denominator."""


def _to_fmpq(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    x = Fraction(x)
    return fmpq(x.numerator, x.denominator)


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def as_poly(x) -> fmpq_mpoly:
    """Coerce ints, Fractions and flint polynomials into the tower ring."""
    if isinstance(x, fmpq_mpoly):
        return x
    if isinstance(x, (int, Fraction, fmpq)):
        return RING.constant(_to_fmpq(x))
    if isinstance(x, TowerElem) and x.den.is_one():
        return x.num
    raise TypeError(f"cannot interpret {x!r} as a polynomial")


def poly_t(coeffs: Sequence) -> fmpq_mpoly:
    """Polynomial in t from a dense coefficient list (index = degree)."""
    return RING.from_dict({(0, i): _to_fmpq(c) for i, c in enumerate(coeffs) if c != 0})


def poly_y(coeffs: Sequence["TowerElem"]) -> "TowerElem":
    """Polynomial in Y with coefficients in Q(t), returned as a tower element."""
    acc = ZERO
    y = TowerElem(_Y)
    for c in reversed(list(coeffs)):
        acc = acc * y + as_elem(c)
    return acc


class TowerElem:
    """An element of Q(t)(Y) in canonical reduced form.

    Use :func:`normalize` or the arithmetic operators to build elements; the
    constructor trusts its arguments when ``reduced=True``.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den=None, reduced=False):
        num = as_poly(num)
        if den is None:
            self.num, self.den = num, _ONE
        elif reduced:
            self.num, self.den = num, as_poly(den)
        else:
            self.num, self.den = _reduce(num, as_poly(den))
        self._hash = None

    @property
    def level(self) -> str:
        if self.num.degrees()[0] > 0 or self.den.degrees()[0] > 0:
            return QTY
        return QT

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_rational(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def is_poly(self) -> bool:
        return self.den.is_one()

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not a rational constant")
        return _to_fraction(self.num.leading_coefficient() if not self.num.is_zero() else fmpq(0)) / _to_fraction(
            self.den.leading_coefficient()
        )

    def __eq__(self, other):
        if not isinstance(other, TowerElem):
            try:
                other = as_elem(other)
            except TypeError:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((str(self.num), str(self.den)))
        return self._hash

    def __bool__(self):
        return not self.num.is_zero()

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        n1, d1, n2, d2 = self.num, self.den, other.num, other.den
        if d1 == d2:
            return TowerElem(n1 + n2, d1)
        if d1.is_one():
            return TowerElem(n1 * d2 + n2, d2, reduced=True)
        if d2.is_one():
            return TowerElem(n1 + n2 * d1, d1, reduced=True)
        g = d1.gcd(d2)
        if g.is_one():
            return TowerElem(n1 * d2 + n2 * d1, d1 * d2, reduced=True)
        e1, e2 = d1 / g, d2 / g
        num = n1 * e2 + n2 * e1
        h = num.gcd(g)
        if not h.is_one():
            num, g = num / h, g / h
        return _monic(num, e1 * e2 * g)

    __radd__ = __add__

    def __neg__(self):
        return TowerElem(-self.num, self.den, reduced=True)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        n1, d1, n2, d2 = self.num, self.den, other.num, other.den
        if n1.is_zero() or n2.is_zero():
            return ZERO
        if d1.is_one() and d2.is_one():
            return TowerElem(n1 * n2, _ONE, reduced=True)
        g1 = n1.gcd(d2) if not d2.is_one() else _ONE
        g2 = n2.gcd(d1) if not d1.is_one() else _ONE
        if not g1.is_one():
            n1, d2 = n1 / g1, d2 / g1
        if not g2.is_one():
            n2, d1 = n2 / g2, d1 / g2
        return _monic(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def inv(self) -> "TowerElem":
        if self.num.is_zero():
            raise DivisionByZero("inversion of zero in the coefficient field")
        return _monic(self.den, self.num)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inv()

    def __rtruediv__(self, other):
        return as_elem(other) * self.inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        if k == 0:
            return ONE
        return TowerElem(self.num**k, self.den**k, reduced=True)

    def __repr__(self):
        return f"TowerElem({self})"

    def __str__(self):
        return to_text(self)

    def __reduce__(self):
        return (_from_state, (_poly_state(self.num), _poly_state(self.den)))


def _monic(num: fmpq_mpoly, den: fmpq_mpoly) -> TowerElem:
    if num.is_zero():
        return ZERO
    lc = den.leading_coefficient()
    if lc != 1:
        num, den = num / lc, den / lc
    return TowerElem(num, den, reduced=True)


def _reduce(num: fmpq_mpoly, den: fmpq_mpoly):
    if den.is_zero():
        raise DivisionByZero("zero denominator")
    if num.is_zero():
        return _ZERO, _ONE
    g = num.gcd(den)
    if not g.is_one():
        num, den = num / g, den / g
    lc = den.leading_coefficient()
    if lc != 1:
        num, den = num / lc, den / lc
    return num, den


def _coerce(x):
    if isinstance(x, TowerElem):
        return x
    if isinstance(x, (int, Fraction, fmpq, fmpq_mpoly)):
        return TowerElem(as_poly(x))
    return NotImplemented


def as_elem(x) -> TowerElem:
    e = _coerce(x)
    if e is NotImplemented:
        raise TypeError(f"cannot interpret {x!r} as a tower element")
    return e


def normalize(num, den) -> TowerElem:
    """Canonical form of ``num/den``; equal fractions give identical output."""
    return TowerElem(as_poly(num), as_poly(den))


ZERO = TowerElem(_ZERO)
ONE = TowerElem(_ONE)
T = TowerElem(_T)
Y = TowerElem(_Y)


def _poly_text(p: fmpq_mpoly) -> str:
    return str(p)


def to_text(x: TowerElem) -> str:
    """Canonical text ``(num)/(den)``; bare ``num`` when the denominator is 1.

    The output is accepted by the expression grammar of :mod:`skewfree.ncexpr`.
    """
    if x.den.is_one():
        return _poly_text(x.num)
    return f"({_poly_text(x.num)})/({_poly_text(x.den)})"


def _poly_state(p: fmpq_mpoly):
    return tuple((a, c, int(q.p), int(q.q)) for (a, c), q in p.to_dict().items())


def _from_state(num_state, den_state) -> TowerElem:
    def build(state):
        return RING.from_dict({(a, c): fmpq(n, d) for a, c, n, d in state})

    return TowerElem(build(num_state), build(den_state), reduced=True)


def field_ops():
    """Names of the supported field operations (operators on TowerElem)."""
    return ("add", "sub", "mul", "div", "inv", "neg", "pow")


# -- substitution ----------------------------------------------------------


def substitute(x: TowerElem, t_image: TowerElem, y_image: TowerElem) -> TowerElem:
    """Ring homomorphism t -> t_image, Y -> y_image applied to ``x``."""
    return _subst_poly(x.num, t_image, y_image) / _subst_poly(x.den, t_image, y_image)


def _subst_poly(p: fmpq_mpoly, t_image: TowerElem, y_image: TowerElem) -> TowerElem:
    if p.is_constant():
        return TowerElem(p)
    if t_image.den.is_one() and y_image.den.is_one():
        return TowerElem(p.compose(y_image.num, t_image.num), _ONE, reduced=True)
    dy, dt = p.degrees()
    hom = _HOM.from_dict({(a, dy - a, c, dt - c): coef for (a, c), coef in p.to_dict().items()})
    num = hom.compose(y_image.num, y_image.den, t_image.num, t_image.den, ctx=RING)
    den = y_image.den**dy * t_image.den**dt
    return normalize(num, den)


def derivative(x: TowerElem, var: str = "t") -> TowerElem:
    """Partial derivative with respect to ``t`` or ``Y`` (quotient rule)."""
    n, d = x.num, x.den
    dn = n.derivative(var)
    if d.is_one():
        return TowerElem(dn, _ONE, reduced=True)
    dd = d.derivative(var)
    return normalize(dn * d - n * dd, d * d)


# -- flattening ------------------------------------------------------------


def monomials(p: fmpq_mpoly) -> dict[tuple[int, int], Fraction]:
    """Map (t-degree, Y-degree) -> coefficient for a polynomial."""
    return {(c, a): _to_fraction(q) for (a, c), q in p.to_dict().items()}


def coefficient_vector(x: TowerElem, clearer, shape: tuple[int, int] | None = None) -> list[Fraction]:
    """Coefficients of ``x * clearer`` in the monomial basis.

    The entry for t^i Y^j sits at index ``i * (ydeg + 1) + j`` where
    ``shape = (tdeg, ydeg)`` bounds the degrees; by default the shape is the
    degree box of the cleared numerator.  For a fixed clearer and shape the
    map is Q-linear in ``x``.
    """
    clearer = as_poly(clearer)
    if clearer.is_zero():
        raise NotCleared("zero clearer")
    q, r = divmod(clearer, x.den)
    if not r.is_zero():
        raise NotCleared(f"{to_text(TowerElem(clearer))} is not a multiple of {_poly_text(x.den)}")
    cleared = x.num * q
    mons = monomials(cleared)
    if shape is None:
        dy, dt = cleared.degrees() if not cleared.is_zero() else (0, 0)
        shape = (dt, dy)
    tdeg, ydeg = shape
    out = [Fraction(0)] * ((tdeg + 1) * (ydeg + 1))
    for (i, j), c in mons.items():
        if i > tdeg or j > ydeg:
            raise ValueError(f"monomial t^{i} Y^{j} outside shape {shape}")
        out[i * (ydeg + 1) + j] = c
    return out


def lcm(polys: Iterable[fmpq_mpoly]) -> fmpq_mpoly:
    acc = _ONE
    for p in polys:
        if p.is_one() or p == acc:
            continue
        g = acc.gcd(p)
        acc = acc * (p / g)
    lc = acc.leading_coefficient()
    return acc / lc if lc != 1 else acc


def y_coefficients(x: fmpq_mpoly) -> dict[int, TowerElem]:
    """Split a polynomial in Q[t][Y] into its Y-degree -> Q[t] coefficients."""
    out: dict[int, dict] = {}
    for (a, c), q in x.to_dict().items():
        out.setdefault(a, {})[(0, c)] = q
    return {a: TowerElem(RING.from_dict(d), _ONE, reduced=True) for a, d in out.items()}


def t_coefficients(x: fmpq_mpoly) -> dict[int, Fraction]:
    """Degree -> rational coefficient for a polynomial in t alone."""
    out = {}
    for (a, c), q in x.to_dict().items():
        if a:
            raise ValueError("polynomial involves Y")
        out[c] = _to_fraction(q)
    return out
