"""Noncommutative rational expressions over {X, Y, t, constants}.

Trees are the exact, untruncated representation of division-ring elements;
:func:`evaluate` maps them into truncated series.  Grammar::

    expr   := term { ('+' | '-') term } ;
    term   := ['-'] factor { ('*' | '/') factor } ;
    factor := base [ '^' [ '-' ] integer ] ;
    base   := 'X' | 'Y' | 't' | integer | '(' expr ')' ;

``u/v`` means ``u * v^-1``.  Subtrees free of X are folded into a single
scalar leaf while parsing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .field_tower import (
    ONE,
    QTY,
    RING,
    T,
    Y,
    ZERO,
    DivisionByZero,
    TowerElem,
    as_elem,
    substitute,
    to_text,
    y_coefficients,
)
from .skew_series import SkewContext, TruncSeries, series_equal


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownSymbol(ParseError):
    pass


class EvaluationError(DivisionByZero):
    """Inversion of a (truncated) zero series; ``subtree`` names the culprit."""

    def __init__(self, message: str, subtree: "ExprTree"):
        super().__init__(f"{message}: {to_string(subtree)}")
        self.subtree = subtree


# -- trees -------------------------------------------------------------------


class ExprTree:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_h", h)
        return h

    def _key(self) -> tuple:
        raise NotImplementedError

    def __str__(self):
        return to_string(self)

    def __mul__(self, other):
        return mul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return neg(self)


@dataclass(frozen=True, eq=True)
class Scalar(ExprTree):
    value: TowerElem

    def _key(self):
        return (self.value,)

    __hash__ = ExprTree.__hash__


@dataclass(frozen=True, eq=True)
class XLeaf(ExprTree):
    def _key(self):
        return ()

    __hash__ = ExprTree.__hash__


@dataclass(frozen=True, eq=True)
class Sum(ExprTree):
    children: tuple

    def _key(self):
        return self.children

    __hash__ = ExprTree.__hash__


@dataclass(frozen=True, eq=True)
class Product(ExprTree):
    children: tuple

    def _key(self):
        return self.children

    __hash__ = ExprTree.__hash__


@dataclass(frozen=True, eq=True)
class Inverse(ExprTree):
    child: ExprTree

    def _key(self):
        return (self.child,)

    __hash__ = ExprTree.__hash__


@dataclass(frozen=True, eq=True)
class Negate(ExprTree):
    child: ExprTree

    def _key(self):
        return (self.child,)

    __hash__ = ExprTree.__hash__


@dataclass(frozen=True, eq=True)
class IntPower(ExprTree):
    child: ExprTree
    exponent: int

    def __post_init__(self):
        if self.exponent == 0:
            raise ValueError("IntPower exponent must be nonzero")

    def _key(self):
        return (self.child, self.exponent)

    __hash__ = ExprTree.__hash__


X = XLeaf()


def scalar(c) -> Scalar:
    return Scalar(as_elem(c))


def _tree(x) -> ExprTree:
    return x if isinstance(x, ExprTree) else scalar(x)


# smart constructors: fold scalars, flatten nested sums and products


def add(*terms) -> ExprTree:
    flat: list = []
    acc = None
    pos = None
    for u in map(_tree, terms):
        parts = u.children if isinstance(u, Sum) else (u,)
        for p in parts:
            if isinstance(p, Scalar):
                if acc is None:
                    acc, pos = p.value, len(flat)
                    flat.append(None)
                else:
                    acc = acc + p.value
            else:
                flat.append(p)
    if acc is not None:
        if acc.is_zero() and len(flat) > 1:
            del flat[pos]
        else:
            flat[pos] = Scalar(acc)
    if not flat:
        return Scalar(ZERO)
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors) -> ExprTree:
    flat: list = []
    for u in map(_tree, factors):
        parts = u.children if isinstance(u, Product) else (u,)
        for p in parts:
            if isinstance(p, Scalar) and flat and isinstance(flat[-1], Scalar):
                flat[-1] = Scalar(flat[-1].value * p.value)
            else:
                flat.append(p)
    if any(isinstance(p, Scalar) and p.value.is_zero() for p in flat):
        return Scalar(ZERO)
    if len(flat) > 1:
        flat = [p for p in flat if not (isinstance(p, Scalar) and p.value.is_one())] or [Scalar(ONE)]
    if len(flat) > 1 and isinstance(flat[0], Scalar) and (-flat[0].value).is_one():
        return Negate(mul(*flat[1:]))
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def neg(u) -> ExprTree:
    u = _tree(u)
    if isinstance(u, Scalar):
        return Scalar(-u.value)
    return Negate(u)


def inverse(u) -> ExprTree:
    u = _tree(u)
    if isinstance(u, Scalar):
        return Scalar(u.value.inv())
    return Inverse(u)


def power(u, k: int) -> ExprTree:
    u = _tree(u)
    if k == 0:
        return Scalar(ONE)
    if k == 1:
        return u
    if k == -1:
        return inverse(u)
    if isinstance(u, Scalar):
        return Scalar(u.value ** k)
    return IntPower(u, k)


def has_x(u: ExprTree) -> bool:
    if isinstance(u, XLeaf):
        return True
    if isinstance(u, Scalar):
        return False
    if isinstance(u, (Sum, Product)):
        return any(has_x(c) for c in u.children)
    return has_x(u.child)


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def integer(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise ParseError("expected integer", start)
        return int(self.text[start:self.pos])

    def expr(self) -> ExprTree:
        terms = [self.term()]
        while True:
            if self.take("+"):
                terms.append(self.term())
            elif self.take("-"):
                terms.append(neg(self.term()))
            else:
                return add(*terms)

    def term(self) -> ExprTree:
        negative = self.take("-")
        factors = [self.factor()]
        while True:
            if self.take("*"):
                factors.append(self.factor())
            elif self.take("/"):
                factors.append(inverse_checked(self.factor(), self.pos))
            else:
                break
        u = mul(*factors)
        return neg(u) if negative else u

    def factor(self) -> ExprTree:
        b = self.base()
        if self.take("^"):
            sign = -1 if self.take("-") else 1
            k = sign * self.integer()
            if k < 0 and isinstance(b, Scalar) and b.value.is_zero():
                raise DivisionByZero("zero raised to a negative power")
            return power(b, k)
        return b

    def base(self) -> ExprTree:
        ch = self.peek()
        start = self.pos
        if ch == "":
            raise ParseError("unexpected end of input", start)
        if ch == "(":
            self.pos += 1
            u = self.expr()
            if not self.take(")"):
                raise ParseError("expected ')'", self.pos)
            return u
        if ch.isdigit():
            return Scalar(as_elem(self.integer()))
        if ch.isalpha() or ch == "_":
            end = start
            while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                end += 1
            name = self.text[start:end]
            leaf = {"X": X, "Y": Scalar(Y), "t": Scalar(T)}.get(name)
            if leaf is None:
                raise UnknownSymbol(f"unknown symbol {name!r}", start)
            self.pos = end
            return leaf
        raise ParseError(f"unexpected character {ch!r}", start)


def inverse_checked(u: ExprTree, pos: int) -> ExprTree:
    if isinstance(u, Scalar) and u.value.is_zero():
        raise DivisionByZero(f"division by zero before offset {pos}")
    return inverse(u)


def parse(text: str) -> ExprTree:
    p = _Parser(text)
    u = p.expr()
    if p.peek() != "":
        raise ParseError(f"unexpected {p.peek()!r}", p.pos)
    return u


# -- printer -----------------------------------------------------------------


def _scalar_text(c: TowerElem) -> str:
    return to_text(c)


def _is_atom_text(s: str) -> bool:
    return s.isdigit() or s in ("t", "Y", "X")


def to_string(u: ExprTree) -> str:
    """Canonical text; ``parse(to_string(u)) == u``."""
    return _expr(u)


def _expr(u: ExprTree) -> str:
    if isinstance(u, Sum):
        out = _term(u.children[0])
        for c in u.children[1:]:
            if isinstance(c, Negate):
                out += " - " + _term_noneg(c.child)
            else:
                out += " + " + _term(c)
        return out
    return _term(u)


def _term(u: ExprTree) -> str:
    if isinstance(u, Negate):
        return "-" + _term_noneg(u.child)
    return _term_noneg(u)


def _term_noneg(u: ExprTree) -> str:
    if isinstance(u, Product):
        return "*".join(_factor(c) for c in u.children)
    return _factor(u)


def _factor(u: ExprTree) -> str:
    if isinstance(u, Inverse):
        return _base(u.child) + "^-1"
    if isinstance(u, IntPower):
        return _base(u.child) + "^" + str(u.exponent)
    return _base(u)


def _base(u: ExprTree) -> str:
    if isinstance(u, XLeaf):
        return "X"
    if isinstance(u, Scalar):
        s = _scalar_text(u.value)
        return s if _is_atom_text(s) else f"({s})"
    return f"({_expr(u)})"


# -- evaluation --------------------------------------------------------------


def _eval(u: ExprTree, ctx: SkewContext, cache: dict) -> TruncSeries:
    hit = cache.get(u)
    if hit is not None:
        return hit
    if isinstance(u, Scalar):
        r = TruncSeries.constant(ctx, u.value)
    elif isinstance(u, XLeaf):
        r = TruncSeries.monomial(ctx, ONE, 1)
    elif isinstance(u, Sum):
        r = _eval(u.children[0], ctx, cache)
        for c in u.children[1:]:
            r = r + _eval(c, ctx, cache)
    elif isinstance(u, Product):
        r = _eval_product(u, ctx, cache)
    elif isinstance(u, Negate):
        r = -_eval(u.child, ctx, cache)
    elif isinstance(u, Inverse):
        r = _invert(_eval(u.child, ctx, cache), u.child)
    elif isinstance(u, IntPower):
        b = _eval(u.child, ctx, cache)
        if u.exponent < 0:
            b = _invert(b, u.child)
        r = b
        for _ in range(abs(u.exponent) - 1):
            r = r * b
    else:
        raise TypeError(f"not an expression tree: {u!r}")
    cache[u] = r
    return r


def _eval_product(u: Product, ctx: SkewContext, cache: dict) -> TruncSeries:
    # right fold; every proper suffix is cached so that products sharing a
    # tail (words, nested V-trees) reuse each other's work
    kids = u.children
    n = len(kids)

    def suffix(k):
        return kids[k] if k == n - 1 else Product(kids[k:])

    start, acc = n - 1, None
    for k in range(1, n):
        hit = cache.get(suffix(k))
        if hit is not None:
            start, acc = k, hit
            break
    if acc is None:
        acc = _eval(kids[-1], ctx, cache)
    for k in range(start - 1, -1, -1):
        acc = _eval(kids[k], ctx, cache) * acc
        if k:
            cache[suffix(k)] = acc
    return acc


def _invert(s: TruncSeries, subtree: ExprTree) -> TruncSeries:
    try:
        return s.inv()
    except DivisionByZero as exc:
        raise EvaluationError(str(exc), subtree) from None


def evaluate(tree: ExprTree, ctx: SkewContext, cache: Optional[dict] = None, guard: int = 2) -> TruncSeries:
    """Series of ``tree`` correct through the context's truncation order.

    Intermediate results are computed at a slightly larger order; products
    by positive powers of X eat into precision, so the guard grows until
    the result is known down to order N.
    """
    series = evaluate_many([tree], ctx, cache, guard)[0]
    return series


def evaluate_many(trees, ctx: SkewContext, cache: Optional[dict] = None, guard: int = 2) -> list:
    trees = list(trees)
    n = ctx.order
    if cache is None:
        cache = {}
    g = guard
    while True:
        work = ctx.with_order(n + g)
        sub = cache.setdefault(n + g, {})
        out = [_eval(u, work, sub) for u in trees]
        if all(s.absprec is None or s.absprec >= n for s in out):
            return [s.truncate(n) for s in out]
        short = min(s.absprec for s in out if s.absprec is not None)
        if g > 4 * n + 16:
            raise RuntimeError("precision loss does not stabilise; expression has unbounded X-degree growth")
        g = g + max(n - short, 1) + g


def expr_equal(u: ExprTree, v: ExprTree, ctx: SkewContext) -> bool:
    a, b = evaluate_many([u, v], ctx)
    return series_equal(a, b)


# -- substitutions and involutions -----------------------------------------


def _map_tree(u: ExprTree, x_img: ExprTree, scalar_img: Callable, reverse: bool) -> ExprTree:
    memo: dict = {}

    def go(w):
        r = memo.get(w)
        if r is not None:
            return r
        if isinstance(w, XLeaf):
            r = x_img
        elif isinstance(w, Scalar):
            r = scalar_img(w.value)
        elif isinstance(w, Sum):
            r = add(*(go(c) for c in w.children))
        elif isinstance(w, Product):
            kids = [go(c) for c in w.children]
            r = mul(*(reversed(kids) if reverse else kids))
        elif isinstance(w, Negate):
            r = neg(go(w.child))
        elif isinstance(w, Inverse):
            r = inverse(go(w.child))
        elif isinstance(w, IntPower):
            r = power(go(w.child), w.exponent)
        else:
            raise TypeError(f"not an expression tree: {w!r}")
        memo[w] = r
        return r

    return go(u)


def _scalar_image(t_img: TowerElem, y_img: ExprTree | None) -> Callable:
    """Image of a coefficient under a map fixing the commutative field structure.

    When the image of Y is itself a coefficient the map is a plain field
    substitution.  Otherwise the coefficient is written as N(Y) / D(Y) over
    Q(t) and rebuilt as a tree around the image of Y.
    """

    def img(c: TowerElem) -> ExprTree:
        if c.level != QTY or y_img is None:
            return Scalar(substitute(c, t_img, Y))
        if isinstance(y_img, Scalar):
            return Scalar(substitute(c, t_img, y_img.value))

        def poly_tree(p):
            terms = []
            for k, coef in sorted(y_coefficients(p).items()):
                coef = substitute(coef, t_img, Y)
                terms.append(mul(Scalar(coef), power(y_img, k)))
            return add(*terms)

        num = poly_tree(c.num)
        if c.den == RING.constant(1):
            return num
        return mul(num, inverse(poly_tree(c.den)))

    return img


@dataclass(frozen=True)
class InvolutionSpec:
    """An involution given by the images of X, Y and t.

    ``t_inverted`` selects t* = 1/t (otherwise t* = t).  ``p`` and ``q`` are
    the exponents of zeta = t^p and eta = t^q used to build the images.
    """

    name: str
    x_image: ExprTree
    y_image: Optional[ExprTree] = None
    t_inverted: bool = False
    p: int = 0
    q: int = 0

    @property
    def t_image(self) -> TowerElem:
        return T.inv() if self.t_inverted else T

    def validate(self, ctx: SkewContext) -> bool:
        """Check (g*)* = g on the generators X, t (and Y when present)."""
        gens = [X, Scalar(T)]
        if ctx.level == QTY:
            gens.append(Scalar(Y))
        return all(expr_equal(apply_involution(apply_involution(g, self), self), g, ctx) for g in gens)


def apply_involution(tree: ExprTree, spec: InvolutionSpec) -> ExprTree:
    """Antihomomorphic image: reverse products, map leaves through ``spec``."""
    return _map_tree(tree, spec.x_image, _scalar_image(spec.t_image, spec.y_image), reverse=True)


def substitute_leaves(tree: ExprTree, x_image: ExprTree, y_image: Optional[TowerElem] = None,
                      t_image: TowerElem = T) -> ExprTree:
    """Homomorphic leaf substitution (used for twist automorphisms)."""
    y = None if y_image is None else Scalar(as_elem(y_image))
    return _map_tree(tree, _tree(x_image), _scalar_image(as_elem(t_image), y), reverse=False)


def _zeta(p: int) -> TowerElem:
    return T ** p


def involution_type(kind: str, p: int = 1, q: int = 1) -> InvolutionSpec:
    """The involutions of the Heisenberg division ring (types I-IV)."""
    kind = kind.upper()
    z, e = _zeta(p), _zeta(q)
    if kind == "I":
        return InvolutionSpec("I", mul(Scalar(z), X), Scalar(e * Y), True, p, q)
    if kind == "II":
        return InvolutionSpec("II", Inverse(X), Scalar(Y.inv()), True, p, q)
    if kind == "III":
        return InvolutionSpec("III", X, Scalar(z * Y.inv()), False, p, q)
    if kind == "IV":
        return InvolutionSpec("IV", mul(Scalar(z), Scalar(Y)), mul(Scalar(z.inv()), X), False, p, q)
    raise ValueError(f"unknown involution type {kind!r}")


def weyl_involution() -> InvolutionSpec:
    """X* = -X, t* = t on Q(t)(X; d/dt)."""
    return InvolutionSpec("weyl", Negate(X))
