"""Truncated skew Laurent series over the coefficient tower.

A :class:`SkewContext` fixes an automorphism ``sigma`` (with its inverse) and
a sigma-derivation ``delta`` of the coefficient field, together with a
truncation order ``N``.  Elements of the division ring of fractions of
``D[X; sigma, delta]`` are modelled by series in descending powers of X,

    u = u_m X^m + u_{m-1} X^{m-1} + ... + u_{-N} X^{-N} + O(X^{-N-1}),

multiplied with the commutation rule ``X c = sigma(c) X + delta(c)``.  When
``delta = 0`` the mirror model in ascending powers of X is also available
(``ascending=True``).

Internally degrees are measured by their *valuation* with respect to the
local parameter (``X^-1`` for descending series, ``X`` for ascending ones).
Every series records its absolute precision ``absprec``: all coefficients of
valuation up to ``absprec`` are exact (``None`` means the series is a finite
sum that is known exactly).  Products and inverses propagate precision, so a
coefficient that is reported is never wrong.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from flint import fmpq

from .field_tower import (
    ONE,
    QT,
    QTY,
    RING,
    T,
    Y,
    ZERO,
    DivisionByZero,
    TowerElem,
    as_elem,
    derivative,
    substitute,
)

INF = math.inf


class ContextMismatch(ValueError):
    pass


class ContextError(ValueError):
    """The sigma / delta data do not define a valid skew context."""


@dataclass(frozen=True)
class Endo:
    """An endomorphism of the tower given by the images of t and Y."""

    t: TowerElem = T
    y: TowerElem = Y

    def __call__(self, c: TowerElem) -> TowerElem:
        return substitute(c, self.t, self.y)

    def is_identity(self) -> bool:
        return self.t == T and self.y == Y


@dataclass(frozen=True)
class Derivation:
    """Images of t and Y under a sigma-derivation."""

    t: TowerElem = ZERO
    y: TowerElem = ZERO

    def is_zero(self) -> bool:
        return self.t.is_zero() and self.y.is_zero()


@dataclass(frozen=True)
class SkewContext:
    level: str
    sigma: Endo = field(default_factory=Endo)
    sigma_inv: Endo = field(default_factory=Endo)
    delta: Derivation = field(default_factory=Derivation)
    order: int = 16
    ascending: bool = False

    def __post_init__(self):
        if self.level not in (QT, QTY):
            raise ContextError(f"unknown level {self.level!r}")
        if self.order < 1:
            raise ContextError("truncation order must be positive")
        if self.ascending and not self.delta.is_zero():
            raise ContextError("ascending series need delta = 0")

    @property
    def ring_key(self):
        return (self.level, self.sigma, self.sigma_inv, self.delta, self.ascending)

    @property
    def ops(self) -> "_RingOps":
        ops = self.__dict__.get("_ops")
        if ops is None:
            ops = _ring_ops(self.ring_key)
            object.__setattr__(self, "_ops", ops)
        return ops

    def with_order(self, order: int) -> "SkewContext":
        return replace(self, order=order)

    def val(self, d: int) -> int:
        return d if self.ascending else -d

    def deg(self, e: int) -> int:
        return e if self.ascending else -e

    def check(self, samples: int = 100, seed: int = 0) -> None:
        """Validate the generator data; raises :class:`ContextError`."""
        ops = self.ops
        gens = [T] if self.level == QT else [T, Y]
        for name, endo in (("sigma", self.sigma), ("sigma_inv", self.sigma_inv)):
            if self.level == QT and endo.t.level == QTY:
                raise ContextError(f"{name} leaves Q(t)")
        if self.level == QT and (self.sigma.y != Y or self.sigma_inv.y != Y):
            raise ContextError("sigma must fix Y at level Qt")
        for g in gens:
            if self.sigma(self.sigma_inv(g)) != g or self.sigma_inv(self.sigma(g)) != g:
                raise ContextError(f"sigma_inv is not inverse to sigma on {g}")
        if self.level == QT and not self.delta.y.is_zero():
            raise ContextError("delta(Y) must vanish at level Qt")
        if self.level == QTY:
            lhs = self.sigma.t * self.delta.y + self.delta.t * Y
            rhs = self.sigma.y * self.delta.t + self.delta.y * T
            if lhs != rhs:
                raise ContextError("delta images are incompatible with commutativity of t and Y")
        rng = random.Random(seed)
        for _ in range(samples):
            u = random_elem(rng, self.level)
            v = random_elem(rng, self.level)
            if ops.delta(u * v) != ops.sigma_pow(u, 1) * ops.delta(v) + ops.delta(u) * v:
                raise ContextError("delta violates the sigma-Leibniz rule")


def random_elem(rng: random.Random, level: str = QT, degree: int = 2, height: int = 3) -> TowerElem:
    """Small random element of Q(t) or Q(t)(Y); used by context checks and tests."""

    def rpoly():
        terms = {}
        ydeg = degree if level == QTY else 0
        for a in range(ydeg + 1):
            for c in range(degree + 1):
                if rng.random() < 0.5:
                    terms[(a, c)] = Fraction(rng.randint(-height, height), rng.randint(1, height))
        return RING.from_dict({k: fmpq(v.numerator, v.denominator) for k, v in terms.items() if v})

    num = rpoly()
    den = rpoly()
    while den.is_zero():
        den = rpoly()
    return TowerElem(num, den)


# -- ring level operations (cached per sigma/delta data) --------------------


class _RingOps:
    def __init__(self, key):
        level, sigma, sigma_inv, delta, ascending = key
        self.level = level
        self.sigma = sigma
        self.sigma_inv = sigma_inv
        self.delta_gens = delta
        self.sigma_id = sigma.is_identity()
        self.delta_zero = delta.is_zero()
        self._pow_images = {0: (T, Y), 1: (sigma.t, sigma.y), -1: (sigma_inv.t, sigma_inv.y)}
        self._pow_cache: dict = {}
        self._delta_cache: dict = {}
        self._chains: dict = {}
        self._inv_chains: dict = {}

    def _images(self, k: int):
        if k not in self._pow_images:
            step = self.sigma if k > 0 else self.sigma_inv
            pt, py = self._images(k - 1 if k > 0 else k + 1)
            self._pow_images[k] = (step(pt), step(py))
        return self._pow_images[k]

    def sigma_pow(self, c: TowerElem, k: int) -> TowerElem:
        if k == 0 or self.sigma_id or c.is_rational():
            return c
        key = (c, k)
        r = self._pow_cache.get(key)
        if r is None:
            t_img, y_img = self._images(k)
            r = substitute(c, t_img, y_img)
            self._pow_cache[key] = r
        return r

    def delta(self, c: TowerElem) -> TowerElem:
        if self.delta_zero or c.is_rational():
            return ZERO
        r = self._delta_cache.get(c)
        if r is not None:
            return r
        d = self.delta_gens
        if self.sigma_id:
            r = ZERO
            if not d.t.is_zero():
                r = derivative(c, "t") * d.t
            if self.level == QTY and not d.y.is_zero():
                r = r + derivative(c, "Y") * d.y
        else:
            # delta(n/d) = (delta(n) - sigma(n/d) delta(d)) / d
            r = (self._delta_poly(c.num) - self.sigma_pow(c, 1) * self._delta_poly(c.den)) / TowerElem(c.den)
        self._delta_cache[c] = r
        return r

    def _delta_poly(self, p) -> TowerElem:
        d = self.delta_gens
        st, sy = self.sigma.t, self.sigma.y
        total = ZERO
        for (a, b), coef in p.to_dict().items():
            q = TowerElem(RING.constant(coef))
            # delta(Y^a t^b) = sigma(Y^a) delta(t^b) + delta(Y^a) t^b
            dt_b = sum((st**k * d.t * T ** (b - 1 - k) for k in range(b)), ZERO)
            dy_a = sum((sy**k * d.y * Y ** (a - 1 - k) for k in range(a)), ZERO)
            total = total + q * (sy**a * dt_b + dy_a * T**b)
        return total

    def deriv_chain(self, c: TowerElem, k: int) -> list:
        """[c, delta c, ..., delta^k c], trailing zeros trimmed."""
        chain = self._chains.get(c)
        if chain is None:
            chain = [c]
            self._chains[c] = chain
        while len(chain) <= k and not chain[-1].is_zero():
            chain.append(self.delta(chain[-1]))
        return chain

    def inv_chain(self, c: TowerElem, k: int) -> list:
        """Coefficients e_0..e_k of X^-1 c = sum_k e_k X^(-1-k)."""
        chain = self._inv_chains.get(c)
        if chain is None:
            chain = [self.sigma_pow(c, -1)]
            self._inv_chains[c] = chain
        while len(chain) <= k and not chain[-1].is_zero():
            chain.append(-self.sigma_pow(self.delta(chain[-1]), -1))
        return chain


@lru_cache(maxsize=None)
def _ring_ops(key) -> _RingOps:
    return _RingOps(key)


def apply_sigma(ctx: SkewContext, c, power: int = 1) -> TowerElem:
    return ctx.ops.sigma_pow(as_elem(c), power)


def apply_delta(ctx: SkewContext, c) -> TowerElem:
    return ctx.ops.delta(as_elem(c))


# -- series ----------------------------------------------------------------


def _gen_binom(a: int, k: int) -> int:
    # a(a-1)...(a-k+1)/k! for any integer a
    num = 1
    for i in range(k):
        num *= a - i
    return num // math.factorial(k)


class TruncSeries:
    """A truncated skew Laurent series; immutable.

    ``coeffs`` maps X-degree to nonzero coefficient.  ``absprec`` is the
    largest valuation up to which the coefficients are exact, or ``None`` for
    an exactly known finite sum.
    """

    __slots__ = ("coeffs", "ctx", "absprec")

    def __init__(self, ctx: SkewContext, coeffs=None, absprec=None):
        self.ctx = ctx
        w = ctx.order
        bound = w if absprec is None else min(absprec, w)
        clean = {}
        dropped = False
        for d, c in (coeffs or {}).items():
            c = as_elem(c)
            if c.is_zero():
                continue
            if ctx.level == QT and c.level == QTY:
                raise ContextMismatch(f"coefficient {c} is not in Q(t)")
            if ctx.val(d) > bound:
                dropped = True
                continue
            clean[d] = c
        if absprec is None and dropped:
            absprec = w
        if absprec is not None:
            absprec = min(absprec, w)
        self.coeffs = clean
        self.absprec = absprec

    # construction helpers
    @classmethod
    def constant(cls, ctx, c) -> "TruncSeries":
        return cls(ctx, {0: as_elem(c)})

    @classmethod
    def monomial(cls, ctx, c, degree: int) -> "TruncSeries":
        return cls(ctx, {degree: as_elem(c)})

    @property
    def is_exact(self) -> bool:
        return self.absprec is None

    @property
    def prec(self) -> float:
        """Lowest X-degree (descending) or highest (ascending) known exactly."""
        a = INF if self.absprec is None else self.absprec
        return self.ctx.deg(a) if a != INF else (-INF if not self.ctx.ascending else INF)

    def lead_degree(self):
        if not self.coeffs:
            return None
        return min(self.coeffs) if self.ctx.ascending else max(self.coeffs)

    def top_degree(self):
        return max(self.coeffs) if self.coeffs else None

    def valuation(self) -> float:
        d = self.lead_degree()
        return INF if d is None else self.ctx.val(d)

    def coefficient(self, d: int) -> TowerElem:
        return self.coeffs.get(d, ZERO)

    def is_zero(self) -> bool:
        return not self.coeffs

    def items(self) -> Iterator:
        """(degree, coefficient) pairs ordered from the leading term down."""
        return iter(sorted(self.coeffs.items(), key=lambda kv: self.ctx.val(kv[0])))

    def _abs(self) -> float:
        return INF if self.absprec is None else self.absprec

    def __add__(self, other):
        other = _as_series(self.ctx, other)
        _same_ring(self, other)
        out = dict(self.coeffs)
        for d, c in other.coeffs.items():
            s = out.get(d)
            out[d] = c if s is None else s + c
        return TruncSeries(self.ctx, out, _fin(min(self._abs(), other._abs())))

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries(self.ctx, {d: -c for d, c in self.coeffs.items()}, self.absprec)

    def __sub__(self, other):
        return self + (-_as_series(self.ctx, other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return skew_mul(self, _as_series(self.ctx, other))

    def __rmul__(self, other):
        return skew_mul(_as_series(self.ctx, other), self)

    def inv(self) -> "TruncSeries":
        return skew_inv(self)

    def truncate(self, order: int) -> "TruncSeries":
        """Re-express in the context with a smaller (or equal) order."""
        ctx = self.ctx.with_order(order)
        return TruncSeries(ctx, self.coeffs, self.absprec)

    def scale_left(self, c) -> "TruncSeries":
        c = as_elem(c)
        return TruncSeries(self.ctx, {d: c * v for d, v in self.coeffs.items()}, self.absprec)

    def __repr__(self):
        terms = " + ".join(f"({c})*X^{d}" for d, c in self.items()) or "0"
        tail = "" if self.absprec is None else f" + O(val {self.absprec + 1})"
        return f"TruncSeries[{terms}{tail}]"


def _fin(a):
    return None if a == INF else int(a)


def _as_series(ctx, x) -> TruncSeries:
    if isinstance(x, TruncSeries):
        return x
    return TruncSeries.constant(ctx, as_elem(x))


def _same_ring(u: TruncSeries, v: TruncSeries) -> None:
    if u.ctx.ring_key != v.ctx.ring_key:
        raise ContextMismatch("series live in different skew contexts")


def _shift(ctx: SkewContext, coeffs: dict, j: int, window: int):
    """X^j * (sum c_d X^d), keeping valuations <= window.

    Returns (coefficient dict, truncated) where ``truncated`` reports that a
    nonzero contribution beyond the window was discarded.
    """
    ops = ctx.ops
    out: dict = {}
    truncated = False
    if j == 0:
        for d, c in coeffs.items():
            if ctx.val(d) <= window:
                out[d] = c
            else:
                truncated = True
        return out, truncated
    if ops.delta_zero:
        for d, c in coeffs.items():
            e = d + j
            if ctx.val(e) <= window:
                out[e] = ops.sigma_pow(c, j)
            else:
                truncated = True
        return out, truncated
    if ops.sigma_id:
        # X^j c = sum_k binom(j, k) delta^k(c) X^(j-k)
        for d, c in coeffs.items():
            kmax = d + j + window
            if kmax < 0:
                truncated = True
                continue
            if j >= 0:
                kmax_eff = min(kmax, j)
            else:
                kmax_eff = kmax
            chain = ops.deriv_chain(c, kmax_eff + 1)
            for k in range(min(kmax_eff, len(chain) - 1) + 1):
                dk = chain[k]
                if dk.is_zero():
                    break
                b = _gen_binom(j, k)
                if b == 0:
                    break
                e = d + j - k
                term = dk if b == 1 else dk * b
                s = out.get(e)
                out[e] = term if s is None else s + term
            if len(chain) > kmax_eff + 1 and not chain[kmax_eff + 1].is_zero() and (j < 0 or kmax_eff < j):
                truncated = True
        return {e: c for e, c in out.items() if not c.is_zero()}, truncated
    # general sigma-derivation: iterate single steps
    cur = dict(coeffs)
    step = 1 if j > 0 else -1
    for _ in range(abs(j)):
        nxt: dict = {}
        for d, c in cur.items():
            if step == 1:
                contrib = [(d + 1, ops.sigma_pow(c, 1)), (d, ops.delta(c))]
            else:
                kmax = d - 1 + window
                if kmax < 0:
                    truncated = True
                    continue
                chain = ops.inv_chain(c, kmax + 1)
                contrib = [(d - 1 - k, chain[k]) for k in range(min(kmax, len(chain) - 1) + 1)]
                if len(chain) > kmax + 1 and not chain[kmax + 1].is_zero():
                    truncated = True
            for e, v in contrib:
                if v.is_zero():
                    continue
                if ctx.val(e) > window:
                    truncated = True
                    continue
                s = nxt.get(e)
                nxt[e] = v if s is None else s + v
        cur = {e: c for e, c in nxt.items() if not c.is_zero()}
    return cur, truncated


def skew_mul(u: TruncSeries, v: TruncSeries) -> TruncSeries:
    """Product in D((X^-1; sigma, delta)), truncated at the context order."""
    _same_ring(u, v)
    ctx = u.ctx if u.ctx.order <= v.ctx.order else v.ctx
    window = ctx.order
    a_u, a_v = u._abs(), v._abs()
    prec = min(a_u + v.valuation(), a_v + u.valuation())
    limit = min(prec, window)
    out: dict = {}
    truncated = False
    for a, ua in u.coeffs.items():
        # terms of X^a v lie at valuation >= val(a) + val(v); skip hopeless ones
        if ctx.val(a) + v.valuation() > limit:
            if v.coeffs:
                truncated = True
            continue
        shifted, tr = _shift(ctx, v.coeffs, a, int(limit))
        truncated |= tr
        for e, c in shifted.items():
            term = ua * c
            s = out.get(e)
            out[e] = term if s is None else s + term
    if truncated:
        prec = min(prec, window)
    return TruncSeries(ctx, out, _fin(prec))


def skew_inv(u: TruncSeries) -> TruncSeries:
    """Two-sided inverse, solved degree by degree from ``v * u = 1``."""
    ctx = u.ctx
    if not u.coeffs:
        raise DivisionByZero("inversion of a (truncated) zero series")
    window = ctx.order
    m = u.lead_degree()
    mv = ctx.val(m)
    lc = u.coeffs[m]
    a_u = u._abs()
    prec = a_u - 2 * mv
    if len(u.coeffs) == 1 and a_u == INF:
        # (c X^m)^-1 = X^-m c^-1
        out, tr = _shift(ctx, {0: lc.inv()}, -m, window)
        return TruncSeries(ctx, out, window if tr else None)
    limit = int(min(prec, window))
    ops = ctx.ops
    inner = max(window, window + mv)
    v: dict = {}
    shifts: dict = {}
    general = not ops.delta_zero and not ops.sigma_id
    running = None
    for e in range(0, limit + mv + 1):
        j = ctx.deg(e - mv)
        D = ctx.deg(e)
        if general:
            if running is None:
                running, _ = _shift(ctx, u.coeffs, j, inner)
            else:
                running, _ = _shift(ctx, running, -1, inner)
            shifts[j] = running
        else:
            shifts[j], _ = _shift(ctx, u.coeffs, j, inner)
        acc = ONE if e == 0 else ZERO
        for jj, vjj in v.items():
            s = shifts[jj].get(D)
            if s is not None:
                acc = acc - vjj * s
        pivot = shifts[j].get(D)
        if pivot is None or pivot.is_zero():
            raise DivisionByZero("leading coefficient vanished during inversion")
        if not acc.is_zero():
            v[j] = acc / pivot
    return TruncSeries(ctx, v, limit)


def series_equal(u: TruncSeries, v: TruncSeries) -> bool:
    """Coefficientwise equality on the range where both series are known."""
    _same_ring(u, v)
    ctx = u.ctx
    bound = min(u._abs(), v._abs(), u.ctx.order, v.ctx.order)
    keys = set(u.coeffs) | set(v.coeffs)
    for d in keys:
        if ctx.val(d) > bound:
            continue
        if u.coeffs.get(d, ZERO) != v.coeffs.get(d, ZERO):
            return False
    return True


# -- standard contexts -----------------------------------------------------


def weyl_context(order: int = 20) -> SkewContext:
    """Q(t)[X; d/dt], the first Weyl algebra with s -> X."""
    return SkewContext(QT, delta=Derivation(t=ONE), order=order)


def heisenberg_context(order: int = 16, ascending: bool = False) -> SkewContext:
    """(Q(t)(Y))[X; sigma] with sigma(Y) = tY."""
    return SkewContext(
        QTY,
        sigma=Endo(T, T * Y),
        sigma_inv=Endo(T, Y / T),
        order=order,
        ascending=ascending,
    )


def shift_context(order: int = 16) -> SkewContext:
    """Q(t)[X; sigma] with sigma(t) = t + 1."""
    return SkewContext(QT, sigma=Endo(T + 1), sigma_inv=Endo(T - 1), order=order)


def scaling_context(lam, order: int = 16) -> SkewContext:
    """Q(t)[X; sigma] with sigma(t) = lam * t."""
    lam = as_elem(lam)
    return SkewContext(QT, sigma=Endo(lam * T), sigma_inv=Endo(T / lam), order=order)
