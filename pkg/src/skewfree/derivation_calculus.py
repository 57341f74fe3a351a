"""The sigma-derivation psi = a1*delta + a0*(Id - sigma) and hypothesis checkers.

* :func:`hermite_reduce` splits f in Q(t) as d/dt(g) + h with h proper and
  squarefree-denominated; f is a derivative of a rational function iff h = 0.
* :func:`span_meets_derivatives` decides whether a finite Q-span meets
  d/dt(Q(t)) only in 0.
* :func:`check_lemma_difference` and :func:`bounded_difference` solve
  psi(beta) in a target span for beta ranging over a finite-dimensional
  space of candidates.  These checks are bounded, not complete.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from flint import fmpq, fmpq_poly

from .field_tower import (
    ONE,
    QT,
    QTY,
    RING,
    T,
    Y,
    ZERO,
    TowerElem,
    as_elem,
    as_poly,
    lcm,
    monomials,
    normalize,
    t_coefficients,
    y_coefficients,
)
from .linalg import nullspace, rank_exact, rref
from .skew_series import SkewContext, apply_delta, apply_sigma


class BadKernel(ValueError):
    """psi does not vanish on a declared kernel generator."""


class BadParams(ValueError):
    pass


KERNELS = ("Q", "Qt")


@dataclass(frozen=True)
class OreParams:
    """f = a0 + a1*X and g = b0 + b1*X."""

    a0: Fraction
    a1: Fraction
    b0: Fraction
    b1: Fraction

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.a1 == 0:
            raise BadParams("a1 must be nonzero")

    def condition(self, ctx: SkewContext) -> Optional[str]:
        """'i' when b1 = 0, 'ii' when b0 = 0 and delta = 0, else None."""
        if self.b1 == 0:
            return "i"
        if self.b0 == 0 and ctx.delta.is_zero():
            return "ii"
        return None

    def as_tuple(self):
        return (self.a0, self.a1, self.b0, self.b1)


@dataclass(frozen=True)
class PsiMap:
    params: OreParams
    ctx: SkewContext
    kernel: str = "Q"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}")

    def __call__(self, c) -> TowerElem:
        return psi_apply(self, c)

    def check_kernel(self) -> None:
        if self.kernel == "Qt" and not psi_apply(self, T).is_zero():
            raise BadKernel("psi(t) != 0, so Q(t) is not contained in ker psi")


def psi_apply(psi: PsiMap, c) -> TowerElem:
    c = as_elem(c)
    p = psi.params
    out = ZERO
    if p.a1:
        out = out + as_elem(p.a1) * apply_delta(psi.ctx, c)
    if p.a0:
        out = out + as_elem(p.a0) * (c - apply_sigma(psi.ctx, c))
    return out


# -- Hermite reduction -----------------------------------------------------


@dataclass(frozen=True)
class HermiteResult:
    rational_part: TowerElem
    remainder: TowerElem
    is_derivative: bool


def _to_upoly(p) -> fmpq_poly:
    coeffs = t_coefficients(as_poly(p))
    n = max(coeffs, default=-1) + 1
    return fmpq_poly([fmpq(coeffs.get(i, 0).numerator, coeffs.get(i, 0).denominator) for i in range(n)])


def _from_upoly(p: fmpq_poly) -> TowerElem:
    return TowerElem(RING.from_dict({(0, i): c for i, c in enumerate(p.coeffs()) if c != 0}))


def _frac(num: fmpq_poly, den: fmpq_poly) -> TowerElem:
    return _from_upoly(num) / _from_upoly(den)


def _solve_diophantine(a: fmpq_poly, b: fmpq_poly, c: fmpq_poly):
    """s, r with s*a + r*b = c and deg s < deg b (gcd(a, b) = 1)."""
    g, s0, r0 = a.xgcd(b)
    s = divmod(s0 * c / g, b)[1]
    r = divmod(c - s * a, b)[0]
    return s, r


def hermite_reduce(f) -> HermiteResult:
    """Hermite reduction over Q(t) (linear variant, squarefree steps)."""
    f = as_elem(f)
    if f.level != QT:
        raise ValueError("hermite_reduce works on Q(t)")
    if f.is_zero():
        return HermiteResult(ZERO, ZERO, True)
    a = _to_upoly(f.num)
    d = _to_upoly(f.den)
    g = ZERO
    dminus = d.gcd(d.derivative())
    dstar = divmod(d, dminus)[0]
    while dminus.degree() > 0:
        dminus2 = dminus.gcd(dminus.derivative())
        dminus_star = divmod(dminus, dminus2)[0]
        coef = -divmod(dstar * dminus.derivative(), dminus)[0]
        b, c = _solve_diophantine(coef, dminus_star, a)
        a = c - divmod(b.derivative() * dstar, dminus_star)[0]
        g = g + _frac(b, dminus)
        dminus = dminus2
    q, r = divmod(a, dstar)
    g = g + _from_upoly(q.integral())
    rem = ZERO if r.is_zero() else _frac(r, dstar)
    return HermiteResult(g, rem, rem.is_zero())


def _poly_vectors(elems: Sequence[TowerElem], var: str, over: str) -> list[list]:
    """Cleared coefficient vectors, one column per element.

    All elements are put over a common denominator L; multiplication by L
    is injective and linear over the base field ``over`` ("Q": coefficients
    of t^i Y^j; "Qt": coefficients of Y^j in Q(t)).
    """
    L = lcm(e.den for e in elems)
    cols = []
    for e in elems:
        cleared = e.num * (L / e.den)
        if over == "Q":
            cols.append({k: v for k, v in monomials(cleared).items()})
        else:
            cols.append(y_coefficients(cleared))
    keys = sorted(set().union(*cols)) if cols else []
    zero = Fraction(0) if over == "Q" else ZERO
    return [[c.get(k, zero) for c in cols] for k in keys]


def span_meets_derivatives(basis: Sequence) -> bool:
    """True iff the only combination of ``basis`` in d/dt(Q(t)) is 0.

    The Hermite remainder is Q-linear, and an element is a derivative
    exactly when its remainder is 0, so the question is whether the
    remainders are Q-linearly independent.  A failing answer is also
    confirmed at the element level: the dependency found among the
    remainders is applied to the inputs and the combination reduced again.
    """
    basis = [as_elem(b) for b in basis]
    if not basis:
        return True
    rems = [hermite_reduce(b).remainder for b in basis]
    rows = _poly_vectors(rems, "t", "Q")
    n = len(basis)
    if rows and rank_exact([list(r) for r in zip(*rows)]) == n:
        return True
    kernel = nullspace(rows, n)
    for v in kernel:
        combo = ZERO
        for c, b in zip(v, basis):
            combo = combo + as_elem(c) * b
        if combo.is_zero() or not hermite_reduce(combo).is_derivative:
            continue
        return False
    return True


# -- bounded difference checks ---------------------------------------------


def _radical(p, var: str):
    d = p.derivative(var)
    if d.is_zero():
        return RING.constant(1)
    return p / p.gcd(d)


@dataclass
class DifferenceResult:
    holds: bool
    witness: Optional[TowerElem] = None
    bound: int = 0
    dimension: int = 0


def _setting(ctx: SkewContext, field_: str) -> tuple[str, TowerElem]:
    if ctx.level == QTY and field_ == "Qt":
        return "Y", Y
    if ctx.level == QT and field_ == "Q":
        return "t", T
    raise ValueError(f"bounded checks need (QtY, Qt) or (Qt, Q), got ({ctx.level}, {field_})")


def bounded_difference(psi: PsiMap, targets: Sequence, height_bound: int,
                       support=None) -> DifferenceResult:
    """Does psi(beta) in span_F(targets) force beta in F, for bounded beta?

    F is ``psi.kernel`` (Q(t) for level QtY, Q for level Qt).  Candidates
    are beta = P / s^B with B = ``height_bound``, s the squarefree part of
    ``var * support`` (support defaults to the lcm of the target
    denominators) and deg_var P <= B * (1 + deg s); that is every beta
    whose poles lie on s with order at most B and whose polynomial part has
    degree at most B.  The homogeneous system
        sum_k p_k psi(var^k / s^B) - sum_i c_i targets_i = 0
    is solved exactly over F.  Returns a witness beta not in F if one
    exists in the candidate space.
    """
    ctx = psi.ctx
    name, var = _setting(ctx, psi.kernel)
    targets = [as_elem(x) for x in targets]
    B = int(height_bound)
    if support is None:
        support = lcm(x.den for x in targets) if targets else RING.constant(1)
    s = _radical(as_poly(support) * var.num, name)
    sdeg = s.degrees()[0 if name == "Y" else 1]
    top = B * (1 + sdeg)
    sB = TowerElem(s) ** B
    cand = [var ** k / sB for k in range(top, -1, -1)]
    images = [psi_apply(psi, c) for c in cand]
    cols = [-x for x in targets] + images
    rows = _poly_vectors(cols, name, "Q" if psi.kernel == "Q" else "Qt")
    one, zero = (Fraction(1), Fraction(0)) if psi.kernel == "Q" else (ONE, ZERO)
    basis = nullspace(rows, len(cols), one, zero)
    nt = len(targets)
    for v in basis:
        beta = ZERO
        for coef, c in zip(v[nt:], cand):
            if coef:
                beta = beta + as_elem(coef) * c
        if _in_field(beta, name):
            continue
        return DifferenceResult(False, _tidy(beta, name), B, len(cand))
    return DifferenceResult(True, None, B, len(cand))


def _in_field(x: TowerElem, name: str) -> bool:
    if name == "Y":
        return x.level == QT
    return x.is_rational()


def _tidy(beta: TowerElem, name: str) -> TowerElem:
    """Scale a witness so that its leading coefficient in ``name`` is 1."""
    num = beta.num
    if name == "Y":
        lead = y_coefficients(num)[num.degrees()[0]]
    else:
        lead = as_elem(num.leading_coefficient())
    den_lead = y_coefficients(beta.den)[beta.den.degrees()[0]] if name == "Y" else as_elem(beta.den.leading_coefficient())
    return beta * (den_lead / lead)


def check_lemma_difference(alpha, m: int, height_bound: int = 6, ctx: Optional[SkewContext] = None):
    """sigma(beta) - beta in F + F*alpha + ... + F*alpha^m  =>  beta in F?

    Checked over the bounded candidate space of :func:`bounded_difference`
    with F = Q(t) and sigma(Y) = tY unless another context is given.
    Returns True, or a witness beta outside F.
    """
    from .skew_series import heisenberg_context

    ctx = ctx or heisenberg_context()
    alpha = as_elem(alpha)
    field_ = "Qt" if ctx.level == QTY else "Q"
    psi = PsiMap(OreParams(1, -1, 0, 1), ctx, field_)
    targets = [alpha ** i for i in range(m + 1)]
    support = alpha.den
    res = bounded_difference(psi, targets, height_bound, support=support)
    return True if res.holds else res.witness


# -- theorem hypotheses ------------------------------------------------------


@dataclass
class HypothesisCheck:
    name: str
    mode: str
    bound: Optional[int]
    passed: bool
    detail: str = ""

    def as_dict(self):
        return {"name": self.name, "mode": self.mode, "bound": self.bound, "pass": self.passed}


def independent_over(elems: Sequence, over: str) -> bool:
    """Left linear independence over Q or Q(t) of coefficient-field elements."""
    elems = [as_elem(e) for e in elems]
    if any(e.is_zero() for e in elems):
        return False
    if over == "Q":
        rows = _poly_vectors(elems, "t", "Q")
        return rank_exact([list(r) for r in zip(*rows)]) == len(elems)
    rows = _poly_vectors(elems, "Y", "Qt")
    _, piv = rref(rows, len(elems))
    return len(piv) == len(elems)


def check_theorem_hypotheses(alphas: Sequence, psi: PsiMap, height_bound: int = 6,
                             form: str = "pair") -> list[HypothesisCheck]:
    """Hypotheses of the freeness theorems for the given alphas.

    ``form="pair"``: one alpha; {1, alpha, alpha^2} independent over sigma(E)
    and psi(D) meets sigma(E) + sigma(E)alpha + sigma(E)alpha^2 only in 0.
    ``form="family"``: alphas independent over sigma(E) and psi(D) meets
    their sigma(E)-span only in 0.

    E = ker psi is taken from ``psi.kernel`` after a sanity check; sigma(E)
    equals E for the supported kernels (Q is fixed by sigma, and a declared
    Q(t) kernel requires psi(t) = 0).
    """
    psi.check_kernel()
    alphas = [as_elem(a) for a in alphas]
    if form == "pair":
        if len(alphas) != 1:
            raise ValueError("the pair form takes a single alpha")
        targets = [ONE, alphas[0], alphas[0] ** 2]
    else:
        targets = list(alphas)
    over = psi.kernel
    out = [HypothesisCheck("independence over sigma(E)", "exact", None, independent_over(targets, over))]
    ctx = psi.ctx
    p = psi.params
    derivation_only = ctx.level == QT and over == "Q" and (p.a0 == 0 or ctx.sigma.is_identity())
    if derivation_only and ctx.sigma.is_identity() and ctx.delta.t.is_rational() and not ctx.delta.t.is_zero():
        # psi = c * d/dt with c a nonzero constant: image is d/dt(Q(t))
        ok = span_meets_derivatives(targets)
        out.append(HypothesisCheck("psi(D) meets span only in 0", "exact", None, ok,
                                   "Hermite reduction"))
    else:
        res = bounded_difference(psi, targets, height_bound)
        detail = "" if res.holds else f"witness beta = {res.witness}"
        out.append(HypothesisCheck("psi(D) meets span only in 0", "bounded", height_bound, res.holds, detail))
    return out
