"""Generator families and proof-identity suites, bound to their contexts.

Every builder returns a :class:`Scenario`: a skew context, the parameters
of Xi = (b0 + b1 X)(a0 + a1 X)^-1, the generator trees, an optional
involution and the list of hypothesis checks that justify freeness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from flint import fmpq_poly

from .derivation_calculus import (
    BadParams,
    HypothesisCheck,
    OreParams,
    PsiMap,
    check_theorem_hypotheses,
    independent_over,
    span_meets_derivatives,
)
from .field_tower import ONE, QT, QTY, T, Y, TowerElem, as_elem
from .ncexpr import (
    X,
    ExprTree,
    InvolutionSpec,
    Scalar,
    add,
    apply_involution,
    evaluate_many,
    inverse,
    involution_type,
    mul,
    power,
    scalar,
    substitute_leaves,
    to_string,
    weyl_involution,
)
from .skew_series import (
    Endo,
    SkewContext,
    heisenberg_context,
    scaling_context,
    series_equal,
    shift_context,
    weyl_context,
)

DEFERRAL = "This is contained in Theorem 1.1 of [FGS13]"


class DegenerateXi(ValueError):
    """g is a scalar multiple of f, so Xi lies in the base field."""


class NotProvidedByPaper(ValueError):
    pass


@dataclass(frozen=True)
class PlanItem:
    """One hypothesis check: ``kind`` is "theorem" or "independence"."""

    label: str
    kind: str
    alphas: tuple
    form: str = "family"
    kernel: str = "Q"
    ctx: Optional[SkewContext] = None


@dataclass
class Scenario:
    name: str
    context: SkewContext
    params: OreParams
    generators: list
    involution: Optional[InvolutionSpec] = None
    declared_symmetric: bool = False
    plan: list = field(default_factory=list)
    default_len: int = 3
    default_order: int = 16
    notes: str = ""

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a scenario needs at least one generator")

    def with_order(self, order: int) -> "Scenario":
        return replace(self, context=self.context.with_order(order))

    def generator_texts(self) -> list[str]:
        return [to_string(g) for g in self.generators]

    def run_hypotheses(self, height_bound: int = 6) -> list[HypothesisCheck]:
        out = []
        for item in self.plan:
            ctx = item.ctx or self.context
            if item.kind == "independence":
                ok = independent_over(item.alphas, item.kernel)
                out.append(HypothesisCheck(item.label, "exact", None, ok))
                continue
            psi = PsiMap(self.params, ctx, item.kernel)
            for chk in check_theorem_hypotheses(item.alphas, psi, height_bound, form=item.form):
                chk.name = f"{item.label}: {chk.name}"
                out.append(chk)
        return out

    def check_symmetry(self, cache: Optional[dict] = None) -> Optional[bool]:
        """expr_equal(g, g*) for every generator; None without an involution."""
        if self.involution is None:
            return None
        images = [apply_involution(g, self.involution) for g in self.generators]
        vals = evaluate_many(list(self.generators) + images, self.context, cache)
        n = len(self.generators)
        return all(series_equal(vals[i], vals[n + i]) for i in range(n))


def build_xi(params: OreParams) -> ExprTree:
    """Xi = g f^-1 with f = a0 + a1 X and g = b0 + b1 X."""
    if params.a1 == 0:
        raise BadParams("a1 must be nonzero")
    if params.a0 * params.b1 - params.a1 * params.b0 == 0:
        raise DegenerateXi("g is proportional to f, so Xi is a scalar")
    f = add(scalar(params.a0), mul(scalar(params.a1), X))
    g = add(scalar(params.b0), mul(scalar(params.b1), X))
    return mul(g, inverse(f))


WEYL_PARAMS = OreParams(0, 1, 1, 0)
GEOMETRIC_PARAMS = OreParams(1, -1, 0, 1)


def scenario_weyl_ml(order: int = 20) -> Scenario:
    ctx = weyl_context(order)
    xi = build_xi(WEYL_PARAMS)
    alphas = (1 / T, 1 / (T * (1 - T)))
    gens = [mul(Scalar(a), xi) for a in alphas]
    plan = [PlanItem("alphas {1/t, 1/(t(1-t))}", "theorem", alphas, "family", "Q")]
    return Scenario("weyl-ml", ctx, WEYL_PARAMS, gens, plan=plan, default_len=3, default_order=20)


def weyl_symmetric_letters():
    """a, b and the letters alpha = a X^-1 a, beta = b X^-1 a."""
    a = T / (1 + T ** 2)
    b = 1 / (1 + T)
    xinv = inverse(X)
    alpha = mul(Scalar(a), xinv, Scalar(a))
    beta = mul(Scalar(b), xinv, Scalar(a))
    return a, b, alpha, beta


def scenario_weyl_symmetric(order: int = 20) -> Scenario:
    ctx = weyl_context(order)
    a, b, alpha, beta = weyl_symmetric_letters()
    gens = [mul(alpha, alpha), mul(alpha, beta)]
    plan = [PlanItem("{a^2, ab}", "theorem", (a * a, a * b), "family", "Q")]
    return Scenario("weyl-symmetric", ctx, WEYL_PARAMS, gens, weyl_involution(), True, plan,
                    default_len=3, default_order=20)


def _pair(alpha: TowerElem, xi: ExprTree):
    return mul(Scalar(alpha), xi), mul(xi, Scalar(alpha))


def scenario_heisenberg(kind: str, p: int = 1, q: int = 1, order: int = 16) -> Scenario:
    """Symmetric free pairs for the involution types of the Heisenberg ring."""
    kind = str(kind).upper()
    if kind == "II":
        raise NotProvidedByPaper(DEFERRAL)
    ctx = heisenberg_context(order)
    xi = build_xi(GEOMETRIC_PARAMS)
    zeta, eta = T ** p, T ** q
    inv = involution_type(kind, p, q)
    name = f"heisenberg-{kind}"
    if kind == "I":
        if (1 + zeta).is_zero() or (1 + eta).is_zero():
            raise BadParams("1 + zeta and 1 + eta must be nonzero")
        alpha = (1 - Y).inv()
        A, B = _pair(alpha, xi)
        twist = lambda u: substitute_leaves(u, mul(Scalar(1 + zeta), X), (1 + eta) * Y)
        gens = [twist(mul(A, B)), twist(mul(B, A))]
        plan = [PlanItem("alpha = (1-Y)^-1", "theorem", (alpha,), "pair", "Qt")]
    elif kind == "III":
        alpha = Y ** 2 * (zeta - Y ** 2) ** -2
        A, B = _pair(alpha, xi)
        gens = [mul(A, B), mul(B, A)]
        # the lemma applies to gamma = Z (zeta - Z)^-2 under Z -> t^2 Z, with Z = Y^2
        tau = SkewContext(QTY, sigma=Endo(T, T ** 2 * Y), sigma_inv=Endo(T, Y / T ** 2), order=order)
        gamma = Y * (zeta - Y) ** -2
        plan = [PlanItem("gamma = Z(zeta-Z)^-2, Z = Y^2", "theorem", (gamma,), "pair", "Qt", tau)]
    elif kind == "IV":
        alpha = Y * (1 - Y).inv()
        A, B = _pair(alpha, xi)
        twist = lambda u: substitute_leaves(u, X, zeta * Y)
        gens = [twist(A), twist(B)]
        plan = [PlanItem("alpha = Y(1-Y)^-1", "theorem", (alpha,), "pair", "Qt")]
    else:
        raise ValueError(f"unknown involution type {kind!r}")
    return Scenario(name, ctx, GEOMETRIC_PARAMS, gens, inv, True, plan, default_len=3, default_order=16,
                    notes=f"zeta = t^{p}, eta = t^{q}")


def _is_prime_power_den(alpha: TowerElem) -> bool:
    from .derivation_calculus import _to_upoly

    den = _to_upoly(alpha.den)
    if den.degree() < 1:
        return False
    _, factors = den.factor()
    return len(factors) == 1


def scenario_prop51(case: str, m: int = 2, lam=2, b=1, alpha=None, order: int = 16) -> Scenario:
    """Families alpha_j X(1-X)^-1, j = 1..m, over Q(t) with a twist sigma.

    Case "i": sigma(t) = t + 1 (the polynomial variable plays the role of u)
    and alpha_j = alpha^j for alpha with prime-power denominator.
    Case "ii": sigma(t) = lam * t and alpha_j = (t - b)^-j.
    """
    if m < 1:
        raise BadParams("m must be positive")
    xi = build_xi(GEOMETRIC_PARAMS)
    if case == "i":
        ctx = shift_context(order)
        alpha = as_elem(alpha) if alpha is not None else 1 / T ** 2
        if alpha.level != QT or alpha.is_poly():
            raise BadParams("alpha must be a non-polynomial element of Q(t)")
        if not _is_prime_power_den(alpha):
            raise BadParams("the denominator of alpha must be a prime power")
        alphas = tuple(alpha ** j for j in range(1, m + 1))
        label = f"alpha^j, alpha = {alpha}"
    elif case == "ii":
        lam = Fraction(lam)
        if lam in (0, 1, -1):
            raise BadParams("lambda must be nonzero and not a root of unity")
        ctx = scaling_context(lam, order)
        alphas = tuple((T - as_elem(Fraction(b))) ** -j for j in range(1, m + 1))
        label = f"(t - {Fraction(b)})^-j"
    else:
        raise ValueError(f"unknown case {case!r}")
    gens = [mul(Scalar(a), xi) for a in alphas]
    plan = [PlanItem(label, "theorem", alphas, "family", "Q")]
    return Scenario(f"prop51-{case}", ctx, GEOMETRIC_PARAMS, gens, plan=plan, default_len=3, default_order=16)


# -- proof identities --------------------------------------------------------


@dataclass
class IdentityReport:
    params: tuple
    checked: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches


def v_tree(I: Sequence[int], xi: ExprTree, alpha: TowerElem) -> ExprTree:
    """V_I = Xi a^i1 Xi a^i2 ... Xi a^it Xi a, and V_() = Xi."""
    if not I:
        return xi
    parts = [xi]
    for i in I:
        parts += [Scalar(alpha ** i), xi]
    parts.append(Scalar(alpha))
    return mul(*parts)


def r_tree(I: Sequence[int], xi: ExprTree, alpha: TowerElem) -> ExprTree:
    """R_I = a^i1 Xi a^i2 Xi ... a^it Xi a."""
    parts = []
    for i in I:
        parts += [Scalar(alpha ** i), xi]
    parts.append(Scalar(alpha))
    return mul(*parts)


def _tail(I, xi, alpha) -> ExprTree:
    """alpha^i1 V_I' with the trailing alpha kept when I' is empty."""
    head = Scalar(alpha ** I[0])
    if len(I) == 1:
        return mul(head, xi, Scalar(alpha))
    return mul(head, v_tree(I[1:], xi, alpha))


def identity_pairs(params: OreParams, ctx: SkewContext, alpha, max_len: int):
    """(name, lhs, rhs) for every identity and index tuple up to ``max_len``."""
    alpha = as_elem(alpha)
    cond = params.condition(ctx)
    use4 = params.b1 == 0
    use8 = params.b0 == 0 and ctx.delta.is_zero() and params.a0 != 0
    if not (use4 or use8):
        raise BadParams(f"params {params.as_tuple()} satisfy neither identity precondition")
    xi = build_xi(params)
    a0, a1, b0, b1 = (as_elem(x) for x in params.as_tuple())
    xinv = inverse(X)
    out = []
    v0 = xi
    out.append(("()", "Xi^-1 V = 1", mul(inverse(xi), v0), Scalar(ONE)))
    if use4:
        out.append(("()", "X V = -a0/a1 V + b0/a1", mul(X, v0), add(mul(Scalar(-a0 / a1), v0), Scalar(b0 / a1))))
    if use8:
        out.append(("()", "X^-1 V = -a1/a0 V + b1/a0", mul(xinv, v0), add(mul(Scalar(-a1 / a0), v0), Scalar(b1 / a0))))
    for n in range(1, max_len + 1):
        for I in itertools.product((0, 1, 2), repeat=n):
            tag = "(" + ",".join(map(str, I)) + ")"
            v = v_tree(I, xi, alpha)
            r = r_tree(I, xi, alpha)
            tail = _tail(I, xi, alpha)
            out.append((tag, "Xi^-1 V = R", mul(inverse(xi), v), r))
            out.append((tag, "R = a^i1 V'", r, tail))
            if use4:
                out.append((tag, "X V = -a0/a1 V + b0/a1 a^i1 V'", mul(X, v),
                            add(mul(Scalar(-a0 / a1), v), mul(Scalar(b0 / a1), tail))))
            if use8:
                out.append((tag, "X^-1 V = -a1/a0 V + b1/a0 a^i1 V'", mul(xinv, v),
                            add(mul(Scalar(-a1 / a0), v), mul(Scalar(b1 / a0), tail))))
    return out


def verify_proof_identities(params: OreParams, ctx: SkewContext, alpha, max_len: int = 3) -> IdentityReport:
    pairs = identity_pairs(params, ctx, alpha, max_len)
    cache: dict = {}
    report = IdentityReport(params.as_tuple())
    for tag, name, lhs, rhs in pairs:
        u, v = evaluate_many([lhs, rhs], ctx, cache)
        report.checked += 1
        if not series_equal(u, v):
            report.mismatches.append((tag, name))
    return report


TEMPLATES = {
    # (params, context builder, alpha, default order)
    "i": (WEYL_PARAMS, weyl_context, T / (1 + T ** 2), 12),
    "ii": (GEOMETRIC_PARAMS, heisenberg_context, (1 - Y).inv(), 10),
}


def identity_template(name: str, order: Optional[int] = None):
    params, mk, alpha, default = TEMPLATES[name]
    return params, mk(order or default), alpha
