"""Bounded-length freeness certificates by exact rank.

All words of length <= L in the generators are expanded to truncated
series, flattened to vectors over Q and ranked.  Truncation and flattening
are Q-linear, so independent flattened vectors prove that the words
themselves are independent; "certified" is therefore sound for every L and
N, while "inconclusive" never asserts a dependency in the division ring.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from flint import nmod_mat

from .field_tower import ONE, lcm, monomials
from .linalg import DEFAULT_PRIME, clear_rows, dependent_subset, rref
from .ncexpr import ExprTree, Scalar, _eval, mul
from .skew_series import ContextMismatch, TruncSeries


@dataclass(frozen=True)
class WordIndex:
    letters: tuple = ()

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return "1" if not self.letters else "".join(f"g{i}" for i in self.letters)


@dataclass
class FreenessReport:
    scenario: str
    generators: list
    max_word_length: int
    truncation_order: int
    word_count: int
    rank: int
    matrix_dims: tuple
    status: str
    elapsed_ms: int = 0
    hypothesis_checks: list = field(default_factory=list)
    symmetric_checked: bool = False
    symmetric_holds: Optional[bool] = None
    dependent_words: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    certificate_order: Optional[int] = None
    strategy: str = "adaptive"

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "generators": list(self.generators),
            "symmetricChecked": self.symmetric_checked,
            "symmetricHolds": self.symmetric_holds,
            "hypothesisChecks": [c.as_dict() for c in self.hypothesis_checks],
            "maxWordLength": self.max_word_length,
            "truncationOrder": self.truncation_order,
            "wordCount": self.word_count,
            "rank": self.rank,
            "status": self.status,
            "matrixDims": list(self.matrix_dims),
            "elapsedMs": self.elapsed_ms,
            "certificateOrder": self.certificate_order,
            "strategy": self.strategy,
        }


def enumerate_words(generators: Sequence[ExprTree], L: int):
    """All (WordIndex, tree) of length 0..L, shortest first, lexicographic."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    if not generators:
        raise ValueError("need at least one generator")
    out = [(WordIndex(()), Scalar(ONE))]
    n = len(generators)
    for k in range(1, L + 1):
        for letters in itertools.product(range(1, n + 1), repeat=k):
            out.append((WordIndex(letters), mul(*(generators[i - 1] for i in letters))))
    return out


def word_count(n: int, L: int) -> int:
    return L + 1 if n == 1 else (n ** (L + 1) - 1) // (n - 1)


# -- series of words ---------------------------------------------------------


def _word_series(generators, L, ctx, jobs: int = 1):
    """Series of all words, built by extending suffixes one letter at a time.

    Generators are evaluated with the guarded evaluator; a word g_a w is
    then g_a * w, computed at a working order with a guard band so that
    every result is known through order N.
    """
    n_order = ctx.order
    guard = 2
    while True:
        work = ctx.with_order(n_order + guard)
        gens = _eval_gens(generators, work)
        words = {(): TruncSeries.constant(work, ONE)}
        layer = [()]
        for k in range(1, L + 1):
            jobs_list = [(a,) + w for a in range(1, len(generators) + 1) for w in layer]
            results = _products(jobs_list, gens, words, jobs)
            words.update(results)
            layer = jobs_list
        short = [s.absprec for s in words.values() if s.absprec is not None and s.absprec < n_order]
        if not short:
            return {w: s.truncate(n_order) for w, s in words.items()}
        guard += guard + (n_order - min(short))


def _eval_gens(generators, work):
    cache: dict = {}
    return [_eval(g, work, cache) for g in generators]


_POOL_STATE: dict = {}


def _pool_product(key):
    gens, words = _POOL_STATE["gens"], _POOL_STATE["words"]
    return key, gens[key[0] - 1] * words[key[1:]]


def _products(keys, gens, words, jobs):
    if jobs <= 1 or len(keys) < 2:
        return {k: gens[k[0] - 1] * words[k[1:]] for k in keys}
    import multiprocessing as mp

    _POOL_STATE["gens"], _POOL_STATE["words"] = gens, words
    try:
        ctx = mp.get_context("fork")
    except ValueError:
        return {k: gens[k[0] - 1] * words[k[1:]] for k in keys}
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as ex:
        return dict(ex.map(_pool_product, keys, chunksize=1))


# -- flattening ----------------------------------------------------------------


def coordinate_block(series_list: Sequence[TruncSeries], degree: int):
    """Columns for one X-degree: clear the common denominator, list monomials.

    Returns (column keys, rows) where rows[i][j] is the coefficient of
    monomial ``keys[j]`` = (X-degree, Y-degree, t-degree) in series i.
    """
    coeffs = [s.coefficient(degree) for s in series_list]
    nonzero = [c for c in coeffs if not c.is_zero()]
    if not nonzero:
        return [], [[] for _ in series_list]
    L = lcm(c.den for c in nonzero)
    mons = []
    for c in coeffs:
        if c.is_zero():
            mons.append({})
        else:
            mons.append(monomials(c.num * (L / c.den)))
    keys = sorted(set().union(*mons))
    rows = [[m.get(k, Fraction(0)) for k in keys] for m in mons]
    return [(degree, j, i) for (i, j) in keys], rows


def flat_degrees(series_list: Sequence[TruncSeries]) -> list[int]:
    """X-degrees carrying a coefficient in some series, leading first."""
    if not series_list:
        return []
    ctx = series_list[0].ctx
    for s in series_list:
        if s.ctx.ring_key != ctx.ring_key:
            raise ContextMismatch("series live in different skew contexts")
    degs = set()
    for s in series_list:
        degs.update(s.coeffs)
    return sorted(degs, key=ctx.val)


def flatten(series_list: Sequence[TruncSeries]):
    """Exact matrix over Q (row i = series i) and its column keys."""
    keys, rows = [], [[] for _ in series_list]
    for d in flat_degrees(series_list):
        k, block = coordinate_block(series_list, d)
        keys += k
        for r, b in zip(rows, block):
            r.extend(b)
    return rows, keys


# -- incremental rank ----------------------------------------------------------


class _ModularRank:
    """Row rank mod p of a matrix fed in column blocks.

    Only a column basis of the blocks seen so far is retained: the column
    space (hence the rank and the row dependencies) is unchanged.
    """

    def __init__(self, nrows: int, p: int):
        self.n = nrows
        self.p = p
        self.cols: list[list[int]] = []
        self.rank = 0
        self.width = 0

    def feed(self, rows: Sequence[Sequence[Fraction]]) -> bool:
        """Add a block; False if some denominator vanishes mod p."""
        p = self.p
        width = len(rows[0]) if rows else 0
        self.width += width
        if not width:
            return True
        block = []
        for j in range(width):
            col = []
            for i in range(self.n):
                x = rows[i][j]
                if x.denominator % p == 0:
                    return False
                col.append(x.numerator * pow(x.denominator, -1, p) % p if x else 0)
            block.append(col)
        cols = self.cols + block
        m = nmod_mat([[c[i] for c in cols] for i in range(self.n)], p)
        red, rank = m.rref()
        keep = []
        j = 0
        for i in range(rank):
            while int(red[i, j]) == 0:
                j += 1
            keep.append(j)
        self.cols = [cols[j] for j in keep]
        self.rank = rank
        return True


class _ExactRank:
    """Exact counterpart of :class:`_ModularRank` over Q."""

    def __init__(self, nrows: int):
        self.n = nrows
        self.cols: list[list[Fraction]] = []
        self.rank = 0
        self.width = 0

    def feed(self, rows):
        width = len(rows[0]) if rows else 0
        self.width += width
        if not width:
            return
        block = [[rows[i][j] for i in range(self.n)] for j in range(width)]
        cols = self.cols + block
        # column basis = pivot columns of the row-reduced matrix
        _, piv = rref([[c[i] for c in cols] for i in range(self.n)], len(cols))
        self.cols = [cols[j] for j in piv]
        self.rank = len(piv)

    def dependent_rows(self) -> list[int]:
        if not self.cols:
            return [0] if self.n else []
        rows = [[c[i] for c in self.cols] for i in range(self.n)]
        return dependent_subset(clear_rows(rows))


def rank_of_series(series_list: Sequence[TruncSeries], exact: bool = False):
    """(rank, columns examined, dependent row indices) of the flattened matrix.

    Column blocks are added one X-degree at a time.  Once the modular rank
    reaches the row count the matrix has full row rank over Q and the
    remaining blocks cannot change that.  A deficient modular rank is
    recomputed exactly.
    """
    n = len(series_list)
    degrees = flat_degrees(series_list)
    blocks = []
    if not exact:
        p = DEFAULT_PRIME
        mod = _ModularRank(n, p)
        for d in degrees:
            _, rows = coordinate_block(series_list, d)
            blocks.append(rows)
            if not mod.feed(rows):
                break  # p divides a denominator: fall back to exact ranks
            if mod.rank == n:
                return n, mod.width, []
    ex = _ExactRank(n)
    cached = iter(blocks)
    for d in degrees:
        rows = next(cached, None)
        if rows is None:
            _, rows = coordinate_block(series_list, d)
        ex.feed(rows)
        if ex.rank == n:
            return n, ex.width, []
    return ex.rank, ex.width, ex.dependent_rows()


# -- certification ---------------------------------------------------------------


def order_schedule(N: int, start: int = 2) -> list[int]:
    """Orders tried by the adaptive strategy: start, 2*start, ..., N."""
    out = []
    k = max(1, min(start, N))
    while k < N:
        out.append(k)
        k *= 2
    out.append(N)
    return out


def certify_freeness(scenario, L: Optional[int] = None, N: Optional[int] = None, jobs: int = 1,
                     height_bound: int = 6, hypotheses: bool = True, symmetry: bool = True,
                     strategy: str = "adaptive") -> FreenessReport:
    """Certify Q-linear independence of all words of length <= L at order N.

    The coefficient of X^d in a word does not depend on the truncation
    order, so the flattened matrix at an order N' < N is a column
    submatrix of the one at N and full rank at N' proves full rank at N.
    ``strategy="adaptive"`` therefore tries the orders of
    :func:`order_schedule` and stops at the first full-rank one;
    ``"full"`` computes every series down to X^-N.  When the rank is
    deficient both strategies end with the complete computation at N, so
    the reported rank is always the exact rank at order N.
    """
    if strategy not in ("adaptive", "full"):
        raise ValueError("strategy must be 'adaptive' or 'full'")
    t0 = time.perf_counter()
    L = scenario.default_len if L is None else L
    N = scenario.default_order if N is None else N
    sc = scenario.with_order(N)
    timings = {}
    checks = sc.run_hypotheses(height_bound) if hypotheses else []
    timings["hypotheses"] = time.perf_counter() - t0
    sym_checked = bool(symmetry and sc.involution is not None)
    sym = sc.check_symmetry() if sym_checked else None
    timings["symmetry"] = time.perf_counter() - t0 - timings["hypotheses"]
    t1 = time.perf_counter()
    orders = order_schedule(N) if strategy == "adaptive" else [N]
    n = word_count(len(sc.generators), L)
    for used in orders:
        series = _word_series(sc.generators, L, sc.context.with_order(used), jobs)
        order = sorted(series, key=lambda w: (len(w), w))
        rank, width, dep = rank_of_series([series[w] for w in order])
        if rank == n:
            break
    timings["series+rank"] = time.perf_counter() - t1
    status = "certified" if rank == n else "inconclusive"
    return FreenessReport(
        scenario=sc.name,
        generators=sc.generator_texts(),
        max_word_length=L,
        truncation_order=N,
        word_count=n,
        rank=rank,
        matrix_dims=(n, width),
        status=status,
        elapsed_ms=int((time.perf_counter() - t0) * 1000),
        hypothesis_checks=checks,
        symmetric_checked=sym_checked,
        symmetric_holds=sym,
        dependent_words=[str(WordIndex(order[i])) for i in dep],
        timings=timings,
        certificate_order=used,
        strategy=strategy,
    )
