"""Exact linear algebra helpers: field elimination, Bareiss rank, modular rank."""

from __future__ import annotations

import math
import random
from fractions import Fraction
from typing import Sequence

from flint import nmod_mat

# a fixed 62-bit prime; re-drawn only when it divides a cleared denominator
DEFAULT_PRIME = (1 << 62) - 57


def _is_zero(x) -> bool:
    z = getattr(x, "is_zero", None)
    return z() if callable(z) else x == 0


def rref(rows: Sequence[Sequence], ncols: int | None = None):
    """Reduced row echelon form over an exact field.

    Entries may be Fractions or any field element supporting + - * / and
    ``is_zero``.  Returns (reduced rows, pivot columns).
    """
    m = [list(r) for r in rows]
    if not m:
        return [], []
    ncols = len(m[0]) if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if not _is_zero(m[i][c])), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and not _is_zero(m[i][c]):
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows: Sequence[Sequence], ncols: int, one=Fraction(1), zero=Fraction(0)) -> list[list]:
    """Basis of {x : A x = 0}, one vector per free column (in column order)."""
    red, pivots = rref(rows, ncols) if rows else ([], [])
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def clear_rows(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    """Scale each row by the lcm of its denominators (rank preserving)."""
    out = []
    for r in rows:
        d = 1
        for x in r:
            d = math.lcm(d, Fraction(x).denominator)
        out.append([int(Fraction(x) * d) for x in r])
    return out


def rank_bareiss(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    m = [list(map(int, r)) for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    prev = 1
    for c in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][c]
        for i in range(rank + 1, len(m)):
            a = m[i][c]
            m[i] = [(p * x - a * y) // prev for x, y in zip(m[i], m[rank])]
        prev = p
        rank += 1
        if rank == len(m):
            break
    return rank


def rank_mod(rows: Sequence[Sequence[int]], p: int) -> int:
    if not rows or not rows[0]:
        return 0
    return nmod_mat([[x % p for x in r] for r in rows], p).rank()


def _is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def pick_prime(avoid: Sequence[int] = (), seed: int = 0) -> int:
    """A 62-bit prime dividing none of ``avoid``."""
    p = DEFAULT_PRIME
    rng = random.Random(seed)
    while any(a % p == 0 for a in avoid if a):
        while True:
            p = rng.randrange(1 << 61, 1 << 62) | 1
            if _is_probable_prime(p):
                break
    return p


def rank_exact(rows: Sequence[Sequence], modular: bool = True) -> int:
    """Rank over Q of a rational matrix.

    With ``modular`` the rows are cleared to integers and reduced modulo a
    prime; a full modular rank certifies full rank over Q (reduction can only
    lose rank).  Anything short of full rank is recomputed exactly.
    """
    if not rows:
        return 0
    ints = clear_rows(rows)
    full = min(len(ints), len(ints[0]) if ints[0] else 0)
    if modular and full:
        if rank_mod(ints, pick_prime()) == full:
            return full
    return rank_bareiss(ints)


def dependent_subset(rows: Sequence[Sequence[int]], p: int | None = None) -> list[int]:
    """Indices of a minimal linearly dependent set of rows (empty if independent).

    Rows are added one at a time; the first row that falls into the span of
    its predecessors closes a dependency, whose support is then minimal
    among the rows involved.
    """
    basis: list[list] = []
    for i, r in enumerate(rows):
        cand = [Fraction(x) for x in r] + [Fraction(int(j == i)) for j in range(len(rows))]
        for b, piv in basis:
            if cand[piv]:
                f = cand[piv]
                cand = [x - f * y for x, y in zip(cand, b)]
        lead = next((c for c in range(len(r)) if cand[c]), None)
        if lead is None:
            return [j for j in range(len(rows)) if cand[len(r) + j]]
        inv = 1 / cand[lead]
        cand = [x * inv for x in cand]
        for k, (b, piv) in enumerate(basis):
            if b[lead]:
                f = b[lead]
                basis[k] = ([x - f * y for x, y in zip(b, cand)], piv)
        basis.append((cand, lead))
    return []
