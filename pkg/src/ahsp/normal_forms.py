"""Integer matrix normal forms and small number-theory helpers.

Matrices are plain lists of lists of Python ints so that arithmetic is exact
and unbounded. Everything here is sized for desk-scale problems (a few dozen
rows and columns at most).
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

Matrix = List[List[int]]


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``x*a + y*b == g == gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer by trial division."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def prime_power(n: int) -> Tuple[int, int] | None:
    """Return ``(p, a)`` if ``n == p**a`` with ``a >= 1``, else ``None``."""
    if n < 2:
        return None
    f = factorize(n)
    if len(f) != 1:
        return None
    ((p, a),) = f.items()
    return p, a


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(row[t] * b[t][j] for t in range(inner)) for j in range(cols)] for row in a]


def smith_normal_form(m: Sequence[Sequence[int]], ncols: int | None = None):
    """Smith normal form with transforms.

    Returns ``(diag, U, V)`` where ``U`` (rows x rows) and ``V`` (cols x cols)
    are unimodular and ``U @ M @ V`` is the rectangular diagonal matrix whose
    leading entries are ``diag``. ``diag`` has ``min(rows, cols)`` entries,
    all non-negative, with each nonzero entry dividing the next and zeros last.

    ``ncols`` is only needed when ``m`` has no rows.
    """
    a = [list(map(int, row)) for row in m]
    rows = len(a)
    cols = len(a[0]) if rows else (ncols or 0)
    u = identity(rows)
    v = identity(cols)

    def swap_rows(i: int, j: int) -> None:
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i: int, j: int) -> None:
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst: int, src: int, q: int) -> None:
        # row_dst += q * row_src
        ra, rs = a[dst], a[src]
        for c in range(cols):
            ra[c] += q * rs[c]
        ua, us = u[dst], u[src]
        for c in range(rows):
            ua[c] += q * us[c]

    def add_col(dst: int, src: int, q: int) -> None:
        for row in a:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]

    for t in range(min(rows, cols)):
        while True:
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    if a[i][j] and (best is None or abs(a[i][j]) < abs(a[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            if best[0] != t:
                swap_rows(t, best[0])
            if best[1] != t:
                swap_cols(t, best[1])
            p = a[t][t]
            clean = True
            for i in range(t + 1, rows):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
                    clean = clean and a[i][t] == 0
            for j in range(t + 1, cols):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
                    clean = clean and a[t][j] == 0
            if not clean:
                continue
            bad = next(
                (i for i in range(t + 1, rows) for j in range(t + 1, cols) if a[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]

    diag = [a[t][t] for t in range(min(rows, cols))]
    return diag, u, v


def invariant_factors(m: Sequence[Sequence[int]]) -> List[int]:
    """Nonzero, non-unit Smith invariants of ``m``."""
    diag, _, _ = smith_normal_form(m)
    return [d for d in diag if d > 1]
