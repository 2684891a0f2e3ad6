"""Smith normal form and exact linear algebra over the supported rings.

Matrices are lists of lists of RElem.  The SNF drives unimodularity tests,
orthogonal complements, dual-witness solves and integral homology.
"""

from __future__ import annotations

from .rings import RElem, RingCtx, RingError


def identity(ring: RingCtx, n: int):
    return [[ring.one if i == j else ring.zero for j in range(n)] for i in range(n)]


def zeros(ring: RingCtx, m: int, n: int):
    return [[ring.zero for _ in range(n)] for _ in range(m)]


def mat_mul(A, B):
    m, k = len(A), len(B)
    if m == 0 or k == 0:
        return [[] for _ in range(m)]
    n = len(B[0])
    assert len(A[0]) == k
    out = []
    for i in range(m):
        row = []
        Ai = A[i]
        for j in range(n):
            acc = None
            for t in range(k):
                term = Ai[t] * B[t][j]
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return out


def mat_vec(A, v):
    return [sum_elems([A[i][t] * v[t] for t in range(len(v))]) for i in range(len(A))]


def sum_elems(elems):
    acc = elems[0]
    for e in elems[1:]:
        acc = acc + e
    return acc


def transpose(A):
    return [list(row) for row in zip(*A)]


def mat_eq(A, B):
    return len(A) == len(B) and all(ra == rb for ra, rb in zip(A, B))


def block_diag(ring, blocks):
    n = sum(len(b) for b in blocks)
    out = zeros(ring, n, n)
    off = 0
    for b in blocks:
        k = len(b)
        for i in range(k):
            for j in range(k):
                out[off + i][off + j] = b[i][j]
        off += k
    return out


def determinant(ring: RingCtx, A) -> RElem:
    """Fraction-free Bareiss determinant; exact over any of the supported domains."""
    n = len(A)
    if n == 0:
        return ring.one
    M = [row[:] for row in A]
    sign = 1
    prev = ring.one
    for k in range(n - 1):
        if M[k][k].is_zero():
            for i in range(k + 1, n):
                if not M[i][k].is_zero():
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return ring.zero
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[k][k] * M[i][j] - M[i][k] * M[k][j]).exact_div(prev)
        prev = M[k][k]
    d = M[n - 1][n - 1]
    return -d if sign < 0 else d


def _canonical_unit(x: RElem) -> RElem:
    """Unit u such that u*x is the canonical associate of x (deterministic)."""
    ring = x.ring
    if x.is_zero():
        return ring.one
    if ring.kind == "gf":
        return x.unit_inverse()
    if ring.kind == "Z":
        return ring.one if x.coords[0] > 0 else -ring.one
    units = ring.torsion_units() if ring.D < 0 else [ring.one, -ring.one]

    def key(y: RElem):
        first = next(c for c in y.coords if c != 0)
        return (0 if first > 0 else 1, y.coords)

    best = min(units, key=lambda u: key(u * x))
    return best


def _balancing_unit(ring: RingCtx, elems) -> RElem:
    """Unit u minimizing the coordinate size of u*elems (real quadratic rings).

    Coordinate growth along unit orbits is what makes naive Smith reduction
    explode over rings with infinite unit groups; rescaling whole rows and
    columns by units is a legal elementary operation and keeps entries small.
    """
    if ring.kind != "quadratic" or ring.D < 0:
        return ring.one
    fu = ring.fundamental_unit()
    if fu is None:
        return ring.one

    def size(w):
        return sum(max(abs(c) for c in (w * e).coords) for e in elems if not e.is_zero())

    if not any(not e.is_zero() for e in elems):
        return ring.one
    best = ring.one
    cur = size(best)
    for gen in (fu, fu.unit_inverse()):
        w = best
        while True:
            w2 = w * gen
            s2 = size(w2)
            if s2 < cur:
                best, cur, w = w2, s2, w2
            else:
                break
    return best


def smith_normal_form(ring: RingCtx, A):
    """Return (U, S, V) with U*A*V = S diagonal, s_i | s_{i+1}, U, V invertible.

    Diagonal entries are canonically normalized: positive over Z, canonical
    associate over quadratic rings, 1 over fields.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    S = [[e for e in row] for row in A]
    U = identity(ring, m)
    V = identity(ring, n)
    needs_balance = ring.kind == "quadratic" and ring.D > 0

    def row_sub(i, t, q):  # row_i -= q * row_t, mirrored on U
        S[i] = [a - q * b for a, b in zip(S[i], S[t])]
        U[i] = [a - q * b for a, b in zip(U[i], U[t])]

    def col_sub(j, t, q):
        for row in S:
            row[j] = row[j] - q * row[t]
        for row in V:
            row[j] = row[j] - q * row[t]

    def row_swap(i, t):
        S[i], S[t] = S[t], S[i]
        U[i], U[t] = U[t], U[i]

    def col_swap(j, t):
        for row in S:
            row[j], row[t] = row[t], row[j]
        for row in V:
            row[j], row[t] = row[t], row[j]

    def row_add(i, t):  # row_i += row_t
        S[i] = [a + b for a, b in zip(S[i], S[t])]
        U[i] = [a + b for a, b in zip(U[i], U[t])]

    def rebalance(t):
        if not needs_balance:
            return
        for i in range(t, m):
            w = _balancing_unit(ring, S[i])
            if w != ring.one:
                S[i] = [w * e for e in S[i]]
                U[i] = [w * e for e in U[i]]
        for j in range(t, n):
            w = _balancing_unit(ring, [S[i][j] for i in range(m)])
            if w != ring.one:
                for i in range(m):
                    S[i][j] = w * S[i][j]
                for i in range(n):
                    V[i][j] = w * V[i][j]

    def select_pivot(t) -> bool:
        """Move the minimal-norm nonzero entry of the trailing block to (t, t)."""
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if not S[i][j].is_zero():
                    nm = S[i][j].euclidean_norm()
                    if best is None or nm < best[0]:
                        best = (nm, i, j)
        if best is None:
            return False
        _, bi, bj = best
        if bi != t:
            row_swap(bi, t)
        if bj != t:
            col_swap(bj, t)
        return True

    t = 0
    while t < min(m, n):
        rebalance(t)
        if not select_pivot(t):
            break
        while True:
            # clear row/column t by Euclidean division; re-pivot on the smallest
            # entry after every dirty pass so the pivot norm plunges gcd-fashion
            dirty = False
            for i in range(t + 1, m):
                if S[i][t].is_zero():
                    continue
                q, r = divmod(S[i][t], S[t][t])
                row_sub(i, t, q)
                if not r.is_zero():
                    dirty = True
            for j in range(t + 1, n):
                if S[t][j].is_zero():
                    continue
                q, r = divmod(S[t][j], S[t][t])
                col_sub(j, t, q)
                if not r.is_zero():
                    dirty = True
            if dirty:
                rebalance(t)
                select_pivot(t)
                continue
            # pivot must divide the rest of the block for the divisor chain
            stained = False
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if not (S[i][j] % S[t][t]).is_zero():
                        row_add(t, i)
                        stained = True
                        break
                if stained:
                    break
            if not stained:
                break
        t += 1

    # canonical normalization of the diagonal by unit column scalings
    for k in range(min(m, n)):
        if S[k][k].is_zero():
            continue
        u = _canonical_unit(S[k][k])
        if u != ring.one:
            for i in range(m):
                S[i][k] = S[i][k] * u
            for i in range(n):
                V[i][k] = V[i][k] * u
    return U, S, V


def elementary_divisors(ring: RingCtx, A):
    _, S, _ = smith_normal_form(ring, A)
    return [S[i][i] for i in range(min(len(S), len(S[0]) if S else 0)) if not S[i][i].is_zero()]


def rank(ring: RingCtx, A) -> int:
    return len(elementary_divisors(ring, A))


def is_invertible(ring: RingCtx, A) -> bool:
    return len(A) == len(A[0]) and determinant(ring, A).is_unit()


def inverse(ring: RingCtx, A):
    """Inverse of a matrix invertible over the ring (det a unit)."""
    n = len(A)
    U, S, V = smith_normal_form(ring, A)
    for i in range(n):
        if not S[i][i].is_unit():
            raise RingError("matrix is not invertible over the ring")
    # A = U^-1 S V^-1, so A^-1 = V S^-1 U
    Sinv = [[S[i][i].unit_inverse() if i == j else ring.zero for j in range(n)] for i in range(n)]
    return mat_mul(mat_mul(V, Sinv), U)


def solve(ring: RingCtx, A, b):
    """One solution x of A x = b over the ring, or None if none exists."""
    m = len(A)
    n = len(A[0]) if m else 0
    U, S, V = smith_normal_form(ring, A)
    c = mat_vec(U, b)
    y = []
    for i in range(n):
        si = S[i][i] if i < m else ring.zero
        if i < m and not si.is_zero():
            q, r = divmod(c[i], si)
            if not r.is_zero():
                return None
            y.append(q)
        else:
            y.append(ring.zero)
    for i in range(n, m):
        if not c[i].is_zero():
            return None
    # also check rows i < n where s_i = 0
    for i in range(min(m, n)):
        if S[i][i].is_zero() and not c[i].is_zero():
            return None
    return mat_vec(V, y)


def kernel_basis(ring: RingCtx, A):
    """Basis (list of column vectors) of ker(A); a direct summand over a PID."""
    m = len(A)
    n = len(A[0]) if m else 0
    _, S, V = smith_normal_form(ring, A)
    cols = []
    for j in range(n):
        sj = S[j][j] if j < m else ring.zero
        if j >= m or sj.is_zero():
            cols.append([V[i][j] for i in range(n)])
    return cols
