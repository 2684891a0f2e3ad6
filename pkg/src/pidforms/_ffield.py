"""Fast integer-table arithmetic for forms over small finite fields.

Vectors are encoded as base-q integers (digit i = coordinate i); forms carry
precomputed Gram-action tables.  This is the hot layer under the poset and
group enumerations; the exact RElem layer stays authoritative for
certificates.
"""

from __future__ import annotations

from .forms import GramForm
from .rings import RingCtx, mod2_structure


class FF:
    """A small finite field with dense add/mul/inv tables, elements 0..q-1.

    Element indices agree with the ring's canonical residue enumeration
    (coordinate vectors read little-endian base p), so 0 is zero and 1 is one.
    """

    def __init__(self, ring: RingCtx):
        if ring.kind != "gf":
            raise ValueError("FF needs a finite field RingCtx")
        self.ring = ring
        self.q = ring.q
        self.p = ring.p
        elems = sorted(ring.elements(), key=lambda e: _key(e.coords, ring.p))
        self.elems = elems
        idx = {e.coords: i for i, e in enumerate(elems)}
        self.add = [[idx[(a + b).coords] for b in elems] for a in elems]
        self.mul = [[idx[(a * b).coords] for b in elems] for a in elems]
        self.neg = [idx[(-a).coords] for a in elems]
        self.inv = [0] + [idx[elems[i].unit_inverse().coords] for i in range(1, self.q)]

    def elem(self, i: int):
        return self.elems[i]

    def index(self, e) -> int:
        return _key(e.coords, self.p)


def _key(coords, base) -> int:
    k = 0
    for c in reversed(coords):
        k = k * base + (c % base)
    return k


class FFForm:
    """A non-degenerate symmetric bilinear form over FF with fast evaluation."""

    def __init__(self, form: GramForm):
        self.form = form
        self.ff = FF(form.ring)
        self.n = form.n
        q = self.ff.q
        self.q = q
        self.gram = [[self.ff.index(form.gram[i][j]) for j in range(self.n)]
                     for i in range(self.n)]
        self.nvec = q ** self.n

    def digits(self, v: int):
        out = []
        for _ in range(self.n):
            out.append(v % self.q)
            v //= self.q
        return out

    def encode(self, dig) -> int:
        v = 0
        for d in reversed(dig):
            v = v * self.q + d
        return v

    def gram_action(self, v: int):
        """(G v) as a digit list."""
        dv = self.digits(v)
        add, mul = self.ff.add, self.ff.mul
        out = []
        for i in range(self.n):
            acc = 0
            gi = self.gram[i]
            for j, d in enumerate(dv):
                if d:
                    acc = add[acc][mul[gi[j]][d]]
            out.append(acc)
        return out

    def lam(self, u: int, v: int) -> int:
        du = self.digits(u)
        gv = self.gram_action(v)
        add, mul = self.ff.add, self.ff.mul
        acc = 0
        for a, b in zip(du, gv):
            if a and b:
                acc = add[acc][mul[a][b]]
        return acc

    def lam_digits(self, du, gv) -> int:
        add, mul = self.ff.add, self.ff.mul
        acc = 0
        for a, b in zip(du, gv):
            if a and b:
                acc = add[acc][mul[a][b]]
        return acc

    # -- cached per-vector data ---------------------------------------------

    def all_gram_actions(self):
        if not hasattr(self, "_gact"):
            self._gact = [self.gram_action(v) for v in range(self.nvec)]
        return self._gact

    def all_digits(self):
        if not hasattr(self, "_digs"):
            self._digs = [self.digits(v) for v in range(self.nvec)]
        return self._digs

    def isotropic_vectors(self):
        """Nonzero v with lambda(v, v) = 0."""
        if not hasattr(self, "_iso"):
            digs = self.all_digits()
            gact = self.all_gram_actions()
            self._iso = [v for v in range(1, self.nvec)
                         if self.lam_digits(digs[v], gact[v]) == 0]
        return self._iso

    def orth_mask(self, v: int) -> int:
        """Bitmask over all vectors u with lambda(u, v) = 0."""
        if not hasattr(self, "_omask"):
            self._omask = {}
        m = self._omask.get(v)
        if m is None:
            gv = self.gram_action(v)
            digs = self.all_digits()
            m = 0
            for u in range(self.nvec):
                if self.lam_digits(digs[u], gv) == 0:
                    m |= 1 << u
            self._omask[v] = m
        return m

    def span_set(self, vecs) -> set[int]:
        """All field-linear combinations of the given vector ids."""
        span = {0}
        add, mul = self.ff.add, self.ff.mul
        for v in vecs:
            dv = self.digits(v)
            new = set()
            for s in span:
                ds = self.digits(s)
                for c in range(1, self.q):
                    combo = [add[a][mul[c][b]] for a, b in zip(ds, dv)]
                    new.add(self.encode(combo))
            span |= new
        return span

    def vec_add(self, u: int, v: int) -> int:
        add = self.ff.add
        return self.encode([add[a][b] for a, b in zip(self.digits(u), self.digits(v))])

    def vec_scale(self, c: int, v: int) -> int:
        mul = self.ff.mul
        return self.encode([mul[c][d] for d in self.digits(v)])

    def rank_of(self, vecs) -> int:
        """Rank of a list of vector ids by Gaussian elimination."""
        rows = [self.digits(v) for v in vecs]
        add, mul, inv, neg = self.ff.add, self.ff.mul, self.ff.inv, self.ff.neg
        rank = 0
        cols = self.n
        pivot_col = 0
        rows = [r[:] for r in rows]
        for col in range(cols):
            piv = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            c = inv[rows[rank][col]]
            rows[rank] = [mul[c][x] for x in rows[rank]]
            for i in range(len(rows)):
                if i != rank and rows[i][col]:
                    f = rows[i][col]
                    rows[i] = [add[x][mul[neg[f]][y]] for x, y in zip(rows[i], rows[rank])]
            rank += 1
        return rank

    def solve_lam(self, constraints) -> list[int]:
        """All vectors w with lambda(c_i, w) = t_i for constraints [(c_i, t_i)].

        Solved by filtering; n <= 6 and q <= 4 keep this cheap.
        """
        gacts = self.all_gram_actions()
        digs = self.all_digits()
        out = []
        cdigs = [(digs[c], t) for c, t in constraints]
        for w in range(self.nvec):
            gw = gacts[w]
            if all(self.lam_digits(cd, gw) == t for cd, t in cdigs):
                out.append(w)
        return out

    def to_relem_vector(self, v: int):
        ring = self.form.ring
        return tuple(self.ff.elem(d) for d in self.digits(v))

    def from_relem_vector(self, vec) -> int:
        return self.encode([self.ff.index(e) for e in vec])

    # -- classification helpers (char 2) -------------------------------------

    def is_alternating(self) -> bool:
        digs = self.all_digits()
        return all(self.gram[i][i] == 0 for i in range(self.n))

    def witness_sequence(self, seq):
        """A witnessing sequence (list of vector ids) to an isotropic
        unimodular sequence of vector ids, by the inductive construction."""
        if not seq:
            return []
        # duals: lambda(v_i, w) = delta_i1 gives w_1; recurse on the complement
        k = len(seq)
        w1s = self.solve_lam([(v, 1 if i == 0 else 0) for i, v in enumerate(seq)])
        if not w1s:
            raise ValueError("sequence is not unimodular")
        w1 = w1s[0]
        if k == 1:
            return [w1]
        rest = self.witness_in_complement(seq[0], w1, seq[1:])
        return [w1] + rest

    def witness_in_complement(self, v, w, tail):
        """Witness the tail inside <v, w>^perp, returned in ambient ids."""
        sub, emb = self.complement_form([v, w])
        tail_sub = [sub.project(self, emb, t) for t in tail]
        ws = sub.witness_sequence(tail_sub)
        return [sub.unproject(self, emb, x) for x in ws]

    def complement_form(self, vecs):
        """Orthogonal complement of a non-degenerate span as (FFFormSub, basis).

        The basis is a list of ambient vector ids spanning the complement.
        """
        masks = None
        for v in vecs:
            m = self.orth_mask(v)
            masks = m if masks is None else masks & m
        members = []
        x = masks
        while x:
            low = x & (-x)
            members.append(low.bit_length() - 1)
            x ^= low
        # extract a basis from members
        basis = []
        for m in members:
            if m == 0:
                continue
            if self.rank_of(basis + [m]) > len(basis):
                basis.append(m)
        sub_gram = [[self.lam(a, b) for b in basis] for a in basis]
        sub = _SubFFForm(self.ff, sub_gram)
        return sub, basis

    def parity_dim(self) -> int:
        """dim_U P(M): 0 or 1 over a char-2 finite field."""
        return 0 if self.is_alternating() else 1


class _SubFFForm(FFForm):
    """An FFForm built from an explicit Gram over an existing FF (no GramForm)."""

    def __init__(self, ff: FF, gram):
        self.ff = ff
        self.q = ff.q
        self.n = len(gram)
        self.gram = [list(r) for r in gram]
        self.nvec = ff.q ** self.n
        self.form = None

    def project(self, ambient: FFForm, basis, v: int) -> int:
        """Coordinates of ambient vector v in the complement basis."""
        # solve sum c_i basis_i = v by Gaussian elimination over the field
        ff = self.ff
        cols = [ambient.digits(b) for b in basis] + [ambient.digits(v)]
        m = ambient.n
        k = len(basis)
        rows = [[cols[j][i] for j in range(k + 1)] for i in range(m)]
        add, mul, inv, neg = ff.add, ff.mul, ff.inv, ff.neg
        r = 0
        piv_cols = []
        for col in range(k):
            piv = next((i for i in range(r, m) if rows[i][col]), None)
            if piv is None:
                continue
            rows[r], rows[piv] = rows[piv], rows[r]
            c = inv[rows[r][col]]
            rows[r] = [mul[c][x] for x in rows[r]]
            for i in range(m):
                if i != r and rows[i][col]:
                    f = rows[i][col]
                    rows[i] = [add[x][mul[neg[f]][y]] for x, y in zip(rows[i], rows[r])]
            piv_cols.append(col)
            r += 1
        sol = [0] * k
        for ri, col in enumerate(piv_cols):
            sol[col] = rows[ri][k]
        # consistency check
        acc = 0
        for c, b in zip(sol, basis):
            acc = ambient.vec_add(acc, ambient.vec_scale(c, b))
        if acc != v:
            raise ValueError("vector outside the complement span")
        return self.encode(sol)

    def unproject(self, ambient: FFForm, basis, x: int) -> int:
        dig = self.digits(x)
        acc = 0
        for c, b in zip(dig, basis):
            acc = ambient.vec_add(acc, ambient.vec_scale(c, b))
        return acc
