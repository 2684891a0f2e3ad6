"""Gram-matrix symmetric bilinear forms and their basic invariants.

Conventions: column vectors; an isometry T from M to N satisfies
T^t * gram(N) * T = gram(M) and is verified at construction.  Forms are
non-degenerate (unit determinant); degenerate Grams are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import snf
from .rings import Mod2Ctx, RElem, RingCtx, RingError, mod2_structure


class FormError(ValueError):
    pass


class GramForm:
    """A non-degenerate symmetric bilinear form given by its Gram matrix."""

    __slots__ = ("ring", "gram", "n")

    def __init__(self, ring: RingCtx, gram):
        n = len(gram)
        for row in gram:
            if len(row) != n:
                raise FormError("Gram matrix must be square")
        for i in range(n):
            for j in range(n):
                if gram[i][j] != gram[j][i]:
                    raise FormError("Gram matrix must be symmetric")
        det = snf.determinant(ring, gram) if n else ring.one
        if not det.is_unit():
            raise FormError(f"degenerate form: det = {det!r} is not a unit")
        self.ring = ring
        self.gram = tuple(tuple(row) for row in gram)
        self.n = n

    @property
    def rank(self) -> int:
        return self.n

    def lam(self, x, y) -> RElem:
        """The bilinear product lambda(x, y) of two coordinate vectors."""
        acc = self.ring.zero
        for i, xi in enumerate(x):
            if xi.is_zero():
                continue
            row = self.gram[i]
            for j, yj in enumerate(y):
                if not yj.is_zero():
                    acc = acc + xi * row[j] * yj
        return acc

    def basis_vector(self, i):
        return tuple(self.ring.one if j == i else self.ring.zero for j in range(self.n))

    def __eq__(self, other):
        return (isinstance(other, GramForm) and self.ring == other.ring
                and self.gram == other.gram)

    def __hash__(self):
        return hash((self.ring, self.gram))

    def __repr__(self):
        rows = "; ".join(" ".join(repr(e) for e in row) for row in self.gram)
        return f"GramForm({self.ring!r}, [{rows}])"

    def to_json(self) -> dict:
        return {"ring": self.ring.descriptor(),
                "gram": [[list(e.coords) for e in row] for row in self.gram]}

    @staticmethod
    def from_json(obj: dict) -> "GramForm":
        ring = RingCtx.from_descriptor(obj["ring"])
        gram = [[RElem(ring, tuple(int(c) for c in e)) for e in row] for row in obj["gram"]]
        return make_form(ring, gram)


def make_form(ring: RingCtx, gram) -> GramForm:
    return GramForm(ring, gram)


def theta(ring: RingCtx, r: RElem) -> GramForm:
    """The metabolic plane with Gram [[0,1],[1,r]]."""
    return GramForm(ring, [[ring.zero, ring.one], [ring.one, r]])


def hyperbolic(ring: RingCtx, n: int = 1) -> GramForm:
    """The hyperbolic form H^n."""
    return direct_sum(*(theta(ring, ring.zero) for _ in range(n)))


def diag_form(ring: RingCtx, entries) -> GramForm:
    n = len(entries)
    return GramForm(ring, [[entries[i] if i == j else ring.zero for j in range(n)]
                           for i in range(n)])


def direct_sum(*forms: GramForm) -> GramForm:
    ring = forms[0].ring
    if any(f.ring != ring for f in forms):
        raise FormError("direct sum requires a common ring")
    gram = snf.block_diag(ring, [list(map(list, f.gram)) for f in forms])
    return GramForm(ring, gram)


class VecSeq:
    """An ordered sequence of pairwise-distinct coordinate vectors."""

    __slots__ = ("vectors",)

    def __init__(self, vectors):
        vecs = tuple(tuple(v) for v in vectors)
        if len(vecs) < 1:
            raise FormError("sequences are non-empty")
        if len(set(vecs)) != len(vecs):
            raise FormError("sequence entries must be pairwise distinct")
        self.vectors = vecs

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)

    def __getitem__(self, i):
        return self.vectors[i]

    def __eq__(self, other):
        return isinstance(other, VecSeq) and self.vectors == other.vectors

    def __hash__(self):
        return hash(self.vectors)

    def __repr__(self):
        return f"VecSeq({[[e.coords for e in v] for v in self.vectors]})"


class Isometry:
    """An invertible matrix certificate T with T^t * gram(target) * T = gram(source).

    The identity is checked exactly at construction; no unverified
    certificates exist anywhere downstream.
    """

    __slots__ = ("source", "target", "matrix")

    def __init__(self, source: GramForm, target: GramForm, matrix):
        if source.ring != target.ring or source.n != target.n:
            raise FormError("isometry requires forms of equal rank over one ring")
        ring = source.ring
        mt = snf.transpose(matrix)
        prod = snf.mat_mul(snf.mat_mul(mt, list(map(list, target.gram))), matrix)
        if not snf.mat_eq(prod, list(map(list, source.gram))):
            raise FormError("certificate fails: T^t G_target T != G_source")
        if not snf.determinant(ring, matrix).is_unit():
            raise FormError("certificate matrix is not invertible over the ring")
        self.source = source
        self.target = target
        self.matrix = tuple(tuple(row) for row in matrix)

    def compose(self, other: "Isometry") -> "Isometry":
        """self o other: an isometry other.source -> self.target."""
        if other.target != self.source:
            raise FormError("composition mismatch")
        return Isometry(other.source, self.target,
                        snf.mat_mul(list(map(list, self.matrix)), list(map(list, other.matrix))))

    def inverse(self) -> "Isometry":
        return Isometry(self.target, self.source,
                        snf.inverse(self.source.ring, list(map(list, self.matrix))))

    def block_sum(self, other: "Isometry") -> "Isometry":
        src = direct_sum(self.source, other.source)
        tgt = direct_sum(self.target, other.target)
        ring = src.ring
        n1, n2 = self.source.n, other.source.n
        mat = snf.zeros(ring, n1 + n2, n1 + n2)
        for i in range(n1):
            for j in range(n1):
                mat[i][j] = self.matrix[i][j]
        for i in range(n2):
            for j in range(n2):
                mat[n1 + i][n1 + j] = other.matrix[i][j]
        return Isometry(src, tgt, mat)

    @staticmethod
    def identity(form: GramForm) -> "Isometry":
        return Isometry(form, form, snf.identity(form.ring, form.n))

    def to_json(self) -> dict:
        return {"source": self.source.to_json(), "target": self.target.to_json(),
                "matrix": [[list(e.coords) for e in row] for row in self.matrix]}

    @staticmethod
    def from_json(obj: dict) -> "Isometry":
        src = GramForm.from_json(obj["source"])
        tgt = GramForm.from_json(obj["target"])
        ring = src.ring
        mat = [[RElem(ring, tuple(int(c) for c in e)) for e in row] for row in obj["matrix"]]
        return Isometry(src, tgt, mat)

    def __repr__(self):
        return f"Isometry({self.source.n}x{self.source.n} over {self.source.ring!r})"


def verify_isometry(matrix, source: GramForm, target: GramForm) -> bool:
    """Exact check that matrix is an isometry certificate source -> target."""
    try:
        Isometry(source, target, matrix)
        return True
    except FormError:
        return False


# ---------------------------------------------------------------------------
# restriction and orthogonal complements


def restrict(M: GramForm, basis) -> tuple[GramForm, tuple]:
    """Form restricted to the span of the given (column-vector) basis.

    Returns (restricted form, inclusion certificate = the basis matrix).
    The basis must be unimodular and the restricted Gram non-degenerate.
    """
    cols = [tuple(v) for v in basis]
    if not cols:
        raise FormError("empty restriction basis")
    mat = [[cols[j][i] for j in range(len(cols))] for i in range(M.n)]
    divisors = snf.elementary_divisors(M.ring, mat)
    if len(divisors) != len(cols) or not all(d.is_unit() for d in divisors):
        raise FormError("restriction basis is not unimodular")
    k = len(cols)
    gram = [[M.lam(cols[i], cols[j]) for j in range(k)] for i in range(k)]
    return GramForm(M.ring, gram), tuple(cols)


def orthogonal_complement(M: GramForm, basis) -> tuple[GramForm, list]:
    """Orthogonal complement of a non-degenerate subform, with its basis.

    The complement basis is the kernel of v |-> (lambda(n_i, v))_i, computed
    via Smith reduction; rank(M) = rank(N) + rank(complement).
    """
    N, cols = restrict(M, basis)  # validates non-degeneracy of the subform
    ring = M.ring
    K = [[M.lam(c, M.basis_vector(j)) for j in range(M.n)] for c in cols]
    kern = snf.kernel_basis(ring, K)
    if len(kern) != M.n - len(cols):
        raise FormError("complement rank mismatch (degenerate restriction?)")
    comp_gram = [[M.lam(u, v) for v in kern] for u in kern]
    comp = GramForm(ring, comp_gram)
    return comp, kern


def internal_decomposition(M: GramForm, basis) -> tuple[GramForm, GramForm, Isometry]:
    """M = N + N^perp as an internal orthogonal decomposition with certificate.

    Returns (N, N^perp, isometry N (+) N^perp -> M given by the combined
    basis matrix).
    """
    N, cols = restrict(M, basis)
    comp, kern = orthogonal_complement(M, basis)
    ring = M.ring
    combined = [list(c) for c in cols] + [list(k) for k in kern]
    mat = [[combined[j][i] for j in range(len(combined))] for i in range(M.n)]
    cert = Isometry(direct_sum(N, comp), M, mat)
    return N, comp, cert


# ---------------------------------------------------------------------------
# unimodularity with dual witnesses


def is_unimodular(M: GramForm, seq: VecSeq):
    """Decide unimodularity of a sequence; on success return dual witnesses.

    Returns (True, [w_1..w_k]) with lambda(v_i, w_j) = delta_ij, or
    (False, None).  Decision is by Smith elementary divisors of the
    coordinate matrix; witnesses come from the non-degeneracy isomorphism.
    """
    ring = M.ring
    cols = [list(v) for v in seq]
    mat = [[cols[j][i] for j in range(len(cols))] for i in range(M.n)]
    divisors = snf.elementary_divisors(ring, mat)
    if len(divisors) != len(cols) or not all(d.is_unit() for d in divisors):
        return False, None
    # solve lambda(v_i, w) = delta_ij:  (V^t G) w = e_j
    A = [[M.lam(c, M.basis_vector(j)) for j in range(M.n)] for c in cols]
    witnesses = []
    for j in range(len(cols)):
        b = [ring.one if i == j else ring.zero for i in range(len(cols))]
        w = snf.solve(ring, A, b)
        if w is None:
            return False, None
        witnesses.append(tuple(w))
    return True, witnesses


# ---------------------------------------------------------------------------
# parity, complexity, signature


@dataclass(frozen=True)
class ParitySpace:
    """The parity subspace P(M) of R/(2) in canonical U(R)-echelon form.

    basis holds residue indices; trivial marks the 2-invertible convention.
    Equality of parities is list equality of echelon bases.
    """

    ctx: Mod2Ctx
    basis: tuple[int, ...]
    trivial: bool

    def contains(self, other: "ParitySpace") -> bool:
        if self.trivial or other.trivial:
            return True
        span = _u_span(self.ctx, self.basis)
        return all(b in span for b in other.basis)

    def __eq__(self, other):
        return (isinstance(other, ParitySpace) and self.ctx.ring == other.ctx.ring
                and self.basis == other.basis and self.trivial == other.trivial)

    def __hash__(self):
        return hash((self.ctx.ring, self.basis, self.trivial))

    @property
    def dim(self) -> int:
        return 0 if self.trivial else len(self.basis)


def _u_span(ctx: Mod2Ctx, gens) -> set:
    """U(R)-span of residue indices, as a set of residue indices."""
    zero = ctx.reduce(ctx.ring.zero)
    span = {zero}
    for g in gens:
        new = set()
        for v in span:
            for s in ctx.squares:
                new.add(ctx.add_table[v][ctx.mul_table[s][g]])
        span |= new
    return span


def echelon_reduce(ctx: Mod2Ctx, gens) -> tuple[int, ...]:
    """Canonical U(R)-echelon basis of the span of residue-index generators.

    Coordinates are taken w.r.t. the fixed U-basis of R/(2); the result is in
    reduced column-echelon form ordered by pivot position, so parity equality
    downstream is plain list comparison.
    """
    if not ctx.assumption_holds:
        raise RingError("echelon parity bases need the Assumption")
    zero = ctx.reduce(ctx.ring.zero)
    dim = ctx.u_dim or 0
    # columns = coordinate vectors (tuples of U-residue indices) of generators
    cols = [list(ctx.u_coords[g]) for g in gens if g != zero]
    if not cols or dim == 0:
        return ()

    # field arithmetic inside U via the ambient tables
    def u_mul(a, b):
        return ctx.mul_table[a][b]

    def u_add(a, b):
        return ctx.add_table[a][b]

    def u_neg(a):
        # char 2 everywhere here: -a = a
        return a

    def u_inv(a):
        for s in ctx.squares:
            if u_mul(a, s) == ctx.reduce(ctx.ring.one):
                return s
        raise RingError("non-invertible U element")

    one = ctx.reduce(ctx.ring.one)
    basis: list[list[int]] = []
    pivots: list[int] = []
    for col in cols:
        cur = col[:]
        for b, p in zip(basis, pivots):
            if cur[p] != zero:
                c = cur[p]
                cur = [u_add(x, u_mul(c, y)) for x, y in zip(cur, b)]  # char 2: add = sub
        lead = next((i for i, x in enumerate(cur) if x != zero), None)
        if lead is None:
            continue
        inv = u_inv(cur[lead])
        cur = [u_mul(inv, x) for x in cur]
        # back-reduce previous basis vectors
        for bi, (b, p) in enumerate(zip(basis, pivots)):
            if b[lead] != zero:
                c = b[lead]
                basis[bi] = [u_add(x, u_mul(c, y)) for x, y in zip(b, cur)]
        basis.append(cur)
        pivots.append(lead)
    order = sorted(range(len(basis)), key=lambda i: pivots[i])
    basis = [basis[i] for i in order]
    # convert coordinate vectors back to residue indices
    out = []
    for b in basis:
        acc = zero
        for coef, bas in zip(b, ctx.u_basis):
            acc = u_add(acc, u_mul(coef, bas))
        out.append(acc)
    return tuple(out)


def parity(M: GramForm) -> ParitySpace:
    """P(M) as a canonical echelon basis; requires the Assumption.

    Generated by the diagonal Gram entries mod 2 (they span P(M) when the
    Assumption holds).
    """
    ctx = mod2_structure(M.ring)
    if ctx.two_invertible:
        return ParitySpace(ctx, (), True)
    if not ctx.assumption_holds:
        raise RingError("parity space needs the Assumption; use parity_set instead")
    gens = [ctx.reduce(M.gram[i][i]) for i in range(M.n)]
    return ParitySpace(ctx, echelon_reduce(ctx, gens), False)


def parity_set(M: GramForm) -> frozenset:
    """The parity of M as a plain subset of R/(2) (any ring, no Assumption).

    Image of {lambda(x,x)} mod 2 = {sum x_i^2 g_ii mod 2}; enumerated over
    residue tuples.
    """
    ctx = mod2_structure(M.ring)
    if ctx.two_invertible:
        return frozenset({0})
    n = len(ctx.residues)
    diag = [ctx.reduce(M.gram[i][i]) for i in range(M.n)]
    out = {ctx.reduce(M.ring.zero)}
    cur = {ctx.reduce(M.ring.zero)}
    for d in diag:
        nxt = set()
        for acc in cur:
            for x in range(n):
                sq = ctx.mul_table[x][x]
                nxt.add(ctx.add_table[acc][ctx.mul_table[sq][d]])
        cur = nxt
    return frozenset(cur)


def complexity(M: GramForm) -> int:
    """dim_{U(R)} P(M); zero when 2 is invertible."""
    p = parity(M)
    return p.dim


def signature_over_Z(M: GramForm) -> tuple[int, int]:
    """Signature (p, q) by exact rational congruence diagonalization."""
    if M.ring.kind != "Z":
        raise FormError("signature is for forms over Z")
    n = M.n
    A = [[Fraction(M.gram[i][j].coords[0]) for j in range(n)] for i in range(n)]
    pos = neg = 0
    idx = list(range(n))
    while idx:
        # pick a nonzero diagonal pivot if possible
        piv = next((i for i in idx if A[i][i] != 0), None)
        if piv is not None:
            d = A[piv][piv]
            if d > 0:
                pos += 1
            else:
                neg += 1
            rest = [i for i in idx if i != piv]
            new = {(i, j): A[i][j] - A[i][piv] * A[piv][j] / d
                   for i in rest for j in rest}
            for (i, j), v in new.items():
                A[i][j] = v
            idx = rest
            continue
        # all-zero diagonal: non-degeneracy gives some A[i0][j0] != 0; the
        # symmetric basis change v_i0 += v_j0 makes A[i0][i0] = 2*A[i0][j0]
        # nonzero, after which ordinary diagonal pivoting resumes
        i0, j0 = next((i, j) for i in idx for j in idx if i != j and A[i][j] != 0)
        newrow = {k: A[i0][k] + A[j0][k] for k in idx if k != i0}
        newdiag = A[i0][i0] + 2 * A[i0][j0] + A[j0][j0]
        for k, v in newrow.items():
            A[i0][k] = v
            A[k][i0] = v
        A[i0][i0] = newdiag
    return pos, neg
