"""Finite orthogonal groups over finite fields: enumeration, stabilization
maps, abelianizations (H_1), and the stability-range calculators.

Group elements are matrices (never permutation words) so every element can
be certificate-checked against the defining Gram.  Enumeration is a
level-wise vectorized backtracking over basis images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._ffield import FFForm
from .forms import FormError, GramForm, direct_sum, verify_isometry
from .rings import RingCtx

DEFAULT_GROUP_BUDGET = 10**7


class GroupBudgetError(RuntimeError):
    pass


def _mat_mul_batch(ff, A, B):
    """Batched field matmul: acc[.., i, j] = sum_k A[.., i, k] * B[.., k, j]."""
    add, mul = ff._np_add, ff._np_mul
    n = A.shape[-1]
    if B.ndim == 2:
        B = np.broadcast_to(B, A.shape)
    acc = None
    for k in range(n):
        term = mul[A[..., :, k][..., :, None], B[..., k, :][..., None, :]]
        acc = term if acc is None else add[acc, term]
    return acc


def _attach_np_tables(ff):
    if not hasattr(ff, "_np_add"):
        ff._np_add = np.array(ff.add, dtype=np.uint8)
        ff._np_mul = np.array(ff.mul, dtype=np.uint8)
    return ff


def _pack_elems(arr, q: int) -> np.ndarray:
    """Pack (N, n, n) digit matrices into uint64 keys (must fit 64 bits)."""
    n = arr.shape[-1]
    bits = max(1, (q - 1).bit_length())
    if n * n * bits > 64:
        raise GroupBudgetError("element packing exceeds 64 bits")
    flat = arr.reshape(len(arr), -1).astype(np.uint64)
    out = np.zeros(len(arr), dtype=np.uint64)
    for j in range(flat.shape[1]):
        out = (out << np.uint64(bits)) | flat[:, j]
    return out


class FiniteGroup:
    """A finite matrix group over a small field, canonically sorted.

    elements: (N, n, n) uint8 arrays of field indices; every element is
    verified against the defining Gram on construction (full scan).
    """

    def __init__(self, form: GramForm, elements: np.ndarray, check: bool = True):
        self.form = form
        self.ffm = FFForm(form)
        _attach_np_tables(self.ffm.ff)
        self.n = form.n
        self.q = self.ffm.q
        keys = _pack_elems(elements, self.q)
        order = np.argsort(keys, kind="stable")
        self.elements = np.ascontiguousarray(elements[order])
        self.keys = keys[order]
        if len(np.unique(self.keys)) != len(self.keys):
            raise FormError("duplicate group elements")
        self.order = len(self.elements)
        if check:
            self._verify_all()

    def _verify_all(self):
        ff = self.ffm.ff
        G = np.array(self.ffm.gram, dtype=np.uint8)
        cur = _mat_mul_batch(ff, self.elements.transpose(0, 2, 1), G)
        cur = _mat_mul_batch(ff, cur, self.elements)
        if not (cur == G[None, :, :]).all():
            raise FormError("group element fails the Gram identity")

    def contains_keys(self, keys) -> np.ndarray:
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, self.order - 1)
        return self.keys[pos] == keys

    def multiply(self, A, B):
        return _mat_mul_batch(self.ffm.ff, A, B)

    def identity_matrix(self):
        return np.eye(self.n, dtype=np.uint8)

    def inverse_matrix(self, T):
        """Field-exact inverse of one element (Gaussian elimination)."""
        ff = self.ffm.ff
        n = self.n
        M = [[int(T[i][j]) for j in range(n)] + [1 if i == j else 0 for j in range(n)]
             for i in range(n)]
        add, mul, inv, neg = ff.add, ff.mul, ff.inv, ff.neg
        r = 0
        for col in range(n):
            piv = next(i for i in range(r, n) if M[i][col])
            M[r], M[piv] = M[piv], M[r]
            c = inv[M[r][col]]
            M[r] = [mul[c][x] for x in M[r]]
            for i in range(n):
                if i != r and M[i][col]:
                    f = M[i][col]
                    M[i] = [add[x][mul[neg[f]][y]] for x, y in zip(M[i], M[r])]
            r += 1
        return np.array([[M[i][n + j] for j in range(n)] for i in range(n)], dtype=np.uint8)

    def generating_set(self, rng_seed: int = 11) -> np.ndarray:
        """A small generating set found greedily (deterministic)."""
        gens = []
        covered = np.zeros(0, dtype=np.uint64)
        idx = 0
        while len(covered) < self.order:
            # first element not yet generated
            mask = np.isin(self.keys, covered, assume_unique=True)
            nxt = int(np.argmin(mask))
            gens.append(self.elements[nxt])
            covered = _closure_keys(self, np.array(gens))
        return np.array(gens, dtype=np.uint8)


def _closure_keys(G: FiniteGroup, gens: np.ndarray) -> np.ndarray:
    """Sorted keys of the subgroup generated by gens (batched BFS)."""
    ff = G.ffm.ff
    frontier = np.concatenate([np.eye(G.n, dtype=np.uint8)[None], gens])
    keys = np.unique(_pack_elems(frontier, G.q))
    elems = {int(k): m for k, m in zip(_pack_elems(frontier, G.q), frontier)}
    frontier = frontier
    while len(frontier):
        batches = []
        for g in gens:
            batches.append(_mat_mul_batch(ff, frontier, g))
        new = np.concatenate(batches)
        nkeys = _pack_elems(new, G.q)
        fresh = ~np.isin(nkeys, keys)
        new = new[fresh]
        nkeys = nkeys[fresh]
        if len(nkeys) == 0:
            break
        nkeys, first = np.unique(nkeys, return_index=True)
        new = new[first]
        keys = np.sort(np.concatenate([keys, nkeys]))
        frontier = new
    return keys


def _closure_elements(G: FiniteGroup, gens: np.ndarray):
    """(sorted keys, elements) of the subgroup generated by gens."""
    ff = G.ffm.ff
    all_elems = [np.eye(G.n, dtype=np.uint8)[None]]
    keys = _pack_elems(all_elems[0], G.q)
    frontier = np.concatenate([all_elems[0], gens])
    fkeys = _pack_elems(frontier, G.q)
    fresh = ~np.isin(fkeys, keys)
    frontier = frontier[fresh]
    if len(frontier):
        fk, first = np.unique(_pack_elems(frontier, G.q), return_index=True)
        frontier = frontier[first]
        keys = np.sort(np.concatenate([keys, fk]))
        all_elems.append(frontier)
    while len(frontier):
        batches = [_mat_mul_batch(ff, frontier, g) for g in gens]
        new = np.concatenate(batches)
        nkeys = _pack_elems(new, G.q)
        fresh = ~np.isin(nkeys, keys)
        new, nkeys = new[fresh], nkeys[fresh]
        if len(nkeys) == 0:
            break
        nkeys, first = np.unique(nkeys, return_index=True)
        new = new[first]
        keys = np.sort(np.concatenate([keys, nkeys]))
        all_elems.append(new)
        frontier = new
    elems = np.concatenate(all_elems)
    order = np.argsort(_pack_elems(elems, G.q), kind="stable")
    return np.sort(keys), elems[order]


def orthogonal_group(M: GramForm, budget: int = DEFAULT_GROUP_BUDGET,
                     check: bool = True) -> FiniteGroup:
    """Enumerate O(M) over a finite field by vectorized backtracking.

    Extends partial basis-images consistent with the Gram; aborts when the
    running partial count exceeds the budget.
    """
    ffm = FFForm(M)
    _attach_np_tables(ffm.ff)
    ff = ffm.ff
    n, q = M.n, ffm.q
    nv = q ** n
    # vector digit table and Gram actions
    digits = np.empty((nv, n), dtype=np.uint8)
    rem = np.arange(nv)
    for j in range(n):
        digits[:, j] = rem % q
        rem //= q
    G = np.array(ffm.gram, dtype=np.uint8)
    gact = _mat_mul_batch(ff, digits[:, None, :], np.broadcast_to(G.T, (nv, n, n)))
    gact = gact.reshape(nv, n)  # row i = (G v_i)^T entries

    def lam_matrix(U, W):
        """Pairings lam(u, w) for U (P,n) digit rows against W (m,n) gram rows."""
        add, mul = ff._np_add, ff._np_mul
        acc = None
        for k in range(n):
            term = mul[U[:, k][:, None], W[:, k][None, :]]
            acc = term if acc is None else add[acc, term]
        return acc

    selfvals = np.array(
        [ffm.lam_digits(list(digits[v]), list(gact[v])) for v in range(nv)],
        dtype=np.uint8)
    partial = np.zeros((1, 0, n), dtype=np.uint8)
    for j in range(n):
        P = len(partial)
        # candidates v: lam(v, v) = G[j][j] and lam(c_i, v) = G[i][j]
        cand_ids = np.where(selfvals == int(G[j][j]))[0]
        if len(cand_ids) == 0:
            return FiniteGroup(M, np.zeros((0, n, n), dtype=np.uint8), check=False)
        ok = np.ones((P, len(cand_ids)), dtype=bool)
        for i in range(j):
            vals = lam_matrix(partial[:, i, :], gact[cand_ids])
            ok &= vals == int(G[i][j])
        if int(ok.sum()) * (j + 1) > budget:
            raise GroupBudgetError(f"orthogonal group enumeration exceeds budget {budget}")
        pi, ci = np.where(ok)
        new = np.empty((len(pi), j + 1, n), dtype=np.uint8)
        new[:, :j, :] = partial[pi]
        new[:, j, :] = digits[cand_ids[ci]]
        partial = new
    # partial rows are images of basis vectors = columns of T
    elements = partial.transpose(0, 2, 1)
    return FiniteGroup(M, elements, check=check)


def brute_force_orthogonal_count(M: GramForm) -> int:
    """Independent cross-check: scan all n x n matrices over the field."""
    ffm = FFForm(M)
    n, q = M.n, ffm.q
    if q ** (n * n) > 2 * 10**7:
        raise GroupBudgetError("brute force too large")
    count = 0
    G = [[ffm.gram[i][j] for j in range(n)] for i in range(n)]
    add, mul = ffm.ff.add, ffm.ff.mul
    import itertools
    for flat in itertools.product(range(q), repeat=n * n):
        T = [flat[i * n:(i + 1) * n] for i in range(n)]
        # columns digitwise; check T^t G T = G
        ok = True
        for a in range(n):
            if not ok:
                break
            for b in range(a, n):
                acc = 0
                for i in range(n):
                    ti = T[i][a]
                    if not ti:
                        continue
                    for jj in range(n):
                        tj = T[jj][b]
                        if tj and G[i][jj]:
                            acc = add[acc][mul[mul[ti][G[i][jj]]][tj]]
                if acc != G[a][b]:
                    ok = False
                    break
        if not ok:
            continue
        # invertibility
        if ffm.rank_of([ffm.encode([T[i][a] for i in range(n)]) for a in range(n)]) == n:
            count += 1
    return count


# ---------------------------------------------------------------------------
# stabilization maps


@dataclass
class StabMap:
    source: FiniteGroup
    target: FiniteGroup
    offset: int  # block position: g |-> diag(g, id)

    def apply(self, elems: np.ndarray) -> np.ndarray:
        N = len(elems)
        n_src = self.source.n
        n_tgt = self.target.n
        out = np.zeros((N, n_tgt, n_tgt), dtype=np.uint8)
        out[:] = np.eye(n_tgt, dtype=np.uint8)[None]
        out[:, :n_src, :n_src] = elems
        return out


def stab_map(M: GramForm, F: GramForm, budget: int = DEFAULT_GROUP_BUDGET,
             groups: tuple | None = None) -> StabMap:
    """The block-diagonal injection O(M) -> O(M (+) F), with checks."""
    if groups is None:
        GM = orthogonal_group(M, budget)
        GMF = orthogonal_group(direct_sum(M, F), budget)
    else:
        GM, GMF = groups
    sm = StabMap(GM, GMF, 0)
    images = sm.apply(GM.elements)
    keys = _pack_elems(images, GMF.q)
    if not GMF.contains_keys(keys).all():
        raise FormError("stabilization image leaves the target group")
    if len(np.unique(keys)) != GM.order:
        raise FormError("stabilization map is not injective")
    return sm


def stab_is_homomorphism(sm: StabMap, samples: int = 200, seed: int = 5) -> bool:
    """phi(ab) = phi(a)phi(b) on sampled pairs (block arithmetic makes it
    exact; the sample is a guard against indexing bugs)."""
    rng = np.random.default_rng(seed)
    G = sm.source
    idx = rng.integers(0, G.order, size=(samples, 2))
    A = G.elements[idx[:, 0]]
    B = G.elements[idx[:, 1]]
    AB = G.multiply(A, B)
    lhs = sm.apply(AB)
    rhs = sm.target.multiply(sm.apply(A), sm.apply(B))
    return (lhs == rhs).all()


# ---------------------------------------------------------------------------
# abelianization


@dataclass
class Abelianization:
    group: FiniteGroup
    derived_keys: np.ndarray      # sorted element keys of [G, G]
    coset_keys: np.ndarray        # sorted element keys of G
    coset_labels: np.ndarray      # label per element (aligned with coset_keys)
    invariant_factors: tuple      # nontrivial invariant factors of G^ab
    coset_reps: np.ndarray        # one representative matrix per coset

    @property
    def ab_order(self) -> int:
        return self.group.order // len(self.derived_keys)

    def coset_of(self, elem: np.ndarray) -> int:
        key = _pack_elems(elem[None], self.group.q)[0]
        pos = int(np.searchsorted(self.coset_keys, key))
        assert self.coset_keys[pos] == key
        return int(self.coset_labels[pos])


def abelianization(G: FiniteGroup) -> Abelianization:
    """G^ab via the normal closure of generator commutators.

    The quotient's abelian invariants come from the Smith form of the full
    multiplication-table presentation of the (small) quotient group.
    """
    gens = G.generating_set()
    comms = []
    for a in gens:
        ai = G.inverse_matrix(a)
        for b in gens:
            bi = G.inverse_matrix(b)
            c = G.multiply(G.multiply(a[None], b)[0][None],
                           G.multiply(ai[None], bi)[0])[0]
            comms.append(c)
    dgen_mats = [c for c in comms]
    # normal closure: conjugate derived generators by group generators
    while True:
        keys, elems = _closure_elements(G, np.array(dgen_mats, dtype=np.uint8))
        new = []
        for g in gens:
            gi = G.inverse_matrix(g)
            conj = G.multiply(G.multiply(np.broadcast_to(
                g, (len(dgen_mats), G.n, G.n)).copy(), np.array(dgen_mats)), gi)
            ck = _pack_elems(conj, G.q)
            fresh = ~np.isin(ck, keys)
            for m in conj[fresh]:
                new.append(m)
        if not new:
            derived_keys, derived_elems = keys, elems
            break
        dgen_mats.extend(new)
    dsize = len(derived_keys)
    index = G.order // dsize
    # label cosets: multiply each unlabeled element's coset through
    labels = -np.ones(G.order, dtype=np.int64)
    reps = []
    ff = G.ffm.ff
    next_label = 0
    for i in range(G.order):
        if labels[i] >= 0:
            continue
        rep = G.elements[i]
        coset = G.multiply(np.broadcast_to(rep, (dsize, G.n, G.n)).copy(), derived_elems)
        ck = _pack_elems(coset, G.q)
        pos = np.searchsorted(G.keys, np.sort(ck))
        labels[pos] = next_label
        reps.append(rep)
        next_label += 1
        if next_label == index:
            if (labels >= 0).all():
                break
            # remaining elements must still be labeled; continue scan
    assert (labels >= 0).all()
    reps = np.array(reps, dtype=np.uint8)
    # abelian invariants from the multiplication-table presentation
    A = len(reps)
    label_of_key = {}
    for k, lab in zip(G.keys, labels):
        label_of_key[int(k)] = int(lab)
    rel_cols = []
    for a in range(A):
        prods = G.multiply(np.broadcast_to(reps[a], (A, G.n, G.n)).copy(), reps)
        pk = _pack_elems(prods, G.q)
        for b in range(A):
            c = label_of_key[int(pk[b])]
            col = {}
            for g, s in ((a, 1), (b, 1), (c, -1)):
                col[g] = col.get(g, 0) + s
            rel_cols.append({g: v for g, v in col.items() if v})
    from .homology import _int_snf_invariants
    dense = [[0] * len(rel_cols) for _ in range(A)]
    for j, col in enumerate(rel_cols):
        for r, v in col.items():
            dense[r][j] = v
    inv = _int_snf_invariants(dense)
    free_rank = A - len(inv)
    assert free_rank == 0, "finite group has finite abelianization"
    factors = tuple(sorted(d for d in inv if d not in (0, 1)))
    return Abelianization(G, derived_keys, G.keys, labels, factors, reps)


def induced_h1_map(sm: StabMap, ab_src: Abelianization, ab_tgt: Abelianization):
    """Images of the source generators' H_1 classes under the stabilization."""
    gens = sm.source.generating_set()
    out = []
    for g in gens:
        img = sm.apply(g[None])[0]
        out.append((ab_src.coset_of(g), ab_tgt.coset_of(img)))
    return out


# ---------------------------------------------------------------------------
# range calculators and tables


def range_calculator(kind: str, *, z: int | None = None, c: int | None = None,
                     r: int | None = None, n: int | None = None,
                     cR: int | None = None) -> int:
    """Largest degree i in the stated range; formulas straight from the
    stability theorems (floor of the printed thresholds)."""
    if kind == "mainl-epi":
        return (z - 3 * c - 5) // 2
    if kind == "mainl-iso":
        return (z - 3 * c - 6) // 2
    if kind == "mainl-split":
        return (z - 3 * c - 7 - r) // 2
    if kind == "mainl-split-epi":
        return (z - 3 * c - 5 - r) // 2
    if kind == "mainl-general":
        return (z - 3 * c - 7 - 2 * r) // 2
    if kind == "mainl-general-epi":
        return (z - 3 * c - 5 - 2 * r) // 2
    if kind == "homstab":
        if cR == 0:
            return (n - 6) // 2
        return ((n - 3) * cR - 6) // 2
    if kind == "useintro":
        return (n - 12) // 2
    raise ValueError(f"unknown range kind {kind!r}")


@dataclass
class StabilityRow:
    n: int
    order: int
    h1_factors: tuple
    induced_map: tuple | None     # generator-level H_1 images into the next row
    proven_iso_bound: int
    label: str                    # "observed" or "within proven range"

    def to_json(self):
        return {"n": self.n, "order": self.order,
                "h1": list(self.h1_factors),
                "induced_map": list(self.induced_map) if self.induced_map else None,
                "proven_iso_bound": self.proven_iso_bound,
                "label": self.label}

    def to_tsv(self):
        h1 = "+".join(f"Z/{d}" for d in self.h1_factors) or "0"
        imap = ";".join(f"{a}->{b}" for a, b in self.induced_map) if self.induced_map else "-"
        return f"{self.n}\t{self.order}\t{h1}\t{imap}\t{self.proven_iso_bound}\t{self.label}"


def h1_stability_table(M0: GramForm | None, F: GramForm, n_range,
                       budget: int = DEFAULT_GROUP_BUDGET):
    """Orders, H_1 and induced maps along O(M0 (+) F^n) -> O(M0 (+) F^(n+1)).

    Rows are labeled against the proven stability range, which is vacuous at
    desk scale and reported honestly as observed behaviour.
    """
    from .forms import parity
    from .metabolic import isotropic_rank
    rows = []
    forms = []
    for n in n_range:
        parts = ([M0] if M0 is not None and M0.n else []) + [F] * n
        forms.append(direct_sum(*parts))
    groups = [orthogonal_group(M, budget) for M in forms]
    abs_ = [abelianization(G) for G in groups]
    for i, n in enumerate(n_range):
        imap = None
        if i + 1 < len(forms):
            sm = stab_map(forms[i], F, budget, groups=(groups[i], groups[i + 1]))
            imap = tuple(induced_h1_map(sm, abs_[i], abs_[i + 1]))
        z = isotropic_rank(forms[i]).value
        c = parity(forms[i]).dim
        bound = range_calculator("mainl-iso", z=z, c=c)
        label = "within proven range" if bound >= 1 else "observed (outside proven range)"
        rows.append(StabilityRow(n, groups[i].order, abs_[i].invariant_factors,
                                 imap, bound, label))
    return rows
