"""Finite sequence posets: U, U', IU, FIU, FU, products, links, fibers.

Vertices are ordered sequences of pairwise-distinct entries; the order is
the strictly-increasing-embedding subsequence relation, graded by length.
Entries are small integers (vector ids, pair ids, or labeled ids); each
level is kept as a numpy array of entry ids so million-vertex posets stay
compact.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field

import numpy as np

from ._ffield import FFForm
from .forms import FormError, GramForm, VecSeq, parity
from .metabolic import GroupoidOracle, witnessing_sequence
from .rings import mod2_structure

DEFAULT_VERTEX_CAP = 2 * 10**6


class PosetBudgetError(RuntimeError):
    """Structured abort: the vertex cap was exceeded (never silent truncation)."""


class SeqPoset:
    """A graded poset of sequences, stored level-by-level.

    levels[k] is an (count, k+1) array of entry ids; vertex handles are
    (length, position) pairs; global ids enumerate level 1 first.
    """

    def __init__(self, label: str, levels, downward_closed: bool = True, context=None):
        self.label = label
        self.levels = [np.asarray(lvl, dtype=np.int64).reshape(-1, k + 1)
                       for k, lvl in enumerate(levels)]
        self.downward_closed = downward_closed
        self.context = context
        self._keys = []
        self._order = []
        for k, lvl in enumerate(self.levels):
            keys = _pack_rows(lvl)
            order = np.argsort(keys, kind="stable")
            self._keys.append(keys[order])
            self._order.append(order)
        self.offsets = np.cumsum([0] + [len(l) for l in self.levels])

    # -- basic queries -------------------------------------------------------

    @property
    def max_len(self) -> int:
        return len(self.levels)

    def counts(self):
        return [len(l) for l in self.levels]

    @property
    def n_vertices(self) -> int:
        return int(self.offsets[-1])

    def seq(self, length: int, pos: int):
        return tuple(int(x) for x in self.levels[length - 1][pos])

    def height(self, length: int) -> int:
        return length - 1

    def position(self, entries) -> int:
        """Position of the sequence in its level, or -1."""
        k = len(entries)
        if k > len(self.levels) or len(self.levels[k - 1]) == 0:
            return -1
        key = _pack_tuple(entries)
        keys = self._keys[k - 1]
        i = np.searchsorted(keys, key)
        if i < len(keys) and keys[i] == key:
            return int(self._order[k - 1][i])
        return -1

    def contains(self, entries) -> bool:
        return self.position(entries) >= 0

    def gid(self, length: int, pos: int) -> int:
        return int(self.offsets[length - 1]) + pos

    def vertices(self):
        for k, lvl in enumerate(self.levels):
            for pos in range(len(lvl)):
                yield (k + 1, pos)

    def faces_of(self, entries):
        """All proper nonempty subsequences that are vertices (the down-set)."""
        k = len(entries)
        out = []
        for mask in range(1, (1 << k) - 1):
            sub = tuple(entries[i] for i in range(k) if mask >> i & 1)
            if self.contains(sub):
                out.append(sub)
        return out

    def leq(self, a, b) -> bool:
        """Subsequence order: a <= b via the unique order-preserving embedding."""
        if len(a) > len(b):
            return False
        it = iter(b)
        return all(x in it for x in a)

    def check_downward_closed(self) -> bool:
        for k in range(1, self.max_len):
            lvl = self.levels[k]
            for row in lvl:
                entries = tuple(int(x) for x in row)
                for drop in range(k + 1):
                    sub = entries[:drop] + entries[drop + 1:]
                    if not self.contains(sub):
                        return False
        return True

    def dump_json_lines(self):
        """Deterministic dump: one vertex per line with its parent (cover) list."""
        import json
        lines = []
        for k, lvl in enumerate(self.levels):
            for pos in range(len(lvl)):
                entries = self.seq(k + 1, pos)
                parents = []
                if k >= 1:
                    for drop in range(k + 1):
                        sub = entries[:drop] + entries[drop + 1:]
                        p = self.position(sub)
                        if p >= 0:
                            parents.append(self.gid(k, p))
                lines.append(json.dumps({"id": self.gid(k + 1, pos),
                                         "seq": list(entries),
                                         "faces": sorted(parents)}, sort_keys=True))
        return lines


def _pack_bits(ncols: int) -> int:
    return max(1, 64 // ncols)


def _pack_rows(arr) -> np.ndarray:
    if len(arr) == 0:
        return np.zeros(0, dtype=np.uint64)
    bits = _pack_bits(arr.shape[1])
    if int(arr.max(initial=0)) >= (1 << bits):
        raise PosetBudgetError("entry ids too large to pack at this length")
    out = np.zeros(len(arr), dtype=np.uint64)
    for j in range(arr.shape[1]):
        out = out * np.uint64(1 << bits) + arr[:, j].astype(np.uint64)
    return out


def _pack_tuple(entries) -> np.uint64:
    bits = _pack_bits(len(entries))
    out = np.uint64(0)
    for e in entries:
        out = out * np.uint64(1 << bits) + np.uint64(int(e))
    return out


# ---------------------------------------------------------------------------
# building the algebraic posets over finite fields


def _grow_sequences(candidates_fn, max_len: int, vertex_cap: int, seeds):
    """Level-by-level ordered-sequence enumeration.

    candidates_fn(seq_tuple) yields entry ids that may be appended; ordering
    of output is deterministic (seed order, then candidate order).
    """
    levels = []
    cur = [(s,) for s in seeds]
    total = len(cur)
    if total > vertex_cap:
        raise PosetBudgetError(f"vertex cap {vertex_cap} exceeded at length 1")
    k = 1
    while cur and k <= max_len:
        flat = array("q")
        for t in cur:
            flat.extend(t)
        levels.append(np.frombuffer(flat, dtype=np.int64).reshape(-1, k).copy())
        if k == max_len:
            break
        nxt = []
        for t in cur:
            for c in candidates_fn(t):
                nxt.append(t + (c,))
                total += 1
                if total > vertex_cap:
                    raise PosetBudgetError(
                        f"vertex cap {vertex_cap} exceeded at length {k + 1}")
        cur = nxt
        k += 1
    return levels


def build_IU(M: GramForm, max_len: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> SeqPoset:
    """Isotropic unimodular sequences: pairwise lambda = 0, independent."""
    ffm = FFForm(M)
    iso = ffm.isotropic_vectors()
    iso_set = set(iso)
    masks = {v: ffm.orth_mask(v) for v in iso}

    def candidates(seq):
        allowed = masks[seq[0]]
        for v in seq[1:]:
            allowed &= masks[v]
        span = ffm.span_set(seq)
        out = []
        x = allowed
        while x:
            low = x & (-x)
            v = low.bit_length() - 1
            x ^= low
            if v in iso_set and v not in span:
                out.append(v)
        return out

    levels = _grow_sequences(candidates, max_len, vertex_cap, iso)
    return SeqPoset(f"IU({M.ring!r},rank {M.n})", levels, context=ffm)


def build_Uprime(M: GramForm, max_len: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> SeqPoset:
    """Unimodular sequences with lambda(x_i, x_i) = 0 (diagonal only)."""
    ffm = FFForm(M)
    iso = ffm.isotropic_vectors()
    iso_set = set(iso)

    def candidates(seq):
        span = ffm.span_set(seq)
        return [v for v in iso if v not in span and v not in seq]

    levels = _grow_sequences(candidates, max_len, vertex_cap, iso)
    return SeqPoset(f"U'({M.ring!r},rank {M.n})", levels, context=ffm)


def build_U(M: GramForm, max_len: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> SeqPoset:
    """Unimodular (= linearly independent) sequences."""
    ffm = FFForm(M)
    allv = list(range(1, ffm.nvec))

    def candidates(seq):
        span = ffm.span_set(seq)
        return [v for v in allv if v not in span]

    levels = _grow_sequences(candidates, max_len, vertex_cap, allv)
    return SeqPoset(f"U({M.ring!r},rank {M.n})", levels, context=ffm)


# ---------------------------------------------------------------------------
# complement posets and products


def complement_poset(P: SeqPoset, x, vertex_cap: int = DEFAULT_VERTEX_CAP):
    """The poset P_x = {w : w . x in P} for x in P, by direct scan."""
    if not P.contains(x):
        raise FormError("x is not a vertex of the poset")
    k = len(x)
    levels = []
    for l in range(1, P.max_len - k + 1):
        rows = array("q")
        count = 0
        for pos in range(len(P.levels[l - 1])):
            w = P.seq(l, pos)
            if P.contains(w + tuple(x)):
                rows.extend(w)
                count += 1
        levels.append(np.frombuffer(rows, dtype=np.int64).reshape(-1, l).copy()
                      if count else np.zeros((0, l), dtype=np.int64))
    while levels and len(levels[-1]) == 0:
        levels.pop()
    return SeqPoset(f"{P.label}_x", levels, context=P.context)


def product_poset(P: SeqPoset, S, vertex_cap: int = DEFAULT_VERTEX_CAP) -> SeqPoset:
    """P<S>: sequences ((x_1,s_1),...) with (x_1,...) in P; entries packed as
    x * |S| + label_index."""
    s = len(S)
    if s < 1:
        raise FormError("S must be non-empty")
    total = sum(len(lvl) * s ** (k + 1) for k, lvl in enumerate(P.levels))
    if total > vertex_cap:
        raise PosetBudgetError(f"vertex cap {vertex_cap} exceeded: P<S> has {total}")
    levels = []
    for k, lvl in enumerate(P.levels):
        length = k + 1
        count = len(lvl)
        if count == 0:
            levels.append(np.zeros((0, length), dtype=np.int64))
            continue
        codes = np.arange(s ** length, dtype=np.int64)
        digits = np.empty((s ** length, length), dtype=np.int64)
        rem = codes.copy()
        for j in range(length):
            digits[:, j] = rem % s
            rem //= s
        big = (lvl[:, None, :] * s + digits[None, :, :]).reshape(-1, length)
        levels.append(big)
    return SeqPoset(f"{P.label}<{s}>", levels, context=(P, s))


def section_map(P: SeqPoset, Q: SeqPoset, s: int, s0: int):
    """The section l_{s0}: P -> P<S> as a vertex translation function."""

    def translate(entries):
        return tuple(e * s + s0 for e in entries)

    return translate


# ---------------------------------------------------------------------------
# links and fibers


@dataclass
class SubPoset:
    """An induced subposet given by explicit vertex sequences of an ambient poset."""

    label: str
    vertices: list
    ambient: SeqPoset

    def leq(self, a, b):
        return self.ambient.leq(a, b)

    def __len__(self):
        return len(self.vertices)


def link_and_fiber(P: SeqPoset, v):
    """(Link^-, Link^+, Link) of a vertex, as induced subposets."""
    if not P.contains(v):
        raise FormError("vertex not in poset")
    minus = [tuple(w) for (k, pos) in P.vertices()
             for w in [P.seq(k, pos)] if P.leq(w, v) and tuple(w) != tuple(v)]
    plus = [tuple(w) for (k, pos) in P.vertices()
            for w in [P.seq(k, pos)] if P.leq(v, w) and tuple(w) != tuple(v)]
    link = minus + plus
    return (SubPoset("Link^-", minus, P), SubPoset("Link^+", plus, P),
            SubPoset("Link", link, P))


def fiber(P: SeqPoset, Q: SeqPoset, f, w):
    """f/w = {v in P : f(v) <= w} for a poset map f given vertex-wise."""
    out = []
    for (k, pos) in P.vertices():
        v = P.seq(k, pos)
        if Q.leq(f(v), w):
            out.append(v)
    return SubPoset("fiber", out, P)


# ---------------------------------------------------------------------------
# parity-preserving and fully-F-like predicates (finite fields)


def _complement_data(ffm: FFForm, seq):
    """Witness the sequence and return (witness ids, complement _SubFFForm, basis)."""
    ws = ffm.witness_sequence(list(seq))
    pair_vecs = []
    for v, w in zip(seq, ws):
        pair_vecs.append(v)
        pair_vecs.append(w)
    comp, basis = ffm.complement_form(pair_vecs)
    return ws, comp, basis


def is_parity_preserving(M: GramForm, seq, ffm: FFForm | None = None) -> bool:
    """P(e_{v,w}^perp) = P(M) for one (hence any) witnessing sequence."""
    ffm = ffm or FFForm(M)
    _, comp, _ = _complement_data(ffm, seq)
    return comp.parity_dim() == ffm.parity_dim()


def _gf_membership(oracle: GroupoidOracle, comp, ffm: FFForm) -> bool:
    """Oracle membership of a complement given as a _SubFFForm (char-2 fields)."""
    g = _gf_g_f(oracle, comp)
    return comp.n > 0 and g >= 1 and _gf_shape_ok(oracle, comp)


def _gf_shape_ok(oracle: GroupoidOracle, comp) -> bool:
    if oracle.kind == "met_f":
        return comp.n % 2 == 0  # char-2 finite fields: even rank <=> metabolic
    return True


def _gf_g_f(oracle: GroupoidOracle, comp) -> int:
    """g_F of a complement over a char-2 finite field, by the classification."""
    ctx = mod2_structure(oracle.ring)
    f_zero = ctx.reduce(oracle.f_class) == ctx.reduce(oracle.ring.zero)
    n = comp.n
    if n == 0:
        return 0
    alternating = all(comp.gram[i][i] == 0 for i in range(n))
    if oracle.kind == "met_f":
        if n % 2:
            return 0
        if alternating:
            return n // 2 if f_zero else 0
        # even non-alternating class [1]^n
        return n // 2 - 1 if f_zero else n // 2
    # full_gf2k
    if alternating:
        return n // 2 if f_zero else 0
    return (n - 1) // 2 if f_zero else n // 2


def is_fully_F_like(M: GramForm, F: GramForm, oracle: GroupoidOracle, seq,
                    ffm: FFForm | None = None) -> bool:
    """Criterion: parity preserving and g_F(e^perp) >= 1 for one witness."""
    ffm = ffm or FFForm(M)
    if not oracle.contains(M):
        raise FormError("oracle does not contain the ambient form")
    _, comp, _ = _complement_data(ffm, seq)
    if comp.parity_dim() != ffm.parity_dim():
        return False
    return _gf_membership(oracle, comp, ffm)


def partly_F_like_repair(M: GramForm, oracle: GroupoidOracle, seq,
                         ffm: FFForm | None = None):
    """A partly F-like witnessing sequence to a parity-preserving sequence.

    Each witness w_i with the wrong S(R)-class gets w_i + x + y for x, y in
    the complement realizing the right classes mod 2 (exhaustive search).
    Returns the adjusted witness ids; raises if the repair hypothesis fails.
    """
    ffm = ffm or FFForm(M)
    ctx = mod2_structure(M.ring)
    r_idx = ctx.reduce(oracle.f_class)
    ws, comp, basis = _complement_data(ffm, seq)
    out = list(ws)
    ff = ffm.ff
    for i, w in enumerate(ws):
        val = ffm.lam(w, w)
        if _sclass(ctx, ff, val) == _sclass(ctx, ff, None, idx=r_idx):
            continue
        x = _find_value_vector(comp, val)
        y = _find_value_vector(comp, None, idx=r_idx, ctx=ctx, ff=ff)
        if x is None or y is None:
            raise FormError("repair failed: complement misses a required value")
        wx = comp.unproject(ffm, basis, x)
        wy = comp.unproject(ffm, basis, y)
        out[i] = ffm.vec_add(ffm.vec_add(w, wx), wy)
    # re-verify the witnessing conditions exactly
    for i, v in enumerate(seq):
        for j, w in enumerate(out):
            want = 1 if i == j else 0
            assert ffm.lam(v, w) == want
    for i in range(len(out)):
        for j in range(len(out)):
            if i != j:
                assert ffm.lam(out[i], out[j]) == 0
        assert _sclass(ctx, ff, ffm.lam(out[i], out[i])) == _sclass(ctx, ff, None, idx=r_idx)
    return out


def _sclass(ctx, ff, val, idx=None):
    if idx is None:
        idx = ctx.reduce(ff.elem(val))
    for i, orbit in enumerate(ctx.sclasses):
        if idx in orbit:
            return i
    raise FormError("bad residue")


def _find_value_vector(comp, val, idx=None, ctx=None, ff=None):
    """A vector x of the subform with lambda(x,x) of the required value/class."""
    for x in range(comp.nvec):
        lx = comp.lam(x, x)
        if idx is None:
            if lx == val:
                return x
        else:
            if ctx.reduce(ff.elem(lx)) == idx:
                return x
    return None


def build_FIU(M: GramForm, F: GramForm, oracle: GroupoidOracle, max_len: int,
              vertex_cap: int = DEFAULT_VERTEX_CAP) -> SeqPoset:
    """Fully F-like isotropic unimodular sequences (filter of IU)."""
    ffm = FFForm(M)
    iu = build_IU(M, max_len, vertex_cap)
    levels = []
    for k, lvl in enumerate(iu.levels):
        rows = array("q")
        count = 0
        for pos in range(len(lvl)):
            seq = iu.seq(k + 1, pos)
            if is_fully_F_like(M, F, oracle, seq, ffm):
                rows.extend(seq)
                count += 1
        levels.append(np.frombuffer(rows, dtype=np.int64).reshape(-1, k + 1).copy()
                      if count else np.zeros((0, k + 1), dtype=np.int64))
    while levels and len(levels[-1]) == 0:
        levels.pop()
    return SeqPoset(f"FIU({M.ring!r},rank {M.n})", levels, context=ffm)


def build_FU(M: GramForm, F: GramForm, oracle: GroupoidOracle, max_len: int,
             vertex_cap: int = DEFAULT_VERTEX_CAP) -> SeqPoset:
    """FU(M): sequences of pairs (v_i, w_i) with lambda(v_i,v_j) = 0,
    lambda(v_i,w_j) = delta_ij, lambda(w_i,w_j) = r delta_ij, and complement
    in the oracle and nonzero.  Pair entries are interned to small ids; the
    decode table rides in the poset context."""
    ffm = FFForm(M)
    rval = ffm.ff.index(oracle.f_class)
    pair_ids: dict[tuple[int, int], int] = {}
    pairs_list: list[tuple[int, int]] = []

    def intern(v, w):
        pid = pair_ids.get((v, w))
        if pid is None:
            pid = len(pairs_list)
            pair_ids[(v, w)] = pid
            pairs_list.append((v, w))
        return pid

    def complement_ok(pairs):
        vecs = []
        for (v, w) in pairs:
            vecs.append(v)
            vecs.append(w)
        if ffm.rank_of(vecs) != len(vecs):
            return False
        comp, _ = ffm.complement_form(vecs)
        return _gf_membership(oracle, comp, ffm)

    seeds = []
    for v in ffm.isotropic_vectors():
        for w in ffm.solve_lam([(v, 1)]):
            if ffm.lam(w, w) == rval and complement_ok([(v, w)]):
                seeds.append(intern(v, w))

    def candidates(seq):
        pairs = [pairs_list[e] for e in seq]
        out = []
        flat = [a for p in pairs for a in p]
        for v in ffm.isotropic_vectors():
            if any(ffm.lam(v, a) for a in flat):
                continue
            for w in ffm.solve_lam([(v, 1)] + [(a, 0) for a in flat]):
                if ffm.lam(w, w) != rval:
                    continue
                if complement_ok(pairs + [(v, w)]):
                    out.append(intern(v, w))
        return out

    levels = _grow_sequences(candidates, max_len, vertex_cap, seeds)
    return SeqPoset(f"FU({M.ring!r},rank {M.n})", levels, context=(ffm, pairs_list))


def fu_embeddings_crosscheck(M: GramForm, F: GramForm, oracle: GroupoidOracle) -> int:
    """Independent count of F^1-embeddings with complement in the oracle.

    Enumerates ordered pairs (v, w) matching the Gram of F's standard basis
    directly (evaluation on the standard basis), for the bijection check.
    """
    ffm = FFForm(M)
    rval = ffm.ff.index(oracle.f_class)
    count = 0
    for v in ffm.isotropic_vectors():
        for w in range(ffm.nvec):
            if ffm.lam(v, w) != 1 or ffm.lam(w, w) != rval:
                continue
            if ffm.rank_of([v, w]) != 2:
                continue
            comp, _ = ffm.complement_form([v, w])
            if _gf_membership(oracle, comp, ffm):
                count += 1
    return count


# ---------------------------------------------------------------------------
# g_v of Theorem "triv"


def g_v_report(M: GramForm, F: GramForm, oracle: GroupoidOracle, seq,
               ffm: FFForm | None = None):
    """g_v with the three certified properties, by brute force over subsequences.

    Requires len(seq) >= c(M) + 2.  Returns (g_v, c(M)).
    """
    ffm = ffm or FFForm(M)
    c = ffm.parity_dim()
    k = len(seq)
    if k < c + 2:
        raise FormError(f"need |seq| >= c+2 = {c + 2}")
    subs_by_mask = {}
    full_mask = (1 << k) - 1
    for mask in range(1, full_mask + 1):
        sub = tuple(seq[i] for i in range(k) if mask >> i & 1)
        subs_by_mask[mask] = sub
    flike = {mask: is_fully_F_like(M, F, oracle, sub, ffm)
             for mask, sub in subs_by_mask.items()}
    best = max((bin(m).count("1") for m, ok in flike.items() if ok), default=0)
    if best == 0:
        raise FormError("no fully F-like subsequence exists")
    g = k - best
    # property bounds
    assert 0 <= g <= c + 1, f"g_v = {g} outside [0, c+1]"
    # (2): every fully F-like subsequence extends to one of length k - g
    maximal = [m for m, ok in flike.items() if ok and bin(m).count("1") == best]
    for m, ok in flike.items():
        if ok:
            assert any((m & mm) == m for mm in maximal), "property (2) fails"
    # (3): parity-preserving subsequences of length k - g are fully F-like
    for m, sub in subs_by_mask.items():
        if bin(m).count("1") == best:
            if is_parity_preserving(M, sub, ffm):
                assert flike[m], "property (3) fails"
    return g, c


# ---------------------------------------------------------------------------
# matroid good-face complexes


def matroid_good_faces(vectors, n: int, q: int):
    """Subcomplex of good faces for a spanning family over F_q (q prime).

    vectors: list of tuples in F_q^n, k+1 of them spanning; good faces have
    dimension k-n ({v_i : i not in sigma} a basis); returns the simplices by
    dimension (lists of sorted index tuples), including the empty face.
    """
    import itertools as it

    k = len(vectors) - 1
    size = k - n + 1  # good faces have this many indices

    def rank(rows):
        rows = [list(r) for r in rows]
        rk = 0
        m = len(rows)
        for col in range(n):
            piv = next((i for i in range(rk, m) if rows[i][col] % q), None)
            if piv is None:
                continue
            rows[rk], rows[piv] = rows[piv], rows[rk]
            inv = pow(rows[rk][col], q - 2, q)
            rows[rk] = [(x * inv) % q for x in rows[rk]]
            for i in range(m):
                if i != rk and rows[i][col] % q:
                    f = rows[i][col]
                    rows[i] = [(x - f * y) % q for x, y in zip(rows[i], rows[rk])]
            rk += 1
        return rk

    if rank(vectors) != n:
        raise FormError("family does not span")
    if size < 0:
        raise FormError("fewer vectors than the dimension")
    good = []
    for sigma in it.combinations(range(k + 1), size):
        rest = [vectors[i] for i in range(k + 1) if i not in sigma]
        if rank(rest) == n:
            good.append(sigma)
    # downward closure
    by_dim = {}
    seen = set()
    for g in good:
        for sz in range(0, size + 1):
            for sub in it.combinations(g, sz):
                if sub not in seen:
                    seen.add(sub)
                    by_dim.setdefault(sz - 1, []).append(sub)
    dims = sorted(by_dim)
    simplices = [sorted(by_dim.get(d, [])) for d in range(-1, size)]
    # matroid augmentation property on the complex
    all_faces = [f for fs in simplices for f in fs]
    for A in all_faces:
        for B in all_faces:
            if len(A) > len(B):
                if not any(tuple(sorted(set(B) | {a})) in seen for a in set(A) - set(B)):
                    raise FormError("matroid exchange fails")
    return simplices
