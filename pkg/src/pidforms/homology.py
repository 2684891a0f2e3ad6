"""Integral and mod-p simplicial homology of order complexes.

Reduced homology throughout: every complex formally contains the empty
simplex, so the void complex has H~_{-1} = Z.  Integral invariants come
from a sparse unit-pivot column reduction with a dense Smith core for the
non-unit remainder; mod-p Betti numbers reuse the same engine.

A dedicated vectorized path handles the large product posets P<S> (graded
by sequence length <= 3): H_0/H_1 and the section-map comparison run on
index arithmetic instead of materialized flag complexes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .posets import SeqPoset, PosetBudgetError

DEFAULT_FLAG_CAP = 10**7


# ---------------------------------------------------------------------------
# sparse column reduction over Z and F_p


def _int_snf_invariants(rows):
    """Invariant factors of a small dense integer matrix (nonzero ones)."""
    A = [list(r) for r in rows]
    m = len(A)
    n = len(A[0]) if m else 0
    out = []
    t = 0
    while t < min(m, n):
        piv = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j]:
                    v = abs(A[i][j])
                    if piv is None or v < piv[0]:
                        piv = (v, i, j)
        if piv is None:
            break
        _, bi, bj = piv
        A[t], A[bi] = A[bi], A[t]
        for row in A:
            row[t], row[bj] = row[bj], row[t]
        while True:
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                    if A[i][t]:
                        A[t], A[i] = A[i], A[t]
                        dirty = True
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    for row in A:
                        row[j] -= q * row[t]
                    if A[t][j]:
                        for row in A:
                            row[j], row[t] = row[t], row[j]
                        dirty = True
            if dirty:
                continue
            stained = False
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % A[t][t]:
                        A[t] = [a + b for a, b in zip(A[t], A[i])]
                        stained = True
                        break
                if stained:
                    break
            if not stained:
                break
        t += 1
    for i in range(t):
        out.append(abs(A[i][i]))
    return out


class ZReducer:
    """Sparse integral column reduction with unit pivots.

    Register columns one by one; finish() returns (rank, torsion invariants).
    Pivot columns are triangular (entries at rows <= the pivot row) with a
    +-1 pivot coefficient, so the quotient lattice splits off the pivot rows
    freely and the torsion lives in the small dense core of hard columns.
    """

    def __init__(self):
        self.pivot = {}
        self.hard = []
        self.nrank = 0

    def _reduce(self, col: dict) -> str:
        pivot = self.pivot
        while col:
            r = max(col)
            p = pivot.get(r)
            if p is not None:
                pcol, psign = p
                q = col[r] * psign
                for row, val in pcol:
                    nv = col.get(row, 0) - q * val
                    if nv:
                        col[row] = nv
                    else:
                        col.pop(row, None)
                continue
            c = col[r]
            if c in (1, -1):
                pivot[r] = (tuple(col.items()), c)
                self.nrank += 1
                return "pivot"
            self.hard.append(col)
            return "hard"
        return "zero"

    def add(self, col: dict):
        if col:
            self._reduce(col)

    def finish(self):
        # re-run hard columns until no new pivots appear
        changed = True
        while changed:
            changed = False
            hard, self.hard = self.hard, []
            for col in hard:
                if self._reduce(col) == "pivot":
                    changed = True
        # clear any remaining pivot-row entries (not just maxima)
        cleaned = []
        for col in self.hard:
            while True:
                rows = [r for r in col if r in self.pivot]
                if not rows:
                    break
                r = max(rows)
                pcol, psign = self.pivot[r]
                q = col[r] * psign
                for row, val in pcol:
                    nv = col.get(row, 0) - q * val
                    if nv:
                        col[row] = nv
                    else:
                        col.pop(row, None)
            if col:
                cleaned.append(col)
        self.hard = cleaned
        if not self.hard:
            return self.nrank, []
        rows = sorted({r for c in self.hard for r in c})
        ridx = {r: i for i, r in enumerate(rows)}
        dense = [[0] * len(self.hard) for _ in rows]
        for j, c in enumerate(self.hard):
            for r, v in c.items():
                dense[ridx[r]][j] = v
        inv = _int_snf_invariants(dense)
        rank = self.nrank + len(inv)
        torsion = [d for d in inv if d not in (0, 1)]
        return rank, torsion


class PReducer:
    """Column reduction over F_p (rank only)."""

    def __init__(self, p: int):
        self.p = p
        self.pivot = {}
        self.nrank = 0

    def add(self, col: dict):
        p = self.p
        col = {r: v % p for r, v in col.items() if v % p}
        pivot = self.pivot
        while col:
            r = max(col)
            pc = pivot.get(r)
            if pc is None:
                inv = pow(col[r], p - 2, p)
                pivot[r] = tuple((row, (v * inv) % p) for row, v in col.items())
                self.nrank += 1
                return
            c = col[r]
            for row, val in pc:
                nv = (col.get(row, 0) - c * val) % p
                if nv:
                    col[row] = nv
                else:
                    col.pop(row, None)

    def finish(self):
        return self.nrank, []


# ---------------------------------------------------------------------------
# complexes


class ComplexHandle:
    """Simplices by dimension; rows are vertex-id tuples sorted ascending.

    The empty simplex is implicit (reduced convention).  nonempty means
    'has at least one vertex'.
    """

    def __init__(self, faces_by_dim, label: str = ""):
        self.faces = [sorted(set(map(tuple, fs))) for fs in faces_by_dim]
        while self.faces and not self.faces[-1]:
            self.faces.pop()
        self.label = label
        # closure under faces up to the stored cap
        for d in range(1, len(self.faces)):
            lower = set(self.faces[d - 1])
            for s in self.faces[d]:
                for k in range(d + 1):
                    if s[:k] + s[k + 1:] not in lower:
                        raise ValueError("complex not closed under faces")

    @property
    def dim(self) -> int:
        return len(self.faces) - 1

    @property
    def nonempty(self) -> bool:
        return bool(self.faces and self.faces[0])

    def counts(self):
        return [len(f) for f in self.faces]

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * len(f) for d, f in enumerate(self.faces))


def order_complex(P: SeqPoset, dim_cap: int, flag_cap: int = DEFAULT_FLAG_CAP) -> ComplexHandle:
    """All chains (flags) of the poset with <= dim_cap+1 vertices."""
    verts = []
    gid_of = {}
    for (k, pos) in P.vertices():
        seq = P.seq(k, pos)
        gid = P.gid(k, pos)
        gid_of[seq] = gid
        verts.append((seq, gid))
    # down-sets by gid
    down = {gid: [] for _, gid in verts}
    for seq, gid in verts:
        for f in P.faces_of(seq):
            down[gid].append(gid_of[f])
    for gid in down:
        down[gid].sort()
    faces = [[(gid,) for _, gid in verts]]
    total = len(faces[0])
    cur = [(gid,) for _, gid in verts]
    for d in range(1, dim_cap + 1):
        nxt = []
        for chain in cur:
            for u in down[chain[0]]:
                nxt.append((u,) + chain)
                total += 1
                if total > flag_cap:
                    raise PosetBudgetError(f"flag cap {flag_cap} exceeded")
        if not nxt:
            break
        faces.append(nxt)
        cur = nxt
    return ComplexHandle(faces, label=f"Delta({P.label})")


def complex_from_faces(faces_by_dim, label="") -> ComplexHandle:
    return ComplexHandle(faces_by_dim, label)


# ---------------------------------------------------------------------------
# homology


@dataclass(frozen=True)
class HomologyProfile:
    degree: int
    betti: int
    torsion: tuple
    coeffs: str

    def to_json(self):
        return {"degree": self.degree, "betti": self.betti,
                "torsion": list(self.torsion), "coeffs": self.coeffs}


def _boundary_columns(C: ComplexHandle, d: int):
    """Columns of boundary_d as dicts row->coef; rows index (d-1)-simplices.

    d = 0 uses the augmentation (row 0 = the empty simplex).
    """
    if d == 0:
        for _ in C.faces[0] if C.faces else []:
            yield {0: 1}
        return
    if d >= len(C.faces):
        return
    index = {s: i for i, s in enumerate(C.faces[d - 1])}
    for s in C.faces[d]:
        col = {}
        for k in range(d + 1):
            face = s[:k] + s[k + 1:]
            col[index[face]] = 1 if k % 2 == 0 else -1
        yield col


def homology(C: ComplexHandle, up_to: int, coeffs: str = "Z"):
    """Reduced homology profiles H~_{-1} .. H~_{up_to}.

    coeffs: "Z" for integral (Betti + torsion) or "F2"/"F3"/"F5"... for
    mod-p Betti numbers.
    """
    p = None
    if coeffs != "Z":
        p = int(coeffs[1:])
    ranks = {}
    torsions = {}
    for d in range(0, min(up_to + 1, C.dim) + 1):
        red = ZReducer() if p is None else PReducer(p)
        for col in _boundary_columns(C, d):
            red.add(col)
        r, tors = red.finish()
        ranks[d] = r
        torsions[d] = tors
    counts = {-1: 1}
    for d, fs in enumerate(C.faces):
        counts[d] = len(fs)
    profiles = []
    for d in range(-1, up_to + 1):
        nd = counts.get(d, 0)
        rd = ranks.get(d, 0) if d >= 0 else 0
        rd1 = ranks.get(d + 1, 0)
        betti = nd - rd - rd1
        if d == -1:
            betti = 1 - ranks.get(0, 0)
        tors = tuple(torsions.get(d + 1, []))
        profiles.append(HomologyProfile(d, betti, tors, coeffs))
    return profiles


def euler_check(C: ComplexHandle, profiles) -> bool:
    """Reduced Euler characteristic from homology equals the simplex count.

    Requires profiles covering every dimension of the complex (including -1).
    """
    top = max((pr.degree for pr in profiles), default=-2)
    if top < C.dim:
        raise ValueError("profiles do not cover the full complex")
    red_h = sum((-1) ** pr.degree * pr.betti for pr in profiles
                if pr.degree <= C.dim)
    red_s = C.euler_characteristic() - 1
    return red_h == red_s


def boundary_squares_to_zero(C: ComplexHandle, d: int) -> bool:
    """Assert del_{d-1} o del_d = 0 by direct composition on each d-simplex."""
    if d < 1 or d >= len(C.faces):
        return True
    for s in C.faces[d][:2000]:
        acc = {}
        for k in range(d + 1):
            face = s[:k] + s[k + 1:]
            sk = 1 if k % 2 == 0 else -1
            if d - 1 == 0:
                acc[()] = acc.get((), 0) + sk
                continue
            for j in range(d):
                f2 = face[:j] + face[j + 1:]
                sj = 1 if j % 2 == 0 else -1
                acc[f2] = acc.get(f2, 0) + sk * sj
        if d - 1 == 0:
            continue
        if any(v != 0 for v in acc.values()):
            return False
    return True


# ---------------------------------------------------------------------------
# connectivity verdicts


@dataclass(frozen=True)
class ConnectivityVerdict:
    claimed: int
    passed: bool
    checked: tuple            # named conditions actually verified
    caveat: str | None        # "pi_1 not verified" when claimed >= 1

    def to_json(self):
        return {"claimed": self.claimed, "pass": self.passed,
                "checked": list(self.checked), "caveat": self.caveat}


def connectivity_verdict(C: ComplexHandle, claimed: int) -> ConnectivityVerdict:
    """PASS iff the homological shadow of 'claimed-connected' holds.

    claimed < -1: vacuous.  -1: nonempty.  >= 0: nonempty, connected, and
    reduced H_k = 0 for 1 <= k <= claimed; pi_1 is never decided (caveat).
    """
    if claimed < -1:
        return ConnectivityVerdict(claimed, True, ("vacuous",), None)
    checked = ["nonempty"]
    if not C.nonempty:
        return ConnectivityVerdict(claimed, False, tuple(checked), None)
    if claimed == -1:
        return ConnectivityVerdict(claimed, True, tuple(checked), None)
    profiles = homology(C, claimed, "Z")
    ok = True
    for pr in profiles:
        if pr.degree == 0:
            checked.append("connected")
            if pr.betti != 0 or pr.torsion:
                ok = False
        elif 1 <= pr.degree <= claimed:
            checked.append(f"H{pr.degree}=0")
            if pr.betti != 0 or pr.torsion:
                ok = False
    caveat = "pi_1 not verified" if claimed >= 1 else None
    return ConnectivityVerdict(claimed, ok, tuple(checked), caveat)


# ---------------------------------------------------------------------------
# fast H_0/H_1 pipeline for graded posets of length <= 3 and their products


class _Graph2Complex:
    """Vertices, edges and triangles of the order complex of a <= 3-level
    sequence poset, or of its product with a label set, all by index
    arithmetic (edges: (1,2) block, then (1,3), then (2,3))."""

    def __init__(self, P: SeqPoset, s: int = 1):
        if P.max_len > 3:
            raise PosetBudgetError("fast path handles gradings of length <= 3")
        self.P = P
        self.s = s
        lv = P.levels + [np.zeros((0, k), dtype=np.int64)
                         for k in range(len(P.levels) + 1, 4)]
        self.c1, self.c2, self.c3 = (len(lv[0]), len(lv[1]), len(lv[2]))
        # face position tables in P
        self.f21 = []  # drop d from L2 -> position in L1
        for d in range(2):
            keep = lv[1][:, 1 - d] if self.c2 else np.zeros(0, dtype=np.int64)
            self.f21.append(self._find(P, 1, keep.reshape(-1, 1)))
        self.f32 = []  # drop d from L3 -> position in L2
        for d in range(3):
            cols = [c for c in range(3) if c != d]
            sub = lv[2][:, cols] if self.c3 else np.zeros((0, 2), dtype=np.int64)
            self.f32.append(self._find(P, 2, sub))
        self.f31 = []  # keep column k of L3 -> position in L1
        for k in range(3):
            sub = lv[2][:, [k]] if self.c3 else np.zeros((0, 1), dtype=np.int64)
            self.f31.append(self._find(P, 1, sub))
        # vertex counts (with labels)
        self.n1 = self.c1 * s
        self.n2 = self.c2 * s * s
        self.n3 = self.c3 * s ** 3
        self.V = self.n1 + self.n2 + self.n3
        self.E12 = 2 * self.n2
        self.E13 = 3 * self.n3
        self.E23 = 3 * self.n3
        self.E = self.E12 + self.E13 + self.E23
        self.T = 6 * self.n3
        # kept original index for (drop d, then drop e)
        self.keep_idx = [[0, 0], [0, 0], [0, 0]]
        for d in range(3):
            rem = [i for i in range(3) if i != d]
            for e in range(2):
                self.keep_idx[d][e] = rem[1 - e]

    @staticmethod
    def _find(P: SeqPoset, level_len: int, rows) -> np.ndarray:
        if len(rows) == 0:
            return np.zeros(0, dtype=np.int64)
        from .posets import _pack_rows
        keys = _pack_rows(np.asarray(rows, dtype=np.int64))
        skeys = P._keys[level_len - 1]
        pos = np.searchsorted(skeys, keys)
        if (pos >= len(skeys)).any() or (skeys[np.minimum(pos, len(skeys) - 1)] != keys).any():
            raise PosetBudgetError("face lookup failed: poset not downward closed")
        return P._order[level_len - 1][pos].astype(np.int64)

    # label-code helpers -----------------------------------------------------

    def _drop_digit(self, codes, d):
        s = self.s
        lo = codes % (s ** d)
        hi = codes // (s ** (d + 1))
        return lo + hi * (s ** d)

    def _digit(self, codes, k):
        return (codes // (self.s ** k)) % self.s

    # global ids ---------------------------------------------------------------

    def v1(self, p, code):
        return p * self.s + code

    def v2(self, p, code):
        return self.n1 + p * self.s ** 2 + code

    def v3(self, p, code):
        return self.n1 + self.n2 + p * self.s ** 3 + code

    def edge_arrays(self):
        """(u, v) endpoint arrays for all edges in id order."""
        s = self.s
        # E12: two per L2-with-label vertex; edge id = 2*idx2 + e
        if self.n2:
            idx2 = np.arange(self.n2, dtype=np.int64)
            p2 = idx2 // (s * s)
            c2 = idx2 % (s * s)
            E12u = np.empty(2 * self.n2, dtype=np.int64)
            E12v = np.empty(2 * self.n2, dtype=np.int64)
            for e in range(2):
                # dropping position e keeps entry 1-e and its label digit
                E12u[e::2] = self.v1(self.f21[e][p2], self._digit(c2, 1 - e))
                E12v[e::2] = self.n1 + idx2
            us, vs = [E12u], [E12v]
        else:
            us, vs = [np.zeros(0, dtype=np.int64)], [np.zeros(0, dtype=np.int64)]
        # E13: three per L3 vertex (keep k); id = E12 + 3*idx3 + k
        if self.n3:
            idx3 = np.arange(self.n3, dtype=np.int64)
            p3 = idx3 // (s ** 3)
            c3 = idx3 % (s ** 3)
            E13u = np.empty(3 * self.n3, dtype=np.int64)
            E13v = np.empty(3 * self.n3, dtype=np.int64)
            for k in range(3):
                p1 = self.f31[k][p3]
                c1 = self._digit(c3, k)
                E13u[k::3] = self.v1(p1, c1)
                E13v[k::3] = self.n1 + self.n2 + idx3
            us.append(E13u)
            vs.append(E13v)
            E23u = np.empty(3 * self.n3, dtype=np.int64)
            E23v = np.empty(3 * self.n3, dtype=np.int64)
            for d in range(3):
                p2 = self.f32[d][p3]
                c2 = self._drop_digit(c3, d)
                E23u[d::3] = self.v2(p2, c2)
                E23v[d::3] = self.n1 + self.n2 + idx3
            us.append(E23u)
            vs.append(E23v)
        else:
            z = np.zeros(0, dtype=np.int64)
            us += [z, z]
            vs += [z, z]
        return np.concatenate(us), np.concatenate(vs)

    def triangle_edges(self):
        """For each triangle: (e12, e13, e23) edge ids; triangles ordered
        (idx3, d, e)."""
        s = self.s
        if self.n3 == 0:
            z = np.zeros(0, dtype=np.int64)
            return z, z, z
        idx3 = np.arange(self.n3, dtype=np.int64)
        p3 = idx3 // (s ** 3)
        c3 = idx3 % (s ** 3)
        e12s, e13s, e23s = [], [], []
        for d in range(3):
            p2 = self.f32[d][p3]
            c2 = self._drop_digit(c3, d)
            idx2 = p2 * (s * s) + c2
            for e in range(2):
                k = self.keep_idx[d][e]
                e12 = 2 * idx2 + e
                e13 = self.E12 + 3 * idx3 + k
                e23 = self.E12 + self.E13 + 3 * idx3 + d
                e12s.append(e12)
                e13s.append(e13)
                e23s.append(e23)
        return (np.stack(e12s, axis=1).reshape(-1),
                np.stack(e13s, axis=1).reshape(-1),
                np.stack(e23s, axis=1).reshape(-1))


def _union_find_forest(V: int, us, vs):
    """Spanning forest: returns (component labels, tree mask over edges)."""
    parent = np.arange(V, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    tree = np.zeros(len(us), dtype=bool)
    for i in range(len(us)):
        a, b = find(int(us[i])), find(int(vs[i]))
        if a != b:
            parent[a] = b
            tree[i] = True
    comp = np.empty(V, dtype=np.int64)
    for x in range(V):
        comp[x] = find(x)
    return comp, tree


@dataclass
class GraphHomology:
    """H_0 / H_1 data of a 2-complex given by its graph + triangle relations."""

    V: int
    components: np.ndarray
    tree: np.ndarray
    nontree_index: np.ndarray  # edge id -> row id or -1
    m: int                     # cycle rank = number of non-tree edges
    h1_rank: int
    h1_torsion: tuple
    reducer: ZReducer

    @property
    def n_components(self) -> int:
        return len(np.unique(self.components))


def graph_h01(V: int, us, vs, tri_edges, tri_signs=(1, -1, 1)) -> GraphHomology:
    """H_0 and H_1 from the graph and triangle boundary relations.

    tri_edges: tuple of arrays (same length) of edge ids per triangle with
    the given signs; cycle coordinates = restriction to non-tree edges.
    """
    comp, tree = _union_find_forest(V, us, vs)
    nontree = np.where(~tree)[0]
    nontree_index = -np.ones(len(us), dtype=np.int64)
    nontree_index[nontree] = np.arange(len(nontree))
    red = ZReducer()
    arrs = [nontree_index[te].tolist() for te in tri_edges]
    n_tri = len(arrs[0]) if arrs else 0
    s0, s1, s2 = tri_signs
    a0, a1, a2 = arrs if arrs else ([], [], [])
    for t in range(n_tri):
        col = {}
        r = a0[t]
        if r >= 0:
            col[r] = s0
        r = a1[t]
        if r >= 0:
            col[r] = col.get(r, 0) + s1
        r = a2[t]
        if r >= 0:
            col[r] = col.get(r, 0) + s2
        col = {r: v for r, v in col.items() if v}
        if col:
            red.add(col)
    rank, torsion = red.finish()
    m = len(nontree)
    return GraphHomology(V, comp, tree, nontree_index, m, m - rank,
                         tuple(sorted(torsion)), red)


# ---------------------------------------------------------------------------
# Prop "addset" part 1 at H_0/H_1: the section l_{s0} comparison


@dataclass(frozen=True)
class SectionMapReport:
    h0_iso: bool
    h1_iso: bool
    h1_p: tuple      # (rank, torsion) of H_1(P)
    h1_q: tuple      # (rank, torsion) of H_1(P<S>)
    surjective: bool
    components: tuple  # (#pi0 P, #pi0 Q)

    @property
    def isomorphism(self) -> bool:
        return self.h0_iso and self.h1_iso


def _bfs_parents(V: int, us, vs, tree_mask):
    """Parent pointers (vertex, via-edge, sign) for each tree component."""
    adj = [[] for _ in range(V)]
    for i in np.where(tree_mask)[0]:
        u, v = int(us[i]), int(vs[i])
        adj[u].append((v, int(i), 1))    # traversing u->v follows the edge
        adj[v].append((u, int(i), -1))
    parent = [None] * V
    depth = [0] * V
    from collections import deque
    seen = [False] * V
    for root in range(V):
        if seen[root]:
            continue
        seen[root] = True
        parent[root] = (root, -1, 0)
        dq = deque([root])
        while dq:
            x = dq.popleft()
            for (y, eid, sgn) in adj[x]:
                if not seen[y]:
                    seen[y] = True
                    parent[y] = (x, eid, sgn)
                    depth[y] = depth[x] + 1
                    dq.append(y)
    return parent, depth


def _fundamental_cycle(edge_id, u, v, parent, depth):
    """Signed tree-path cycle for a non-tree edge (u, v): edge + path v->u."""
    col = {edge_id: 1}
    pu, pv = u, v
    # walk both endpoints to their LCA, recording signed tree edges
    while depth[pu] > depth[pv]:
        (x, eid, sgn) = parent[pu]
        col[eid] = col.get(eid, 0) + sgn   # edge traversed pu->x
        pu = x
    while depth[pv] > depth[pu]:
        (x, eid, sgn) = parent[pv]
        col[eid] = col.get(eid, 0) - sgn
        pv = x
    while pu != pv:
        (x, eid, sgn) = parent[pu]
        col[eid] = col.get(eid, 0) + sgn
        pu = x
        (x, eid, sgn) = parent[pv]
        col[eid] = col.get(eid, 0) - sgn
        pv = x
    return {r: c for r, c in col.items() if c}


def section_map_h01(P: SeqPoset, s: int, s0: int) -> SectionMapReport:
    """Verify (l_{s0})_*: H_k(P) -> H_k(P<S>) is an isomorphism for k <= 1.

    Groups are compared by invariants; surjectivity is the unit-cokernel of
    the stacked matrix [triangle relations | images of fundamental cycles].
    Surjectivity plus abstract isomorphism of finitely generated abelian
    groups gives isomorphism of the map (Hopfian property).
    """
    gP = _Graph2Complex(P, 1)
    gQ = _Graph2Complex(P, s)
    usP, vsP = gP.edge_arrays()
    usQ, vsQ = gQ.edge_arrays()
    triP = gP.triangle_edges()
    triQ = gQ.triangle_edges()
    HP = graph_h01(gP.V, usP, vsP, triP)
    HQ = graph_h01(gQ.V, usQ, vsQ, triQ)

    # H_0: l must induce a bijection on components
    def l_vertex(gid: int) -> int:
        if gid < gP.n1:
            return gid * s + s0
        if gid < gP.n1 + gP.n2:
            p = gid - gP.n1
            code = s0 + s0 * s
            return gQ.n1 + p * s * s + code
        p = gid - gP.n1 - gP.n2
        code = s0 * (1 + s + s * s)
        return gQ.n1 + gQ.n2 + p * s ** 3 + code

    comp_map = {}
    injective = True
    for rep in np.unique(HP.components):
        verts = np.where(HP.components == rep)[0]
        qcomp = int(HQ.components[l_vertex(int(verts[0]))])
        if qcomp in comp_map.values():
            injective = False
        comp_map[int(rep)] = qcomp
    surj0 = set(comp_map.values()) == set(int(x) for x in np.unique(HQ.components))
    h0_iso = injective and surj0

    # l on edge ids: same (type, face-slot) with the all-s0 label code
    def l_edge(eid: int) -> int:
        if eid < gP.E12:
            idx2, e = divmod(eid, 2)
            code2 = s0 + s0 * s
            return 2 * (idx2 * s * s + code2) + e
        eid2 = eid - gP.E12
        code3 = s0 * (1 + s + s * s)
        if eid2 < gP.E13:
            idx3, k = divmod(eid2, 3)
            return gQ.E12 + 3 * (idx3 * s ** 3 + code3) + k
        eid3 = eid2 - gP.E13
        idx3, d = divmod(eid3, 3)
        return gQ.E12 + gQ.E13 + 3 * (idx3 * s ** 3 + code3) + d

    # feed images of P's fundamental cycles into Q's reducer
    parent, depth = _bfs_parents(gP.V, usP, vsP, HP.tree)
    nontreeP = np.where(~HP.tree)[0]
    red = HQ.reducer
    for eid in nontreeP:
        cyc = _fundamental_cycle(int(eid), int(usP[eid]), int(vsP[eid]), parent, depth)
        qcol = {}
        for pe, c in cyc.items():
            qe = l_edge(pe)
            r = int(HQ.nontree_index[qe])
            assert r >= 0 or True
            if r >= 0:
                qcol[r] = qcol.get(r, 0) + c
        qcol = {r: v for r, v in qcol.items() if v}
        if qcol:
            red.add(qcol)
    rank_total, tors_total = red.finish()
    surjective = (rank_total == HQ.m) and not tors_total
    h1_group_iso = (HP.h1_rank == HQ.h1_rank and HP.h1_torsion == HQ.h1_torsion)
    h1_iso = h1_group_iso and surjective
    return SectionMapReport(h0_iso, h1_iso, (HP.h1_rank, HP.h1_torsion),
                            (HQ.h1_rank, HQ.h1_torsion), surjective,
                            (HP.n_components, HQ.n_components))
