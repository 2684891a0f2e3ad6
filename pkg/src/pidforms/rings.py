"""Exact arithmetic for the supported base rings and their mod-2 structure.

Supported rings: the integers, quadratic integer rings O_{Q(sqrt D)} for a
fixed list of norm-Euclidean discriminants, and finite fields GF(p^f).
Elements are integer coordinate vectors in a fixed ring basis ({1} for Z,
{1, omega_D} for quadratic rings, {1, x, ..., x^(f-1)} for finite fields),
with arbitrary-precision arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

# Norm-Euclidean discriminants accepted for quadratic rings.  This guarantees
# that grid-search division, gcd and Smith reduction terminate.  D=17, although
# classically norm-Euclidean, is excluded: constructing O_{Q(sqrt 17)} raises.
ACCEPTED_QUADRATIC_D = frozenset(
    {-11, -7, -3, -2, -1, 2, 3, 5, 6, 7, 11, 13, 19, 21, 29, 33, 37, 41, 57, 73}
)

DEFAULT_UNIT_BUDGET = 10**6


class RingError(ValueError):
    pass


def _is_squarefree(d: int) -> bool:
    d = abs(d)
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    k = 2
    while k * k <= p:
        if p % k == 0:
            return False
        k += 1
    return True


def _poly_mod(coeffs, p):
    return tuple(c % p for c in coeffs)


def _poly_mul_mod(a, b, f, p):
    """Multiply polynomials a, b modulo (f, p); f monic, coefficients ascending."""
    deg = len(f) - 1
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # reduce by monic f: x^deg = -(f[0] + ... + f[deg-1] x^(deg-1))
    for i in range(len(prod) - 1, deg - 1, -1):
        c = prod[i]
        if c:
            prod[i] = 0
            for j in range(deg):
                prod[i - deg + j] = (prod[i - deg + j] - c * f[j]) % p
    prod = prod[:deg] + [0] * max(0, deg - len(prod))
    return tuple(c % p for c in prod[:deg])


def _poly_is_irreducible(f, p) -> bool:
    """Trial-division irreducibility test; fine for the small degrees used here."""
    deg = len(f) - 1
    if deg < 1 or f[-1] % p == 0:
        return False
    if deg == 1:
        return True

    def all_monic(d):
        # monic polynomials of degree d over F_p, ascending coefficients
        def rec(i, cur):
            if i == d:
                yield tuple(cur) + (1,)
                return
            for c in range(p):
                yield from rec(i + 1, cur + [c])

        yield from rec(0, [])

    for d in range(1, deg // 2 + 1):
        for g in all_monic(d):
            # divide f by g over F_p, check zero remainder
            rem = [c % p for c in f]
            while len(rem) >= len(g) and any(rem):
                if rem[-1] == 0:
                    rem.pop()
                    continue
                shift = len(rem) - len(g)
                c = rem[-1]  # g monic
                for i, gc in enumerate(g):
                    rem[shift + i] = (rem[shift + i] - c * gc) % p
                while rem and rem[-1] == 0:
                    rem.pop()
            if not any(rem):
                return False
    return True


class RingCtx:
    """A supported base ring with exact Euclidean arithmetic.

    kind is one of "Z", "quadratic", "gf".  Instances are immutable and safe
    for concurrent reads.
    """

    def __init__(self, kind: str, D: int | None = None, p: int | None = None,
                 f: tuple[int, ...] | None = None):
        self.kind = kind
        self.D = D
        self.p = p
        self.f = tuple(f) if f is not None else None
        if kind == "Z":
            self.degree = 1
        elif kind == "quadratic":
            if D is None or D in (0, 1) or not _is_squarefree(D):
                raise RingError(f"D={D} must be a squarefree integer != 0,1")
            if D not in ACCEPTED_QUADRATIC_D:
                raise RingError(
                    f"D={D} is outside the accepted norm-Euclidean list "
                    f"{sorted(ACCEPTED_QUADRATIC_D)}")
            self.degree = 2
            # omega = sqrt(D) if D = 2,3 mod 4, else (1+sqrt(D))/2; omega^2 = wa + wb*omega
            if D % 4 in (2, 3):
                self._wa, self._wb = D, 0
            else:
                self._wa, self._wb = (D - 1) // 4, 1
        elif kind == "gf":
            if p is None or not _is_prime(p):
                raise RingError(f"p={p} must be prime")
            if not self.f or len(self.f) < 2:
                raise RingError("f must be a polynomial of degree >= 1 (ascending coeffs)")
            ff = _poly_mod(self.f, p)
            if ff[-1] != 1:
                raise RingError("f must be monic")
            if not _poly_is_irreducible(ff, p):
                raise RingError(f"f={list(ff)} is reducible over F_{p}")
            self.f = ff
            self.degree = len(ff) - 1
            self.q = p ** self.degree
        else:
            raise RingError(f"unknown ring kind {kind!r}")
        self.zero = RElem(self, (0,) * self.degree)
        self.one = RElem(self, (1,) + (0,) * (self.degree - 1))
        self._fund_unit: RElem | None | str = "uncomputed"

    # -- constructors ------------------------------------------------------

    @staticmethod
    def integers() -> "RingCtx":
        return RingCtx("Z")

    @staticmethod
    def quadratic(D: int) -> "RingCtx":
        return RingCtx("quadratic", D=D)

    @staticmethod
    def gf(p: int, f) -> "RingCtx":
        return RingCtx("gf", p=p, f=tuple(f))

    @staticmethod
    def from_descriptor(desc: dict) -> "RingCtx":
        kind = desc.get("kind")
        if kind == "Z":
            return RingCtx.integers()
        if kind == "quadratic":
            return RingCtx.quadratic(int(desc["D"]))
        if kind == "gf":
            return RingCtx.gf(int(desc["p"]), [int(c) for c in desc["f"]])
        raise RingError(f"bad ring descriptor {desc!r}")

    def descriptor(self) -> dict:
        if self.kind == "Z":
            return {"kind": "Z"}
        if self.kind == "quadratic":
            return {"kind": "quadratic", "D": self.D}
        return {"kind": "gf", "p": self.p, "f": list(self.f)}

    # -- basic structure ---------------------------------------------------

    @property
    def is_field(self) -> bool:
        return self.kind == "gf"

    @property
    def two_invertible(self) -> bool:
        return self.kind == "gf" and self.p != 2

    def elem(self, *coords: int) -> "RElem":
        if len(coords) != self.degree:
            raise RingError(f"expected {self.degree} coordinates, got {len(coords)}")
        return RElem(self, tuple(int(c) for c in coords))

    def from_int(self, n: int) -> "RElem":
        return RElem(self, (int(n),) + (0,) * (self.degree - 1))

    def elements(self):
        """All elements (finite fields only)."""
        if self.kind != "gf":
            raise RingError("elements() requires a finite field")

        def rec(i, cur):
            if i == self.degree:
                yield RElem(self, tuple(cur))
                return
            for c in range(self.p):
                yield from rec(i + 1, cur + [c])

        yield from rec(0, [])

    def torsion_units(self) -> list["RElem"]:
        """The finite unit group for imaginary quadratic rings (and {1,-1} for Z)."""
        if self.kind == "Z":
            return [self.one, -self.one]
        if self.kind == "quadratic" and self.D < 0:
            if self.D == -1:
                i = self.elem(0, 1)
                return [self.one, i, -self.one, -i]
            if self.D == -3:
                w = self.elem(0, 1)
                return [self.one, w, w * w, -self.one, -w, -(w * w)]
            return [self.one, -self.one]
        raise RingError("torsion_units() is for Z and imaginary quadratic rings")

    def fundamental_unit(self, budget: int = DEFAULT_UNIT_BUDGET) -> "RElem | None":
        """Fundamental unit of a real quadratic ring, or None if the budget runs out.

        Route: continued-fraction expansion of sqrt(D) gives the least solution
        of x^2 - D y^2 = +-1 (the fundamental unit of Z[sqrt D]); for
        D = 1 mod 4 the possibly smaller half-integer units (x + y sqrt D)/2 with
        x, y odd and x^2 - D y^2 = +-4 are scanned below that bound.
        """
        if self.kind != "quadratic" or self.D < 0:
            raise RingError("fundamental_unit() requires a real quadratic ring")
        if self._fund_unit != "uncomputed":
            return self._fund_unit
        D = self.D
        a0 = math.isqrt(D)
        # continued fraction of sqrt(D): m,d,a recurrences, exact integers
        m, d, a = 0, 1, a0
        p_prev, p_cur = 1, a0
        q_prev, q_cur = 0, 1
        sol = None
        for _ in range(budget):
            if p_cur * p_cur - D * q_cur * q_cur in (1, -1):
                sol = (p_cur, q_cur)
                break
            m = d * a - m
            d = (D - m * m) // d
            a = (a0 + m) // d
            p_prev, p_cur = p_cur, a * p_cur + p_prev
            q_prev, q_cur = q_cur, a * q_cur + q_prev
        if sol is None:
            self._fund_unit = None
            return None
        x1, y1 = sol
        if D % 4 in (2, 3):
            u = self.elem(x1, y1)
        else:
            # the fundamental unit of O may be a half-integer (x + y sqrt D)/2 with
            # x = y (mod 2); the least y with x^2 - D y^2 = +-4 gives it, and it
            # is bounded by the Z[sqrt D] solution (2*x1, 2*y1)
            half = None
            for y in range(1, 2 * y1 + 1):
                for s in (4, -4):
                    t = D * y * y + s
                    if t <= 0:
                        continue
                    x = math.isqrt(t)
                    if x * x == t and (x - y) % 2 == 0:
                        half = (x, y)
                        break
                if half:
                    break
            assert half is not None  # (2*x1, 2*y1) solves it, so the scan cannot miss
            x, y = half
            # (x + y sqrt D)/2 = (x - y)/2 + y * omega
            u = self.elem((x - y) // 2, y)
        assert abs(u.norm()) == 1
        self._fund_unit = u
        return u

    def __eq__(self, other):
        return (isinstance(other, RingCtx)
                and (self.kind, self.D, self.p, self.f) == (other.kind, other.D, other.p, other.f))

    def __hash__(self):
        return hash((self.kind, self.D, self.p, self.f))

    def __repr__(self):
        if self.kind == "Z":
            return "Z"
        if self.kind == "quadratic":
            return f"O(Q(sqrt {self.D}))"
        return f"GF({self.p}^{self.degree})"


class RElem:
    """Ring element as an integer coordinate vector in the fixed ring basis."""

    __slots__ = ("ring", "coords")

    def __init__(self, ring: RingCtx, coords: tuple[int, ...]):
        if ring.kind == "gf":
            coords = tuple(c % ring.p for c in coords)
        self.ring = ring
        self.coords = coords

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "RElem") -> "RElem":
        return RElem(self.ring, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "RElem") -> "RElem":
        return RElem(self.ring, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "RElem":
        return RElem(self.ring, tuple(-a for a in self.coords))

    def __mul__(self, other: "RElem") -> "RElem":
        r = self.ring
        if r.kind == "Z":
            return RElem(r, (self.coords[0] * other.coords[0],))
        if r.kind == "quadratic":
            a, b = self.coords
            c, d = other.coords
            # (a + b w)(c + d w) with w^2 = wa + wb w
            return RElem(r, (a * c + b * d * r._wa, a * d + b * c + b * d * r._wb))
        return RElem(r, _poly_mul_mod(self.coords, other.coords, r.f, r.p))

    def __pow__(self, n: int) -> "RElem":
        if n < 0:
            return self.unit_inverse() ** (-n)
        out, base = self.ring.one, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def __eq__(self, other):
        return isinstance(other, RElem) and self.ring == other.ring and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        r = self.ring
        if r.kind == "Z":
            return str(self.coords[0])
        if r.kind == "quadratic":
            a, b = self.coords
            return f"({a}{b:+}w)" if b else str(a)
        return "gf" + str(list(self.coords))

    # -- Euclidean structure -----------------------------------------------

    def conj(self) -> "RElem":
        """Galois conjugate (quadratic rings; identity on Z)."""
        r = self.ring
        if r.kind == "Z":
            return self
        if r.kind != "quadratic":
            raise RingError("conj() is for quadratic rings")
        a, b = self.coords
        if r.D % 4 in (2, 3):
            return RElem(r, (a, -b))
        return RElem(r, (a + b, -b))  # sigma(omega) = 1 - omega

    def norm(self) -> int:
        """Field norm down to Z (for gf: 0 for zero, 1 otherwise)."""
        r = self.ring
        if r.kind == "Z":
            return self.coords[0]
        if r.kind == "quadratic":
            a, b = self.coords
            if r.D % 4 in (2, 3):
                return a * a - r.D * b * b
            return a * a + a * b - b * b * ((r.D - 1) // 4)
        return 0 if self.is_zero() else 1

    def euclidean_norm(self) -> int:
        return abs(self.norm())

    def is_unit(self) -> bool:
        if self.ring.kind == "gf":
            return not self.is_zero()
        return abs(self.norm()) == 1

    def unit_inverse(self) -> "RElem":
        """Inverse of a unit; raises for non-units."""
        r = self.ring
        if r.kind == "gf":
            if self.is_zero():
                raise ZeroDivisionError("zero has no inverse")
            return self ** (r.q - 2)
        n = self.norm()
        if abs(n) != 1:
            raise RingError(f"{self!r} is not a unit")
        inv = self.conj() if r.kind == "quadratic" else self.ring.one
        if n == -1:
            inv = -inv
        assert (self * inv) == r.one
        return inv

    def __divmod__(self, other: "RElem") -> tuple["RElem", "RElem"]:
        """Euclidean division with abs(norm(remainder)) < abs(norm(divisor))."""
        r = self.ring
        if other.is_zero():
            raise ZeroDivisionError("division by zero")
        if r.kind == "Z":
            q, rem = divmod(self.coords[0], other.coords[0])
            return RElem(r, (q,)), RElem(r, (rem,))
        if r.kind == "gf":
            return self * other.unit_inverse(), r.zero
        # quadratic: candidates for q = qa + qb*omega chosen so that one real
        # embedding of the remainder nearly vanishes.  The region |N| < |N(b)|
        # is hyperbolic, so a square grid around the rational quotient misses
        # valid quotients for fields near the Euclidean boundary (e.g. D=73);
        # embedding-guided candidates along an expanding qb window do not.
        num = self * other.conj()
        den = other.norm()
        x0, x1 = num.coords
        target_norm = abs(den)
        D = r.D
        qb0 = round_div(x1, den)
        best = None
        seen: set[tuple[int, int]] = set()

        def consider(qa: int, qb: int):
            nonlocal best
            if (qa, qb) in seen:
                return
            seen.add((qa, qb))
            q = RElem(r, (qa, qb))
            rem = self - q * other
            nm = rem.euclidean_norm()
            if nm < target_norm:
                key = (max(abs(c) for c in rem.coords), nm)
                if best is None or key < best[0]:
                    best = (key, q, rem)

        if D < 0:
            # positive-definite norm: nearest rounding works, small slack for safety
            qa0 = round_div(x0, den)
            for dqa in range(-2, 3):
                for dqb in range(-2, 3):
                    consider(qa0 + dqa, qb0 + dqb)
            if best is not None:
                return best[1], best[2]
            raise RingError(f"norm-Euclidean division failed for {self!r} / {other!r}")

        for width in (1, 4, 16, 64, 256, 1024, 4096):
            for qb in range(qb0 - width, qb0 + width + 1):
                T = x1 - den * qb
                s = math.isqrt(T * T * D)
                # roots of the two embeddings A + T*omega^(i) = 0 in qa
                if D % 4 == 1:
                    numerators = (2 * x0 + T + s, 2 * x0 + T + s + 1,
                                  2 * x0 + T - s, 2 * x0 + T - s - 1)
                    dd = 2 * den
                else:
                    numerators = (x0 + s, x0 + s + 1, x0 - s, x0 - s - 1)
                    dd = den
                for numer in numerators:
                    qa = round_div(numer, dd)
                    for dqa in (-1, 0, 1):
                        consider(qa + dqa, qb)
            if best is not None:
                return best[1], best[2]
        raise RingError(f"norm-Euclidean division failed for {self!r} / {other!r}")

    def __floordiv__(self, other: "RElem") -> "RElem":
        return divmod(self, other)[0]

    def __mod__(self, other: "RElem") -> "RElem":
        return divmod(self, other)[1]

    def exact_div(self, other: "RElem") -> "RElem":
        """Exact division in the ring; raises if other does not divide self."""
        q, rem = divmod(self, other)
        if not rem.is_zero():
            raise RingError(f"{other!r} does not divide {self!r}")
        return q


def round_div(a: int, b: int) -> int:
    """Nearest-integer division, exact in integers (ties toward +inf)."""
    if b < 0:
        a, b = -a, -b
    return (2 * a + b) // (2 * b)


def gcd_bezout(a: RElem, b: RElem) -> tuple[RElem, RElem, RElem]:
    """gcd(a, b) = s*a + t*b via the Euclidean algorithm; returns (g, s, t)."""
    ring = a.ring
    r0, r1 = a, b
    s0, s1 = ring.one, ring.zero
    t0, t1 = ring.zero, ring.one
    while not r1.is_zero():
        q, rem = divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return r0, s0, t0


# ---------------------------------------------------------------------------
# mod-2 residue structure


@dataclass(frozen=True)
class Mod2Ctx:
    """Complete description of R/(2): residues, squares U(R), S(R) classes.

    residues are canonical representatives enumerated deterministically
    (coordinate vectors read with the 1-coordinate least significant).
    squares/sclasses/unit_squares hold residue *indices*.  For rings with 2
    invertible the structure is trivial (single zero residue).
    """

    ring: RingCtx
    two_invertible: bool
    residues: tuple[RElem, ...]
    add_table: tuple[tuple[int, ...], ...]
    mul_table: tuple[tuple[int, ...], ...]
    squares: frozenset[int]              # U(R) = {x^2 : x in R/(2)} as indices
    unit_squares: frozenset[int]         # {u^2 mod 2 : u a unit of R}
    unit_square_lifts: dict              # residue index -> a ring unit u with u^2 = it mod 2
    sclasses: tuple[tuple[int, ...], ...]  # orbits of residues under unit-square mult
    assumption_holds: bool
    u_dim: int | None                    # dim_{U(R)} R/(2) when the Assumption holds
    u_basis: tuple[int, ...]             # residue indices forming a U(R)-basis of R/(2)
    u_coords: dict                       # residue index -> tuple of U-element indices

    def reduce(self, x: RElem) -> int:
        """Index of the canonical residue of x mod 2."""
        r = self.ring
        if self.two_invertible:
            return 0
        if r.kind == "gf":
            return self._index_of(x)
        canon = RElem(r, tuple(c % 2 for c in x.coords))
        return self._index_of(canon)

    def _index_of(self, x: RElem) -> int:
        key = _coord_key(x.coords, 2 if self.ring.kind != "gf" else self.ring.p)
        return key

    def residue(self, idx: int) -> RElem:
        return self.residues[idx]

    def sclass_of(self, x: RElem) -> int:
        """Index (into sclasses) of the S(R) class of x mod 2."""
        rid = self.reduce(x)
        for i, orbit in enumerate(self.sclasses):
            if rid in orbit:
                return i
        raise RingError("residue outside S(R) partition")

    def sclass_rep(self, x: RElem) -> int:
        """Canonical residue representative (min index) of the S(R) class of x."""
        return self.sclasses[self.sclass_of(x)][0]


def _coord_key(coords, base) -> int:
    key = 0
    for c in reversed(coords):
        key = key * base + (c % base)
    return key


@lru_cache(maxsize=None)
def mod2_structure(ring: RingCtx) -> Mod2Ctx:
    """Compute the full mod-2 residue structure of the ring."""
    if ring.two_invertible:
        z = ring.zero
        return Mod2Ctx(ring, True, (z,), ((0,),), ((0,),), frozenset({0}),
                       frozenset({0}), {0: ring.one}, ((0,),), True, 0, (), {0: ()})

    # residues in coordinate order, 1-coordinate least significant
    if ring.kind == "gf":
        base = ring.p
        residues = sorted(ring.elements(), key=lambda e: _coord_key(e.coords, base))
    else:
        base = 2
        deg = ring.degree
        residues = []
        for key in range(2 ** deg):
            coords = tuple((key >> i) & 1 for i in range(deg))
            residues.append(RElem(ring, coords))
    residues = tuple(residues)
    index = {r.coords: i for i, r in enumerate(residues)}

    def red(x: RElem) -> int:
        if ring.kind == "gf":
            return index[x.coords]
        return index[tuple(c % 2 for c in x.coords)]

    n = len(residues)
    add_table = tuple(tuple(red(residues[i] + residues[j]) for j in range(n)) for i in range(n))
    mul_table = tuple(tuple(red(residues[i] * residues[j]) for j in range(n)) for i in range(n))
    squares = frozenset(mul_table[i][i] for i in range(n))

    # unit squares mod 2, with concrete ring-unit lifts
    lifts: dict[int, RElem] = {}
    if ring.kind == "Z":
        lifts[red(ring.one)] = ring.one
    elif ring.kind == "gf":
        # Frobenius is surjective on finite fields: sqrt(a) = a^(q/2) for p=2
        for a in residues:
            if a.is_zero():
                continue
            u = a ** (ring.q // 2) if ring.p == 2 else a  # p odd is two_invertible, unreachable
            assert u * u == a
            lifts.setdefault(red(a), u)
    else:
        gens = []
        if ring.D < 0:
            gens = ring.torsion_units()
        else:
            fu = ring.fundamental_unit()
            if fu is not None:
                gens = [ring.one, -ring.one, fu, fu * fu, fu ** 3]
            else:
                gens = [ring.one, -ring.one]
        # close the image of the unit group in (R/2)^x under multiplication
        unit_residues = {red(u): u for u in gens}
        changed = True
        while changed:
            changed = False
            items = list(unit_residues.items())
            for i1, u1 in items:
                for i2, u2 in items:
                    i3 = mul_table[i1][i2]
                    if i3 not in unit_residues:
                        unit_residues[i3] = u1 * u2
                        changed = True
        for idx, u in unit_residues.items():
            lifts.setdefault(mul_table[idx][idx], u)
    unit_squares = frozenset(lifts.keys())

    # S(R): orbits of residues under multiplication by unit squares
    seen = set()
    orbits = []
    for i in range(n):
        if i in seen:
            continue
        orbit = sorted({mul_table[i][s] for s in unit_squares} | {i})
        orbits.append(tuple(orbit))
        seen.update(orbit)
    sclasses = tuple(orbits)

    # Assumption: every r^2 mod 2 lies in {0} u unit_squares (exhaustive)
    zero_idx = red(ring.zero)
    holds = all(mul_table[i][i] in unit_squares or mul_table[i][i] == zero_idx
                for i in range(n))

    u_dim = None
    u_basis: tuple[int, ...] = ()
    u_coords: dict = {}
    if holds:
        sq = sorted(squares)
        basis: list[int] = []
        coords_map: dict[int, tuple[int, ...]] = {zero_idx: ()}
        for i in range(n):
            if i in coords_map:
                continue
            # adjoin i as a new basis vector; span multiplies by |U|
            coords_map = {v: vc + (zero_idx,) for v, vc in coords_map.items()}
            basis.append(i)
            for v, vc in list(coords_map.items()):
                for s in sq:
                    if s == zero_idx:
                        continue
                    w = add_table[v][mul_table[s][i]]
                    if w in coords_map:
                        raise RingError("U-span collision: squares do not act freely")
                    coords_map[w] = vc[:-1] + (s,)
        u_dim = len(basis)
        u_basis = tuple(basis)
        u_coords = coords_map
        assert len(coords_map) == n, "U-span of basis must exhaust R/(2)"

    return Mod2Ctx(ring, False, residues, add_table, mul_table, squares,
                   unit_squares, lifts, sclasses, holds, u_dim, u_basis, u_coords)


# ---------------------------------------------------------------------------
# Assumption checker


@dataclass(frozen=True)
class AssumptionVerdict:
    holds: bool | None          # None = unknown (budget exceeded)
    witness: RElem | None       # on failure: r with r^2 neither 0 nor a unit square mod 2
    route: str


def check_assumption(ring: RingCtx, unit_budget: int = DEFAULT_UNIT_BUDGET) -> AssumptionVerdict:
    """Decide the squares-mod-2 assumption for the ring.

    Quadratic rings follow the D mod 4 / mod 8 case analysis, with the
    fundamental unit computed by continued fractions in the D = 5 mod 8
    branch.  The verdict is cross-checked exhaustively over R/(2).
    """
    if ring.kind == "Z":
        verdict = AssumptionVerdict(True, None, "integers")
    elif ring.kind == "gf":
        if ring.p == 2:
            verdict = AssumptionVerdict(True, None, "finite field of characteristic 2 (Frobenius)")
        else:
            verdict = AssumptionVerdict(True, None, "2 invertible")
    else:
        D = ring.D
        omega = ring.elem(0, 1)
        if D % 4 == 2:
            verdict = AssumptionVerdict(True, None, "D=2 (mod 4)")
        elif D % 4 == 3:
            verdict = AssumptionVerdict(True, None, "D=3 (mod 4)")
        elif D % 8 == 1:
            verdict = AssumptionVerdict(False, omega, "D=1 (mod 8)")
        else:  # D = 5 mod 8
            if D < 0:
                units = ring.torsion_units()
                good = any(any(c % 2 for c in (u - ring.one).coords) for u in units)
                route = "D=5 (mod 8), torsion unit"
                verdict = AssumptionVerdict(good, None if good else omega,
                                            route + (" != 1 (mod 2)" if good else " = 1 (mod 2)"))
            else:
                fu = ring.fundamental_unit(budget=unit_budget)
                if fu is None:
                    return AssumptionVerdict(None, None,
                                             "D=5 (mod 8), fundamental-unit budget exceeded")
                good = any(c % 2 for c in (fu - ring.one).coords)
                verdict = AssumptionVerdict(good, None if good else omega,
                                            "D=5 (mod 8), fundamental unit "
                                            + ("!= 1 (mod 2)" if good else "= 1 (mod 2)"))
    # cross-check against the exhaustive mod-2 tables
    if verdict.holds is not None:
        ctx = mod2_structure(ring)
        assert ctx.assumption_holds == verdict.holds, "route disagrees with exhaustive check"
        if verdict.witness is not None:
            widx = ctx.reduce(verdict.witness * verdict.witness)
            assert widx != ctx.reduce(ring.zero) and widx not in ctx.unit_squares
    return verdict
