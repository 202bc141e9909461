"""Coordinate rings of configuration spaces of 1-3 points of P^1 minus {0,inf},
in partial-fraction canonical form, with the expansion/residue operators the
chiral differentials consume.

A monomial is an exponent tuple over the factors

    arity 1: (e1,)
    arity 2: (e1, e2, e12)
    arity 3: (e1, e2, e3, e12, e13, e23)

where e12 is the exponent of (z1-z2) etc.  Canonical monomials keep difference
factors only as poles (exponent < 0) and store at most one pole location per
variable: if (z1-zj) is inverted then z1 does not appear at all, and not both
(z1-z2) and (z1-z3) are inverted; if (z2-z3) is inverted then z2 does not
appear.  Iterated partial fractions make this a vector-space basis, so two
sections are equal iff their term tables are equal.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction

from .linalg import ZERO, ONE, format_scalar, parse_scalar

PAIRS = {0: (), 1: (), 2: ((1, 2),), 3: ((1, 2), (1, 3), (2, 3))}

MAX_WINDOW_WIDTH = 256
_BIG = 10 ** 9

AT0 = "at0"
AT_INF = "atInf"
DIAGONAL = "diagonal"


def binom(e: int, k: int) -> int:
    """Binomial coefficient with arbitrary integer upper index."""
    if k < 0:
        return 0
    if e >= 0:
        return math.comb(e, k) if k <= e else 0
    num = 1
    for t in range(k):
        num *= e - t
    return num // math.factorial(k)


def key_len(arity: int) -> int:
    return arity + len(PAIRS[arity])


def pair_slot(arity: int, a: int, b: int) -> int:
    return arity + PAIRS[arity].index((a, b))


def total_z_degree(key: tuple) -> int:
    """z-degree with each z_i counting +1 and each (z_i-z_j)^-1 counting -1."""
    return sum(key)


def _is_canonical(arity: int, key: tuple) -> bool:
    if arity < 2:
        return True
    if arity == 2:
        e1, _e2, e12 = key
        return e12 <= 0 and (e12 == 0 or e1 == 0)
    e1, e2, _e3, e12, e13, e23 = key
    if e12 > 0 or e13 > 0 or e23 > 0:
        return False
    if e12 < 0 and e13 < 0:
        return False
    if (e12 < 0 or e13 < 0) and e1 != 0:
        return False
    if e23 < 0 and e2 != 0:
        return False
    return True


def _canonicalize_into(arity: int, key: tuple, coeff: Fraction, out: dict) -> None:
    """Rewrite an arbitrary exponent tuple into canonical monomials.

    Partial-fraction rules, applied to one violation at a time:
      positive difference powers expand binomially;
      (z1-z2)^-1 (z1-z3)^-1 = (z2-z3)^-1 [(z1-z2)^-1 - (z1-z3)^-1];
      z1^a with a pole (z1-zj)^-q rewrites via z1 = zj + (z1-zj) (a > 0)
      or  z1^-1 (z1-zj)^-1 = zj^-1 [(z1-zj)^-1 - z1^-1]      (a < 0);
    and the same in (z2, z3).  Each rule strictly shrinks a nonnegative
    measure, so the worklist terminates.
    """
    work = [(key, coeff)]
    pairs = PAIRS[arity]
    while work:
        k, c = work.pop()
        if not c:
            continue
        # positive difference powers: expand (za-zb)^e, e > 0
        pos = None
        for s, (a, b) in enumerate(pairs):
            if k[arity + s] > 0:
                pos = (s, a, b)
                break
        if pos is not None:
            s, a, b = pos
            e = k[arity + s]
            base = list(k)
            base[arity + s] = 0
            for t in range(e + 1):
                nk = list(base)
                nk[a - 1] += t
                nk[b - 1] += e - t
                sign = -1 if (e - t) % 2 else 1
                work.append((tuple(nk), c * binom(e, t) * sign))
            continue
        if arity == 3 and k[3] < 0 and k[4] < 0:
            # 1/((z1-z2)(z1-z3)) = (z2-z3)^-1 [(z1-z2)^-1 - (z1-z3)^-1]
            k1 = list(k)
            k1[4] += 1
            k1[5] -= 1
            k2 = list(k)
            k2[3] += 1
            k2[5] -= 1
            work.append((tuple(k1), c))
            work.append((tuple(k2), -c))
            continue
        # a variable power coexisting with one of its poles
        fixed = None
        if arity >= 2 and k[0] != 0:
            if k[arity] < 0:
                fixed = (1, 2, arity)
            elif arity == 3 and k[4] < 0:
                fixed = (1, 3, 4)
        if fixed is None and arity == 3 and k[1] != 0 and k[5] < 0:
            fixed = (2, 3, 5)
        if fixed is None:
            out[k] = out.get(k, ZERO) + c
            if not out[k]:
                del out[k]
            continue
        v, j, slot = fixed
        ev = k[v - 1]
        if ev > 0:
            # z_v^ev = sum_t C(ev,t) z_j^(ev-t) (z_v-z_j)^t
            base = list(k)
            base[v - 1] = 0
            for t in range(ev + 1):
                nk = list(base)
                nk[j - 1] += ev - t
                nk[slot] += t
                work.append((tuple(nk), c * binom(ev, t)))
        else:
            # z_v^-1 (z_v-z_j)^-1 = z_j^-1 [(z_v-z_j)^-1 - z_v^-1]
            k1 = list(k)
            k1[v - 1] += 1
            k1[j - 1] -= 1
            k2 = list(k)
            k2[j - 1] -= 1
            k2[slot] += 1
            work.append((tuple(k1), c))
            work.append((tuple(k2), -c))


class RationalSection:
    """Element of the arity-n coordinate ring in partial-fraction form."""

    __slots__ = ("arity", "terms")

    def __init__(self, arity: int, terms=None, _canonical=False):
        if arity not in (0, 1, 2, 3):
            raise ValueError("arity must be 0..3, got %r" % (arity,))
        self.arity = arity
        if terms is None:
            self.terms = {}
        elif _canonical:
            self.terms = {k: Fraction(c) for k, c in terms.items() if c}
        else:
            out: dict = {}
            want = key_len(arity)
            for k, c in terms.items():
                if len(k) != want:
                    raise ValueError("key %r has wrong length for arity %d" % (k, arity))
                _canonicalize_into(arity, tuple(k), Fraction(c), out)
            self.terms = out

    @classmethod
    def zero(cls, arity: int) -> "RationalSection":
        return cls(arity, {}, _canonical=True)

    @classmethod
    def one(cls, arity: int) -> "RationalSection":
        return cls(arity, {(0,) * key_len(arity): ONE}, _canonical=True)

    @classmethod
    def monomial(cls, arity: int, key: tuple, coeff=ONE) -> "RationalSection":
        return cls(arity, {tuple(key): Fraction(coeff)})

    @classmethod
    def z_power(cls, arity: int, i: int, power: int, coeff=ONE) -> "RationalSection":
        key = [0] * key_len(arity)
        key[i - 1] = power
        return cls(arity, {tuple(key): Fraction(coeff)})

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return (isinstance(other, RationalSection)
                and self.arity == other.arity and self.terms == other.terms)

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def __add__(self, other: "RationalSection") -> "RationalSection":
        if self.arity != other.arity:
            raise ValueError("arity mismatch")
        terms = dict(self.terms)
        for k, c in other.terms.items():
            s = terms.get(k, ZERO) + c
            if s:
                terms[k] = s
            else:
                del terms[k]
        return RationalSection(self.arity, terms, _canonical=True)

    def __neg__(self) -> "RationalSection":
        return RationalSection(self.arity, {k: -c for k, c in self.terms.items()},
                               _canonical=True)

    def __sub__(self, other: "RationalSection") -> "RationalSection":
        return self + (-other)

    def scale(self, c) -> "RationalSection":
        c = Fraction(c)
        if not c:
            return RationalSection.zero(self.arity)
        return RationalSection(self.arity, {k: c * x for k, x in self.terms.items()},
                               _canonical=True)

    def __repr__(self):
        return "RationalSection(%d, %s)" % (self.arity, section_to_string(self))


def multiply(f: RationalSection, g: RationalSection) -> RationalSection:
    """Exact product, re-expressed in canonical partial fractions."""
    if f.arity != g.arity:
        raise ValueError("arity mismatch: %d vs %d" % (f.arity, g.arity))
    out: dict = {}
    for kf, cf in f.terms.items():
        for kg, cg in g.terms.items():
            key = tuple(a + b for a, b in zip(kf, kg))
            _canonicalize_into(f.arity, key, cf * cg, out)
    return RationalSection(f.arity, out, _canonical=True)


def derive(f: RationalSection, i: int) -> RationalSection:
    """Formal partial derivative with respect to z_i."""
    if not 1 <= i <= f.arity:
        raise ValueError("variable index %d out of range for arity %d" % (i, f.arity))
    out: dict = {}
    pairs = PAIRS[f.arity]
    for key, c in f.terms.items():
        e = key[i - 1]
        if e:
            nk = list(key)
            nk[i - 1] = e - 1
            _canonicalize_into(f.arity, tuple(nk), c * e, out)
        for s, (a, b) in enumerate(pairs):
            ed = key[f.arity + s]
            if not ed or (i != a and i != b):
                continue
            nk = list(key)
            nk[f.arity + s] = ed - 1
            sign = 1 if i == a else -1
            _canonicalize_into(f.arity, tuple(nk), c * ed * sign, out)
    return RationalSection(f.arity, out, _canonical=True)


def remove_variable(f: RationalSection, i: int) -> RationalSection:
    """Order-preserving relabeling onto arity-(n-1) after deleting z_i.

    f must not involve z_i (exponent 0 in every slot touching i).
    """
    n = f.arity
    out = {}
    for key, c in f.terms.items():
        out[_removed_key(n, key, i)] = c
    return RationalSection(n - 1, out, _canonical=True)


def _removed_key(arity: int, key: tuple, i: int) -> tuple:
    if key[i - 1] != 0:
        raise ValueError("section involves z_%d" % i)
    newvars = [v for v in range(1, arity + 1) if v != i]
    relabel = {old: new + 1 for new, old in enumerate(newvars)}
    nk = [0] * key_len(arity - 1)
    for v in newvars:
        nk[relabel[v] - 1] = key[v - 1]
    for s, (a, b) in enumerate(PAIRS[arity]):
        e = key[arity + s]
        if i in (a, b):
            if e != 0:
                raise ValueError("section involves the (z_%d-z_%d) factor" % (a, b))
            continue
        if e:
            nk[pair_slot(arity - 1, relabel[a], relabel[b])] = e
    return tuple(nk)


class ModeDecomposition:
    """Coefficients of an expansion of f in the local parameter at a point.

    entries: sorted list (m, coefficient RationalSection of arity n-1), one per
    mode in the window with nonzero coefficient.  support_min/support_max bound
    where nonzero coefficients can occur (None = unbounded on that side);
    truncated_below/above report whether the window clipped the support.
    """

    __slots__ = ("entries", "window", "support_min", "support_max",
                 "truncated_below", "truncated_above")

    def __init__(self, entries, window, support_min, support_max):
        self.entries = entries
        self.window = window
        self.support_min = support_min
        self.support_max = support_max
        lo, hi = window
        self.truncated_below = support_min is None or support_min < lo
        self.truncated_above = support_max is None or support_max > hi

    def coefficient(self, m: int, arity: int) -> RationalSection:
        for mm, g in self.entries:
            if mm == m:
                return g
        return RationalSection.zero(arity)

    def as_dict(self) -> dict:
        return dict(self.entries)


class _Factor:
    """One z_i-dependent factor of a canonical monomial, as a series in the
    local parameter.  Exactly one (keydelta, coeff) per supported exponent.

    min_exp/max_exp are the exact support bounds (None = unbounded on that
    side); gen(lo, hi) materializes {exponent: (keydelta, coeff)} over the
    requested range intersected with the support.
    """

    __slots__ = ("min_exp", "max_exp", "_gen")

    def __init__(self, min_exp, max_exp, gen):
        self.min_exp = min_exp
        self.max_exp = max_exp
        self._gen = gen

    def gen(self, lo: int, hi: int) -> dict:
        if self.min_exp is not None:
            lo = max(lo, self.min_exp)
        if self.max_exp is not None:
            hi = min(hi, self.max_exp)
        if lo < -_BIG // 2 or hi > _BIG // 2:
            raise ValueError("unbounded factor range; window logic broken")
        out = {}
        for m in range(lo, hi + 1):
            item = self._gen(m)
            if item is not None and item[1]:
                out[m] = item
        return out


def _unit_delta(arity: int) -> tuple:
    return (0,) * key_len(arity)


def _delta(arity: int, slot: int, e: int) -> tuple:
    d = [0] * key_len(arity)
    d[slot] = e
    return tuple(d)


def _factor_series(arity, key, i, location, j_diag):
    """Split one canonical monomial into z_i-dependent factor series and the
    static remainder key (the factors not involving z_i)."""
    pairs = PAIRS[arity]
    factors = []
    static = list(key)
    ei = key[i - 1]
    static[i - 1] = 0
    unit = _unit_delta(arity)

    if location in (AT0, AT_INF):
        if ei:
            factors.append(_Factor(ei, ei, lambda m, ei=ei: (unit, ONE) if m == ei else None))
        for s, (a, b) in enumerate(pairs):
            e = key[arity + s]
            if not e or (i != a and i != b):
                continue
            static[arity + s] = 0
            j = b if i == a else a
            if location == AT0:
                # |z_i| < |z_j|: (z_i-z_j)^e = (-1)^e sum_k C(-e+k-1,k) z_i^k z_j^(e-k)
                sign = Fraction((-1) ** (e % 2)) if i == a else ONE

                def gen(m, e=e, j=j, sign=sign):
                    if m < 0:
                        return None
                    return (_delta(arity, j - 1, e - m), sign * binom(-e + m - 1, m))

                factors.append(_Factor(0, None, gen))
            else:
                # |z_i| > |z_j|: (z_i-z_j)^e = sum_k C(-e+k-1,k) z_j^k z_i^(e-k)
                sign = ONE if i == a else Fraction((-1) ** (e % 2))

                def gen(m, e=e, j=j, sign=sign):
                    k = e - m
                    if k < 0:
                        return None
                    return (_delta(arity, j - 1, k), sign * binom(-e + k - 1, k))

                factors.append(_Factor(None, e, gen))
    else:  # diagonal at z_j: local parameter t = z_i - z_j
        j = j_diag
        if ei:
            # z_i^ei = (z_j + t)^ei = sum_k C(ei,k) z_j^(ei-k) t^k
            def gen(m, ei=ei, j=j):
                if m < 0:
                    return None
                return (_delta(arity, j - 1, ei - m), Fraction(binom(ei, m)))

            factors.append(_Factor(0, ei if ei > 0 else None, gen))
        for s, (a, b) in enumerate(pairs):
            e = key[arity + s]
            if not e or (i != a and i != b):
                continue
            static[arity + s] = 0
            if (a, b) == (min(i, j), max(i, j)):
                sign = ONE if i == a else Fraction((-1) ** (e % 2))
                factors.append(_Factor(e, e, lambda m, e=e, sign=sign:
                                       (unit, sign) if m == e else None))
                continue
            # (z_i-z_l)^e, l != j: fold orientation into (u+t)^e with u = z_j-z_l
            l = b if i == a else a
            outer = ONE if i == a else Fraction((-1) ** (e % 2))
            pa, pb = min(j, l), max(j, l)
            pair_sign = 1 if j == pa else -1  # z_j - z_l = pair_sign * (z_pa - z_pb)
            slot = pair_slot(arity, pa, pb)

            def gen(m, e=e, outer=outer, slot=slot, pair_sign=pair_sign):
                if m < 0:
                    return None
                c = outer * binom(e, m)
                if pair_sign < 0 and (e - m) % 2:
                    c = -c
                return (_delta(arity, slot, e - m), c)

            factors.append(_Factor(0, e if e > 0 else None, gen))
    if not factors:
        factors.append(_Factor(0, 0, lambda m: (unit, ONE) if m == 0 else None))
    return factors, tuple(static)


def mode_decompose(f: RationalSection, i: int, location: str, window,
                   diagonal_with: int | None = None) -> ModeDecomposition:
    """Expansion coefficients of f against a field in z_i at a location.

    at0 expands every difference pole in |z_i| < |z_j| and returns the
    coefficient of z_i^m; atInf expands in |z_i| > |z_j| and returns the
    coefficient of z_i^m of that expansion (the caller owes the residue at
    infinity its orientation); diagonal(j) re-expands z_i = z_j + (z_i - z_j)
    and returns the coefficient of (z_i - z_j)^m.  Coefficients live in the
    relabeled arity-(n-1) ring with z_i deleted.
    """
    lo, hi = window
    if hi - lo + 1 > MAX_WINDOW_WIDTH:
        raise ValueError("window wider than %d" % MAX_WINDOW_WIDTH)
    if hi < lo:
        raise ValueError("empty window")
    if not 1 <= i <= f.arity:
        raise ValueError("variable index out of range")
    if location == DIAGONAL:
        if diagonal_with is None or diagonal_with == i or not 1 <= diagonal_with <= f.arity:
            raise ValueError("diagonal location needs a distinct second variable")
    elif location not in (AT0, AT_INF):
        raise ValueError("unknown location %r" % (location,))
    n = f.arity
    acc: dict[int, dict] = {}
    support_min: int | None = None
    support_max: int | None = None
    seen_any = False
    for key, coeff in f.terms.items():
        factors, static = _factor_series(n, key, i, location, diagonal_with)
        mins = [fac.min_exp for fac in factors]
        maxs = [fac.max_exp for fac in factors]
        tmin = None if any(m is None for m in mins) else sum(mins)
        tmax = None if any(m is None for m in maxs) else sum(maxs)
        if not seen_any:
            support_min, support_max, seen_any = tmin, tmax, True
        else:
            support_min = None if (tmin is None or support_min is None) \
                else min(support_min, tmin)
            support_max = None if (tmax is None or support_max is None) \
                else max(support_max, tmax)
        # each factor only needs exponents completable to the window by the rest
        K = len(factors)
        suffix_min = [0] * (K + 1)
        suffix_max = [0] * (K + 1)
        for t in range(K - 1, -1, -1):
            suffix_min[t] = None if (mins[t] is None or suffix_min[t + 1] is None) \
                else mins[t] + suffix_min[t + 1]
            suffix_max[t] = None if (maxs[t] is None or suffix_max[t + 1] is None) \
                else maxs[t] + suffix_max[t + 1]
        combined = {0: [(_unit_delta(n), coeff)]}
        for idx, fac in enumerate(factors):
            if not combined:
                break
            rest_min = suffix_min[idx + 1]
            rest_max = suffix_max[idx + 1]
            lo_m1 = min(combined)
            hi_m1 = max(combined)
            f_hi = (hi - rest_min - lo_m1) if rest_min is not None else _BIG
            f_lo = (lo - rest_max - hi_m1) if rest_max is not None else -_BIG
            items = fac.gen(f_lo, f_hi)
            nxt: dict[int, list] = {}
            for m1, terms1 in combined.items():
                for m2, (kd2, c2) in items.items():
                    m = m1 + m2
                    if rest_min is not None and m > hi - rest_min:
                        continue
                    if rest_max is not None and m < lo - rest_max:
                        continue
                    bucket = nxt.setdefault(m, [])
                    for kd1, c1 in terms1:
                        bucket.append((tuple(a + b for a, b in zip(kd1, kd2)), c1 * c2))
            combined = nxt
        for m, terms in combined.items():
            if m < lo or m > hi:
                continue
            bucket = acc.setdefault(m, {})
            for kd, c in terms:
                full = tuple(a + b for a, b in zip(static, kd))
                bucket[full] = bucket.get(full, ZERO) + c
    entries = []
    for m in sorted(acc):
        out: dict = {}
        for key, c in acc[m].items():
            if c:
                _canonicalize_into(n - 1, _removed_key(n, key, i), c, out)
        if out:
            entries.append((m, RationalSection(n - 1, out, _canonical=True)))
    if not seen_any:
        return ModeDecomposition([], (lo, hi), lo, lo)
    return ModeDecomposition(entries, (lo, hi), support_min, support_max)


def restrict_variables(f: RationalSection, removed: int) -> RationalSection:
    """Public alias for the order-preserving relabeling after deleting z_removed."""
    return remove_variable(f, removed)


# -- text syntax ---------------------------------------------------------

_FACTOR_RE = re.compile(
    r"^(?:z(?P<v>[123])|\(z(?P<a>[123])-z(?P<b>[123])\))(?:\^(?P<e>-?\d+))?$")


def section_to_string(f: RationalSection) -> str:
    if not f.terms:
        return "0"
    parts = []
    for key in sorted(f.terms):
        c = f.terms[key]
        factors = []
        for v in range(1, f.arity + 1):
            e = key[v - 1]
            if e:
                factors.append("z%d" % v + ("" if e == 1 else "^%d" % e))
        for s, (a, b) in enumerate(PAIRS[f.arity]):
            e = key[f.arity + s]
            if e:
                factors.append("(z%d-z%d)" % (a, b) + ("" if e == 1 else "^%d" % e))
        mono = "*".join(factors)
        if not mono:
            parts.append(format_scalar(c))
        elif c == 1:
            parts.append(mono)
        else:
            parts.append("%s*%s" % (format_scalar(c), mono))
    return " + ".join(parts)


def section_from_string(text: str, arity: int) -> RationalSection:
    """Parse the golden-file syntax; non-canonical input is canonicalized."""
    text = text.strip()
    if text == "0":
        return RationalSection.zero(arity)
    terms: dict = {}
    out: dict = {}
    for raw in text.split("+"):
        raw = raw.strip()
        if not raw:
            raise ValueError("empty term")
        key = [0] * key_len(arity)
        coeff = ONE
        for factor in raw.split("*"):
            factor = factor.strip()
            m = _FACTOR_RE.match(factor)
            if m is None:
                coeff *= parse_scalar(factor)
                continue
            e = int(m.group("e") or 1)
            if m.group("v"):
                v = int(m.group("v"))
                if v > arity:
                    raise ValueError("variable z%d exceeds arity %d" % (v, arity))
                key[v - 1] += e
            else:
                a, b = int(m.group("a")), int(m.group("b"))
                sign = 1
                if a > b:
                    a, b = b, a
                    sign = -1 if e % 2 else 1
                if b > arity:
                    raise ValueError("variable z%d exceeds arity %d" % (b, arity))
                key[pair_slot(arity, a, b)] += e
                coeff *= sign
        _canonicalize_into(arity, tuple(key), coeff, out)
    sec = RationalSection(arity, {}, _canonical=True)
    sec.terms = {k: c for k, c in out.items() if c}
    return sec
