"""Weight-graded truncated chain spaces Gamma_n (x) V^(x)n (x) A-dual (x) C,
the differentials d1, d2, d3, and homology in degrees 0 and 1.

A chain term is (monomial key, V labels, dual label, C label); the weight

    sum deg(a_i) - n - z-degree(f) - deg(phi) + deg(c)

is preserved by every differential and raised by 1 by each d/dz_i + T_i.
Differentials are evaluated as exact chains (no windowing mid-computation);
the advertised slice caps only drive basis enumeration.  Backing modules are
built with enough level headroom that mode applications reached from a slice
are exact; any residual truncation is counted in the leakage counter.
Quotients are taken against span-intersected-with-slice, so every vector
quotiented by is a genuine translate or boundary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .linalg import (Echelonizer, SubspacePresentation, Vec, ZERO, ONE,
                     echelonize, kernel_of_rows, vec_iadd, format_scalar)
from .sections import (AT0, AT_INF, DIAGONAL, RationalSection, mode_decompose,
                       section_to_string, total_z_degree)
from .vertex import VertexAlgebraData, ModuleData, heisenberg_va, fock_module, trivial_va
from .contragredient import DualModuleData, RES_AT_INF_SIGN, dual_label


@dataclass(frozen=True)
class WeightIndex:
    """Weight slice selector plus the truncation caps of the finite model."""
    weight: int
    d_cap: int
    na_cap: int
    nc_cap: int
    window: tuple
    pole_cap: int

    def span(self) -> int:
        return max(abs(self.window[0]), abs(self.window[1]))

    def algebra_headroom(self) -> int:
        return max(2, 2 * self.d_cap + self.span() + self.pole_cap + 2)

    def module_headroom(self) -> int:
        return (max(self.na_cap, self.nc_cap)
                + 2 * (self.d_cap + self.span()) + self.pole_cap + 4)

    def bumped(self, dn: int = 1, dw: int = 1, dq: int = 1) -> "WeightIndex":
        lo, hi = self.window
        return WeightIndex(self.weight, self.d_cap, self.na_cap + dn,
                           self.nc_cap + dn, (lo - dw, hi + dw),
                           self.pole_cap + dq)

    def to_json(self) -> dict:
        return {"weight": self.weight, "D": self.d_cap, "N_A": self.na_cap,
                "N_C": self.nc_cap, "window": list(self.window),
                "Q": self.pole_cap}


@dataclass
class Chain:
    """Sparse combination of (monomial, a-labels, phi, c) basis terms."""
    arity: int
    terms: dict = field(default_factory=dict)

    def add_term(self, key, coeff) -> None:
        s = self.terms.get(key, ZERO) + coeff
        if s:
            self.terms[key] = s
        else:
            self.terms.pop(key, None)

    def is_zero(self) -> bool:
        return not self.terms

    def scaled(self, c: Fraction) -> "Chain":
        return Chain(self.arity, {k: c * v for k, v in self.terms.items()} if c else {})

    def plus(self, other: "Chain") -> "Chain":
        out = Chain(self.arity, dict(self.terms))
        for k, v in other.terms.items():
            out.add_term(k, v)
        return out


def chain_term_text(arity: int, key, coeff: Fraction) -> str:
    fkey, labels, phi, c = key
    mono = section_to_string(RationalSection.monomial(arity, fkey)) if arity else "1"
    return "%s*%s|%s|%s|%s" % (format_scalar(coeff), mono, ",".join(labels), phi, c)


def chain_to_text(chain: Chain) -> str:
    if chain.is_zero():
        return "0"
    return " + ".join(chain_term_text(chain.arity, k, chain.terms[k])
                      for k in sorted(chain.terms))


@dataclass
class HomologyResult:
    weight: int
    caps: WeightIndex
    dimH0: int
    dimH1: int
    cycles: list
    leakage: int
    dims: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"weight": self.weight, "caps": self.caps.to_json(),
                "dimH0": self.dimH0, "dimH1": self.dimH1,
                "leakage": self.leakage,
                "cycles": [chain_to_text(cy) for cy in self.cycles],
                "dims": dict(sorted(self.dims.items()))}


class ChiralContext:
    """One (V, A, C) configuration with its caps; owns decomposition caches.

    A enters through its contragredient at infinity; C is inserted at zero.
    """

    def __init__(self, V: VertexAlgebraData, A: ModuleData, C: ModuleData,
                 idx: WeightIndex):
        self.V = V
        self.A = A
        self.C = C
        self.idx = idx
        self.dualA = DualModuleData(A)
        self._dec_cache: dict = {}
        self._tz = V.t_zero_labels

    # -- enumeration -----------------------------------------------------

    def v_labels(self):
        return [lab for lab in self.V.space.all_labels()
                if self.V.space.degree_of(lab) <= self.idx.d_cap]

    def phi_labels(self):
        return [dual_label(lab) for lab in self.A.space.all_labels()
                if self.A.space.degree_of(lab) <= self.idx.na_cap]

    def c_labels(self):
        return [lab for lab in self.C.space.all_labels()
                if self.C.space.degree_of(lab) <= self.idx.nc_cap]

    def weight_of_key(self, key) -> int:
        fkey, labels, phi, c = key
        n = len(labels)
        return (sum(self.V.space.degree_of(a) for a in labels) - n
                - total_z_degree(fkey) - self.dualA.space.degree_of(phi)
                + self.C.space.degree_of(c))

    def monomial_keys(self, n: int, t: int) -> list:
        """Canonical monomials of total z-degree t within window and pole cap."""
        lo, hi = self.idx.window
        Q = self.idx.pole_cap
        out = []
        if n == 0:
            if t == 0:
                out.append(())
        elif n == 1:
            if lo <= t <= hi:
                out.append((t,))
        elif n == 2:
            for a in range(lo, hi + 1):
                if lo <= t - a <= hi:
                    out.append((a, t - a, 0))
            for q in range(1, Q + 1):
                if lo <= t + q <= hi:
                    out.append((0, t + q, -q))
        else:
            for a in range(lo, hi + 1):
                for b in range(lo, hi + 1):
                    if lo <= t - a - b <= hi:
                        out.append((a, b, t - a - b, 0, 0, 0))
            for q in range(1, Q + 1):
                for a in range(lo, hi + 1):
                    if lo <= t - a + q <= hi:
                        out.append((a, 0, t - a + q, 0, 0, -q))    # z1^a z3^c (z2-z3)^-q
                for b in range(lo, hi + 1):
                    if lo <= t - b + q <= hi:
                        out.append((0, b, t - b + q, -q, 0, 0))    # (z1-z2)^-q z2^b z3^c
                        out.append((0, b, t - b + q, 0, -q, 0))    # (z1-z3)^-q z2^b z3^c
                for p in range(1, Q + 1):
                    if lo <= t + q + p <= hi:
                        out.append((0, 0, t + q + p, -q, 0, -p))   # (z1-z2)^-q (z2-z3)^-p z3^c
                        out.append((0, 0, t + q + p, 0, -q, -p))   # (z1-z3)^-q (z2-z3)^-p z3^c
        return sorted(out)

    def enumerate_slice(self, n: int, w: int) -> list:
        """Ordered basis of the weight-w window slice of the n-chain space."""
        out = []
        if n == 0:
            for phi in self.phi_labels():
                p = self.dualA.space.degree_of(phi)
                for c in self.c_labels():
                    if self.C.space.degree_of(c) - p == w:
                        out.append(((), (), phi, c))
            return sorted(out)
        from itertools import product
        vl = self.v_labels()
        for labels in product(vl, repeat=n):
            degs = sum(self.V.space.degree_of(a) for a in labels)
            for phi in self.phi_labels():
                p = self.dualA.space.degree_of(phi)
                for c in self.c_labels():
                    t = degs - n - p + self.C.space.degree_of(c) - w
                    for fkey in self.monomial_keys(n, t):
                        out.append((fkey, labels, phi, c))
        return sorted(out)

    # -- differential ------------------------------------------------------

    def _dec(self, n, fkey, i, loc, j, window):
        key = (n, fkey, i, loc, j, window)
        dec = self._dec_cache.get(key)
        if dec is None:
            f = RationalSection.monomial(n, fkey)
            dec = mode_decompose(f, i, loc, window, diagonal_with=j)
            self._dec_cache[key] = dec
        return dec

    @staticmethod
    def _leaks_below(dec, lo, is_vacuum):
        """A mode below the window would raise the target past its cap; the
        vacuum only ever acts through mode -1, so only that mode can leak."""
        if dec.support_min is not None and dec.support_min >= lo:
            return False
        if not is_vacuum:
            return True
        return (-1 < lo and (dec.support_min is None or dec.support_min <= -1)
                and (dec.support_max is None or dec.support_max >= -1))

    @staticmethod
    def _leaks_above(dec, hi, is_vacuum):
        if dec.support_max is not None and dec.support_max <= hi:
            return False
        if not is_vacuum:
            return True
        return (-1 > hi and (dec.support_min is None or dec.support_min <= -1)
                and (dec.support_max is None or dec.support_max >= -1))

    def differential(self, chain: Chain):
        """d_n as an exact chain, with the count of truncated contributions."""
        n = chain.arity
        if n not in (1, 2, 3):
            raise ValueError("differential defined for arities 1..3")
        out = Chain(n - 1)
        leaks = 0
        Vsp = self.V.space
        for (fkey, labels, phi, c), coeff in chain.terms.items():
            p_phi = self.dualA.space.degree_of(phi)
            q_c = self.C.space.degree_of(c)
            for i in range(1, n + 1):
                sign = ONE if (n - i) % 2 == 0 else -ONE
                a_i = labels[i - 1]
                r_i = Vsp.degree_of(a_i)
                rest = labels[:i - 1] + labels[i:]
                is_vac = a_i == self.V.vacuum
                # p_C^(i): residue at zero against Y_C
                lo = r_i + q_c - self.C.cap - 1
                hi = r_i + q_c - 1
                if hi >= lo:
                    dec = self._dec(n, fkey, i, AT0, None, (lo, hi))
                    if self._leaks_below(dec, lo, is_vac):
                        leaks += 1
                    for k, g in dec.entries:
                        img = self.C.mode_basis(a_i, k, c)
                        if not img:
                            continue
                        for gkey, gc in g.terms.items():
                            cc = coeff * sign * gc
                            for clab, cv in img.items():
                                out.add_term((gkey, rest, phi, clab), cc * cv)
                # p_Adual^(i): residue at infinity against Y on the dual
                lo = r_i - 1 - p_phi
                hi = self.A.cap + r_i - 1 - p_phi
                if hi >= lo:
                    dec = self._dec(n, fkey, i, AT_INF, None, (lo, hi))
                    if self._leaks_above(dec, hi, is_vac):
                        leaks += 1
                    for e, g in dec.entries:
                        phivec = self.dualA.rz_dual_mode(a_i, e, phi)
                        if not phivec:
                            continue
                        for gkey, gc in g.terms.items():
                            cc = coeff * sign * gc * RES_AT_INF_SIGN
                            for plab, pv in phivec.items():
                                out.add_term((gkey, rest, plab, c), cc * pv)
                # d^(ij): move a_i onto a_j along the diagonal
                for j in range(i + 1, n + 1):
                    r_j = Vsp.degree_of(labels[j - 1])
                    lo = r_i + r_j - self.V.cap - 1
                    hi = r_i + r_j - 1
                    if hi < lo:
                        continue
                    dec = self._dec(n, fkey, i, DIAGONAL, j, (lo, hi))
                    if self._leaks_below(dec, lo, is_vac):
                        leaks += 1
                    for k, g in dec.entries:
                        wvec = self.V.mode_basis(a_i, k, labels[j - 1])
                        if not wvec:
                            continue
                        for gkey, gc in g.terms.items():
                            cc = coeff * sign * gc
                            for wlab, wv in wvec.items():
                                lst = list(labels)
                                lst[j - 1] = wlab
                                del lst[i - 1]
                                out.add_term((gkey, tuple(lst), phi, c), cc * wv)
        return out, leaks

    def translate_image(self, key):
        """(sum_i d/dz_i + T_i) of a basis chain, as an exact chain."""
        fkey, labels, phi, c = key
        n = len(labels)
        out = Chain(n)
        leaks = 0
        f = RationalSection.monomial(n, fkey)
        for i in range(1, n + 1):
            from .sections import derive
            df = derive(f, i)
            for dkey, dc in df.terms.items():
                out.add_term((dkey, labels, phi, c), dc)
            a_i = labels[i - 1]
            if (self.V.space.degree_of(a_i) >= self.V.cap
                    and a_i not in self._tz):
                leaks += 1
                continue
            for tlab, tc in self.V.translation.apply({a_i: ONE}).items():
                lst = list(labels)
                lst[i - 1] = tlab
                out.add_term((fkey, tuple(lst), phi, c), tc)
        return out, leaks

    # -- linear algebra over slices ---------------------------------------

    @staticmethod
    def _coordinatize(chain: Chain, coords: dict, order: list) -> dict:
        row = {}
        for key, c in chain.terms.items():
            idx = coords.get(key)
            if idx is None:
                idx = coords[key] = len(order)
                order.append(key)
            row[idx] = c
        return row

    @staticmethod
    def _visible_subspace(rows: list, slice_size: int, total_dim: int
                          ) -> SubspacePresentation:
        """Span(rows) intersected with the first slice_size coordinates."""
        ech = echelonize(rows, total_dim)
        outside_eqs: dict = {}
        for idx_row, r in enumerate(ech.rows):
            for j, v in r.items():
                if j >= slice_size:
                    outside_eqs.setdefault(j, {})[idx_row] = v
        lam_basis = kernel_of_rows(list(outside_eqs.values()), len(ech.rows))
        vis = []
        for lam in lam_basis:
            vec: dict = {}
            for i, li in lam.items():
                for j, v in ech.rows[i].items():
                    s = vec.get(j, ZERO) + li * v
                    if s:
                        vec[j] = s
                    else:
                        vec.pop(j, None)
            if vec:
                vis.append(vec)
        return echelonize(vis, slice_size)

    def enumerate_basis(self, n: int):
        """Slice basis of the n-chain space at the configured weight, plus the
        deterministic complement basis presenting the translation quotient."""
        w = self.idx.weight
        slice_n = self.enumerate_slice(n, w)
        coords = {key: i for i, key in enumerate(slice_n)}
        order = list(slice_n)
        rows = []
        leaks = 0
        for src in self.enumerate_slice(n, w - 1):
            img, lk = self.translate_image(src)
            leaks += lk
            if not img.is_zero():
                rows.append(self._coordinatize(img, coords, order))
        vis = self._visible_subspace(rows, len(slice_n), len(order))
        quotient = [slice_n[j] for j in vis.complement()]
        return slice_n, quotient, vis, leaks

    def homology(self) -> HomologyResult:
        w = self.idx.weight
        slice0 = self.enumerate_slice(0, w)
        slice1 = self.enumerate_slice(1, w)
        slice2 = self.enumerate_slice(2, w)
        leaks = 0

        coords0 = {key: i for i, key in enumerate(slice0)}
        order0 = list(slice0)
        d1_cols = []
        for key in slice1:
            img, lk = self.differential(Chain(1, {key: ONE}))
            leaks += lk
            d1_cols.append(self._coordinatize(img, coords0, order0))
        # H0 = C0 / (im d1 visible in the slice)
        im_vis = self._visible_subspace(d1_cols, len(slice0), len(order0))
        dimH0 = len(slice0) - im_vis.rank

        # kernel of d1 on the slice: equations indexed by target coordinates
        eq_rows: dict = {}
        for jcol, col in enumerate(d1_cols):
            for t, v in col.items():
                eq_rows.setdefault(t, {})[jcol] = v
        ker_basis = kernel_of_rows(list(eq_rows.values()), len(slice1))

        coords1 = {key: i for i, key in enumerate(slice1)}
        order1 = list(slice1)
        den_rows = []
        for src in self.enumerate_slice(1, w - 1):
            img, lk = self.translate_image(src)
            leaks += lk
            if not img.is_zero():
                den_rows.append(self._coordinatize(img, coords1, order1))
        for key in slice2:
            img, lk = self.differential(Chain(2, {key: ONE}))
            leaks += lk
            if not img.is_zero():
                den_rows.append(self._coordinatize(img, coords1, order1))
        den_vis = self._visible_subspace(den_rows, len(slice1), len(order1))

        ech = Echelonizer(len(slice1))
        for row in den_vis.rows:
            ech.add(dict(row))
        cycles = []
        for kv in ker_basis:
            if ech.add(dict(kv)):
                cycles.append(Chain(1, {slice1[j]: c for j, c in kv.items()}))
        dims = {"C0": len(slice0), "C1": len(slice1), "C2": len(slice2),
                "ker_d1": len(ker_basis), "boundary_visible": den_vis.rank}
        return HomologyResult(w, self.idx, dimH0, len(cycles), cycles, leaks, dims)

    # -- d o d = 0 ---------------------------------------------------------

    def _translate_preimages(self):
        rev: dict = {}
        for lab in self.V.space.all_labels():
            if self.V.space.degree_of(lab) >= self.V.cap:
                continue
            for t in self.V.translation.apply({lab: ONE}):
                rev.setdefault(t, set()).add(lab)
        return rev

    def reduce_mod_translates(self, chain: Chain, rounds: int = 3) -> Chain:
        """Reduce an exact chain modulo the translation subspace of its arity,
        generating (d/dz+T)-images of candidate sources near its support."""
        if chain.is_zero():
            return chain
        n = chain.arity
        rev = self._translate_preimages()
        seen_sources = set()
        gen_rows = []
        coords: dict = {}
        order: list = []
        frontier = set(chain.terms)
        for _ in range(rounds):
            new_sources = set()
            for (fkey, labels, phi, c) in frontier:
                for i in range(1, n + 1):
                    bumped = list(fkey)
                    bumped[i - 1] += 1
                    new_sources.add((tuple(bumped), labels, phi, c))
                    for src_lab in rev.get(labels[i - 1], ()):
                        lst = list(labels)
                        lst[i - 1] = src_lab
                        new_sources.add((fkey, tuple(lst), phi, c))
                new_sources.add((fkey, labels, phi, c))
            new_sources -= seen_sources
            if not new_sources:
                break
            frontier = set()
            for src in sorted(new_sources):
                seen_sources.add(src)
                img, _lk = self.translate_image(src)
                if not img.is_zero():
                    gen_rows.append(self._coordinatize(img, coords, order))
                    frontier.update(img.terms)
        ech = echelonize(gen_rows, len(order))
        row = {}
        for key, c in chain.terms.items():
            idx = coords.get(key)
            if idx is None:
                idx = coords[key] = len(order)
                order.append(key)
            row[idx] = c
        red = ech.reduce(row)
        return Chain(n, {order[j]: c for j, c in red.items()})

    def d_squared_check(self, n: int, samples: int = 64, seed: int = 0) -> dict:
        """d_(n-1) o d_n = 0 on the weight slice, exactly, modulo translates.

        Full quotient basis when its size is at most 200, seeded samples
        otherwise.  Any nonzero composite is a hard failure.
        """
        if n not in (2, 3):
            raise ValueError("d-squared check is for n = 2 or 3")
        _slice, quotient, _vis, lk0 = self.enumerate_basis(n)
        picks = quotient
        sampled = False
        if len(quotient) > 200:
            rng = random.Random(seed)
            picks = rng.sample(quotient, min(samples, len(quotient)))
            sampled = True
        leaks = lk0
        failures = []
        for key in picks:
            y, l1 = self.differential(Chain(n, {key: ONE}))
            z, l2 = self.differential(y)
            leaks += l1 + l2
            if not z.is_zero():
                z = self.reduce_mod_translates(z)
            if not z.is_zero():
                failures.append({"source": chain_term_text(n, key, ONE),
                                 "residue": chain_to_text(z)})
        return {"n": n, "checked": len(picks), "of": len(quotient),
                "sampled": sampled, "leakage": leaks,
                "ok": not failures, "failures": failures[:8]}


def build_context(algebra: str, lam_a, lam_c, idx: WeightIndex) -> ChiralContext:
    """Construct (V, A, C) with level headroom behind the advertised caps."""
    if algebra == "trivial":
        V, M = trivial_va(0)
        return ChiralContext(V, M, M, idx)
    if algebra == "heisenberg":
        V = heisenberg_va(idx.algebra_headroom())
        A = fock_module(V, lam_a, idx.module_headroom())
        C = fock_module(V, lam_c, idx.module_headroom())
        return ChiralContext(V, A, C, idx)
    raise ValueError("unknown algebra %r" % algebra)
