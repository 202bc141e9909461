"""Contragredient modules, the operator R(z) = z^2 e^{zL_1} (-z^-2)^{L_0}
mediating the action at infinity, and executable checks of the FHL identity
and of the duality pairing between the actions at 0 and at infinity.

Degree r vectors satisfy (-z^-2)^{L_0} a = (-1)^r z^{-2r} a; integrality of
the conformal grading on V makes this unambiguous.  Dual modes are forced by
the duality equation and computed lazily; the dual is never materialized as a
full table unless an axiom scan asks for it.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .linalg import GradedSpace, Vec, ZERO, ONE, vec_iadd
from .sections import RationalSection
from .vertex import ModuleData, VertexAlgebraData

# res_{z=inf} g(z) = -res_{x=0} g(x^-1): the chart at infinity carries the
# dz = -x^-2 dx orientation (the x^-2 is absorbed by the z^2 inside R(z)).
RES_AT_INF_SIGN = -1


def dual_label(label: str) -> str:
    return label + "*"


def primal_label(label: str) -> str:
    if not label.endswith("*"):
        raise ValueError("%r is not a dual label" % label)
    return label[:-1]


def l1_powers(V: VertexAlgebraData, a) -> list:
    """[a, L_1 a, L_1^2 a / 2!, ...] until zero; finite since L_1 is
    degree-lowering, hence nilpotent on truncations."""
    if isinstance(a, str):
        a = {a: ONE}
    out = [dict(a)]
    cur = dict(a)
    j = 1
    while cur:
        cur = V.l_mode(1, cur)
        if not cur:
            break
        out.append({k: v / math.factorial(j) for k, v in cur.items()})
        j += 1
    return out


def rz_apply(V: VertexAlgebraData, a) -> list:
    """R(z)a = sum_j z^(2+j-2r) (-1)^r (1/j!) L_1^j a for homogeneous a of
    degree r; returns the finite list of (exponent, vector) pairs."""
    if isinstance(a, str):
        a = {a: ONE}
    r = V.space.vector_degree(a)
    if r is None:
        return []
    sign = ONE if r % 2 == 0 else -ONE
    out = []
    for j, vec in enumerate(l1_powers(V, a)):
        out.append((2 + j - 2 * r, {k: sign * c for k, c in vec.items()}))
    return out


class DualModuleData:
    """Restricted dual of an admissible module, with the twisted action
    [Y(a,z)phi](m) = phi(Y(e^{zL_1}(-z^-2)^{L_0} a, z^-1) m).

    Quacks like ModuleData (space/cap/parent/mode_basis/mode_apply/l_mode/
    materialize) so the axiom checkers run on it unchanged.
    """

    def __init__(self, primal: ModuleData):
        self.primal = primal
        self.parent = primal.parent
        self.cap = primal.cap
        self.name = primal.name + "-dual"
        self.params = dict(primal.params)
        self.space = GradedSpace({
            deg: [dual_label(lab) for lab in primal.space.basis(deg)]
            for deg in primal.space.degrees()})
        self._memo = {}
        self._rz_memo = {}
        self._l1 = {}

    def pair(self, phi: Vec, x: Vec) -> Fraction:
        """<phi, x>, nonzero only in matching degree."""
        total = ZERO
        for lab, c in phi.items():
            total += c * x.get(primal_label(lab), ZERO)
        return total

    def _l1_powers(self, a_label: str) -> list:
        out = self._l1.get(a_label)
        if out is None:
            out = self._l1[a_label] = l1_powers(self.parent, a_label)
        return out

    def mode_basis(self, a_label: str, m: int, phi_label: str) -> Vec:
        """a_(m) on a dual basis functional:
        [a_(m) phi](x) = sum_j (-1)^r (1/j!) phi((L_1^j a)_(2r-2-j-m) x)."""
        key = (a_label, m, phi_label)
        out = self._memo.get(key)
        if out is not None:
            return out
        V = self.parent
        r = V.space.degree_of(a_label)
        p = self.primal.space.degree_of(primal_label(phi_label))
        target = p + r - m - 1
        out = {}
        if 0 <= target <= self.cap:
            base = primal_label(phi_label)
            sign = ONE if r % 2 == 0 else -ONE
            powers = self._l1_powers(a_label)
            for x in self.primal.space.basis(target):
                val = ZERO
                for j, vec in enumerate(powers):
                    img = self.primal.mode_apply(vec, 2 * r - 2 - j - m, x)
                    val += sign * img.get(base, ZERO)
                if val:
                    out[dual_label(x)] = val
        self._memo[key] = out
        return out

    def mode_apply(self, a, m: int, phi) -> Vec:
        if isinstance(a, str):
            a = {a: ONE}
        if isinstance(phi, str):
            phi = {phi: ONE}
        out: Vec = {}
        for al, ca in a.items():
            for pl, cp in phi.items():
                vec_iadd(out, self.mode_basis(al, m, pl), ca * cp)
        return out

    def l_mode(self, p: int, phi) -> Vec:
        return self.mode_apply(self.parent.omega, p + 1, phi)

    def rz_dual_mode(self, a_label: str, e: int, phi_label: str) -> Vec:
        """Mode pairing of R against the exponent-e coefficient of a section:
        the term of res_{z=inf} z^e Y(R(z)a, z^-1)phi before orientation,
        i.e. sum_j (components of R(z)a at z^(2+j-2r)) applied at dual mode
        -(e + 2 + j - 2r).
        """
        key = (a_label, e, phi_label)
        out = self._rz_memo.get(key)
        if out is not None:
            return out
        V = self.parent
        r = V.space.degree_of(a_label)
        sign = ONE if r % 2 == 0 else -ONE
        out = {}
        for j, vec in enumerate(self._l1_powers(a_label)):
            k = -(e + 2 + j - 2 * r)
            for lab, c in vec.items():
                vec_iadd(out, self.mode_basis(lab, k, phi_label), sign * c)
        self._rz_memo[key] = out
        return out

    def materialize(self) -> dict:
        table = {}
        for a in self.parent.space.all_labels():
            ra = self.parent.space.degree_of(a)
            for x in self.space.all_labels():
                qx = self.space.degree_of(x)
                for m in range(ra + qx - self.cap - 1, ra + qx):
                    img = self.mode_basis(a, m, x)
                    if img:
                        table[(a, m, x)] = img
        return table


def residue_at_inf_dual(dual: DualModuleData, f: RationalSection, a, phi) -> Vec:
    """res_{z=inf} f(z) Y_{M^vee}(R(z)a, z^-1) phi for arity-1 f, homogeneous a."""
    if f.arity != 1:
        raise ValueError("needs an arity-1 section")
    if isinstance(a, str):
        a = {a: ONE}
    if isinstance(phi, str):
        phi = {phi: ONE}
    out: Vec = {}
    for (e,), c in f.terms.items():
        for al, ca in a.items():
            for pl, cp in phi.items():
                vec_iadd(out, dual.rz_dual_mode(al, e, pl),
                         RES_AT_INF_SIGN * c * ca * cp)
    return out


def check_fhl(V: VertexAlgebraData, a) -> bool:
    """(-t^-2)^{L_0} e^{t^-1 L_1} (-t^2)^{L_0} a = e^{-t L_1} a, compared as
    vector-valued Laurent polynomials in t.  (The composition inverts
    e^{tL_1}(-t^-2)^{L_0}, which is how the duality proof consumes it.)"""
    if isinstance(a, str):
        a = {a: ONE}

    def by_degree(vec: Vec) -> dict:
        out: dict = {}
        for lab, c in vec.items():
            out.setdefault(V.space.degree_of(lab), {})[lab] = c
        return out

    lhs: dict = {}
    for d, comp in by_degree(a).items():
        sgn = ONE if d % 2 == 0 else -ONE
        start = {lab: sgn * c for lab, c in comp.items()}  # (-t^2)^{L_0}: t^{2d}
        for j, vec in enumerate(l1_powers(V, start)):
            for d2, comp2 in by_degree(vec).items():
                sgn2 = ONE if d2 % 2 == 0 else -ONE
                expo = 2 * d - j - 2 * d2
                bucket = lhs.setdefault(expo, {})
                vec_iadd(bucket, comp2, sgn2)
    rhs: dict = {}
    for j, vec in enumerate(l1_powers(V, a)):
        sgn = ONE if j % 2 == 0 else -ONE
        bucket = rhs.setdefault(j, {})
        vec_iadd(bucket, vec, sgn)
    lhs = {k: v for k, v in lhs.items() if v}
    rhs = {k: v for k, v in rhs.items() if v}
    return lhs == rhs


def check_duality(dual: DualModuleData, f: RationalSection, a, phi, x) -> bool:
    """res_{z=inf} f(z) (Y(R(z)a, z^-1) phi)(x) = -phi(res_{z=0} f(z) Y(a,z) x),
    evaluated through two independent paths and compared exactly."""
    if isinstance(phi, str):
        phi = {phi: ONE}
    if isinstance(x, str):
        x = {x: ONE}
    lhs_vec = residue_at_inf_dual(dual, f, a, phi)
    lhs = ZERO
    for lab, c in lhs_vec.items():
        lhs += c * x.get(primal_label(lab), ZERO)
    rhs = ZERO
    for (e,), c in f.terms.items():
        img = dual.primal.mode_apply(a, e, x)
        rhs += c * dual.pair(phi, img)
    return lhs == -rhs
