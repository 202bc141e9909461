"""Exact rational linear algebra: graded spaces, degree-shifting sparse maps,
reduced row echelon form, kernels and quotients.

Everything is over Q via fractions.Fraction, so ranks and kernels are
bit-exact.  Vectors are sparse dicts label -> Fraction with zero entries
omitted; coordinate rows are sparse dicts column-index -> Fraction.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Vec = dict  # label -> Fraction, zeros omitted
Row = dict  # column index -> Fraction, zeros omitted

ZERO = Fraction(0)
ONE = Fraction(1)


def format_scalar(x: Fraction) -> str:
    """Serialize as "p/q", with "/q" omitted when q == 1."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def parse_scalar(text: str) -> Fraction:
    return Fraction(text.strip())


def vec_add(u: Vec, v: Vec) -> Vec:
    out = dict(u)
    for k, c in v.items():
        s = out.get(k, ZERO) + c
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_iadd(acc: Vec, v: Vec, scale: Fraction = ONE) -> None:
    """In-place acc += scale*v.  Used in inner loops; acc is a scratch dict."""
    if not scale:
        return
    for k, c in v.items():
        s = acc.get(k, ZERO) + scale * c
        if s:
            acc[k] = s
        else:
            acc.pop(k, None)


def vec_scale(v: Vec, c: Fraction) -> Vec:
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


class GradedSpace:
    """Finite-dimensional Z-graded vector space with named, ordered bases.

    Degrees absent from the table have dimension 0.  Labels are unique within
    a degree (and, for every space built here, globally).
    """

    __slots__ = ("components", "_degree_of", "_index_of")

    def __init__(self, components: Mapping[int, Sequence]):
        comps = {}
        degree_of = {}
        index_of = {}
        for deg in sorted(components):
            labels = tuple(components[deg])
            if not labels:
                continue
            if len(set(labels)) != len(labels):
                raise ValueError("duplicate basis labels in degree %d" % deg)
            comps[deg] = labels
            for i, lab in enumerate(labels):
                if lab in degree_of:
                    raise ValueError("label %r appears in two degrees" % (lab,))
                degree_of[lab] = deg
                index_of[lab] = i
        self.components = comps
        self._degree_of = degree_of
        self._index_of = index_of

    def dim(self, degree: int) -> int:
        return len(self.components.get(degree, ()))

    def basis(self, degree: int) -> tuple:
        return self.components.get(degree, ())

    def degrees(self) -> tuple:
        return tuple(self.components)

    def degree_of(self, label) -> int:
        return self._degree_of[label]

    def index_of(self, label) -> int:
        return self._index_of[label]

    def __contains__(self, label) -> bool:
        return label in self._degree_of

    def all_labels(self) -> list:
        return [lab for deg in sorted(self.components) for lab in self.components[deg]]

    def total_dim(self) -> int:
        return sum(len(v) for v in self.components.values())

    def vector_degree(self, vec: Vec):
        """Degree of a homogeneous vector; None for 0; ValueError if mixed."""
        degs = {self._degree_of[k] for k in vec}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError("vector is not homogeneous: degrees %s" % sorted(degs))
        return degs.pop()


class SparseMap:
    """Degree-shifting linear map between graded spaces.

    entries[(target_label, source_label)] = coefficient; every entry connects
    degree d to degree d + shift.
    """

    __slots__ = ("source", "target", "shift", "entries", "_columns")

    def __init__(self, source: GradedSpace, target: GradedSpace, shift: int,
                 entries: Mapping):
        self.source = source
        self.target = target
        self.shift = shift
        self.entries = {}
        self._columns = {}
        for (t, s), c in entries.items():
            c = Fraction(c)
            if not c:
                continue
            if target.degree_of(t) != source.degree_of(s) + shift:
                raise ValueError(
                    "entry (%r, %r) violates shift %d" % (t, s, shift))
            self.entries[(t, s)] = c
            self._columns.setdefault(s, {})[t] = c

    def column(self, source_label) -> Vec:
        return dict(self._columns.get(source_label, {}))

    def apply(self, vec: Vec) -> Vec:
        out = {}
        for s, c in vec.items():
            col = self._columns.get(s)
            if col:
                vec_iadd(out, col, c)
        return out

    def compose(self, inner: "SparseMap") -> "SparseMap":
        """self o inner; shifts add."""
        if inner.target is not self.source and inner.target.components != self.source.components:
            raise ValueError("composition domain mismatch")
        entries = {}
        for s in inner._columns:
            img = self.apply(inner.column(s))
            for t, c in img.items():
                entries[(t, s)] = c
        return SparseMap(inner.source, self.target, self.shift + inner.shift, entries)

    def slice_matrix(self, source_degree: int):
        """Rows of the degree-slice matrix: one Row per target basis vector."""
        src = self.source.basis(source_degree)
        tgt = self.target.basis(source_degree + self.shift)
        rows = [dict() for _ in tgt]
        for j, s in enumerate(src):
            for t, c in self._columns.get(s, {}).items():
                if self.target.degree_of(t) == source_degree + self.shift:
                    rows[self.target.index_of(t)][j] = c
        return rows, src, tgt


class SubspacePresentation:
    """Subspace of a fixed finite-dimensional coordinate slice, stored as a
    reduced row echelon basis (leading coefficients 1, pivots strictly
    increasing, pivot columns cleared in all other rows)."""

    __slots__ = ("ambient_dim", "rows", "pivots", "_pivot_row")

    def __init__(self, ambient_dim: int, rows: Sequence[Row], pivots: Sequence[int]):
        self.ambient_dim = ambient_dim
        self.rows = list(rows)
        self.pivots = list(pivots)
        self._pivot_row = {p: i for i, p in enumerate(self.pivots)}

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, row: Row) -> Row:
        """Remainder of row modulo the subspace (pivot coordinates cleared).

        One pass suffices: RREF rows vanish at every pivot column but their
        own, so clearing one pivot never reintroduces another.
        """
        out = dict(row)
        for p in sorted(j for j in row if j in self._pivot_row):
            c = out.get(p)
            if not c:
                continue
            for j, x in self.rows[self._pivot_row[p]].items():
                s = out.get(j, ZERO) - c * x
                if s:
                    out[j] = s
                else:
                    out.pop(j, None)
        return out

    def contains(self, row: Row) -> bool:
        return not self.reduce(row)

    def complement(self) -> list:
        """Non-pivot coordinate indices, in increasing order."""
        piv = set(self.pivots)
        return [j for j in range(self.ambient_dim) if j not in piv]


class Echelonizer:
    """Incremental reduced-row-echelon accumulator over Fraction rows."""

    def __init__(self, ambient_dim: int):
        self.ambient_dim = ambient_dim
        self.rows: list[Row] = []
        self.pivots: list[int] = []
        self._pivot_row: dict[int, int] = {}

    def reduce(self, row: Row) -> Row:
        out = dict(row)
        for p in sorted(j for j in row if j in self._pivot_row):
            c = out.get(p)
            if not c:
                continue
            for j, x in self.rows[self._pivot_row[p]].items():
                s = out.get(j, ZERO) - c * x
                if s:
                    out[j] = s
                else:
                    out.pop(j, None)
        return out

    def add(self, row: Row) -> bool:
        """Insert row's class; returns True if the rank grew."""
        red = self.reduce(row)
        if not red:
            return False
        p = min(red)
        inv = ONE / red[p]
        red = {j: inv * c for j, c in red.items()}
        # clear the new pivot from existing rows
        for i, r in enumerate(self.rows):
            c = r.get(p)
            if c:
                for j, x in red.items():
                    s = r.get(j, ZERO) - c * x
                    if s:
                        r[j] = s
                    else:
                        r.pop(j, None)
        self.rows.append(red)
        self.pivots.append(p)
        self._pivot_row[p] = len(self.rows) - 1
        return True

    def finish(self) -> SubspacePresentation:
        order = sorted(range(len(self.rows)), key=lambda i: self.pivots[i])
        rows = [self.rows[i] for i in order]
        pivots = [self.pivots[i] for i in order]
        return SubspacePresentation(self.ambient_dim, rows, pivots)


def echelonize(rows: Iterable[Row], ambient_dim: int) -> SubspacePresentation:
    """Reduced row-echelon basis of the span of the given sparse rows.

    Deterministic: the RREF of a subspace is unique, so the result does not
    depend on input order.  Empty input yields rank 0.
    """
    ech = Echelonizer(ambient_dim)
    for row in rows:
        ech.add(row)
    return ech.finish()


def kernel_of_rows(rows: Sequence[Row], ncols: int) -> list[Row]:
    """Null space basis of the linear system {row . x = 0 for each row}.

    Returns one sparse coordinate vector per free column, in increasing order
    of the free column index (that coordinate is set to 1).
    """
    ech = echelonize(rows, ncols)
    piv = ech.pivots
    free = ech.complement()
    basis = []
    for f in free:
        v = {f: ONE}
        for i, p in enumerate(piv):
            c = ech.rows[i].get(f)
            if c:
                v[p] = -c
        basis.append(v)
    return basis


def kernel(mapping: SparseMap, source_degree: int) -> SubspacePresentation:
    """Null space of the degree-slice matrix of a SparseMap, as a subspace of
    the source slice (coordinates follow the source basis order)."""
    rows, src, _tgt = mapping.slice_matrix(source_degree)
    basis = kernel_of_rows(rows, len(src))
    return echelonize(basis, len(src))


def quotient_dim(ambient_dim: int, sub: SubspacePresentation):
    """Dimension of ambient/sub plus the deterministic complement section.

    The complement basis is the set of non-pivot coordinates; projecting a
    complement vector (reduce mod sub) and lifting it back is the identity.
    """
    if sub.ambient_dim != ambient_dim:
        raise ValueError("subspace has ambient dim %d, expected %d"
                         % (sub.ambient_dim, ambient_dim))
    return ambient_dim - sub.rank, sub.complement()
