"""Multiharmonic functions as jet fields.

A function h with Delta^{n+1} h = 0 is represented by its jets
(h(x), Delta h(x), ..., Delta^n h(x)) at the vertices of a level graph.
The representation is closed under subdivision: inside one cell the new
jets are an exact linear image of the corner jets through the V1 values of
the "easy" basis f_{jl} (the multiharmonic functions whose jets at the
boundary are delta data).  Those V1 values, together with the normal
derivative constants a_j = dn f_{jl}(q_l) and b_j = dn f_{jl}(q_l'), are
produced once per fractal by exact level-1 solves.

The same machinery drives the local theory at a vertex x: the matching
condition at x (vanishing sum of localized normal derivatives, order by
order), symmetry projections on the cell neighborhood U(x), interpolation
of a local multiharmonic from n+1 shells of values around x, and the
shell-decay defects that characterize weak tangency.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .errors import DomainError, VerificationError
from .fractal import (
    FractalDescriptor,
    LevelGraph,
    VertexAddress,
    apply_symmetry,
    canonical_vertex,
    cells_containing,
    level_graph,
    symmetry_group,
    vertex_order,
)
from .harmonic import VertexFunction, harmonic_extension
from .linalg import solve_exact
from .monomials import MonomialTable

Word = tuple[int, ...]
JetTuple = tuple[Fraction, ...]


@dataclass(frozen=True)
class Jet:
    """Values (Delta^0 f, ..., Delta^n f) at one vertex."""

    values: JetTuple

    @property
    def order(self) -> int:
        return len(self.values) - 1


@dataclass
class JetField:
    """Jets of an (n+1)-harmonic function on all vertices of a level graph."""

    graph: LevelGraph
    order: int
    data: list[JetTuple]

    @property
    def level(self) -> int:
        return self.graph.level

    def jet(self, addr: VertexAddress) -> Jet:
        return Jet(self.data[self.graph.index[addr]])

    def value(self, addr: VertexAddress) -> Fraction:
        return self.data[self.graph.index[addr]][0]

    def component(self, i: int) -> VertexFunction:
        """Delta^i as a plain vertex function."""
        if not 0 <= i <= self.order:
            raise DomainError(f"component {i} outside jet order {self.order}")
        return VertexFunction(self.level, {
            addr: self.data[k][i] for k, addr in enumerate(self.graph.vertices)})

    def to_json_dict(self) -> dict[str, list[str]]:
        return {str(addr): [str(v) for v in self.data[k]]
                for k, addr in enumerate(self.graph.vertices)}


# ---------------------------------------------------------------------------
# Easy basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EasyBasisConstants:
    """Normal-derivative constants and V1 values of the easy basis.

    v1[j][l] lists f_{jl} over the level-1 vertex indices; a[j] and b[j] are
    the normal derivatives of f_{jl} at q_l and at the other corners; c[j]
    is the derived cascade a_j/(N0-1) + sum b_{j-s} c_s that renormalized
    graph Laplacians of multiharmonic functions contract through.
    """

    order: int
    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]
    c: tuple[Fraction, ...]
    v1: tuple[tuple[tuple[Fraction, ...], ...], ...]


@lru_cache(maxsize=None)
def easy_basis_constants(frac: FractalDescriptor, order: int) -> EasyBasisConstants:
    """Build f_{j0} on V1 together with a_j, b_j, stage by stage.

    The derivative constants come first, from the vanishing boundary values
    of f_{j0} (j >= 1) and the energy pairing with the harmonic units:
    dn f_{j0}(q_t) equals the moment of f_{(j-1)0} against the t-th harmonic
    unit, and those moments obey an exact self-similar linear recursion.
    With a_j, b_j fixed, the interior V1 values are pinned by the order-0
    matching conditions alone (a square exact solve); the self-similar
    closure relations of the normal derivative at q0 and q1 are then checked
    rather than imposed, since by themselves they leave a one-parameter
    family that only deeper levels would reject.
    """
    g1 = level_graph(frac, 1)
    n0 = frac.n_boundary
    rho = frac.rho
    group = symmetry_group(frac)
    nv = len(g1.vertices)
    interior = [i for i in range(nv) if not g1.is_boundary(i)]
    pos = {v: k for k, v in enumerate(interior)}

    ext = harmonic_extension(frac)
    f0 = [Fraction(0)] * nv
    for l in range(frac.n_maps):
        for i in range(n0):
            f0[g1.index[canonical_vertex(frac, (l,), i)]] = ext.matrices[l][i][0]
    f0[g1.index[VertexAddress((), 0)]] = Fraction(1)

    stage_values = [f0]
    a = [Fraction(n0 - 1)]
    b = [Fraction(-1)]
    cell_slots = [[g1.index[canonical_vertex(frac, (l,), s)] for s in range(n0)]
                  for l in range(frac.n_maps)]
    colsum = [[sum(ext.matrices[l][s][t] for s in range(n0)) for t in range(n0)]
              for l in range(frac.n_maps)]

    def moments(i: int, prev: list[tuple[Fraction, Fraction]]):
        """(A_i, B_i) = integral of f_{i0} against h_0 and h_1."""
        lhs = [[Fraction(0)] * 2 for _ in range(2)]
        rhs = [Fraction(0)] * 2
        for t in (0, 1):
            for ip in range(i + 1):
                coef = frac.mu * rho ** ip
                vals = stage_values[i - ip]
                for l in range(frac.n_maps):
                    el = ext.matrices[l]
                    for s in range(n0):
                        fv = vals[cell_slots[l][s]]
                        if not fv:
                            continue
                        # pairing of f_{ip,s} with h_t pulled through cell l
                        wa = coef * fv * el[s][t]
                        wb = coef * fv * (colsum[l][t] - el[s][t])
                        if ip == i:
                            lhs[t][0] += wa
                            lhs[t][1] += wb
                        else:
                            ai, bi = prev[ip]
                            rhs[t] += wa * ai + wb * bi
        if i == 0:
            # homogeneous fixed-point equation; normalize by
            # A_0 + (N0-1) B_0 = integral of h_0 = 1/N0.
            rows = [[1 - lhs[0][0], -lhs[0][1]],
                    [-lhs[1][0], 1 - lhs[1][1]],
                    [Fraction(1), Fraction(n0 - 1)]]
            vec = [Fraction(0), Fraction(0), Fraction(1, n0)]
            sol = solve_exact(rows, vec)
        else:
            rows = [[1 - lhs[0][0], -lhs[0][1]],
                    [-lhs[1][0], 1 - lhs[1][1]]]
            sol = solve_exact(rows, rhs)
        return sol[0], sol[1]

    mom: list[tuple[Fraction, Fraction]] = []
    for j in range(1, order + 1):
        mom.append(moments(j - 1, mom))
        a.append(mom[-1][0])
        b.append(mom[-1][1])

        rows, rhs = [], []
        for i in interior:
            row = [Fraction(0)] * len(interior)
            const = Fraction(0)
            w_count = Fraction(g1.cell_count_at(i))
            row[pos[i]] += w_count * a[0]
            for nb in g1.adjacency[i]:
                if not g1.is_boundary(nb):
                    row[pos[nb]] += b[0]
            for jp in range(1, j + 1):
                vals = stage_values[j - jp]
                const += rho ** jp * (w_count * a[jp] * vals[i]
                                      + b[jp] * sum(vals[nb] for nb in g1.adjacency[i]))
            rows.append(row)
            rhs.append(-const)
        try:
            sol = solve_exact(rows, rhs)
        except VerificationError as exc:
            raise VerificationError(
                f"{frac.name}: easy-basis stage {j} failed: {exc}") from exc
        vals = [Fraction(0)] * nv
        for i in interior:
            vals[i] = sol[pos[i]]
        stage_values.append(vals)

        _check_closures(frac, g1, stage_values, a, b, j)

    c = [Fraction(1)]
    for j in range(1, order + 1):
        c.append(a[j] / (n0 - 1) + sum(b[j - s] * c[s] for s in range(j)))

    # other base corners by symmetry: f_{jl} = f_{j0} o g^{-1} with g(q0) = q_l
    v1 = []
    for j in range(order + 1):
        per_l = []
        for l in range(n0):
            g = next(e for e in group.elements if e[0] == l)
            ginv = group.inverse(g)
            per_l.append(tuple(
                stage_values[j][g1.index[apply_symmetry(frac, ginv, addr)]]
                for addr in g1.vertices))
        v1.append(tuple(per_l))
    return EasyBasisConstants(order, tuple(a), tuple(b), tuple(c), tuple(v1))


def _check_closures(frac: FractalDescriptor, g1, stage_values, a, b, j: int) -> None:
    """Assert the self-similar closure of the normal derivative at q0 and q1:
    r * dn f_{j0}(q_t) must equal dn (f_{j0} o F_t)(q_t) expanded through the
    easy-basis formula."""
    n0 = frac.n_boundary
    rho = frac.rho
    for t, target in ((0, frac.r * a[j]), (1, frac.r * b[j])):
        acc = rho ** j * a[j] if t == 0 else Fraction(0)
        for jp in range(j + 1):
            vals = stage_values[j - jp]
            spoke = sum(vals[g1.index[canonical_vertex(frac, (t,), s)]]
                        for s in range(n0) if s != t)
            acc += b[jp] * rho ** jp * spoke
        if acc != target:
            raise VerificationError(
                f"{frac.name}: closure relation fails at stage {j}, corner {t}")


# ---------------------------------------------------------------------------
# Matching conditions
# ---------------------------------------------------------------------------

def matching_residual(field: JetField, addr: VertexAddress, i: int,
                      ebc: EasyBasisConstants | None = None) -> Fraction:
    """Order-i matching residual at an interior vertex (0 for valid fields).

    This is the sum over the cells containing x of the localized normal
    derivatives of Delta^i h, expanded through the easy-basis constants; at
    nonjunction vertices it reduces to the vanishing of the single normal
    derivative.
    """
    graph = field.graph
    frac = graph.fractal
    if addr.is_boundary:
        raise DomainError("matching conditions apply to interior vertices")
    n = field.order
    if ebc is None:
        ebc = easy_basis_constants(frac, n)
    idx = graph.index[addr]
    w_count = Fraction(graph.cell_count_at(idx))
    rho_m = frac.rho ** graph.level
    acc = Fraction(0)
    jet_x = field.data[idx]
    for jp in range(0, n - i + 1):
        nb_sum = sum((field.data[nb][i + jp] for nb in graph.adjacency[idx]), Fraction(0))
        acc += rho_m ** jp * (w_count * ebc.a[jp] * jet_x[i + jp] + ebc.b[jp] * nb_sum)
    return acc


def max_matching_residual(field: JetField) -> Fraction:
    ebc = easy_basis_constants(field.graph.fractal, field.order)
    worst = Fraction(0)
    for k, addr in enumerate(field.graph.vertices):
        if addr.is_boundary:
            continue
        for i in range(field.order + 1):
            worst = max(worst, abs(matching_residual(field, addr, i, ebc)))
    return worst


# ---------------------------------------------------------------------------
# Subdivision and evaluation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _refinement(frac: FractalDescriptor, m: int):
    """Per level-m cell: the level-(m+1) indices of its new interior vertices,
    paired with their class index in the level-1 graph."""
    g_m = level_graph(frac, m)
    g_next = level_graph(frac, m + 1)
    g1 = level_graph(frac, 1)
    inner_classes = [(k, addr) for k, addr in enumerate(g1.vertices)
                     if not addr.is_boundary]
    out = []
    for w in g_m.cells:
        entries = []
        for k, addr in inner_classes:
            child = canonical_vertex(frac, w + addr.word, addr.corner)
            entries.append((g_next.index[child], k))
        out.append(tuple(entries))
    carry = tuple(g_next.index[addr] for addr in g_m.vertices)
    return g_next, out, carry


def subdivide_jets(fld: JetField, check: bool = True) -> JetField:
    """Refine a matching jet field from level m to level m+1 exactly.

    Inside each cell the order-i component at a new vertex is
    sum_{j'} rho^{m j'} f_{j' l'}(class) * Delta^{i+j'} h(corner_{l'}),
    which reduces to plain harmonic extension at the top order.
    """
    frac = fld.graph.fractal
    n = fld.order
    ebc = easy_basis_constants(frac, n)
    if check and max_matching_residual(fld) != 0:
        raise DomainError("input jet field violates the matching conditions")
    g_next, refinement, carry = _refinement(frac, fld.level)
    new_data: list[JetTuple | None] = [None] * len(g_next.vertices)
    for old_idx, new_idx in enumerate(carry):
        new_data[new_idx] = fld.data[old_idx]
    rho_m = frac.rho ** fld.level
    rho_pow = [rho_m ** jp for jp in range(n + 1)]
    n0 = frac.n_boundary

    # per interior class, the nonzero weights (i, l, i + j', rho^{mj'} f_{j'l})
    plans: dict[int, list[tuple[int, int, int, Fraction]]] = {}
    for _, cls in refinement[0]:
        entries = []
        for i in range(n + 1):
            for jp in range(n - i + 1):
                for l in range(n0):
                    w = ebc.v1[jp][l][cls]
                    if w:
                        entries.append((i, l, i + jp, rho_pow[jp] * w))
        plans[cls] = entries

    zero = Fraction(0)
    for ci, entries in enumerate(refinement):
        corner_jets = [fld.data[v] for v in fld.graph.cell_vertices[ci]]
        for new_idx, cls in entries:
            if new_data[new_idx] is not None:
                continue
            jet = [zero] * (n + 1)
            for i, l, i2, w in plans[cls]:
                v = corner_jets[l][i2]
                if v:
                    jet[i] += w * v
            new_data[new_idx] = tuple(jet)
    return JetField(g_next, n, new_data)


def evaluate_multiharmonic(frac: FractalDescriptor,
                           boundary_jets: Sequence[Sequence[Fraction]],
                           m: int) -> JetField:
    """Jet field on V_m of the multiharmonic function with the given
    boundary jets (one jet of order n per boundary corner)."""
    n0 = frac.n_boundary
    if len(boundary_jets) != n0:
        raise DomainError(f"need {n0} boundary jets")
    order = len(boundary_jets[0]) - 1
    if any(len(j) != order + 1 for j in boundary_jets):
        raise DomainError("boundary jets must share one order")
    g0 = level_graph(frac, 0)
    data = [tuple(Fraction(v) for v in boundary_jets[g0.vertices[k].corner])
            for k in range(len(g0.vertices))]
    fld = JetField(g0, order, data)
    for _ in range(m):
        fld = subdivide_jets(fld, check=False)
    return fld


def monomial_boundary_jets(table: MonomialTable, k: int, j: int,
                           order: int | None = None) -> list[list[Fraction]]:
    """Boundary jets of the monomial Q_{jk}^{(0)} (order defaults to j)."""
    frac = table.fractal
    n0 = frac.n_boundary
    order = j if order is None else order
    if order < j:
        raise DomainError("jet order must be at least the monomial degree")

    def seq_at(name: str, i: int) -> Fraction:
        return table.sequence(name)[i] if i >= 0 else Fraction(0)

    jets = []
    for t in range(n0):
        jet = []
        for i in range(order + 1):
            d = j - i
            if t == 0:
                jet.append(Fraction(1) if (k == 1 and d == 0) else Fraction(0))
            elif k == 1:
                jet.append(seq_at("alpha", d))
            elif k == 2:
                jet.append(seq_at("beta", d))
            else:
                if n0 == 3:
                    sign = {1: 1, 2: -1}[t]
                else:
                    sign = {1: 1, 2: 0, 3: -1}[t]
                jet.append(sign * seq_at("gamma", d))
        jets.append(jet)
    return jets


# ---------------------------------------------------------------------------
# Local multiharmonic functions on U(x)
# ---------------------------------------------------------------------------

@dataclass
class LocalMultiharmonic:
    """Element of H_n(U(x)) stored as per-cell chart jets.

    For each first-level cell F_w containing x the jets of h о F_w at the
    N0 reference corners are kept; evaluation anywhere in U(x) subdivides
    the chart exactly.
    """

    fractal: FractalDescriptor
    x: VertexAddress
    order: int
    cells: tuple[tuple[Word, int], ...]
    chart_jets: tuple[tuple[JetTuple, ...], ...]
    _fields: dict[tuple[int, int], JetField] = field(default_factory=dict)

    @property
    def base_level(self) -> int:
        return self.x.first_level

    def chart_field(self, cell: int, depth: int) -> JetField:
        key = (cell, depth)
        if key not in self._fields:
            self._fields[key] = evaluate_multiharmonic(
                self.fractal, self.chart_jets[cell], depth)
        return self._fields[key]

    def chart_value(self, cell: int, suffix: Word, corner: int) -> Fraction:
        fldd = self.chart_field(cell, len(suffix))
        return fldd.value(canonical_vertex(self.fractal, suffix, corner))

    def value(self, addr: VertexAddress) -> Fraction:
        """Value at a vertex of U(x) (address must lie in one of the cells)."""
        for ci, (w, _) in enumerate(self.cells):
            for cw, corner in cells_containing(self.fractal, addr,
                                               max(addr.first_level, len(w))):
                if cw[: len(w)] == w:
                    return self.chart_value(ci, cw[len(w):], corner)
        raise DomainError(f"{addr} is not in U({self.x})")

    def jets_at_x(self) -> JetTuple:
        w, l = self.cells[0]
        rho_m = self.fractal.rho ** len(w)
        return tuple(v / rho_m ** i for i, v in enumerate(self.chart_jets[0][l]))

    def shell_points(self, depth: int) -> list[tuple[int, Word, int]]:
        """The boundary of U_{m0+depth}(x): per cell, the spoke points."""
        out = []
        for ci, (_, l) in enumerate(self.cells):
            for t in range(self.fractal.n_boundary):
                if t != l:
                    out.append((ci, (l,) * depth, t))
        return out

    def shell_values(self, depth: int) -> dict[VertexAddress, Fraction]:
        vals = {}
        for ci, suffix, t in self.shell_points(depth):
            w, _ = self.cells[ci]
            addr = canonical_vertex(self.fractal, w + suffix, t)
            vals[addr] = self.chart_value(ci, suffix, t)
        return vals


def _u_cells(frac: FractalDescriptor, x: VertexAddress) -> tuple[tuple[Word, int], ...]:
    if x.is_boundary:
        raise DomainError("U(x) is defined for interior vertices")
    return cells_containing(frac, x, x.first_level)


def local_from_corner_jets(frac: FractalDescriptor, x: VertexAddress, n: int,
                           corner_jets: dict[VertexAddress, JetTuple]) -> LocalMultiharmonic:
    """Build the chart representation from jets of h at x and the U(x) corners."""
    cells = _u_cells(frac, x)
    m0 = x.first_level
    rho_m = frac.rho ** m0
    charts = []
    for w, _ in cells:
        jets = []
        for t in range(frac.n_boundary):
            corner = canonical_vertex(frac, w, t)
            raw = corner_jets[corner]
            jets.append(tuple(rho_m ** i * raw[i] for i in range(n + 1)))
        charts.append(tuple(jets))
    return LocalMultiharmonic(frac, x, n, cells, tuple(charts))


def random_local_multiharmonic(frac: FractalDescriptor, x: VertexAddress, n: int,
                               rng, span: int = 6) -> LocalMultiharmonic:
    """Random element of H_n(U(x)): free jets at the outer corners, jets at x
    solved top-down from the matching conditions."""
    cells = _u_cells(frac, x)
    m0 = x.first_level
    ebc = easy_basis_constants(frac, n)
    rho_m = frac.rho ** m0
    w_count = Fraction(len(cells))

    def draw() -> Fraction:
        return Fraction(rng.randint(-span, span), rng.randint(1, span))

    corner_jets: dict[VertexAddress, list[Fraction]] = {}
    outer: list[VertexAddress] = []
    for w, l in cells:
        for t in range(frac.n_boundary):
            if t != l:
                addr = canonical_vertex(frac, w, t)
                corner_jets[addr] = [draw() for _ in range(n + 1)]
                outer.append(addr)

    jet_x = [Fraction(0)] * (n + 1)
    for i in range(n, -1, -1):
        acc = Fraction(0)
        for jp in range(0, n - i + 1):
            s = sum((corner_jets[addr][i + jp] for addr in outer), Fraction(0))
            acc += rho_m ** jp * ebc.b[jp] * s
            if jp > 0:
                acc += rho_m ** jp * w_count * ebc.a[jp] * jet_x[i + jp]
        jet_x[i] = -acc / (w_count * ebc.a[0])
    corner_jets[x] = jet_x
    return local_from_corner_jets(
        frac, x, n, {k: tuple(v) for k, v in corner_jets.items()})


# ---------------------------------------------------------------------------
# Weak tangent interpolation (shell fit)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _chart_eval_coeffs(frac: FractalDescriptor, n: int, l: int, depth: int):
    """Coefficients expressing g(F_l^depth q_t) in the boundary jets of g,
    from one unit-jet evaluation per basis direction."""
    n0 = frac.n_boundary
    flat: dict[int, dict[tuple[int, int], Fraction]] = {
        t: {} for t in range(n0) if t != l}
    for t2 in range(n0):
        for i2 in range(n + 1):
            jets = [[Fraction(0)] * (n + 1) for _ in range(n0)]
            jets[t2][i2] = Fraction(1)
            fldd = evaluate_multiharmonic(frac, jets, depth)
            for t in flat:
                flat[t][(t2, i2)] = fldd.value(
                    canonical_vertex(frac, (l,) * depth, t))
    return flat


def weak_tangent_fit(frac: FractalDescriptor, x: VertexAddress, n: int,
                     shell_values: Sequence[dict[VertexAddress, Fraction]],
                     base_m: int | None = None) -> LocalMultiharmonic:
    """The element of H_n(U(x)) taking the given values on n+1 nested shells.

    shell_values[i] holds the values on the boundary of U_{base_m+i}(x).
    The system is square (jets at x and the outer corners, constrained by
    matching at x); it is solvable exactly when the monomial sequences have
    no vanishing entries, so a singular system signals a violation of that
    assumption or a descriptor bug.
    """
    cells = _u_cells(frac, x)
    m0 = x.first_level
    base_m = m0 if base_m is None else base_m
    if base_m < m0:
        raise DomainError("shells start no earlier than the first level of x")
    if len(shell_values) != n + 1:
        raise DomainError(f"need {n + 1} shells of values")
    ebc = easy_basis_constants(frac, n)
    n0 = frac.n_boundary
    rho_m = frac.rho ** m0

    points: list[VertexAddress] = [x]
    for w, l in cells:
        for t in range(n0):
            if t != l:
                points.append(canonical_vertex(frac, w, t))
    pos = {addr: k for k, addr in enumerate(points)}
    size = len(points) * (n + 1)

    def col(addr: VertexAddress, i: int) -> int:
        return pos[addr] * (n + 1) + i

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []

    w_count = Fraction(len(cells))
    for i in range(n + 1):
        row = [Fraction(0)] * size
        for jp in range(0, n - i + 1):
            row[col(x, i + jp)] += rho_m ** jp * w_count * ebc.a[jp]
            for w, l in cells:
                for t in range(n0):
                    if t != l:
                        row[col(canonical_vertex(frac, w, t), i + jp)] += (
                            rho_m ** jp * ebc.b[jp])
        rows.append(row)
        rhs.append(Fraction(0))

    for depth_i, values in enumerate(shell_values):
        depth = base_m - m0 + depth_i
        for w, l in cells:
            coeffs = _chart_eval_coeffs(frac, n, l, depth)
            for t in range(n0):
                if t == l:
                    continue
                target = canonical_vertex(frac, w + (l,) * depth, t)
                if target not in values:
                    raise DomainError(f"missing shell value at {target}")
                row = [Fraction(0)] * size
                for (t2, i2), cf in coeffs[t].items():
                    addr = x if t2 == l else canonical_vertex(frac, w, t2)
                    row[col(addr, i2)] += cf * rho_m ** i2
                rows.append(row)
                rhs.append(values[target])

    try:
        sol = solve_exact(rows, rhs)
    except VerificationError as exc:
        raise VerificationError(
            "shell interpolation is singular: nonvanishing assumption violated "
            f"or descriptor error ({exc})") from exc
    corner_jets = {addr: tuple(sol[col(addr, i)] for i in range(n + 1))
                   for addr in points}
    return local_from_corner_jets(frac, x, n, corner_jets)


# ---------------------------------------------------------------------------
# Symmetry projections on U_m(x)
# ---------------------------------------------------------------------------

def _points_of_cell(frac: FractalDescriptor, w: Word, depth: int):
    for s in _suffixes(frac, depth):
        for c in range(frac.n_boundary):
            yield s, c


@lru_cache(maxsize=None)
def _suffixes(frac: FractalDescriptor, depth: int) -> tuple[Word, ...]:
    out = [()]
    for _ in range(depth):
        out = [s + (l,) for s in out for l in range(frac.n_maps)]
    return tuple(out)


def symmetry_projections(frac: FractalDescriptor, x: VertexAddress, m: int,
                         vf: VertexFunction) -> tuple[VertexFunction, ...]:
    """Split values on U_m(x) into the jet / normal / transverse components.

    Works on any vertex function defined on the level-vf.level vertices of
    the cells of U_m(x); for restrictions of local multiharmonic functions
    the three parts recover the projections onto the monomial families.
    """
    cells = cells_containing(frac, x, m)
    depth = vf.level - m
    if depth < 0:
        raise DomainError("vertex function must live at level >= m")
    group = symmetry_group(frac)
    n0 = frac.n_boundary
    w_count = len(cells)

    def rotation(i: int):
        return tuple((t + i) % n0 for t in range(n0))

    def reflection_fixing(l: int):
        if n0 == 3:
            others = [t for t in range(3) if t != l]
            perm = list(range(3))
            perm[others[0]], perm[others[1]] = others[1], others[0]
            return tuple(perm)
        raise DomainError("d3 reflection requested on a d4 fractal")

    def value_through(g, w: Word, s: Word, c: int) -> Fraction:
        s2, c2 = _apply_inner(frac, group, g, s, c)
        return vf[canonical_vertex(frac, w + s2, c2)]

    def collect(fn) -> VertexFunction:
        out: dict[VertexAddress, Fraction] = {}
        for ci, (w, l) in enumerate(cells):
            for s, c in _points_of_cell(frac, w, depth):
                addr = canonical_vertex(frac, w + s, c)
                if addr not in out:
                    out[addr] = fn(ci, w, l, s, c)
        return VertexFunction(vf.level, out)

    def rot_average(ci, w, l, s, c) -> Fraction:
        acc = Fraction(0)
        for w2, l2 in cells:
            g = rotation((l2 - l) % n0)
            s2, c2 = _apply_inner(frac, group, g, s, c)
            acc += vf[canonical_vertex(frac, w2 + s2, c2)]
        return acc / w_count

    if n0 == 3:
        def refl(ci, w, l, s, c):
            return value_through(reflection_fixing(l), w, s, c)

        def rot_refl(ci, w, l, s, c):
            acc = Fraction(0)
            gl = reflection_fixing(l)
            for w2, l2 in cells:
                g = group.compose(rotation((l2 - l) % n0), gl)
                s2, c2 = _apply_inner(frac, group, g, s, c)
                acc += vf[canonical_vertex(frac, w2 + s2, c2)]
            return acc / w_count

        h = collect(lambda ci, w, l, s, c: vf[canonical_vertex(frac, w + s, c)])
        hg = collect(refl)
        rh = collect(rot_average)
        rhg = collect(rot_refl)
        half = Fraction(1, 2)
        p1 = {k: half * (rhg.values[k] + rh.values[k]) for k in h.values}
        p2 = {k: half * (h.values[k] + hg.values[k] - rhg.values[k] - rh.values[k])
              for k in h.values}
        p3 = {k: half * (h.values[k] - hg.values[k]) for k in h.values}
        return (VertexFunction(vf.level, p1), VertexFunction(vf.level, p2),
                VertexFunction(vf.level, p3))

    # D4: average over the three reflections preserving the base corner,
    # then rotation-average for the jet part.
    def refl_d4(l: int, i: int):
        perm = list(range(4))
        keep = {l, (l + i) % 4}
        others = [t for t in range(4) if t not in keep]
        perm[others[0]], perm[others[1]] = others[1], others[0]
        return tuple(perm)

    def refl_avg(ci, w, l, s, c):
        acc = Fraction(0)
        for i in range(1, 4):
            s2, c2 = _apply_inner(frac, group, refl_d4(l, i), s, c)
            acc += vf[canonical_vertex(frac, w + s2, c2)]
        return acc / 3

    def rot_refl_avg(ci, w, l, s, c):
        # P1 = R(S): rotate into the target cell first, then reflect there.
        acc = Fraction(0)
        for w2, l2 in cells:
            for i in range(1, 4):
                g = group.compose(refl_d4(l2, i), rotation((l2 - l) % 4))
                s2, c2 = _apply_inner(frac, group, g, s, c)
                acc += vf[canonical_vertex(frac, w2 + s2, c2)]
        return acc / (3 * w_count)

    h = collect(lambda ci, w, l, s, c: vf[canonical_vertex(frac, w + s, c)])
    s_avg = collect(refl_avg)
    p1f = collect(rot_refl_avg)
    p1 = p1f.values
    p2 = {k: s_avg.values[k] - p1[k] for k in h.values}
    p3 = {k: h.values[k] - s_avg.values[k] for k in h.values}
    return (VertexFunction(vf.level, p1), VertexFunction(vf.level, p2),
            VertexFunction(vf.level, p3))


def project_symmetry(frac: FractalDescriptor, x: VertexAddress, m: int,
                     vf: VertexFunction, k: int) -> VertexFunction:
    """P_k applied to values on U_m(x), k = 1 (jet), 2 (normal), 3 (transverse)."""
    if k not in (1, 2, 3):
        raise DomainError("k must be 1, 2 or 3")
    return symmetry_projections(frac, x, m, vf)[k - 1]


def _apply_inner(frac: FractalDescriptor, group, g, s: Word, c: int):
    """Apply a symmetry to a within-cell address (suffix word, corner)."""
    out = []
    elem = g
    for letter in s:
        out.append(group.map_perm(elem)[letter])
        elem = group.push(elem, letter)
    return tuple(out), elem[c]


def local_symmetry_image(frac: FractalDescriptor, x: VertexAddress, m: int,
                         addr: VertexAddress, level: int,
                         which: int = 1) -> VertexAddress:
    """Image of a U_m(x) vertex under the local reflection g_x (or g_{x,i})."""
    cells = cells_containing(frac, x, m)
    group = symmetry_group(frac)
    n0 = frac.n_boundary
    for w, l in cells:
        for cw, corner in cells_containing(frac, addr, max(addr.first_level, level)):
            if len(cw) >= len(w) and cw[: len(w)] == w:
                if n0 == 3:
                    others = [t for t in range(3) if t != l]
                    perm = list(range(3))
                    perm[others[0]], perm[others[1]] = others[1], others[0]
                else:
                    keep = {l, (l + which) % 4}
                    others = [t for t in range(4) if t not in keep]
                    perm = list(range(4))
                    perm[others[0]], perm[others[1]] = others[1], others[0]
                s2, c2 = _apply_inner(frac, group, tuple(perm), cw[len(w):], corner)
                return canonical_vertex(frac, w + s2, c2)
    raise DomainError(f"{addr} is not in U_{m}({x})")


# ---------------------------------------------------------------------------
# Exact weak tangent of a multiharmonic function
# ---------------------------------------------------------------------------

def weak_tangent_reference(table: MonomialTable,
                           boundary_jets: Sequence[Sequence[Fraction]],
                           x: VertexAddress, n: int) -> LocalMultiharmonic:
    """The order-(n+1) weak tangent at x of a global multiharmonic f.

    Per cell of U(x) the chart of f is expanded in the monomial families
    based at x (jet coefficients directly, normal coefficients through the
    a/b formula, transverse coefficients by an exact triangular solve
    against the self-similar spine values, invertible precisely because no
    gamma entry vanishes); dropping the degrees above n yields the weak
    tangent, and the discarded mirror samples double as a consistency check.
    """
    frac = table.fractal
    n0 = frac.n_boundary
    capacity = len(boundary_jets[0]) - 1
    if n > capacity:
        raise DomainError("tangent order exceeds the jet order of f")
    if table.degree < capacity:
        raise DomainError("monomial table too short for the requested expansion")
    ebc = easy_basis_constants(frac, capacity)
    m0 = x.first_level
    rho, lam, r = frac.rho, frac.lam, frac.r
    rho_m = rho ** m0

    fld = evaluate_multiharmonic(frac, boundary_jets, m0)
    cells = _u_cells(frac, x)
    n_skew = 1 if n0 == 3 else 2

    charts = []
    for w, l in cells:
        gj = [tuple(rho_m ** i * fld.jet(canonical_vertex(frac, w, t)).values[i]
                    for i in range(capacity + 1)) for t in range(n0)]
        u = list(gj[l])
        v = []
        for j in range(capacity + 1):
            acc = Fraction(0)
            for jp in range(capacity - j + 1):
                acc += gj[l][j + jp] * ebc.a[jp]
                acc += sum(gj[t][j + jp] for t in range(n0) if t != l) * ebc.b[jp]
            v.append(acc)

        chart = evaluate_multiharmonic(frac, gj, capacity)
        spine = {}
        for c in range(1, n0):
            spine[c] = [chart.value(canonical_vertex(
                frac, (l,) * i, (l + c) % n0)) for i in range(capacity + 1)]

        def symmetric_part(i: int) -> Fraction:
            return sum(rho ** (i * j) * (u[j] * table.alpha[j]
                                         + v[j] * r ** i * table.beta[j])
                       for j in range(capacity + 1))

        t_coef: list[list[Fraction]] = []
        for comp in range(n_skew):
            c = comp + 1
            rows = [[lam ** i * rho ** (i * j) * table.gamma[j]
                     for j in range(capacity + 1)] for i in range(capacity + 1)]
            rhs = [spine[c][i] - symmetric_part(i) for i in range(capacity + 1)]
            t_coef.append(solve_exact(rows, rhs))

        # the remaining spine series must be reproduced exactly
        last = n0 - 1
        for i in range(capacity + 1):
            skew = -sum(lam ** i * rho ** (i * j) * table.gamma[j]
                        * sum(t_coef[comp][j] for comp in range(n_skew))
                        for j in range(capacity + 1))
            if spine[last][i] != symmetric_part(i) + skew:
                raise VerificationError(
                    "monomial expansion fails to reproduce the chart values")

        if n0 == 3:
            patterns = {1: (Fraction(1),), 2: (Fraction(-1),)}
        else:
            patterns = {1: (Fraction(1), Fraction(0)),
                        2: (Fraction(0), Fraction(1)),
                        3: (Fraction(-1), Fraction(-1))}

        jets = []
        for t in range(n0):
            if t == l:
                jets.append(tuple(u[i] for i in range(n + 1)))
                continue
            c = (t - l) % n0
            jet = []
            for i in range(n + 1):
                acc = Fraction(0)
                for j in range(i, n + 1):
                    acc += u[j] * table.alpha[j - i] + v[j] * table.beta[j - i]
                    acc += table.gamma[j - i] * sum(
                        patterns[c][comp] * t_coef[comp][j]
                        for comp in range(n_skew))
                jet.append(acc)
            jets.append(tuple(jet))
        charts.append(tuple(jets))
    return LocalMultiharmonic(frac, x, n, cells, tuple(charts))


# ---------------------------------------------------------------------------
# Weak tangent defects
# ---------------------------------------------------------------------------

def weak_tangent_defect(frac: FractalDescriptor,
                        f_values: Callable[[VertexAddress], Fraction],
                        h: LocalMultiharmonic, x: VertexAddress, m: int,
                        ) -> tuple[Fraction, Fraction]:
    """Sup of |f-h| and of the skew part of f-h on the shell dU_m(x).

    The two decay rates of these quantities are what defines a weak tangent;
    this returns the exact finite-m values.
    """
    m0 = x.first_level
    if m < m0:
        raise DomainError("shell level must be at least the first level of x")
    depth = m - m0
    diff: dict[VertexAddress, Fraction] = {}
    for ci, suffix, t in h.shell_points(depth):
        w, _ = h.cells[ci]
        addr = canonical_vertex(frac, w + suffix, t)
        diff[addr] = f_values(addr) - h.chart_value(ci, suffix, t)
    d1 = max((abs(v) for v in diff.values()), default=Fraction(0))
    skew_reflections = (1,) if frac.n_boundary == 3 else (1, 2)
    d2 = Fraction(0)
    for which in skew_reflections:
        for addr, v in diff.items():
            mirror = local_symmetry_image(frac, x, m0, addr, m, which)
            d2 = max(d2, abs(v - diff[mirror]))
    return d1, d2
