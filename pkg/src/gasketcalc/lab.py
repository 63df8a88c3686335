"""Pointwise-formula laboratory.

Exact verification of the contraction identities satisfied by renormalized
graph Laplacians of multiharmonic functions, convergence experiments for
the pointwise formula of the higher-order Laplacian, and the coefficient
schemes (point/weight functionals that annihilate lower multiharmonics and
compute Delta^n by rescaled translation).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, VerificationError
from .fractal import (
    FractalDescriptor,
    VertexAddress,
    boundary_distances,
    canonical_vertex,
    laplacian_domain,
    level_graph,
)
from .harmonic import VertexFunction, renormalized_laplacian
from .jets import (
    JetField,
    easy_basis_constants,
    evaluate_multiharmonic,
    monomial_boundary_jets,
    weak_tangent_fit,
    weak_tangent_reference,
)
from .monomials import MonomialTable
from .render import plain_sig, sci_string


def iterate_discrete_laplacian(graph, f: VertexFunction, n: int) -> VertexFunction:
    """Apply the renormalized graph Laplacian n times; the domain shrinks to
    the vertices at distance >= n from the boundary."""
    if n < 1:
        raise DomainError("n must be >= 1")
    dist = boundary_distances(graph)
    if not any(d >= n for d in dist):
        raise DomainError(f"V_m^{n} is empty at level {graph.level}")
    current = f
    for step in range(1, n + 1):
        values = {}
        for i, addr in enumerate(graph.vertices):
            if dist[i] >= step:
                values[addr] = renormalized_laplacian(graph, current, addr)
        current = VertexFunction(graph.level, values)
    return current


# ---------------------------------------------------------------------------
# Exact lemma checks
# ---------------------------------------------------------------------------

def lemma43_residuals(table: MonomialTable, fld: JetField) -> Fraction:
    """Max over interior vertices of
    | tilde-Delta_m h(x) - alpha_1^{-1} sum_j rho^{m(j-1)} alpha_j Delta^j h(x) |."""
    frac = fld.graph.fractal
    if table.degree < fld.order:
        raise DomainError("monomial table too short")
    rho_m = frac.rho ** fld.level
    inv = 1 / table.alpha[1]
    values = fld.component(0)
    worst = Fraction(0)
    for addr in fld.graph.vertices:
        if addr.is_boundary:
            continue
        predicted = inv * sum(
            rho_m ** (j - 1) * table.alpha[j] * fld.jet(addr).values[j]
            for j in range(1, fld.order + 1))
        got = renormalized_laplacian(fld.graph, values, addr)
        worst = max(worst, abs(got - predicted))
    return worst


def lemma63_residuals(fld: JetField) -> Fraction:
    """Same contraction identity through the easy-basis cascade constants:
    tilde-Delta_m h = N0 (N0-1) sum_j rho^{m(j-1)} c_j Delta^j h."""
    frac = fld.graph.fractal
    ebc = easy_basis_constants(frac, fld.order)
    n0 = frac.n_boundary
    rho_m = frac.rho ** fld.level
    values = fld.component(0)
    worst = Fraction(0)
    for addr in fld.graph.vertices:
        if addr.is_boundary:
            continue
        predicted = n0 * (n0 - 1) * sum(
            rho_m ** (j - 1) * ebc.c[j] * fld.jet(addr).values[j]
            for j in range(1, fld.order + 1))
        got = renormalized_laplacian(fld.graph, values, addr)
        worst = max(worst, abs(got - predicted))
    return worst


def lemma44_residuals(fld: JetField, n: int) -> Fraction:
    """Max over V_m^n of | tilde-Delta_m^n h(x) - Delta^n h(x) | (exactly 0
    for h multiharmonic of order n)."""
    if n > fld.order:
        raise DomainError("need jets of order >= n")
    graph = fld.graph
    iterated = iterate_discrete_laplacian(graph, fld.component(0), n)
    target = fld.component(n)
    worst = Fraction(0)
    for addr, got in iterated.values.items():
        worst = max(worst, abs(got - target[addr]))
    return worst


# ---------------------------------------------------------------------------
# Convergence experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    sup_error: Fraction
    ratio: Fraction | None


@dataclass(frozen=True)
class ConvergenceReport:
    kind: str
    fractal: str
    n: int
    rows: tuple[ConvergenceRow, ...]

    def csv_lines(self) -> list[str]:
        lines = ["m,sup_error_exact,sup_error_decimal,ratio_decimal"]
        for row in self.rows:
            ratio = "" if row.ratio is None else plain_sig(row.ratio, 10)
            lines.append(f"{row.m},{row.sup_error},{sci_string(row.sup_error)},{ratio}")
        return lines


def _report(kind: str, frac_name: str, n: int,
            errors: Sequence[tuple[int, Fraction]]) -> ConvergenceReport:
    rows = []
    prev: Fraction | None = None
    for m, err in errors:
        ratio = None if (prev is None or prev == 0) else err / prev
        rows.append(ConvergenceRow(m, err, ratio))
        prev = err
    return ConvergenceReport(kind, frac_name, n, tuple(rows))


def laplacian_convergence(frac: FractalDescriptor, n: int, levels: Sequence[int],
                          boundary_jets: Sequence[Sequence[Fraction]],
                          ) -> ConvergenceReport:
    """Sup over V_m^n of |tilde-Delta_m^n f - Delta^n f| for a jet-specified f.

    The jets carry Delta^n f exactly, so the error column has no reference
    discretization error; for f multiharmonic of order n it is identically
    zero, and for one order more it decays geometrically like rho^m.
    """
    order = len(boundary_jets[0]) - 1
    if order < n:
        raise DomainError("f must carry jets of order >= n")
    errors = []
    top = max(levels)
    fld = evaluate_multiharmonic(frac, boundary_jets, min(levels))
    for m in range(min(levels), top + 1):
        if m > fld.level:
            from .jets import subdivide_jets
            fld = subdivide_jets(fld, check=False)
        if m not in levels:
            continue
        if not laplacian_domain(fld.graph, n):
            continue
        err = lemma44_residuals(fld, n)
        errors.append((m, err))
    return _report("laplacian", frac.name, n, errors)


def monomial_test_function(table: MonomialTable, n: int) -> list[list[Fraction]]:
    """Boundary jets of Q_{(n+1)1}^{(0)}, the canonical convergence probe."""
    return monomial_boundary_jets(table, 1, n + 1)


def tangent_convergence(table: MonomialTable, x: VertexAddress, n: int,
                        shells_from: int, shells_to: int,
                        boundary_jets: Sequence[Sequence[Fraction]] | None = None,
                        depth: int = 2) -> ConvergenceReport:
    """Sup-norm distance between the shell interpolants h_m and the exact
    weak tangent of f at x, sampled on the U(x) vertices at a fixed depth."""
    frac = table.fractal
    if boundary_jets is None:
        boundary_jets = monomial_test_function(table, n)
    h_ref = weak_tangent_reference(table, boundary_jets, x, n)
    m0 = x.first_level

    max_level = shells_to + n
    fld = evaluate_multiharmonic(frac, boundary_jets, m0)
    fields = {fld.level: fld}
    from .jets import subdivide_jets
    while fld.level < max_level:
        fld = subdivide_jets(fld, check=False)
        fields[fld.level] = fld

    probes = []
    for ci, (w, _) in enumerate(h_ref.cells):
        for s in _enumerate(frac, depth):
            for c in range(frac.n_boundary):
                probes.append((ci, s, c))

    errors = []
    for m in range(shells_from, shells_to + 1):
        shells = []
        for i in range(n + 1):
            level = m + i
            shell = {}
            for ci, (w, l) in enumerate(h_ref.cells):
                for t in range(frac.n_boundary):
                    if t != l:
                        addr = canonical_vertex(frac, w + (l,) * (level - m0), t)
                        shell[addr] = fields[level].value(addr)
            shells.append(shell)
        h_m = weak_tangent_fit(frac, x, n, shells, base_m=m)
        err = max(abs(h_m.chart_value(ci, s, c) - h_ref.chart_value(ci, s, c))
                  for ci, s, c in probes)
        errors.append((m, err))
    return _report("tangent", frac.name, n, errors)


def _enumerate(frac: FractalDescriptor, depth: int):
    out = [()]
    for _ in range(depth):
        out = [s + (l,) for s in out for l in range(frac.n_maps)]
    return out


# ---------------------------------------------------------------------------
# Coefficient schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoefficientScheme:
    """Point/weight functional annihilating all multiharmonics of order n-1,
    with normalizer A = its value on any h with Delta^n h = 1."""

    order: int
    points: tuple[VertexAddress, ...]
    coefficients: tuple[Fraction, ...]
    normalizer: Fraction


def _easy_jets(frac: FractalDescriptor, i: int, l: int, order: int):
    jets = [[Fraction(0)] * (order + 1) for _ in range(frac.n_boundary)]
    jets[l][i] = Fraction(1)
    return jets


def scheme_check(frac: FractalDescriptor, points: Sequence[VertexAddress],
                 coefficients: Sequence[Fraction], n: int) -> CoefficientScheme:
    """Validate the scheme hypotheses against the easy spanning set.

    Every f_{il'} with i <= n-1 must be annihilated, and the normalizer
    computed from sum_l f_{nl} (whose n-th Laplacian is 1) must not vanish;
    violations are reported with the offending basis element.
    """
    if len(points) != len(coefficients):
        raise DomainError("points and coefficients must pair up")
    level = max(p.first_level for p in points)
    coefficients = [Fraction(c) for c in coefficients]
    failures = []
    for i in range(n):
        for l in range(frac.n_boundary):
            fld = evaluate_multiharmonic(frac, _easy_jets(frac, i, l, n - 1), level)
            s = sum((c * fld.value(p) for c, p in zip(coefficients, points)),
                    Fraction(0))
            if s != 0:
                failures.append(f"f_({i},{l}) pairs to {s}")
    if failures:
        raise VerificationError(
            "scheme does not annihilate the lower multiharmonics: "
            + "; ".join(failures))
    unit_jets = [[Fraction(1 if i == n else 0) for i in range(n + 1)]
                 for _ in range(frac.n_boundary)]
    fld = evaluate_multiharmonic(frac, unit_jets, level)
    normalizer = sum((c * fld.value(p) for c, p in zip(coefficients, points)),
                     Fraction(0))
    if normalizer == 0:
        raise VerificationError("scheme normalizer vanishes")
    return CoefficientScheme(n, tuple(points), tuple(coefficients), normalizer)


def scheme_apply(frac: FractalDescriptor, scheme: CoefficientScheme,
                 boundary_jets: Sequence[Sequence[Fraction]],
                 word: Sequence[int], m: int) -> Fraction:
    """A^{-1} rho^{-n m} sum_j a_j f(F_{[word]_m} y_j) for a jet-specified f."""
    word = tuple(word)[:m]
    if len(word) < m:
        raise DomainError("word shorter than the requested depth")
    level = m + max(p.first_level for p in scheme.points)
    fld = evaluate_multiharmonic(frac, boundary_jets, level)
    acc = Fraction(0)
    for c, p in zip(scheme.coefficients, scheme.points):
        target = canonical_vertex(frac, word + p.word, p.corner)
        acc += c * fld.value(target)
    return acc / (scheme.normalizer * frac.rho ** (scheme.order * m))


def laplacian_stencil(frac: FractalDescriptor, x: VertexAddress, m: int,
                      ) -> tuple[list[VertexAddress], list[Fraction]]:
    """The raw graph-Laplacian functional at x on G_m (conductance-weighted
    neighbors minus center); as a scheme of order 1 its normalizer is the
    tent integral at x."""
    graph = level_graph(frac, m)
    i = graph.index[x]
    if graph.is_boundary(i):
        raise DomainError("stencil center must be interior")
    points = [x]
    coeffs = [-graph.conductance * len(graph.adjacency[i])]
    for j in graph.adjacency[i]:
        points.append(graph.vertices[j])
        coeffs.append(graph.conductance)
    return points, coeffs


def renormalized_iterated_stencil(frac: FractalDescriptor, x: VertexAddress,
                                  m: int, n: int,
                                  ) -> tuple[list[VertexAddress], list[Fraction]]:
    """The functional of the n-fold renormalized Laplacian at x, composed
    symbolically over the m-level graph."""
    graph = level_graph(frac, m)
    dist = boundary_distances(graph)
    if dist[graph.index[x]] < n:
        raise DomainError(f"{x} is not in V_m^{n}")
    weights: dict[int, Fraction] = {graph.index[x]: Fraction(1)}
    for _ in range(n):
        nxt: dict[int, Fraction] = {}
        for i, w in weights.items():
            scale = w * graph.conductance / graph.tent_integral(i)
            for j in graph.adjacency[i]:
                nxt[j] = nxt.get(j, Fraction(0)) + scale
            nxt[i] = nxt.get(i, Fraction(0)) - scale * len(graph.adjacency[i])
        weights = nxt
    points = [graph.vertices[i] for i in sorted(weights)]
    coeffs = [weights[i] for i in sorted(weights)]
    return points, coeffs
