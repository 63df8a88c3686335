"""Harmonic extension, graph energy and Laplacians, derivative estimators.

The level-1 Dirichlet problem is solved once per fractal by exact Gaussian
elimination; everything downstream (extension matrices, tent integrals,
renormalized Laplacians) stays rational.  Derivative estimators return the
finite-m difference quotients of the limit formulas and never extrapolate:
for harmonic functions they are exact at every m, for anything else the
caller drives the limit.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError, VerificationError
from .fractal import (
    FractalDescriptor,
    LevelGraph,
    VertexAddress,
    canonical_vertex,
    level_graph,
)
from .linalg import det_exact, solve_exact


@dataclass
class VertexFunction:
    """Rational values on (a sub-collection of) the level-m vertices."""

    level: int
    values: dict[VertexAddress, Fraction]

    def __getitem__(self, addr: VertexAddress) -> Fraction:
        try:
            return self.values[addr]
        except KeyError:
            raise DomainError(f"function not defined at {addr}") from None

    def __contains__(self, addr: VertexAddress) -> bool:
        return addr in self.values


@dataclass(frozen=True)
class HarmonicExtension:
    """Matrices M_l with (M_l)[i][k] = value at F_l q_i of the harmonic unit e_k."""

    matrices: tuple[tuple[tuple[Fraction, ...], ...], ...]


@lru_cache(maxsize=None)
def harmonic_extension(frac: FractalDescriptor) -> HarmonicExtension:
    """Solve the level-1 interior balance equations for each boundary unit."""
    g1 = level_graph(frac, 1)
    interior = [i for i in range(len(g1.vertices)) if not g1.is_boundary(i)]
    pos = {v: k for k, v in enumerate(interior)}
    columns = []
    for k in range(frac.n_boundary):
        rows = []
        rhs = []
        for i in interior:
            row = [Fraction(0)] * len(interior)
            row[pos[i]] = Fraction(len(g1.adjacency[i]))
            b = Fraction(0)
            for j in g1.adjacency[i]:
                if g1.is_boundary(j):
                    if g1.vertices[j].corner == k:
                        b += 1
                else:
                    row[pos[j]] -= 1
            rows.append(row)
            rhs.append(b)
        try:
            columns.append(solve_exact(rows, rhs))
        except VerificationError as exc:
            raise VerificationError(f"level-1 system for {frac.name} is singular") from exc

    def value(addr: VertexAddress, k: int) -> Fraction:
        if addr.is_boundary:
            return Fraction(1) if addr.corner == k else Fraction(0)
        return columns[k][pos[g1.index[addr]]]

    matrices = tuple(
        tuple(
            tuple(value(canonical_vertex(frac, (l,), i), k) for k in range(frac.n_boundary))
            for i in range(frac.n_boundary))
        for l in range(frac.n_maps))
    return HarmonicExtension(matrices)


def extension_spectrum_ok(frac: FractalDescriptor) -> bool:
    """The boundary maps M_l (l < N0) must have spectrum {1, r, lambda(,lambda)}.

    Only the maps fixing a boundary corner carry the decay meaning of r and
    lambda; cells not in the symmetry orbit of cell 0 (the middle cells of
    sg3 and hg) have their own spectra.
    """
    ext = harmonic_extension(frac)
    n0 = frac.n_boundary
    roots = [Fraction(1), frac.r] + [frac.lam] * (n0 - 2)
    for mat in ext.matrices[:n0]:
        for t in range(n0 + 1):
            shifted = [
                [mat[i][j] - (t if i == j else 0) for j in range(n0)] for i in range(n0)]
            expected = Fraction(1)
            for root in roots:
                expected *= root - t
            if det_exact(shifted) != expected:
                return False
    return True


# ---------------------------------------------------------------------------
# Laplacians and energy
# ---------------------------------------------------------------------------

def graph_laplacian(graph: LevelGraph, f: VertexFunction, x: VertexAddress) -> Fraction:
    """Delta_m f(x) = sum over neighbors of c_xy (f(y) - f(x))."""
    if x.is_boundary:
        raise DomainError("graph Laplacian is not defined on V0")
    i = graph.index[x]
    fx = f[x]
    acc = Fraction(0)
    for j in graph.adjacency[i]:
        acc += f[graph.vertices[j]] - fx
    return graph.conductance * acc


def renormalized_laplacian(graph: LevelGraph, f: VertexFunction, x: VertexAddress) -> Fraction:
    """Tilde-Delta_m f(x): the graph Laplacian divided by the tent integral."""
    if x.is_boundary:
        raise DomainError("renormalized Laplacian is not defined on V0")
    return graph_laplacian(graph, f, x) / graph.tent_integral(graph.index[x])


def energy(graph: LevelGraph, f: VertexFunction) -> Fraction:
    """E_m(f) = sum over level-m edges of c_xy (f(x) - f(y))^2."""
    acc = Fraction(0)
    for i, nbrs in enumerate(graph.adjacency):
        vi = f[graph.vertices[i]]
        for j in nbrs:
            if j > i:
                d = vi - f[graph.vertices[j]]
                acc += d * d
    return graph.conductance * acc


# ---------------------------------------------------------------------------
# Derivative estimators (finite-m values of the limit formulas)
# ---------------------------------------------------------------------------

def _estimate_points(frac: FractalDescriptor, word, l: int, m: int):
    n0 = frac.n_boundary
    word = tuple(word)
    center = canonical_vertex(frac, word, l)
    spokes = [
        canonical_vertex(frac, word + (l,) * m, (l + i) % n0)
        for i in range(1, n0)]
    return center, spokes


def normal_derivative_estimate(frac: FractalDescriptor, f: VertexFunction,
                               l: int, m: int, word=()) -> Fraction:
    """r_w^{-1} r^{-m} ((N0-1) f(x) - sum of f at the m-th spoke points).

    With an empty word this is the estimator at the boundary point q_l; a
    nonempty word localizes it to the cell F_word at x = F_word q_l.
    """
    center, spokes = _estimate_points(frac, word, l, m)
    n0 = frac.n_boundary
    val = (n0 - 1) * f[center] - sum((f[p] for p in spokes), Fraction(0))
    return frac.r ** (-(m + len(word))) * val


def transverse_derivative_estimate(frac: FractalDescriptor, f: VertexFunction,
                                   l: int, m: int, word=()):
    """Finite-m transverse derivative; a single value for D3, a pair for D4."""
    center, spokes = _estimate_points(frac, word, l, m)
    scale = frac.r ** (-len(word)) * frac.lam ** (-m)
    if frac.n_boundary == 3:
        return scale * (f[spokes[0]] - f[spokes[1]])
    v1, v2, v3 = (f[p] for p in spokes)
    return (scale * (2 * v1 - v2 - v3), scale * (2 * v2 - v1 - v3))
