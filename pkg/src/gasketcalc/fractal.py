"""Combinatorial model of fully symmetric p.c.f. fractals.

A fractal is described purely combinatorially: N contraction maps, N0
boundary corners (map l fixes corner l for l < N0), a table of level-1
identifications gluing (map, corner) slots together, the harmonic-structure
constants r, mu, lambda, and a symmetry group acting simultaneously on map
indices and corners.  No coordinates are stored anywhere.

Vertices are addressed as (word, corner) meaning F_word applied to boundary
corner q_corner.  Canonicalization strips trailing letters equal to the
corner (F_c fixes q_c) and replaces the final (map, corner) pair by the
lexicographically least member of its identification class; two addresses
denote the same point iff their canonical forms coincide.

Symmetry-group elements are keyed by their corner permutation (the action on
the boundary is faithful here).  Each element g carries a map permutation
sigma and, per map l, the element induced inside the cell:
g о F_l = F_sigma(l) о push_g(l).  Maps that contain rotations (the
hexagasket) make push depend on l, which is why it is stored per map.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError, DomainError

Perm = tuple[int, ...]
Word = tuple[int, ...]

BUILTIN_NAMES = ("sg", "sg3", "hg", "sg4")


# ---------------------------------------------------------------------------
# Descriptor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSpec:
    """One symmetry generator: corner perm, map perm, and per-map induced perms."""

    corners: Perm
    maps: Perm
    push: tuple[Perm, ...]


@dataclass(frozen=True)
class FractalDescriptor:
    name: str
    n_maps: int
    n_boundary: int
    r: Fraction
    mu: Fraction
    lam: Fraction
    identifications: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    generators: tuple[GeneratorSpec, ...]

    @property
    def rho(self) -> Fraction:
        return self.r * self.mu

    def __post_init__(self):
        if not 2 <= self.n_boundary <= self.n_maps:
            raise ConfigurationError("need n_boundary <= n_maps")
        for (a, c), (b, d) in self.identifications:
            for m_, c_ in ((a, c), (b, d)):
                if not (0 <= m_ < self.n_maps and 0 <= c_ < self.n_boundary):
                    raise ConfigurationError(f"identification out of range: {(m_, c_)}")
            if a == c or b == d:
                raise ConfigurationError(
                    "identifications must glue interior slots, not boundary fixed points")


def _parse_fraction(text: str) -> Fraction:
    return Fraction(text.strip())


def _parse_perm(text: str, size: int, what: str) -> Perm:
    parts = tuple(int(t) for t in text.replace(",", " ").split())
    if sorted(parts) != list(range(size)):
        raise ConfigurationError(f"{what} is not a permutation of 0..{size - 1}: {text!r}")
    return parts


def _parse_slot(text: str) -> tuple[int, int]:
    word, _, corner = text.strip().partition("/")
    if not corner:
        raise ConfigurationError(f"bad identification slot {text!r}, expected 'map/corner'")
    return int(word), int(corner)


def parse_descriptor(text: str) -> FractalDescriptor:
    """Parse the structured-text descriptor format (see data/*.txt)."""
    fields: dict[str, str] = {}
    identifications = []
    generators = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(":")
        key = key.strip().lower()
        value = value.strip()
        if key == "identify":
            left, _, right = value.partition("=")
            identifications.append((_parse_slot(left), _parse_slot(right)))
        elif key == "generator":
            generators.append(value)
        elif key in ("name", "maps", "boundary", "r", "mu", "lambda"):
            fields[key] = value
        else:
            raise ConfigurationError(f"unknown descriptor key {key!r}")

    missing = {"name", "maps", "boundary", "r", "mu", "lambda"} - set(fields)
    if missing:
        raise ConfigurationError(f"descriptor missing keys: {sorted(missing)}")
    n_maps = int(fields["maps"])
    n_boundary = int(fields["boundary"])

    gens = []
    for spec in generators:
        parts = {k.strip(): v.strip()
                 for k, v in (p.split("=", 1) for p in spec.split(";"))}
        corners = _parse_perm(parts["corners"], n_boundary, "generator corners")
        maps = _parse_perm(parts["maps"], n_maps, "generator maps")
        push_tokens = parts.get("push", "self").replace(",", " ").split()
        if len(push_tokens) == 1:
            push_tokens = push_tokens * n_maps
        if len(push_tokens) != n_maps:
            raise ConfigurationError("generator push needs one entry per map")
        push = []
        for tok in push_tokens:
            if tok == "self":
                push.append(corners)
            elif tok == "id":
                push.append(tuple(range(n_boundary)))
            else:
                push.append(_parse_perm(tok.replace(".", " "), n_boundary, "push perm"))
        gens.append(GeneratorSpec(corners, maps, tuple(push)))

    frac = FractalDescriptor(
        name=fields["name"],
        n_maps=n_maps,
        n_boundary=n_boundary,
        r=_parse_fraction(fields["r"]),
        mu=_parse_fraction(fields["mu"]),
        lam=_parse_fraction(fields["lambda"]),
        identifications=tuple(identifications),
        generators=tuple(gens),
    )
    _validate(frac)
    return frac


def load_descriptor(path: str | Path) -> FractalDescriptor:
    return parse_descriptor(Path(path).read_text())


@lru_cache(maxsize=None)
def builtin(name: str) -> FractalDescriptor:
    """Load one of the shipped descriptors: sg, sg3, hg, sg4."""
    if name not in BUILTIN_NAMES:
        raise ConfigurationError(f"unknown fractal {name!r}, expected one of {BUILTIN_NAMES}")
    text = resources.files("gasketcalc").joinpath(f"data/{name}.txt").read_text()
    return parse_descriptor(text)


# ---------------------------------------------------------------------------
# Symmetry group
# ---------------------------------------------------------------------------

class SymmetryGroup:
    """Closure of the descriptor generators, elements keyed by corner perm."""

    def __init__(self, n_corners: int, n_maps: int,
                 table: dict[Perm, tuple[Perm, tuple[Perm, ...]]]):
        self.n_corners = n_corners
        self.n_maps = n_maps
        self._table = table
        self.elements: tuple[Perm, ...] = tuple(sorted(table))

    @property
    def identity(self) -> Perm:
        return tuple(range(self.n_corners))

    def map_perm(self, g: Perm) -> Perm:
        return self._table[g][0]

    def push(self, g: Perm, map_index: int) -> Perm:
        return self._table[g][1][map_index]

    def compose(self, g: Perm, h: Perm) -> Perm:
        """g after h, as a corner perm."""
        return tuple(g[h[i]] for i in range(self.n_corners))

    def inverse(self, g: Perm) -> Perm:
        inv = [0] * self.n_corners
        for i, gi in enumerate(g):
            inv[gi] = i
        return tuple(inv)

    def stabilizer(self, corner: int) -> tuple[Perm, ...]:
        return tuple(g for g in self.elements if g[corner] == corner)


@lru_cache(maxsize=None)
def symmetry_group(frac: FractalDescriptor) -> SymmetryGroup:
    n0, n = frac.n_boundary, frac.n_maps
    ident = tuple(range(n0))
    table: dict[Perm, tuple[Perm, tuple[Perm, ...]]] = {
        ident: (tuple(range(n)), (ident,) * n),
    }
    queue = deque()
    for gen in frac.generators:
        if gen.corners not in table:
            table[gen.corners] = (gen.maps, gen.push)
            queue.append(gen.corners)
    pending = deque(table)
    while pending:
        h = pending.popleft()
        hm, hp = table[h]
        for g in list(table):
            gm, gp = table[g]
            for left, right in ((g, h), (h, g)):
                lm, lp = table[left]
                rm, rp = table[right]
                cp = tuple(left[right[i]] for i in range(n0))
                if cp in table:
                    continue
                mp = tuple(lm[rm[l]] for l in range(n))
                push = tuple(
                    tuple(lp[rm[l]][rp[l][i]] for i in range(n0)) for l in range(n))
                table[cp] = (mp, push)
                pending.append(cp)
    group = SymmetryGroup(n0, n, table)
    for g in group.elements:
        for l in range(n):
            if group.push(g, l) not in table:
                raise ConfigurationError("symmetry push leads outside the group")
    return group


# ---------------------------------------------------------------------------
# Vertex addressing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class VertexAddress:
    """Canonical identity of a vertex: F_word applied to boundary corner."""

    word: Word
    corner: int

    @property
    def is_boundary(self) -> bool:
        return not self.word

    @property
    def first_level(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return f"{''.join(map(str, self.word))}/{self.corner}"


@lru_cache(maxsize=None)
def identification_classes(frac: FractalDescriptor) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
    """Union-find closure of the level-1 identification pairs."""
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(s):
        while parent.get(s, s) != s:
            parent[s] = parent.get(parent[s], parent[s])
            s = parent[s]
        return s

    for a, b in frac.identifications:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    classes: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for l in range(frac.n_maps):
        for c in range(frac.n_boundary):
            classes.setdefault(find((l, c)), []).append((l, c))
    return {min(v): tuple(sorted(v)) for v in classes.values()}


@lru_cache(maxsize=None)
def _slot_to_class(frac: FractalDescriptor) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
    out = {}
    for members in identification_classes(frac).values():
        for slot in members:
            out[slot] = members
    return out


def canonical_vertex(frac: FractalDescriptor, word: Word, corner: int) -> VertexAddress:
    """Lexicographically least equivalent address under the identification closure."""
    word = tuple(word)
    if not 0 <= corner < frac.n_boundary:
        raise DomainError(f"corner {corner} out of range")
    if any(not 0 <= l < frac.n_maps for l in word):
        raise DomainError(f"word {word} out of range")
    while word and word[-1] == corner:
        word = word[:-1]
    if not word:
        return VertexAddress((), corner)
    slot, corner = _slot_to_class(frac)[(word[-1], corner)][0]
    return VertexAddress(word[:-1] + (slot,), corner)


def vertex_order(frac: FractalDescriptor, addr: VertexAddress) -> int:
    """Number of first-level cells containing the point (the order #W(x))."""
    if addr.is_boundary:
        return 1
    return len(_slot_to_class(frac)[(addr.word[-1], addr.corner)])


def cells_containing(frac: FractalDescriptor, addr: VertexAddress, m: int) -> tuple[tuple[Word, int], ...]:
    """All (cell word, corner) with |word| = m whose cell contains the vertex."""
    if m < addr.first_level:
        raise DomainError(f"{addr} is not in V_{m}")
    if addr.is_boundary:
        return (((addr.corner,) * m, addr.corner),)
    prefix = addr.word[:-1]
    pad = m - addr.first_level
    return tuple(
        (prefix + (l,) + (c,) * pad, c)
        for l, c in _slot_to_class(frac)[(addr.word[-1], addr.corner)])


def apply_symmetry(frac: FractalDescriptor, g: Perm, addr: VertexAddress) -> VertexAddress:
    """Group action on canonical addresses."""
    group = symmetry_group(frac)
    out = []
    elem = g
    for letter in addr.word:
        out.append(group.map_perm(elem)[letter])
        elem = group.push(elem, letter)
    return canonical_vertex(frac, tuple(out), elem[addr.corner])


def parse_vertex(frac: FractalDescriptor, text: str) -> VertexAddress:
    """Parse 'word/corner' syntax, e.g. '01/2' for F0 F1 q2, '/2' for q2."""
    word_part, sep, corner_part = text.strip().partition("/")
    if not sep:
        raise ConfigurationError(f"bad vertex {text!r}, expected 'word/corner'")
    try:
        word = tuple(int(ch) for ch in word_part)
        corner = int(corner_part)
    except ValueError as exc:
        raise ConfigurationError(f"bad vertex {text!r}") from exc
    return canonical_vertex(frac, word, corner)


# ---------------------------------------------------------------------------
# Level graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevelGraph:
    """The resistance graph G_m with conductances r**(-m) on every edge.

    Instances are interned per (fractal, level) by `level_graph`, so identity
    hashing (eq=False) is used for the caches keyed on graphs.
    """

    fractal: FractalDescriptor
    level: int
    vertices: tuple[VertexAddress, ...]
    index: dict[VertexAddress, int]
    cells: tuple[Word, ...]
    cell_vertices: tuple[tuple[int, ...], ...]
    vertex_cells: tuple[tuple[tuple[int, int], ...], ...]
    adjacency: tuple[tuple[int, ...], ...]
    conductance: Fraction

    @property
    def boundary_indices(self) -> tuple[int, ...]:
        return tuple(self.index[VertexAddress((), c)] for c in range(self.fractal.n_boundary))

    def is_boundary(self, i: int) -> bool:
        return self.vertices[i].is_boundary

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def cell_count_at(self, i: int) -> int:
        return len(self.vertex_cells[i])

    def tent_integral(self, i: int) -> Fraction:
        """Integral of the level-m tent function at vertex i against mu."""
        frac = self.fractal
        return Fraction(self.cell_count_at(i)) * frac.mu ** self.level / frac.n_boundary


def _enumerate_words(n: int, m: int):
    if m == 0:
        yield ()
        return
    stack = [()]
    for _ in range(m):
        stack = [w + (l,) for w in stack for l in range(n)]
    yield from stack


@lru_cache(maxsize=None)
def level_graph(frac: FractalDescriptor, m: int) -> LevelGraph:
    if m < 0:
        raise DomainError("level must be nonnegative")
    n0 = frac.n_boundary
    cells = tuple(_enumerate_words(frac.n_maps, m))
    index: dict[VertexAddress, int] = {}
    vertices: list[VertexAddress] = []
    cell_vertices = []
    vertex_cells: list[list[tuple[int, int]]] = []
    for ci, w in enumerate(cells):
        corners = []
        for c in range(n0):
            addr = canonical_vertex(frac, w, c)
            i = index.get(addr)
            if i is None:
                i = len(vertices)
                index[addr] = i
                vertices.append(addr)
                vertex_cells.append([])
            corners.append(i)
            vertex_cells[i].append((ci, c))
        cell_vertices.append(tuple(corners))

    neighbors: list[set[int]] = [set() for _ in vertices]
    for corners in cell_vertices:
        for a in range(n0):
            for b in range(a + 1, n0):
                neighbors[corners[a]].add(corners[b])
                neighbors[corners[b]].add(corners[a])
    return LevelGraph(
        fractal=frac,
        level=m,
        vertices=tuple(vertices),
        index=index,
        cells=cells,
        cell_vertices=tuple(cell_vertices),
        vertex_cells=tuple(tuple(vc) for vc in vertex_cells),
        adjacency=tuple(tuple(sorted(s)) for s in neighbors),
        conductance=frac.r ** (-m),
    )


def m_distance(graph: LevelGraph, x: VertexAddress, y: VertexAddress) -> int:
    """Minimal number of level-m edges connecting x to y."""
    ix, iy = graph.index[x], graph.index[y]
    if ix == iy:
        return 0
    dist = {ix: 0}
    queue = deque([ix])
    while queue:
        i = queue.popleft()
        for j in graph.adjacency[i]:
            if j not in dist:
                dist[j] = dist[i] + 1
                if j == iy:
                    return dist[j]
                queue.append(j)
    raise DomainError("graph is not connected")  # pragma: no cover


@lru_cache(maxsize=None)
def boundary_distances(graph: LevelGraph) -> tuple[int, ...]:
    """Distance of every vertex to V0 (multi-source BFS)."""
    dist = [-1] * len(graph.vertices)
    queue = deque()
    for i in graph.boundary_indices:
        dist[i] = 0
        queue.append(i)
    while queue:
        i = queue.popleft()
        for j in graph.adjacency[i]:
            if dist[j] < 0:
                dist[j] = dist[i] + 1
                queue.append(j)
    return tuple(dist)


def laplacian_domain(graph: LevelGraph, n: int) -> tuple[int, ...]:
    """Vertex indices of V_m^n, the domain of the n-fold renormalized Laplacian."""
    if n < 1:
        raise DomainError("n must be >= 1")
    dist = boundary_distances(graph)
    return tuple(i for i, d in enumerate(dist) if d >= n)


@dataclass(frozen=True)
class Neighborhood:
    """U_m^n(x): covered cells, its boundary, and the ball L_m^n(x)."""

    center: int
    m: int
    n: int
    cells: tuple[int, ...]
    boundary: tuple[int, ...]
    ball: tuple[int, ...]
    rings: tuple[tuple[int, ...], ...]


def neighborhood(graph: LevelGraph, x: VertexAddress, n: int = 1) -> Neighborhood:
    """Compute U_m^n(x) for x in V_m^n.

    The boundary follows the refined rule for n >= 2 (vertices of the n-ball
    whose own cell neighborhood is not contained in the covered cell set,
    plus any V0 vertices reached); for n = 1 it is the plain edge-boundary
    {y : y ~ x}, matching the definition of the one-cell neighborhood.
    Nonjunction vertices are treated as inner points throughout.
    """
    if x.is_boundary:
        raise DomainError("neighborhoods are defined for interior vertices")
    ix = graph.index[x]
    if n >= 1 and boundary_distances(graph)[ix] < n:
        raise DomainError(f"{x} is not in V_m^{n} at level {graph.level}")

    rings: list[list[int]] = [[ix]]
    dist = {ix: 0}
    for d in range(1, n + 1):
        ring: list[int] = []
        for i in rings[d - 1]:
            for j in graph.adjacency[i]:
                if j not in dist:
                    dist[j] = d
                    ring.append(j)
        rings.append(sorted(ring))

    covered: set[int] = set()
    for d in range(n):
        for i in rings[d]:
            for ci, _ in graph.vertex_cells[i]:
                covered.add(ci)
    ball = sorted(dist)

    if n == 1:
        boundary = tuple(rings[1])
    else:
        boundary = tuple(
            i for i in ball
            if graph.is_boundary(i)
            or any(ci not in covered for ci, _ in graph.vertex_cells[i]))
    return Neighborhood(
        center=ix, m=graph.level, n=n,
        cells=tuple(sorted(covered)),
        boundary=boundary,
        ball=tuple(ball),
        rings=tuple(tuple(r) for r in rings),
    )


# ---------------------------------------------------------------------------
# Descriptor validation
# ---------------------------------------------------------------------------

def _validate(frac: FractalDescriptor) -> None:
    seen = set()
    for pair in frac.identifications:
        key = tuple(sorted(pair))
        if key in seen:
            raise ConfigurationError(f"duplicate identification {pair}")
        seen.add(key)

    group = symmetry_group(frac)
    classes = _slot_to_class(frac)
    for g in group.elements:
        mp = group.map_perm(g)
        for members in identification_classes(frac).values():
            images = set()
            for l, c in members:
                images.add(classes[(mp[l], group.push(g, l)[c])][0])
            if len(images) != 1:
                raise ConfigurationError(
                    "symmetry group does not preserve the identification classes")

    g1 = level_graph(frac, 1)
    seen_v = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in g1.adjacency[i]:
            if j not in seen_v:
                seen_v.add(j)
                queue.append(j)
    if len(seen_v) != len(g1.vertices):
        raise ConfigurationError("level-1 graph is not connected")
