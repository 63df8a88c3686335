"""Truncated semi-circulant sequence algebra.

An infinite lower-triangular Toeplitz matrix with entries d_{i-j} on and
below the diagonal is identified with its generating sequence (d_0, d_1, ...).
Matrix product is the Cauchy product of sequences, so the algebra is
commutative.  Everything here is truncated to a fixed degree J: entry k of
any product depends only on input entries of index <= k, so truncation is
consistent.

The tau operator rescales entry j by rho**(-j), where rho is the Laplacian
scaling constant of the fractal the sequence belongs to.  A sequence carries
its rho so that mixing contexts is an error rather than a silent bug.

The implicit-relation solver turns a relation such as

    (1 + 6*a) * tau(x) == 1 + 12*a - 6*a**2 - 96*a**3 + 96*a**4

into entries of x degree by degree: at degree j the residual is an affine
function of x_j, so two evaluations determine it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .errors import ConfigurationError, VerificationError

RationalLike = Union[Fraction, int, str]


def _frac(x: RationalLike) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class SemiCirculantSeq:
    """Generating sequence (d_0 ... d_J) of a truncated semi-circulant matrix."""

    entries: tuple[Fraction, ...]
    rho: Fraction

    def __post_init__(self):
        if not self.entries:
            raise ConfigurationError("sequence needs at least the degree-0 entry")
        if self.rho <= 0:
            raise ConfigurationError("rho must be positive")

    @property
    def degree(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, j: int) -> Fraction:
        return self.entries[j]

    def __len__(self) -> int:
        return len(self.entries)

    def _check_context(self, other: "SemiCirculantSeq") -> None:
        if self.degree != other.degree:
            raise ConfigurationError(
                f"truncation degrees differ: {self.degree} vs {other.degree}")
        if self.rho != other.rho:
            raise ConfigurationError(f"scaling contexts differ: {self.rho} vs {other.rho}")

    def __add__(self, other: "SemiCirculantSeq") -> "SemiCirculantSeq":
        self._check_context(other)
        return SemiCirculantSeq(
            tuple(a + b for a, b in zip(self.entries, other.entries)), self.rho)

    def __sub__(self, other: "SemiCirculantSeq") -> "SemiCirculantSeq":
        self._check_context(other)
        return SemiCirculantSeq(
            tuple(a - b for a, b in zip(self.entries, other.entries)), self.rho)

    def __neg__(self) -> "SemiCirculantSeq":
        return SemiCirculantSeq(tuple(-a for a in self.entries), self.rho)

    def scale(self, c: RationalLike) -> "SemiCirculantSeq":
        c = _frac(c)
        return SemiCirculantSeq(tuple(c * a for a in self.entries), self.rho)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.entries)

    def truncate(self, j: int) -> "SemiCirculantSeq":
        return SemiCirculantSeq(self.entries[: j + 1], self.rho)

    def with_rho(self, rho: RationalLike) -> "SemiCirculantSeq":
        return SemiCirculantSeq(self.entries, _frac(rho))


def seq_from(entries: Iterable[RationalLike], rho: RationalLike) -> SemiCirculantSeq:
    return SemiCirculantSeq(tuple(_frac(e) for e in entries), _frac(rho))


def seq_identity(degree: int, rho: RationalLike) -> SemiCirculantSeq:
    return SemiCirculantSeq((Fraction(1),) + (Fraction(0),) * degree, _frac(rho))


def seq_const(c: RationalLike, degree: int, rho: RationalLike) -> SemiCirculantSeq:
    return seq_identity(degree, rho).scale(c)


def seq_mul(a: SemiCirculantSeq, b: SemiCirculantSeq) -> SemiCirculantSeq:
    """Truncated Cauchy product: entry k is sum_{i<=k} a_i * b_{k-i}."""
    a._check_context(b)
    ae, be = a.entries, b.entries
    out = []
    for k in range(len(ae)):
        acc = Fraction(0)
        for i in range(k + 1):
            if ae[i] and be[k - i]:
                acc += ae[i] * be[k - i]
        out.append(acc)
    return SemiCirculantSeq(tuple(out), a.rho)


def seq_pow(a: SemiCirculantSeq, k: int) -> SemiCirculantSeq:
    if k < 0:
        raise ConfigurationError("negative powers are not part of the algebra")
    result = seq_identity(a.degree, a.rho)
    for _ in range(k):
        result = seq_mul(result, a)
    return result


def seq_tau(a: SemiCirculantSeq) -> SemiCirculantSeq:
    """Entry j of the result is rho**(-j) * a_j."""
    inv = 1 / a.rho
    out = []
    p = Fraction(1)
    for e in a.entries:
        out.append(p * e)
        p *= inv
    return SemiCirculantSeq(tuple(out), a.rho)


# ---------------------------------------------------------------------------
# Relation expressions and the degree-by-degree solver
# ---------------------------------------------------------------------------

class Expr:
    """Node of a relation expression; combined with +, -, * and **."""

    def __add__(self, other):
        return Add((self, _as_expr(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return Add((self, Scale(Fraction(-1), _as_expr(other))))

    def __rsub__(self, other):
        return Add((_as_expr(other), Scale(Fraction(-1), self)))

    def __mul__(self, other):
        other = _as_expr(other)
        if isinstance(other, Const):
            return Scale(other.value, self)
        return Mul((self, other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k: int):
        return Pow(self, k)

    def __neg__(self):
        return Scale(Fraction(-1), self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True)
class Known(Expr):
    name: str


@dataclass(frozen=True)
class Unknown(Expr):
    pass


@dataclass(frozen=True)
class TauUnknown(Expr):
    pass


@dataclass(frozen=True)
class Scale(Expr):
    value: Fraction
    node: Expr


@dataclass(frozen=True)
class Add(Expr):
    nodes: tuple[Expr, ...]


@dataclass(frozen=True)
class Mul(Expr):
    nodes: tuple[Expr, ...]


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction, str)):
        return Const(_frac(x))
    raise TypeError(f"cannot use {x!r} in a relation expression")


X = Unknown()
TAU_X = TauUnknown()


def const(c: RationalLike) -> Expr:
    return Const(_frac(c))


def known(name: str) -> Expr:
    return Known(name)


@dataclass(frozen=True)
class RelationSpec:
    """Relation lhs == rhs defining one sequence implicitly."""

    lhs: Expr
    rhs: Expr
    unknown_name: str = "x"

    def residual(self, env: dict[str, SemiCirculantSeq],
                 x: SemiCirculantSeq) -> SemiCirculantSeq:
        taux = seq_tau(x)
        return _eval(self.lhs, env, x, taux) - _eval(self.rhs, env, x, taux)


def _eval(node: Expr, env, x, taux) -> SemiCirculantSeq:
    if isinstance(node, Const):
        return seq_const(node.value, x.degree, x.rho)
    if isinstance(node, Known):
        seq = env[node.name]
        if seq.degree < x.degree:
            raise ConfigurationError(f"known sequence {node.name!r} too short")
        return seq.truncate(x.degree)
    if isinstance(node, Unknown):
        return x
    if isinstance(node, TauUnknown):
        return taux
    if isinstance(node, Scale):
        return _eval(node.node, env, x, taux).scale(node.value)
    if isinstance(node, Add):
        acc = _eval(node.nodes[0], env, x, taux)
        for sub in node.nodes[1:]:
            acc = acc + _eval(sub, env, x, taux)
        return acc
    if isinstance(node, Mul):
        acc = _eval(node.nodes[0], env, x, taux)
        for sub in node.nodes[1:]:
            acc = seq_mul(acc, _eval(sub, env, x, taux))
        return acc
    if isinstance(node, Pow):
        return seq_pow(_eval(node.base, env, x, taux), node.exponent)
    raise TypeError(f"unknown expression node {node!r}")


def solve_implicit_relation(relation: RelationSpec,
                            seed: Iterable[RationalLike],
                            degree: int,
                            rho: RationalLike,
                            env: dict[str, SemiCirculantSeq] | None = None,
                            ) -> SemiCirculantSeq:
    """Solve the relation for x_0..x_degree with x_0..x_{len(seed)-1} = seed.

    At each degree j the residual entry j is affine in x_j, so it is read off
    from two trial evaluations.  A zero pivot means the relation does not
    determine x_j ("relation not uniquely solvable at degree j").  Seed
    degrees are verified: the relation must already hold there.
    """
    env = env or {}
    rho = _frac(rho)
    entries = [_frac(s) for s in seed]
    if not entries:
        raise ConfigurationError("seed must fix at least the degree-0 entry")
    if len(entries) > degree + 1:
        entries = entries[: degree + 1]

    for j in range(degree + 1):
        if j < len(entries):
            x = SemiCirculantSeq(tuple(entries[: j + 1]), rho)
            res = relation.residual(env, x)[j]
            if res != 0:
                raise VerificationError(
                    f"{relation.unknown_name}: relation violated at seeded degree {j}")
            continue
        x0 = SemiCirculantSeq(tuple(entries) + (Fraction(0),), rho)
        r0 = relation.residual(env, x0)[j]
        x1 = SemiCirculantSeq(tuple(entries) + (Fraction(1),), rho)
        r1 = relation.residual(env, x1)[j]
        pivot = r1 - r0
        if pivot == 0:
            raise VerificationError(
                f"{relation.unknown_name}: relation not uniquely solvable at degree {j}")
        entries.append(-r0 / pivot)

    solution = SemiCirculantSeq(tuple(entries), rho)
    residual = relation.residual(env, solution)
    if not residual.is_zero():
        raise VerificationError(f"{relation.unknown_name}: nonzero residual after solve")
    return solution
