"""Vector fields, control structures, and unimodular auxiliary frames.

A structure is declared in one coordinate chart: a drift field, an
orthonormal spanning frame for the distribution, a potential, and a smooth
positive volume density against Lebesgue measure of the chart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex

__all__ = [
    "GeometryError", "VectorField", "ControlSystem", "AuxFrame",
    "lie_bracket", "bracket_word", "aux_frame_at", "volume_of", "divergence",
    "frame_determinant", "load_structure", "structure_from_dict",
]


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class VectorField:
    """A vector field on the chart: one expression per coordinate."""

    components: tuple
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            if not isinstance(c, ex.Expr):
                raise TypeError("components must be expressions")

    @property
    def dim(self):
        return len(self.components)

    @classmethod
    def from_strings(cls, texts, var_names):
        return cls(tuple(ex.parse(t, var_names) for t in texts))

    @classmethod
    def zero(cls, n):
        return cls((ex.ZERO,) * n)

    @classmethod
    def coordinate(cls, n, i):
        return cls(tuple(ex.ONE if j == i else ex.ZERO for j in range(n)))

    def __call__(self, x):
        fn = self._cache.get("fn")
        if fn is None:
            fn = ex.compile_exprs(self.components)
            self._cache["fn"] = fn
        return np.array(fn(list(x)), dtype=float)

    def simplified(self):
        return VectorField(tuple(ex.simplify(c) for c in self.components))

    def __repr__(self):
        return "VectorField(%s)" % ", ".join(str(c) for c in self.components)


def lie_bracket(v, w, nchart=None):
    """Lie bracket [v, w], differentiating with respect to the first
    `nchart` variables (all of them by default).

    Components may legitimately mention variables beyond the chart (frozen
    parameters); those are treated as constants.
    """
    if v.dim != w.dim:
        raise GeometryError("bracket of fields of different dimension")
    n = v.dim if nchart is None else nchart
    comps = []
    for j in range(v.dim):
        terms = []
        for i in range(n):
            dw = ex.diff(w.components[j], i)
            if not (isinstance(dw, ex.Const) and dw.value == 0.0):
                terms.append(ex.Mul((v.components[i], dw)))
            dv = ex.diff(v.components[j], i)
            if not (isinstance(dv, ex.Const) and dv.value == 0.0):
                terms.append(ex.Neg(ex.Mul((w.components[i], dv))))
        comps.append(ex.simplify(ex.Add(tuple(terms))) if terms else ex.ZERO)
    return VectorField(tuple(comps))


@dataclass(frozen=True)
class ControlSystem:
    """Affine optimal-control structure in one chart.

    dim      chart dimension n
    rank     number of frame fields k (the distribution rank)
    X0       drift field
    frame    orthonormal spanning fields X_1..X_k
    Q        potential (expression over x1..xn)
    density  volume density m(x) > 0 against chart Lebesgue measure
    """

    dim: int
    rank: int
    X0: VectorField
    frame: tuple
    Q: object
    density: object
    name: str = "custom"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "frame", tuple(self.frame))
        if self.rank != len(self.frame):
            raise GeometryError("rank must match the number of frame fields")
        if not (1 <= self.rank <= self.dim):
            raise GeometryError("need 1 <= rank <= dim")
        if self.X0.dim != self.dim or any(f.dim != self.dim for f in self.frame):
            raise GeometryError("field dimensions must equal the chart dimension")

    # compiled helpers, built lazily and cached on the instance

    def _fn(self, key, builder):
        fn = self._cache.get(key)
        if fn is None:
            fn = builder()
            self._cache[key] = fn
        return fn

    def frame_matrix(self, x):
        """Frame field values at x as an (n, k) matrix of columns."""
        fn = self._fn("frame_fn", lambda: ex.compile_exprs(
            [c for f in self.frame for c in f.components]))
        vals = fn(list(x))
        return np.array(vals, dtype=float).reshape(self.rank, self.dim).T

    def drift_at(self, x):
        fn = self._fn("drift_fn", lambda: ex.compile_exprs(self.X0.components))
        return np.array(fn(list(x)), dtype=float)

    def density_at(self, x):
        fn = self._fn("density_fn", lambda: ex.compile_exprs([self.density]))
        value = fn(list(x))[0]
        if not value > 0.0:
            raise GeometryError("density is not positive at %s" % (list(x),))
        return value


def bracket_word(sys, word):
    """Iterated bracket addressed by a nested word.

    A word is an int (0-based frame index, or -1 for the drift) or a pair
    (left, right) meaning the bracket of the two subwords.  Results are
    simplified and cached on the system per word.
    """
    cached = sys._cache.get(("word", word))
    if cached is not None:
        return cached
    if isinstance(word, int):
        out = sys.X0 if word == -1 else sys.frame[word]
    else:
        left, right = word
        out = lie_bracket(bracket_word(sys, left), bracket_word(sys, right))
    sys._cache[("word", word)] = out
    return out


@dataclass(frozen=True)
class AuxFrame:
    """Unimodular auxiliary basis at a point: frame columns, then constant
    coordinate completions, with the last column rescaled so that
    density * det = 1 exactly."""

    matrix: np.ndarray
    complement: tuple
    scale: float
    point: np.ndarray

    def check(self, sys, tol=1e-10):
        value = sys.density_at(self.point) * np.linalg.det(self.matrix)
        if abs(abs(value) - 1.0) > tol:
            raise GeometryError("auxiliary frame is not unimodular: %r" % value)
        return value


def _greedy_complement(F, n, k):
    # Pick n-k coordinate directions maximizing the completed determinant,
    # one at a time: always the axis with the largest residual against the
    # span built so far.  Deterministic (ties break to the smallest index).
    q, _ = np.linalg.qr(F)
    span = [q[:, i] for i in range(k)]
    chosen = []
    for _ in range(n - k):
        best, best_norm = None, -1.0
        for i in range(n):
            if i in chosen:
                continue
            v = np.zeros(n)
            v[i] = 1.0
            for b in span:
                v = v - np.dot(b, v) * b
            norm = float(np.linalg.norm(v))
            if norm > best_norm + 1e-15:
                best, best_norm, best_vec = i, norm, v
        if best is None or best_norm < 1e-12:
            raise GeometryError("cannot complete the frame to a basis")
        chosen.append(best)
        span.append(best_vec / best_norm)
    return tuple(sorted(chosen))


def aux_frame_at(sys, x, complement=None):
    """Auxiliary basis at x: Y_1..Y_k are the frame values, Y_{k+1}..Y_n
    the chosen constant coordinate directions, and the last column is
    rescaled so that density(x) * det(Y) = 1.

    `complement` fixes the coordinate indices (reuse the base-point choice
    along a geodesic); by default a greedy max-|det| choice is made.
    Raises GeometryError when the requested completion is degenerate, which
    is the signal to re-pivot.
    """
    x = np.asarray(x, dtype=float)
    n, k = sys.dim, sys.rank
    F = sys.frame_matrix(x)
    if complement is None:
        complement = () if k == n else _greedy_complement(F, n, k)
    complement = tuple(complement)
    if len(complement) != n - k:
        raise GeometryError("complement must list %d coordinate indices" % (n - k))
    Y = np.zeros((n, n))
    Y[:, :k] = F
    for c, idx in enumerate(complement):
        Y[idx, k + c] = 1.0
    det0 = float(np.linalg.det(Y))
    col_scale = np.prod(np.linalg.norm(Y, axis=0))
    if abs(det0) < 1e-12 * max(col_scale, 1e-300):
        raise GeometryError(
            "degenerate completion %r at %s; choose a different complement"
            % (complement, x.tolist()))
    m = sys.density_at(x)
    zeta = 1.0 / (m * det0)
    Y[:, -1] = Y[:, -1] * zeta
    return AuxFrame(matrix=Y, complement=complement, scale=zeta, point=x)


def volume_of(sys, x, vectors):
    """Volume of the parallelotope spanned by n vectors at x, measured by
    the declared density: m(x) * |det|."""
    V = np.column_stack([np.asarray(v, dtype=float) for v in vectors])
    if V.shape != (sys.dim, sys.dim):
        raise GeometryError("need exactly n vectors of dimension n")
    return sys.density_at(x) * abs(float(np.linalg.det(V)))


def divergence(f, density=None, nchart=None):
    """Divergence of a vector field, optionally against a density:
    sum_i d_i f^i + (sum_i f^i d_i m)/m.

    The density's sign cancels in the logarithmic derivative, so an
    orientation-dependent determinant may be passed directly.
    """
    n = f.dim if nchart is None else nchart
    terms = [ex.diff(f.components[i], i) for i in range(n)]
    if density is not None:
        grad = [ex.diff(density, i) for i in range(n)]
        terms.extend(ex.Div(ex.Mul((f.components[i], grad[i])), density)
                     for i in range(n))
    return ex.simplify(ex.Add(tuple(terms)))


def frame_determinant(sys):
    """Symbolic determinant of the square frame matrix (rank == dim only);
    cofactor expansion is fine at these sizes."""
    if sys.rank != sys.dim:
        raise GeometryError("frame determinant needs rank == dim")
    rows = [[f.components[i] for f in sys.frame] for i in range(sys.dim)]

    def det(rs):
        if len(rs) == 1:
            return rs[0][0]
        total = []
        for j in range(len(rs)):
            minor = [r[:j] + r[j + 1:] for r in rs[1:]]
            term = ex.Mul((rs[0][j], det(minor)))
            total.append(term if j % 2 == 0 else ex.Neg(term))
        return ex.Add(tuple(total))

    return ex.simplify(det(rows))


# ----------------------------------------------------------------------
# Structure files


def structure_from_dict(data):
    """Build a ControlSystem from the JSON structure-file layout:
    {"dim", "rank", "X0", "frame", "Q", "density", "name"}."""
    try:
        n = int(data["dim"])
        k = int(data["rank"])
        names = ex.variables(n)
        X0 = VectorField.from_strings(data["X0"], names)
        frame = tuple(VectorField.from_strings(comps, names)
                      for comps in data["frame"])
        Q = ex.parse(data["Q"], names)
        density = ex.parse(data["density"], names)
    except KeyError as missing:
        raise GeometryError("structure file is missing %s" % missing) from None
    return ControlSystem(dim=n, rank=k, X0=X0, frame=frame, Q=Q,
                         density=density, name=str(data.get("name", "custom")))


def load_structure(path):
    with open(path) as handle:
        data = json.load(handle)
    return structure_from_dict(data)
