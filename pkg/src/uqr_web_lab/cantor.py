"""Defining sequences for Cantor sets in R^3: Antoine necklaces and tame balls.

A solid torus is the closed ``minor``-neighbourhood of its core circle, so
two tori are disjoint exactly when their core circles are farther apart than
the sum of the minor radii, and a torus lies inside another when its core
stays within ``minor_parent - minor_child`` of the parent core.  Distances
between circles are measured from samples of one circle with the exact
point-to-circle distance to the other; the sampling error is bounded by the
arc between samples, which every margin subtracts.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import (
    GeometryError,
    IllConditionedError,
    NeedDeeperStageError,
    PieceCountError,
    PreconditionError,
    RefineGridError,
)
from .geom import ClosedCurve

ALPHABET = string.digits + string.ascii_lowercase
MAX_PIECES = 1_000_000
CIRCLE_SAMPLES = 256
LINK_QUADRATURE = 96


# --- primitives -------------------------------------------------------------


@dataclass(frozen=True)
class Similarity:
    """``x -> scale * rotation @ x + translation``."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not 0 < self.scale <= 1:
            raise PreconditionError("similarity scale must lie in (0, 1]")
        if np.abs(Q.T @ Q - np.eye(3)).max() > 1e-10:
            raise PreconditionError("rotation must be orthonormal")
        object.__setattr__(self, "rotation", Q)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Similarity":
        return cls(1.0, np.eye(3), np.zeros(3))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.scale * (np.asarray(x, dtype=float) @ self.rotation.T) + self.translation

    def compose(self, inner: "Similarity") -> "Similarity":
        """``self o inner``."""
        return Similarity(
            self.scale * inner.scale,
            self.rotation @ inner.rotation,
            self.scale * self.rotation @ inner.translation + self.translation,
        )


@dataclass(frozen=True)
class TorusFrame:
    """Solid torus; ``frame`` columns are (e1, e2, axis) with the core in span(e1, e2)."""

    center: np.ndarray
    frame: np.ndarray
    major: float
    minor: float
    twist: float = 0.0

    def __post_init__(self):
        F = np.asarray(self.frame, dtype=float).reshape(3, 3)
        if np.abs(F.T @ F - np.eye(3)).max() > 1e-10:
            raise PreconditionError("torus frame must be orthonormal")
        if not 0 < self.minor < self.major:
            raise PreconditionError("need 0 < minor < major")
        object.__setattr__(self, "frame", F)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))

    @classmethod
    def standard(cls, major: float = 2.0, minor: float = 0.54) -> "TorusFrame":
        return cls(np.zeros(3), np.eye(3), major, minor)

    @property
    def axis(self) -> np.ndarray:
        return self.frame[:, 2]

    @property
    def extent(self) -> float:
        return self.major + self.minor

    @property
    def diameter(self) -> float:
        return 2.0 * (self.major + self.minor)

    def core(self, count: int = CIRCLE_SAMPLES) -> np.ndarray:
        t = 2.0 * np.pi * np.arange(count) / count
        return self.center + self.major * (np.outer(np.cos(t), self.frame[:, 0]) + np.outer(np.sin(t), self.frame[:, 1]))

    def tube_coordinate(self, pts: np.ndarray) -> np.ndarray:
        """Distance from each point to the core circle."""
        v = np.asarray(pts, dtype=float) - self.center
        h = v @ self.axis
        rad = np.linalg.norm(v - np.outer(h, self.axis), axis=1)
        return np.sqrt(h * h + (rad - self.major) ** 2)

    def image(self, S: Similarity) -> "TorusFrame":
        return TorusFrame(S(self.center), S.rotation @ self.frame, S.scale * self.major, S.scale * self.minor, self.twist)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    inner_radius: float = 0.0  # positive for a hollow shell

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        if not self.radius > 0 or not 0 <= self.inner_radius < self.radius:
            raise PreconditionError("need radius > inner_radius >= 0")

    @property
    def extent(self) -> float:
        return self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def image(self, S: Similarity) -> "Ball":
        return Ball(S(self.center), S.scale * self.radius, S.scale * self.inner_radius)


@dataclass(frozen=True)
class Piece:
    shape: object  # TorusFrame or Ball
    parent: int
    word: str
    map: Similarity | None = None

    @property
    def genus(self) -> int:
        return 1 if isinstance(self.shape, TorusFrame) else 0

    @property
    def diameter(self) -> float:
        return self.shape.diameter


@dataclass
class DefiningSequenceStage:
    depth: int
    pieces: list
    base: object | None = None
    ifs: tuple = ()
    parent_stage: "DefiningSequenceStage | None" = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def genus_per_piece(self) -> int:
        return genus_of_stage(self)

    @property
    def max_diameter(self) -> float:
        return max((p.diameter for p in self.pieces), default=0.0)


@dataclass(frozen=True)
class LinkingReport:
    pair: tuple
    gauss_value: float
    rounded: int
    residual: float
    method: str = "gauss"


# --- circle distances ----------------------------------------------------------


def _arc_bound(t: TorusFrame, n: int) -> float:
    """Max distance from a point of the circle to the nearest of ``n`` samples."""
    return t.major * math.pi / n


def core_distance(a: TorusFrame, b: TorusFrame, n: int = CIRCLE_SAMPLES) -> tuple[float, float]:
    """Sampled distance between core circles and its error bound."""
    d = float(b.tube_coordinate(a.core(n)).min())
    return d, _arc_bound(a, n)


def _core_distances(A: list, B: list, n: int) -> np.ndarray:
    """Batched sampled core-circle distances for torus pairs."""
    out = np.empty(len(A))
    t = 2.0 * np.pi * np.arange(n) / n
    cs, sn = np.cos(t), np.sin(t)
    for s in range(0, len(A), 4096):
        a, b = A[s:s + 4096], B[s:s + 4096]
        ca = np.array([x.center for x in a])
        Fa = np.array([x.frame for x in a])
        Ra = np.array([x.major for x in a])
        pts = ca[:, None, :] + Ra[:, None, None] * (cs[None, :, None] * Fa[:, None, :, 0] + sn[None, :, None] * Fa[:, None, :, 1])
        cb = np.array([x.center for x in b])
        ax = np.array([x.axis for x in b])
        Rb = np.array([x.major for x in b])
        v = pts - cb[:, None, :]
        h = np.einsum("pij,pj->pi", v, ax)
        rad = np.linalg.norm(v - h[:, :, None] * ax[:, None, :], axis=2)
        out[s:s + 4096] = np.sqrt(h * h + (rad - Rb[:, None]) ** 2).min(axis=1)
    return out


def _pair_gap(a, b, n: int = CIRCLE_SAMPLES) -> float:
    """Conservative lower bound for the distance between two pieces."""
    if isinstance(a, Ball) and isinstance(b, Ball):
        return float(np.linalg.norm(a.center - b.center)) - a.radius - b.radius
    if isinstance(a, TorusFrame) and isinstance(b, TorusFrame):
        d, err = core_distance(a, b, n)
        return d - err - a.minor - b.minor
    t, ball = (a, b) if isinstance(a, TorusFrame) else (b, a)
    d = float(t.tube_coordinate(ball.center[None, :])[0])
    return d - t.minor - ball.radius


def _containment_margin(child, parent, n: int = CIRCLE_SAMPLES) -> float:
    """Conservative ``inner-room`` of ``child`` inside ``parent`` (positive when inside)."""
    if isinstance(parent, Ball):
        if isinstance(child, Ball):
            return parent.radius - (float(np.linalg.norm(child.center - parent.center)) + child.radius)
        far = float(np.linalg.norm(child.core(n) - parent.center, axis=1).max())
        return parent.radius - (far + _arc_bound(child, n) + child.minor)
    if isinstance(child, Ball):
        return parent.minor - (float(parent.tube_coordinate(child.center[None, :])[0]) + child.radius)
    far = float(parent.tube_coordinate(child.core(n)).max())
    return parent.minor - (far + _arc_bound(child, n) + child.minor)


# --- the necklace ------------------------------------------------------------------


def _twist_step(m: int) -> float:
    """Twist increment; ``m`` steps add a multiple of pi so the chain closes."""
    return math.pi * (m // 2) / m


def build_necklace(m: int, parent: TorusFrame, sub_major: float, sub_minor: float,
                   samples: int = CIRCLE_SAMPLES) -> list[Similarity]:
    """``m`` similarities placing scaled copies of ``parent`` in a Hopf chain.

    Child ``i`` sits at angle ``2 pi i / m`` on the parent core; its core lies
    in the plane spanned by the core tangent and the direction
    ``cos(tau_i) radial + sin(tau_i) axis`` with ``tau_i = i * pi (m // 2) / m``,
    so consecutive cores are perpendicular for even ``m``.
    """
    if m < 4:
        raise PreconditionError("a closed chain needs at least 4 links")
    if m > len(ALPHABET):
        raise PreconditionError(f"words use base-{len(ALPHABET)} letters; m must be at most {len(ALPHABET)}")
    if not (0 < sub_minor < sub_major):
        raise PreconditionError("need 0 < sub_minor < sub_major")
    if sub_major >= parent.major:
        raise GeometryError("sub-torus must be smaller than the parent", margin="scale",
                            value=parent.major - sub_major)
    s = sub_major / parent.major
    F = parent.frame
    e1, e2, ax = F[:, 0], F[:, 1], F[:, 2]
    delta = _twist_step(m)
    maps, children = [], []
    for i in range(m):
        th = 2.0 * math.pi * i / m
        radial = math.cos(th) * e1 + math.sin(th) * e2
        tangent = -math.sin(th) * e1 + math.cos(th) * e2
        tau = i * delta
        n_in = math.cos(tau) * radial + math.sin(tau) * ax
        Fi = np.column_stack([tangent, n_in, np.cross(tangent, n_in)])
        ci = parent.center + parent.major * radial
        Q = Fi @ F.T
        S = Similarity(s, Q, ci - s * Q @ parent.center)
        maps.append(S)
        children.append(TorusFrame(ci, Fi, s * parent.major, s * parent.minor, parent.twist + tau))
    margins = {
        "containment": min(_containment_margin(c, parent, samples) for c in children),
        "adjacent_clearance": min(_pair_gap(children[i], children[(i + 1) % m], samples) for i in range(m)),
        "next_adjacent_gap": min(_pair_gap(children[i], children[(i + 2) % m], samples) for i in range(m)),
    }
    for name, val in margins.items():
        if not val > 0:
            raise GeometryError(f"necklace infeasible: {name} margin {val:.6g} is not positive",
                                margin=name, value=val)
    if abs(sub_minor / sub_major - parent.minor / parent.major) > 1e-9:
        raise GeometryError("sub-torus is not similar to the parent (minor/major ratios differ)",
                            margin="similarity", value=sub_minor / sub_major - parent.minor / parent.major)
    return maps


def initial_stage(base) -> DefiningSequenceStage:
    return DefiningSequenceStage(0, [Piece(base, -1, "", Similarity.identity())], base=base)


def iterate_stage(stage: DefiningSequenceStage, ifs: list[Similarity]) -> DefiningSequenceStage:
    """Next stage: every piece word extended by each map of ``ifs``."""
    if stage.base is None:
        raise PreconditionError("stage has no base shape to map")
    if len(ifs) > len(ALPHABET):
        raise PreconditionError(f"word alphabet holds at most {len(ALPHABET)} maps")
    count = len(stage.pieces) * len(ifs)
    if count > MAX_PIECES:
        raise PieceCountError(f"{count} pieces exceed the limit of {MAX_PIECES}")
    pieces = []
    for k, p in enumerate(stage.pieces):
        for i, S in enumerate(ifs):
            W = p.map.compose(S)
            pieces.append(Piece(stage.base.image(W), k, p.word + ALPHABET[i], W))
    return DefiningSequenceStage(stage.depth + 1, pieces, stage.base, tuple(ifs), stage)


def necklace_stages(depth: int, m: int = 24, major: float = 2.0, minor: float = 0.54,
                    sub_major: float = 0.392) -> list[DefiningSequenceStage]:
    """Stages ``0..depth`` of the Antoine necklace with the given geometry."""
    base = TorusFrame.standard(major, minor)
    ifs = build_necklace(m, base, sub_major, sub_major * minor / major)
    stages = [initial_stage(base)]
    for _ in range(depth):
        stages.append(iterate_stage(stages[-1], ifs))
    return stages


# --- linking -------------------------------------------------------------------------


def _resample(v: np.ndarray, n: int) -> np.ndarray:
    seg = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    closed = np.vstack([v, v[:1]])
    t = np.linspace(0.0, s[-1], n, endpoint=False)
    return np.column_stack([np.interp(t, s, closed[:, k]) for k in range(3)])


def _segment_distances(p0, p1, q0, q1) -> np.ndarray:
    """Distances between segment pairs ``[p0, p1]`` and ``[q0, q1]`` (row-wise)."""
    d1, d2, r = p1 - p0, q1 - q0, p0 - q0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 1e-300, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t = np.where(e > 0, (b * s + f) / e, 0.0)
        s = np.where(t < 0, np.clip(-c / a, 0.0, 1.0), np.where(t > 1, np.clip((b - c) / a, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p0 + d1 * s[:, None] - (q0 + d2 * t[:, None]), axis=1)


def polyline_gap(va: np.ndarray, vb: np.ndarray) -> float:
    """Exact distance between two closed polylines in R^3."""
    a1, b1 = np.roll(va, -1, axis=0), np.roll(vb, -1, axis=0)
    ma, mb = 0.5 * (va + a1), 0.5 * (vb + b1)
    ha = 0.5 * float(np.linalg.norm(a1 - va, axis=1).max())
    hb = 0.5 * float(np.linalg.norm(b1 - vb, axis=1).max())
    upper = float(cKDTree(vb).query(va)[0].min())
    pairs = cKDTree(ma).query_ball_tree(cKDTree(mb), upper + ha + hb)
    i = np.repeat(np.arange(len(va)), [len(p) for p in pairs])
    j = np.fromiter((k for p in pairs for k in p), dtype=np.int64, count=len(i))
    if len(i) == 0:
        return upper
    return min(upper, float(_segment_distances(va[i], a1[i], vb[j], b1[j]).min()))


def linking_number(a: ClosedCurve, b: ClosedCurve, quadrature: int | None = None,
                   pair: tuple = (0, 1)) -> LinkingReport:
    """Gauss linking integral by double midpoint sums."""
    va = np.asarray(a.vertices if isinstance(a, ClosedCurve) else a, dtype=float)
    vb = np.asarray(b.vertices if isinstance(b, ClosedCurve) else b, dtype=float)
    if va.ndim != 2 or va.shape[1] != 3 or vb.ndim != 2 or vb.shape[1] != 3:
        raise PreconditionError("linking needs curves in R^3")
    if quadrature is not None:
        va, vb = _resample(va, quadrature), _resample(vb, quadrature)
    gap = polyline_gap(va, vb)
    if gap < 1e-6:
        raise IllConditionedError(f"curves nearly touch (gap {gap:.3g})")
    val = float(kernels.gauss_linking(va, vb))
    r = int(round(val))
    return LinkingReport(tuple(pair), val, r, abs(val - r))


def _circle_link(a: TorusFrame, b: TorusFrame, pair: tuple, exhaustive: bool, n: int) -> LinkingReport:
    if not exhaustive and float(np.linalg.norm(a.center - b.center)) > a.major + b.major:
        return LinkingReport(pair, 0.0, 0, 0.0, "separated")
    val = float(kernels.gauss_linking(a.core(n), b.core(n)))
    r = int(round(val))
    return LinkingReport(pair, val, r, abs(val - r))


# --- verification --------------------------------------------------------------------


@dataclass
class StageReport:
    depth: int
    pieces: int
    disjoint: bool
    min_gap: float
    overlaps: list
    contained: bool
    min_containment: float
    escapes: list
    linking_ok: bool
    max_link_residual: float
    links: list
    bad_links: list
    diameter_ok: bool
    max_diameter: float
    diameter_bound: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.disjoint and self.contained and self.linking_ok and self.diameter_ok


def _candidate_pairs(shapes: list) -> list:
    """Pairs whose bounding spheres meet, plus each piece's nearest neighbour."""
    if len(shapes) < 2:
        return []
    centers = np.array([s.center for s in shapes])
    ext = np.array([s.extent for s in shapes])
    tree = cKDTree(centers)
    pairs = tree.query_pairs(2.0 * float(ext.max()) * (1 + 1e-9), output_type="ndarray")
    keep = np.linalg.norm(centers[pairs[:, 0]] - centers[pairs[:, 1]], axis=1) <= ext[pairs[:, 0]] + ext[pairs[:, 1]]
    out = {tuple(p) for p in pairs[keep].tolist()}
    _, nn = tree.query(centers, k=2)
    out.update((min(i, int(j)), max(i, int(j))) for i, j in enumerate(nn[:, 1]))
    return sorted(out)


def verify_stage(stage: DefiningSequenceStage, samples: int = CIRCLE_SAMPLES, exhaustive_links: bool = False,
                 quadrature: int = LINK_QUADRATURE, link_tol: float = 0.05) -> StageReport:
    """Disjointness, containment in parents, sibling linking and diameter decay."""
    shapes = [p.shape for p in stage.pieces]
    pairs = _candidate_pairs(shapes)
    tori = [(i, j) for i, j in pairs if isinstance(shapes[i], TorusFrame) and isinstance(shapes[j], TorusFrame)]
    gaps = {}
    if tori:
        d = _core_distances([shapes[i] for i, _ in tori], [shapes[j] for _, j in tori], samples)
        for (i, j), dij in zip(tori, d):
            a, b = shapes[i], shapes[j]
            gaps[(i, j)] = float(dij) - _arc_bound(a, samples) - a.minor - b.minor
    for i, j in pairs:
        if (i, j) not in gaps:
            gaps[(i, j)] = _pair_gap(shapes[i], shapes[j], samples)
    overlaps = sorted(p for p, g in gaps.items() if not g > 0)
    min_gap = min(gaps.values(), default=math.inf)

    parent_shapes = [p.shape for p in stage.parent_stage.pieces] if stage.parent_stage is not None else None
    cont = []
    if parent_shapes is not None:
        cont = [_containment_margin(p.shape, parent_shapes[p.parent], samples) for p in stage.pieces]
    escapes = [k for k, v in enumerate(cont) if not v > 0]

    links, bad = [], []
    groups: dict[int, list[int]] = {}
    for k, p in enumerate(stage.pieces):
        groups.setdefault(p.parent, []).append(k)
    for members in groups.values():
        if not all(isinstance(shapes[k], TorusFrame) for k in members) or len(members) < 2:
            continue
        m = len(members)
        for x in range(m):
            for y in range(x + 1, m):
                i, j = members[x], members[y]
                rep = _circle_link(shapes[i], shapes[j], (i, j), exhaustive_links, quadrature)
                adjacent = (y - x) in (1, m - 1)
                links.append(rep)
                expected_ok = abs(rep.rounded) == 1 if adjacent else rep.rounded == 0
                if not expected_ok or rep.residual >= link_tol:
                    bad.append(rep)

    bound = math.inf
    if stage.base is not None and stage.ifs:
        s = max(S.scale for S in stage.ifs)
        bound = s**stage.depth * stage.base.diameter * (1 + 1e-12)
    elif stage.base is not None:
        bound = stage.base.diameter * (1 + 1e-12)
    max_d = stage.max_diameter
    return StageReport(
        depth=stage.depth, pieces=len(stage.pieces), disjoint=not overlaps, min_gap=min_gap, overlaps=overlaps,
        contained=not escapes, min_containment=min(cont, default=math.inf), escapes=escapes,
        linking_ok=not bad, max_link_residual=max((r.residual for r in links), default=0.0), links=links,
        bad_links=bad, diameter_ok=max_d <= bound, max_diameter=max_d, diameter_bound=bound, samples=samples,
    )


def linking_matrix(stage: DefiningSequenceStage, parent: int = 0, quadrature: int = LINK_QUADRATURE) -> np.ndarray:
    """Rounded Gauss linking numbers among the children of one piece."""
    members = [k for k, p in enumerate(stage.pieces) if p.parent == parent]
    m = len(members)
    L = np.zeros((m, m), dtype=int)
    for x in range(m):
        for y in range(x + 1, m):
            r = _circle_link(stage.pieces[members[x]].shape, stage.pieces[members[y]].shape, (x, y), True, quadrature)
            L[x, y] = L[y, x] = r.rounded
    return L


def genus_of_stage(stage: DefiningSequenceStage) -> int:
    """Largest handle count among the pieces (1 for tori, 0 for balls)."""
    return max((p.genus for p in stage.pieces), default=0)


# --- tame sequence -------------------------------------------------------------------


def tame_sequence(depth: int, r0: float = 0.6) -> list[DefiningSequenceStage]:
    """Balls of radius ``r0 3^-i`` around the ternary Cantor intervals on the x axis."""
    if not 0 <= depth <= 10:
        raise PreconditionError("depth must lie in 0..10")
    base = Ball(np.array([0.5, 0.0, 0.0]), r0)
    ifs = (
        Similarity(1.0 / 3.0, np.eye(3), np.zeros(3)),
        Similarity(1.0 / 3.0, np.eye(3), np.array([2.0 / 3.0, 0.0, 0.0])),
    )
    stages = [initial_stage(base)]
    for _ in range(depth):
        stages.append(iterate_stage(stages[-1], ifs))
    return stages


def attractor_point(ifs: list[Similarity], word: str, base_center, iterations: int = 64) -> np.ndarray:
    """Approximate the attractor point of the periodic word ``word word ...``."""
    idx = [ALPHABET.index(ch) for ch in word]
    x = np.asarray(base_center, dtype=float)
    for _ in range(iterations):
        for i in reversed(idx):
            x = ifs[i](x)
    return x


# --- clopen neighbourhoods --------------------------------------------------------------


def _contains(shape, x: np.ndarray) -> bool:
    if isinstance(shape, Ball):
        return float(np.linalg.norm(x - shape.center)) <= shape.radius
    return float(shape.tube_coordinate(x[None, :])[0]) <= shape.minor


@dataclass
class ClopenNeighborhood:
    piece: Piece
    depth: int
    diameter: float
    boundary_gap: float
    checked_depth: int


def _boundary_gap(U, pieces: list, samples: int) -> float:
    """Least distance from the boundary of ``U`` to any of ``pieces``."""
    gap = math.inf
    for p in pieces:
        s = p.shape
        inside = _contains(U, s.center) if isinstance(s, Ball) else _contains(U, s.core(8)[0])
        if inside:
            gap = min(gap, _containment_margin(s, U, samples))
        else:
            gap = min(gap, _pair_gap(U, s, samples))
    return gap


def clopen_neighborhood(stages: list[DefiningSequenceStage], x, delta: float,
                        samples: int = CIRCLE_SAMPLES) -> ClopenNeighborhood:
    """Shallowest piece containing ``x`` with diameter at most ``delta``.

    Its boundary is checked to stay a positive distance from the pieces two
    stages deeper (or the deepest available stage).
    """
    x = np.asarray(x, dtype=float).reshape(3)
    D = len(stages) - 1
    if D < 1:
        raise NeedDeeperStageError("need at least one stage beyond the base")
    chain = []
    for st in stages[1:]:
        hit = [k for k, p in enumerate(st.pieces) if _contains(p.shape, x)]
        if not hit:
            raise PreconditionError(f"x lies in no piece of stage {st.depth}")
        chain.append(hit[0])
    for d in range(1, D + 1):
        piece = stages[d].pieces[chain[d - 1]]
        if piece.diameter <= delta:
            check = min(d + 2, D)
            deeper = stages[check].pieces
            centers = np.array([p.shape.center for p in deeper])
            near = cKDTree(centers).query_ball_point(piece.shape.center, piece.shape.extent + 2.0 * stages[check].max_diameter)
            gap = _boundary_gap(piece.shape, [deeper[k] for k in near], samples)
            if not gap > 0:
                raise GeometryError("neighbourhood boundary meets the Cantor approximation",
                                    margin="boundary_gap", value=gap)
            return ClopenNeighborhood(piece, d, piece.diameter, gap, check)
    raise NeedDeeperStageError(f"delta {delta} is below the deepest piece diameter "
                               f"{stages[D].pieces[chain[-1]].diameter}")


# --- voxel complement ------------------------------------------------------------------


@dataclass
class VoxelReport:
    connected: bool
    method: str
    resolution: int
    spacing: float
    min_gap_voxels: float
    free_voxels: int
    reached_voxels: int
    windows: int = 0
    cached: int = 0

    def __bool__(self) -> bool:
        return self.connected


def _shape_arrays(shapes: list):
    kinds, centers, frames, p1, p2 = [], [], [], [], []
    for s in shapes:
        if isinstance(s, TorusFrame):
            kinds.append(0)
            frames.append(s.frame)
            p1.append(s.major)
            p2.append(s.minor)
        else:
            kinds.append(2 if s.inner_radius > 0 else 1)
            frames.append(np.eye(3))
            p1.append(s.radius)
            p2.append(s.inner_radius)
        centers.append(s.center)
    return (np.array(kinds, dtype=np.int_), np.array(centers, dtype=float).reshape(-1, 3),
            np.array(frames, dtype=float).reshape(-1, 3, 3), np.array(p1, dtype=float), np.array(p2, dtype=float))


def _voxel_centres(origin, spacing, shape):
    axes = [origin[i] + (np.arange(shape[i]) + 0.5) * spacing for i in range(3)]
    return np.meshgrid(*axes, indexing="ij")


def _min_gap(shapes: list, samples: int) -> float:
    gaps = [_pair_gap(shapes[i], shapes[j], samples) for i, j in _candidate_pairs(shapes)]
    shell = [s.radius - s.inner_radius for s in shapes if isinstance(s, Ball) and s.inner_radius > 0]
    return min(gaps + shell, default=math.inf)


def _direct(shapes: list, resolution: int, samples: int) -> VoxelReport:
    centers = np.array([s.center for s in shapes])
    ext = np.array([s.extent for s in shapes])
    pad = max(s.diameter for s in shapes)
    lo = (centers - ext[:, None]).min(axis=0) - pad
    hi = (centers + ext[:, None]).max(axis=0) + pad
    spacing = float((hi - lo).max()) / resolution
    gap = _min_gap(shapes, samples)
    if gap < 2.0 * spacing:
        raise RefineGridError(f"piece separation {gap:.4g} is below two voxels ({spacing:.4g} each)",
                              suggested=int(math.ceil(2.0 * resolution * spacing / max(gap, 1e-300))))
    shape = (resolution,) * 3
    occ = kernels.voxelize(lo, spacing, shape, *_shape_arrays(shapes))
    free = (occ == 0).astype(np.uint8)
    seeds = np.zeros_like(free)
    seeds[0, 0, 0] = 1
    reached = kernels.flood_fill6(free, seeds)
    nf, nr = int(free.sum()), int(reached.sum())
    return VoxelReport(nf == nr, "direct", resolution, spacing, gap / spacing, nf, nr)


def _window_check(parent: TorusFrame, children: list, i: int, m: int, resolution: int,
                  enlarge: float, samples: int) -> tuple[bool, float, float]:
    """Sector of child ``i`` inside ``parent`` reaches the parent exterior."""
    c = children[i].center
    hw = 1.15 * parent.minor + enlarge
    spacing = 2.0 * hw / resolution
    near = [children[(i + k) % m] for k in (-2, -1, 0, 1, 2)]
    gap = min(_pair_gap(near[a], near[b], samples) for a in range(5) for b in range(a + 1, 5))
    if gap < 2.0 * spacing:
        raise RefineGridError(f"child separation {gap:.4g} is below two voxels ({spacing:.4g} each)",
                              suggested=int(math.ceil(2.0 * resolution * spacing / max(gap, 1e-300))))
    origin = c - hw
    shape = (resolution,) * 3
    occ = kernels.voxelize(origin, spacing, shape, *_shape_arrays(near))
    X, Y, Z = _voxel_centres(origin, spacing, shape)
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    tube = parent.tube_coordinate(pts).reshape(shape)
    free = occ == 0
    seeds = free & (tube > parent.minor)
    reached = kernels.flood_fill6(free.astype(np.uint8), seeds.astype(np.uint8)).astype(bool)
    v = pts - parent.center
    ang = np.arctan2(v @ parent.frame[:, 1], v @ parent.frame[:, 0]).reshape(shape)
    th = 2.0 * math.pi * i / m
    dang = np.abs((ang - th + math.pi) % (2.0 * math.pi) - math.pi)
    cell = free & (tube <= parent.minor) & (dang <= math.pi / m)
    return bool(np.all(reached[cell])), gap / spacing, spacing


_WINDOW_CACHE: dict = {}


def _hierarchical(stage: DefiningSequenceStage, resolution: int, samples: int) -> VoxelReport:
    base = stage.base
    if not isinstance(base, TorusFrame) or not stage.ifs:
        raise PreconditionError("hierarchical check needs a self-similar torus stage")
    root = _direct([base], resolution, samples)
    if stage.depth == 0:
        return root
    m = len(stage.ifs)
    children = [base.image(S) for S in stage.ifs]
    delta = _twist_step(m)
    ok, windows, cached, min_vox, spacing = root.connected, 0, 0, math.inf, root.spacing
    for i in range(m):
        key = (m, round(base.minor / base.major, 12), round(stage.ifs[0].scale, 12), resolution,
               tuple(round(((i + k) * delta) % math.pi, 9) for k in (-2, -1, 0, 1, 2)))
        if key in _WINDOW_CACHE:
            res = _WINDOW_CACHE[key]
            cached += 1
        else:
            res = _window_check(base, children, i, m, resolution, 0.25 * base.minor, samples)
            _WINDOW_CACHE[key] = res
            windows += 1
        ok = ok and res[0]
        min_vox = min(min_vox, res[1])
        spacing = res[2]
    return VoxelReport(ok, "hierarchical", resolution, spacing, min_vox, root.free_voxels, root.reached_voxels,
                       windows, cached)


def voxel_complement_connected(stage: DefiningSequenceStage, resolution: int = 128,
                               method: str = "auto", samples: int = CIRCLE_SAMPLES) -> VoxelReport:
    """Is the complement of the union of pieces 6-connected on a voxel grid?

    ``direct`` voxelizes the whole stage in its padded bounding box and
    floods from a corner.  ``hierarchical`` applies to self-similar stages:
    the complement of the base torus is checked globally, then, in the
    normalized frame, each child's sector of the parent tube must connect
    to the parent exterior around the children.  By self-similarity the
    same windows cover every deeper stage.  ``auto`` tries ``direct`` first.
    """
    if not 32 <= resolution <= 512:
        raise PreconditionError("resolution must lie in 32..512")
    if not stage.pieces:
        raise PreconditionError("empty stage")
    shapes = [p.shape for p in stage.pieces]
    if method == "direct":
        return _direct(shapes, resolution, samples)
    if method == "hierarchical":
        return _hierarchical(stage, resolution, samples)
    if method != "auto":
        raise PreconditionError("method must be auto, direct or hierarchical")
    try:
        return _direct(shapes, resolution, samples)
    except RefineGridError:
        if stage.ifs and isinstance(stage.base, TorusFrame):
            return _hierarchical(stage, resolution, samples)
        raise


# --- mesh export ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeshObject:
    name: str
    vertices: int
    edges: int
    faces: int

    @property
    def euler_characteristic(self) -> int:
        return self.vertices - self.edges + self.faces


def _torus_mesh(t: TorusFrame, nu: int, nv: int):
    u = 2.0 * np.pi * np.arange(nu) / nu
    v = 2.0 * np.pi * np.arange(nv) / nv
    U, V = np.meshgrid(u, v, indexing="ij")
    rad = t.major + t.minor * np.cos(V)
    local = np.stack([rad * np.cos(U), rad * np.sin(U), t.minor * np.sin(V)], axis=-1).reshape(-1, 3)
    pts = t.center + local @ t.frame.T
    faces = []
    for a in range(nu):
        for b in range(nv):
            p = a * nv + b
            q = ((a + 1) % nu) * nv + b
            r = ((a + 1) % nu) * nv + (b + 1) % nv
            s = a * nv + (b + 1) % nv
            faces.append((p, q, r))
            faces.append((p, r, s))
    return pts, np.array(faces)


def _sphere_mesh(c: np.ndarray, radius: float, nu: int, nv: int):
    theta = np.pi * np.arange(1, nv) / nv
    phi = 2.0 * np.pi * np.arange(nu) / nu
    T, P = np.meshgrid(theta, phi, indexing="ij")
    ring = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    pts = c + radius * np.vstack([[0, 0, 1], ring, [0, 0, -1]])
    north, south = 0, len(pts) - 1
    idx = lambda i, j: 1 + i * nu + (j % nu)  # noqa: E731
    faces = [(north, idx(0, j), idx(0, j + 1)) for j in range(nu)]
    for i in range(nv - 2):
        for j in range(nu):
            faces.append((idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)))
            faces.append((idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)))
    faces += [(south, idx(nv - 2, j + 1), idx(nv - 2, j)) for j in range(nu)]
    return pts, np.array(faces)


def _edge_count(faces: np.ndarray) -> int:
    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    return len(np.unique(e, axis=0))


def export_mesh(stage: DefiningSequenceStage, path, nu: int = 48, nv: int = 24) -> list[MeshObject]:
    """ASCII OBJ with one object per piece boundary; returns per-object counts."""
    out = []
    offset = 1
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# defining-sequence stage depth {stage.depth}, {len(stage.pieces)} pieces\n")
        for p in stage.pieces:
            s = p.shape
            if isinstance(s, TorusFrame):
                pts, faces = _torus_mesh(s, nu, nv)
            else:
                pts, faces = _sphere_mesh(s.center, s.radius, nu, nv)
            name = f"piece_{p.word or 'root'}"
            fh.write(f"o {name}\n")
            fh.write("".join(f"v {x:.17g} {y:.17g} {z:.17g}\n" for x, y, z in pts))
            fh.write("".join(f"f {a + offset} {b + offset} {c + offset}\n" for a, b, c in faces))
            offset += len(pts)
            out.append(MeshObject(name, len(pts), _edge_count(faces), len(faces)))
    return out


__all__ = [
    "Similarity",
    "TorusFrame",
    "Ball",
    "Piece",
    "DefiningSequenceStage",
    "LinkingReport",
    "StageReport",
    "VoxelReport",
    "ClopenNeighborhood",
    "MeshObject",
    "build_necklace",
    "initial_stage",
    "iterate_stage",
    "necklace_stages",
    "verify_stage",
    "linking_number",
    "polyline_gap",
    "linking_matrix",
    "genus_of_stage",
    "tame_sequence",
    "attractor_point",
    "clopen_neighborhood",
    "voxel_complement_connected",
    "export_mesh",
    "core_distance",
]
