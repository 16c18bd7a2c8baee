"""Spiders' web certificates for planar linearizers, and fast-escape tests.

The certificate builds, for ``m = 1 .. levels``, a Jordan curve ``dG_m``
around the origin from a small escaping curve ``gamma`` near the repelling
fixed point: ``gamma`` is pulled back by the linearizer to ``Gamma`` near
0 and pushed out by the multiplier, ``dG_m = lam^{p2} Gamma``, with ``p2``
the largest power keeping it inside the ring ``A(r_m, r_m^mu)``.  Each
level then checks

* ball containment: ``|z| <= M^m(R, L)`` lies inside ``dG_m``;
* separation: ``min |L|`` on ``dG_m`` exceeds ``max |z|`` on ``dG_{m+1}``;
* the image ``L(dG_m) = f^{p2}(gamma)`` winds around the origin a non-zero
  number of times, so it surrounds ``dG_{m+1}``.

Since ``L(lam^p u) = f^p(L(u))`` and ``L`` maps ``Gamma`` back onto
``gamma``, all moduli on ``dG_m`` are orbit moduli of ``gamma`` and are
bounded in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .contour import marching_squares
from .errors import (
    EvaluationError,
    OutsideInjectivityError,
    PreconditionError,
    RefineGridError,
    RingTooThinError,
    SeedChainError,
    ThresholdTooSmallError,
)
from .geom import (
    ClosedCurve,
    _unit_directions,
    as_points,
    is_simple,
    max_modulus,
    norms,
    winding_number,
    winding_numbers,
)
from .growth import rm_sequence
from .linearizer import LinearizerModel, derivative, escape_bailout, local_inverse
from .maps import MapSpec, degree

LOG_TOL = 1e-12


# --- fast escape ------------------------------------------------------------


@dataclass
class FastEscapeReport:
    point: object
    R: float
    offset_P: int | None
    log_orbit_norms: list
    log_tower: list
    member_A_R: bool
    member_A: bool
    undecided: bool = False
    horizon: int = 0

    @property
    def orbit_norms(self) -> list:
        return [math.exp(v) if v < 709 else math.inf for v in self.log_orbit_norms]


def map_log_max_modulus(f: MapSpec, log_r: float, samples: int = 1024) -> float:
    """``log M(e^{log_r}, f)``; polynomials switch to the leading term far out."""
    if f.family == "polynomial":
        co = np.asarray(f.coefficients)
        if log_r > math.log(escape_bailout(co)):
            d = len(co) - 1
            ratios = np.abs(co[:-1]) / abs(co[-1])
            eps = float(sum(q * math.exp((k - d) * log_r) for k, q in enumerate(ratios)))
            return d * log_r + math.log(abs(co[-1])) + math.log1p(eps)
    if log_r > 700:
        if f.family in ("loxodromic", "similarity"):
            return log_r + math.log(f.scale)
        raise EvaluationError("radius beyond double range for this family", log_r)
    val = max_modulus(f, math.exp(log_r), samples)
    return math.log(val)


def _log_orbit(f: MapSpec, x, steps: int) -> list:
    """``log|f^m(x)|`` for ``m = 0..steps`` (lower bounds once in log space)."""
    if f.family == "polynomial":
        co = np.asarray(f.coefficients)
        big = escape_bailout(co)
        d = len(co) - 1
        log_ad = math.log(abs(co[-1]))
        ratios = np.abs(co[:-1]) / abs(co[-1])
        w = complex(as_points(x, 2)[0])
        out = [math.log(abs(w)) if w != 0 else -math.inf]
        ell = None
        for _ in range(steps):
            if ell is None:
                w = complex(np.polynomial.polynomial.polyval(w, co))
                a = abs(w)
                out.append(math.log(a) if a > 0 else -math.inf)
                if a > big:
                    ell = math.log(a)
            else:
                eps = float(sum(q * math.exp((k - d) * ell) for k, q in enumerate(ratios)))
                ell = d * ell + log_ad + math.log1p(-min(eps, 1.0))
                out.append(ell)
        return out
    pts = as_points(x, f.dimension)
    out = [math.log(float(norms(pts)[0]))]
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            pts = f(pts)
            a = float(norms(pts)[0])
            out.append(math.log(a) if a > 0 else (math.inf if not math.isfinite(a) else -math.inf))
    return out


def fast_escape_test(f: MapSpec, x, R: float, horizon: int = 20, maxP: int = 0,
                     samples: int = 1024) -> FastEscapeReport:
    """Compare the orbit of ``x`` with the tower ``M^m(R, f)`` in log space.

    ``member_A_R`` asks for ``|f^m(x)| >= M^m(R, f)`` for ``m = 1..horizon``;
    ``member_A`` allows a shift ``|f^{m+P}(x)| >= M^m(R, f)`` with ``P <= maxP``.
    Comparisons use a relative slack of 1e-12 in log units.  If any needed
    value is not representable the report is flagged undecided.
    """
    if horizon < 1 or maxP < 0:
        raise PreconditionError("need horizon >= 1 and maxP >= 0")
    first = map_log_max_modulus(f, math.log(R), samples)
    if not first > math.log(R):
        raise ThresholdTooSmallError(f"M(R, f) does not exceed R = {R}")
    tower = [first]
    undecided = False
    for _ in range(horizon - 1):
        try:
            nxt = map_log_max_modulus(f, tower[-1], samples)
        except EvaluationError:
            undecided = True
            break
        if not math.isfinite(nxt):
            undecided = True
            break
        tower.append(nxt)
    orbit = _log_orbit(f, x, horizon + maxP)

    def dominates(P: int) -> bool | None:
        for m, t in enumerate(tower, start=1):
            o = orbit[m + P]
            if math.isnan(o) or (math.isinf(o) and o > 0):
                return None
            if o < t - LOG_TOL * max(1.0, abs(t)):
                return False
        return None if undecided else True

    verdicts = [dominates(P) for P in range(maxP + 1)]
    if any(v is None for v in verdicts) and not any(v is True for v in verdicts):
        undecided = True
    member_AR = verdicts[0] is True
    P = next((P for P, v in enumerate(verdicts) if v is True), None)
    return FastEscapeReport(
        point=x, R=R, offset_P=P, log_orbit_norms=orbit, log_tower=tower,
        member_A_R=member_AR, member_A=P is not None, undecided=undecided and P is None,
        horizon=horizon,
    )


# --- escaping curves near the fixed point ----------------------------------------


def escape_radius(c: complex) -> float:
    """Least radius outside which ``|z^2 + c| > |z|``."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * abs(c)))


@dataclass
class EnclosingCurveReport:
    k: int
    escape_radius: float
    resolution: int
    half_width: float
    diameter: float
    diameter_bound: float
    shrink_ok: bool
    all_escape: bool
    winding: int


def julia_enclosing_curve(c: complex, k: int, x0: complex, escape_radius_value: float | None = None,
                          resolution: int = 256, with_report: bool = False, max_doublings: int = 24):
    """Boundary of the component of ``f^{-k}(B(0, R_esc))`` containing ``x0``.

    ``f = z^2 + c`` with ``|c| > 2`` so the Julia set is a Cantor set.  The
    level set ``log|f^k| = log R_esc`` is extracted by marching squares on a
    grid centred on ``x0``; the box doubles until the component is interior.
    The curve is checked to wind once around ``x0`` and to consist of
    escaping points.  ``R_esc`` defaults to ``escape_radius(c) + 0.001``.
    """
    c = complex(c)
    x0 = complex(x0)
    if not abs(c) > 2.0:
        raise PreconditionError("the Julia set is a Cantor set only for |c| > 2")
    if k < 0:
        raise PreconditionError("k must be non-negative")
    if abs(x0 * x0 + c - x0) > 1e-10 or abs(2 * x0) <= 1:
        raise PreconditionError("x0 must be a repelling fixed point")
    rstar = escape_radius(c)
    R = rstar + 1e-3 if escape_radius_value is None else float(escape_radius_value)
    if not R > rstar:
        raise PreconditionError("escape radius must exceed the escape threshold")
    co = np.array([c, 0.0, 1.0], dtype=np.complex128)
    hw = (abs(x0) + 2.0 * R) if k == 0 else 2.0 * R / abs(2 * x0) ** k
    n = resolution + (resolution % 2)
    for _ in range(max_doublings):
        xs = x0.real + np.linspace(-hw, hw, n + 1)
        ys = x0.imag + np.linspace(-hw, hw, n + 1)
        Z = xs[:, None] + 1j * ys[None, :]
        W, _ = kernels.poly_iterate(co, Z.ravel(), k, math.inf)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            F = np.log(np.abs(W)).reshape(Z.shape) - math.log(R)
        F = np.where(np.isnan(F), np.inf, F)
        inside = F < 0
        ic = n // 2
        if not inside[ic, ic]:
            raise RefineGridError("x0 is not inside the escape component", suggested=2 * resolution)
        labels, _ = ndimage.label(inside)
        comp = labels == labels[ic, ic]
        if comp[0, :].any() or comp[-1, :].any() or comp[:, 0].any() or comp[:, -1].any():
            hw *= 2.0
            continue
        other = inside & ~comp
        near = ndimage.binary_dilation(comp, structure=np.ones((3, 3), dtype=bool), iterations=2)
        if (other & near).any():
            raise RefineGridError("component not isolated at this resolution", suggested=2 * resolution)
        G = np.where(other, np.abs(F) + 1.0, F)
        loops, chains = marching_squares(G, xs, ys, 0.0)
        if chains or len(loops) != 1:
            raise RefineGridError("ambiguous contour", suggested=2 * resolution)
        verts = loops[0]
        curve = ClosedCurve.from_vertices(verts)
        wind = winding_number(curve, x0)
        if wind == -1:
            curve = ClosedCurve.from_vertices(verts[::-1])
            wind = 1
        if wind != 1:
            raise RefineGridError(f"contour winds {wind} times around x0", suggested=2 * resolution)
        _, steps = kernels.poly_iterate(co, curve.vertices, k + 64, rstar)
        all_escape = bool(np.all(steps < k + 64))
        if not all_escape:
            raise RefineGridError("contour vertices fail to escape", suggested=2 * resolution)
        diam = curve.diameter()
        bound = 4.0 * R * 2.0 ** (-k)
        report = EnclosingCurveReport(k, R, resolution, hw, diam, bound, diam <= bound, all_escape, wind)
        return (curve, report) if with_report else curve
    raise RefineGridError("component did not fit in the search box", suggested=2 * resolution)


# --- pull-back and scaling -----------------------------------------------------------


def pull_back_curve(L: LinearizerModel, gamma: ClosedCurve) -> ClosedCurve:
    """``L^{-1}(gamma)`` vertex by vertex, each Newton solve seeded by continuation."""
    w = gamma.actual_vertices()
    z = np.empty_like(w)
    try:
        z[0] = local_inverse(L, w[0])
    except OutsideInjectivityError as exc:
        raise SeedChainError(str(exc), 0) from exc
    dL = derivative(L, z[0])
    for i in range(1, len(w)):
        pred = z[i - 1] + (w[i] - w[i - 1]) / dL
        try:
            z[i] = local_inverse(L, w[i], seed=pred)
        except OutsideInjectivityError as exc:
            raise SeedChainError(str(exc), i) from exc
        step = abs(z[i] - z[i - 1])
        if abs(z[i] - pred) > 0.5 * step + 1e3 * L.tolerance:
            raise SeedChainError("continuation jumped to another branch", i)
        dL = derivative(L, z[i])
    close = z[-1] + (w[0] - w[-1]) / dL
    if abs(close - z[0]) > 0.5 * abs(z[0] - z[-1]) + 1e3 * L.tolerance:
        raise SeedChainError("pulled-back curve does not close", 0)
    curve = ClosedCurve.from_vertices(z)
    wind = winding_number(curve, 0j)
    if wind != 1:
        raise SeedChainError(f"pulled-back curve winds {wind} times around 0", 0)
    return curve


def scale_curve(curve: ClosedCurve, lam: complex, p: int) -> ClosedCurve:
    """Multiply every vertex by ``lam^p``; switches to ``log_scale`` on overflow."""
    if p < 0:
        raise PreconditionError("p must be non-negative")
    if p == 0:
        return curve
    lam = complex(lam)
    grow = p * math.log(abs(lam))
    top = float(np.log(np.abs(curve.vertices)).max()) if curve.planar else 0.0
    if curve.log_scale == 0.0 and grow + top < 600.0:
        factor = lam**p
        v = curve.vertices * factor
        return ClosedCurve(v, resolution=curve.resolution * abs(factor))
    rot = complex(np.exp(1j * p * np.angle(lam)))
    return ClosedCurve(curve.vertices * rot, resolution=curve.resolution, log_scale=curve.log_scale + grow)


def bracket_exponents(curve: ClosedCurve, lam: complex, r: float | None, mu: float,
                      log_r: float | None = None) -> tuple[int, int]:
    """Least and greatest ``p`` with ``lam^p curve`` strictly inside ``A(r, r^mu)``."""
    if log_r is None:
        if r is None or not r > 0:
            raise PreconditionError("r must be positive")
        log_r = math.log(r)
    if not mu > 1:
        raise PreconditionError("mu must exceed 1")
    ln = curve.log_norms()
    log_s, log_t = float(ln.min()), float(ln.max())
    step = math.log(abs(lam))
    if step <= 0:
        raise PreconditionError("the multiplier must expand")

    def lower_ok(p: int) -> bool:
        if curve.log_scale == 0.0 and p * step + log_t < 600 and log_r < 600:
            return abs(lam) ** p * math.exp(log_s) > math.exp(log_r)
        return p * step + log_s > log_r

    def upper_ok(p: int) -> bool:
        if curve.log_scale == 0.0 and p * step + log_t < 600 and mu * log_r < 600:
            return abs(lam) ** p * math.exp(log_t) < math.exp(mu * log_r)
        return p * step + log_t < mu * log_r

    p1 = max(0, int(math.floor((log_r - log_s) / step)) - 1)
    while not lower_ok(p1):
        p1 += 1
    while p1 > 0 and lower_ok(p1 - 1):
        p1 -= 1
    p2 = max(0, int(math.ceil((mu * log_r - log_t) / step)) + 1)
    while p2 >= 0 and not upper_ok(p2):
        p2 -= 1
    if p2 < p1 or not upper_ok(p1):
        raise RingTooThinError(f"no power of the multiplier fits the curve into A(r, r^{mu})")
    return p1, p2


# --- the certificate ------------------------------------------------------------------


@dataclass
class WebLevel:
    m: int
    log_r_m: float
    log_M_m: float
    boundary: ClosedCurve
    p_exponent: int
    p1: int
    log_min_boundary: float
    log_max_boundary: float
    measured_min_mod: float  # log m(dG_m, L), lower bound
    next_max_norm: float  # log max |z| on dG_{m+1}
    ball_containment: bool
    separation: bool
    image_winding_log2: float
    image_winding_ok: bool
    nesting: bool  # dG_{m+1} winds once around every vertex of dG_m
    in_ring: bool
    shell_nesting: bool = False  # max |dG_m| < r_{m+1}

    @property
    def passed(self) -> bool:
        return self.ball_containment and self.separation and self.image_winding_ok

    @property
    def r_m(self) -> float:
        return math.exp(self.log_r_m) if self.log_r_m < 709 else math.inf


@dataclass
class WebCertificate:
    R: float
    mu: float
    levels: list
    verdict: str
    sample_policy: dict = field(default_factory=dict)
    failed_level: int | None = None
    curve_base: ClosedCurve | None = None
    gamma: ClosedCurve | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _nested(inner: ClosedCurve, outer: ClosedCurve) -> bool:
    """Every vertex of ``inner`` lies inside ``outer`` (winding number 1)."""
    if float(inner.log_norms().max()) < float(outer.log_norms().min()):
        return True
    shift = inner.log_scale - outer.log_scale
    if shift > 600:
        return False
    pts = inner.vertices * math.exp(shift)
    w = kernels.winding_numbers(outer.vertices, pts)
    return bool(np.all(np.rint(w) == 1))


def _quadratic_parameter(f: MapSpec) -> complex:
    if f.family != "polynomial" or degree(f) != 2:
        raise PreconditionError("web certificates need a quadratic polynomial")
    a0, a1, a2 = f.coefficients
    if a1 != 0 or a2 != 1:
        raise PreconditionError("web certificates need the normal form z^2 + c")
    return complex(a0)


def default_web_radius(c: complex) -> float:
    """Escape radius for the web curve: midway between the threshold and ``|c|``.

    Below ``|c|`` the critical value stays outside the disk, so preimage
    components separate; the margin keeps ``x0`` well inside its component.
    """
    return 0.5 * (escape_radius(c) + abs(c))


def certify_web(L: LinearizerModel, R: float, mu: float, levels: int, samples: int = 1024,
                k: int = 3, resolution: int = 256, ball_samples: int = 64,
                escape_radius_value: float | None = None, exponent: str = "greatest") -> WebCertificate:
    """Measured certificate that ``A(L)`` contains a spiders' web, level by level.

    ``exponent`` picks the power of the multiplier inside the bracket.
    ``"greatest"`` pushes each boundary towards ``r_m^mu`` and gives the
    separation check the most room.  ``"least"`` keeps each boundary just
    outside ``r_m``, below ``r_{m+1}``, at the cost of separation.
    """
    if levels < 0:
        raise PreconditionError("levels must be non-negative")
    policy = {
        "modulus_samples": samples,
        "k": k,
        "grid_resolution": resolution,
        "ball_samples_per_circle": ball_samples,
        "ball_circles": 5,
        "polyline_note": "Jordan property checked at polyline resolution only",
    }
    if exponent not in ("least", "greatest"):
        raise PreconditionError("exponent must be 'least' or 'greatest'")
    policy["exponent"] = exponent
    if levels == 0:
        return WebCertificate(R, mu, [], "pass", policy)
    c = _quadratic_parameter(L.map)
    lam = complex(L.multiplier)
    if not L.log_max_modulus(math.log(R), samples) > math.log(R):
        raise ThresholdTooSmallError(f"M(R, L) does not exceed R = {R}")
    C3 = abs(lam)
    seq = rm_sequence(L, C3, R, levels + 1, samples)
    if seq.truncated:
        raise PreconditionError("shell radii overflow the log range")
    Rw = default_web_radius(c) if escape_radius_value is None else escape_radius_value
    gamma = julia_enclosing_curve(c, k, L.x0, Rw, resolution)
    base = pull_back_curve(L, gamma)
    if not is_simple(base):
        return WebCertificate(R, mu, [], "fail", {**policy, "reason": "pulled-back curve not simple"}, 1, base, gamma)
    policy["curve_vertices"] = len(base)
    policy["escape_radius"] = Rw
    co = np.asarray(L.map.coefficients)
    bail = escape_bailout(co)
    gw = gamma.actual_vertices()
    # winding of f^k(gamma) about 0; later iterates multiply it by the degree
    wk, _ = kernels.poly_iterate(co, gw, k, math.inf)
    w_k = int(np.rint(kernels.winding_numbers(wk, np.array([0j]))[0]))
    zero_radius = float(np.abs(np.polynomial.polynomial.polyroots(co)).max())

    bounds = []
    for m in range(1, levels + 2):
        p1, p2 = bracket_exponents(base, lam, None, mu, log_r=seq.log_r[m - 1])
        p = p1 if exponent == "least" else p2
        bounds.append((p1, p, scale_curve(base, lam, p)))

    out_levels = []
    failed = None
    for m in range(1, levels + 1):
        p1, p2, bd = bounds[m - 1]  # p2 is the exponent in use
        _, _, bd_next = bounds[m]
        ln = bd.log_norms()
        log_min_b, log_max_b = float(ln.min()), float(ln.max())
        log_M = seq.log_M[m - 1]
        # (a) ball of radius M^m(R, L) inside dG_m
        radii = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        dirs = _unit_directions(ball_samples, 2)
        pts_scaled = (radii[:, None] * dirs[None, :]).ravel() * math.exp(log_M - bd.log_scale)
        pts_scaled = np.unique(pts_scaled)
        wind = kernels.winding_numbers(bd.vertices, pts_scaled)
        ball_ok = bool(log_min_b > log_M and np.all(np.rint(wind) == 1))
        # (b) separation
        lo, _ = kernels.poly_log_abs(co, gw, p2, bail)
        log_min_mod = float(lo.min())
        next_max = float(bd_next.log_norms().max())
        sep_ok = log_min_mod > next_max
        # (c) winding of the image curve f^{p2}(gamma) = L(dG_m)
        steps_ok = True
        if p2 > k:
            lo_k, _ = kernels.poly_log_abs(co, gw, k, bail)
            steps_ok = float(lo_k.min()) > math.log(zero_radius)
        wind_ok = (w_k != 0) and steps_ok and p2 >= k
        wind_log2 = (p2 - k) + math.log2(abs(w_k)) if w_k != 0 else -math.inf
        nesting = _nested(bd, bd_next)
        shell_nesting = log_max_b < seq.log_r[m]
        in_ring = log_min_b > seq.log_r[m - 1] and log_max_b < mu * seq.log_r[m - 1]
        lvl = WebLevel(m, seq.log_r[m - 1], log_M, bd, p2, p1, log_min_b, log_max_b, log_min_mod,
                       next_max, ball_ok, sep_ok, wind_log2, wind_ok, nesting, in_ring,
                       shell_nesting)
        out_levels.append(lvl)
        if failed is None and not lvl.passed:
            failed = m
    verdict = "pass" if failed is None else "fail"
    return WebCertificate(R, mu, out_levels, verdict, policy, failed, base, gamma)


__all__ = [
    "FastEscapeReport",
    "fast_escape_test",
    "map_log_max_modulus",
    "escape_radius",
    "julia_enclosing_curve",
    "EnclosingCurveReport",
    "pull_back_curve",
    "scale_curve",
    "bracket_exponents",
    "WebLevel",
    "WebCertificate",
    "certify_web",
    "default_web_radius",
    "winding_number",
    "winding_numbers",
]
