"""Growth inequalities as measured reports.

Every check here evaluates both sides of an inequality numerically and
returns the slack; nothing is claimed beyond the sampled evidence.  Large
quantities are compared through their logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import EvaluationError, NotExpandingError, NoValidMuError, PreconditionError
from .geom import max_modulus, min_modulus, norms, sphere_sample, as_points
from .linearizer import LinearizerModel, escape_bailout
from .maps import MapSpec, degree


@dataclass(frozen=True)
class GrowthConstants:
    C1: float
    C2: float
    R0: float
    d: int
    K: float = 1.0
    n: int = 2

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0 and self.R0 > 0):
            raise PreconditionError("C1, C2 and R0 must be positive")
        if self.C1 > self.C2:
            raise PreconditionError("C1 must not exceed C2")
        if not self.d > self.K:
            raise PreconditionError("constants need d > K")
        if self.n < 2:
            raise PreconditionError("ambient dimension must be at least 2")

    @property
    def beta_low(self) -> float:
        return (self.d / self.K) ** (1.0 / (self.n - 1))

    @property
    def beta_high(self) -> float:
        return (self.d * self.K) ** (1.0 / (self.n - 1))


@dataclass(frozen=True)
class ExpansionConstants:
    N: int
    C3: float
    C4: float
    eta_at_1: float
    radii: tuple = ()
    samples: int = 0


@dataclass(frozen=True)
class MuThreshold:
    d: int
    K: float
    C3: float
    mu_min: float
    chosen_mu: float


@dataclass
class CheckReport:
    """Outcome of a measured inequality; ``slack`` values are in log units."""

    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.details}


def q_poly(j: int, y: float) -> float:
    """``1 + y + ... + y^(j-1)``."""
    if j < 1:
        raise PreconditionError("q_j needs j >= 1")
    return float(sum(y**i for i in range(j)))


def mu_threshold(d: int, K: float, C3: float, factor: float = 1.05) -> MuThreshold:
    """Least admissible ring exponent and the chosen one (``factor * mu_min``)."""
    if not K >= 1:
        raise PreconditionError("K must be at least 1")
    if not d > K:
        raise NoValidMuError(f"no admissible mu for d = {d} <= K = {K}")
    if not C3 > 1:
        raise PreconditionError("C3 must exceed 1")
    if not factor > 1:
        raise PreconditionError("the chosen mu must exceed the threshold")
    mu = (math.log(C3) / math.log(2.0)) * ((math.log(d) + math.log(K)) / (math.log(d) - math.log(K)))
    return MuThreshold(d, float(K), float(C3), mu, factor * mu)


def _power_map(phi: MapSpec, N: int) -> Callable:
    class _Iter:
        dimension = phi.dimension

        def __call__(self, x):
            return phi.iterate(x, N)

    return _Iter()


def expansion_constants(phi: MapSpec, radii, samples: int = 1024, max_N: int = 64) -> ExpansionConstants:
    """Least ``N`` with ``m(r, phi^N) >= 2r`` on every test radius, and ``C3``."""
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise PreconditionError("need at least one test radius")
    for N in range(1, max_N + 1):
        it = _power_map(phi, N)
        lows = [min_modulus(it, r, samples) / r for r in radii]
        if min(lows) >= 2.0:
            highs = [max_modulus(it, r, samples) / r for r in radii]
            eta = max(max_modulus(it, r, samples) / min_modulus(it, r, samples) for r in radii)
            C3 = max(highs)
            return ExpansionConstants(N=N, C3=C3, C4=max(C3 * eta, 1.0 + 1e-12), eta_at_1=eta,
                                      radii=radii, samples=samples)
    raise NotExpandingError(f"no iterate up to N = {max_N} doubles all test radii")


def qs_ratio(phi: MapSpec, s: float, t: float, m: int, samples: int = 1024) -> float:
    """Measured ``M(t, phi^m) / m(s, phi^m)``."""
    if not (0 < s <= t):
        raise PreconditionError("need 0 < s <= t")
    if m < 1:
        raise PreconditionError("m must be at least 1")
    it = _power_map(phi, m)
    return max_modulus(it, t, samples) / min_modulus(it, s, samples)


def log_orbit_abs(f: MapSpec, x, j: int) -> float:
    """``log|f^j(x)|`` using log-space tails for polynomials."""
    if f.family == "polynomial":
        co = np.asarray(f.coefficients)
        lo, hi = kernels.poly_log_abs(co, np.atleast_1d(complex(x)), j, escape_bailout(co))
        return 0.5 * float(lo[0] + hi[0])
    val = f.iterate(x, j)
    a = float(norms(val)[0])
    if not math.isfinite(a):
        raise EvaluationError("orbit overflowed", x)
    return math.log(a) if a > 0 else -math.inf


def sandwich_check(f: MapSpec, consts: GrowthConstants, x, j: int) -> CheckReport:
    """Two-sided growth bound for the ``j``-th iterate at ``x``.

    Lower side ``C1^{q_j(b)} |x|^{b^j}`` with ``b = (d/K)^{1/(n-1)}``; upper
    side the same with ``C2`` and ``B = (dK)^{1/(n-1)}``.  Slacks are the log
    gaps between the orbit and each bound.
    """
    pts = as_points(x, f.dimension)
    r = float(norms(pts)[0])
    if not r > consts.R0:
        raise PreconditionError("|x| must exceed R0")
    if j < 1:
        raise PreconditionError("j must be at least 1")
    b, B = consts.beta_low, consts.beta_high
    log_f = log_orbit_abs(f, pts[0], j)
    log_lo = q_poly(j, b) * math.log(consts.C1) + b**j * math.log(r)
    log_hi = q_poly(j, B) * math.log(consts.C2) + B**j * math.log(r)
    lower_slack = log_f - log_lo
    upper_slack = log_hi - log_f
    failed = [side for side, s in (("lower", lower_slack), ("upper", upper_slack)) if not s >= 0]
    return CheckReport(
        "sandwich",
        not failed,
        {"x_norm": r, "j": j, "log_orbit": log_f, "log_lower": log_lo, "log_upper": log_hi,
         "lower_slack": lower_slack, "upper_slack": upper_slack, "failed_sides": failed},
    )


def reggrowth_check(L: LinearizerModel, C3: float, C1: float, r: float, m: int, R1: float = 1.0,
                    samples: int = 1024) -> CheckReport:
    """Regularity of growth of ``log M(., L)`` along the radii ``C3^i r``."""
    if m < 1:
        raise PreconditionError("m must be at least 1")
    if not r > R1:
        raise PreconditionError(f"r = {r} is below the declared threshold R1 = {R1}")
    n = L.map.dimension
    K = L.map.declared_K or 1.0
    beta = (degree(L.map) / K) ** (1.0 / (n - 1))
    logs = [L.log_max_modulus(math.log(r) + i * math.log(C3), samples) for i in range(m + 1)]
    if min(logs[:-1]) <= 0:
        raise PreconditionError("log M(C3^i r, L) must be positive on the tested radii")
    log_rhs = math.log(logs[0])
    for i in range(1, m):
        factor = beta + math.log(C1) / logs[i]
        if factor <= 0:
            raise PreconditionError("r is below the region where the product is positive")
        log_rhs += math.log(factor)
    slack = math.log(logs[m]) - log_rhs
    return CheckReport("reggrowth", slack >= 0,
                       {"r": r, "m": m, "log_M": logs, "log_lhs": math.log(logs[m]), "log_rhs": log_rhs,
                        "slack": slack, "samples": samples})


@dataclass(frozen=True)
class RmSequence:
    """``r_m = C3^m M^m(R, L)`` kept as logarithms."""

    log_r: tuple
    log_M: tuple
    truncated: bool = False

    @property
    def values(self) -> list[float]:
        return [math.exp(v) if v < 709.0 else math.inf for v in self.log_r]

    def __len__(self) -> int:
        return len(self.log_r)


def rm_sequence(L, C3: float, R: float, count: int, samples: int = 1024) -> RmSequence:
    """Shell radii ``r_1 .. r_count``.

    ``L`` is a linearizer model or any callable ``log_r -> log M(e^{log_r})``.
    The list stops early, flagged ``truncated``, once logs overflow.
    """
    if count < 0:
        raise PreconditionError("count must be non-negative")
    if not C3 > 1:
        raise PreconditionError("C3 must exceed 1")
    log_M = L.log_max_modulus if isinstance(L, LinearizerModel) else L
    kw = {"samples": samples} if isinstance(L, LinearizerModel) else {}
    out_r, out_M = [], []
    if count == 0:
        return RmSequence((), ())
    cur = log_M(math.log(R), **kw)
    if not cur > math.log(R):
        raise PreconditionError(f"M(R, L) does not exceed R = {R}")
    for m in range(1, count + 1):
        if not math.isfinite(cur):
            return RmSequence(tuple(out_r), tuple(out_M), truncated=True)
        out_M.append(cur)
        out_r.append(m * math.log(C3) + cur)
        if m < count:
            cur = log_M(cur, **kw)
    return RmSequence(tuple(out_r), tuple(out_M))


def centered_distortion(f: MapSpec, x0, delta: float, m: int, samples: int = 1024,
                        rings: int = 8) -> float:
    """``max |F^m(x) - F^m(x0)| / min |F^m(x) - F^m(x0)|`` over ``|x - x0| = delta``.

    Injectivity of ``F^m`` on the disk is checked on ``rings`` concentric
    sample circles (distinct samples must have distinct images) and, in the
    plane, by the image circle winding exactly once about ``F^m(x0)``.
    """
    if not delta > 0 or m < 1:
        raise PreconditionError("need delta > 0 and m >= 1")
    n = f.dimension
    c = as_points(x0, n)[0]
    image_center = f.iterate(np.atleast_1d(c) if n == 2 else c[None, :], m)[0]
    circle = sphere_sample(delta, samples, n, center=c).points
    img = f.iterate(circle, m)
    d = norms(img - image_center)
    probe = [c + sphere_sample(delta * (k + 1) / rings, 128, n).points for k in range(rings)]
    probe_pts = np.concatenate([np.atleast_1d(c) if n == 2 else c[None, :]] + probe)
    pim = f.iterate(probe_pts, m)
    flat = np.column_stack([pim.real, pim.imag]) if n == 2 else pim
    pairs = cKDTree(flat).query_pairs(1e-12 * max(1.0, float(np.abs(flat).max())))
    if pairs:
        raise PreconditionError("the iterate is not injective on the sampled disk")
    if n == 2:
        # a proper map of degree k winds the image circle k times around the centre image
        order = np.argsort(np.angle(circle - c))
        turns = kernels.winding_numbers(img[order], np.atleast_1d(complex(image_center)))
        if abs(round(float(turns[0]))) != 1:
            raise PreconditionError("the iterate is not injective on the disk (image degree != 1)")
    if not np.all(np.isfinite(d)) or d.min() <= 0:
        raise PreconditionError("degenerate image circle")
    return float(d.max() / d.min())


__all__ = [
    "GrowthConstants",
    "ExpansionConstants",
    "MuThreshold",
    "CheckReport",
    "RmSequence",
    "q_poly",
    "mu_threshold",
    "expansion_constants",
    "qs_ratio",
    "sandwich_check",
    "reggrowth_check",
    "rm_sequence",
    "centered_distortion",
    "log_orbit_abs",
]
