"""Explicit invariant-density machinery for the W-map family.

For 1/s1 + 1/s2 <= 1 and a > 0 the non-normalized invariant density of a
W map is

    f = 1 + (1 + (s1+pa)/(s2+qa)) * Lambda * sum_n chi(B_n, z_n) / |B_n|

where z_n is the orbit of the turning point 1/2, B_n the cumulative slope
along that orbit (first factor taken on the rising branch 2 by convention),
chi(t, x) the indicator of [0, x] for t > 0 and of [x, 1] for t < 0, and
Lambda solves a 2x2 linear system whose coefficients are the series
S11, S22 of selected reciprocal cumulative slopes.

The orbit stays on branch 2 and decreases geometrically until some stopping
index k, after which it is continued numerically; all series are truncated
once a geometric tail bound (ratio 1/min|slope|) drops below the requested
tolerance.  Everything here is piecewise constant, so integrals, distances
and the transfer operator can be evaluated exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, ParameterError
from .wmap import PiecewiseLinearMap, WParams, build_w_map, classify_case

MERGE_TOL = 1e-14  # breakpoints closer than this are treated as one point
DEFAULT_SERIES_CUTOFF = 1e-12
DEFAULT_TAIL_TOL = 1e-10
MAX_SERIES_TERMS = 1_000_000


# ---------------------------------------------------------------------------
# piecewise-constant functions


@dataclass(frozen=True)
class PiecewiseConstantDensity:
    """A piecewise-constant function on an interval, cell values per cell.

    ``breakpoints`` has one more entry than ``values`` and is strictly
    increasing.  Instances represent densities (nonnegative, usually on
    [0, 1]) as well as signed intermediates such as the raw series output,
    which is negative-valued in case II before normalization.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size != vals.size + 1:
            raise ParameterError("need n+1 breakpoints for n cell values")
        if np.any(np.diff(bp) <= 0):
            raise ParameterError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def integral(self) -> float:
        return float(self.values @ self.widths)

    def integral_over(self, lo: float, hi: float) -> float:
        """Exact integral over [lo, hi] (clipped to the domain)."""
        if hi < lo:
            raise ParameterError("integral_over needs lo <= hi")
        left = np.maximum(self.breakpoints[:-1], lo)
        right = np.minimum(self.breakpoints[1:], hi)
        overlap = np.clip(right - left, 0.0, None)
        return float(self.values @ overlap)

    def value_at(self, x) -> np.ndarray | float:
        """Cell value at x; at a breakpoint, the cell on the right."""
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        idx = np.clip(idx, 0, self.values.size - 1)
        out = self.values[idx]
        return float(out) if np.isscalar(x) else out

    def scale(self, c: float) -> "PiecewiseConstantDensity":
        return PiecewiseConstantDensity(self.breakpoints.copy(), self.values * c)

    @property
    def is_normalized(self) -> bool:
        return abs(self.integral() - 1.0) <= 1e-12

    def sup(self) -> float:
        return float(self.values.max())

    def essential_infimum(self) -> float:
        """Smallest cell value over the support (cells with positive value)."""
        positive = self.values[self.values > 0]
        return float(positive.min()) if positive.size else 0.0

    def embedded(self, lo: float = 0.0, hi: float = 1.0) -> "PiecewiseConstantDensity":
        """The same function extended by zero cells to cover [lo, hi]."""
        bp = list(self.breakpoints)
        vals = list(self.values)
        if lo < bp[0]:
            bp.insert(0, lo)
            vals.insert(0, 0.0)
        if hi > bp[-1]:
            bp.append(hi)
            vals.append(0.0)
        return PiecewiseConstantDensity(np.array(bp), np.array(vals))


def accumulate_indicators(
    terms, base: float = 0.0, domain: tuple[float, float] = (0.0, 1.0)
) -> PiecewiseConstantDensity:
    """Build base + sum of w * chi_[lo, hi] from (lo, hi, w) triples.

    Interval endpoints closer than MERGE_TOL are merged before cells are
    formed, so near-coincident orbit points cannot create zero-width cells.
    """
    d0, d1 = domain
    points = [d0, d1]
    for lo, hi, _ in terms:
        points.append(min(max(lo, d0), d1))
        points.append(min(max(hi, d0), d1))
    pts = np.sort(np.array(points, dtype=float))
    # merge clusters of nearly identical points, keeping the first of each
    keep = np.empty(pts.size, dtype=bool)
    keep[0] = True
    np.greater(np.diff(pts), MERGE_TOL, out=keep[1:])
    bp = pts[keep]
    if bp[-1] < d1:
        bp[-1] = d1
    n_cells = bp.size - 1
    if n_cells < 1:
        raise ParameterError("degenerate domain")
    delta = np.zeros(n_cells + 1)
    for lo, hi, w in terms:
        # each endpoint snaps to the first (smallest) point of its merge cluster
        i = int(np.searchsorted(bp, min(max(lo, d0), d1), side="right")) - 1
        j = int(np.searchsorted(bp, min(max(hi, d0), d1), side="right")) - 1
        if j > i:
            delta[i] += w
            delta[j] -= w
    values = base + np.cumsum(delta[:-1])
    return PiecewiseConstantDensity(bp, values)


def refine_pair(f: PiecewiseConstantDensity, g: PiecewiseConstantDensity):
    """(grid, f values, g values) on the common refinement of two functions."""
    bp = np.union1d(f.breakpoints, g.breakpoints)
    lo = max(f.breakpoints[0], g.breakpoints[0])
    hi = min(f.breakpoints[-1], g.breakpoints[-1])
    bp = bp[(bp >= lo) & (bp <= hi)]
    mids = 0.5 * (bp[:-1] + bp[1:])
    return bp, f.value_at(mids), g.value_at(mids)


def l1_distance(f: PiecewiseConstantDensity, g: PiecewiseConstantDensity) -> float:
    """Exact L1 distance on the common refinement grid."""
    bp, fv, gv = refine_pair(f, g)
    return float(np.abs(fv - gv) @ np.diff(bp))


def normalize(f: PiecewiseConstantDensity) -> PiecewiseConstantDensity:
    """Divide by the total integral so the result has integral 1.

    The raw series output can carry tiny negative cell values after division
    (and genuinely negative ones would signal a bug or a degenerate regime):
    values below -1e-9 trigger a warning, and all negatives are clamped to 0.
    """
    total = f.integral()
    if abs(total) < 1e-300:
        raise ComputationError(
            "degenerate normalization: integral is numerically zero "
            "(near the vartheta = 0 regime, renormalize by 1/Lambda first)",
            integral=total,
        )
    values = f.values / total
    worst = values.min()
    if worst < -1e-9:
        warnings.warn(
            f"normalized density clipped at {worst:.3e} < -1e-9", RuntimeWarning
        )
    return PiecewiseConstantDensity(f.breakpoints.copy(), np.maximum(values, 0.0))


def h0(s1: float, s2: float) -> PiecewiseConstantDensity:
    """Invariant density of the unperturbed map: two cells split at 1/2."""
    if classify_case(s1, s2) == "I":
        raise ParameterError("h0 requires 1/s1 + 1/s2 <= 1")
    denom = 2 * s1 * s2 + s1 - s2
    left = 2 * s1 * (s2 + 1) / denom
    right = 2 * s2 * (s1 - 1) / denom
    return PiecewiseConstantDensity(np.array([0.0, 0.5, 1.0]), np.array([left, right]))


# ---------------------------------------------------------------------------
# turning-point orbit


@dataclass(frozen=True)
class TurningOrbit:
    """Orbit of the turning point and its cumulative slopes up to exit.

    ``orbit[i]`` is W^(i+1)(1/2) and ``cum_slopes[i]`` the cumulative slope
    over the first i+1 steps, with the first factor s1 + p*a taken on the
    rising branch.  ``k`` is the first index whose orbit point drops to or
    below the left breakpoint of the rising branch; ``k1 = floor(2k/3)``.
    ``closed_form_k`` is the same index predicted from the closed form of
    the orbit while it rides the rising branch.
    """

    orbit: np.ndarray
    cum_slopes: np.ndarray
    k: int
    k1: int
    closed_form_k: int
    threshold: float

    def point(self, n: int) -> float:
        """W^n(1/2) for 1 <= n <= k."""
        return float(self.orbit[n - 1])


def _orbit_steps(pl_map: PiecewiseLinearMap):
    """Yield (n, z_n, B_n) with z_n = W^n(1/2), B_n the cumulative slope.

    The first slope factor is the rising-branch slope (two-sided convention
    at the turning point); afterwards the branch actually containing the
    current point decides each factor.
    """
    beta2 = pl_map.slopes[1]
    lo, hi = pl_map.domain
    z = pl_map(0.5)
    cum = beta2
    n = 1
    yield n, z, cum
    while True:
        branch = pl_map.branch_index(z)
        cum *= pl_map.slopes[branch - 1]
        # images can leave the interval by an ulp; keep the walk well-defined
        z = min(max(pl_map(z), lo), hi)
        n += 1
        yield n, z, cum


def _require_series_case(params: WParams, who: str) -> str:
    case = classify_case(params.s1, params.s2)
    if case == "I":
        raise ParameterError(f"{who} requires 1/s1 + 1/s2 <= 1 (got case I)")
    if not params.a > 0:
        raise ParameterError(f"{who} requires a > 0")
    return case


def closed_form_orbit_point(params: WParams, m: int) -> float:
    """W^m(1/2) for 2 <= m <= k from the rising-branch closed form.

    The orbit point sits at distance D * (s1+pa)^(m-2) below the rising
    branch's fixed point, with D determined by the second orbit point.
    """
    s1, s2, p, q, r, a = params.s1, params.s2, params.p, params.q, params.r, params.a
    beta2 = s1 + p * a
    x_l = (s1 - 1 + p * a - 2 * r * a) / (2 * (beta2 - 1))
    if classify_case(s1, s2) == "II":
        dist = a * a * (r * (q * s1 + p * s2 - p - q) + r * p * q * a) / (beta2 - 1)
    else:
        dist = (
            a
            * r
            * (s1 * s2 - s1 - s2 + a * (q * s1 + p * s2 - p - q + p * q * a))
            / (beta2 - 1)
        )
    return x_l - dist * beta2 ** (m - 2)


def _closed_form_k(params: WParams, threshold: float) -> int:
    """Smallest m with closed-form W^m(1/2) <= threshold."""
    beta2 = params.s1 + params.p * params.a
    z2 = closed_form_orbit_point(params, 2)
    if z2 <= threshold:
        return 2
    x_l = (params.s1 - 1 + params.p * params.a - 2 * params.r * params.a) / (
        2 * (beta2 - 1)
    )
    dist = x_l - z2
    # z_m <= threshold  iff  dist * beta2^(m-2) >= x_l - threshold
    guess = 2 + math.ceil(math.log((x_l - threshold) / dist) / math.log(beta2))
    m = max(2, guess - 3)
    while closed_form_orbit_point(params, m) > threshold:
        m += 1
    while m > 2 and closed_form_orbit_point(params, m - 1) <= threshold:
        m -= 1
    return m


def turning_orbit(params: WParams, max_steps: int = 200_000) -> TurningOrbit:
    """Follow the turning-point orbit until it exits the rising branch."""
    _require_series_case(params, "turning_orbit")
    pl_map = build_w_map(params)
    threshold = pl_map.breakpoints[1]
    orbit, cum_slopes = [], []
    k = None
    for n, z, cum in _orbit_steps(pl_map):
        orbit.append(z)
        cum_slopes.append(cum)
        if z <= threshold:
            k = n
            break
        if n >= max_steps:
            raise ComputationError(
                f"turning orbit did not exit the rising branch within "
                f"{max_steps} steps; raise max_steps",
                steps=max_steps,
            )
    return TurningOrbit(
        orbit=np.array(orbit),
        cum_slopes=np.array(cum_slopes),
        k=k,
        k1=(2 * k) // 3,
        closed_form_k=_closed_form_k(params, threshold),
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# series coefficients and Lambda


@dataclass(frozen=True)
class GoraSetup:
    """Data of the explicit piecewise-linear invariant-density formula
    (Gora's method) specialized to the four-branch W family: branch maxima,
    slopes, minima, digits (negated intercepts) and the two one-sided
    turning points with their branch assignments."""

    n_branches: int
    n_turning: int
    ell: int
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: tuple[float, ...]
    digits: tuple[float, ...]
    critical_points: tuple[tuple[float, int], ...]
    upper_points: tuple[tuple[float, int], ...]
    lower_points: tuple[tuple[float, int], ...]
    approach_left: tuple[tuple[float, int], ...]
    approach_right: tuple[tuple[float, int], ...]


def gora_setup(params: WParams) -> GoraSetup:
    pl_map = build_w_map(params)
    lift = 0.5 + params.r * params.a
    c1 = (0.5, 2)  # turning point approached from the rising branch
    c2 = (0.5, 3)  # and from the falling branch
    return GoraSetup(
        n_branches=4,
        n_turning=2,
        ell=0,
        alpha=(1.0, lift, lift, 1.0),
        beta=tuple(pl_map.slopes),
        gamma=(0.0, 0.0, 0.0, 0.0),
        digits=tuple(-c for c in pl_map.intercepts),
        critical_points=(c1, c2),
        upper_points=(c1, c2),
        lower_points=(),
        approach_left=(c2,),
        approach_right=(c1,),
    )


@dataclass(frozen=True)
class LambdaData:
    """Series sums, the solved coefficient and its two-sided estimates."""

    s11: float
    s22: float
    lam: float
    lam_low: float
    lam_high: float
    kappa: float
    eta: float
    vartheta: float
    n_terms: int


def vartheta(s1: float, s2: float) -> float:
    """Sign indicator for Lambda in the strongly expanding regime."""
    return 1.0 - ((s1 + s2) / (s1 * s2) + (s1 + s2) / (s2 * s2 * (s1 - 1)))


def lambda_solve(
    params: WParams, series_cutoff: float = DEFAULT_SERIES_CUTOFF
) -> LambdaData:
    """Sum the S-series along the turning orbit and solve for Lambda.

    S11 counts steps whose cumulative slope sign matches the side of 1/2 the
    orbit point falls on; S22 uses the opposite pairing with the cumulative
    slope started on the falling branch.  Both series are truncated when the
    geometric tail bound drops below series_cutoff.  Lambda is obtained from
    the 2x2 system and cross-checked against the closed-form expression; the
    estimates lam_low <= lam <= lam_high (as an interval) come from bounding
    the series by geometric sums cut at k1.
    """
    _require_series_case(params, "lambda_solve")
    s1, s2, p, q, a = params.s1, params.s2, params.p, params.q, params.a
    pl_map = build_w_map(params)
    lam_min = pl_map.min_abs_slope
    ratio_12 = -(s2 + q * a) / (s1 + p * a)  # cum-slope ratio of the two sides
    s11 = 0.0
    s22 = 0.0
    n_terms = 0
    for n, z, cum in _orbit_steps(pl_map):
        n_terms = n
        if (cum > 0 and z > 0.5) or (cum < 0 and z < 0.5):
            s11 += 1.0 / abs(cum)
        cum2 = cum * ratio_12
        if (cum2 < 0 and z > 0.5) or (cum2 > 0 and z < 0.5):
            s22 += 1.0 / abs(cum2)
        if 1.0 / (abs(cum) * (lam_min - 1.0)) < series_cutoff:
            break
        if n >= MAX_SERIES_TERMS:
            raise ComputationError("S-series did not meet the cutoff", terms=n)

    denominator = 1.0 - (s11 + s22)
    if abs(denominator) < 1e-14:
        raise ComputationError(
            "Lambda is numerically singular (1 - S11 - S22 ~ 0); "
            "use the renormalized 1/Lambda route",
            denominator=denominator,
        )
    lam = 1.0 / denominator
    # cross-check through the 2x2 system (-S^T + Id) D^T = [1, 1]^T
    system = np.array([[1.0 - s11, -s22], [-s11, 1.0 - s22]])
    d1, d2 = np.linalg.solve(system, np.ones(2))
    if not (abs(d1 - lam) <= 1e-6 * abs(lam) and abs(d2 - lam) <= 1e-6 * abs(lam)):
        raise ComputationError(  # pragma: no cover - consistency guard
            "series and linear-system values of Lambda disagree",
            series=lam,
            solved=(d1, d2),
        )

    k1 = turning_orbit(params).k1
    kappa = (s1 + s2 + p * a + q * a) / ((s1 + p * a) * (s2 + q * a))
    eta = (s1 + s2 + p * a + q * a) / ((s2 + q * a) ** 2 * (s1 + p * a - 1))
    lam_low = 1.0 / (1.0 - (kappa + eta * (1.0 - (s1 + p * a) ** -(k1 - 1))))
    lam_high = 1.0 / (1.0 - (kappa + eta))
    return LambdaData(
        s11=s11,
        s22=s22,
        lam=lam,
        lam_low=lam_low,
        lam_high=lam_high,
        kappa=kappa,
        eta=eta,
        vartheta=vartheta(s1, s2),
        n_terms=n_terms,
    )


# ---------------------------------------------------------------------------
# the invariant density series and its companions


def _series_prefactor(params: WParams) -> float:
    return 1.0 + (params.s1 + params.p * params.a) / (params.s2 + params.q * params.a)


def density_series(
    params: WParams, tail_tol: float = DEFAULT_TAIL_TOL
) -> PiecewiseConstantDensity:
    """The non-normalized invariant density as a piecewise-constant function.

    Each orbit step contributes an indicator of [0, z_n] (positive cumulative
    slope) or [z_n, 1] (negative) weighted by the reciprocal cumulative
    slope.  The sum runs along the computed orbit until the remaining mass,
    including the series prefactor, is below tail_tol; the exact transfer
    operator then reproduces the result to within twice that truncation.
    """
    _require_series_case(params, "density_series")
    lam = lambda_solve(params).lam
    pl_map = build_w_map(params)
    lam_min = pl_map.min_abs_slope
    coeff = _series_prefactor(params) * lam
    terms = []
    for n, z, cum in _orbit_steps(pl_map):
        w = coeff / abs(cum)
        if cum > 0:
            terms.append((0.0, z, w))
        else:
            terms.append((z, 1.0, w))
        if abs(coeff) / (abs(cum) * (lam_min - 1.0)) < tail_tol:
            break
        if n >= MAX_SERIES_TERMS:
            raise ComputationError("density series did not converge", terms=n)
    return accumulate_indicators(terms, base=1.0)


@dataclass(frozen=True)
class BoundingDensities:
    f_low: PiecewiseConstantDensity
    f_high: PiecewiseConstantDensity
    which: str  # "case-II pair f_l/f_h" or "case-III pair f_l_hat/f_h_hat"


def bounding_densities(params: WParams) -> BoundingDensities:
    """Two-sided companions built from the k1-truncated series.

    f_high pairs the upper Lambda estimate with the truncated sum g_l, and
    f_low the lower estimate with g_h = g_l + geometric closure of the cut
    tail.  Whenever both estimates are negative these bracket the series
    density pointwise; for positive Lambda they are analysis tools only (the
    density is then bracketed by 1 and a constant).
    """
    case = _require_series_case(params, "bounding_densities")
    orbit = turning_orbit(params)
    lam = lambda_solve(params)
    s1, s2, p, q, a = params.s1, params.s2, params.p, params.q, params.a
    beta2 = s1 + p * a
    fall = s2 + q * a
    coeff = _series_prefactor(params)

    g_terms = [(0.0, orbit.point(1), 1.0 / beta2)]
    for j in range(2, orbit.k1 + 1):
        g_terms.append((orbit.point(j), 1.0, 1.0 / (fall * beta2 ** (j - 1))))
    closure = 1.0 / (fall * (beta2 - 1.0) * beta2 ** (orbit.k1 - 1))

    low_terms = [(lo, hi, coeff * lam.lam_low * w) for lo, hi, w in g_terms]
    f_low = accumulate_indicators(low_terms, base=1.0 + coeff * lam.lam_low * closure)
    high_terms = [(lo, hi, coeff * lam.lam_high * w) for lo, hi, w in g_terms]
    f_high = accumulate_indicators(high_terms, base=1.0)
    which = "case-II pair f_l/f_h" if case == "II" else "case-III pair f_l_hat/f_h_hat"
    return BoundingDensities(f_low=f_low, f_high=f_high, which=which)


@dataclass(frozen=True)
class RegionIntegrals:
    c1: float
    c2: float
    c3: float
    b: float
    j1: tuple[float, float]
    j2: tuple[float, float]
    j3: tuple[float, float]


def region_integrals(params: WParams, f: PiecewiseConstantDensity) -> RegionIntegrals:
    """Integrals of f over [0, z_k1], (z_k1, lift] and (lift, 1].

    The middle region collapses the peak around the turning point; its left
    edge is the k1-th orbit point and its right edge the lifted turning
    value 1/2 + r*a.
    """
    orbit = turning_orbit(params)
    t1 = orbit.point(orbit.k1)
    t2 = orbit.point(1)
    c1 = f.integral_over(0.0, t1)
    c2 = f.integral_over(t1, t2)
    c3 = f.integral_over(t2, 1.0)
    return RegionIntegrals(
        c1=c1, c2=c2, c3=c3, b=c1 + c2 + c3, j1=(0.0, t1), j2=(t1, t2), j3=(t2, 1.0)
    )


def renormalized_density_vartheta0(
    params: WParams, tail_tol: float = DEFAULT_TAIL_TOL
) -> PiecewiseConstantDensity:
    """The series density scaled by 1/Lambda for the vartheta = 0 boundary.

    When vartheta(s1, s2) = 0 the coefficient Lambda diverges as a -> 0 and
    the raw series is useless for uniform bounds; dividing by Lambda keeps
    the left and right plateau coefficients at order one and the integral
    separated from zero, after which normalization proceeds as usual.
    """
    if classify_case(params.s1, params.s2) != "III":
        raise ParameterError("renormalized route requires 1/s1 + 1/s2 < 1")
    if abs(vartheta(params.s1, params.s2)) >= 1e-9:
        raise ParameterError(
            "renormalized route requires vartheta ~ 0 "
            f"(got {vartheta(params.s1, params.s2)})"
        )
    lam = lambda_solve(params).lam
    return density_series(params, tail_tol).scale(1.0 / lam)


# ---------------------------------------------------------------------------
# exact transfer operator


def transfer_operator_apply(
    pl_map: PiecewiseLinearMap, f: PiecewiseConstantDensity
) -> PiecewiseConstantDensity:
    """Exact Perron-Frobenius action on a piecewise-constant function.

    Every cell of f clipped to a branch domain is linearly pushed forward,
    contributing value/|slope| on the image interval; the results are summed
    on the merged grid.  Mass is preserved exactly up to rounding.
    """
    terms = []
    for branch in range(1, pl_map.n_branches + 1):
        d0, d1 = pl_map.branch_domain(branch)
        lefts = np.maximum(f.breakpoints[:-1], d0)
        rights = np.minimum(f.breakpoints[1:], d1)
        weight = abs(pl_map.slopes[branch - 1])
        for left, right, value in zip(lefts, rights, f.values):
            if right <= left:
                continue
            y0 = pl_map.branch_value(branch, left)
            y1 = pl_map.branch_value(branch, right)
            if y1 < y0:
                y0, y1 = y1, y0
            terms.append((y0, y1, value / weight))
    lo, hi = pl_map.domain
    return accumulate_indicators(terms, base=0.0, domain=(lo, hi))
