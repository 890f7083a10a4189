"""Ulam discretization of the transfer operator, and measure utilities.

The Ulam matrix entry (i, j) is the fraction of bin i that lands in bin j
under one application of the map.  For a piecewise-linear map this is exact
interval algebra: each branch is cut at bin edges and at preimages of bin
edges, so every elementary segment maps into exactly one target bin.  No
sampling is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .density import PiecewiseConstantDensity, h0
from .errors import ComputationError, ParameterError
from .wmap import PiecewiseLinearMap, classify_case

ROW_SUM_TOL = 1e-12
MASS_TOL = 1e-12


@dataclass(frozen=True)
class UlamMatrix:
    """Row-stochastic transition matrix over a bin grid."""

    edges: np.ndarray
    matrix: sp.csr_matrix

    @property
    def n_bins(self) -> int:
        return self.edges.size - 1


def build_ulam(
    pl_map: PiecewiseLinearMap, n_bins: int, align_half: bool = False
) -> UlamMatrix:
    """Exact Ulam matrix of a piecewise-linear map on n_bins uniform bins.

    With align_half the grid is snapped so that 1/2 is a bin edge (a no-op
    for even n_bins); this makes the discretization exact for maps whose
    invariant density only jumps at 1/2.
    """
    if n_bins < 2:
        raise ParameterError("build_ulam requires n_bins >= 2")
    lo, hi = pl_map.domain
    edges = np.linspace(lo, hi, n_bins + 1)
    if align_half and lo < 0.5 < hi:
        nearest = int(np.argmin(np.abs(edges[1:-1] - 0.5))) + 1
        edges[nearest] = 0.5

    rows, cols, vals = [], [], []
    widths = np.diff(edges)
    for branch in range(1, pl_map.n_branches + 1):
        d0, d1 = pl_map.branch_domain(branch)
        slope = pl_map.slopes[branch - 1]
        m0, m1 = pl_map.branch_image(branch)
        inner = edges[(edges > m0) & (edges < m1)]
        preimages = (inner - pl_map.intercepts[branch - 1]) / slope
        cuts = np.concatenate(
            ([d0, d1], edges[(edges > d0) & (edges < d1)], preimages)
        )
        cuts = np.unique(np.clip(cuts, d0, d1))
        seg_w = np.diff(cuts)
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        keep = seg_w > 0
        seg_w, mids = seg_w[keep], mids[keep]
        src = np.clip(np.searchsorted(edges, mids, side="right") - 1, 0, n_bins - 1)
        img = slope * mids + pl_map.intercepts[branch - 1]
        tgt = np.clip(np.searchsorted(edges, img, side="right") - 1, 0, n_bins - 1)
        rows.append(src)
        cols.append(tgt)
        vals.append(seg_w / widths[src])

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_bins, n_bins),
    ).tocsr()
    row_sums = np.asarray(matrix.sum(axis=1)).ravel()
    if np.max(np.abs(row_sums - 1.0)) > 1e-9:
        raise ComputationError(  # pragma: no cover - construction guard
            "Ulam matrix is not row-stochastic",
            worst_row_sum=float(row_sums[np.argmax(np.abs(row_sums - 1.0))]),
        )
    # the exact row sums are 1; rescaling removes the accumulated rounding
    matrix = sp.diags(1.0 / row_sums) @ matrix
    return UlamMatrix(edges=edges, matrix=matrix.tocsr())


def stationary_density(
    ulam: UlamMatrix, tol: float = 1e-12, max_iters: int = 1_000_000
) -> PiecewiseConstantDensity:
    """Stationary density of an Ulam matrix by left power iteration.

    Starts from the uniform mass vector and stops once successive mass
    vectors differ by less than tol in L1.  The result is converted to a
    density (mass per bin width) and, if the grid covers only part of
    [0, 1], extended by zero so it always lives on the unit interval.
    """
    transposed = ulam.matrix.T.tocsr()
    n = ulam.n_bins
    mass = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        new = transposed @ mass
        new /= new.sum()
        residual = float(np.abs(new - mass).sum())
        mass = new
        if residual < tol:
            break
    else:
        raise ComputationError(
            f"power iteration did not reach tol={tol} in {max_iters} iterations",
            residual=residual,
        )
    density = PiecewiseConstantDensity(ulam.edges.copy(), mass / np.diff(ulam.edges))
    lo, hi = density.domain
    if lo > 0.0 or hi < 1.0:
        density = density.embedded(0.0, 1.0)
    return density


# ---------------------------------------------------------------------------
# measures on [0, 1]: absolutely continuous part plus atoms


@dataclass(frozen=True)
class MeasureRepr:
    """A measure with piecewise-constant density part and finitely many atoms."""

    density: PiecewiseConstantDensity | None = None
    atoms: tuple[tuple[float, float], ...] = ()

    def total_mass(self) -> float:
        mass = self.density.integral() if self.density is not None else 0.0
        return mass + sum(w for _, w in self.atoms)

    def cumulative(self, points: np.ndarray) -> np.ndarray:
        """Right-continuous CDF values at the given sorted points."""
        out = np.zeros(points.size)
        if self.density is not None:
            bp = self.density.breakpoints
            prefix = np.concatenate(([0.0], np.cumsum(self.density.values * np.diff(bp))))
            idx = np.clip(np.searchsorted(bp, points, side="right") - 1, 0, bp.size - 2)
            out += prefix[idx] + self.density.values[idx] * (points - bp[idx])
            out[points < bp[0]] = 0.0
            out[points >= bp[-1]] = prefix[-1]
        for loc, weight in self.atoms:
            out[points >= loc] += weight
        return out


def wasserstein1(mu: MeasureRepr, nu: MeasureRepr) -> float:
    """Exact Wasserstein-1 distance between two probability measures on [0, 1].

    Equals the integral of |CDF_mu - CDF_nu|; the CDF difference is linear
    between consecutive breakpoints and atom locations, so each segment
    integrates exactly (splitting at the root when the sign changes).
    """
    for name, m in (("mu", mu), ("nu", nu)):
        if abs(m.total_mass() - 1.0) > MASS_TOL:
            raise ParameterError(
                f"wasserstein1 requires probability measures ({name} has mass "
                f"{m.total_mass()})"
            )
    points = {0.0, 1.0}
    for m in (mu, nu):
        if m.density is not None:
            points.update(m.density.breakpoints.tolist())
        points.update(loc for loc, _ in m.atoms)
    grid = np.array(sorted(points))
    grid = grid[(grid >= 0.0) & (grid <= 1.0)]
    diff = mu.cumulative(grid) - nu.cumulative(grid)

    dens_mu = mu.density.value_at(0.5 * (grid[:-1] + grid[1:])) if mu.density else 0.0
    dens_nu = nu.density.value_at(0.5 * (grid[:-1] + grid[1:])) if nu.density else 0.0
    seg_w = np.diff(grid)
    left = diff[:-1]  # value just after the left endpoint (jumps included)
    right = left + (np.asarray(dens_mu) - np.asarray(dens_nu)) * seg_w

    same_sign = left * right >= 0
    total = np.where(
        same_sign,
        0.5 * (np.abs(left) + np.abs(right)) * seg_w,
        # linear crossing: two triangles on either side of the root
        0.5
        * (left * left + right * right)
        / np.maximum(np.abs(right - left), 1e-300)
        * seg_w,
    )
    return float(total.sum())


def point_mass(location: float) -> MeasureRepr:
    return MeasureRepr(density=None, atoms=((location, 1.0),))


def limit_measure(s1: float, s2: float, p: float, q: float, r: float) -> MeasureRepr:
    """The weak-* limit of the invariant measures as a -> 0.

    Case I gives the point mass at 1/2; case III the unperturbed density;
    case II mixes them with weights set by the perturbation rates.
    """
    case = classify_case(s1, s2)
    if case == "I":
        return point_mass(0.5)
    if case == "III":
        return MeasureRepr(density=h0(s1, s2), atoms=())
    num = (q * s1 + p * s2 - p - q) * (s2 + 2)
    den = num + 2 * r * s1 * s2 * s2
    w_ac = num / den
    w_atom = 2 * r * s1 * s2 * s2 / den
    return MeasureRepr(density=h0(s1, s2).scale(w_ac), atoms=((0.5, w_atom),))
