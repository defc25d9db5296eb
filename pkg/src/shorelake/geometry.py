"""Domain geometry: analytic defining function, degenerate depth, masked grid.

The basin is the positivity set Omega = {phi > 0} of a smooth defining
function phi with nonvanishing gradient on the shore {phi = 0}; the water
depth is b = phi^a with exponent a > 0, so b vanishes exactly on the shore.
phi is supplied analytically (built-in disk/ellipse or a bivariate
polynomial) so that gradients and Hessians used by manufactured solutions
and the collar chart are exact.

Discertization is a uniform, cell-centered Cartesian grid with a boolean
interior mask: a cell belongs to the basin iff phi > 0 at its center.
Fields live on the full rectangle and are zero outside the mask.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError


@dataclass(frozen=True)
class DefiningFunction:
    """Analytic phi with exact first and second derivatives.

    ``eval``/``grad``/``hess`` accept coordinate arrays of equal shape;
    ``grad`` returns (phi_x, phi_y) and ``hess`` (phi_xx, phi_xy, phi_yy).
    """

    eval: Callable
    grad: Callable
    hess: Callable
    name: str = "custom"
    default_bbox: tuple | None = None

    def __call__(self, x, y):
        return self.eval(x, y)


def unit_disk():
    """phi = 1 - x^2 - y^2; Omega is the unit disk."""

    def ev(x, y):
        return 1.0 - x * x - y * y

    def gr(x, y):
        return -2.0 * x, -2.0 * y

    def he(x, y):
        shape = np.shape(x)
        m2 = np.full(shape, -2.0)
        z = np.zeros(shape)
        return m2, z, m2.copy()

    return DefiningFunction(ev, gr, he, name="disk",
                            default_bbox=(-1.1, 1.1, -1.1, 1.1))


def ellipse(ax=1.0, ay=0.7):
    """phi = 1 - (x/ax)^2 - (y/ay)^2."""
    if ax <= 0 or ay <= 0:
        raise ConfigurationError("ellipse semi-axes must be positive")

    def ev(x, y):
        return 1.0 - (x / ax) ** 2 - (y / ay) ** 2

    def gr(x, y):
        return -2.0 * x / ax**2, -2.0 * y / ay**2

    def he(x, y):
        shape = np.shape(x)
        return (np.full(shape, -2.0 / ax**2), np.zeros(shape),
                np.full(shape, -2.0 / ay**2))

    return DefiningFunction(ev, gr, he, name="ellipse",
                            default_bbox=(-1.1 * ax, 1.1 * ax, -1.1 * ay, 1.1 * ay))


def from_polynomial(coeffs, bbox, name="poly"):
    """phi = sum c_{jk} x^j y^k from ``coeffs`` = {(j, k): c}; derivatives exact."""
    terms = [(int(j), int(k), float(c)) for (j, k), c in sorted(coeffs.items())]
    if not terms:
        raise ConfigurationError("polynomial defining function needs coefficients")

    def ev(x, y):
        out = np.zeros(np.shape(x))
        for j, k, c in terms:
            out = out + c * np.power(x, j) * np.power(y, k)
        return out

    def gr(x, y):
        gx = np.zeros(np.shape(x))
        gy = np.zeros(np.shape(x))
        for j, k, c in terms:
            if j:
                gx = gx + c * j * np.power(x, j - 1) * np.power(y, k)
            if k:
                gy = gy + c * k * np.power(x, j) * np.power(y, k - 1)
        return gx, gy

    def he(x, y):
        hxx = np.zeros(np.shape(x))
        hxy = np.zeros(np.shape(x))
        hyy = np.zeros(np.shape(x))
        for j, k, c in terms:
            if j >= 2:
                hxx = hxx + c * j * (j - 1) * np.power(x, j - 2) * np.power(y, k)
            if j >= 1 and k >= 1:
                hxy = hxy + c * j * k * np.power(x, j - 1) * np.power(y, k - 1)
            if k >= 2:
                hyy = hyy + c * k * (k - 1) * np.power(x, j) * np.power(y, k - 2)
        return hxx, hxy, hyy

    return DefiningFunction(ev, gr, he, name=name, default_bbox=tuple(bbox))


@dataclass(frozen=True)
class DepthProfile:
    """Water depth b = phi^a, zero wherever phi <= 0."""

    defining: DefiningFunction
    exponent: float

    def __post_init__(self):
        if self.exponent <= 0:
            raise ConfigurationError("depth exponent a must be positive")

    def depth(self, x, y):
        phi = np.maximum(self.defining.eval(x, y), 0.0)
        return phi ** self.exponent


def eval_depth(profile, point):
    """Depth at a single point: max(phi, 0)^a."""
    x, y = point
    return float(profile.depth(np.asarray(x, float), np.asarray(y, float)))


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform cell-centered grid with interior mask.

    ``mask[j, i]`` is True iff phi > 0 at the center of cell (i, j);
    centers are x0 + (i + 1/2) h, y0 + (j + 1/2) h.  Border cells are
    required to be exterior so 5-point stencils never leave the arrays.
    ``g_min`` is the smallest |grad phi| over shore-adjacent cell centers
    (shore nondegeneracy scale used for collar widths and quotient floors).
    """

    x0: float
    y0: float
    h: float
    nx: int
    ny: int
    mask: np.ndarray
    g_min: float

    @property
    def xc(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.h

    @property
    def yc(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.h

    def centers(self):
        """Meshgrid arrays (X, Y) of cell centers, shape (ny, nx)."""
        return np.meshgrid(self.xc, self.yc)

    @property
    def cell_count(self):
        return int(self.mask.sum())

    def same_layout(self, other):
        return (self.nx == other.nx and self.ny == other.ny
                and abs(self.h - other.h) < 1e-14
                and abs(self.x0 - other.x0) < 1e-14
                and abs(self.y0 - other.y0) < 1e-14
                and bool(np.array_equal(self.mask, other.mask)))


def build_grid(profile, h, bbox=None):
    """Mask the cells whose center lies strictly inside Omega.

    Raises ConfigurationError for an empty interior (h too coarse or
    Omega empty) and when the bounding box clips the basin (a masked
    cell on the array border).
    """
    if h <= 0:
        raise ConfigurationError("grid spacing h must be positive")
    if bbox is None:
        bbox = profile.defining.default_bbox
        if bbox is not None:
            # guarantee an exterior ring at any resolution
            bbox = (bbox[0] - 2 * h, bbox[1] + 2 * h, bbox[2] - 2 * h, bbox[3] + 2 * h)
    if bbox is None:
        raise ConfigurationError("bounding box required for this domain")
    x0, x1, y0, y1 = (float(v) for v in bbox)
    if x1 <= x0 or y1 <= y0:
        raise ConfigurationError("bounding box is empty")
    nx = int(np.ceil((x1 - x0) / h - 1e-12))
    ny = int(np.ceil((y1 - y0) / h - 1e-12))
    xc = x0 + (np.arange(nx) + 0.5) * h
    yc = y0 + (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(xc, yc)
    mask = profile.defining.eval(X, Y) > 0.0
    if not mask.any():
        raise ConfigurationError("empty interior: no cell center has phi > 0")
    if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
        raise ConfigurationError("bounding box too tight: basin touches the array border")

    ring = _shore_ring(mask)
    gx, gy = profile.defining.grad(X[ring], Y[ring])
    gnorm = np.hypot(gx, gy)
    g_min = float(gnorm.min()) if gnorm.size else 0.0
    if g_min <= 0.0:
        raise ConfigurationError("degenerate shore: |grad phi| vanishes at the boundary ring")
    return Grid(x0=x0, y0=y0, h=float(h), nx=nx, ny=ny, mask=mask, g_min=g_min)


def _shore_ring(mask):
    """Masked cells with at least one unmasked 4-neighbor."""
    nb = np.zeros_like(mask)
    nb[1:, :] |= ~mask[:-1, :]
    nb[:-1, :] |= ~mask[1:, :]
    nb[:, 1:] |= ~mask[:, :-1]
    nb[:, :-1] |= ~mask[:, 1:]
    return mask & nb


@dataclass(eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray  # (ny, nx), zero outside the mask

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.mask.shape:
            raise ConfigurationError("field shape does not match grid")
        if not np.isfinite(self.values[self.grid.mask]).all():
            raise ConfigurationError("field has non-finite interior values")
        self.values = np.where(self.grid.mask, self.values, 0.0)

    @classmethod
    def from_function(cls, grid, fn):
        X, Y = grid.centers()
        return cls(grid, np.asarray(fn(X, Y), dtype=float))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.mask.shape))

    def copy(self):
        return ScalarField(self.grid, self.values.copy())


@dataclass(eq=False)
class VectorField:
    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.where(self.grid.mask, np.asarray(self.u, dtype=float), 0.0)
        self.v = np.where(self.grid.mask, np.asarray(self.v, dtype=float), 0.0)
        inside = self.grid.mask
        if not (np.isfinite(self.u[inside]).all() and np.isfinite(self.v[inside]).all()):
            raise ConfigurationError("vector field has non-finite interior values")

    def magnitude(self):
        return np.hypot(self.u, self.v)


@dataclass(frozen=True)
class BoundaryChart:
    """Collar chart Gamma(x', x_n) = gamma(x') + x_n nu(x').

    ``gamma`` maps the boundary parameter (angle of the ray cast from the
    interior anchor) to a shore point; ``nu`` is the inward unit normal
    grad phi / |grad phi| there; ``delta`` is the collar width.  ``scale``
    is the mean anchor-to-shore distance, a resolution-independent length
    used to place trace-sampling depths.
    """

    gamma: Callable
    nu: Callable
    delta: float
    period: float = 2.0 * np.pi
    scale: float = 1.0


def boundary_chart(profile, delta, anchor=(0.0, 0.0), r_max=None):
    """Chart built by casting rays from an interior anchor to the zero set.

    Works for domains star-shaped about ``anchor``; the built-in disk and
    ellipse qualify with the default anchor.
    """
    ax, ay = float(anchor[0]), float(anchor[1])
    if profile.defining.eval(np.float64(ax), np.float64(ay)) <= 0:
        raise ConfigurationError("chart anchor must lie inside the basin")
    if delta <= 0:
        raise ConfigurationError("collar width must be positive")
    if r_max is None:
        bbox = profile.defining.default_bbox
        r_max = 4.0 if bbox is None else float(np.hypot(bbox[1] - bbox[0], bbox[3] - bbox[2]))

    def shore_point(t):
        c, s = np.cos(t), np.sin(t)

        def along(r):
            return float(profile.defining.eval(ax + r * c, ay + r * s))

        hi = r_max
        # expand/shrink until a sign change brackets the shore
        while along(hi) > 0:
            hi *= 1.5
            if hi > 1e6:
                raise ConfigurationError("ray from anchor never leaves the basin")
        r = brentq(along, 0.0, hi, xtol=1e-14, rtol=8.9e-16)
        return np.array([ax + r * c, ay + r * s])

    def gamma(t):
        t = float(t)
        return shore_point(t)

    def nu(t):
        p = gamma(t)
        gx, gy = profile.defining.grad(p[0], p[1])
        norm = float(np.hypot(gx, gy))
        if norm <= 0:
            raise ConfigurationError("degenerate shore normal")
        return np.array([gx / norm, gy / norm])

    anchor_arr = np.array([ax, ay])
    scale = float(np.mean([np.linalg.norm(shore_point(t) - anchor_arr)
                           for t in np.linspace(0.0, 2.0 * np.pi, 32, endpoint=False)]))
    return BoundaryChart(gamma=gamma, nu=nu, delta=float(delta), scale=scale)


def chart_point(chart, x_prime, x_n):
    """Gamma(x', x_n) = gamma(x') + x_n nu(x'); x_n must stay in the collar."""
    if not 0.0 <= x_n <= chart.delta:
        raise ValueError(f"normal coordinate {x_n} outside collar [0, {chart.delta}]")
    return chart.gamma(x_prime) + x_n * chart.nu(x_prime)


# -- grid calculus helpers used by several modules -------------------------

def masked_gradient(grid, values):
    """Per-component gradient on masked cells: centered where both neighbors
    are interior, one-sided toward the available neighbor otherwise."""
    m = grid.mask
    h = grid.h
    v = np.where(m, values, 0.0)
    gx = np.zeros_like(v)
    gy = np.zeros_like(v)

    for axis, g in ((1, gx), (0, gy)):
        plus = np.zeros_like(m)
        minus = np.zeros_like(m)
        vp = np.zeros_like(v)
        vm = np.zeros_like(v)
        if axis == 1:
            plus[:, :-1] = m[:, 1:]
            minus[:, 1:] = m[:, :-1]
            vp[:, :-1] = v[:, 1:]
            vm[:, 1:] = v[:, :-1]
        else:
            plus[:-1, :] = m[1:, :]
            minus[1:, :] = m[:-1, :]
            vp[:-1, :] = v[1:, :]
            vm[1:, :] = v[:-1, :]
        both = m & plus & minus
        only_p = m & plus & ~minus
        only_m = m & ~plus & minus
        g[both] = (vp[both] - vm[both]) / (2.0 * h)
        g[only_p] = (vp[only_p] - v[only_p]) / h
        g[only_m] = (v[only_m] - vm[only_m]) / h
    return gx, gy


def interp_bilinear(grid, values, points):
    """Mask-aware bilinear interpolation of a cell-centered array.

    Corner weights of exterior cells are dropped and the rest renormalized;
    returns nan where no interior corner is available.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    gx = (pts[:, 0] - (grid.x0 + 0.5 * grid.h)) / grid.h
    gy = (pts[:, 1] - (grid.y0 + 0.5 * grid.h)) / grid.h
    i0 = np.clip(np.floor(gx).astype(int), 0, grid.nx - 2)
    j0 = np.clip(np.floor(gy).astype(int), 0, grid.ny - 2)
    fx = np.clip(gx - i0, 0.0, 1.0)
    fy = np.clip(gy - j0, 0.0, 1.0)

    out = np.zeros(len(pts))
    wsum = np.zeros(len(pts))
    for dj, di, w in ((0, 0, (1 - fx) * (1 - fy)), (0, 1, fx * (1 - fy)),
                      (1, 0, (1 - fx) * fy), (1, 1, fx * fy)):
        jj, ii = j0 + dj, i0 + di
        inside = grid.mask[jj, ii]
        w_eff = np.where(inside, w, 0.0)
        out += w_eff * values[jj, ii]
        wsum += w_eff
    with np.errstate(invalid="ignore", divide="ignore"):
        res = out / wsum
    res[wsum < 1e-12] = np.nan
    return res


def lp_norm(grid, values, p):
    """Discrete L^p norm over masked cells: (sum |v|^p h^2)^(1/p); max for p=inf."""
    v = np.abs(values[grid.mask])
    if np.isinf(p):
        return float(v.max()) if v.size else 0.0
    return float((np.sum(v ** p) * grid.h**2) ** (1.0 / p))
