"""Harmonic inpainting: fill masked pixels by solving the discrete Laplace equation.

Masked pixels are the unknowns; every unmasked pixel is fixed Dirichlet data.
The operator is the 5-point stencil with unit spacing. Where the stencil of a
masked pixel leaves the frame, the missing neighbour is mirrored back into the
image (zero-flux at the frame edge).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imagecore import as_mask, as_rgb8, merge_planes, split_planes, to_byte

log = logging.getLogger(__name__)

METHODS = ("jacobi", "gauss-seidel", "sor")
_ALIASES = {"gs": "gauss-seidel", "gauss_seidel": "gauss-seidel", "seidel": "gauss-seidel"}
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class SolverConfig:
    method: str = "sor"
    omega: float = 1.9
    tol: float = 1e-4
    max_iters: int = 20000

    def __post_init__(self):
        method = _ALIASES.get(self.method, self.method)
        if method not in METHODS:
            raise ValueError(f"unknown solver method {self.method!r}")
        object.__setattr__(self, "method", method)
        if method == "sor" and not 0.0 < self.omega < 2.0:
            raise ValueError(f"SOR omega must lie in (0, 2), got {self.omega}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")

    @property
    def relaxation(self) -> float:
        return self.omega if self.method == "sor" else 1.0


@dataclass(frozen=True)
class SolveStats:
    method: str
    iterations: int
    final_residual: float
    converged: bool

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class PoissonRhs:
    """Source term ``f`` of ``-Δu = f`` sampled on the pixel grid."""

    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        if f.ndim != 2 or not np.all(np.isfinite(f)):
            raise ValueError("Poisson right-hand side must be a finite 2-D array")
        object.__setattr__(self, "f", f)


@dataclass(frozen=True)
class FundamentalSolutionParams:
    n: int = 2
    c1: float = 1.0
    c2: float = 0.0

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError("dimension n must be >= 2")


def discrete_laplacian(plane, x: int, y: int) -> float:
    u = np.asarray(plane, dtype=np.float64)
    h, w = u.shape
    if not (1 <= x <= w - 2 and 1 <= y <= h - 2):
        raise ValueError(f"({x}, {y}) is on the border of a {w}x{h} plane")
    return float((u[y, x - 1] + u[y, x + 1]) + (u[y - 1, x] + u[y + 1, x]) - 4.0 * u[y, x])


def _reflect(i: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(i)
    i = np.where(i < 0, -i, i)
    return np.where(i > n - 1, 2 * (n - 1) - i, i)


class _Stencil:
    """Neighbour tables for the masked pixels of one plane."""

    def __init__(self, mask: np.ndarray):
        h, w = mask.shape
        self.shape = (h, w)
        self.idx = np.flatnonzero(mask)
        ys, xs = np.divmod(self.idx, w)
        self.sentinel = h * w  # index of an always-zero slot appended to the plane
        nbs = []
        n_self = np.zeros(self.idx.size, dtype=np.int64)
        for dx, dy in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nx = _reflect(xs + dx, w)
            ny = _reflect(ys + dy, h)
            nb = ny * w + nx
            is_self = nb == self.idx
            n_self += is_self
            nbs.append(np.where(is_self, self.sentinel, nb))
        self.nb = np.stack(nbs)
        # a neighbour that reflects onto the pixel itself moves to the diagonal
        self.diag = (4 - n_self).astype(np.float64)
        self.red = ((xs + ys) % 2) == 0

    def neighbour_sum(self, u: np.ndarray, sel=slice(None)) -> np.ndarray:
        nb = self.nb[:, sel]
        return (u[nb[0]] + u[nb[1]]) + (u[nb[2]] + u[nb[3]])

    def residual(self, u: np.ndarray, f: np.ndarray) -> float:
        r = self.neighbour_sum(u) + f - self.diag * u[self.idx]
        return float(np.max(np.abs(r))) if r.size else 0.0


def mask_components(mask) -> tuple[np.ndarray, int]:
    """4-connected labelling of the masked pixels."""
    labels, n = ndimage.label(as_mask(mask), structure=_FOUR)
    return labels, n


def component_boundary_values(plane, mask) -> tuple[np.ndarray, list[np.ndarray]]:
    """Labels of the mask components and the Dirichlet values on each one's ring.

    A ring pixel touching two components is listed for both.
    """
    u = np.asarray(plane, dtype=np.float64)
    m = as_mask(mask, u.shape)
    labels, n = mask_components(m)
    h, w = m.shape
    pairs = []
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ys, xs = np.nonzero(m)
        ny, nx = ys + dy, xs + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        ys, xs, ny, nx = ys[ok], xs[ok], ny[ok], nx[ok]
        outside = ~m[ny, nx]
        pairs.append(np.stack([labels[ys, xs][outside], (ny * w + nx)[outside]], axis=1))
    pairs = np.unique(np.concatenate(pairs), axis=0) if pairs else np.zeros((0, 2), dtype=np.int64)
    flat = u.ravel()
    values = [flat[pairs[pairs[:, 0] == c, 1]] for c in range(1, n + 1)]
    return labels, values


def inpaint_plane(plane, mask, cfg: SolverConfig | None = None, rhs: PoissonRhs | None = None):
    """Solve ``-Δu = f`` on the masked pixels (``f = 0`` unless ``rhs`` is given).

    Returns the filled plane and a :class:`SolveStats`. Unmasked pixels are
    returned unchanged. Failure to reach ``cfg.tol`` within ``cfg.max_iters``
    is reported through ``stats.converged`` with the lowest-residual iterate.
    """
    cfg = cfg or SolverConfig()
    src = np.asarray(plane, dtype=np.float64)
    if src.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {src.shape}")
    if not np.all(np.isfinite(src)):
        raise ValueError("plane contains non-finite values")
    m = as_mask(mask, src.shape)
    if not m.any():
        return src.copy(), SolveStats(cfg.method, 0, 0.0, True)
    if m.all():
        raise ValueError("mask covers the entire plane; there is no boundary data to interpolate from")

    st = _Stencil(m)
    u = np.zeros(src.size + 1)
    u[:-1] = src.ravel()
    if rhs is None:
        f = np.zeros(st.idx.size)
    else:
        if rhs.f.shape != src.shape:
            raise ValueError(f"rhs shape {rhs.f.shape} does not match plane {src.shape}")
        f = rhs.f.ravel()[st.idx]

    # start each component at the mean of its own Dirichlet ring
    labels, ring_values = component_boundary_values(src, m)
    means = np.array([0.0] + [float(v.mean()) for v in ring_values])
    u[st.idx] = means[labels.ravel()[st.idx]]

    omega = cfg.relaxation
    colours = (st.red, ~st.red)
    res = st.residual(u, f)
    best_res, best_u = res, u[st.idx].copy()
    it = 0
    while res > cfg.tol and it < cfg.max_iters:
        if cfg.method == "jacobi":
            u[st.idx] = (st.neighbour_sum(u) + f) / st.diag
        else:
            for sel in colours:
                target = st.idx[sel]
                gs = (st.neighbour_sum(u, sel) + f[sel]) / st.diag[sel]
                u[target] = (1.0 - omega) * u[target] + omega * gs
        it += 1
        res = st.residual(u, f)
        if res < best_res:
            best_res, best_u = res, u[st.idx].copy()
    converged = best_res <= cfg.tol
    if not converged:
        u[st.idx] = best_u
        log.warning("%s did not reach tol %.3g in %d iterations (residual %.3g)", cfg.method, cfg.tol, it, best_res)
    return u[:-1].reshape(src.shape), SolveStats(cfg.method, it, best_res, converged)


def inpaint_image(image, mask, cfg: SolverConfig | None = None, grayscale: bool = False):
    """Inpaint each RGB channel independently with the same mask.

    With ``grayscale=True`` a single BT.601 luma plane is solved instead and the
    masked pixels of all three channels take its value.
    """
    arr = as_rgb8(image)
    m = as_mask(mask, arr.shape[:2])
    if grayscale:
        r, g, b = split_planes(arr)
        luma = 0.299 * r + 0.587 * g + 0.114 * b
        filled, stats = inpaint_plane(luma, m, cfg)
        out = arr.copy()
        out[m] = to_byte(filled)[m][:, None]
        return out, [stats]
    results = [inpaint_plane(p, m, cfg) for p in split_planes(arr)]
    out = merge_planes(*(p for p, _ in results))
    # unmasked bytes are copied verbatim rather than round-tripped
    out[~m] = arr[~m]
    return out, [s for _, s in results]


def fundamental_solution(p: FundamentalSolutionParams, x) -> float:
    """Radial harmonic function of ``|x|``: ``c1 ln r + c2`` in 2-D, ``c1 / ((2 - n) r^(n-2)) + c2`` above."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != p.n:
        raise ValueError(f"expected a point of dimension {p.n}, got {x.size}")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("the fundamental solution is undefined at the origin")
    if p.n == 2:
        return p.c1 * math.log(r) + p.c2
    return p.c1 / ((2 - p.n) * r ** (p.n - 2)) + p.c2


def verify_radial_harmonicity(p: FundamentalSolutionParams, h: float, inner: float, outer: float, sampler=None) -> float:
    """Max |5-point Laplacian| / h² of a 2-D function sampled on an annulus grid.

    ``sampler(x, y)`` overrides the sampled function (vectorised); by default
    the fundamental solution for ``p`` is used. Only grid points whose whole
    stencil lies in the closed annulus are scored.
    """
    if p.n != 2:
        raise ValueError("grid verification is two-dimensional (n = 2)")
    if inner <= 0:
        raise ValueError("annulus touches the origin")
    if not inner < outer:
        raise ValueError("inner radius must be smaller than outer radius")
    if not 0 < h < inner / 4:
        raise ValueError("grid spacing must satisfy 0 < h < inner / 4")
    m = int(math.ceil(outer / h)) + 1
    coords = np.arange(-m, m + 1) * h
    X, Y = np.meshgrid(coords, coords)
    R = np.hypot(X, Y)
    if sampler is None:
        with np.errstate(divide="ignore"):
            if p.c1 == 0:
                U = np.full_like(R, float(p.c2))
            else:
                U = p.c1 * np.log(R) + p.c2
    else:
        U = np.asarray(sampler(X, Y), dtype=np.float64)
    inside = (R >= inner) & (R <= outer)
    ok = inside[1:-1, 1:-1] & inside[:-2, 1:-1] & inside[2:, 1:-1] & inside[1:-1, :-2] & inside[1:-1, 2:]
    lap = (U[1:-1, :-2] + U[1:-1, 2:]) + (U[:-2, 1:-1] + U[2:, 1:-1]) - 4.0 * U[1:-1, 1:-1]
    return float(np.max(np.abs(lap[ok]))) / (h * h)
