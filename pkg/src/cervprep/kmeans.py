"""Lloyd K-means with seeded initialisation and an assignment-equality stop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INITS = ("random-points", "kmeanspp")
_INIT_ALIASES = {"random": "random-points", "kmeans++": "kmeanspp"}


@dataclass(frozen=True)
class KmeansConfig:
    k: int = 2
    init: str = "random-points"
    seed: int = 0
    max_iters: int = 100

    def __post_init__(self):
        init = _INIT_ALIASES.get(self.init, self.init)
        if init not in INITS:
            raise ValueError(f"unknown init {self.init!r}")
        object.__setattr__(self, "init", init)
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class ClusterModel:
    k: int
    means: np.ndarray
    assignments: np.ndarray
    iterations: int
    wcss: float
    converged: bool = True
    # WCSS after every assignment step, in order
    history: list[float] = field(default_factory=list)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"points must be an (n, d) array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite values")
    return x


def _sq_dists(x: np.ndarray, means: np.ndarray) -> np.ndarray:
    # explicit differences rather than the |x|^2 - 2xm + |m|^2 expansion: exact ties stay ties
    d = np.zeros((x.shape[0], means.shape[0]))
    for j in range(x.shape[1]):
        diff = x[:, j, None] - means[None, :, j]
        d += diff * diff
    return d


def assign_nearest(point, means) -> int:
    """Index of the nearest mean by squared distance; ties go to the lowest index."""
    p = np.atleast_1d(np.asarray(point, dtype=np.float64))
    m = _as_points(means)
    if m.shape[0] == 0:
        raise ValueError("means must be non-empty")
    if m.shape[1] != p.size:
        raise ValueError(f"point has dimension {p.size}, means have {m.shape[1]}")
    return int(np.argmin(_sq_dists(p[None, :], m)[0]))


def assign_all(points, means) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-mean index for every point plus each point's squared distance to it."""
    x, m = _as_points(points), _as_points(means)
    if x.shape[1] != m.shape[1]:
        raise ValueError(f"points have dimension {x.shape[1]}, means have {m.shape[1]}")
    d = _sq_dists(x, m)
    a = np.argmin(d, axis=1)
    return a, d[np.arange(x.shape[0]), a]


def update_means(points, assignments, k: int, previous=None) -> np.ndarray:
    """Componentwise average per cluster; an empty cluster keeps its ``previous`` mean."""
    x = _as_points(points)
    a = np.asarray(assignments, dtype=np.intp)
    counts = np.bincount(a, minlength=k)
    means = np.zeros((k, x.shape[1]))
    for j in range(x.shape[1]):
        means[:, j] = np.bincount(a, weights=x[:, j], minlength=k)
    empty = counts == 0
    if empty.any():
        if previous is None:
            raise ValueError("an empty cluster needs a previous mean to keep")
        means[empty] = _as_points(previous)[empty]
    nz = ~empty
    means[nz] /= counts[nz, None]
    return means


def _init_means(x: np.ndarray, cfg: KmeansConfig, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    if cfg.init == "random-points":
        return x[rng.choice(n, size=cfg.k, replace=False)].copy()
    chosen = [int(rng.integers(n))]
    d = _sq_dists(x, x[chosen])[:, 0]
    for _ in range(1, cfg.k):
        total = d.sum()
        if total <= 0:
            # every point coincides with a chosen centre; fall back to unused indices
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        else:
            nxt = int(rng.choice(n, p=d / total))
        chosen.append(nxt)
        d = np.minimum(d, _sq_dists(x, x[[nxt]])[:, 0])
    return x[chosen].copy()


def kmeans(points, cfg: KmeansConfig | None = None, initial_means=None) -> ClusterModel:
    """Alternate nearest-mean assignment and mean update until assignments stop changing.

    ``initial_means`` bypasses the seeded initialisation.
    """
    cfg = cfg or KmeansConfig()
    x = _as_points(points)
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot cluster an empty point set")
    if initial_means is not None:
        means = _as_points(initial_means).copy()
        if means.shape[1] != x.shape[1]:
            raise ValueError("initial means have the wrong dimension")
        k = means.shape[0]
    else:
        k = int(cfg.k)
        if k > n:
            raise ValueError(f"k={k} exceeds the number of points ({n})")
        means = _init_means(x, cfg, np.random.default_rng(cfg.seed))

    assign, d = assign_all(x, means)
    history = [float(d.sum())]
    ic = 1
    converged = False
    while ic < cfg.max_iters:
        means = update_means(x, assign, k, previous=means)
        new_assign, d = assign_all(x, means)
        ic += 1
        history.append(float(d.sum()))
        if np.array_equal(new_assign, assign):
            converged = True
            break
        assign = new_assign
    if not converged:
        # the loop ended on the guard: make means consistent with the final assignment
        means = update_means(x, assign, k, previous=means)
        d = _sq_dists(x, means)[np.arange(n), assign]
    return ClusterModel(
        k=k,
        means=means,
        assignments=assign.astype(np.int64),
        iterations=ic,
        wcss=float(d.sum()),
        converged=converged,
        history=history,
    )
