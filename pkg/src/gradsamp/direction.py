"""Search directions built from a gradient bundle.

Two vectors are computed from the matrix ``G`` whose columns are the sampled
gradients:

* the *ideal vector*, whose i-th entry is the point of the interval
  ``[min_j G[i, j], max_j G[i, j]]`` nearest to zero, and
* the minimum-norm element of the convex hull of the columns, obtained from
  the simplex-constrained QP ``min 1/2 ||G lam||^2``.

The ideal vector never has a larger norm than the minimum-norm element, so it
can rule out approximate stationarity without touching the QP.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from gradsamp.errors import MaxIterationsExceeded, ZeroVector

QP_TOL = 1e-10
WEIGHT_FLOOR = 1e-14


@dataclass
class QPStats:
    """Per-run accumulator for QP solves."""

    count: int = 0
    time: float = 0.0
    fallbacks: int = 0


@dataclass
class DirectionResult:
    g: np.ndarray
    d: Optional[np.ndarray]
    kind: Literal["ideal", "steepest_approx"]
    lam: Optional[np.ndarray] = None
    qp_iterations: int = 0

    @property
    def g_norm(self) -> float:
        return float(np.linalg.norm(self.g))


def _as_matrix(bundle) -> np.ndarray:
    G = getattr(bundle, "grads", bundle)
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        G = G[:, None]
    if G.ndim != 2 or G.shape[1] < 1:
        raise ValueError("bundle must have at least one gradient column")
    return G


def normalize(g) -> np.ndarray:
    """Return the unit direction ``-g / ||g||``.

    Raises
    ------
    ZeroVector
        If ``g`` is the zero vector.
    """
    g = np.asarray(g, dtype=float)
    scale = float(np.max(np.abs(g))) if g.size else 0.0
    if not scale > 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    # rescale first so tiny (subnormal) entries do not underflow the norm
    u = g / scale
    return -u / np.linalg.norm(u)


def ideal_vector(bundle) -> np.ndarray:
    """Componentwise nearest-to-zero point of the bundle's interval hull.

    For row ``i`` with extremes ``lo = min_j G[i, j]`` and ``hi = max_j G[i, j]``
    the entry is ``(sign(lo) + sign(hi)) / 2 * min(|lo|, |hi|)``: zero when the
    interval straddles (or touches) zero, otherwise the endpoint closest to it.
    """
    G = _as_matrix(bundle)
    lo = G.min(axis=1)
    hi = G.max(axis=1)
    return 0.5 * (np.sign(lo) + np.sign(hi)) * np.minimum(np.abs(lo), np.abs(hi))


def ideal_direction(bundle) -> DirectionResult:
    g = ideal_vector(bundle)
    d = normalize(g) if np.any(g != 0.0) else None
    return DirectionResult(g=g, d=d, kind="ideal")


def qp_certificate_gap(G: np.ndarray, g: np.ndarray) -> float:
    """Largest violation of ``<g, G_j - g> >= 0`` over the columns."""
    return float(g @ g - np.min(G.T @ g))


def _affine_minimizer(G_S: np.ndarray, gram_S: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Weights of the min-norm point of the affine hull of the columns of ``G_S``.

    Uses the bordered KKT system on the Gram block when ``gram_S`` is given,
    otherwise a least-squares solve on column differences.
    """
    k = G_S.shape[1]
    if k == 1:
        return np.ones(1)
    if gram_S is None:
        # difference form: min ||p0 + D a||, conditioning of D rather than D^T D
        p0 = G_S[:, 0]
        D = G_S[:, 1:] - p0[:, None]
        a, *_ = np.linalg.lstsq(D, -p0, rcond=None)
        w = np.concatenate(([1.0 - a.sum()], a))
        return w if np.all(np.isfinite(w)) else None
    kkt = np.empty((k + 1, k + 1))
    kkt[:k, :k] = gram_S
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    kkt[k, k] = 0.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return None
    w = sol[:k]
    if not np.all(np.isfinite(w)):
        return None
    s = w.sum()
    if not np.isfinite(s) or abs(s) < 1e-300:
        return None
    return w / s


def _wolfe(G: np.ndarray, tol: float, weight_floor: float, max_iter: int, precise: bool = False):
    """Wolfe's minimum-norm-point algorithm.

    Returns ``(support, weights, iterations, converged)``. Stops early, without
    convergence, when the norm stalls for a few major cycles or a selected
    column is already in the corral (both are rounding artefacts).
    """
    sq = np.einsum("ij,ij->j", G, G)
    gram = None if precise else G.T @ G
    j0 = int(np.argmin(sq))
    S = [j0]
    lam = np.array([1.0])
    x = G[:, j0].copy()
    best = float(x @ x)
    stalls = 0
    it = 0
    while it < max_iter:
        it += 1
        xx = float(x @ x)
        dots = G.T @ x
        j = int(np.argmin(dots))
        if xx - dots[j] <= tol * (1.0 + xx):
            return S, lam, it, True
        if j in S:
            return S, lam, it, False
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            w = _affine_minimizer(G[:, S], None if precise else gram[np.ix_(S, S)])
            if w is None:
                return S, lam, it, False
            if np.all(w > weight_floor):
                lam = w
                break
            # walk from lam toward w until the first weight hits zero
            denom = lam - w
            mask = (w <= weight_floor) & (denom > 0.0)
            theta = float(np.min(lam[mask] / denom[mask])) if np.any(mask) else 0.0
            theta = min(max(theta, 0.0), 1.0)
            lam = lam + theta * (w - lam)
            keep = lam > weight_floor
            if not np.any(keep):
                return S, lam, it, False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
        x = G[:, S] @ lam
        nx = float(x @ x)
        if nx < best * (1.0 - 1e-14):
            best = nx
            stalls = 0
        else:
            stalls += 1
            if stalls >= 3:
                return S, lam, it, False
    return S, lam, it, False


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def _projected_gradient(G: np.ndarray, lam0: np.ndarray, tol: float, max_iter: int):
    # accelerated projected gradient on 1/2 ||G lam||^2 over the simplex
    L = float(np.linalg.norm(G, 2) ** 2)
    if L == 0.0:
        return lam0, True
    lam = lam0.copy()
    y = lam.copy()
    tk = 1.0
    for _ in range(max_iter):
        lam_next = project_simplex(y - (G.T @ (G @ y)) / L)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        y = lam_next + ((tk - 1.0) / t_next) * (lam_next - lam)
        lam, tk = lam_next, t_next
        g = G @ lam
        if qp_certificate_gap(G, g) <= tol * (1.0 + g @ g):
            return lam, True
    return lam, False


def min_norm_qp(
    bundle,
    tol: float = QP_TOL,
    stats: Optional[QPStats] = None,
    weight_floor: float = WEIGHT_FLOOR,
    max_iter: Optional[int] = None,
) -> DirectionResult:
    """Minimum-norm point of the convex hull of the bundle gradients.

    Solves ``min_lam 1/2 ||G lam||^2`` subject to ``lam >= 0, sum(lam) = 1``
    with Wolfe's algorithm; an accelerated projected-gradient method takes
    over if the affine subproblem becomes singular. The returned point
    satisfies ``<g, G_j - g> >= -tol * (1 + ||g||^2)`` for every column ``j``.

    Raises
    ------
    MaxIterationsExceeded
        If neither method reaches the optimality certificate.
    """
    G = _as_matrix(bundle)
    start = time.perf_counter()
    p = G.shape[1]
    if max_iter is None:
        max_iter = 20 * p + 100
    fell_back = False
    for precise in (False, True):
        S, w, iters, ok = _wolfe(G, tol, weight_floor, max_iter, precise=precise)
        lam = np.zeros(p)
        lam[S] = w
        g = G @ lam
        ok = ok or qp_certificate_gap(G, g) <= tol * (1.0 + g @ g)
        if ok:
            break
    if not ok:
        fell_back = True
        lam, ok = _projected_gradient(G, lam, tol, max_iter=200 * p + 10000)
        g = G @ lam
    if stats is not None:
        stats.count += 1
        stats.time += time.perf_counter() - start
        stats.fallbacks += int(fell_back)
    if not ok:
        raise MaxIterationsExceeded(
            f"min-norm QP did not certify within tolerance {tol:g} "
            f"(gap {qp_certificate_gap(G, g):.3e})"
        )
    d = normalize(g) if np.any(g != 0.0) else None
    return DirectionResult(g=g, d=d, kind="steepest_approx", lam=lam, qp_iterations=iters)
