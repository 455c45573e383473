"""Uniform ball sampling and gradient bundles.

Random numbers come from numpy's PCG64 generator; one generator per run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from gradsamp.errors import NondifferentiablePoint, NondifferentiableSample


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def run_streams(seed: int):
    """Independent (start-point, sampling) generators derived from one seed."""
    start_ss, sample_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(start_ss)), np.random.Generator(np.random.PCG64(sample_ss))


def sample_unit_ball(rng: np.random.Generator, n: int, size: Optional[int] = None) -> np.ndarray:
    """Uniform draw(s) from the closed unit ball in R^n.

    A normalized standard Gaussian gives the direction and ``U**(1/n)`` the
    radius, so no rejection is needed. Returns shape ``(n,)`` or ``(size, n)``.
    """
    if n < 1:
        raise ValueError("dimension must be at least 1")
    count = 1 if size is None else size
    z = rng.standard_normal((count, n))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; map it to the center
    z = np.divide(z, norms, out=np.zeros_like(z), where=norms > 0)
    r = rng.random((count, 1)) ** (1.0 / n)
    u = z * r
    return u[0] if size is None else u


@dataclass
class GradientBundle:
    center: np.ndarray
    radius: float
    points: np.ndarray  # (m+1, n), row 0 is the center
    grads: np.ndarray  # (n, m+1), column j is the gradient at points[j]

    @property
    def m(self) -> int:
        return self.points.shape[0] - 1


def build_bundle(
    problem,
    x,
    eps: float,
    m: int,
    rng: np.random.Generator,
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    center_grad: Optional[np.ndarray] = None,
    grad_rows: Optional[Callable[[np.ndarray], tuple]] = None,
) -> GradientBundle:
    """Sample ``m`` points from the ball ``B(x, eps)`` and collect gradients.

    Gradients come from ``grad_rows`` (rows of points to ``(grads, flags)``)
    if given, else from a per-point ``grad``, else from
    ``problem.gradients``. A precomputed ``center_grad`` is reused rather than
    re-evaluated.

    Raises
    ------
    NondifferentiableSample
        If any sampled point is flagged nondifferentiable.
    """
    from gradsamp.problems import gradient

    if eps <= 0:
        raise ValueError("sampling radius must be positive")
    if m < 1:
        raise ValueError("sample size must be at least 1")
    x = np.asarray(x, dtype=float)
    n = x.size
    points = np.empty((m + 1, n))
    points[0] = x
    points[1:] = x + eps * sample_unit_ball(rng, n, size=m)
    G = np.empty((n, m + 1))
    if grad is not None and grad_rows is None:
        G[:, 0] = grad(x) if center_grad is None else center_grad
        for j in range(1, m + 1):
            try:
                G[:, j] = grad(points[j])
            except NondifferentiablePoint as exc:
                raise NondifferentiableSample(points[j], "sampled point is not differentiable") from exc
    else:
        if grad_rows is None:
            grad_rows = problem.gradients
        if center_grad is None:
            G[:, 0] = gradient(problem, x) if grad is None else grad(x)
        else:
            G[:, 0] = center_grad
        rows, flags = grad_rows(points[1:])
        if np.any(flags):
            bad = points[1 + int(np.argmax(flags))]
            raise NondifferentiableSample(bad, "sampled point is not differentiable")
        G[:, 1:] = rows.T
    return GradientBundle(center=x.copy(), radius=float(eps), points=points, grads=G)
