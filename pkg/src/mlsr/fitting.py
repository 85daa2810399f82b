"""Power-law fits of peak emission intensity against atom number.

Fits ``I(N) = beta * N^alpha + c`` with a damped Gauss-Newton iteration.
The starting point comes from a log-log linear regression after subtracting
``c0 = 0.9 * min(I)``; the damping uses Levenberg-Marquardt scaling (lambda
times the diagonal of J^T J), which makes the whole iteration exactly
equivariant under rescaling the intensities.  Damping is halved after every
accepted step and increased tenfold on rejection, capped at 200 iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScalingFit:
    """Result of a power-law fit: I(N) ~= beta * N^alpha + c."""

    beta: float
    alpha: float
    c: float
    residual_rms: float
    points: tuple[tuple[float, float], ...]


def _sse(theta: np.ndarray, n: np.ndarray, i: np.ndarray) -> float:
    beta, alpha, c = theta
    r = beta * n**alpha + c - i
    return float(r @ r)


def fit_power_law(points) -> ScalingFit:
    """Fit ``beta * N^alpha + c`` to (N, I) pairs.

    Needs at least four points with distinct positive N and positive I.
    Constant intensities leave alpha unidentifiable and raise.
    """
    pts = [(float(n), float(i)) for n, i in points]
    if len(pts) < 4:
        raise ValueError("need at least four (N, I) points to identify beta, alpha, c")
    n = np.array([p[0] for p in pts])
    i = np.array([p[1] for p in pts])
    if np.any(n <= 0) or len(set(n.tolist())) != len(n):
        raise ValueError("N values must be positive and distinct")
    if np.any(i <= 0):
        raise ValueError("intensities must be positive")
    spread = i.max() - i.min()
    if spread <= 1e-12 * max(1.0, abs(i.max())):
        raise ValueError("intensities are constant: alpha is unidentifiable")

    # Log-log starting point after floor subtraction.
    c0 = 0.9 * i.min()
    x = np.log(n)
    y = np.log(i - c0)
    alpha0, logbeta0 = np.polyfit(x, y, 1)
    theta = np.array([np.exp(logbeta0), alpha0, c0])

    lam = 1e-3
    sse = _sse(theta, n, i)
    for _ in range(200):
        beta, alpha, _ = theta
        na = n**alpha
        r = beta * na + theta[2] - i
        jac = np.column_stack([na, beta * na * np.log(n), np.ones_like(n)])
        jtj = jac.T @ jac
        jtr = jac.T @ r
        damped = jtj + lam * np.diag(np.diag(jtj))
        try:
            delta = np.linalg.solve(damped, jtr)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        candidate = theta - delta
        cand_sse = _sse(candidate, n, i)
        if cand_sse < sse:
            improvement = sse - cand_sse
            theta, sse = candidate, cand_sse
            lam *= 0.5
            # Relative-only cutoff: an absolute term would break scale
            # equivariance for intensities far from unit magnitude.
            if improvement <= 1e-15 * sse:
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                break

    return ScalingFit(
        beta=float(theta[0]),
        alpha=float(theta[1]),
        c=float(theta[2]),
        residual_rms=float(np.sqrt(sse / len(n))),
        points=tuple(pts),
    )
