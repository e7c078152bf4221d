"""Gauss-Legendre rules and half-line maps used by the Lifshitz and PAA integrals."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

PANEL_ORDER = 8


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and refinement budget for frequency integrals.

    Level ``n`` uses ``2**n`` equal Gauss panels per mapped dimension; the
    estimate is accepted once two successive levels agree to ``rel_tol``.
    """

    rel_tol: float = 1e-4
    max_levels: int = 9
    xi_transform: str = "rational"

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise DomainError("rel_tol must lie in (0, 1)")
        if self.max_levels < 4:
            raise DomainError("max_levels must be >= 4")
        if self.xi_transform not in ("rational", "log"):
            raise DomainError("xi_transform must be 'rational' or 'log'")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=64)
def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=64)
def composite_gl(panels: int, order: int = PANEL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule with ``panels`` equal panels on (0, 1)."""
    x, w = gauss_legendre_01(order)
    edges = np.arange(panels, dtype=float)[:, None] / panels
    nodes = (edges + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def half_line(t: np.ndarray, transform: str = "rational") -> tuple[np.ndarray, np.ndarray]:
    """Map t in (0, 1) onto (0, inf); returns (x, dx/dt)."""
    if transform == "rational":
        return t / (1.0 - t), 1.0 / (1.0 - t) ** 2
    if transform == "log":
        # x = exp(v), v = tan(pi (t - 1/2)): uniform in ln x near the middle and
        # smooth at both ends; v is clipped where the integrands have long vanished
        v = np.clip(np.tan(np.pi * (t - 0.5)), -40.0, 6.0)
        x = np.exp(v)
        return x, x * np.pi / np.cos(np.pi * (t - 0.5)) ** 2
    raise DomainError(f"unknown transform {transform!r}")


def refine_until(estimate, spec: QuadratureSpec, what: str = "integral", start: int = 1):
    """Evaluate ``estimate(level)`` at increasing levels until two agree.

    ``estimate`` may return a scalar or an array; array estimates converge
    when every entry does.
    """
    prev = None
    for level in range(start, spec.max_levels + 1):
        cur = np.asarray(estimate(level), dtype=float)
        if prev is not None:
            scale = np.maximum(np.abs(cur), np.finfo(float).tiny)
            if np.all(np.abs(cur - prev) <= spec.rel_tol * scale):
                return cur if cur.shape else float(cur)
        prev = cur
    worst = np.argmax(np.abs(cur - prev) / np.maximum(np.abs(cur), np.finfo(float).tiny))
    raise ConvergenceError(
        f"{what} did not reach rel_tol={spec.rel_tol:g} within {spec.max_levels} levels",
        (float(np.ravel(prev)[worst]), float(np.ravel(cur)[worst])),
    )
