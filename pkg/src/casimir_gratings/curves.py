"""Sampled force curves shared by the PFA, PAA and calibration code."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

PER_UNIT_CELL = "per_unit_cell"
PER_UNIT_LENGTH = "per_unit_length"
DEVICE_CELLS = 30


@dataclass(frozen=True)
class Discontinuity:
    """A step of ``height`` newtons in F at displacement ``d``."""

    d: float
    height: float


def _column(values, n, fill=np.nan):
    if values is None:
        return np.full(n, fill)
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise DomainError(f"column has {arr.size} entries, expected {n}")
    return arr


@dataclass(frozen=True, eq=False)
class ForceCurve:
    """Samples (d, F, F_grad, sigma_F) on a strictly increasing grid.

    Unknown entries are NaN. Forces follow the plotting convention of the
    grating problem: positive F pulls the movable body towards +y.
    """

    d: np.ndarray
    F: np.ndarray
    F_grad: np.ndarray
    sigma_F: np.ndarray
    sigma_grad: np.ndarray
    per_unit: str = PER_UNIT_CELL
    n_cells: int = DEVICE_CELLS
    thickness: float | None = None
    discontinuities: tuple[Discontinuity, ...] = ()

    def __post_init__(self):
        d = np.array(self.d, dtype=float).reshape(-1)
        n = d.size
        if n == 0:
            raise DomainError("a force curve needs at least one sample")
        if not np.all(np.isfinite(d)):
            raise DomainError("displacements must be finite")
        if n > 1 and not np.all(np.diff(d) > 0):
            raise DomainError("displacements must be strictly increasing")
        cols = {}
        for name in ("F", "F_grad", "sigma_F", "sigma_grad"):
            arr = _column(getattr(self, name), n)
            arr.flags.writeable = False
            cols[name] = arr
        for name in ("sigma_F", "sigma_grad"):
            if np.any(cols[name] < 0):
                raise DomainError(f"{name} must be >= 0")
        if self.per_unit not in (PER_UNIT_CELL, PER_UNIT_LENGTH):
            raise DomainError(f"unknown normalisation {self.per_unit!r}")
        if self.n_cells < 1:
            raise DomainError("n_cells must be >= 1")
        d.flags.writeable = False
        object.__setattr__(self, "d", d)
        for name, arr in cols.items():
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "discontinuities", tuple(self.discontinuities))

    @classmethod
    def from_arrays(cls, d, F=None, F_grad=None, sigma_F=None, sigma_grad=None, **kw) -> "ForceCurve":
        n = np.size(d)
        if sigma_F is None:
            sigma_F = np.zeros(n)
        if sigma_grad is None:
            sigma_grad = np.zeros(n)
        return cls(d, F, F_grad, sigma_F, sigma_grad, **kw)

    def __len__(self) -> int:
        return self.d.size

    @property
    def samples(self) -> list[tuple[float, float, float, float]]:
        return list(zip(*(a.tolist() for a in (self.d, self.F, self.F_grad, self.sigma_F))))

    @property
    def has_gradient(self) -> bool:
        return bool(np.all(np.isfinite(self.F_grad)))

    def with_(self, **changes) -> "ForceCurve":
        return replace(self, **changes)

    def scaled(self, factor: float) -> "ForceCurve":
        """Multiply forces, gradients and uncertainties by ``factor``."""
        a = abs(factor)
        jumps = tuple(Discontinuity(j.d, j.height * factor) for j in self.discontinuities)
        return replace(
            self,
            F=self.F * factor,
            F_grad=self.F_grad * factor,
            sigma_F=self.sigma_F * a,
            sigma_grad=self.sigma_grad * a,
            discontinuities=jumps,
        )

    def to_per_unit_length(self) -> "ForceCurve":
        if self.per_unit == PER_UNIT_LENGTH:
            return self
        if not self.thickness:
            raise DomainError("thickness unknown; cannot convert to per unit length")
        return replace(self.scaled(1.0 / self.thickness), per_unit=PER_UNIT_LENGTH)

    def to_per_unit_cell(self) -> "ForceCurve":
        if self.per_unit == PER_UNIT_CELL:
            return self
        if not self.thickness:
            raise DomainError("thickness unknown; cannot convert to per unit cell")
        return replace(self.scaled(self.thickness), per_unit=PER_UNIT_CELL)

    def device_total(self) -> "ForceCurve":
        """Force on the whole device of ``n_cells`` identical cells."""
        return self.to_per_unit_cell().scaled(self.n_cells)
