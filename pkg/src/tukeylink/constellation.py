"""Signal constellations for the square-law link: concentric ring/phase sets
and a conventional 16-QAM reference grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Constellation", "ring_phase", "qam16", "scale_to_power", "dbm_to_watts"]


@dataclass(frozen=True)
class Constellation:
    """Ordered set of complex symbol amplitudes in sqrt(W) with a name tag."""

    points: np.ndarray
    name: str

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("constellation must be a nonempty point sequence")
        if np.unique(pts).size != pts.size:
            raise ValueError("constellation points must be distinct")

    def __len__(self) -> int:
        return self.points.size

    @property
    def average_power(self) -> float:
        """Mean of |c|^2 over the points, in watts."""
        return float(np.mean(np.abs(self.points) ** 2))


def ring_phase(num_rings: int, num_phases: int, radii=None,
               stagger: bool = False) -> Constellation:
    """Ring/phase constellation: points r * exp(i 2 pi m / num_phases).

    Ordering is ring-major, phase-minor, with phase increasing
    counterclockwise from the positive real axis.  When ``radii`` is omitted
    the rings are equi-spaced at {1, 2, ..., num_rings} before any power
    scaling.  With ``stagger`` every odd-indexed ring is rotated by half a
    phase step (pi/num_phases), the usual amplitude/phase-shift-keying
    layout; the rotation changes which symbol pairs share an overlap-kernel
    value and therefore the square-law class structure.

    Parameters
    ----------
    num_rings, num_phases : int
        Grid dimensions; the constellation has num_rings * num_phases points.
    radii : sequence of float, optional
        Strictly increasing positive ring radii, one per ring.
    stagger : bool
        Rotate odd-indexed rings by pi/num_phases (default False).
    """
    if num_rings < 1 or num_phases < 1:
        raise ValueError("need at least one ring and one phase")
    if radii is None:
        radii = np.arange(1, num_rings + 1, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if radii.size != num_rings:
        raise ValueError(f"expected {num_rings} radii, got {radii.size}")
    if np.any(radii <= 0.0):
        raise ValueError("ring radii must be positive")
    if np.any(np.diff(radii) <= 0.0):
        raise ValueError("ring radii must be strictly increasing")
    phases = np.exp(2j * np.pi * np.arange(num_phases) / num_phases)
    points = radii[:, None] * phases[None, :]
    if stagger:
        points[1::2] *= np.exp(1j * np.pi / num_phases)
    tag = "staggered " if stagger else ""
    return Constellation(points.ravel(), f"{tag}{num_rings}-ring/{num_phases}-ary")


def qam16() -> Constellation:
    """Square 16-QAM on the raw grid {-3, -1, 1, 3}^2 (average power 10)."""
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    points = (levels[:, None] + 1j * levels[None, :]).ravel()
    return Constellation(points, "16-QAM")


def scale_to_power(c: Constellation, power: float) -> Constellation:
    """Uniformly rescale a constellation so its average power is ``power`` watts."""
    if power <= 0.0:
        raise ValueError("target power must be positive")
    factor = np.sqrt(power / c.average_power)
    return Constellation(c.points * factor, c.name)


def dbm_to_watts(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)
