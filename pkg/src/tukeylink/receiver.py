"""Maximum-likelihood block detection over a finite transmit set.

Given the integrate-and-dump outputs of one block, every candidate block is
scored by its exact Gaussian log density.  The observation coordinates are
conditionally independent, so the density factors into per-coordinate
normals whose means and variances are tabulated once per candidate.  The
variances depend on the candidate (shot noise scales with signal energy),
which is why minimum-distance detection is not equivalent to the
likelihood rule implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classes import SymbolBlockSet
from .photodetector import NoiseModel, Observation, analytic_moments

__all__ = [
    "LikelihoodContext",
    "log_likelihood",
    "log_likelihoods",
    "ml_detect",
    "ml_detect_batch",
]

_LOG_TWO_PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class LikelihoodContext:
    """Per-candidate Gaussian observation statistics, fixed at construction.

    ``y_mean``/``y_var`` have shape (M, n) and ``z_mean``/``z_var`` have
    shape (M, n-1), one row per candidate block.  Coordinates whose
    integration window has zero width carry neither signal nor noise: the
    symbol-centered outputs vanish at roll-off 1 and the overlap outputs
    vanish at roll-off 0.  Those are flagged inactive and skipped by every
    scoring routine; all remaining variances must be strictly positive.

    Instances are immutable and safe to share across worker threads.
    """

    blocks: SymbolBlockSet
    beta: float
    T: float
    noise: NoiseModel
    y_mean: np.ndarray
    y_var: np.ndarray
    z_mean: np.ndarray
    z_var: np.ndarray
    y_active: bool
    z_active: bool

    @classmethod
    def from_blocks(cls, blocks: SymbolBlockSet, beta: float, T: float,
                    noise: NoiseModel) -> "LikelihoodContext":
        """Tabulate the back-to-back observation moments of every block.

        Any received-power scaling (launch power, link loss) must already
        be applied to the block amplitudes.
        """
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {beta}")
        if T <= 0.0:
            raise ValueError("symbol period must be positive")
        y_mean, y_var, z_mean, z_var = analytic_moments(blocks.blocks, beta, T, noise)
        y_active = beta < 1.0
        z_active = beta > 0.0 and blocks.block_length > 1
        if y_active and not np.all(y_var > 0.0):
            raise ValueError("nonpositive variance on a symbol-centered output; "
                             "need thermal noise or nonzero symbol energies")
        if z_active and not np.all(z_var > 0.0):
            raise ValueError("nonpositive variance on an overlap output; "
                             "need thermal noise or nonzero overlap energies")
        return cls(blocks, beta, T, noise, y_mean, y_var, z_mean, z_var,
                   y_active, z_active)

    @property
    def num_blocks(self) -> int:
        return self.blocks.num_blocks

    @property
    def block_length(self) -> int:
        return self.blocks.block_length


def _check_dims(ctx: LikelihoodContext, y: np.ndarray, z: np.ndarray):
    n = ctx.block_length
    if y.shape[-1] != n or z.shape[-1] != n - 1:
        raise ValueError(
            f"observation shape {y.shape[-1]}/{z.shape[-1]} does not match "
            f"block length {n}")


def _quadratic_scores(obs: np.ndarray, mean: np.ndarray, var: np.ndarray):
    """Sum of Gaussian log densities over the last axis, for every candidate.

    ``obs`` is (..., m) and ``mean``/``var`` are (M, m); returns (..., M).
    Expanding the square turns the evaluation into three inner products
    against per-candidate tables, so no (batch, M, m) intermediate is built.
    """
    inv = 1.0 / var
    const = -0.5 * np.sum(np.log(var) + _LOG_TWO_PI, axis=-1)
    const -= 0.5 * np.sum(mean**2 * inv, axis=-1)
    return const + obs @ (mean * inv).T - 0.5 * (obs**2) @ inv.T


def log_likelihoods(y, z, ctx: LikelihoodContext) -> np.ndarray:
    """Log density of the observation under every candidate block.

    ``y`` is (..., n) and ``z`` is (..., n-1) with arbitrary shared batch
    dimensions; the result has shape (..., M).  This is the workhorse for
    detection and for the mutual-information mixture.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    _check_dims(ctx, y, z)
    out = np.zeros(np.broadcast_shapes(y.shape[:-1], z.shape[:-1])
                   + (ctx.num_blocks,))
    if ctx.y_active:
        out += _quadratic_scores(y, ctx.y_mean, ctx.y_var)
    if ctx.z_active:
        out += _quadratic_scores(z, ctx.z_mean, ctx.z_var)
    return out


def log_likelihood(obs: Observation, d: int, ctx: LikelihoodContext) -> float:
    """Natural-log density of one observation under candidate ``d``."""
    y = np.asarray(obs.y, dtype=float)
    z = np.asarray(obs.z, dtype=float)
    _check_dims(ctx, y, z)
    if not 0 <= d < ctx.num_blocks:
        raise ValueError(f"block index {d} outside 0..{ctx.num_blocks - 1}")
    total = 0.0
    if ctx.y_active:
        total += -0.5 * np.sum(np.log(2.0 * np.pi * ctx.y_var[d])
                               + (y - ctx.y_mean[d]) ** 2 / ctx.y_var[d])
    if ctx.z_active:
        total += -0.5 * np.sum(np.log(2.0 * np.pi * ctx.z_var[d])
                               + (z - ctx.z_mean[d]) ** 2 / ctx.z_var[d])
    return float(total)


def ml_detect(obs: Observation, ctx: LikelihoodContext) -> int:
    """Most likely block index for one observation.

    Exhaustive search over all M candidates; ties resolve to the lowest
    index.
    """
    return int(np.argmax(log_likelihoods(obs.y, obs.z, ctx)))


def ml_detect_batch(y, z, ctx: LikelihoodContext) -> np.ndarray:
    """Vectorized ``ml_detect`` on batches of raw observation arrays."""
    return np.argmax(log_likelihoods(y, z, ctx), axis=-1)
