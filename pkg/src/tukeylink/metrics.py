"""Monte Carlo estimators over the link: mutual information, bit error
rate, waveform power accounting, and the power sweeps that tie them to
received optical power.

Every estimator draws trials in fixed-size chunks, with chunk c seeded by
(root seed, c).  Worker threads only change which chunks run concurrently,
never the chunk contents or the inclusion rule, so results are bit-for-bit
reproducible at any thread count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .classes import SymbolBlockSet
from .constellation import dbm_to_watts
from .fiber import FiberParams, loss_factor, precompensate, ssfm_propagate
from .photodetector import (
    NoiseModel,
    draw_observations,
    field_moments,
    interval_integrals,
)
from .receiver import LikelihoodContext, log_likelihoods, ml_detect_batch
from .waveform import SampledField, TukeyShape, block_intervals, synthesize_block

__all__ = [
    "MiEstimate",
    "BerEstimate",
    "SweepResult",
    "block_set_power",
    "scale_blocks",
    "dbm_to_watts",
    "estimate_mi",
    "simulate_ber",
    "empirical_power",
    "power_decomposition",
    "propagated_block_moments",
    "mi_sweep",
    "ber_sweep",
]

_LN2 = math.log(2.0)
# 95% normal quantile, for the binomial confidence interval
_Z95 = 1.959963984540054

_POPCOUNT_TABLE = np.array([bin(i).count("1") for i in range(1 << 16)],
                           dtype=np.int64)


def block_set_power(blocks: SymbolBlockSet) -> float:
    """Average symbol power of a transmit set: mean of |x|^2 over all
    symbols of all blocks."""
    return float(np.mean(np.abs(blocks.blocks) ** 2))


def scale_blocks(blocks: SymbolBlockSet, target_watts: float) -> SymbolBlockSet:
    """Rescale a transmit set so its average symbol power is ``target_watts``."""
    if target_watts <= 0.0:
        raise ValueError("target power must be positive")
    factor = math.sqrt(target_watts / block_set_power(blocks))
    return SymbolBlockSet(blocks.blocks * factor, blocks.labels)


def _popcount(values: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(values).astype(np.int64)
    total = np.zeros(values.shape, dtype=np.int64)
    v = values.copy()
    for _ in range(4):
        total += _POPCOUNT_TABLE[(v & np.uint64(0xFFFF)).astype(np.int64)]
        v >>= np.uint64(16)
    return total


def _chunk_plan(trials: int, num_blocks: int, chunk: int | None):
    """Chunk sizes: bounded so the (chunk, M) likelihood matrix stays small."""
    if chunk is None:
        chunk = max(256, min(8192, (1 << 23) // max(num_blocks, 1)))
    sizes = [chunk] * (trials // chunk)
    if trials % chunk:
        sizes.append(trials % chunk)
    return sizes


def _gather_moments(moments, idx):
    y_mean, y_var, z_mean, z_var = moments
    return y_mean[idx], y_var[idx], z_mean[idx], z_var[idx]


@dataclass(frozen=True)
class MiEstimate:
    """Per-symbol mutual information estimate with its standard error."""

    bits_per_symbol: float
    std_error: float
    trials: int


@dataclass(frozen=True)
class BerEstimate:
    """Bit error rate with a 95% Wilson confidence half-width."""

    ber: float
    half_width: float
    trials: int
    bit_errors: int


@dataclass(frozen=True)
class SweepResult:
    """Rows of a metric-versus-power sweep, sorted by power."""

    power_dbm: np.ndarray
    value: np.ndarray
    trials: np.ndarray
    half_width: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "power_dbm", np.asarray(self.power_dbm, dtype=float))
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))
        object.__setattr__(self, "trials", np.asarray(self.trials, dtype=np.int64))
        object.__setattr__(self, "half_width",
                           np.asarray(self.half_width, dtype=float))
        m = self.power_dbm.size
        if not (self.value.size == self.trials.size == self.half_width.size == m):
            raise ValueError("sweep columns must have equal length")
        if m and np.any(np.diff(self.power_dbm) < 0):
            raise ValueError("sweep rows must be sorted by power")
        if np.any(self.trials <= 0):
            raise ValueError("every sweep row needs a positive trial count")

    def write_csv(self, fh):
        """Write the sweep with a fixed header; floats use shortest
        round-trip formatting so identical runs produce identical bytes."""
        fh.write("power_dbm,value,trials,half_width\n")
        for p, v, t, h in zip(self.power_dbm, self.value, self.trials,
                              self.half_width):
            fh.write(f"{float(p)!r},{float(v)!r},{int(t)},{float(h)!r}\n")


def estimate_mi(ctx: LikelihoodContext, prior=None, trials: int = 100_000,
                seed: int = 0, threads: int = 1, channel_moments=None,
                chunk: int | None = None) -> MiEstimate:
    """Monte Carlo mutual information of the block channel, in bits per
    symbol.

    Blocks are drawn from ``prior`` (uniform when omitted), observations
    from ``channel_moments`` (the context's own back-to-back tables when
    omitted; pass propagated-field moments for fiber runs), and the
    information density log2 f(obs | sent) / sum_d prior_d f(obs | d) is
    averaged over trials.  The mixture is evaluated with max-shifted
    log-sum-exp, so power sweeps spanning many decades stay finite.
    """
    m = ctx.num_blocks
    if prior is None:
        prior = np.full(m, 1.0 / m)
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (m,) or np.any(prior < 0.0):
        raise ValueError("prior must be a nonnegative vector over the blocks")
    total = prior.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError("prior must sum to 1")
    prior = prior / total
    if trials < 1:
        raise ValueError("need at least one trial")
    if np.count_nonzero(prior) == 1:
        warnings.warn("prior is a single atom; mutual information is 0")
        return MiEstimate(0.0, 0.0, trials)
    if channel_moments is None:
        channel_moments = (ctx.y_mean, ctx.y_var, ctx.z_mean, ctx.z_var)
    to_bits_per_symbol = 1.0 / (ctx.block_length * _LN2)
    sizes = _chunk_plan(trials, m, chunk)

    def run_chunk(c: int):
        rng = np.random.default_rng([seed, c])
        sent = rng.choice(m, size=sizes[c], p=prior)
        y, z = draw_observations(_gather_moments(channel_moments, sent), rng)
        ll = log_likelihoods(y, z, ctx)
        vals = (ll[np.arange(sizes[c]), sent]
                - logsumexp(ll, axis=1, b=prior)) * to_bits_per_symbol
        return float(np.sum(vals)), float(np.sum(vals * vals))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_chunk, range(len(sizes))))
    else:
        partials = [run_chunk(c) for c in range(len(sizes))]

    mean = math.fsum(p[0] for p in partials) / trials
    sq = math.fsum(p[1] for p in partials)
    if trials > 1:
        var = max(sq - trials * mean * mean, 0.0) / (trials - 1)
        std_error = math.sqrt(var / trials)
    else:
        std_error = float("inf")
    return MiEstimate(mean, std_error, trials)


def _wilson_half_width(errors: int, total: int) -> float:
    if total == 0:
        return 0.0
    p = errors / total
    z2 = _Z95 * _Z95
    denom = 1.0 + z2 / total
    return _Z95 * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom


def simulate_ber(ctx: LikelihoodContext, max_trials: int = 1_000_000,
                 min_errors: int = 100, seed: int = 0, threads: int = 1,
                 channel_moments=None, chunk: int | None = None) -> BerEstimate:
    """Bit error rate of uniformly transmitted labeled blocks under the
    likelihood detector.

    Stops at the first chunk boundary where the accumulated bit errors
    reach ``min_errors``, or after ``max_trials`` block transmissions.
    The stopping rule looks only at chunks in index order, so the included
    trial set does not depend on the thread count.
    """
    if ctx.blocks.labels is None:
        raise ValueError("bit error rate needs labeled blocks")
    m = ctx.num_blocks
    bits = ctx.blocks.bits_per_block
    label_bits = ctx.blocks.label_bits
    if channel_moments is None:
        channel_moments = (ctx.y_mean, ctx.y_var, ctx.z_mean, ctx.z_var)
    if max_trials < 1:
        raise ValueError("need at least one trial")
    if min_errors < 1:
        raise ValueError("error target must be at least 1")
    sizes = _chunk_plan(max_trials, m, chunk)

    def run_chunk(c: int):
        rng = np.random.default_rng([seed, c])
        sent = rng.integers(0, m, size=sizes[c])
        y, z = draw_observations(_gather_moments(channel_moments, sent), rng)
        got = ml_detect_batch(y, z, ctx)
        return int(np.sum(_popcount(label_bits[sent] ^ label_bits[got])))

    kept_trials = 0
    kept_errors = 0
    wave = max(threads, 1)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        c = 0
        while c < len(sizes):
            batch = range(c, min(c + wave, len(sizes)))
            if pool is not None:
                results = list(pool.map(run_chunk, batch))
            else:
                results = [run_chunk(i) for i in batch]
            for i, errs in zip(batch, results):
                kept_trials += sizes[i]
                kept_errors += errs
                if kept_errors >= min_errors:
                    c = len(sizes)
                    break
            else:
                c = batch.stop
    finally:
        if pool is not None:
            pool.shutdown()

    total_bits = bits * kept_trials
    return BerEstimate(kept_errors / total_bits,
                       _wilson_half_width(kept_errors, total_bits),
                       kept_trials, kept_errors)


def empirical_power(field: SampledField, duration: float) -> float:
    """Average power of a sampled waveform over the given duration, watts."""
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    return field.energy() / duration


def power_decomposition(symbols, shape: TukeyShape, oversampling: int = 64):
    """Split the average power of a symbol stream into its three parts.

    The stream's energy is integrated window by window: the per-symbol
    contributions over the ISI-free intervals, the per-boundary
    contributions over the overlap intervals, and the residual energy in
    the two end tapers.  Returns (mean symbol-window power, mean
    overlap-window power, edge power per symbol); the first two converge
    to 4(1-beta)P/(4-beta) and 3 beta P/(4-beta) for i.i.d. symbols of
    power P, and the edge term vanishes as the stream grows.
    """
    symbols = np.asarray(symbols, dtype=complex)
    m = symbols.size
    field = synthesize_block(shape, symbols, oversampling)
    ys, zs = block_intervals(shape, m)
    sym_power = interval_integrals(field, ys)[0] / shape.T
    ovl_power = (interval_integrals(field, zs)[0] / shape.T
                 if m > 1 else np.zeros(0))
    edge = field.energy() / shape.T - sym_power.sum() - ovl_power.sum()
    ovl_mean = float(ovl_power.mean()) if ovl_power.size else 0.0
    return float(sym_power.mean()), ovl_mean, float(edge / m)


def propagated_block_moments(blocks: SymbolBlockSet, shape: TukeyShape,
                             fiber: FiberParams, noise: NoiseModel,
                             oversampling: int = 64):
    """Observation moments of every block after the fiber pipeline.

    Each block is synthesized at its transmit scale, dispersion
    precompensated, propagated by the split-step method, and integrated
    over the standard block windows.  Returns stacked (y_mean, y_var,
    z_mean, z_var) tables shaped like the analytic ones.
    """
    n = blocks.block_length
    ys, zs = block_intervals(shape, n)
    rows = []
    for j in range(blocks.num_blocks):
        field = synthesize_block(shape, blocks.blocks[j], oversampling)
        launched = precompensate(field, fiber.beta2_ps2_km, fiber.length_km)
        received = ssfm_propagate(launched, fiber)
        rows.append(field_moments(received, ys, zs, noise))
    return tuple(np.stack([r[i] for r in rows]) for i in range(4))


def mi_sweep(blocks: SymbolBlockSet, beta: float, T: float, noise: NoiseModel,
             powers_dbm, trials: int = 100_000, seed: int = 0,
             prior=None, threads: int = 1) -> SweepResult:
    """Mutual information against received optical power.

    Each sweep point rescales the transmit set so its average symbol power
    equals the target ROP, then reruns the estimator with the same root
    seed: common random numbers across points, so the curve is monotone
    up to estimator noise.
    """
    powers = np.sort(np.asarray(powers_dbm, dtype=float))
    values, widths = [], []
    for p in powers:
        scaled = scale_blocks(blocks, dbm_to_watts(p))
        ctx = LikelihoodContext.from_blocks(scaled, beta, T, noise)
        est = estimate_mi(ctx, prior=prior, trials=trials, seed=seed,
                          threads=threads)
        values.append(est.bits_per_symbol)
        widths.append(est.std_error)
    return SweepResult(powers, values, np.full(powers.size, trials), widths)


def ber_sweep(blocks: SymbolBlockSet, beta: float, T: float, noise: NoiseModel,
              powers_dbm, max_trials: int = 1_000_000, min_errors: int = 100,
              seed: int = 0, threads: int = 1, fiber: FiberParams | None = None,
              oversampling: int = 64) -> SweepResult:
    """Bit error rate against power: received power back-to-back, or launch
    power when a fiber span is given.

    The fiber path reproduces the full pipeline per point: the scaled
    blocks are propagated once each to build the observation tables, while
    the detector keeps its analytic model at the loss-scaled received
    power (the receiver knows the span loss, not the distortion).
    """
    powers = np.sort(np.asarray(powers_dbm, dtype=float))
    shape = TukeyShape(beta, T)
    values, widths, counts = [], [], []
    for p in powers:
        scaled = scale_blocks(blocks, dbm_to_watts(p))
        if fiber is None:
            ctx = LikelihoodContext.from_blocks(scaled, beta, T, noise)
            moments = None
        else:
            rho = loss_factor(fiber.loss_db_km, fiber.length_km)
            received = SymbolBlockSet(scaled.blocks * rho, scaled.labels)
            ctx = LikelihoodContext.from_blocks(received, beta, T, noise)
            moments = propagated_block_moments(scaled, shape, fiber, noise,
                                               oversampling)
        est = simulate_ber(ctx, max_trials=max_trials, min_errors=min_errors,
                           seed=seed, threads=threads, channel_moments=moments)
        values.append(est.ber)
        widths.append(est.half_width)
        counts.append(est.trials)
    return SweepResult(powers, values, counts, widths)
