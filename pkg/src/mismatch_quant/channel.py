"""Index noise between encoder and decoder, and decoders that handle it.

The channel acts on quantizer indices.  Three decoding strategies are
compared throughout: reconstruct with the design codebook (pure
separation), swap in the true-law conditional means (hard generative), or
average those means under the index posterior (soft generative, the MMSE
table for the given channel).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Distribution
from .errors import ZeroEvidence
from .mismatch import _generative_values
from .quantizer import Codebook, Partition, Quantizer

__all__ = [
    "Channel",
    "NoisyDecoder",
    "StrategyReport",
    "bsc_channel",
    "index_posterior",
    "make_noisy_decoder",
    "noisy_distortion",
    "soft_codebook",
    "strategy_report",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

STRATEGIES = ("standard_separation", "hard_generative", "soft_generative")


@dataclass(frozen=True)
class Channel:
    """Row-stochastic index transition matrix ``P(received j | sent i)``."""

    matrix: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0.0):
            raise ValueError("transition probabilities must be finite and >= 0")
        rows = m.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise ValueError(f"rows must sum to 1 within 1e-12, got {rows}")
        object.__setattr__(self, "matrix", tuple(tuple(row) for row in m))

    @property
    def n(self) -> int:
        return len(self.matrix)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix)


@dataclass(frozen=True)
class NoisyDecoder:
    """A decoding strategy together with its reconstruction table."""

    strategy: str
    table: Codebook

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"
            )


def bsc_channel(bits: int, epsilon: float) -> Channel:
    """Memoryless binary symmetric channel on natural-binary index labels.

    Flipping each of the ``bits`` label bits independently with probability
    ``epsilon`` gives ``P(j | i) = eps^h (1-eps)^(bits-h)`` where ``h`` is
    the Hamming distance between the labels of ``i`` and ``j``.
    """
    if not isinstance(bits, int) or not 1 <= bits <= 12:
        raise ValueError(f"bits must be an integer in [1, 12], got {bits!r}")
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in [0, 0.5], got {epsilon}")
    n = 1 << bits
    idx = np.arange(n)
    xor = idx[:, None] ^ idx[None, :]
    hamming = np.zeros_like(xor)
    while np.any(xor):
        hamming += xor & 1
        xor >>= 1
    matrix = (epsilon**hamming) * (1.0 - epsilon) ** (bits - hamming)
    return Channel(matrix=tuple(tuple(row) for row in matrix))


def index_posterior(ch: Channel, priors, received: int) -> np.ndarray:
    """Posterior over sent indices given the received index.

    Raises
    ------
    ZeroEvidence
        If the received index has zero marginal probability.
    """
    pri = np.asarray(priors, dtype=float)
    if pri.shape != (ch.n,):
        raise ValueError(f"priors must have shape ({ch.n},), got {pri.shape}")
    if np.any(pri < 0.0):
        raise ValueError("priors must be non-negative")
    if not 0 <= received < ch.n:
        raise ValueError(f"received index {received} out of range [0, {ch.n})")
    weights = ch.as_array()[:, received] * pri
    evidence = float(weights.sum())
    if evidence < 1e-300:
        raise ZeroEvidence(
            f"received index {received} has zero marginal probability"
        )
    return weights / evidence


def soft_codebook(
    p: Partition,
    true_d: Distribution,
    ch: Channel,
    fallback: Codebook | None = None,
) -> Codebook:
    """MMSE reconstruction table for a noisy index: posterior-averaged
    conditional means.

    A received index that cannot occur (zero evidence) falls back to the
    prior-weighted mean of the conditional means, which is the best guess
    with no usable observation.
    """
    if ch.n != p.n_bins:
        raise ValueError(f"channel size {ch.n} does not match {p.n_bins} bins")
    gen, _ = _generative_values(p, true_d, fallback)
    mass, _, _ = true_d.edge_stats(p.edges())
    priors = mass / mass.sum()
    values = []
    for j in range(ch.n):
        try:
            post = index_posterior(ch, priors, j)
            values.append(float(post @ gen))
        except ZeroEvidence:
            values.append(float(priors @ gen))
    return Codebook(tuple(values))


def make_noisy_decoder(
    strategy: str,
    quantizer: Quantizer,
    true_d: Distribution,
    ch: Channel | None = None,
) -> NoisyDecoder:
    """Build the reconstruction table for one of the three strategies."""
    p = quantizer.partition
    if strategy == "standard_separation":
        table = quantizer.design_codebook
    elif strategy == "hard_generative":
        values, _ = _generative_values(p, true_d, quantizer.design_codebook)
        table = Codebook(tuple(values))
    elif strategy == "soft_generative":
        if ch is None:
            raise ValueError("soft_generative needs the channel")
        table = soft_codebook(p, true_d, ch, fallback=quantizer.design_codebook)
    else:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    return NoisyDecoder(strategy=strategy, table=table)


def noisy_distortion(
    p: Partition, ch: Channel, dec: NoisyDecoder, true_d: Distribution
) -> float:
    """Exact end-to-end MSE through the index channel.

    Averages the per-bin moments over the transition matrix:
    ``sum_i sum_j P(x in bin i) P(j | i) E[(X - a_j)^2 | bin i]``.
    """
    if ch.n != p.n_bins or len(dec.table) != p.n_bins:
        raise ValueError("partition, channel, and table sizes must agree")
    mass, m1, m2 = true_d.edge_stats(p.edges())
    t = ch.as_array()
    a = dec.table.as_array()
    return float(np.sum(m2) - 2.0 * np.dot(m1, t @ a) + np.dot(mass, t @ (a * a)))


@dataclass(frozen=True)
class StrategyReport:
    """Closed-form 1-bit BSC comparison for zero-mean Gaussian laws.

    ``source_bias_gap = d_std - d_hard`` isolates the cost of decoding with
    the wrong source scale; ``separation_gap = d_hard - d_opt`` isolates the
    cost of ignoring channel noise in the table, equal to
    ``4 eps^2 sigma1^2 (2/pi)``.
    """

    epsilon: float
    sigma0: float
    sigma1: float
    d_std: float
    d_hard: float
    d_opt: float
    source_bias_gap: float
    separation_gap: float


def strategy_report(sigma0: float, sigma1: float, epsilon: float) -> StrategyReport:
    """Distortion of the three decoding strategies for the 1-bit sign
    quantizer on a BSC, all in closed form.

    With ``c = sigma1 sqrt(2/pi)`` and table magnitude ``A``, the end-to-end
    distortion is ``sigma1^2 - 2 A c (1 - 2 eps) + A^2``; the strategies
    plug in ``A = sigma0 sqrt(2/pi)`` (standard), ``A = c`` (hard
    generative), and ``A = (1 - 2 eps) c`` (soft generative, the minimizer).
    """
    if sigma0 <= 0.0 or sigma1 <= 0.0:
        raise ValueError("standard deviations must be positive")
    if not 0.0 <= epsilon <= 0.5:
        raise ValueError(f"epsilon must lie in [0, 0.5], got {epsilon}")
    var1 = sigma1 * sigma1
    c = sigma1 * _SQRT_2_OVER_PI
    shrink = 1.0 - 2.0 * epsilon

    def end_to_end(a: float) -> float:
        return var1 - 2.0 * a * c * shrink + a * a

    d_std = end_to_end(sigma0 * _SQRT_2_OVER_PI)
    d_hard = end_to_end(c)
    d_opt = end_to_end(shrink * c)
    return StrategyReport(
        epsilon=epsilon,
        sigma0=sigma0,
        sigma1=sigma1,
        d_std=d_std,
        d_hard=d_hard,
        d_opt=d_opt,
        source_bias_gap=d_std - d_hard,
        separation_gap=d_hard - d_opt,
    )
