"""Source distributions with exact bin masses and truncated moments.

Everything downstream (quantizer design, per-bin conditional means, exact
distortion evaluation) reduces to first and second moments of a law
restricted to an interval, so those are computed here in closed form for
the supported families.  Semi-infinite intervals are first-class: every
formula is written so that ``+/-inf`` endpoints are exact, not limits
taken numerically.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import ZeroMassBin

__all__ = [
    "ZERO_MASS_TOL",
    "Interval",
    "Distribution",
    "Gaussian",
    "Laplace",
    "GaussianMixture",
    "RicianComplex",
    "inverse_mills",
    "from_config",
]

# Bin masses below this are treated as exactly zero.  The threshold sits at
# the edge of the subnormal range: anything smaller is pure underflow noise.
ZERO_MASS_TOL = 1e-300

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    """Half-open interval ``[lo, hi)``; either endpoint may be infinite."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo = float(self.lo)
        hi = float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if not lo < hi:
            raise ValueError(f"interval requires lo < hi, got [{lo}, {hi})")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


def _std_normal_pdf(z: np.ndarray) -> np.ndarray:
    # exp(-inf) underflows cleanly to 0, so infinite endpoints need no guard.
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def _z_times_pdf(z: np.ndarray, pdf_z: np.ndarray) -> np.ndarray:
    # z*phi(z) -> 0 as |z| -> inf; replace the inf*0 indeterminate form.
    return np.where(np.isfinite(z), z, 0.0) * pdf_z


def _gaussian_edge_stats(
    mean: float, std: float, edges: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unnormalized (mass, first, second) moments of N(mean, std^2) per bin.

    ``edges`` is the increasing array of bin edges including the outer
    ``+/-inf``.  Returns arrays of length ``len(edges) - 1``.  Masses in the
    far tail are formed from the survival function on whichever side avoids
    cancellation.
    """
    z = (edges - mean) / std
    za, zb = z[:-1], z[1:]
    mass = np.where(
        za >= 0.0,
        special.ndtr(-za) - special.ndtr(-zb),
        special.ndtr(zb) - special.ndtr(za),
    )
    pa = _std_normal_pdf(za)
    pb = _std_normal_pdf(zb)
    e1 = pa - pb                      # int z phi(z) over [za, zb]
    e2 = mass + _z_times_pdf(za, pa) - _z_times_pdf(zb, pb)
    m1 = mean * mass + std * e1
    m2 = mean * mean * mass + 2.0 * mean * std * e1 + std * std * e2
    return mass, m1, m2


class Distribution(ABC):
    """A scalar source law with closed-form interval moments."""

    @abstractmethod
    def pdf(self, x):
        """Density at ``x`` (scalar or ndarray)."""

    def log_pdf(self, x):
        """Log density at ``x``; overridden where the direct form underflows."""
        with np.errstate(divide="ignore"):
            out = np.log(np.asarray(self.pdf(x), dtype=float))
        return out if out.ndim else float(out)

    @abstractmethod
    def cdf(self, x):
        """Distribution function at ``x`` (scalar or ndarray)."""

    @abstractmethod
    def ppf(self, q):
        """Quantile function at ``q in (0, 1)`` (scalar or ndarray)."""

    @abstractmethod
    def edge_stats(self, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unnormalized (mass, E[X 1_bin], E[X^2 1_bin]) for consecutive bins.

        ``edges`` must be increasing and include the outer infinite edges.
        """

    @abstractmethod
    def sample(self, seed: int, n: int) -> np.ndarray:
        """Draw ``n`` variates with a deterministic generator for ``seed``."""

    @property
    @abstractmethod
    def mean(self) -> float: ...

    @property
    @abstractmethod
    def variance(self) -> float: ...

    @abstractmethod
    def to_config(self) -> dict: ...

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def mass(self, r: Interval) -> float:
        """Probability assigned to the interval ``r``."""
        p, _, _ = self.edge_stats(np.array([r.lo, r.hi]))
        return float(p[0])

    def truncated_moment(self, n: int, r: Interval) -> float:
        """Conditional moment ``E[X^n | X in r]`` for ``n`` in {1, 2}.

        Raises
        ------
        ZeroMassBin
            If the law places no numerical mass on ``r``.
        """
        if n not in (1, 2):
            raise ValueError(f"truncated_moment supports n in {{1, 2}}, got {n}")
        p, m1, m2 = self.edge_stats(np.array([r.lo, r.hi]))
        mass = float(p[0])
        if mass < ZERO_MASS_TOL:
            raise ZeroMassBin(
                f"no mass on [{r.lo}, {r.hi}) under {self!r} (mass={mass:.3e})"
            )
        return float(m1[0] / mass) if n == 1 else float(m2[0] / mass)


@dataclass(frozen=True)
class Gaussian(Distribution):
    """Normal law N(mean, std^2)."""

    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ValueError("Gaussian parameters must be finite")
        if self.std <= 0.0:
            raise ValueError(f"std must be positive, got {self.std}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        out = _std_normal_pdf(z) / self.std
        return out if out.ndim else float(out)

    def log_pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        out = -0.5 * np.square(z) - math.log(self.std * math.sqrt(2.0 * math.pi))
        return out if out.ndim else float(out)

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        out = special.ndtr(z)
        return out if out.ndim else float(out)

    def ppf(self, q):
        out = self.mean + self.std * special.ndtri(np.asarray(q, dtype=float))
        return out if out.ndim else float(out)

    def edge_stats(self, edges):
        return _gaussian_edge_stats(self.mean, self.std, np.asarray(edges, dtype=float))

    def sample(self, seed, n):
        rng = np.random.default_rng(seed)
        return rng.normal(self.mean, self.std, size=n)

    @property
    def variance(self) -> float:
        return self.std * self.std

    def to_config(self) -> dict:
        return {"kind": "gaussian", "mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class Laplace(Distribution):
    """Laplace law with density ``exp(-|x - loc| / scale) / (2 scale)``.

    ``scale = 1/sqrt(2)`` gives unit variance.
    """

    loc: float = 0.0
    scale: float = math.sqrt(0.5)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.loc) and math.isfinite(self.scale)):
            raise ValueError("Laplace parameters must be finite")
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def pdf(self, x):
        y = np.asarray(x, dtype=float) - self.loc
        out = np.exp(-np.abs(y) / self.scale) / (2.0 * self.scale)
        return out if out.ndim else float(out)

    def log_pdf(self, x):
        y = np.asarray(x, dtype=float) - self.loc
        out = -np.abs(y) / self.scale - math.log(2.0 * self.scale)
        return out if out.ndim else float(out)

    def cdf(self, x):
        y = np.asarray(x, dtype=float) - self.loc
        # Clamp each exp argument to its own side so the branch np.where
        # discards cannot overflow.
        out = np.where(
            y < 0.0,
            0.5 * np.exp(np.minimum(y, 0.0) / self.scale),
            1.0 - 0.5 * np.exp(-np.maximum(y, 0.0) / self.scale),
        )
        return out if out.ndim else float(out)

    def ppf(self, q):
        q = np.asarray(q, dtype=float)
        out = self.loc + np.where(
            q < 0.5,
            self.scale * np.log(2.0 * q),
            -self.scale * np.log(2.0 * (1.0 - q)),
        )
        return out if out.ndim else float(out)

    def _cumulative(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # Cumulative centered moments int_{-inf}^{y} u^k f(u) du, k = 0, 1, 2,
        # from the elementary antiderivatives of u^k exp(-|u|/b).
        b = self.scale
        neg = y < 0.0
        yf = np.where(np.isfinite(y), y, 0.0)
        # Each exp factor is only consumed on its own side; clamp the argument
        # so the unused side cannot overflow inside np.where.
        en = np.exp(np.minimum(yf, 0.0) / b)
        ep = np.exp(-np.maximum(yf, 0.0) / b)
        u0 = np.where(neg, 0.5 * en, 1.0 - 0.5 * ep)
        u1 = np.where(neg, 0.5 * en * (yf - b), -0.5 * ep * (yf + b))
        u2 = np.where(
            neg,
            0.5 * en * (yf * yf - 2.0 * b * yf + 2.0 * b * b),
            2.0 * b * b - 0.5 * ep * (yf * yf + 2.0 * b * yf + 2.0 * b * b),
        )
        # Patch the exact limits at infinite endpoints.
        posinf = np.isposinf(y)
        neginf = np.isneginf(y)
        u0 = np.where(posinf, 1.0, np.where(neginf, 0.0, u0))
        u1 = np.where(posinf | neginf, 0.0, u1)
        u2 = np.where(posinf, 2.0 * b * b, np.where(neginf, 0.0, u2))
        return u0, u1, u2

    def edge_stats(self, edges):
        y = np.asarray(edges, dtype=float) - self.loc
        u0, u1, u2 = self._cumulative(y)
        mass = np.diff(u0)
        d1 = np.diff(u1)
        d2 = np.diff(u2)
        m1 = self.loc * mass + d1
        m2 = self.loc * self.loc * mass + 2.0 * self.loc * d1 + d2
        return mass, m1, m2

    def sample(self, seed, n):
        rng = np.random.default_rng(seed)
        return rng.laplace(self.loc, self.scale, size=n)

    @property
    def mean(self) -> float:
        return self.loc

    @property
    def variance(self) -> float:
        return 2.0 * self.scale * self.scale

    def to_config(self) -> dict:
        return {"kind": "laplace", "loc": self.loc, "scale": self.scale}


@dataclass(frozen=True)
class GaussianMixture(Distribution):
    """Finite mixture of Gaussian components.

    ``components`` is a tuple of ``(weight, mean, std)`` triples; weights
    must be positive and sum to one within 1e-9.
    """

    components: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        comps = tuple((float(w), float(m), float(s)) for w, m, s in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        for w, m, s in comps:
            if w <= 0.0:
                raise ValueError(f"component weight must be positive, got {w}")
            if s <= 0.0:
                raise ValueError(f"component std must be positive, got {s}")
            if not (math.isfinite(w) and math.isfinite(m) and math.isfinite(s)):
                raise ValueError("mixture parameters must be finite")
        total = sum(w for w, _, _ in comps)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        object.__setattr__(self, "components", comps)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=float)
        for w, m, s in self.components:
            out = out + w * _std_normal_pdf((x - m) / s) / s
        return out if out.ndim else float(out)

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        terms = np.stack(
            [
                math.log(w)
                - 0.5 * np.square((x - m) / s)
                - math.log(s * math.sqrt(2.0 * math.pi))
                for w, m, s in self.components
            ]
        )
        out = special.logsumexp(terms, axis=0)
        return out if np.ndim(out) else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=float)
        for w, m, s in self.components:
            out = out + w * special.ndtr((x - m) / s)
        return out if out.ndim else float(out)

    def ppf(self, q):
        q_arr = np.atleast_1d(np.asarray(q, dtype=float))
        lo = min(m - 14.0 * s for _, m, s in self.components)
        hi = max(m + 14.0 * s for _, m, s in self.components)
        out = np.array(
            [optimize.brentq(lambda x, p=p: self.cdf(x) - p, lo, hi, xtol=1e-13)
             for p in q_arr]
        )
        return out if np.asarray(q).ndim else float(out[0])

    def edge_stats(self, edges):
        edges = np.asarray(edges, dtype=float)
        mass = np.zeros(len(edges) - 1)
        m1 = np.zeros(len(edges) - 1)
        m2 = np.zeros(len(edges) - 1)
        for w, m, s in self.components:
            p, a, b = _gaussian_edge_stats(m, s, edges)
            mass += w * p
            m1 += w * a
            m2 += w * b
        return mass, m1, m2

    def sample(self, seed, n):
        rng = np.random.default_rng(seed)
        weights = np.array([w for w, _, _ in self.components])
        means = np.array([m for _, m, _ in self.components])
        stds = np.array([s for _, _, s in self.components])
        idx = rng.choice(len(weights), size=n, p=weights)
        return rng.normal(means[idx], stds[idx])

    @property
    def mean(self) -> float:
        return sum(w * m for w, m, _ in self.components)

    @property
    def variance(self) -> float:
        mu = self.mean
        second = sum(w * (m * m + s * s) for w, m, s in self.components)
        return second - mu * mu

    def to_config(self) -> dict:
        return {
            "kind": "mixture",
            "components": [
                {"weight": w, "mean": m, "std": s} for w, m, s in self.components
            ],
        }


@dataclass(frozen=True)
class RicianComplex:
    """Unit-power complex fading coefficient with Rice factor ``k_factor``.

    The line-of-sight amplitude is ``sqrt(K / (K + 1))`` and the scattered
    power ``1 / (K + 1)``, so ``E[|X|^2] = 1`` for every ``K >= 0``.  This
    type only carries the parameterization and a complex sampler; the scalar
    moment machinery used for channel-state losses lives in ``taskaware``.
    """

    k_factor: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.k_factor) or self.k_factor < 0.0:
            raise ValueError(f"k_factor must be finite and >= 0, got {self.k_factor}")

    @property
    def los_amplitude(self) -> float:
        return math.sqrt(self.k_factor / (self.k_factor + 1.0))

    @property
    def scatter_power(self) -> float:
        return 1.0 / (self.k_factor + 1.0)

    def sample(self, seed: int, n: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        s = math.sqrt(self.scatter_power / 2.0)
        return self.los_amplitude + s * (
            rng.standard_normal(n) + 1j * rng.standard_normal(n)
        )

    def to_config(self) -> dict:
        return {"kind": "rician", "k_factor": self.k_factor}


def inverse_mills(alpha: float) -> tuple[float, float]:
    """Inverse Mills ratios ``(phi/Phi, phi/(1 - Phi))`` at ``alpha``.

    Both ratios are evaluated in log space so that the far-tail cases stay
    finite instead of degenerating to 0/0; in that regime the values approach
    ``|alpha|`` on the vanishing side and 0 on the other.

    Examples
    --------
    >>> left, right = inverse_mills(0.0)
    >>> round(left, 12) == round((2.0 / math.pi) ** 0.5, 12)
    True
    """
    a = float(alpha)
    if not math.isfinite(a):
        raise ValueError(f"alpha must be finite, got {a}")
    log_pdf = -0.5 * a * a - 0.5 * math.log(2.0 * math.pi)
    lam_left = math.exp(log_pdf - special.log_ndtr(a))
    lam_right = math.exp(log_pdf - special.log_ndtr(-a))
    return lam_left, lam_right


def from_config(record: dict) -> Distribution | RicianComplex:
    """Build a distribution from a plain config record.

    Recognized kinds: ``gaussian`` (mean, std), ``laplace`` (loc, scale),
    ``mixture`` (components: list of {weight, mean, std}), and ``rician``
    (k_factor).
    """
    if not isinstance(record, dict):
        raise ValueError(f"distribution config must be a mapping, got {type(record)}")
    kind = record.get("kind")
    if kind == "gaussian":
        return Gaussian(mean=float(record.get("mean", 0.0)),
                        std=float(record.get("std", 1.0)))
    if kind == "laplace":
        return Laplace(loc=float(record.get("loc", 0.0)),
                       scale=float(record.get("scale", math.sqrt(0.5))))
    if kind == "mixture":
        comps = record.get("components")
        if not comps:
            raise ValueError("mixture config needs a non-empty 'components' list")
        return GaussianMixture(
            components=tuple(
                (float(c["weight"]), float(c["mean"]), float(c["std"])) for c in comps
            )
        )
    if kind == "rician":
        return RicianComplex(k_factor=float(record.get("k_factor", 0.0)))
    raise ValueError(f"unknown distribution kind: {kind!r}")
