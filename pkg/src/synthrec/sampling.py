"""Seeded random streams and the primitive distributions used by the generator.

Every stochastic step in the package draws from a :class:`RandomStream`
derived from ``(master_seed, label)``.  Labels name the entity a stream
belongs to (``"user:12"``, ``"item:7"``, ``"utility:3"``), so per-entity work
can be split across threads and still reproduce bit-for-bit.

The long-tail families follow the usual continuous parameterisations::

    PowerLaw              p(x) ~ x^-a                      x >= x_min
    PowerLawExpCutoff     p(x) ~ x^-a exp(-rate x)         x >= x_min
    StretchedExponential  p(x) ~ x^(b-1) exp(-rate x^b)    x >= x_min
    LogNormal             log x ~ Normal(m, s)             x > 0
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy import special


class ParameterError(ValueError):
    """Raised when a distribution receives an invalid parameter."""


_SEED_MASK = (1 << 64) - 1


def _label_key(label: str) -> tuple[int, int]:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return int.from_bytes(digest[:8], "little"), int.from_bytes(digest[8:], "little")


class RandomStream:
    """A single-owner PRNG stream with a recorded lineage.

    Wraps a numpy ``Generator`` over PCG64.  The seed sequence is keyed by a
    hash of ``label`` so distinct labels give independent streams.
    """

    def __init__(self, master_seed: int, label: str):
        self.master_seed = int(master_seed) & _SEED_MASK
        self.label = str(label)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=_label_key(self.label))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, label={self.label!r})"

    def random(self, size=None):
        return self.generator.random(size)

    def child(self, label: str) -> "RandomStream":
        """Stream for a sub-entity, e.g. ``stream.child("0")`` -> ``"user:0"``."""
        return RandomStream(self.master_seed, f"{self.label}/{label}")


def derive_stream(master_seed: int, label: str) -> RandomStream:
    return RandomStream(master_seed, label)


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng).__name__}")


# --------------------------------------------------------------------------- #
# Dirichlet, Beta, Bernoulli
# --------------------------------------------------------------------------- #


def sample_dirichlet(conc, rng, size=None) -> np.ndarray:
    """Draw from Dirichlet(conc).  Rows of the result lie on the simplex."""
    conc = np.asarray(conc, dtype=float)
    if conc.ndim != 1 or conc.size == 0:
        raise ParameterError("concentration must be a non-empty vector")
    if not np.all(np.isfinite(conc)) or np.any(conc <= 0):
        raise ParameterError(f"concentrations must be > 0, got {conc}")
    x = _gen(rng).dirichlet(conc, size=size)
    # renormalise away float drift so sums are 1 to machine precision
    return x / x.sum(axis=-1, keepdims=True)


MEAN_CLAMP = 1e-6


def beta_shape_from_moments(mean, var):
    """Shape parameters ``(a, b)`` of the Beta with the given mean and variance.

    The mean is clamped to ``[1e-6, 1 - 1e-6]``; a variance that is not
    attainable (``var >= mean (1 - mean)``) is shrunk to a quarter of the
    Bernoulli variance instead of raising.
    """
    mean = np.clip(np.asarray(mean, dtype=float), MEAN_CLAMP, 1.0 - MEAN_CLAMP)
    var = np.asarray(var, dtype=float)
    bern = mean * (1.0 - mean)
    var = np.where(var >= bern, 0.25 * bern, var)
    nu = bern / var - 1.0
    return mean * nu, (1.0 - mean) * nu


def sample_beta_mean_var(mean, var, rng, size=None):
    """Beta draw parameterised by mean and variance (scalar or array ``mean``)."""
    m = np.asarray(mean, dtype=float)
    if np.any(~np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
        raise ParameterError("beta mean must lie in [0, 1]")
    if np.any(np.asarray(var) <= 0):
        raise ParameterError("beta variance must be > 0")
    a, b = beta_shape_from_moments(m, var)
    out = _gen(rng).beta(a, b, size=size)
    return float(out) if np.ndim(out) == 0 else out


def sample_bernoulli(p, rng, size=None):
    p_arr = np.asarray(p, dtype=float)
    if np.any(~(p_arr >= 0)) or np.any(p_arr > 1):
        raise ParameterError("Bernoulli probability must lie in [0, 1]")
    out = _gen(rng).random(size if size is not None else p_arr.shape) < p_arr
    return bool(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- #
# Long-tail families
# --------------------------------------------------------------------------- #


def _upper_gamma(s: float, x):
    """Non-normalised upper incomplete gamma Gamma(s, x) for any real s, x > 0.

    scipy only covers s > 0, so negative orders are reached by the downward
    recurrence Gamma(s, x) = (Gamma(s+1, x) - x^s e^-x) / s.
    """
    x = np.asarray(x, dtype=float)
    steps = 0
    base = s
    while base < 0:
        base += 1.0
        steps += 1
    if base == 0:
        g = special.exp1(x)
    else:
        g = special.gammaincc(base, x) * special.gamma(base)
    for _ in range(steps):
        base -= 1.0
        g = (g - x**base * np.exp(-x)) / base
    return g


@dataclass(frozen=True)
class LongTailSpec:
    """Base class of the heavy-tailed families.

    Subclasses implement ``pdf``, ``cdf``, ``ppf`` (where closed form) and
    ``sample``.  Instances are immutable and validated on construction.
    """

    family: ClassVar[str] = ""

    @property
    def lower(self) -> float:
        return getattr(self, "x_min", 0.0)

    def to_dict(self) -> dict:
        d = {"family": self.family}
        d.update({k: v for k, v in self.__dict__.items()})
        return d

    @staticmethod
    def from_dict(d: dict) -> "LongTailSpec":
        d = dict(d)
        try:
            family = d.pop("family")
        except KeyError:
            raise ParameterError("long-tail spec needs a 'family' field") from None
        cls = FAMILIES.get(family)
        if cls is None:
            raise ParameterError(f"unknown long-tail family {family!r}; expected one of {sorted(FAMILIES)}")
        try:
            return cls(**d)
        except TypeError as e:
            raise ParameterError(f"bad parameters for {family}: {e}") from None


@dataclass(frozen=True)
class PowerLaw(LongTailSpec):
    exponent: float
    x_min: float = 1.0
    family: ClassVar[str] = "power_law"

    def __post_init__(self):
        if not self.exponent > 1:
            raise ParameterError(f"power-law exponent must be > 1, got {self.exponent}")
        if not self.x_min > 0:
            raise ParameterError(f"x_min must be > 0, got {self.x_min}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, xm = self.exponent, self.x_min
        with np.errstate(divide="ignore", invalid="ignore"):
            p = (a - 1) / xm * (x / xm) ** (-a)
        return np.where(x >= xm, p, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = 1.0 - (np.maximum(x, self.x_min) / self.x_min) ** (1.0 - self.exponent)
        return np.where(x >= self.x_min, c, 0.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return self.x_min * (1.0 - u) ** (-1.0 / (self.exponent - 1.0))

    def sample(self, rng, size=None):
        return self.ppf(_gen(rng).random(size))


@dataclass(frozen=True)
class PowerLawExpCutoff(LongTailSpec):
    exponent: float
    rate: float
    x_min: float = 1.0
    family: ClassVar[str] = "power_law_cutoff"

    max_attempts: ClassVar[int] = 1_000_000

    def __post_init__(self):
        if not self.exponent > 1:
            raise ParameterError(f"cutoff exponent must be > 1, got {self.exponent}")
        if not self.rate > 0:
            raise ParameterError(f"cutoff rate must be > 0, got {self.rate}")
        if not self.x_min > 0:
            raise ParameterError(f"x_min must be > 0, got {self.x_min}")

    def _norm(self) -> float:
        a, lam = self.exponent, self.rate
        return lam ** (a - 1) * float(_upper_gamma(1.0 - a, lam * self.x_min))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = x ** (-self.exponent) * np.exp(-self.rate * x) / self._norm()
        return np.where(x >= self.x_min, p, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.maximum(x, self.x_min)
        s = 1.0 - self.exponent
        tail = _upper_gamma(s, self.rate * xc) / _upper_gamma(s, self.rate * self.x_min)
        return np.where(x >= self.x_min, np.clip(1.0 - tail, 0.0, 1.0), 0.0)

    def sample(self, rng, size=None):
        # rejection from the pure power law, accept w.p. exp(-rate (x - x_min))
        g = _gen(rng)
        n = 1 if size is None else int(np.prod(size))
        proposal = PowerLaw(self.exponent, self.x_min)
        out = np.empty(n)
        filled = 0
        attempts = 0
        while filled < n:
            batch = max(2 * (n - filled), 64)
            x = proposal.ppf(g.random(batch))
            keep = x[g.random(batch) < np.exp(-self.rate * (x - self.x_min))]
            take = min(keep.size, n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
            attempts += batch
            if attempts > self.max_attempts * n:
                raise ParameterError("power-law cutoff rejection sampler exceeded its attempt cap")
        return float(out[0]) if size is None else out.reshape(size)


@dataclass(frozen=True)
class StretchedExponential(LongTailSpec):
    rate: float
    shape: float
    x_min: float = 1.0
    family: ClassVar[str] = "stretched_exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"stretched-exponential rate must be > 0, got {self.rate}")
        if not self.shape > 0:
            raise ParameterError(f"stretched-exponential shape must be > 0, got {self.shape}")
        if not self.x_min > 0:
            raise ParameterError(f"x_min must be > 0, got {self.x_min}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        lam, b, xm = self.rate, self.shape, self.x_min
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            p = lam * b * x ** (b - 1) * np.exp(-lam * (x**b - xm**b))
        return np.where(x >= xm, p, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.maximum(x, self.x_min)
        c = -np.expm1(-self.rate * (xc**self.shape - self.x_min**self.shape))
        return np.where(x >= self.x_min, c, 0.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return (self.x_min**self.shape - np.log1p(-u) / self.rate) ** (1.0 / self.shape)

    def sample(self, rng, size=None):
        return self.ppf(_gen(rng).random(size))


@dataclass(frozen=True)
class LogNormal(LongTailSpec):
    log_mean: float
    log_sd: float
    family: ClassVar[str] = "log_normal"

    def __post_init__(self):
        if not self.log_sd > 0:
            raise ParameterError(f"log-normal sd must be > 0, got {self.log_sd}")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (np.log(x) - self.log_mean) / self.log_sd
            p = np.exp(-0.5 * z * z) / (x * self.log_sd * math.sqrt(2 * math.pi))
        return np.where(x > 0, p, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.where(x > 0, x, 1.0)) - self.log_mean) / self.log_sd
        return np.where(x > 0, special.ndtr(z), 0.0)

    def ppf(self, u):
        return np.exp(self.log_mean + self.log_sd * special.ndtri(np.asarray(u, dtype=float)))

    def sample(self, rng, size=None):
        z = _gen(rng).standard_normal(size)
        return np.exp(self.log_mean + self.log_sd * z)


FAMILIES: dict[str, type[LongTailSpec]] = {
    cls.family: cls for cls in (PowerLaw, PowerLawExpCutoff, StretchedExponential, LogNormal)
}


def sample_long_tail(spec: LongTailSpec, rng, size=None):
    out = spec.sample(rng, size)
    return float(out) if np.ndim(out) == 0 else out


def long_tail_cdf(spec: LongTailSpec, x):
    out = spec.cdf(x)
    return float(out) if np.ndim(out) == 0 else out


def long_tail_quantile(spec: LongTailSpec, u):
    if not hasattr(spec, "ppf"):
        raise ParameterError(f"{spec.family} has no closed-form quantile")
    out = spec.ppf(u)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------- #
# Empirical normalisation of popularity scores
# --------------------------------------------------------------------------- #


def empirical_cdf(values, x):
    """Fraction of ``values`` that are <= ``x`` (vectorised over ``x``)."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ParameterError("empirical_cdf needs at least one value")
    out = np.searchsorted(v, np.asarray(x, dtype=float), side="right") / v.size
    return float(out) if np.ndim(out) == 0 else out


def max_normalized_density(values, x, bins="auto"):
    """Histogram density of ``values`` at ``x``, scaled so the densest bin is 1."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ParameterError("density needs at least one value")
    dens, edges = np.histogram(v, bins=bins, density=True)
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, dens.size - 1)
    inside = (x >= edges[0]) & (x <= edges[-1])
    out = np.where(inside, dens[idx] / dens.max(), 0.0)
    return float(out) if np.ndim(out) == 0 else out
