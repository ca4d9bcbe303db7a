"""Interaction sampling on top of the observed utility matrix.

For every user the generator repeatedly scans the whole catalogue, accepting
item ``i`` with probability ``t[u, i] ** (delta * (1 - rank_i))`` where
``rank_i`` is the normalised popularity of the item, until the accepted set
holds at least ``budget_u`` items.  The final history is a uniform sample of
``budget_u`` items from that set.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .latent import (
    ConfigurationError,
    LatentFactors,
    PartitionSpec,
    UtilityMatrices,
    build_partitions,
    build_utilities,
    check_affinity,
    default_affinity,
)
from .sampling import LongTailSpec, PowerLaw, derive_stream, empirical_cdf, max_normalized_density

log = logging.getLogger(__name__)

PDF_MODES = ("cdf", "max_normalized_density")
NOISE_MODES = ("per_entry", "global")
FALLBACK_JITTER = 1e-12
THREADS_ENV = "GENREC_THREADS"


@dataclass(frozen=True)
class GeneratorConfig:
    n_users: int
    n_items: int
    K: int = 4
    p: int = 1
    c: int = 1
    eps: float = 0.01
    delta: float = 1.0
    tau: int = 5
    sigma: float = 1e-5
    mu_omega: float = 0.98
    item_pop_spec: LongTailSpec = field(default_factory=lambda: PowerLaw(1.99))
    user_budget_spec: LongTailSpec = field(default_factory=lambda: PowerLaw(1.91))
    affinity: tuple | None = None
    pdf_mode: str = "cdf"
    noise_mode: str = "per_entry"
    max_passes: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "n_items", "K", "p", "c", "max_passes"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.c > self.K:
            raise ConfigurationError(f"c must be <= K (got c={self.c}, K={self.K})")
        if self.K % self.c:
            raise ConfigurationError("K must be divisible by c")
        if not self.eps > 0:
            raise ConfigurationError("eps must be > 0")
        if not self.delta >= 0:
            raise ConfigurationError("delta must be >= 0")
        if not isinstance(self.tau, (int, np.integer)) or isinstance(self.tau, bool) or self.tau < 0:
            raise ConfigurationError(f"tau must be a nonnegative integer, got {self.tau!r}")
        if not self.sigma > 0:
            raise ConfigurationError("sigma must be > 0")
        if not 0 < self.mu_omega < 1:
            raise ConfigurationError("mu_omega must lie in (0, 1)")
        if self.pdf_mode not in PDF_MODES:
            raise ConfigurationError(f"pdf_mode must be one of {PDF_MODES}")
        if self.noise_mode not in NOISE_MODES:
            raise ConfigurationError(f"noise_mode must be one of {NOISE_MODES}")
        for name in ("item_pop_spec", "user_budget_spec"):
            if not isinstance(getattr(self, name), LongTailSpec):
                raise ConfigurationError(f"{name} must be a long-tail distribution spec")
        aff = default_affinity(self.p, self.c) if self.affinity is None else self.affinity
        aff = check_affinity(aff, self.p, self.c)
        object.__setattr__(self, "affinity", tuple(tuple(bool(x) for x in row) for row in aff))

    @property
    def affinity_matrix(self) -> np.ndarray:
        return np.array(self.affinity, dtype=bool)

    def replace(self, **changes) -> "GeneratorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, LongTailSpec):
                v = v.to_dict()
            elif f.name == "affinity":
                v = [list(row) for row in v]
            d[f.name] = v
        return d


@dataclass
class InteractionDataset:
    histories: list[np.ndarray]
    n_items: int
    config: GeneratorConfig | None = None
    popularity: np.ndarray | None = None
    budgets: np.ndarray | None = None
    degenerate_users: list[int] = field(default_factory=list)
    # set when ingested from an external file: 1-based shift, or original ids
    id_offset: int = 0
    user_ids: np.ndarray | None = None
    item_ids: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return len(self.histories)

    @property
    def n_interactions(self) -> int:
        return int(sum(len(h) for h in self.histories))

    def __eq__(self, other) -> bool:
        if not isinstance(other, InteractionDataset):
            return NotImplemented
        return (
            self.n_items == other.n_items
            and self.n_users == other.n_users
            and all(np.array_equal(a, b) for a, b in zip(self.histories, other.histories))
        )


def sample_popularities(n_items: int, spec: LongTailSpec, rng) -> np.ndarray:
    return np.atleast_1d(spec.sample(rng, size=n_items)).astype(float)


def sample_budgets(n_users: int, spec: LongTailSpec, tau: int, n_items: int, rng) -> np.ndarray:
    """History lengths: rounded long-tail draw plus ``tau``, capped at ``n_items``."""
    if tau < 0:
        raise ConfigurationError("tau must be >= 0")
    draws = np.atleast_1d(spec.sample(rng, size=n_users))
    budgets = np.rint(draws).astype(np.int64) + int(tau)
    budgets = np.maximum(budgets, max(int(tau), 1))
    return np.minimum(budgets, n_items)


def popularity_ranks(pop: np.ndarray, pdf_mode: str = "cdf") -> np.ndarray:
    if pdf_mode == "cdf":
        return empirical_cdf(pop, pop)
    if pdf_mode == "max_normalized_density":
        return max_normalized_density(pop, pop)
    raise ConfigurationError(f"unknown pdf_mode {pdf_mode!r}")


def interaction_probability(t, pop_rank, delta: float):
    """``t ** (delta * (1 - pop_rank))`` with the convention ``0 ** 0 == 1``."""
    t = np.asarray(t, dtype=float)
    expo = float(delta) * (1.0 - np.asarray(pop_rank, dtype=float))
    out = np.clip(np.power(t, expo), 0.0, 1.0)  # numpy already maps 0 ** 0 to 1
    return float(out) if out.ndim == 0 else out


def _history(probs: np.ndarray, budget: int, max_passes: int, rng) -> tuple[np.ndarray, bool]:
    g = rng.generator if hasattr(rng, "generator") else rng
    n = probs.size
    if budget > n:
        raise ConfigurationError(f"budget {budget} exceeds catalogue size {n}")
    accepted = np.zeros(n, dtype=bool)
    count = 0
    passes = 0
    while count < budget and passes < max_passes:
        accepted |= g.random(n) < probs
        count = int(accepted.sum())
        passes += 1
    pool = np.flatnonzero(accepted)
    degenerate = count < budget
    if degenerate:
        missing = np.flatnonzero(~accepted)
        w = probs[missing] + FALLBACK_JITTER
        extra = g.choice(missing, size=budget - count, replace=False, p=w / w.sum())
        pool = np.concatenate([pool, extra])
    chosen = g.choice(pool, size=budget, replace=False) if pool.size > budget else pool
    return np.sort(chosen), degenerate


def generate_history(t_row, pop_ranks, budget: int, delta: float, max_passes: int, rng) -> np.ndarray:
    """Sorted item indices of one user's history (see module docstring)."""
    probs = interaction_probability(np.asarray(t_row, dtype=float), pop_ranks, delta)
    items, degenerate = _history(np.atleast_1d(probs), int(budget), int(max_passes), rng)
    if degenerate:
        log.info("history filled by weighted fallback after %d passes", max_passes)
    return items


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def generate_dataset(
    config: GeneratorConfig,
    *,
    utility: UtilityMatrices | None = None,
    threads: int | None = None,
    return_model: bool = False,
):
    """Run the whole pipeline for ``config``.

    ``utility`` lets callers reuse a precomputed (V, T) pair for the same
    seed and latent settings; the grid search relies on that.  With
    ``return_model=True`` the partitions, factors and utilities are returned
    alongside the dataset.
    """
    cfg = config
    part: PartitionSpec = build_partitions(cfg.n_users, cfg.n_items, cfg.K, cfg.p, cfg.c)
    factors: LatentFactors | None = None
    if utility is None:
        factors, utility = build_utilities(
            part, cfg.affinity_matrix, cfg.eps, cfg.sigma, cfg.mu_omega, cfg.master_seed, cfg.noise_mode
        )
    T = utility.T
    if T.shape != (cfg.n_users, cfg.n_items):
        raise ConfigurationError(f"utility shape {T.shape} does not match config")

    pop = sample_popularities(cfg.n_items, cfg.item_pop_spec, derive_stream(cfg.master_seed, "popularity"))
    budgets = sample_budgets(cfg.n_users, cfg.user_budget_spec, cfg.tau, cfg.n_items,
                             derive_stream(cfg.master_seed, "budget"))
    ranks = popularity_ranks(pop, cfg.pdf_mode)
    expo = cfg.delta * (1.0 - ranks)

    def run(u: int):
        probs = np.power(T[u], expo)
        return _history(probs, int(budgets[u]), cfg.max_passes, derive_stream(cfg.master_seed, f"history:{u}"))

    n_threads = thread_count(threads)
    if n_threads == 1:
        results = [run(u) for u in range(cfg.n_users)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(run, range(cfg.n_users)))

    degenerate = [u for u, (_, bad) in enumerate(results) if bad]
    if degenerate:
        log.info("%d user histories needed the weighted fallback", len(degenerate))
    ds = InteractionDataset(
        histories=[h for h, _ in results],
        n_items=cfg.n_items,
        config=cfg,
        popularity=pop,
        budgets=budgets,
        degenerate_users=degenerate,
    )
    if return_model:
        return ds, part, factors, utility
    return ds
