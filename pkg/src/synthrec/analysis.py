"""Measurements on interaction datasets and grid-search calibration.

Degree histograms, per-user topic shares, continuous power-law fits with
KS-selected ``x_min``, KS distances and an exhaustive grid search that
matches a generator configuration to a reference dataset.
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .generator import GeneratorConfig, InteractionDataset, generate_dataset
from .latent import ConfigurationError, PartitionSpec, build_partitions, build_utilities
from .sampling import LongTailSpec, ParameterError

log = logging.getLogger(__name__)

GRID_AXES = ("beta", "lambda", "delta", "tau")


class EstimationError(ValueError):
    """Raised when a fit has too little data to be meaningful."""


# --------------------------------------------------------------------------- #
# Degrees and shares
# --------------------------------------------------------------------------- #


def interaction_coords(dataset: InteractionDataset) -> np.ndarray:
    """``(n_interactions, 2)`` array of ``(user, item)`` pairs in lexicographic order."""
    if dataset.n_interactions == 0:
        return np.empty((0, 2), dtype=np.int64)
    users = np.repeat(np.arange(dataset.n_users), [len(h) for h in dataset.histories])
    items = np.concatenate([np.sort(np.asarray(h, dtype=np.int64)) for h in dataset.histories])
    return np.column_stack([users, items]).astype(np.int64)


def user_degrees(dataset: InteractionDataset) -> np.ndarray:
    return np.array([len(h) for h in dataset.histories], dtype=np.int64)


def item_degrees(dataset: InteractionDataset) -> np.ndarray:
    if dataset.n_interactions == 0:
        return np.zeros(dataset.n_items, dtype=np.int64)
    return np.bincount(np.concatenate(dataset.histories).astype(np.int64), minlength=dataset.n_items)


@dataclass(frozen=True)
class DegreeHistogram:
    axis: str
    bins: dict[int, int]
    subset: str | None = None
    degrees: np.ndarray = field(default=None, repr=False)

    @property
    def total(self) -> int:
        return sum(self.bins.values())

    def rows(self) -> list[tuple[int, int]]:
        return sorted(self.bins.items())


def _parse_subset(subset: str) -> tuple[str, int]:
    # "population:0" / "category:1"; also accepts the U1 / I2 shorthand (1-based)
    s = subset.strip()
    if ":" in s:
        kind, _, idx = s.partition(":")
        kind = kind.strip().lower()
        if kind in ("population", "category") and idx.strip().isdigit():
            return kind, int(idx)
    elif len(s) > 1 and s[0] in "UuIi" and s[1:].isdigit() and int(s[1:]) >= 1:
        return ("population" if s[0] in "Uu" else "category"), int(s[1:]) - 1
    raise ParameterError(f"unknown subset label {subset!r}")


def degree_histogram(dataset: InteractionDataset, axis: str, subset: str | None = None,
                     partition: PartitionSpec | None = None) -> DegreeHistogram:
    """Histogram of per-entity interaction counts, zero degrees included.

    A ``subset`` of the same kind as ``axis`` (population for users,
    category for items) restricts the entities; a subset of the other kind
    restricts the interactions that are counted.
    """
    if axis not in ("users", "items"):
        raise ParameterError(f"axis must be 'users' or 'items', got {axis!r}")
    if subset is None:
        deg = user_degrees(dataset) if axis == "users" else item_degrees(dataset)
    else:
        if partition is None:
            raise ParameterError("subset filtering needs a partition")
        kind, idx = _parse_subset(subset)
        groups = partition.p if kind == "population" else partition.c
        if idx >= groups:
            raise ParameterError(f"unknown subset label {subset!r}")
        coords = interaction_coords(dataset)
        if kind == "population":
            keep_users = partition.user_assignment == idx
            coords = coords[keep_users[coords[:, 0]]]
        else:
            keep_items = partition.item_assignment == idx
            coords = coords[keep_items[coords[:, 1]]]
        col = 0 if axis == "users" else 1
        size = dataset.n_users if axis == "users" else dataset.n_items
        deg = np.bincount(coords[:, col], minlength=size)
        if axis == "users" and kind == "population":
            deg = deg[partition.user_assignment == idx]
        elif axis == "items" and kind == "category":
            deg = deg[partition.item_assignment == idx]
    values, counts = np.unique(deg, return_counts=True)
    bins = {int(v): int(c) for v, c in zip(values, counts)}
    return DegreeHistogram(axis=axis, bins=bins, subset=subset, degrees=np.asarray(deg))


@dataclass(frozen=True)
class CategoryShareDistribution:
    reference_category: int
    shares: dict[int, np.ndarray]  # population -> per-user share
    excluded: int = 0

    def mean_share(self, population: int) -> float:
        return float(np.mean(self.shares[population])) if len(self.shares[population]) else float("nan")

    def frequencies(self, population: int, bins: int = 20) -> list[tuple[float, float]]:
        """``(share, fraction of users)`` rows for a histogram over [0, 1]."""
        counts, edges = np.histogram(self.shares[population], bins=bins, range=(0.0, 1.0))
        total = max(counts.sum(), 1)
        centres = 0.5 * (edges[:-1] + edges[1:])
        return [(float(c), float(n / total)) for c, n in zip(centres, counts)]


def category_share(dataset: InteractionDataset, partition: PartitionSpec,
                   reference_category: int = 0) -> CategoryShareDistribution:
    if not 0 <= reference_category < partition.c:
        raise ParameterError(f"reference category {reference_category} out of range")
    in_ref = partition.item_assignment == reference_category
    shares: dict[int, list[float]] = {j: [] for j in range(partition.p)}
    excluded = 0
    for u, h in enumerate(dataset.histories):
        if len(h) == 0:
            excluded += 1
            continue
        shares[int(partition.user_assignment[u])].append(float(np.mean(in_ref[np.asarray(h)])))
    return CategoryShareDistribution(
        reference_category=reference_category,
        shares={j: np.asarray(v) for j, v in shares.items()},
        excluded=excluded,
    )


def cross_affinity_share(dataset: InteractionDataset, partition: PartitionSpec, affinity) -> float:
    """Fraction of all interactions whose item category is not preferred by the user's population."""
    coords = interaction_coords(dataset)
    if coords.shape[0] == 0:
        return 0.0
    aff = np.asarray(affinity, dtype=bool)
    ok = aff[partition.user_assignment[coords[:, 0]], partition.item_assignment[coords[:, 1]]]
    return float(1.0 - ok.mean())


# --------------------------------------------------------------------------- #
# Power-law fitting and goodness of fit
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    x_min: float
    n_tail: int
    ks: float
    n_excluded: int = 0  # nonpositive samples dropped before fitting


MIN_TAIL = 10


def _mle_exponent(tail: np.ndarray, x_min: float) -> float:
    s = np.sum(np.log(tail / x_min))
    if not s > 0:
        raise EstimationError("zero log-spread in the tail; exponent undefined")
    return 1.0 + tail.size / s


def _tail_ks(tail_sorted: np.ndarray, x_min: float, a: float) -> float:
    n = tail_sorted.size
    model = 1.0 - (tail_sorted / x_min) ** (1.0 - a)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(n) / n
    return float(max(np.max(hi - model), np.max(model - lo)))


def fit_power_law(samples, x_min: float | None = None, max_candidates: int = 1000) -> PowerLawFit:
    """Continuous MLE ``1 + n / sum(log(x / x_min))`` over the tail ``x >= x_min``.

    Without ``x_min`` every observed value (thinned to ``max_candidates``
    quantiles for large continuous samples) is tried and the one minimising
    the KS distance between tail and fitted law is kept.
    """
    x = np.asarray(samples, dtype=float).ravel()
    positive = x[x > 0]
    excluded = x.size - positive.size
    x = np.sort(positive)
    if x_min is not None:
        tail = x[x >= x_min]
        if tail.size < MIN_TAIL:
            raise EstimationError(f"need at least {MIN_TAIL} samples >= x_min, got {tail.size}")
        a = _mle_exponent(tail, x_min)
        return PowerLawFit(a, float(x_min), int(tail.size), _tail_ks(tail, x_min, a), excluded)

    if x.size < MIN_TAIL:
        raise EstimationError(f"need at least {MIN_TAIL} positive samples, got {x.size}")
    candidates = np.unique(x[: x.size - MIN_TAIL + 1])
    if candidates.size > max_candidates:
        candidates = np.unique(np.quantile(candidates, np.linspace(0, 1, max_candidates), method="lower"))
    best: PowerLawFit | None = None
    for xm in candidates:
        tail = x[np.searchsorted(x, xm, side="left"):]
        if tail.size < MIN_TAIL:
            break
        try:
            a = _mle_exponent(tail, xm)
        except EstimationError:
            continue
        d = _tail_ks(tail, xm, a)
        if best is None or d < best.ks:
            best = PowerLawFit(a, float(xm), int(tail.size), d, excluded)
    if best is None:
        raise EstimationError("no x_min candidate leaves a tail with positive log-spread")
    return best


def ks_distance(samples, reference) -> float:
    """Sup-distance between the empirical CDF of ``samples`` and ``reference``.

    ``reference`` is either a long-tail spec (analytic CDF) or a second
    sample (two-sample statistic).
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ParameterError("ks_distance needs a nonempty sample")
    if isinstance(reference, LongTailSpec):
        n = x.size
        model = np.asarray(reference.cdf(x), dtype=float)
        # ties: the ECDF jumps at the last copy of each value
        upper = np.searchsorted(x, x, side="right") / n
        lower = np.searchsorted(x, x, side="left") / n
        return float(max(np.max(upper - model), np.max(model - lower)))
    y = np.sort(np.asarray(reference, dtype=float).ravel())
    if y.size == 0:
        raise ParameterError("ks_distance needs a nonempty reference sample")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


def power_law_vs_normal(samples) -> tuple[float, float]:
    """Total log-likelihoods ``(power_law, normal)`` of MLE fits on the positive samples.

    The power law uses ``x_min = min(samples)`` so both models see the same data.
    """
    x = np.asarray(samples, dtype=float).ravel()
    x = x[x > 0]
    if x.size < MIN_TAIL:
        raise EstimationError("too few positive samples to compare fits")
    xm = float(x.min())
    a = _mle_exponent(x, xm)
    ll_pl = float(np.sum(np.log((a - 1) / xm) - a * np.log(x / xm)))
    mu, sd = float(x.mean()), float(x.std())
    if not sd > 0:
        raise EstimationError("zero variance; normal fit undefined")
    ll_norm = float(np.sum(-0.5 * ((x - mu) / sd) ** 2 - math.log(sd * math.sqrt(2 * math.pi))))
    return ll_pl, ll_norm


# --------------------------------------------------------------------------- #
# Calibration
# --------------------------------------------------------------------------- #


@dataclass
class FitResult:
    best: dict
    objective: float
    evaluations: list[tuple[dict, float]]

    def table(self) -> list[tuple]:
        return [tuple(p[k] for k in GRID_AXES) + (obj,) for p, obj in self.evaluations]


def _with_exponent(spec: LongTailSpec, value: float) -> LongTailSpec:
    if not hasattr(spec, "exponent"):
        raise ConfigurationError(f"{spec.family} has no exponent to calibrate")
    return dataclasses.replace(spec, exponent=float(value))


def config_for(base: GeneratorConfig, params: dict) -> GeneratorConfig:
    """``base`` with the grid parameters (beta, lambda, delta, tau) substituted."""
    changes = {}
    if "beta" in params:
        changes["user_budget_spec"] = _with_exponent(base.user_budget_spec, params["beta"])
    if "lambda" in params:
        changes["item_pop_spec"] = _with_exponent(base.item_pop_spec, params["lambda"])
    if "delta" in params:
        changes["delta"] = float(params["delta"])
    if "tau" in params:
        tau = params["tau"]
        if float(tau) != int(tau):
            raise ConfigurationError(f"tau must be an integer, got {tau}")
        changes["tau"] = int(tau)
    return base.replace(**changes)


def calibration_objective(reference: InteractionDataset, candidate: InteractionDataset) -> float:
    # KS is invariant under monotone maps, so this equals the log-degree statistic
    # while keeping zero-degree items in play
    return ks_distance(user_degrees(candidate), user_degrees(reference)) + ks_distance(
        item_degrees(candidate), item_degrees(reference)
    )


def normalize_grid(grid: dict) -> dict[str, list]:
    unknown = set(grid) - set(GRID_AXES)
    if unknown:
        raise ConfigurationError(f"unknown grid axes {sorted(unknown)}; expected {GRID_AXES}")
    out = {}
    for k in GRID_AXES:
        if k not in grid:
            continue
        vals = grid[k]
        vals = [vals] if np.isscalar(vals) else list(vals)
        if not vals:
            raise ConfigurationError("empty grid")
        out[k] = sorted(vals)
    if not out:
        raise ConfigurationError("empty grid")
    return out


def grid_search_fit(reference: InteractionDataset, grid: dict, base_config: GeneratorConfig,
                    seeds=(0, 1, 2), min_size: int = 100) -> FitResult:
    """Exhaustive search for the (beta, lambda, delta, tau) that best mimic ``reference``.

    Every grid point is simulated once per seed at the reference's size; the
    objective is the user-degree plus item-degree two-sample KS distance,
    averaged over seeds.  Ties go to the lexicographically smallest point.
    """
    grid = normalize_grid(grid)
    seeds = list(seeds)
    if not seeds:
        raise ConfigurationError("need at least one seed")
    if reference.n_users < min_size or reference.n_items < min_size:
        raise ConfigurationError(f"reference must have at least {min_size} users and items")
    base = base_config.replace(n_users=reference.n_users, n_items=reference.n_items)

    # latent factors and utilities do not depend on the grid axes
    utilities = {}
    for s in seeds:
        cfg = base.replace(master_seed=s)
        part = build_partitions(cfg.n_users, cfg.n_items, cfg.K, cfg.p, cfg.c)
        utilities[s] = build_utilities(part, cfg.affinity_matrix, cfg.eps, cfg.sigma, cfg.mu_omega,
                                       s, cfg.noise_mode)[1]

    axes = list(grid)
    evaluations: list[tuple[dict, float]] = []
    best_params, best_obj = None, math.inf
    for point in itertools.product(*(grid[k] for k in axes)):
        params = dict(zip(axes, point))
        try:
            cfg = config_for(base, params)
            objs = [calibration_objective(reference, generate_dataset(cfg.replace(master_seed=s), utility=utilities[s]))
                    for s in seeds]
            obj = float(np.mean(objs))
        except (ConfigurationError, ParameterError, EstimationError) as e:
            log.warning("grid point %s failed: %s", params, e)
            obj = math.inf
        full = {k: params.get(k) for k in GRID_AXES}
        evaluations.append((full, obj))
        if obj < best_obj:
            best_params, best_obj = full, obj
    if best_params is None:
        best_params = evaluations[0][0]
    return FitResult(best=best_params, objective=best_obj, evaluations=evaluations)
