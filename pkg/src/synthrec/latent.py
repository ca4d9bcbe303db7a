"""Populations, topic categories and the latent-factor utility model.

Users are split into ``p`` populations and items into ``c`` categories by
contiguous index ranges.  The ``K`` latent dimensions are cut into ``c``
equal blocks, one per category.  An item only keeps its own category block
active; a user keeps the blocks of every category its population prefers
(the affinity matrix).  Inactive coordinates of the Dirichlet concentration
are set to ``eps``, which is what pulls populations toward their topics.

Indices are 0-based throughout the library; file formats shift to 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import derive_stream, sample_beta_mean_var, sample_dirichlet

USER_SCALE = 10.0
USER_BASE_CONC = 1.0
ITEM_SCALE = 0.1
ITEM_BASE_CONC = 100.0


class ConfigurationError(ValueError):
    """Raised for inconsistent generator settings."""


def _contiguous_groups(n: int, groups: int) -> np.ndarray:
    size = n // groups
    out = np.minimum(np.arange(n) // max(size, 1), groups - 1) if size else np.full(n, groups - 1)
    return out.astype(np.int64)


@dataclass(frozen=True)
class PartitionSpec:
    n_users: int
    n_items: int
    K: int
    p: int
    c: int
    user_assignment: np.ndarray  # population of each user
    item_assignment: np.ndarray  # category of each item

    @property
    def block_size(self) -> int:
        return self.K // self.c

    def block(self, category: int) -> range:
        """Latent dimensions owned by ``category``."""
        return range(category * self.block_size, (category + 1) * self.block_size)

    @property
    def block_map(self) -> dict[int, range]:
        return {j: self.block(j) for j in range(self.c)}

    def users_in(self, population: int) -> np.ndarray:
        return np.flatnonzero(self.user_assignment == population)

    def items_in(self, category: int) -> np.ndarray:
        return np.flatnonzero(self.item_assignment == category)


def build_partitions(n_users: int, n_items: int, K: int, p: int, c: int) -> PartitionSpec:
    if n_users < 1 or n_items < 1:
        raise ConfigurationError("n_users and n_items must be >= 1")
    if K < 1 or p < 1 or c < 1:
        raise ConfigurationError("K, p and c must be >= 1")
    if c > K:
        raise ConfigurationError(f"c must be <= K (got c={c}, K={K})")
    if K % c:
        raise ConfigurationError(f"K must be divisible by c (got K={K}, c={c})")
    return PartitionSpec(
        n_users=n_users,
        n_items=n_items,
        K=K,
        p=p,
        c=c,
        user_assignment=_contiguous_groups(n_users, p),
        item_assignment=_contiguous_groups(n_items, c),
    )


def default_affinity(p: int, c: int) -> np.ndarray:
    """Boolean p x c matrix of which categories each population prefers.

    ``p == c`` gives the identity.  ``p == c + 1`` inserts one neutral
    population (all categories) in the middle, so p=3, c=2 yields
    ``[[1, 0], [1, 1], [0, 1]]``.  A single population is neutral.  Any
    other shape assigns population ``j`` to category ``j mod c``.
    """
    if p == 1:
        return np.ones((1, c), dtype=bool)
    if p == c + 1:
        eye = np.eye(c, dtype=bool)
        mid = c // 2
        return np.vstack([eye[:mid], np.ones((1, c), dtype=bool), eye[mid:]])
    aff = np.zeros((p, c), dtype=bool)
    aff[np.arange(p), np.arange(p) % c] = True
    return aff


def check_affinity(affinity, p: int, c: int) -> np.ndarray:
    aff = np.asarray(affinity, dtype=bool)
    if aff.shape != (p, c):
        raise ConfigurationError(f"affinity must have shape ({p}, {c}), got {aff.shape}")
    if not aff.any(axis=1).all():
        raise ConfigurationError("every population needs at least one preferred category")
    return aff


def _masked_concentration(active: np.ndarray, K: int, base: float, scale: float, eps: float, rng) -> np.ndarray:
    if not eps > 0:
        raise ConfigurationError("eps must be > 0")
    conc = np.full(K, float(eps))
    conc[active] = sample_dirichlet(np.full(active.size, base), rng) * scale
    return conc


def item_concentration(item: int, spec: PartitionSpec, eps: float, rng) -> np.ndarray:
    active = np.asarray(spec.block(int(spec.item_assignment[item])))
    return _masked_concentration(active, spec.K, ITEM_BASE_CONC, ITEM_SCALE, eps, rng)


def user_active_dims(user: int, spec: PartitionSpec, affinity) -> np.ndarray:
    cats = np.flatnonzero(np.asarray(affinity)[spec.user_assignment[user]])
    return np.concatenate([np.asarray(spec.block(int(j))) for j in cats])


def user_concentration(user: int, spec: PartitionSpec, affinity, eps: float, rng) -> np.ndarray:
    active = user_active_dims(user, spec, affinity)
    return _masked_concentration(active, spec.K, USER_BASE_CONC, USER_SCALE, eps, rng)


@dataclass(frozen=True)
class LatentFactors:
    rho: np.ndarray  # users x K
    alpha: np.ndarray  # items x K
    mu_rho: np.ndarray
    mu_alpha: np.ndarray


def sample_latent_factors(spec: PartitionSpec, affinity, eps: float, master_seed: int) -> LatentFactors:
    """One concentration vector and one Dirichlet draw per user and per item.

    Each entity uses its own stream (``"user:u"`` / ``"item:i"``), so the
    result does not depend on the order entities are processed in.
    """
    aff = check_affinity(affinity, spec.p, spec.c)
    mu_rho = np.empty((spec.n_users, spec.K))
    rho = np.empty_like(mu_rho)
    for u in range(spec.n_users):
        rng = derive_stream(master_seed, f"user:{u}")
        mu_rho[u] = user_concentration(u, spec, aff, eps, rng)
        rho[u] = sample_dirichlet(mu_rho[u], rng)
    mu_alpha = np.empty((spec.n_items, spec.K))
    alpha = np.empty_like(mu_alpha)
    for i in range(spec.n_items):
        rng = derive_stream(master_seed, f"item:{i}")
        mu_alpha[i] = item_concentration(i, spec, eps, rng)
        alpha[i] = sample_dirichlet(mu_alpha[i], rng)
    return LatentFactors(rho=rho, alpha=alpha, mu_rho=mu_rho, mu_alpha=mu_alpha)


@dataclass(frozen=True)
class UtilityMatrices:
    V: np.ndarray
    T: np.ndarray


def true_utility(factors: LatentFactors, sigma: float, master_seed: int) -> np.ndarray:
    """V[u, i] ~ Beta with mean rho_u . alpha_i and variance ``sigma``."""
    if not sigma > 0:
        raise ConfigurationError("sigma must be > 0")
    means = np.clip(factors.rho @ factors.alpha.T, 0.0, 1.0)
    V = np.empty_like(means)
    for u in range(means.shape[0]):
        V[u] = sample_beta_mean_var(means[u], sigma, derive_stream(master_seed, f"utility:{u}"))
    return V


def blur_utility(V: np.ndarray, mu_omega: float, sigma: float, master_seed: int, noise_mode: str = "per_entry") -> np.ndarray:
    """Observed utility T = V * omega with omega ~ Beta(mean mu_omega, var sigma).

    ``noise_mode="per_entry"`` draws omega independently for every cell;
    ``"global"`` draws a single omega for the whole matrix.
    """
    if not 0 < mu_omega < 1:
        raise ConfigurationError("mu_omega must lie in (0, 1)")
    if noise_mode == "global":
        omega = sample_beta_mean_var(mu_omega, sigma, derive_stream(master_seed, "omega"))
        return V * omega
    if noise_mode != "per_entry":
        raise ConfigurationError(f"unknown noise_mode {noise_mode!r}")
    T = np.empty_like(V)
    for u in range(V.shape[0]):
        omega = sample_beta_mean_var(mu_omega, sigma, derive_stream(master_seed, f"omega:{u}"), size=V.shape[1])
        T[u] = V[u] * omega
    return T


def build_utilities(spec: PartitionSpec, affinity, eps: float, sigma: float, mu_omega: float, master_seed: int,
                    noise_mode: str = "per_entry") -> tuple[LatentFactors, UtilityMatrices]:
    factors = sample_latent_factors(spec, affinity, eps, master_seed)
    V = true_utility(factors, sigma, master_seed)
    T = blur_utility(V, mu_omega, sigma, master_seed, noise_mode)
    return factors, UtilityMatrices(V=V, T=T)

