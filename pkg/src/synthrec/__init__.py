"""Synthetic user-item interaction data with populations, topics and long tails.

Quick start::

    from synthrec import GeneratorConfig, PowerLaw, generate_dataset

    cfg = GeneratorConfig(n_users=1000, n_items=1000, K=4, p=2, c=2,
                          item_pop_spec=PowerLaw(1.99), user_budget_spec=PowerLaw(1.91),
                          master_seed=7)
    ds = generate_dataset(cfg)
    ds.histories[0]   # sorted item indices of user 0
"""

__version__ = "0.1.0"

from .sampling import (  # noqa: E402
    LogNormal,
    LongTailSpec,
    ParameterError,
    PowerLaw,
    PowerLawExpCutoff,
    RandomStream,
    StretchedExponential,
    derive_stream,
)
from .latent import ConfigurationError, build_partitions, default_affinity  # noqa: E402
from .generator import GeneratorConfig, InteractionDataset, generate_dataset  # noqa: E402
from .analysis import (  # noqa: E402
    category_share,
    degree_histogram,
    fit_power_law,
    grid_search_fit,
    ks_distance,
)

__all__ = [
    "ConfigurationError",
    "GeneratorConfig",
    "InteractionDataset",
    "LogNormal",
    "LongTailSpec",
    "ParameterError",
    "PowerLaw",
    "PowerLawExpCutoff",
    "RandomStream",
    "StretchedExponential",
    "build_partitions",
    "category_share",
    "default_affinity",
    "degree_histogram",
    "derive_stream",
    "fit_power_law",
    "generate_dataset",
    "grid_search_fit",
    "ks_distance",
]
