"""Independent reference computations used by several test modules."""

import itertools

import numpy as np


def pass_process_inclusion(probs, budget: int, tol: float = 1e-15, max_passes: int = 100_000) -> np.ndarray:
    """Exact per-item inclusion probabilities of the repeated-pass sampler.

    Enumerates accepted-set states: each pass unions in an independent
    Bernoulli subset until the set holds ``budget`` items, then a uniform
    ``budget``-subset is kept.  Only practical for a handful of items.
    """
    probs = np.asarray(probs, dtype=float)
    n = probs.size
    subsets = list(itertools.product([0, 1], repeat=n))

    def p_subset(mask):
        return float(np.prod([q if m else 1 - q for q, m in zip(probs, mask)]))

    pass_dist = {mask: p_subset(mask) for mask in subsets}
    transient = {tuple([0] * n): 1.0}
    inclusion = np.zeros(n)
    for _ in range(max_passes):
        nxt: dict = {}
        for state, mass in transient.items():
            for draw, p in pass_dist.items():
                if p == 0:
                    continue
                new = tuple(a | b for a, b in zip(state, draw))
                size = sum(new)
                if size >= budget:
                    inclusion += mass * p * np.array(new) * budget / size
                else:
                    nxt[new] = nxt.get(new, 0.0) + mass * p
        transient = nxt
        if sum(transient.values()) < tol:
            break
    return inclusion
