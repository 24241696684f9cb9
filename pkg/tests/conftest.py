from collections import Counter

import numpy as np

from priorsketch.dataset import Dataset, Entity
from priorsketch.formula import VariableSpec, parse_model


def truth_dataset(coeffs=(2.0, 3.0), sigma=1.0, rows=200, seed=17):
    """Complete dataset drawn from y = c1*x1 + c2*x2 + Normal(0, sigma)."""
    model = parse_model("y ~ 0 + x1 + x2")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 100.0, size=(rows, 2))
    y = X @ np.asarray(coeffs, dtype=float) + rng.normal(0.0, sigma, size=rows)
    lo = float(min(0.0, np.floor(y.min())))
    hi = float(max(1.0, np.ceil(y.max())))
    dataset = Dataset([
        VariableSpec("x1", "predictor"),
        VariableSpec("x2", "predictor"),
        VariableSpec("y", "response", range=(lo, hi)),
    ], seed=seed)
    for i in range(rows):
        dataset.entities.append(Entity(id=f"e{i + 1}", values={
            "x1": float(X[i, 0]), "x2": float(X[i, 1]), "y": float(y[i]),
        }))
    dataset._next_id = rows + 1
    dataset._check_invariants()
    return model, dataset


def value_multiset(dataset) -> Counter:
    """(variable, value) pairs over the whole dataset, with multiplicity."""
    pairs = Counter()
    for ent in dataset.entities:
        for name, value in ent.values.items():
            pairs[(name, value)] += 1
    return pairs
