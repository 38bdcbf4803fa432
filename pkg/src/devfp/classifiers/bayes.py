"""Gaussian naive Bayes over numeric attributes with principled missing values.

Each (class, attribute) pair gets a Gaussian fit on the present training
values only, with the standard deviation floored so that constant attributes
keep a finite density. Priors are raw class frequencies, which keeps the
posterior invariant under duplicating the whole training set. Absent query
attributes are skipped; a class that never exhibited a present query
attribute is assigned a fixed tiny density, heavily penalizing it without
producing NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .base import Hyperparams, TrainedModel, VARIANT_NAIVE_BAYES, dataset_arrays

_LOG_MIN_DENSITY = math.log(1e-300)
_LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NaiveBayesModel(TrainedModel):
    priors: tuple[float, ...]
    # [class][attribute]; None where the class had no present training values
    means: tuple[tuple[Optional[float], ...], ...]
    stddevs: tuple[tuple[Optional[float], ...], ...]
    present_rates: tuple[tuple[float, ...], ...]
    variant: str = field(init=False, default=VARIANT_NAIVE_BAYES)

    def distribution(self, values: Sequence[Optional[float]]) -> np.ndarray:
        n_classes = len(self.class_names)
        log_post = np.asarray([math.log(p) for p in self.priors], dtype=np.float64)
        for j, value in enumerate(values):
            if value is None:
                continue
            for c in range(n_classes):
                mean = self.means[c][j]
                if mean is None:
                    log_post[c] += _LOG_MIN_DENSITY
                    continue
                std = self.stddevs[c][j]
                z = (float(value) - mean) / std
                log_post[c] += -_LOG_SQRT_TWO_PI - math.log(std) - 0.5 * z * z
        log_post -= log_post.max()
        post = np.exp(log_post)
        return post / post.sum()


def train_naive_bayes(dataset, hyperparams: Optional[Hyperparams] = None) -> NaiveBayesModel:
    """Fit per-class Gaussians (present values only) and frequency priors."""
    hp = hyperparams or Hyperparams()
    X, y, class_names = dataset_arrays(dataset)
    n, k = X.shape
    std_floor = math.sqrt(hp.nb_variance_floor)
    priors = []
    means = []
    stddevs = []
    present_rates = []
    for c in range(len(class_names)):
        rows = X[y == c]
        priors.append(rows.shape[0] / n)
        class_means: list[Optional[float]] = []
        class_stds: list[Optional[float]] = []
        class_rates: list[float] = []
        for j in range(k):
            column = rows[:, j]
            present = column[~np.isnan(column)]
            class_rates.append(present.shape[0] / rows.shape[0])
            if present.shape[0] == 0:
                class_means.append(None)
                class_stds.append(None)
                continue
            class_means.append(float(present.mean()))
            class_stds.append(max(float(present.std()), std_floor))
        means.append(tuple(class_means))
        stddevs.append(tuple(class_stds))
        present_rates.append(tuple(class_rates))
    return NaiveBayesModel(
        schema=tuple(dataset.attributes),
        class_names=class_names,
        hyperparams=hp,
        priors=tuple(priors),
        means=tuple(means),
        stddevs=tuple(stddevs),
        present_rates=tuple(present_rates),
    )
