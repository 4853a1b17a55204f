"""Finite-sample conditional independence tester.

A Poisson(m) number of rows is drawn, split into bins by the value of the
conditioning variables, and every bin with at least four rows contributes
``|S_z| * phi(S_z)`` to the statistic. The test accepts independence when the
total stays under ``tau``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._seeding import mix_seed
from .errors import InsufficientData, InvalidParameter, TooFewSamples
from .model import BayesNet, Dataset, sample_dataset

GAMMA = 1.0 - 5.0 / (2.0 * math.e)
MIN_BIN = 4
_DENSE_BIN_LIMIT = 1 << 22


@dataclass(frozen=True)
class TesterConfig:
    epsilon: float = 0.1
    c_prime: float = 1.0
    gamma: float = GAMMA
    beta: float | None = None
    rng_seed: int = 0

    __test__ = False

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidParameter(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.c_prime > 0:
            raise InvalidParameter(f"c_prime must be positive, got {self.c_prime}")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidParameter(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.beta is not None and not self.beta > 0:
            raise InvalidParameter(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class CiDecision:
    independent: bool
    statistic: float
    threshold: float
    bins_used: int
    samples_drawn: int
    binned: int = 0  # total rows over all bins, always equal to samples_drawn


def poisson_count(m: float, seed: int) -> int:
    if not m > 0:
        raise InvalidParameter(f"Poisson mean must be positive, got {m}")
    return int(np.random.default_rng(seed).poisson(m))


def epsilon_prime(epsilon: float, card_x: int, card_y: int) -> float:
    if card_x < 2 or card_y < 2:
        raise InvalidParameter("cardinalities must be at least 2")
    return epsilon / math.sqrt(card_x * card_y)


def expected_m_from_beta(beta: float, M: float, eps_eff: float) -> float:
    """Expected sample count for scale factor ``beta`` and support size ``M``."""
    if not beta > 0 or M < 1 or not 0 < eps_eff < 1:
        raise InvalidParameter("need beta > 0, M >= 1 and eps in (0, 1)")
    inner = min(M ** (7 / 8) / eps_eff, M ** (6 / 7) / eps_eff ** (8 / 7))
    return beta * max(math.sqrt(M) / eps_eff**2, inner)


def tau_threshold(m: float, M: float, eps_prime: float, gamma: float) -> float:
    return gamma / 2.0 * min(m * eps_prime**2, (m * eps_prime) ** 4 / M**3)


def phi_from_counts(counts: np.ndarray) -> np.ndarray:
    """Unbiased estimate of ||P - P_X x P_Y||_2^2 from a contingency table.

    ``counts`` has shape (..., card_x, card_y); leading axes are independent
    tables. Every product below counts ordered tuples of *distinct* samples,
    so each term is an unbiased U-statistic:

    * sum p_xy^2          <- D / (K)_2,  D = sum n_xy (n_xy - 1)
    * sum p_xy p_x p_y    <- (W - D) / (K)_3,  W = sum n_xy (n_x - 1)(n_y - 1)
    * sum p_x^2 p_y^2     <- (PQ - 4W + 2D) / (K)_4

    where P = sum n_x (n_x - 1), Q = sum n_y (n_y - 1) and (K)_r is the
    falling factorial. The last numerator is PQ with the four overlap events
    between the x-pair and the y-pair removed by inclusion-exclusion.
    """
    n = np.asarray(counts, dtype=float)
    k = n.sum(axis=(-2, -1))
    if np.any(k < MIN_BIN):
        raise TooFewSamples(f"phi needs at least {MIN_BIN} samples per table")
    nx = n.sum(axis=-1)
    ny = n.sum(axis=-2)
    d = (n * (n - 1)).sum(axis=(-2, -1))
    w = (n * (nx[..., :, None] - 1) * (ny[..., None, :] - 1)).sum(axis=(-2, -1))
    p = (nx * (nx - 1)).sum(axis=-1)
    q = (ny * (ny - 1)).sum(axis=-1)
    k2 = k * (k - 1)
    k3 = k2 * (k - 2)
    k4 = k3 * (k - 3)
    return d / k2 - 2.0 * (w - d) / k3 + (p * q - 4.0 * w + 2.0 * d) / k4


def phi_statistic(pairs, card_x: int, card_y: int) -> float:
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.shape[0] < MIN_BIN:
        raise TooFewSamples(f"phi needs at least {MIN_BIN} samples, got {arr.shape[0]}")
    counts = np.bincount(arr[:, 0] * card_y + arr[:, 1], minlength=card_x * card_y)
    return float(phi_from_counts(counts.reshape(card_x, card_y)))


def _rows_for_test(source, m: float | None, seed: int) -> tuple[np.ndarray, float]:
    if isinstance(source, BayesNet):
        if m is None:
            raise InvalidParameter("a generative source needs an expected sample count m")
        k = poisson_count(m, mix_seed(seed, 0))
        return sample_dataset(source, k, mix_seed(seed, 1)).rows, m
    if isinstance(source, Dataset):
        if source.poisson_mean is not None:
            return source.rows, source.poisson_mean if m is None else m
        if m is None:
            raise InvalidParameter("a fixed dataset needs an expected sample count m")
        k = poisson_count(m, mix_seed(seed, 0))
        if k > len(source):
            raise InsufficientData(k, len(source))
        return source.rows[:k], m
    raise InvalidParameter(f"unsupported data source {type(source).__name__}")


def ci_test(
    source,
    i: int,
    j: int,
    b: Iterable[int],
    config: TesterConfig,
    m: float | None = None,
    seed: int | None = None,
) -> CiDecision:
    """Run the binned tester for X_i _||_ X_j | X_b.

    ``source`` is a ``BayesNet`` (fresh Poisson draw), a ``Dataset`` (first K
    rows of a fixed sample, K ~ Poisson(m)) or a ``Dataset`` carrying
    ``poisson_mean`` (already Poissonized, every row used).
    """
    b = tuple(sorted(set(b)))
    if i == j or i in b or j in b:
        raise InvalidParameter("conditioning set must exclude the tested pair")
    if m is not None and m < 1:
        raise InvalidParameter(f"expected sample count must be >= 1, got {m}")
    variables = source.variables
    cx, cy = variables[i].card, variables[j].card
    big_m = math.prod(variables[k].card for k in b)
    seed = config.rng_seed if seed is None else seed
    rows, m_eff = _rows_for_test(source, m, seed)
    K = rows.shape[0]

    xy = rows[:, i] * cy + rows[:, j]
    if big_m * cx * cy <= _DENSE_BIN_LIMIT:
        z = np.zeros(K, dtype=np.int64)
        for k in b:
            z = z * variables[k].card + rows[:, k]
        nbins = big_m
    else:
        _, z = np.unique(rows[:, list(b)], axis=0, return_inverse=True)
        z = z.reshape(-1)
        nbins = int(z.max()) + 1 if K else 0
    counts = np.bincount(z * (cx * cy) + xy, minlength=nbins * cx * cy).reshape(nbins, cx, cy)
    sizes = counts.sum(axis=(1, 2))
    used = sizes >= MIN_BIN
    stat = float((sizes[used] * phi_from_counts(counts[used])).sum()) if used.any() else 0.0

    tau = tau_threshold(m_eff, big_m, epsilon_prime(config.epsilon, cx, cy), config.gamma)
    return CiDecision(
        independent=stat <= tau,
        statistic=stat,
        threshold=tau,
        bins_used=int(used.sum()),
        samples_drawn=int(K),
        binned=int(sizes.sum()),
    )
