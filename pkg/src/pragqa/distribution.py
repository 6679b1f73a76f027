"""Finite distributions and the divergences used throughout the package."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Generic, Iterable, Iterator, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
U = TypeVar("U")

NORMALIZATION_TOL = 1e-9


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class Distribution(Generic[T]):
    """Finite support with probabilities summing to one.

    Support order is preserved; it is the tie-breaking order for
    :meth:`argmax`.
    """

    support: tuple
    probs: tuple

    def __post_init__(self) -> None:
        support = tuple(self.support)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        if len(support) != len(probs):
            raise DistributionError("support and probs differ in length")
        if not support:
            raise DistributionError("empty support")
        if any(not math.isfinite(p) or p < 0 for p in probs):
            raise DistributionError("probabilities must be finite and non-negative")
        if abs(math.fsum(probs) - 1.0) > NORMALIZATION_TOL:
            raise DistributionError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if _has_duplicates(support):
            raise DistributionError("duplicate support items")

    @classmethod
    def from_weights(cls, support: Iterable[T], weights: Iterable[float]) -> "Distribution[T]":
        support = tuple(support)
        w = np.asarray(list(weights), dtype=float)
        if w.size == 0:
            raise DistributionError("empty support")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DistributionError("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise DistributionError("weights sum to zero")
        return cls(support, tuple(w / total))

    @classmethod
    def uniform(cls, support: Iterable[T]) -> "Distribution[T]":
        support = tuple(support)
        if not support:
            raise DistributionError("empty support")
        return cls.from_weights(support, [1.0] * len(support))

    @classmethod
    def point(cls, item: T) -> "Distribution[T]":
        return cls((item,), (1.0,))

    def __len__(self) -> int:
        return len(self.support)

    def __iter__(self) -> Iterator[tuple[T, float]]:
        return iter(zip(self.support, self.probs))

    def __getitem__(self, item: T) -> float:
        for s, p in zip(self.support, self.probs):
            if s == item:
                return p
        return 0.0

    def items(self) -> list[tuple[T, float]]:
        return list(zip(self.support, self.probs))

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))

    def argmax(self) -> T:
        """Most probable item; ties go to the earliest in support order."""
        best = max(self.probs)
        return self.support[self.probs.index(best)]

    def map(self, fn: Callable[[T], U], order: Sequence[U] | None = None) -> "Distribution[U]":
        """Push the distribution through ``fn``, merging mass on equal images."""
        acc: dict = {}
        for s, p in self:
            key = fn(s)
            acc[key] = acc.get(key, 0.0) + p
        keys = list(order) if order is not None else list(acc)
        missing = set(acc) - set(keys)
        if missing:
            raise DistributionError(f"images {missing!r} not in the given order")
        return Distribution(tuple(keys), tuple(acc.get(k, 0.0) for k in keys))

    def vector(self, order: Sequence[T]) -> np.ndarray:
        """Probabilities laid out in ``order`` (a permutation of the support)."""
        order = tuple(order)
        if (
            len(order) != len(self.support)
            or _has_duplicates(order)
            or any(not any(o == s for s in self.support) for o in order)
        ):
            raise DistributionError("order must be a permutation of the support")
        return np.array([self[o] for o in order])


def _has_duplicates(items: tuple) -> bool:
    try:
        return len(set(items)) != len(items)
    except TypeError:
        return any(a == b for i, a in enumerate(items) for b in items[i + 1:])


def softmax_probs(scores: Sequence[float], alpha: float) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise DistributionError("empty choice set")
    if not np.all(np.isfinite(s)):
        raise DistributionError("non-finite score")
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DistributionError(f"alpha must be positive and finite, got {alpha!r}")
    z = alpha * (s - s.max())
    w = np.exp(z)
    return w / w.sum()


def softmax(scores: Sequence[float], alpha: float, support: Sequence | None = None) -> Distribution:
    """Soft-max choice rule ``p_i ∝ exp(alpha * score_i)``.

    Without ``support`` the items are the indices ``0..n-1``.
    """
    probs = softmax_probs(scores, alpha)
    items = tuple(range(len(probs))) if support is None else tuple(support)
    return Distribution(items, tuple(probs))


def _aligned(p: Distribution, q: Distribution) -> tuple[np.ndarray, np.ndarray]:
    if len(p) != len(q):
        raise DistributionError("support mismatch")
    try:
        qv = q.vector(p.support)
    except DistributionError as exc:
        raise DistributionError("support mismatch") from exc
    return np.asarray(p.probs), qv


def kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    nz = p > 0
    if np.any(q[nz] <= 0):
        raise DistributionError("infinite divergence")
    # Gibbs: rounding can only push the sum a few ulps below zero
    return max(0.0, float(np.sum(p[nz] * np.log2(p[nz] / q[nz]))))


def kl_divergence(p: Distribution, q: Distribution) -> float:
    """KL(p || q) in bits over a shared support."""
    pv, qv = _aligned(p, q)
    return kl_bits(pv, qv)


def jsd_bits(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    total = p + q  # the mixture is total / 2; halving can underflow subnormals

    def half(a: np.ndarray) -> float:
        nz = a > 0
        return float(np.sum(a[nz] * np.log2(2.0 * a[nz] / total[nz])))

    return max(0.0, 0.5 * half(p) + 0.5 * half(q))


def jsd(p: Distribution, q: Distribution) -> float:
    """Jensen-Shannon divergence in bits; bounded by 1."""
    pv, qv = _aligned(p, q)
    return jsd_bits(pv, qv)
