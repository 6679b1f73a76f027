"""NumPy implementation of the enumeration kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled version is tested against.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def _policy_value(eu: np.ndarray, alpha: float) -> float:
    z = alpha * (eu - eu.max())
    w = np.exp(z)
    return float(w @ eu / w.sum())


def dp_value(utilities: np.ndarray, prior: np.ndarray, alpha: float) -> float:
    """Expected utility of a soft-max policy over options.

    ``utilities`` is (worlds, options); ``prior`` is over worlds.
    """
    return _policy_value(prior @ utilities, alpha)


def conditioned_values(
    utilities: np.ndarray, prior: np.ndarray, masks: np.ndarray, alpha: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Condition ``prior`` on each row of ``masks`` and value the result.

    Returns ``(values, kl_bits, mass)``. ``kl_bits`` is KL(posterior || prior)
    in bits. Rows with zero prior mass get NaN value and KL.
    """
    masks = np.asarray(masks, dtype=bool)
    n = masks.shape[0]
    values = np.full(n, np.nan)
    kls = np.full(n, np.nan)
    mass = np.zeros(n)
    for k in range(n):
        post = np.where(masks[k], prior, 0.0)
        m = post.sum()
        mass[k] = m
        if m <= 0.0:
            continue
        post = post / m
        values[k] = _policy_value(post @ utilities, alpha)
        nz = post > 0
        kls[k] = float(np.sum(post[nz] * np.log2(post[nz] / prior[nz])))
    return values, kls, mass
