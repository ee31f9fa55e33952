"""Clipped policy-gradient objectives and sequential (HAPPO) re-weighting."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .autograd import Tensor, as_tensor, minimum, where


def clipped_objective(ratio, adv, clip: float = 0.2) -> Tensor:
    """Elementwise min(r·Â, clip(r, 1-ε, 1+ε)·Â)."""
    r = as_tensor(ratio)
    a = as_tensor(adv)
    return minimum(r * a, r.clip(1.0 - clip, 1.0 + clip) * a)


def _masked_mean(x: Tensor, mask: np.ndarray | None) -> Tensor:
    if mask is None:
        if x.data.size == 0:
            raise ValueError("empty batch")
        return x.mean()
    m = np.asarray(mask, dtype=np.float64)
    total = m.sum()
    if total <= 0:
        raise ValueError("empty batch: every entry is masked out")
    return (x * m).sum() * (1.0 / total)


def mappo_clip_loss(ratio, adv, clip: float = 0.2, mask=None, entropy=None,
                    entropy_coef: float = 0.01) -> Tensor:
    """Negative masked mean of the clipped surrogate, minus an entropy bonus."""
    loss = -_masked_mean(clipped_objective(ratio, adv, clip), mask)
    if entropy is not None:
        loss = loss - entropy_coef * _masked_mean(as_tensor(entropy), mask)
    return loss


def policy_ratio(logp_new: Tensor, logp_old) -> Tensor:
    return (as_tensor(logp_new) - np.asarray(logp_old)).exp()


def huber(x, delta: float = 10.0) -> Tensor:
    x = as_tensor(x)
    a = np.abs(x.data)
    return where(a <= delta, x * x * 0.5, x.abs() * delta - 0.5 * delta * delta)


def value_loss(values, returns, mask=None, delta: float = 10.0) -> Tensor:
    err = as_tensor(values) - np.asarray(returns, dtype=np.float64)
    return _masked_mean(huber(err, delta), mask)


def masked_log_softmax(logits: Tensor, avail: np.ndarray) -> Tensor:
    """Log-probabilities with illegal actions pushed to (effectively) -inf."""
    return where(np.asarray(avail) > 0, logits, -1e10).log_softmax(axis=-1)


def categorical_entropy(logp: Tensor) -> Tensor:
    return -(logp.exp() * logp).sum(axis=-1)


def happo_agent_loss(ratio, adv, factor, clip: float = 0.2, mask=None, entropy=None,
                     entropy_coef: float = 0.01) -> Tensor:
    """One agent's clipped loss with advantages scaled by the running ratio product."""
    return mappo_clip_loss(ratio, np.asarray(factor) * np.asarray(adv), clip, mask,
                           entropy, entropy_coef)


def happo_update(order: Sequence[int], update_agent: Callable[[int, np.ndarray], np.ndarray],
                 initial_factor) -> np.ndarray:
    """Sequential agent updates with product-of-ratios re-weighting.

    ``update_agent(i, factor)`` trains agent ``i`` using advantages scaled by
    ``factor`` and returns its post-update probability ratio π_new/π_old on the
    batch. The factor handed to each later agent is the product of all
    earlier agents' ratios. Returns the final factor.
    """
    factor = np.array(initial_factor, dtype=np.float64)
    for i in order:
        ratio = np.asarray(update_agent(int(i), factor.copy()), dtype=np.float64)
        factor = factor * ratio
    return factor
