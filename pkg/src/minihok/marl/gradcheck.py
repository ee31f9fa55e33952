"""Analytic vs central-difference gradient comparison."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .autograd import Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    max_abs_error: float
    n_checked: int
    worst: str

    @property
    def ok(self) -> bool:
        return self.max_rel_error < 1e-4

    def __str__(self) -> str:
        return (f"max rel err {self.max_rel_error:.3e} (abs {self.max_abs_error:.3e}) "
                f"over {self.n_checked} entries, worst at {self.worst}")


def grad_check(fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
               floor: float = 1e-6, max_entries: int | None = None,
               rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare ``fn``'s backward pass against central differences.

    ``fn`` rebuilds the scalar from the current parameter values each call.
    Relative error is |a - n| / max(|a| + |n|, floor). The floor sits above
    the round-off level of a central difference (about 1e-16 |f| / eps), so
    near-zero entries are judged against it instead of against noise.
    With ``max_entries`` a random subset of coordinates per parameter is checked.
    """
    for p in params:
        p.grad = None
    out = fn()
    if out.data.size != 1:
        raise ValueError("grad_check needs a scalar function")
    if not np.isfinite(out.data).all():
        raise FloatingPointError("function value is not finite")
    out.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst_rel, worst_abs, worst, count = 0.0, 0.0, "", 0
    for k, p in enumerate(params):
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = (rng or np.random.default_rng(0)).choice(flat.size, max_entries, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(fn().data)
            flat[i] = orig - eps
            fm = float(fn().data)
            flat[i] = orig
            num = (fp - fm) / (2 * eps)
            if not np.isfinite(num):
                raise FloatingPointError(f"non-finite finite difference at param {k}[{i}]")
            a = float(analytic[k].reshape(-1)[i])
            err = abs(a - num)
            rel = err / max(abs(a) + abs(num), floor)
            count += 1
            if rel > worst_rel:
                worst_rel, worst = rel, f"param {k}[{i}] analytic {a:.6g} numeric {num:.6g}"
            worst_abs = max(worst_abs, err)
    return GradCheckReport(worst_rel, worst_abs, count, worst)
