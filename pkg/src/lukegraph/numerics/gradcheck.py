"""Central finite-difference gradient checker."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward, no_grad


@dataclass
class GradCheckResult:
    max_rel_error: float
    worst_param: int | None = None
    worst_index: int | None = None
    nonfinite: list[tuple[int, int]] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.nonfinite and np.isfinite(self.max_rel_error)

    def passes(self, tol: float) -> bool:
        return self.ok and self.max_rel_error < tol


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))


def grad_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-5,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """Compare tape gradients of ``fn()`` against central differences.

    ``fn`` must rebuild its forward from the current contents of ``params``.
    With ``max_entries`` set, at most that many entries per parameter are
    probed (chosen by ``rng``); otherwise every entry is.
    """
    for p in params:
        p.grad = None
    loss = fn()
    if not np.isfinite(loss.data).all():
        return GradCheckResult(float("inf"), nonfinite=[(-1, -1)])
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    result = GradCheckResult(0.0)
    for pi, p in enumerate(params):
        flat = p.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            rng = rng or np.random.default_rng(0)
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        a_flat = analytic[pi].reshape(-1)
        for idx in entries:
            original = flat[idx]
            with no_grad():
                flat[idx] = original + step
                plus = float(fn().data)
                flat[idx] = original - step
                minus = float(fn().data)
            flat[idx] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                result.nonfinite.append((pi, int(idx)))
                result.max_rel_error = float("inf")
                continue
            numeric = (plus - minus) / (2.0 * step)
            err = float(relative_error(np.array(a_flat[idx]), np.array(numeric)))
            result.checked += 1
            if err > result.max_rel_error:
                result.max_rel_error = err
                result.worst_param = pi
                result.worst_index = int(idx)
    return result
