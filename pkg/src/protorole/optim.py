"""Adam optimizer and gradient clipping for the autodiff parameters."""

from __future__ import annotations

import numpy as np

from .autodiff import Array, Tensor
from .errors import DimensionError


class Adam:
    """Adam with bias correction and per-parameter step counts.

    Each parameter keeps its own (m, v, t) slots, created lazily on first
    update.  With batch size 1 only the parameters that actually received a
    gradient take a step, so a shared step counter would apply the wrong
    bias correction to rarely-touched parameters (e.g. decoders for tasks
    absent from an instance).
    """

    def __init__(
        self,
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self._slots: dict[Tensor, tuple[Array, Array, int]] = {}

    def step(self, grads: dict[Tensor, Array]) -> None:
        """Apply one update to every parameter present in ``grads``."""
        for param, g in grads.items():
            if g.shape != param.data.shape:
                raise DimensionError(
                    f"gradient shape {g.shape} does not match parameter "
                    f"shape {param.data.shape}"
                )
            slot = self._slots.get(param)
            if slot is None:
                m = np.zeros_like(param.data)
                v = np.zeros_like(param.data)
                t = 0
            else:
                m, v, t = slot
            t += 1
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            param.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            self._slots[param] = (m, v, t)

    def state_size(self) -> int:
        return len(self._slots)


def clip_global_norm(grads: dict[Tensor, Array], max_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is <= max_norm.

    Returns the norm measured before clipping.
    """
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm
