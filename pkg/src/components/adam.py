"""
Adam Component

Adam with bias correction over a ParamSet.

Composes:
- Tensor (primitive)
"""

from dataclasses import dataclass, field, replace

import numpy as np

from src.primitives.errors import NonFiniteGradientError
from src.primitives.tensor import Tensor


@dataclass
class AdamState:
    """First/second moments per parameter plus the step counter"""

    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def snapshot(self) -> "AdamState":
        """Independent copy; later steps do not touch it."""
        return replace(self, m={k: a.copy() for k, a in self.m.items()}, v={k: a.copy() for k, a in self.v.items()})

    def to_tensors(self) -> dict[str, np.ndarray]:
        """Flatten to checkpoint tensors ("m.<name>", "v.<name>", "step")."""
        tensors = {f"m.{k}": a for k, a in self.m.items()}
        tensors.update({f"v.{k}": a for k, a in self.v.items()})
        tensors["step"] = np.array([self.step], dtype=np.float32)
        return tensors

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray], lr: float = 1e-4) -> "AdamState":
        state = cls(lr=lr)
        if "step" in tensors:
            state.step = int(np.asarray(tensors["step"]).reshape(-1)[0])
        for key, value in tensors.items():
            if key.startswith("m."):
                state.m[key[2:]] = np.asarray(value, dtype=np.float32).copy()
            elif key.startswith("v."):
                state.v[key[2:]] = np.asarray(value, dtype=np.float32).copy()
        return state


def adam_step(params: dict[str, Tensor], state: AdamState) -> tuple[dict[str, Tensor], AdamState]:
    """
    Apply one Adam update in place.

    Parameters without a gradient are treated as having a zero gradient.

    Args:
        params: Name -> trainable tensor
        state: Optimizer state (updated in place)

    Returns:
        (params, state)

    Raises:
        NonFiniteGradientError: If any gradient is NaN or infinite; nothing is updated
    """
    for name, tensor in params.items():
        if tensor.grad is not None and not np.all(np.isfinite(tensor.grad)):
            raise NonFiniteGradientError(f"non-finite gradient for parameter {name}")

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, tensor in params.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or m.shape != tensor.shape:
            m = np.zeros_like(tensor.data)
            v = np.zeros_like(tensor.data)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        tensor.data = (tensor.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(tensor.dtype)
        state.m[name] = m.astype(np.float32)
        state.v[name] = v.astype(np.float32)
    return params, state
