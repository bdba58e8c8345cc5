"""
GradCheck Component

Compares reverse-mode gradients with central differences.

The analytic gradient is taken in the inputs' own precision. The finite
difference probe temporarily promotes the probed tensors to float64 so that
its own rounding stays well below the float32 gradients it is checked against.
"""

from typing import Callable, Sequence

import numpy as np

from src.primitives.errors import NonFiniteGradientError, ShapeMismatchError
from src.primitives.tensor import Tensor


def grad_check(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    eps: float = 1e-3,
    floor: float = 1e-2,
) -> float:
    """
    Maximum relative gradient error of a scalar function.

    Each element contributes |analytic - fd| / max(|analytic|, |fd|, floor * s),
    where s is the largest gradient magnitude in that tensor. The floor keeps
    near-zero elements from turning finite-difference truncation into large
    ratios; elements above it are judged on their own scale.

    Args:
        fn: Zero-argument callable building a single-element Tensor from inputs
        inputs: Tensors (requires_grad=True) to differentiate against
        eps: Central difference step
        floor: Smallest denominator, as a fraction of the tensor gradient scale

    Returns:
        float: Max relative error over inputs

    Raises:
        NonFiniteGradientError: If an analytic or numerical gradient is not finite
        ShapeMismatchError: If fn does not return a single element
    """
    for tensor in inputs:
        tensor.zero_grad()
    out = fn()
    if out.size != 1:
        raise ShapeMismatchError(f"grad_check needs a scalar function, got shape {out.shape}")
    out.backward()
    analytic = [
        t.grad.astype(np.float64) if t.grad is not None else np.zeros(t.shape) for t in inputs
    ]
    if not all(np.all(np.isfinite(a)) for a in analytic):
        raise NonFiniteGradientError("analytic gradient is not finite")

    worst = 0.0
    for tensor, grad in zip(inputs, analytic):
        original = tensor.data
        probe = original.astype(np.float64)
        numeric = np.zeros_like(probe)
        try:
            tensor.data = probe
            flat = probe.reshape(-1)
            for index in range(flat.size):
                saved = flat[index]
                flat[index] = saved + eps
                plus = float(fn().data.reshape(-1)[0])
                flat[index] = saved - eps
                minus = float(fn().data.reshape(-1)[0])
                flat[index] = saved
                numeric.reshape(-1)[index] = (plus - minus) / (2.0 * eps)
        finally:
            tensor.data = original
        if not np.all(np.isfinite(numeric)):
            raise NonFiniteGradientError("finite-difference gradient is not finite")
        scale = max(float(np.max(np.abs(grad), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)))
        denom = np.maximum(np.maximum(np.abs(grad), np.abs(numeric)), max(floor * scale, 1e-12))
        worst = max(worst, float(np.max(np.abs(grad - numeric) / denom, initial=0.0)))

    for tensor in inputs:
        tensor.zero_grad()
    return worst
