"""Cubic-spline interpolation kernel with compact support at 2h.

W(r, h) = sigma_d / h^d * w(q),  q = r / h
w(q) = 1 - 1.5 q^2 + 0.75 q^3        for q < 1
     = 0.25 (2 - q)^3                for 1 <= q < 2
     = 0                             otherwise

sigma_d normalizes the kernel so its integral over d-dimensional space is 1.
"""

from __future__ import annotations

import numpy as np

SUPPORT_FACTOR = 2.0  # kernel support radius in units of h

# normalization constants per dimensionality
SIGMA = {2: 10.0 / (7.0 * np.pi), 3: 1.0 / np.pi}


def kernel_value(r, h, dim: int):
    """Evaluate W(r, h). Accepts scalars or arrays (broadcasting)."""
    r = np.asarray(r, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    q = r / h
    w = np.where(
        q < 1.0,
        1.0 - 1.5 * q * q + 0.75 * q * q * q,
        np.where(q < 2.0, 0.25 * (2.0 - q) ** 3, 0.0),
    )
    return SIGMA[dim] / h**dim * w


def kernel_derivative(r, h, dim: int):
    """dW/dr at (r, h): sigma_d / h^(d+1) * w'(q) with w' = -3q + 2.25q^2 or -0.75(2-q)^2."""
    r = np.asarray(r, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    q = r / h
    dw = np.where(
        q < 1.0,
        -3.0 * q + 2.25 * q * q,
        np.where(q < 2.0, -0.75 * (2.0 - q) ** 2, 0.0),
    )
    return SIGMA[dim] / h ** (dim + 1) * dw


def kernel_gradient(dx: np.ndarray, r, h, dim: int) -> np.ndarray:
    """Gradient of W with respect to the first particle's position.

    dx is x_i - x_j (shape (..., dim)); r its norm. Pairs at zero separation
    contribute a zero gradient (the spline's slope vanishes at q = 0 and the
    direction is undefined there).
    """
    r = np.asarray(r, dtype=np.float64)
    dw = kernel_derivative(r, h, dim)
    safe_r = np.where(r > 0.0, r, 1.0)
    scale = np.where(r > 0.0, dw / safe_r, 0.0)
    return scale[..., None] * dx
