"""Decision-direction removal in a kernel-induced feature space.

A direction in the implicit feature space is represented by dual
coefficients alpha, standing for v = Phi^T alpha. Removing the variability
along v from the implicit features turns the kernel matrix K = Phi Phi^T
into

    K' = K - (K alpha)(K alpha)^T / (alpha^T K alpha),

the Gram matrix of the features projected orthogonal to v. For a linear
kernel K = X X^T this reproduces, step for step, the Gram matrices of the
explicit row-projected data; that equivalence is the module's primary
correctness oracle and is enforced by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import learners
from .errors import (
    DegenerateDirectionError,
    DimensionMismatchError,
    NonSymmetricKernelError,
)

#: Result statuses for the kernel removal loop.
STATUS_COMPLETED = "completed"
STATUS_DEGENERATE = "degenerate-direction"


def check_kernel(K, require_psd: bool = True) -> np.ndarray:
    """Validate symmetry (and optionally PSD-ness within tolerance) of K."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionMismatchError("kernel matrix must be square")
    scale = max(1.0, float(np.max(np.abs(K))))
    if float(np.max(np.abs(K - K.T))) > 1e-10 * scale:
        raise NonSymmetricKernelError("kernel matrix is not symmetric within 1e-10")
    if require_psd:
        smallest = float(np.linalg.eigvalsh(K)[0])
        if smallest < -1e-8 * scale:
            raise NonSymmetricKernelError(
                f"kernel matrix is not PSD within tolerance (lambda_min = {smallest:.3e})"
            )
    return K


def kernel_d4_step(K, alpha, cross=None):
    """Deflate K along the implicit direction represented by alpha.

    Returns the deflated kernel, or a (kernel, cross) pair when a
    test-versus-train cross block is supplied. The new kernel satisfies
    K' alpha = 0: the direction carries no variability afterwards, and a
    repeated step with the same alpha is a no-op.
    """
    K = np.asarray(K, dtype=float)
    a = np.asarray(alpha, dtype=float)
    if a.ndim != 1 or a.shape[0] != K.shape[0]:
        raise DimensionMismatchError("dual coefficients do not match kernel size")
    s = K @ a
    denom = float(a @ s)
    scale = max(1.0, float(np.max(np.abs(K))))
    if denom < 1e-12 * scale:
        raise DegenerateDirectionError(
            f"direction has numerically zero feature-space norm ({denom:.3e})"
        )
    K_new = K - np.outer(s, s) / denom
    K_new = 0.5 * (K_new + K_new.T)
    if cross is None:
        return K_new
    C = np.asarray(cross, dtype=float)
    if C.ndim != 2 or C.shape[1] != K.shape[0]:
        raise DimensionMismatchError("cross block must have one column per training point")
    C_new = C - np.outer(C @ a, s) / denom
    return K_new, C_new


@dataclass(frozen=True)
class KernelD4Result:
    """Dual directions recorded by the kernel removal loop.

    directions[i] are the dual coefficients fitted against the kernel
    after i deflation steps; `kernel` is the final deflated matrix.
    """

    directions: tuple[np.ndarray, ...]
    kernel: np.ndarray
    status: str = STATUS_COMPLETED

    @property
    def iterations(self) -> int:
        return len(self.directions)


def kernel_d4_fit(K, y, iterations: int, ridge_alpha: float = 1.0) -> KernelD4Result:
    """Iteratively fit kernel ridge dual directions and deflate K.

    Each iteration solves alpha = (K_i + ridge_alpha I)^{-1} y on the
    current deflated kernel, records alpha, and deflates. A degenerate
    direction stops the loop early with a status on the result.
    """
    K = check_kernel(K)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != K.shape[0]:
        raise DimensionMismatchError("targets do not match kernel size")
    if iterations < 0 or iterations > K.shape[0]:
        raise ValueError(f"iterations must lie in [0, n]; got {iterations}")
    directions: list[np.ndarray] = []
    status = STATUS_COMPLETED
    K_cur = K.copy()
    for _ in range(iterations):
        alpha = learners.fit_kernel_ridge_probe(K_cur, y, ridge_alpha)
        try:
            K_cur = kernel_d4_step(K_cur, alpha)
        except DegenerateDirectionError:
            status = STATUS_DEGENERATE
            break
        directions.append(alpha)
    return KernelD4Result(tuple(directions), K_cur, status)


def kernel_d4_apply(K, directions, cross=None):
    """Replay recorded deflation steps on a fresh kernel (and cross block).

    The i-th direction is interpreted against the kernel produced by the
    first i steps, matching how kernel_d4_fit recorded it.
    """
    K_cur = np.asarray(K, dtype=float).copy()
    C_cur = None if cross is None else np.asarray(cross, dtype=float).copy()
    for alpha in directions:
        if C_cur is None:
            K_cur = kernel_d4_step(K_cur, alpha)
        else:
            K_cur, C_cur = kernel_d4_step(K_cur, alpha, C_cur)
    if cross is None:
        return K_cur
    return K_cur, C_cur
