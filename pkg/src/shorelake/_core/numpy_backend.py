"""Pure-numpy implementations of the hot grid kernels.

Same contracts as the compiled module ``_speedups``; all arrays are
C-contiguous float64 of matching shapes, and border cells are exterior
(zero weights), so the sliced updates never need halo logic.
"""

import numpy as np


def apply_weighted_laplacian(u, wE, wW, wN, wS, diag, inv_h2, out):
    """out = inv_h2 * (wE*u_E + wW*u_W + wN*u_N + wS*u_S - diag*u).

    Exterior cells carry zero weights and zero diagonal, so out vanishes
    there.  Dirichlet ghosting is folded into ``diag`` by the assembler.
    """
    out.fill(0.0)
    core = out[1:-1, 1:-1]
    uc = u[1:-1, 1:-1]
    np.multiply(wE[1:-1, 1:-1], u[1:-1, 2:], out=core)
    core += wW[1:-1, 1:-1] * u[1:-1, :-2]
    core += wN[1:-1, 1:-1] * u[2:, 1:-1]
    core += wS[1:-1, 1:-1] * u[:-2, 1:-1]
    core -= diag[1:-1, 1:-1] * uc
    core *= inv_h2
    return out


def upwind_flux_divergence(omega, qx, qy, inv_h, out):
    """First-order upwind divergence of the face flux q * omega.

    ``qx`` has shape (ny, nx+1): qx[j, i] is the flux across the face
    between cells (i-1, j) and (i, j); ``qy`` has shape (ny+1, nx).
    Border-face fluxes are zero by construction, so the upwind neighbor
    lookup never leaves the arrays.
    """
    ny, nx = omega.shape
    Fx = np.zeros_like(qx)
    inner = qx[:, 1:nx]
    Fx[:, 1:nx] = inner * np.where(inner > 0.0, omega[:, : nx - 1], omega[:, 1:nx])
    Fy = np.zeros_like(qy)
    inner = qy[1:ny, :]
    Fy[1:ny, :] = inner * np.where(inner > 0.0, omega[: ny - 1, :], omega[1:ny, :])
    np.subtract(Fx[:, 1:], Fx[:, :-1], out=out)
    out += Fy[1:, :]
    out -= Fy[:-1, :]
    out *= inv_h
    return out


def outflow_sums(qx, qy, out):
    """Per-cell sum of positive outgoing face fluxes (for monotone dt bounds)."""
    ny, nx = out.shape
    out.fill(0.0)
    out += np.maximum(qx[:, 1:], 0.0)      # east outflow
    out += np.maximum(-qx[:, :-1], 0.0)    # west outflow
    out += np.maximum(qy[1:, :], 0.0)      # north outflow
    out += np.maximum(-qy[:-1, :], 0.0)    # south outflow
    return out
