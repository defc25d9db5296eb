"""Power-weighted averaging operators on [0, delta] and the normal-form ODE.

The two Hardy-type operators

    I_alpha u(x) = int_0^x (t/x)^alpha u(t) dt/t,
    J_alpha u(x) = int_x^delta (x/t)^alpha u(t) dt/t,

are bounded on Holder classes and peel powers of the normal coordinate off
the stream function.  They solve the boundary normal-form equation

    -x u'' + a u' = x^(a+1) f,      u(0) = 0,  u'(delta) = 0,

whose indicial root -(a+2) admits no interfering power: integrating once
gives u' = J_a(x^(a+1) f) = x^a S(x) with S(x) = int_x^delta f, and
u = x I_1(u') recovers u from u(0) = 0.  The bounded shore profile is then

    Phi(x) = u(x) / x^(a+1) = int_0^1 sigma^a S(x sigma) dsigma,

evaluated directly with a Gauss-Jacobi rule so no 0/0 quotient is formed.

Sampled inputs are interpolated with cubic splines; quadratures use
Gauss-Jacobi nodes for the power weights (exact on the identities
I_alpha(1) = 1/alpha and J_alpha(1) = (1 - (x/delta)^alpha)/alpha).
"""

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_jacobi


def _as_grid(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 4:
        raise ValueError("sample grid must be 1-D with at least 4 points")
    if x[0] < 0 or np.any(np.diff(x) <= 0):
        raise ValueError("sample grid must be increasing and start at x >= 0")
    return x


def hardy_inner(alpha, u, x, n_nodes=48):
    """I_alpha u on the sample grid: int_0^1 s^(alpha-1) u(x s) ds.

    The substitution t = x s concentrates the power weight into the
    Gauss-Jacobi rule, so the x -> 0 limit u(0)/alpha comes out exactly.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = _as_grid(x)
    u = np.asarray(u, dtype=float)
    spline = CubicSpline(x, u)
    nodes, weights = roots_jacobi(n_nodes, 0.0, alpha - 1.0)
    s = 0.5 * (nodes + 1.0)
    w = weights * 2.0 ** (-alpha)
    pts = np.outer(x, s)
    return (spline(pts) * w).sum(axis=1)


def hardy_outer(alpha, u, x, delta=None, n_nodes=24):
    """J_alpha u on the sample grid via t = x e^sigma:

    J_alpha u(x) = int_0^(log(delta/x)) e^(-alpha sigma) u(x e^sigma) dsigma,

    with the x = 0 limit u(0)/alpha and J_alpha u(delta) = 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = _as_grid(x)
    u = np.asarray(u, dtype=float)
    if delta is None:
        delta = float(x[-1])
    spline = CubicSpline(x, u)
    gl_x, gl_w = np.polynomial.legendre.leggauss(n_nodes)
    out = np.zeros_like(x)
    for k, xk in enumerate(x):
        if xk == 0.0:
            out[k] = u[0] / alpha
            continue
        if xk >= delta:
            out[k] = 0.0
            continue
        L = np.log(delta / xk)
        n_panels = max(2, int(np.ceil(L * max(1.0, alpha) / 0.5)))
        edges = np.linspace(0.0, L, n_panels + 1)
        mid = 0.5 * (edges[:-1, None] + edges[1:, None])
        half = 0.5 * (edges[1:, None] - edges[:-1, None])
        sig = (mid + half * gl_x[None, :]).ravel()
        wts = (half * gl_w[None, :]).ravel()
        t = np.minimum(xk * np.exp(sig), delta)
        out[k] = float(np.sum(wts * np.exp(-alpha * sig) * spline(t)))
    return out


def reconstruct_from_derivative(du, x):
    """u = x I_1(u') for u(0) = 0; inverts differentiation on the grid."""
    x = _as_grid(x)
    return x * hardy_inner(1.0, du, x)


def solve_fuchsian(a, f, x, delta=None, n_nodes=48):
    """Solve -x u'' + a u' = x^(a+1) f with u(0) = 0 and u'(delta) = 0.

    Returns (u, phi, du): integrating the first-order form gives
    du = J_a(x^(a+1) f) = x^a S with S(x) = int_x^delta f (the spline
    antiderivative), and the bounded profile

        phi(x) = int_0^1 sigma^a S(x sigma) dsigma

    is evaluated with the sigma^a Gauss-Jacobi rule; u = x^(a+1) phi.
    phi stays bounded and Holder up to x = 0 (phi(0) = S(0)/(a+1)).
    """
    if a <= 0:
        raise ValueError("exponent a must be positive")
    x = _as_grid(x)
    f = np.asarray(f, dtype=float)
    if delta is None:
        delta = float(x[-1])
    fspline = CubicSpline(x, f)
    anti = fspline.antiderivative()
    S_delta = float(anti(delta))

    def S(t):
        return S_delta - anti(t)

    du = x ** a * S(x)
    nodes, weights = roots_jacobi(n_nodes, 0.0, a)
    s = 0.5 * (nodes + 1.0)
    w = weights * 2.0 ** (-(a + 1.0))
    pts = np.outer(x, s)
    phi = (S(pts) * w).sum(axis=1)
    u = x ** (a + 1.0) * phi
    return u, phi, du
