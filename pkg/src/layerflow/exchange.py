"""Inter-layer mass exchange and the implicit momentum-exchange solve.

The interface rates follow from the per-layer mass-flux divergences:

    G_{a+1/2} = -sum_k (sum_{p<=a} l_p - [k <= a]) D_k,

zero at the bed and the free surface. The momentum update couples the
layers through the upwinded interface velocities taken at the new time
level, which leads to one tridiagonal N x N system per cell and per
horizontal direction,

    (I + dt * G_N) q^{n+1} = q^{n+1/2}.

Row a of I + dt*G_N reads (0-based layers, G[k] the rate at interface
k = a+1/2, |x|_± = max(±x, 0), hl the new-time layer depths):

    diag[a]  = 1 + dt*(|G[a+1]|_- + |G[a]|_+) / hl[a]
    sup[a]   =   - dt*|G[a+1]|_+ / hl[a+1]
    sub[a]   =   - dt*|G[a]|_-   / hl[a-1]

Off-diagonal entries divide by the depth of the *column* layer, which is
what makes every column sum to one -- the transpose identity
(I + dt G_N)^T 1 = 1 behind both the max-norm stability bound and the
exact conservation of the per-cell momentum sum by the exchange step.
"""

from __future__ import annotations

import numpy as np


def exchange_rates(D: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Interface mass-exchange rates from per-layer divergences.

    D has shape (N,) or (N, n_cells); returns (N+1,) or (N+1, n_cells)
    with exact zero first and last rows.
    """
    D = np.asarray(D, dtype=float)
    l = np.asarray(l, dtype=float)
    one_d = D.ndim == 1
    if one_d:
        D = D[:, None]
    N = D.shape[0]
    if l.shape[0] != N:
        raise ValueError("layer fraction count does not match divergence rows")
    G = np.zeros((N + 1, D.shape[1]))
    total = D.sum(axis=0)
    cum_l = np.cumsum(l)
    cum_D = np.cumsum(D, axis=0)
    for a in range(1, N):
        G[a] = -(cum_l[a - 1] * total - cum_D[a - 1])
    return G[:, 0] if one_d else G


def tridiagonal_exchange(G: np.ndarray, h_layers: np.ndarray, dt: float):
    """Bands (sub, diag, sup) of I + dt*G_N, vectorized over cells.

    G has shape (N+1, ...) with zero end rows; h_layers the new-time
    layer depths, shape (N, ...), all positive.
    """
    G = np.asarray(G, dtype=float)
    h_layers = np.asarray(h_layers, dtype=float)
    N = h_layers.shape[0]
    gp = np.maximum(G, 0.0)
    gm = np.maximum(-G, 0.0)
    diag = 1.0 + dt * (gm[1:N + 1] + gp[0:N]) / h_layers
    sup = np.zeros_like(h_layers)
    sub = np.zeros_like(h_layers)
    sup[:N - 1] = -dt * gp[1:N] / h_layers[1:]
    sub[1:] = -dt * gm[1:N] / h_layers[:-1]
    return sub, diag, sup


def build_matrix(G: np.ndarray, h_layers: np.ndarray, dt: float) -> np.ndarray:
    """Dense I + dt*G_N for one cell (test and inspection path)."""
    sub, diag, sup = tridiagonal_exchange(np.asarray(G, float), np.asarray(h_layers, float), dt)
    N = diag.shape[0]
    A = np.zeros((N, N))
    A[np.arange(N), np.arange(N)] = diag
    A[np.arange(N - 1), np.arange(1, N)] = sup[:-1]
    A[np.arange(1, N), np.arange(N - 1)] = sub[1:]
    return A


def thomas_solve(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Tridiagonal elimination, vectorized over trailing axes.

    All arrays share the shape (N, ...); rhs may carry extra leading
    axes of independent right-hand sides stacked along axis 0 of a list.
    Returns the solution with rhs's shape.
    """
    N = diag.shape[0]
    cp = np.empty_like(diag)
    dp = np.empty_like(rhs)
    denom = diag[0]
    if np.any(denom == 0.0):
        raise np.linalg.LinAlgError("singular exchange system (zero pivot)")
    cp[0] = sup[0] / denom
    dp[0] = rhs[0] / denom
    for a in range(1, N):
        denom = diag[a] - sub[a] * cp[a - 1]
        if np.any(denom == 0.0):
            raise np.linalg.LinAlgError("singular exchange system (zero pivot)")
        cp[a] = sup[a] / denom
        dp[a] = (rhs[a] - sub[a] * dp[a - 1]) / denom
    x = np.empty_like(rhs)
    x[N - 1] = dp[N - 1]
    for a in range(N - 2, -1, -1):
        x[a] = dp[a] - cp[a] * x[a + 1]
    return x


def implicit_solve(A_bands, rhs: np.ndarray) -> np.ndarray:
    """Solve (I + dt*G_N) q = rhs componentwise for the momentum stacks.

    A_bands is the (sub, diag, sup) triple from
    :func:`tridiagonal_exchange`; rhs has shape (N, ...). The column-sum
    identity of the matrix makes sum_a q_a invariant, checked cheaply by
    callers.
    """
    sub, diag, sup = A_bands
    return thomas_solve(sub, diag, sup, rhs)
