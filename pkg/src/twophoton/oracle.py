"""Exact linear propagation of the mode plus a discretized bath.

No Markov approximation is made here: the operator vector
(a, a^dag, b_1, b_1^dag, ...) obeys d v/dt = A v with the generator built from
the full Hamiltonian, and the Bogoliubov map is exp(A t). This is the ground
truth that the closed forms in :mod:`twophoton.coeffs` are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .coeffs import BathCoefficients, ModeCoefficients
from .errors import ConvergenceError
from .params import BathSpec, SystemParams

# dense full maps above this dimension are refused unless asked for explicitly
FULL_MAP_AUTO_LIMIT = 1000


def _bath_arrays(bath: BathSpec | None):
    if bath is None:
        return np.empty(0), np.empty(0)
    return bath.frequencies, bath.couplings


def build_generator(p: SystemParams, bath: BathSpec | None = None, sparse: bool = False):
    """Generator ``A`` of d v/dt = A v in the interleaved ordering (a, a^dag, b_1, b_1^dag, ...).

    da/dt = lam a^dag - i omega a - i sum_k g_k b_k and db_k/dt = -i omega_k b_k - i g_k a;
    the creation rows are the conjugates.
    """
    wk, gk = _bath_arrays(bath)
    nb = wk.size
    dim = 2 * (nb + 1)
    rows, cols, vals = [], [], []

    def put(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    put(0, 0, -1j * p.omega)
    put(0, 1, p.lam)
    put(1, 1, 1j * p.omega)
    put(1, 0, p.lam)
    idx = 2 + 2 * np.arange(nb)
    r = np.concatenate([
        np.zeros(nb), idx,               # a <- b_k, b_k <- a
        np.ones(nb), idx + 1,            # a^dag <- b_k^dag, b_k^dag <- a^dag
        idx, idx + 1,                    # diagonal bath rotation
    ]).astype(int)
    c = np.concatenate([idx, np.zeros(nb), idx + 1, np.ones(nb), idx, idx + 1]).astype(int)
    v = np.concatenate([-1j * gk, -1j * gk, 1j * gk, 1j * gk, -1j * wk, 1j * wk])
    A = sp.coo_matrix(
        (np.concatenate([np.array(vals), v]), (np.concatenate([rows, r]), np.concatenate([cols, c]))),
        shape=(dim, dim),
    ).tocsr()
    return A if sparse else A.toarray()


def metric(dim: int) -> np.ndarray:
    """Bosonic metric diag(1, -1, 1, -1, ...)."""
    return np.diag(np.tile([1.0, -1.0], dim // 2))


@dataclass(frozen=True)
class BogoliubovMap:
    """Rows of exp(A t): a(t)-type operators in terms of the initial ones.

    ``matrix`` is either the full square map, or only its first two rows
    (the a and a^dag rows) when the bath is too large for a dense map.
    """

    matrix: np.ndarray
    t: float
    params: SystemParams
    bath: BathSpec | None

    @property
    def is_full(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]

    @property
    def mode_row(self) -> np.ndarray:
        return self.matrix[0]

    def symplectic_defect(self) -> float:
        """max |S Omega S^dag - Omega| over the available rows."""
        S = self.matrix
        omega = metric(S.shape[1])
        lhs = S @ omega @ S.conj().T
        return float(np.max(np.abs(lhs - omega[: S.shape[0], : S.shape[0]])))

    def evolve_means(self, means: np.ndarray) -> np.ndarray:
        """Means of the operators of the available rows given initial means."""
        return self.matrix @ means


def _mode_rows_expm(A_sparse, times):
    """First two rows of exp(A t) for each t, via exp(A^T t) e_0 (second row by conjugation)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    dim = A_sparse.shape[0]
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    AT = A_sparse.T.tocsr()
    out = np.empty((times.size, dim), dtype=complex)
    uniform = times.size > 2 and np.allclose(np.diff(times), times[1] - times[0], rtol=1e-12, atol=0)
    if uniform:
        out[:] = expm_multiply(AT, e0, start=times[0], stop=times[-1], num=times.size, endpoint=True)
    else:
        for i, t in enumerate(times):
            out[i] = expm_multiply(AT * t, e0) if t > 0 else e0
    return out


def _conj_swap(row: np.ndarray) -> np.ndarray:
    """a^dag row from the a row: conjugate and swap each (annihilation, creation) pair."""
    pairs = row.reshape(-1, 2)
    return np.conj(pairs[:, ::-1]).reshape(-1)


def _mode_rows_rk(A_sparse, t, rtol):
    dim = A_sparse.shape[0]
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    AT = A_sparse.T.tocsr()
    if t == 0:
        return e0
    sol = solve_ivp(lambda _, y: AT @ y, (0.0, t), e0, method="DOP853", rtol=rtol,
                    atol=rtol * 1e-5)
    if not sol.success:
        raise ConvergenceError(f"adaptive RK failed: {sol.message}")
    return sol.y[:, -1]


def propagate(p: SystemParams, bath: BathSpec | None, t: float, method: str = "expm",
              full: bool | None = None, rtol: float = 1e-10) -> BogoliubovMap:
    """Bogoliubov map at time ``t``.

    ``method`` is "expm" (matrix exponential) or "rk" (adaptive Runge-Kutta,
    relative tolerance ``rtol``). ``full=None`` returns the full square map when
    its dimension is at most FULL_MAP_AUTO_LIMIT, else only the a and a^dag rows.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    A = build_generator(p, bath, sparse=True)
    dim = A.shape[0]
    if full is None:
        full = dim <= FULL_MAP_AUTO_LIMIT
    if method == "expm":
        if full:
            S = expm(A.toarray() * t)
        else:
            row = _mode_rows_expm(A, [t])[0]
            S = np.vstack([row, _conj_swap(row)])
    elif method == "rk":
        if full:
            Ad = A.toarray()
            y0 = np.eye(dim, dtype=complex).reshape(-1)
            if t == 0:
                S = np.eye(dim, dtype=complex)
            else:
                sol = solve_ivp(lambda _, y: (Ad @ y.reshape(dim, dim)).reshape(-1), (0.0, t), y0,
                                method="DOP853", rtol=rtol, atol=rtol * 1e-5)
                if not sol.success:
                    raise ConvergenceError(f"adaptive RK failed: {sol.message}")
                S = sol.y[:, -1].reshape(dim, dim)
        else:
            row = _mode_rows_rk(A, t, rtol)
            S = np.vstack([row, _conj_swap(row)])
    else:
        raise ValueError(f"unknown method {method!r}")
    return BogoliubovMap(S, float(t), p, bath)


def propagate_mode_rows(p: SystemParams, bath: BathSpec | None, times) -> list[BogoliubovMap]:
    """Mode rows at each of ``times`` (uniform grids share one Krylov sweep)."""
    A = build_generator(p, bath, sparse=True)
    rows = _mode_rows_expm(A, times)
    return [BogoliubovMap(np.vstack([r, _conj_swap(r)]), float(t), p, bath)
            for r, t in zip(rows, np.atleast_1d(times))]


def extract_reduced(bmap: BogoliubovMap) -> tuple[ModeCoefficients, BathCoefficients]:
    """Read G, L*, mu_k, nu_k* off the a row."""
    row = bmap.mode_row
    G = complex(row[0])
    L = complex(np.conj(row[1]))
    mu = row[2::2].copy()
    nu = np.conj(row[3::2])
    return ModeCoefficients(G, L, bmap.t), BathCoefficients(mu, nu, bmap.t, bmap.bath)


def integrate_markov_ode(p: SystemParams, times, rtol: float = 1e-12, atol: float = 1e-14) -> ModeCoefficients:
    """Integrate dG/dt = lam L - (gamma + i omega) G, dL/dt = lam G + (i omega - gamma) L.

    Adaptive DOP853 from G(0)=1, L(0)=0; an independent route to the closed forms.
    Each requested time is a step endpoint, since dense-output interpolation
    loses several digits over long horizons.
    """
    times = np.asarray(times, dtype=float)
    M = np.array([[-p.gamma - 1j * p.omega, p.lam], [p.lam, 1j * p.omega - p.gamma]])
    order = np.argsort(times)
    y = np.array([1.0 + 0j, 0j])
    out = np.empty((2, times.size), dtype=complex)
    now = 0.0
    for i in order:
        target = float(times[i])
        if target > now:
            sol = solve_ivp(lambda _, v: M @ v, (now, target), y, method="DOP853", rtol=rtol, atol=atol)
            if not sol.success:
                raise ConvergenceError(f"adaptive RK failed: {sol.message}")
            y, now = sol.y[:, -1], target
        out[:, i] = y
    return ModeCoefficients(out[0], out[1], times)
