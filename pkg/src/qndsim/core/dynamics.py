"""Lindblad master-equation right-hand side, time evolution and steady states.

The generator is the standard GKSL form

    drho/dt = -i[H, rho] + sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)

with H in rad/us, so time grids are in microseconds throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import NonUniqueSteadyStateError, NumericsError
from .operators import DensityMatrix, HilbertSpace, Operator

# Adaptive embedded Runge-Kutta pair (Dormand-Prince via scipy RK45).
RTOL = 1e-9
ATOL = 1e-12

# Evolved states are checked against slightly looser, accumulated tolerances.
EVOLVE_TRACE_TOL = 1e-7
EVOLVE_HERM_TOL = 1e-8
EVOLVE_PSD_TOL = 1e-7

DEGENERACY_RATIO = 1e-10


@dataclass
class LindbladModel:
    """Hamiltonian plus collapse operators on one shared Hilbert space."""

    hamiltonian: Operator
    collapse_ops: list[Operator] = field(default_factory=list)

    def __post_init__(self):
        if not self.hamiltonian.is_hermitian():
            raise ValueError("Hamiltonian must be Hermitian within 1e-12")
        for op in self.collapse_ops:
            if op.space != self.hamiltonian.space:
                raise ValueError("collapse operator acts on a different space")

    @property
    def space(self) -> HilbertSpace:
        return self.hamiltonian.space


def lindblad_rhs(model: LindbladModel, rho: DensityMatrix | np.ndarray) -> np.ndarray:
    """Time derivative of rho under the model, in 1/us."""
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    d = model.space.dim
    if mat.shape != (d, d):
        raise ValueError("state dimension does not match the model")
    h = model.hamiltonian.matrix
    out = -1j * (h @ mat - mat @ h)
    for op in model.collapse_ops:
        l = op.matrix
        ldl = l.conj().T @ l
        out += l @ mat @ l.conj().T - 0.5 * (ldl @ mat + mat @ ldl)
    return out


def liouvillian_matrix(model: LindbladModel) -> np.ndarray:
    """Superoperator matrix acting on row-major vec(rho)."""
    d = model.space.dim
    eye = np.eye(d, dtype=complex)
    h = model.hamiltonian.matrix
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op in model.collapse_ops:
        l = op.matrix
        ldl = l.conj().T @ l
        sup += np.kron(l, l.conj()) - 0.5 * (np.kron(ldl, eye) + np.kron(eye, ldl.T))
    return sup


def _evolve_matrix(model: LindbladModel, m0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Propagate an arbitrary matrix under the Lindblad generator.

    Returns an array of shape (len(times), d, d). times[0] is the initial
    time of m0.
    """
    d = model.space.dim
    times = np.asarray(times, dtype=float)
    sup = liouvillian_matrix(model)

    def rhs(_t, y):
        return sup @ y

    sol = solve_ivp(
        rhs,
        (times[0], times[-1]),
        np.asarray(m0, dtype=complex).reshape(-1),
        t_eval=times,
        rtol=RTOL,
        atol=ATOL,
        method="RK45",
    )
    if not sol.success:
        t_fail = sol.t[-1] if sol.t.size else times[0]
        raise NumericsError(f"integration failed at t={t_fail:.6g} us: {sol.message}")
    return sol.y.T.reshape(len(times), d, d)


def evolve(model: LindbladModel, rho0: DensityMatrix, times: np.ndarray) -> list[DensityMatrix]:
    """Density matrices at each grid time, starting from rho0 at times[0]."""
    if rho0.space != model.space:
        raise ValueError("initial state lives on a different space")
    mats = _evolve_matrix(model, rho0.matrix, times)
    return [
        DensityMatrix(
            model.space,
            m,
            trace_tol=EVOLVE_TRACE_TOL,
            herm_tol=EVOLVE_HERM_TOL,
            psd_tol=EVOLVE_PSD_TOL,
        )
        for m in mats
    ]


def steady_state(model: LindbladModel) -> DensityMatrix:
    """Unique stationary state of the Liouvillian, from its null vector."""
    sup = liouvillian_matrix(model)
    _, s, vh = np.linalg.svd(sup)
    if s[0] == 0 or s[-2] < DEGENERACY_RATIO * s[0]:
        raise NonUniqueSteadyStateError(
            f"degenerate Liouvillian null space (second singular value {s[-2]:.3e})"
        )
    d = model.space.dim
    rho = vh[-1].conj().reshape(d, d)
    tr = np.trace(rho)
    if abs(tr) < 1e-12 * np.linalg.norm(rho):
        raise NumericsError("null vector of the Liouvillian is traceless")
    rho = rho / tr  # fixes the arbitrary phase and the normalization at once
    rho = (rho + rho.conj().T) / 2
    residual = np.max(np.abs(lindblad_rhs(model, rho)))
    if residual > 1e-10:
        raise NumericsError(f"steady-state residual {residual:.3e} exceeds 1e-10")
    return DensityMatrix(model.space, rho)
