"""Two-time correlators via the quantum regression theorem, and their spectra."""

from __future__ import annotations

import numpy as np

from ..errors import TruncationError
from .dynamics import LindbladModel, _evolve_matrix, lindblad_rhs
from .operators import DensityMatrix, Operator
from .traces import SpectrumTrace, TimeTrace

STATIONARITY_TOL = 1e-8
DECAY_FRACTION = 1e-4


def two_time_correlation(
    model: LindbladModel,
    rho_ss: DensityMatrix,
    a_op: Operator,
    b_op: Operator,
    tau_grid: np.ndarray,
    require_stationary: bool = True,
) -> TimeTrace:
    """Stationary correlator <A(tau) B(0)> on tau_grid.

    Regression: propagate B rho under the Liouvillian and trace against A at
    each lag. With require_stationary=False the initial state may be any
    valid density matrix, giving the transient correlator seeded by it.
    """
    for op in (a_op, b_op):
        if op.space != model.space:
            raise ValueError("operator acts on a different space")
    if rho_ss.space != model.space:
        raise ValueError("state lives on a different space")
    if require_stationary:
        residual = np.max(np.abs(lindblad_rhs(model, rho_ss)))
        if residual > STATIONARITY_TOL:
            raise ValueError(
                f"state is not stationary (rhs max {residual:.3e} > {STATIONARITY_TOL})"
            )
    tau_grid = np.asarray(tau_grid, dtype=float)
    seeded = _evolve_matrix(model, b_op.matrix @ rho_ss.matrix, tau_grid)
    values = np.einsum("ij,tji->t", a_op.matrix, seeded)
    return TimeTrace(tau_grid, values, label="two-time correlation")


def psd(corr: TimeTrace) -> SpectrumTrace:
    """One-sided symmetrized power spectral density of a decayed correlator.

    S(delta) = 2 Re integral_0^inf corr(tau) exp(-i 2 pi delta tau) dtau
    with delta in MHz, so a correlator rotating as exp(+i 2 pi f tau) peaks
    at +f and the integral of S over delta equals the tau=0 value of the
    correlator (discrete Parseval holds exactly).
    """
    values = np.asarray(corr.values, dtype=complex)
    peak = np.abs(values[0])
    if peak > 0 and np.abs(values[-1]) > DECAY_FRACTION * peak:
        raise TruncationError(
            "correlator has not decayed to 1e-4 of its initial value at the "
            "grid end; extend the tau grid"
        )
    n = len(values)
    dt = corr.step
    # Trapezoid endpoint correction: the half-weight at tau=0 keeps the
    # transform of a sampled decaying exponential non-negative.
    transform = np.fft.fft(values) - values[0] / 2
    spectrum = np.fft.fftshift(2.0 * dt * transform.real)
    freqs = np.fft.fftshift(np.fft.fftfreq(n, d=dt))
    return SpectrumTrace(freqs, spectrum, label="psd")
