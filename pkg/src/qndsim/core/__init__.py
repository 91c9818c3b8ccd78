"""Open-quantum-system engine: operators, Lindblad evolution, correlators."""

from .correlations import psd, two_time_correlation
from .dynamics import (
    LindbladModel,
    evolve,
    lindblad_rhs,
    liouvillian_matrix,
    steady_state,
)
from .operators import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    basis_ket,
    destroy,
    embed,
    expectation,
    identity,
    number,
    pauli,
    tensor,
)
from .traces import SpectrumTrace, TimeTrace

__all__ = [
    "DensityMatrix",
    "HilbertSpace",
    "LindbladModel",
    "Operator",
    "SpectrumTrace",
    "TimeTrace",
    "basis_ket",
    "destroy",
    "embed",
    "evolve",
    "expectation",
    "identity",
    "lindblad_rhs",
    "liouvillian_matrix",
    "number",
    "pauli",
    "psd",
    "steady_state",
    "tensor",
]
