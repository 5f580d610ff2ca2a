"""
Quantum-state evolution.

Three fidelities of the same search register:
- 2-D angle model (TwoDimState): the state as one angle in the
  {|t_perp>, |t>} plane.
- Full statevector (Register): 2^n complex amplitudes, exact Grover steps.
- 2x2 density matrix (DensityMatrix2): diagnostic model that can be
  dephased after each oracle/ancilla cycle.

The cloning disentanglement is modeled only by its effective output maps:
the ancilla leaves the channel as eta*rho + (1 - eta)/2 * I and the search
register is left as it was.
"""

import logging
import math
from typing import Iterable

import numpy as np

from ..config import get_settings
from ..models.schemas import CloneChannel, TwoDimState


logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-10


# =============================================================================
# EXCEPTIONS
# =============================================================================

class EngineError(Exception):
    """
    Raised when a register cannot be built or is invalid.

    Contains a user-safe message.
    """
    def __init__(self, message: str, internal_reason: str = ""):
        self.message = message
        self.internal_reason = internal_reason
        super().__init__(message)


class RegisterTooLarge(EngineError):
    """The statevector would exceed the configured qubit cap."""


# =============================================================================
# RANDOM STREAMS
# =============================================================================

def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """
    Counter-based stream for one trial.

    Philox keyed through SeedSequence(seed, spawn_key=(trial_index,)): the
    stream depends only on (seed, trial_index), never on execution order.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(trial_index,))
    return np.random.Generator(np.random.Philox(sequence))


# =============================================================================
# 2-D ANGLE MODEL
# =============================================================================

def grover_step_2d(state: TwoDimState, theta0: float) -> TwoDimState:
    """One rotation G: theta -> theta + 2*theta0 (not wrapped)."""
    if not 0.0 < theta0 <= math.pi / 2 + 1e-15:
        raise EngineError("theta0 must lie in (0, pi/2]", internal_reason=f"theta0={theta0}")
    return TwoDimState(theta=state.theta + 2.0 * theta0)


# =============================================================================
# FULL STATEVECTOR
# =============================================================================

class Register:
    """
    n-qubit statevector with an explicit set of marked basis states.

    Operations mutate the amplitudes in place; a Register belongs to a
    single trial.
    """

    def __init__(self, n_qubits: int, amplitudes: np.ndarray, targets: Iterable[int]):
        cap = get_settings().statevector_max_qubits
        if n_qubits < 1:
            raise EngineError("A register needs at least one qubit", internal_reason=f"n={n_qubits}")
        if n_qubits > cap:
            raise RegisterTooLarge(
                f"Statevector of {n_qubits} qubits exceeds the {cap}-qubit cap; "
                "use the 2-D mode for larger databases",
                internal_reason=f"n={n_qubits}, cap={cap}",
            )
        size = 2 ** n_qubits
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (size,):
            raise EngineError("Amplitude vector has the wrong length",
                              internal_reason=f"shape={amplitudes.shape}, expected={size}")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise EngineError("Amplitudes must be normalized", internal_reason=f"norm={norm!r}")
        marked = np.unique(np.fromiter(targets, dtype=np.int64))
        if marked.size == 0:
            raise EngineError("At least one basis state must be marked")
        if marked[0] < 0 or marked[-1] >= size:
            raise EngineError("Marked index out of range",
                              internal_reason=f"range=[{marked[0]}, {marked[-1]}], size={size}")
        self.n_qubits = n_qubits
        self.amplitudes = amplitudes
        self.targets = marked

    @classmethod
    def uniform(cls, n_qubits: int, targets: Iterable[int]) -> "Register":
        """Walsh-Hadamard state: every amplitude 1/sqrt(N)."""
        cap = get_settings().statevector_max_qubits
        if n_qubits > cap:
            raise RegisterTooLarge(
                f"Statevector of {n_qubits} qubits exceeds the {cap}-qubit cap; "
                "use the 2-D mode for larger databases",
                internal_reason=f"n={n_qubits}, cap={cap}",
            )
        size = 2 ** n_qubits
        amplitudes = np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128)
        return cls(n_qubits, amplitudes, targets)

    @property
    def size(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def apply_oracle_full(reg: Register) -> Register:
    """Phase oracle: negate the marked amplitudes."""
    reg.amplitudes[reg.targets] *= -1.0
    return reg


def apply_diffusion_full(reg: Register) -> Register:
    """Inversion about the mean: a_i -> 2*mean - a_i."""
    mean = reg.amplitudes.mean()
    np.subtract(2.0 * mean, reg.amplitudes, out=reg.amplitudes)
    return reg


def grover_step_full(reg: Register) -> Register:
    return apply_diffusion_full(apply_oracle_full(reg))


def success_prob_full(reg: Register) -> float:
    """Total probability of the marked basis states."""
    marked = reg.amplitudes[reg.targets]
    return float(min(1.0, np.sum(marked.real ** 2 + marked.imag ** 2)))


# =============================================================================
# CLONING CHANNEL AND ANCILLA SAMPLING
# =============================================================================

def ancilla_distribution(sin2theta: float, channel: CloneChannel) -> float:
    """Probability that the cloned ancilla reads 1: eta*sin^2 + (1-eta)/2."""
    if not 0.0 <= sin2theta <= 1.0:
        raise EngineError("sin^2(theta) must lie in [0, 1]", internal_reason=f"value={sin2theta}")
    return channel.eta * sin2theta + (1.0 - channel.eta) / 2.0


def ancilla_zero_probability(sin2theta: float, channel: CloneChannel) -> float:
    """Probability that the cloned ancilla reads 0: eta*cos^2 + (1-eta)/2."""
    if not 0.0 <= sin2theta <= 1.0:
        raise EngineError("sin^2(theta) must lie in [0, 1]", internal_reason=f"value={sin2theta}")
    return channel.eta * (1.0 - sin2theta) + (1.0 - channel.eta) / 2.0


def sample_ancilla(p1: float, rng: np.random.Generator) -> int:
    """Bernoulli(p1) draw; one uniform per call."""
    if not 0.0 <= p1 <= 1.0:
        raise EngineError("Outcome probability must lie in [0, 1]", internal_reason=f"p1={p1}")
    return 1 if rng.random() < p1 else 0


# =============================================================================
# 2x2 DENSITY MATRIX
# =============================================================================

class DensityMatrix2:
    """
    2x2 density matrix in the {|t_perp>, |t>} basis.

    Index 0 is the non-target direction, index 1 the target direction.
    """

    TOLERANCE = 1e-12

    def __init__(self, matrix: np.ndarray, validate: bool = True):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise EngineError("Density matrix must be 2x2", internal_reason=f"shape={matrix.shape}")
        self.matrix = matrix
        if validate:
            self.validate()

    @classmethod
    def pure(cls, theta: float) -> "DensityMatrix2":
        """|psi><psi| for cos(theta)|t_perp> + sin(theta)|t>."""
        vector = np.array([math.cos(theta), math.sin(theta)], dtype=np.complex128)
        return cls(np.outer(vector, vector.conj()))

    @classmethod
    def diagonal(cls, non_target: float, target: float) -> "DensityMatrix2":
        return cls(np.diag([non_target, target]).astype(np.complex128))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix2":
        return cls.diagonal(0.5, 0.5)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def target_weight(self) -> float:
        return float(min(1.0, max(0.0, self.matrix[1, 1].real)))

    @property
    def non_target_weight(self) -> float:
        return float(min(1.0, max(0.0, self.matrix[0, 0].real)))

    def validate(self) -> None:
        tol = self.TOLERANCE
        if abs(self.trace - 1.0) > tol:
            raise EngineError("Density matrix must have unit trace", internal_reason=f"trace={self.trace}")
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=tol, rtol=0.0):
            raise EngineError("Density matrix must be Hermitian")
        if np.linalg.eigvalsh(self.matrix).min() < -tol:
            raise EngineError("Density matrix must be positive semidefinite")


def channel_output_density(sin2theta: float, channel: CloneChannel) -> DensityMatrix2:
    """
    Ancilla state after the cloning channel.

    eta * [[cos^2, cos sin], [sin cos, sin^2]] + (1 - eta)/2 * I; the
    diagonal equals (ancilla_zero_probability, ancilla_distribution).
    """
    if not 0.0 <= sin2theta <= 1.0:
        raise EngineError("sin^2(theta) must lie in [0, 1]", internal_reason=f"value={sin2theta}")
    eta = channel.eta
    cos_sin = math.sqrt(1.0 - sin2theta) * math.sqrt(sin2theta)
    matrix = np.array(
        [
            [eta * (1.0 - sin2theta) + (1.0 - eta) / 2.0, eta * cos_sin],
            [eta * cos_sin, eta * sin2theta + (1.0 - eta) / 2.0],
        ],
        dtype=np.complex128,
    )
    return DensityMatrix2(matrix)


def dephase_2d(rho: DensityMatrix2) -> DensityMatrix2:
    """Erase coherence between the target and non-target directions."""
    return DensityMatrix2(np.diag(np.diag(rho.matrix)), validate=False)


def _rotation(theta0: float) -> np.ndarray:
    c = math.cos(2.0 * theta0)
    s = math.sin(2.0 * theta0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def grover_step_density(rho: DensityMatrix2, theta0: float) -> DensityMatrix2:
    """rho -> U rho U^dagger with U the plane rotation by 2*theta0."""
    if not 0.0 < theta0 <= math.pi / 2 + 1e-15:
        raise EngineError("theta0 must lie in (0, pi/2]", internal_reason=f"theta0={theta0}")
    u = _rotation(theta0)
    return DensityMatrix2(u @ rho.matrix @ u.conj().T, validate=False)

