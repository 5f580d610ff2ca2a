"""
Register backends for the search loops.

One interface, three engine fidelities:
- IdealizedBackend: 2-D angle model, any N
- StatevectorBackend: full 2^n amplitudes (n <= statevector cap)
- DephasedDensityBackend: 2x2 density matrix, dephased after each
  oracle/ancilla cycle (diagnostic only)

Every backend draws exactly two uniforms per measurement (subspace, then
member) so that modes sharing a seed consume their streams identically.
"""

from abc import ABC, abstractmethod

import numpy as np

from ..models.schemas import ProblemInstance, SearchMode, TwoDimState
from .engine import (
    DensityMatrix2,
    EngineError,
    Register,
    dephase_2d,
    grover_step_2d,
    grover_step_density,
    grover_step_full,
    success_prob_full,
)


# =============================================================================
# ABSTRACT BACKEND
# =============================================================================

class RegisterBackend(ABC):
    """
    A search register that can be prepared, rotated and measured.

    Implementations hold the state of a single trial.
    """

    def __init__(self, problem: ProblemInstance):
        self.problem = problem
        self.theta0 = problem.fraction.theta

    @abstractmethod
    def prepare(self) -> None:
        """Reset to the uniform superposition."""

    @abstractmethod
    def success_probability(self) -> float:
        """Probability that measuring now yields a marked item."""

    @abstractmethod
    def rotate(self) -> None:
        """Apply one Grover rotation G."""

    def after_ancilla_cycle(self) -> None:
        """Hook run after each oracle + cloning + ancilla measurement."""

    def measure(self, rng: np.random.Generator) -> tuple[bool, int]:
        """Born-rule measurement; returns (is_marked, basis index)."""
        return self.measure_with(self.success_probability(), rng)

    def measure_with(self, success_probability: float, rng: np.random.Generator) -> tuple[bool, int]:
        """Measurement given the marked-subspace weight; two uniforms per call."""
        subspace_draw = rng.random()
        member_draw = rng.random()
        success = subspace_draw < success_probability
        return success, self._pick(success, member_draw)

    def _pick(self, success: bool, draw: float) -> int:
        """Uniform member of the target set or of its complement."""
        problem = self.problem
        if success or problem.m == problem.n_items:
            k = min(int(draw * problem.m), problem.m - 1)
            return problem.targets[k] if problem.targets is not None else k
        others = problem.n_items - problem.m
        k = min(int(draw * others), others - 1)
        if problem.targets is None:
            return problem.m + k
        index = k
        for target in problem.targets:
            if target <= index:
                index += 1
            else:
                break
        return index


# =============================================================================
# IMPLEMENTATIONS
# =============================================================================

class IdealizedBackend(RegisterBackend):
    """Register reduced to its angle; the channel leaves it untouched."""

    def prepare(self) -> None:
        self.state = TwoDimState(theta=self.theta0)

    def success_probability(self) -> float:
        return self.state.success_probability

    def rotate(self) -> None:
        self.state = grover_step_2d(self.state, self.theta0)


class StatevectorBackend(RegisterBackend):
    """Exact amplitudes; measurement follows the Born rule over all 2^n states."""

    def __init__(self, problem: ProblemInstance):
        if problem.n_qubits is None:
            raise EngineError(
                "The statevector mode needs a qubit count",
                internal_reason="problem has no n_qubits",
            )
        super().__init__(problem)
        self._targets = problem.targets if problem.targets is not None else tuple(range(problem.m))

    def prepare(self) -> None:
        self.register = Register.uniform(self.problem.n_qubits, self._targets)

    def success_probability(self) -> float:
        return success_prob_full(self.register)

    def rotate(self) -> None:
        grover_step_full(self.register)

    def _pick(self, success: bool, draw: float) -> int:
        weights = self.register.probabilities()
        marked = self.register.targets
        if success:
            candidates = marked
            weights = weights[marked]
        else:
            weights[marked] = 0.0
            candidates = None
        cumulative = np.cumsum(weights)
        if cumulative[-1] <= 0.0:
            # zero-probability branch: fall back to a uniform member
            return super()._pick(success, draw)
        position = int(np.searchsorted(cumulative, draw * cumulative[-1], side="right"))
        position = min(position, cumulative.shape[0] - 1)
        return int(candidates[position]) if candidates is not None else position


class DephasedDensityBackend(RegisterBackend):
    """2x2 density matrix whose coherence is erased after every ancilla cycle."""

    def prepare(self) -> None:
        self.rho = DensityMatrix2.pure(self.theta0)

    def success_probability(self) -> float:
        return self.rho.target_weight

    def after_ancilla_cycle(self) -> None:
        self.rho = dephase_2d(self.rho)

    def rotate(self) -> None:
        self.rho = grover_step_density(self.rho, self.theta0)


# =============================================================================
# FACTORY
# =============================================================================

def get_backend(mode: SearchMode, problem: ProblemInstance) -> RegisterBackend:
    """
    Get the backend for an engine mode.

    - "ideal": IdealizedBackend (default)
    - "full": StatevectorBackend
    - "dephased": DephasedDensityBackend
    """
    if mode is SearchMode.FULL_STATEVECTOR:
        return StatevectorBackend(problem)
    if mode is SearchMode.DEPHASED_DENSITY:
        return DephasedDensityBackend(problem)
    return IdealizedBackend(problem)
