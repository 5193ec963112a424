"""Exact density-operator mechanics for one to three spin-1/2 particles.

Qubit 0 is the most significant factor of the tensor product, so for a
two-qubit state the basis order is |00>, |01>, |10>, |11>.

All randomness is supplied by the caller as a uniform deviate ``u``; nothing
in here owns a generator.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_QUBITS = 3

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10
UNIT_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class QuantumError(ValueError):
    pass


class InvalidAxisError(QuantumError):
    pass


class InvalidParameterError(QuantumError):
    pass


class DimensionError(QuantumError):
    pass


class BellOutcome(enum.Enum):
    PsiMinus = 0
    PsiPlus = 1
    PhiMinus = 2
    PhiPlus = 3


_R = 1 / np.sqrt(2)
BELL_KETS = {
    BellOutcome.PsiMinus: np.array([0, _R, -_R, 0], dtype=complex),
    BellOutcome.PsiPlus: np.array([0, _R, _R, 0], dtype=complex),
    BellOutcome.PhiMinus: np.array([_R, 0, 0, -_R], dtype=complex),
    BellOutcome.PhiPlus: np.array([_R, 0, 0, _R], dtype=complex),
}
BELL_PROJECTORS = {k: np.outer(v, v.conj()) for k, v in BELL_KETS.items()}
SINGLET = BELL_PROJECTORS[BellOutcome.PsiMinus]


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Validated, immutable density matrix of ``n_qubits`` spin-1/2 particles."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_qubits not in range(1, MAX_QUBITS + 1):
            raise DimensionError(f"n_qubits must be 1..{MAX_QUBITS}, got {self.n_qubits}")
        m = np.array(self.matrix, dtype=complex)
        dim = 2**self.n_qubits
        if m.shape != (dim, dim):
            raise DimensionError(f"expected {dim}x{dim} matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise QuantumError("matrix is not Hermitian")
        if abs(np.trace(m) - 1) > TRACE_TOL:
            raise QuantumError(f"trace is {np.trace(m).real!r}, expected 1")
        if np.linalg.eigvalsh(m)[0] < PSD_TOL:
            raise QuantumError("matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix) -> DensityOperator:
        """Symmetrize and renormalize a nearly-valid matrix before validating it."""
        m = np.asarray(matrix, dtype=complex)
        m = (m + m.conj().T) / 2
        m = m / np.trace(m).real
        return cls(int(np.log2(m.shape[0])), m)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def allclose(self, other: DensityOperator, atol: float = 1e-12) -> bool:
        return self.n_qubits == other.n_qubits and bool(
            np.max(np.abs(self.matrix - other.matrix)) <= atol
        )


@dataclass(frozen=True)
class ChannelSpec:
    """Werner-form pair source; ``singlet_fraction`` is the weight of the singlet."""

    singlet_fraction: float = 1.0

    def __post_init__(self):
        f = float(self.singlet_fraction)
        if not 0.0 <= f <= 1.0:
            raise InvalidParameterError(f"singlet_fraction must be in [0, 1], got {f}")
        object.__setattr__(self, "singlet_fraction", f)


def _fraction(channel) -> float:
    if isinstance(channel, ChannelSpec):
        return channel.singlet_fraction
    return ChannelSpec(channel).singlet_fraction


def _as_vector(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise InvalidAxisError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return arr


def as_axis(axis) -> np.ndarray:
    a = _as_vector(axis, "axis")
    if abs(np.linalg.norm(a) - 1) > UNIT_TOL:
        raise InvalidAxisError(f"axis {a.tolist()} is not a unit vector")
    return a


def as_bloch(bloch) -> np.ndarray:
    b = _as_vector(bloch, "Bloch vector")
    if np.linalg.norm(b) > 1 + UNIT_TOL:
        raise InvalidAxisError(f"Bloch vector {b.tolist()} has norm > 1")
    return b


def spin_operator(axis) -> np.ndarray:
    """The Pauli operator a.sigma along ``axis``."""
    a = np.asarray(axis, dtype=float)
    return a[0] * SIGMA_X + a[1] * SIGMA_Y + a[2] * SIGMA_Z


def make_mixed(bloch) -> DensityOperator:
    """One-qubit state (I + r.sigma)/2 for any Bloch vector with |r| <= 1."""
    b = as_bloch(bloch)
    return DensityOperator(1, (I2 + spin_operator(b)) / 2)


def make_pure(bloch) -> DensityOperator:
    b = as_axis(bloch)
    return DensityOperator(1, (I2 + spin_operator(b)) / 2)


def make_singlet() -> DensityOperator:
    return DensityOperator(2, SINGLET)


def make_channel(channel) -> DensityOperator:
    """Werner pair: singlet with weight f, isotropic triplet remainder.

    ``channel`` is a ChannelSpec or a bare singlet fraction.
    """
    f = _fraction(channel)
    m = f * SINGLET + (1 - f) / 3 * (np.eye(4) - SINGLET)
    return DensityOperator.from_matrix(m)


def tensor(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    n = a.n_qubits + b.n_qubits
    if n > MAX_QUBITS:
        raise DimensionError(f"tensor product would have {n} qubits (max {MAX_QUBITS})")
    return DensityOperator.from_matrix(np.kron(a.matrix, b.matrix))


def embed(op: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Lift an operator on ``targets`` (in that order) to the full register."""
    k = len(targets)
    rest = [q for q in range(n_qubits) if q not in targets]
    order = list(targets) + rest
    full = np.kron(op, np.eye(2 ** (n_qubits - k))).reshape((2,) * (2 * n_qubits))
    axes = [order.index(q) for q in range(n_qubits)]
    full = full.transpose(axes + [n_qubits + a for a in axes])
    return full.reshape(2**n_qubits, 2**n_qubits)


def _check_qubit(state: DensityOperator, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range for {state.n_qubits}-qubit state")


def partial_trace(state: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Reduced state on the qubits in ``keep`` (kept in ascending order)."""
    keep = sorted(keep)
    for q in keep:
        _check_qubit(state, q)
    n = state.n_qubits
    t = state.matrix.reshape((2,) * (2 * n))
    # trace out from the highest index down so axis numbers stay valid
    for q in reversed(range(n)):
        if q in keep:
            continue
        width = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + width)
    d = 2 ** len(keep)
    return DensityOperator.from_matrix(t.reshape(d, d))


def bloch_of(state: DensityOperator) -> np.ndarray:
    if state.n_qubits != 1:
        raise DimensionError("bloch_of needs a one-qubit state")
    return np.array([np.trace(state.matrix @ s).real for s in PAULI])


def expectation(state: DensityOperator, op: np.ndarray) -> float:
    return float(np.trace(state.matrix @ op).real)


def _project(state: DensityOperator, proj: np.ndarray) -> tuple[float, np.ndarray]:
    m = proj @ state.matrix @ proj
    return float(np.trace(m).real), m


def _select(probabilities: Sequence[float], u: float) -> int:
    """Index of the outcome that ``u`` falls into on the cumulative ladder."""
    if not 0.0 <= u < 1.0:
        raise InvalidParameterError(f"uniform deviate must be in [0, 1), got {u}")
    cum = 0.0
    for i, p in enumerate(probabilities):
        cum += p
        if u < cum:
            return i
    # rounding left u above the last rung: fall back to the last possible outcome
    return max(i for i, p in enumerate(probabilities) if p > 0)


def spin_branches(state: DensityOperator, qubit: int, axis) -> dict:
    """Probability and unnormalized collapsed matrix for outcomes +1 and -1."""
    _check_qubit(state, qubit)
    sa = spin_operator(as_axis(axis))
    return {
        sign: _project(state, embed((I2 + sign * sa) / 2, [qubit], state.n_qubits))
        for sign in (+1, -1)
    }


def measure_spin(
    state: DensityOperator, qubit: int, axis, u: float
) -> tuple[int, DensityOperator, float]:
    """Projective spin measurement of ``qubit`` along ``axis``.

    Returns (outcome, collapsed state, probability of that outcome); +1 is
    chosen when ``u < P(+1)``.
    """
    branches = spin_branches(state, qubit, axis)
    k = _select([branches[+1][0], branches[-1][0]], u)
    outcome = +1 if k == 0 else -1
    p, m = branches[outcome]
    return outcome, DensityOperator.from_matrix(m), p


def _require_pair(state: DensityOperator) -> None:
    if state.n_qubits != 2:
        raise DimensionError(f"expected a two-qubit state, got {state.n_qubits} qubits")


def correlation(state: DensityOperator, a, b) -> float:
    """E(a, b) = <(a.sigma) x (b.sigma)>."""
    _require_pair(state)
    op = np.kron(spin_operator(as_axis(a)), spin_operator(as_axis(b)))
    return expectation(state, op)


def chsh(state: DensityOperator, a, a_prime, b, b_prime) -> float:
    """CHSH combination E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    _require_pair(state)
    return (
        correlation(state, a, b)
        - correlation(state, a, b_prime)
        + correlation(state, a_prime, b)
        + correlation(state, a_prime, b_prime)
    )


@functools.lru_cache(maxsize=None)
def _bell_projectors(i: int, j: int, n_qubits: int) -> tuple:
    return tuple(
        (outcome, embed(proj, [i, j], n_qubits)) for outcome, proj in BELL_PROJECTORS.items()
    )


def bell_probabilities(state: DensityOperator, qubits: tuple[int, int]) -> dict:
    """Born probabilities and unnormalized post-measurement matrices per outcome."""
    i, j = qubits
    _check_qubit(state, i)
    _check_qubit(state, j)
    if i == j:
        raise IndexError("Bell measurement needs two distinct qubits")
    return {o: _project(state, proj) for o, proj in _bell_projectors(i, j, state.n_qubits)}


def bell_measure(
    state: DensityOperator, qubits: tuple[int, int], u: float
) -> tuple[BellOutcome, DensityOperator, float]:
    branches = bell_probabilities(state, qubits)
    outcomes = list(BellOutcome)
    k = _select([branches[o][0] for o in outcomes], u)
    p, m = branches[outcomes[k]]
    return outcomes[k], DensityOperator.from_matrix(m), p


def teleport_input(input_bloch, channel) -> DensityOperator:
    """Register (A, B, C): A carries the input, (B, C) is the channel pair."""
    return tensor(make_mixed(input_bloch), make_channel(channel))


def postselected_output(input_bloch, channel) -> tuple[DensityOperator, float]:
    """State of C given a singlet outcome on (A, B), and that outcome's probability."""
    state = teleport_input(input_bloch, channel)
    p, m = bell_probabilities(state, (0, 1))[BellOutcome.PsiMinus]
    return partial_trace(DensityOperator.from_matrix(m), [2]), p


def teleport(
    input_bloch, channel, u: float
) -> tuple[bool, DensityOperator | None, float]:
    """Post-selected teleportation; no Pauli correction is ever applied.

    Returns (accepted, output state of C or None, probability of the drawn
    Bell outcome).
    """
    state = teleport_input(input_bloch, channel)
    outcome, collapsed, p = bell_measure(state, (0, 1), u)
    if outcome is not BellOutcome.PsiMinus:
        return False, None, p
    return True, partial_trace(collapsed, [2]), p


def fidelity(state: DensityOperator, target) -> float:
    """Overlap <psi|rho|psi> with the pure state along ``target``."""
    t = as_axis(target)
    return float((1 + bloch_of(state) @ t) / 2)


def rotation_unitary(axis, angle: float) -> np.ndarray:
    """SU(2) rotation exp(-i angle a.sigma / 2)."""
    a = as_axis(axis)
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * spin_operator(a)
