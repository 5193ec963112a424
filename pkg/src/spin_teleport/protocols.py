"""Stand-alone quantum checks driven from the CLI: CHSH test and teleport sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quantum as qc
from .analysis import chsh_error_from_counts, chsh_from_counts

_X = np.array([1.0, 0.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])

# optimal singlet settings for the sign pattern E(a,b) - E(a,b') + E(a',b) + E(a',b')
OPTIMAL_AXES = {
    "a": _Z,
    "a_prime": _X,
    "b": -(_Z + _X) / math.sqrt(2),
    "b_prime": (_Z - _X) / math.sqrt(2),
}
TSIRELSON = 2 * math.sqrt(2)


def optimal_settings():
    ax = OPTIMAL_AXES
    return (
        (ax["a"], ax["b"]),
        (ax["a"], ax["b_prime"]),
        (ax["a_prime"], ax["b"]),
        (ax["a_prime"], ax["b_prime"]),
    )


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def joint_probabilities(state: qc.DensityOperator, a, b) -> np.ndarray:
    """2x2 table P(A = +-1, B = +-1), index 0 meaning +1."""
    table = np.zeros((2, 2))
    for i, (pa, ma) in enumerate(qc.spin_branches(state, 0, a).values()):
        if pa <= 0:
            continue
        after = qc.DensityOperator.from_matrix(ma)
        for j, (pb, _) in enumerate(qc.spin_branches(after, 1, b).values()):
            table[i, j] = pa * pb
    return table


@dataclass(frozen=True)
class BellResult:
    counts: np.ndarray
    chsh: float
    chsh_error: float
    exact: float


def run_bell_test(singlet_fraction: float, n_events: int, seed: int) -> BellResult:
    """Four-setting CHSH run on the Werner pair, split evenly across settings.

    Each event measures qubit 0 along the A setting with one deviate, then
    qubit 1 of the collapsed state along the B setting with another; the
    draws are vectorized per setting.
    """
    if n_events < 4:
        raise ValueError(f"need at least 4 events (one per setting), got {n_events}")
    state = qc.make_channel(singlet_fraction)
    counts = np.zeros((4, 2, 2), dtype=np.int64)
    per = [n_events // 4 + (1 if s < n_events % 4 else 0) for s in range(4)]
    for s, (a, b) in enumerate(optimal_settings()):
        table = joint_probabilities(state, a, b)
        p_a_plus = table[0].sum()
        p_b_plus = np.array(
            [table[i, 0] / table[i].sum() if table[i].sum() > 0 else 0.0 for i in range(2)]
        )
        rng = _stream(seed, s)
        u = rng.random((per[s], 2))
        a_idx = np.where(u[:, 0] < p_a_plus, 0, 1)
        b_idx = np.where(u[:, 1] < p_b_plus[a_idx], 0, 1)
        np.add.at(counts[s], (a_idx, b_idx), 1)
    exact = qc.chsh(state, OPTIMAL_AXES["a"], OPTIMAL_AXES["a_prime"], OPTIMAL_AXES["b"], OPTIMAL_AXES["b_prime"])
    return BellResult(counts, chsh_from_counts(counts), chsh_error_from_counts(counts), exact)


def werner_fidelity(singlet_fraction: float) -> float:
    """Post-selected fidelity of a pure input through the Werner channel."""
    return (1 + 2 * singlet_fraction) / 3


def random_pure_axes(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class TeleportCheck:
    inputs: np.ndarray
    fidelities: np.ndarray
    predicted_fidelity: float
    acceptance_probabilities: np.ndarray
    accepted: int
    trials: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.trials

    @property
    def acceptance_error(self) -> float:
        r = self.acceptance_rate
        return math.sqrt(r * (1 - r) / self.trials)

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.fidelities - self.predicted_fidelity)))


def teleport_check(
    singlet_fraction: float, n_trials: int, seed: int, n_states: int = 20
) -> TeleportCheck:
    """Sweep random pure inputs through post-selected teleportation.

    Fidelities come from the exact post-selected state; acceptance is
    sampled with ``n_trials`` deviates spread over the inputs.
    """
    if n_trials < n_states:
        raise ValueError(f"need at least {n_states} trials, got {n_trials}")
    rng = _stream(seed, 0)
    inputs = random_pure_axes(n_states, rng)
    fids, probs = [], []
    for psi in inputs:
        out, p = qc.postselected_output(psi, singlet_fraction)
        fids.append(qc.fidelity(out, psi))
        probs.append(p)
    per = [n_trials // n_states + (1 if i < n_trials % n_states else 0) for i in range(n_states)]
    accepted = 0
    for i, p in enumerate(probs):
        accepted += int(np.count_nonzero(_stream(seed, 1, i).random(per[i]) < p))
    return TeleportCheck(
        inputs=inputs,
        fidelities=np.array(fids),
        predicted_fidelity=werner_fidelity(singlet_fraction),
        acceptance_probabilities=np.array(probs),
        accepted=accepted,
        trials=n_trials,
    )
