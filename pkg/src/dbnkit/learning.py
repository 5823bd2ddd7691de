"""Parameter estimation: closed-form counting and Baum-Welch EM.

With fully observed state paths, maximum-likelihood estimates are plain
count ratios (optionally Dirichlet-smoothed by a pseudocount).  With hidden
states, Baum-Welch alternates smoothing under the current parameters with
row renormalization of the expected counts; the log-likelihood trace is
nondecreasing up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ImpossibleObservationError
from .inference import backward, forward
from .models import HmmModel, validate_obs


@dataclass(frozen=True)
class EmConfig:
    """Stopping rule and count smoothing for EM runs.

    Convergence is declared when |ll_k - ll_{k-1}| < rel_tolerance * (1 + |ll_k|).
    ``pseudocount`` is added to every expected count before row normalization;
    with pseudocount 0, rows that collected no mass fall back to uniform.
    """

    max_iterations: int = 200
    rel_tolerance: float = 1e-6
    pseudocount: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.rel_tolerance <= 0.0:
            raise ValueError(f"rel_tolerance must be positive, got {self.rel_tolerance}")
        if self.pseudocount < 0.0:
            raise ValueError(f"pseudocount must be nonnegative, got {self.pseudocount}")


@dataclass(frozen=True, eq=False)
class EmTrace:
    """Log-likelihood of the model at the start of each completed iteration."""

    log_likelihoods: np.ndarray
    converged: bool
    iterations_run: int

    def __post_init__(self):
        lls = np.asarray(self.log_likelihoods, dtype=np.float64)
        lls.setflags(write=False)
        object.__setattr__(self, "log_likelihoods", lls)


@dataclass
class SufficientStats:
    """Expected counts accumulated by an E-step over all sequences."""

    expected_initial: np.ndarray
    expected_transitions: np.ndarray
    expected_emissions: np.ndarray

    @classmethod
    def zeros(cls, num_states, num_symbols):
        return cls(
            expected_initial=np.zeros(num_states),
            expected_transitions=np.zeros((num_states, num_states)),
            expected_emissions=np.zeros((num_states, num_symbols)),
        )


def normalize_rows(counts: np.ndarray, pseudocount: float = 0.0) -> np.ndarray:
    """Row-normalize counts after adding ``pseudocount``; empty rows go uniform."""
    c = counts + pseudocount
    totals = c.sum(axis=1, keepdims=True)
    out = np.empty(c.shape, dtype=np.float64)
    empty = totals[:, 0] == 0.0
    out[empty] = 1.0 / c.shape[1]
    out[~empty] = c[~empty] / totals[~empty]
    return out


def mle_complete(data, num_states: int, num_symbols: int, pseudocount: float = 0.0) -> HmmModel:
    """Closed-form MLE from fully observed (state path, observations) pairs.

    Counts sequence starts, transitions, and emissions across all pairs,
    adds ``pseudocount`` to every cell, and row-normalizes.
    """
    if not data:
        raise ValueError("data must contain at least one (states, observations) pair")
    if pseudocount < 0.0:
        raise ValueError(f"pseudocount must be nonnegative, got {pseudocount}")
    init = np.zeros(num_states)
    trans = np.zeros((num_states, num_states))
    emit = np.zeros((num_states, num_symbols))
    for idx, (states, symbols) in enumerate(data):
        states = np.asarray(states, dtype=np.int64)
        symbols = np.asarray(symbols, dtype=np.int64)
        if states.ndim != 1 or states.shape != symbols.shape or states.size == 0:
            raise ValueError(f"pair {idx}: states and observations must be equal-length nonempty vectors")
        if states.min() < 0 or states.max() >= num_states:
            raise ValueError(f"pair {idx}: state index out of range 0..{num_states - 1}")
        if symbols.min() < 0 or symbols.max() >= num_symbols:
            raise ValueError(f"pair {idx}: symbol index out of range 0..{num_symbols - 1}")
        init[states[0]] += 1.0
        np.add.at(trans, (states[:-1], states[1:]), 1.0)
        np.add.at(emit, (states, symbols), 1.0)
    return HmmModel(
        pi=normalize_rows(init[None, :], pseudocount)[0],
        trans=normalize_rows(trans, pseudocount),
        emit=normalize_rows(emit, pseudocount),
    )


def _e_step(model, sequences):
    stats = SufficientStats.zeros(model.num_states, model.num_symbols)
    total_ll = 0.0
    for idx, obs in enumerate(sequences):
        try:
            fwd = forward(model, obs)
        except ImpossibleObservationError as err:
            raise ImpossibleObservationError(
                err.t,
                f"sequence {idx}: observation at time step {err.t} is impossible "
                "under the current model",
            ) from err
        bwd = backward(model, obs, fwd.scale_factors)
        total_ll += fwd.log_likelihood
        alpha = fwd.scaled_alpha
        beta = bwd.scaled_beta
        gamma = alpha * beta
        gamma /= gamma.sum(axis=1, keepdims=True)
        stats.expected_initial += gamma[0]
        if obs.shape[0] > 1:
            # sum_t xi_t = A * (alpha[:-1]^T @ W) with W the emission-weighted,
            # rescaled backward table one step ahead.
            w = model.emit[:, obs[1:]].T * beta[1:] / fwd.scale_factors[1:, None]
            stats.expected_transitions += model.trans * (alpha[:-1].T @ w)
        emis = np.zeros((model.num_symbols, model.num_states))
        np.add.at(emis, obs, gamma)
        stats.expected_emissions += emis.T
    return stats, total_ll


def _m_step(stats, pseudocount):
    return HmmModel(
        pi=normalize_rows(stats.expected_initial[None, :], pseudocount)[0],
        trans=normalize_rows(stats.expected_transitions, pseudocount),
        emit=normalize_rows(stats.expected_emissions, pseudocount),
    )


def baum_welch(init: HmmModel, sequences, config: EmConfig = EmConfig()):
    """EM parameter estimation for an HMM from observation sequences.

    Each iteration smooths every sequence under the current model,
    accumulates expected initial/transition/emission counts in listed
    order, and renormalizes rows.  The trace records the total
    log-likelihood of the model each iteration started from; when the
    stopping rule fires, the model that achieved the final trace entry is
    returned without a further update.

    Returns (trained model, EmTrace).
    """
    sequences = [validate_obs(init, s) for s in sequences]
    if not sequences:
        raise ValueError("sequences must be nonempty")
    model = init
    lls = []
    converged = False
    for _ in range(config.max_iterations):
        stats, total_ll = _e_step(model, sequences)
        lls.append(total_ll)
        if len(lls) > 1 and abs(lls[-1] - lls[-2]) < config.rel_tolerance * (1.0 + abs(lls[-1])):
            converged = True
            break
        model = _m_step(stats, config.pseudocount)
    return model, EmTrace(np.array(lls), converged, len(lls))
