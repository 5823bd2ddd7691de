"""Brute-force reference results by exhaustive enumeration of hidden paths.

Deliberately independent of the scaled recursions elsewhere in the package:
plain probability-space sums over every path, with a size guard instead of
numerical scaling.  Used to validate the fast implementations.
"""

from __future__ import annotations

import itertools

import numpy as np

from .decoding import DecodeResult
from .errors import ImpossibleObservationError, SizeCapError
from .models import HmmModel, validate_obs

# Enumeration guard: N**T may not exceed this.
MAX_PATHS = 10**6


def _guarded_obs(model, obs):
    obs = validate_obs(model, obs)
    if model.num_states ** obs.shape[0] > MAX_PATHS:
        raise SizeCapError(
            f"enumerating {model.num_states}^{obs.shape[0]} paths exceeds the cap of {MAX_PATHS}"
        )
    return obs


def _path_probability(model, obs, path):
    p = model.pi[path[0]] * model.emit[path[0], obs[0]]
    for t in range(1, obs.shape[0]):
        p *= model.trans[path[t - 1], path[t]] * model.emit[path[t], obs[t]]
    return p


def enum_likelihood(model: HmmModel, obs) -> float:
    """Exact P(obs): the sum of every hidden path's joint probability."""
    obs = _guarded_obs(model, obs)
    total = 0.0
    for path in itertools.product(range(model.num_states), repeat=obs.shape[0]):
        total += _path_probability(model, obs, path)
    return total


def enum_posterior(model: HmmModel, obs):
    """Posteriors (gamma, xi) by enumeration.

    gamma[t, i] is P(x_t = i | obs); xi[t, i, j] is P(x_t = i, x_{t+1} = j | obs).
    """
    obs = _guarded_obs(model, obs)
    T = obs.shape[0]
    n = model.num_states
    gamma = np.zeros((T, n))
    xi = np.zeros((T - 1, n, n))
    total = 0.0
    for path in itertools.product(range(n), repeat=T):
        p = _path_probability(model, obs, path)
        total += p
        for t in range(T):
            gamma[t, path[t]] += p
        for t in range(T - 1):
            xi[t, path[t], path[t + 1]] += p
    if total == 0.0:
        raise ImpossibleObservationError(None)
    return gamma / total, xi / total


def enum_map_path(model: HmmModel, obs) -> DecodeResult:
    """Exhaustive argmax over hidden paths; ties go to the lexicographically smallest path."""
    obs = _guarded_obs(model, obs)
    best_p = -1.0
    best = None
    # itertools.product yields paths in lexicographic order, so a strict
    # improvement test keeps the smallest path among exact ties.
    for path in itertools.product(range(model.num_states), repeat=obs.shape[0]):
        p = _path_probability(model, obs, path)
        if p > best_p:
            best_p, best = p, path
    with np.errstate(divide="ignore"):
        return DecodeResult(np.array(best, dtype=np.int64), float(np.log(best_p)))
