"""Exact model conversions onto a single joint-state chain.

Joint indices are row-major over the component order (component 0 varies
slowest), for both states and symbols.  These conversions exist partly as a
second, structurally different route to the same distributions: flattening
a coupled model and running plain HMM inference must agree with the direct
coupled recursions to near machine precision.
"""

from __future__ import annotations

import numpy as np

from .errors import SizeCapError
from .models import (
    ChmmModel,
    DEFAULT_JOINT_CAP,
    HmmModel,
    Tbn2Model,
    validate_obs,
)


def _checked_product(dims, cap, what):
    total = 1
    for d in dims:
        total *= int(d)
    if total > cap:
        raise SizeCapError(f"{what} has {total} joint entries, exceeding the cap of {cap}")
    return total


def flatten_chmm(model: ChmmModel, max_joint_states: int = DEFAULT_JOINT_CAP) -> HmmModel:
    """Collapse a coupled HMM into an equivalent joint-state HMM.

    Joint state r encodes the chain-state tuple with chain 0 slowest, and
    joint symbols encode per-chain symbol tuples the same way (see
    :func:`flatten_obs`).  The joint transition multiplies, per chain, the
    renormalized product of that chain's parent coupling rows; the joint
    emission and initial distributions are plain products across chains.
    """
    sizes = model.states_per_chain
    symbols = model.symbols_per_chain
    n = _checked_product(sizes, max_joint_states, "joint state space")
    m = _checked_product(symbols, max_joint_states, "joint symbol space")
    L = model.num_chains
    state_digit = np.unravel_index(np.arange(n), sizes)
    symbol_digit = np.unravel_index(np.arange(m), symbols)

    pi = np.ones(n)
    for l in range(L):
        pi = pi * model.initials[l][state_digit[l]]

    trans = np.ones((n, n))
    for l in range(L):
        cond = np.ones((n, sizes[l]))
        for p in model.parents(l):
            cond = cond * model.couplings[(p, l)][state_digit[p], :]
        row_mass = cond.sum(axis=1, keepdims=True)
        if np.any(row_mass == 0.0):
            src = int(np.nonzero(row_mass[:, 0] == 0.0)[0][0])
            raise ValueError(
                f"coupling product for chain {l} from joint state {src} has zero mass"
            )
        trans = trans * (cond / row_mass)[:, state_digit[l]]

    emit = np.ones((n, m))
    for l in range(L):
        emit = emit * model.emissions[l][state_digit[l][:, None], symbol_digit[l][None, :]]

    return HmmModel(pi=pi, trans=trans, emit=emit)


def flatten_obs(model: ChmmModel, obs) -> np.ndarray:
    """Map per-chain observation tuples to joint symbol indices (row-major)."""
    obs = validate_obs(model, obs)
    return np.ravel_multi_index(
        tuple(obs[:, l] for l in range(model.num_chains)), model.symbols_per_chain
    )


def hmm_to_chmm(model: HmmModel) -> ChmmModel:
    """Wrap an HMM as the single chain of a coupled model."""
    return ChmmModel(
        initials=[model.pi],
        emissions=[model.emit],
        couplings={(0, 0): model.trans},
    )


def unroll_tbn(model: Tbn2Model, max_joint_states: int = DEFAULT_JOINT_CAP) -> HmmModel:
    """Unroll a two-slice template into its joint-state chain.

    Joint state r encodes an assignment of all template variables, variable
    0 slowest.  The initial distribution multiplies the initial-network
    CPTs; the transition multiplies each variable's two-slice CPT at its
    parents' values, with slice-0 parents read from the source assignment
    and slice-1 parents from the destination.  The chain is fully observed:
    the symbol alphabet is the joint assignment space and the emission
    matrix is the identity.
    """
    cards = model.cardinalities
    n = _checked_product(cards, max_joint_states, "joint assignment space")
    digit = np.unravel_index(np.arange(n), cards)

    pi = np.ones(n)
    for v, var in enumerate(model.variables):
        row = np.zeros(n, dtype=np.int64)
        for p in var.init_parents:
            row = row * cards[p] + digit[p]
        pi = pi * var.init_cpt[row, digit[v]]

    trans = np.ones((n, n))
    for v, var in enumerate(model.variables):
        row = np.zeros((n, n), dtype=np.int64)
        for s, p in var.trans_parents:
            vals = digit[p][:, None] if s == 0 else digit[p][None, :]
            row = row * cards[p] + vals
        trans = trans * var.trans_cpt[row, digit[v][None, :]]

    return HmmModel(pi=pi, trans=trans, emit=np.eye(n))
