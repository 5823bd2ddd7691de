"""Command-line front end: file-driven access to every library operation.

Numeric output goes to stdout as tab-separated tables with 12 significant
digits, rows in time order and columns in state order, so identical
invocations are byte-identical and diffable.  Exit codes: 0 success,
1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import chmm as chmm_mod
from . import inference, learning
from .convert import flatten_chmm, flatten_obs, unroll_tbn
from .decoding import viterbi
from .errors import DbnError
from .io import format_obs, load_model, load_observations, parse_obs_line, save_model, save_observations
from .models import ChmmModel, HmmModel, Tbn2Model
from .oracle import enum_likelihood, enum_map_path, enum_posterior
from .sampling import random_chmm, random_hmm, sample

USAGE_EXIT = 1
DATA_EXIT = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _print_row(values):
    print("\t".join(_fmt(v) for v in values))


def _print_table(table):
    for row in np.asarray(table):
        _print_row(row)


def _load_obs_arg(value):
    if os.path.exists(value):
        return load_observations(value)
    return [parse_obs_line(value, ctx="--obs")]


def _as_joint_hmm(model):
    """View any model as a plain HMM (identity for HMMs, unroll for 2TBNs)."""
    if isinstance(model, HmmModel):
        return model
    if isinstance(model, Tbn2Model):
        return unroll_tbn(model)
    raise TypeError(f"no joint HMM view for {type(model).__name__}")


def _cmd_validate(args):
    load_model(args.model)
    return 0


def _cmd_sample(args):
    model = load_model(args.model)
    if isinstance(model, Tbn2Model):
        model = unroll_tbn(model)
    state_seqs = []
    obs_seqs = []
    for i in range(args.count):
        states, symbols = sample(model, args.length, args.seed + i)
        state_seqs.append(states)
        obs_seqs.append(symbols)
    if args.out:
        save_observations(obs_seqs, args.out)
    else:
        for seq in obs_seqs:
            print(format_obs(seq))
    if args.states_out:
        save_observations(state_seqs, args.states_out)
    return 0


def _cmd_likelihood(args):
    model = load_model(args.model)
    for seq in _load_obs_arg(args.obs):
        if isinstance(model, ChmmModel):
            ll = chmm_mod.chmm_likelihood(model, seq)
        else:
            ll = inference.log_likelihood(_as_joint_hmm(model), seq)
        print(_fmt(ll))
    return 0


def _cmd_filter(args):
    model = load_model(args.model)
    sequences = _load_obs_arg(args.obs)
    for i, seq in enumerate(sequences):
        if i:
            print()
        if args.particles:
            if isinstance(model, ChmmModel):
                table = inference.particle_filter(
                    flatten_chmm(model), flatten_obs(model, seq), args.particles, args.seed
                ).estimates
            else:
                table = inference.particle_filter(
                    _as_joint_hmm(model), seq, args.particles, args.seed
                ).estimates
        elif isinstance(model, ChmmModel):
            table = chmm_mod.chmm_forward(model, seq).scaled_alpha
        else:
            table = inference.filter(_as_joint_hmm(model), seq)
        _print_table(table)
    return 0


def _cmd_smooth(args):
    model = load_model(args.model)
    for i, seq in enumerate(_load_obs_arg(args.obs)):
        if i:
            print()
        if isinstance(model, ChmmModel):
            table = chmm_mod.chmm_smooth(model, seq).gamma
        else:
            table = inference.smooth(_as_joint_hmm(model), seq).gamma
        _print_table(table)
    return 0


def _cmd_predict(args):
    model = load_model(args.model)
    if isinstance(model, ChmmModel):
        hmm_view = flatten_chmm(model)
        sequences = [flatten_obs(model, s) for s in _load_obs_arg(args.obs)]
    else:
        hmm_view = _as_joint_hmm(model)
        sequences = _load_obs_arg(args.obs)
    if args.observation and args.horizon != 1:
        raise _UsageError("--observation predicts one step ahead; --horizon must be 1")
    for seq in sequences:
        if args.observation:
            _print_row(inference.predict_obs(hmm_view, seq))
        else:
            _print_row(inference.predict_state(hmm_view, seq, args.horizon))
    return 0


def _cmd_decode(args):
    model = load_model(args.model)
    if isinstance(model, ChmmModel):
        hmm_view = flatten_chmm(model)
        sequences = [flatten_obs(model, s) for s in _load_obs_arg(args.obs)]
    else:
        hmm_view = _as_joint_hmm(model)
        sequences = _load_obs_arg(args.obs)
    for seq in sequences:
        result = viterbi(hmm_view, seq)
        print("\t".join(str(int(s)) for s in result.path))
        if args.score:
            print(_fmt(result.log_joint_score))
    return 0


def _em_config(args):
    return learning.EmConfig(
        max_iterations=args.max_iters,
        rel_tolerance=args.tol,
        pseudocount=args.pseudocount,
    )


def _cmd_train(args):
    model = load_model(args.model)
    if not isinstance(model, HmmModel):
        raise DbnError(
            f"train expects an hmm initial model, got {type(model).__name__}; "
            "use train-chmm for coupled models"
        )
    trained, trace = learning.baum_welch(model, _load_obs_arg(args.obs), _em_config(args))
    for ll in trace.log_likelihoods:
        print(_fmt(ll))
    save_model(trained, args.out)
    return 0


def _cmd_train_chmm(args):
    model = load_model(args.model)
    if not isinstance(model, ChmmModel):
        raise DbnError(f"train-chmm expects a chmm initial model, got {type(model).__name__}")
    trained, trace = chmm_mod.chmm_em(model, _load_obs_arg(args.obs), _em_config(args))
    for ll in trace.log_likelihoods:
        print(_fmt(ll))
    save_model(trained, args.out)
    return 0


def _cmd_oracle_check(args):
    checks = run_equivalence_checks(args.count, args.seed)
    ok = True
    for name, worst, tol in checks:
        status = "ok" if worst <= tol else "FAIL"
        if worst > tol:
            ok = False
        print(f"{name}: max deviation {worst:.3e} (tolerance {tol:.0e}) {status}")
    print("all checks passed" if ok else "checks FAILED")
    return 0 if ok else DATA_EXIT


def run_equivalence_checks(count: int, seed: int):
    """Compare the fast implementations against enumeration on random instances.

    Returns a list of (check name, worst deviation, tolerance) triples.
    Path mismatches count as deviation 1.0.
    """
    rng = np.random.default_rng(seed)
    lik_dev = gamma_dev = xi_dev = path_dev = score_dev = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        T = int(rng.integers(1, 7))
        model = random_hmm(n, m, rng)
        obs = rng.integers(0, m, size=T)
        fwd = inference.forward(model, obs)
        lik_dev = max(lik_dev, abs(np.exp(fwd.log_likelihood) - enum_likelihood(model, obs)))
        post = inference.smooth(model, obs)
        ref_gamma, ref_xi = enum_posterior(model, obs)
        gamma_dev = max(gamma_dev, float(np.abs(post.gamma - ref_gamma).max()))
        if T > 1:
            xi_dev = max(xi_dev, float(np.abs(post.xi - ref_xi).max()))
        decoded = viterbi(model, obs)
        ref_path = enum_map_path(model, obs)
        if not np.array_equal(decoded.path, ref_path.path):
            path_dev = 1.0
        ref_p = np.exp(ref_path.log_joint_score)
        score_dev = max(score_dev, abs(np.exp(decoded.log_joint_score) - ref_p) / ref_p)

    recon_dev = 0.0
    for _ in range(count):
        n = int(rng.integers(1, 11))
        m = int(rng.integers(1, 5))
        T = int(rng.integers(1, 201))
        model = random_hmm(n, m, rng)
        obs = rng.integers(0, m, size=T)
        fwd = inference.forward(model, obs)
        bwd = inference.backward(model, obs, fwd.scale_factors)
        first = float(np.dot(model.pi * model.emit[:, obs[0]], bwd.scaled_beta[0]))
        recon = np.log(first) + float(np.log(fwd.scale_factors[1:]).sum())
        recon_dev = max(recon_dev, abs(recon - fwd.log_likelihood))

    chmm_lik_dev = chmm_gamma_dev = 0.0
    for _ in range(count):
        L = int(rng.integers(1, 4))
        sizes = [int(rng.integers(1, 4)) for _ in range(L)]
        symbols = [int(rng.integers(1, 4)) for _ in range(L)]
        model = random_chmm(sizes, symbols, rng)
        T = int(rng.integers(1, 6))
        obs = np.stack([rng.integers(0, symbols[l], size=T) for l in range(L)], axis=1)
        direct = chmm_mod.chmm_likelihood(model, obs)
        flat = flatten_chmm(model)
        flat_obs = flatten_obs(model, obs)
        chmm_lik_dev = max(chmm_lik_dev, abs(direct - inference.log_likelihood(flat, flat_obs)))
        joint_gamma = chmm_mod.chmm_smooth(model, obs).gamma
        flat_gamma = inference.smooth(flat, flat_obs).gamma
        chmm_gamma_dev = max(chmm_gamma_dev, float(np.abs(joint_gamma - flat_gamma).max()))

    return [
        ("hmm likelihood vs enumeration", lik_dev, 1e-12),
        ("hmm gamma vs enumeration", gamma_dev, 1e-12),
        ("hmm xi vs enumeration", xi_dev, 1e-12),
        ("viterbi path vs enumeration", path_dev, 0.0),
        ("viterbi score vs enumeration (relative)", score_dev, 1e-12),
        ("backward likelihood reconstruction", recon_dev, 1e-10),
        ("chmm log-likelihood vs flattened", chmm_lik_dev, 1e-12),
        ("chmm joint gamma vs flattened", chmm_gamma_dev, 1e-12),
    ]


def _build_parser():
    parser = _Parser(prog="dbnkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, model=True, obs=False):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if model:
            p.add_argument("--model", required=True, help="model file (JSON)")
        if obs:
            p.add_argument("--obs", required=True, help="observation file or inline sequence")
        return p

    add("validate", _cmd_validate, "check a model file; exit 0 iff valid")

    p = add("sample", _cmd_sample, "draw observation sequences from a model")
    p.add_argument("--length", type=int, required=True, help="steps per sequence")
    p.add_argument("--seed", type=int, default=0, help="base seed; sequence i uses seed+i")
    p.add_argument("--count", type=int, default=1, help="number of sequences")
    p.add_argument("--out", help="observation file to write (default stdout)")
    p.add_argument("--states-out", help="also write the sampled state paths here")

    add("likelihood", _cmd_likelihood, "log-likelihood of each sequence", obs=True)

    p = add("filter", _cmd_filter, "filtered state marginals, one row per step", obs=True)
    p.add_argument("--particles", type=int, help="use a particle filter with this many particles")
    p.add_argument("--seed", type=int, default=0, help="particle filter seed")

    add("smooth", _cmd_smooth, "smoothed state marginals, one row per step", obs=True)

    p = add("predict", _cmd_predict, "distribution of the next state (or symbol)", obs=True)
    p.add_argument("--horizon", type=int, default=1, help="steps past the end of the sequence")
    p.add_argument("--observation", action="store_true", help="predict the next symbol instead")

    p = add("decode", _cmd_decode, "most probable state path", obs=True)
    p.add_argument("--score", action="store_true", help="also print the log joint score")

    for name, func in (("train", _cmd_train), ("train-chmm", _cmd_train_chmm)):
        p = add(name, func, f"EM training ({name}); prints the log-likelihood trace", obs=True)
        p.add_argument("--out", required=True, help="trained model file to write")
        p.add_argument("--max-iters", type=int, default=200)
        p.add_argument("--tol", type=float, default=1e-6)
        p.add_argument("--pseudocount", type=float, default=0.0)

    p = sub.add_parser("oracle-check", help="equivalence suite vs brute-force enumeration")
    p.set_defaults(func=_cmd_oracle_check)
    p.add_argument("--count", type=int, default=100, help="instances per check")
    p.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return USAGE_EXIT
    except DbnError as err:
        print(f"error: {err}", file=sys.stderr)
        return DATA_EXIT
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
