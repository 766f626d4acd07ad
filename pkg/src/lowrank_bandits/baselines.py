"""Comparison algorithms: the independent per-task baseline and the
squared-covariance estimator variant of the three-stage algorithm.

The squared-covariance variant reuses the exact Stage-2/Stage-3 code and
budgets of :func:`lowrank_bandits.mtrl.run_mtrl`; only the Stage-1 subspace
estimator is swapped.  Running both on the same seed therefore attributes
any regret difference to the estimator alone.
"""

from __future__ import annotations

import math

import numpy as np

from .env import (
    BanditInstance,
    RegretLedger,
    instant_regret,
    instant_regret_many,
)
from .errors import ConfigError
from .linalg import argmax_unit_ball
from .mtrl import (
    MtrlConfig,
    MtrlDiagnostics,
    collect_stage1_samples,
    _oracle_theta_matrix,
    _run_three_stage,
    moment_estimate_theta,
)

BASELINE_KINDS = ("independent_etc", "e2tc")


def e2tc_squared_estimator(
    actions: np.ndarray, rewards: np.ndarray, dim: int, rep_dim: int
) -> np.ndarray:
    """Subspace estimate from the squared-reward weighted covariance matrix.

    Pools every task's samples into the single ``(dim, dim)`` matrix
    ``(1 / (n * num_tasks)) * sum_{t,m} r_{t,m}^2 a_{t,m} a_{t,m}^T`` and
    returns its top ``rep_dim`` eigenvectors.  Squaring the rewards makes
    the matrix insensitive to reward sign but inflates its variance, which
    is exactly what the rectangular estimator avoids.
    """
    actions = np.asarray(actions, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    if actions.ndim != 3 or actions.shape[2] != dim:
        raise ValueError(
            f"actions must have shape (num_tasks, n, {dim}), got {actions.shape}"
        )
    if rewards.shape != actions.shape[:2]:
        raise ValueError(
            f"rewards shape {rewards.shape} does not match actions {actions.shape[:2]}"
        )
    if actions.shape[1] == 0:
        raise ValueError("need at least one sample per task")
    if not 1 <= rep_dim <= dim:
        raise ValueError(f"rep_dim must be in [1, {dim}], got {rep_dim}")
    weighted = np.einsum("mtd,mte,mt->de", actions, actions, rewards**2)
    weighted /= actions.shape[0] * actions.shape[1]
    weighted = (weighted + weighted.T) / 2  # symmetrize roundoff
    _, vecs = np.linalg.eigh(weighted)  # eigenvalues ascending
    return np.ascontiguousarray(vecs[:, ::-1][:, :rep_dim])


def _squared_subspace(
    actions: np.ndarray, rewards: np.ndarray, rep_dim: int
) -> tuple[None, np.ndarray]:
    dim = actions.shape[2]
    return None, e2tc_squared_estimator(actions, rewards, dim, rep_dim)


def run_e2tc(
    instance: BanditInstance,
    config: MtrlConfig | None = None,
    rng: np.random.Generator | None = None,
    trace_stride: int = 0,
) -> tuple[RegretLedger, MtrlDiagnostics]:
    """Three-stage run with the squared-covariance Stage-1 estimator."""
    config = config or MtrlConfig()
    if config.noiseless_oracle:
        raise ConfigError(
            "noiseless_oracle: applies to the rectangular estimator, not e2tc"
        )
    rng = rng if rng is not None else np.random.default_rng(0)
    return _run_three_stage(instance, config, rng, trace_stride, _squared_subspace)


def independent_exploration_budget(dim: int, horizon: int) -> int:
    """Per-task exploration length: ``min(ceil(dim * sqrt(horizon)), horizon // 2)``.

    The single-task explore-then-commit rate, clamped so at least half the
    horizon remains for the commit phase.
    """
    return min(math.ceil(dim * math.sqrt(horizon)), horizon // 2)


def run_independent_etc(
    instance: BanditInstance,
    rng: np.random.Generator | None = None,
    noiseless_oracle: bool = False,
    trace_stride: int = 0,
) -> RegretLedger:
    """Explore-then-commit on every task independently; no shared structure.

    Each task explores with sphere-uniform actions, estimates its
    coefficient by the moment estimator (or exact least squares in the
    noiseless oracle mode), then commits to the greedy unit-ball action.
    Issues exactly ``num_tasks * horizon`` pulls.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    if noiseless_oracle and instance.noise_std != 0:
        raise ConfigError("noiseless_oracle: requires noise_std == 0")
    num_tasks, dim, horizon = instance.num_tasks, instance.dim, instance.horizon
    explore = independent_exploration_budget(dim, horizon)
    ledger = RegretLedger(num_tasks, trace_stride)

    if explore == 0:  # horizon 1: nothing to learn from, commit blind
        theta_hats = np.zeros((dim, num_tasks))
    else:
        actions, rewards = collect_stage1_samples(instance, explore, rng, ledger)
        if noiseless_oracle:
            theta_hats = _oracle_theta_matrix(actions, rewards)
        else:
            theta_hats = np.column_stack(
                [
                    moment_estimate_theta(actions[task], rewards[task], dim)
                    for task in range(num_tasks)
                ]
            )

    remaining = horizon - explore
    if remaining > 0:
        per_task = np.empty(num_tasks)
        for task in range(num_tasks):
            action = argmax_unit_ball(theta_hats[:, task])
            per_task[task] = instant_regret(instance, task, action)
        ledger.record_interleaved(
            np.broadcast_to(per_task[:, None], (num_tasks, remaining))
        )
    return ledger
