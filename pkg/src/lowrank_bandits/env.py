"""Synthetic bandit world: instance generation, reward oracle, regret ledger.

A bandit instance consists of an orthonormal ``(dim, rep_dim)`` basis, one
unit-norm weight vector per task, and the resulting task coefficient
matrix ``thetas = basis @ task_weights``.  Actions live in the unit ball;
a pull of action ``a`` on task ``m`` pays ``<a, theta_m> + noise``.

Regret is accounted as EXPECTED instantaneous regret ``1 - <a, theta_m>``
(the optimum over the unit ball is ``||theta_m|| = 1``), so regret curves
carry no reward-noise variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InfeasibleActionError
from .linalg import kth_singular_value, sample_unit_sphere

ACTION_NORM_ATOL = 1e-9
UNIT_THETA_ATOL = 1e-10
RANK_SIGMA_MIN = 1e-8
REGRET_SLACK = 1e-9  # tolerated roundoff outside [0, 2] before raising


@dataclass(frozen=True)
class InstanceSpec:
    """Parameters of a synthetic instance.

    ``rep_dim <= num_tasks`` is required so the rank-``rep_dim`` coefficient
    matrix built from sphere-uniform task weights is generic.
    """

    dim: int = 10
    rep_dim: int = 2
    num_tasks: int = 25
    horizon: int = 10_000
    noise_std: float = 1.0
    seed: int | None = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim: must be >= 1, got {self.dim}")
        if not 1 <= self.rep_dim <= self.dim:
            raise ConfigError(
                f"rep_dim: must be in [1, dim={self.dim}], got {self.rep_dim}"
            )
        if self.rep_dim > self.num_tasks:
            raise ConfigError(
                f"num_tasks: must be >= rep_dim={self.rep_dim}, got {self.num_tasks}"
            )
        if self.horizon < 1:
            raise ConfigError(f"horizon: must be >= 1, got {self.horizon}")
        if not self.noise_std >= 0:
            raise ConfigError(f"noise_std: must be >= 0, got {self.noise_std}")


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """Ground truth of a simulated world; immutable after generation."""

    basis: np.ndarray  # (dim, rep_dim), orthonormal columns
    task_weights: np.ndarray  # (rep_dim, num_tasks), unit-norm columns
    thetas: np.ndarray  # (dim, num_tasks) = basis @ task_weights
    horizon: int
    noise_std: float

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rep_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def num_tasks(self) -> int:
        return self.thetas.shape[1]

    def check_invariants(self) -> None:
        gram = self.basis.T @ self.basis
        if np.max(np.abs(gram - np.eye(self.rep_dim))) > 1e-8:
            raise AssertionError("basis columns are not orthonormal")
        norms = np.linalg.norm(self.thetas, axis=0)
        if np.max(np.abs(norms - 1.0)) > UNIT_THETA_ATOL:
            raise AssertionError("task coefficients are not unit norm")
        if kth_singular_value(self.thetas, self.rep_dim) <= RANK_SIGMA_MIN:
            raise AssertionError("coefficient matrix is rank deficient")


def generate_instance(
    spec: InstanceSpec, rng: np.random.Generator | None = None
) -> BanditInstance:
    """Draw a random instance: Haar-uniform basis, sphere-uniform task weights.

    The basis is the first ``rep_dim`` columns of the orthogonal factor of a
    square standard-Gaussian matrix, with the triangular factor's diagonal
    signs folded in (without the sign fix the factorization is not uniform
    over the orthogonal group).  Deterministic given ``spec.seed`` when no
    generator is passed.
    """
    spec.validate()
    if rng is None:
        if spec.seed is None:
            raise ConfigError("seed: required when no generator is passed")
        rng = np.random.default_rng(spec.seed)
    gauss = rng.standard_normal((spec.dim, spec.dim))
    q, r = np.linalg.qr(gauss)
    q = q * np.where(np.diag(r) >= 0, 1.0, -1.0)
    basis = np.ascontiguousarray(q[:, : spec.rep_dim])
    weights = np.column_stack(
        [sample_unit_sphere(spec.rep_dim, rng) for _ in range(spec.num_tasks)]
    )
    instance = BanditInstance(
        basis=basis,
        task_weights=weights,
        thetas=basis @ weights,
        horizon=spec.horizon,
        noise_std=float(spec.noise_std),
    )
    instance.check_invariants()
    return instance


def _check_task(instance: BanditInstance, task: int) -> None:
    if not 0 <= task < instance.num_tasks:
        raise ValueError(
            f"task index {task} out of range [0, {instance.num_tasks})"
        )


def _check_actions(actions: np.ndarray, dim: int) -> np.ndarray:
    actions = np.asarray(actions, dtype=float)
    if actions.shape[-1] != dim:
        raise ValueError(f"action dimension {actions.shape[-1]} != {dim}")
    norms = np.linalg.norm(actions, axis=-1)
    worst = float(np.max(norms, initial=0.0))
    if worst > 1.0 + ACTION_NORM_ATOL:
        raise InfeasibleActionError(f"action norm {worst} exceeds the unit ball")
    return actions


def pull(
    instance: BanditInstance, task: int, action: np.ndarray, rng: np.random.Generator
) -> float:
    """One noisy reward: ``<action, theta_task> + noise_std * g``."""
    _check_task(instance, task)
    action = _check_actions(np.asarray(action, dtype=float).ravel(), instance.dim)
    mean = float(action @ instance.thetas[:, task])
    return mean + instance.noise_std * float(rng.standard_normal())


def pull_many(
    instance: BanditInstance,
    task: int,
    actions: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Rewards for a batch of actions (rows) on one task."""
    _check_task(instance, task)
    actions = _check_actions(np.atleast_2d(np.asarray(actions, dtype=float)), instance.dim)
    means = actions @ instance.thetas[:, task]
    return means + instance.noise_std * rng.standard_normal(actions.shape[0])


def pull_block_mean(
    instance: BanditInstance,
    task: int,
    action: np.ndarray,
    count: int,
    rng: np.random.Generator,
) -> float:
    """Mean reward of ``count`` consecutive pulls of one fixed action.

    The sample mean of ``count`` i.i.d. Gaussian rewards is itself Gaussian
    with standard deviation ``noise_std / sqrt(count)``, so it is drawn in
    one shot; this is distributionally identical to averaging ``count``
    individual pulls and keeps large exploration blocks cheap.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    _check_task(instance, task)
    action = _check_actions(np.asarray(action, dtype=float).ravel(), instance.dim)
    mean = float(action @ instance.thetas[:, task])
    scale = instance.noise_std / np.sqrt(count)
    return mean + scale * float(rng.standard_normal())


def instant_regret(instance: BanditInstance, task: int, action: np.ndarray) -> float:
    """Expected instantaneous regret ``1 - <action, theta_task>``, in [0, 2].

    Noise-free by construction: the reward noise is zero-mean, so expected
    regret depends on the action alone.
    """
    _check_task(instance, task)
    action = _check_actions(np.asarray(action, dtype=float).ravel(), instance.dim)
    gap = 1.0 - float(action @ instance.thetas[:, task])
    return min(max(gap, 0.0), 2.0)


def instant_regret_many(
    instance: BanditInstance, task: int, actions: np.ndarray
) -> np.ndarray:
    """Vectorized ``instant_regret`` over rows of ``actions``."""
    _check_task(instance, task)
    actions = _check_actions(np.atleast_2d(np.asarray(actions, dtype=float)), instance.dim)
    gaps = 1.0 - actions @ instance.thetas[:, task]
    return np.clip(gaps, 0.0, 2.0)


class RegretLedger:
    """Per-pull expected-regret accounting for one simulation run.

    Tracks per-task sums, the global cumulative sum, the pull counter, and
    an optional thinned trace of ``(pull_index, cumulative_regret)`` pairs
    taken every ``trace_stride`` pulls (plus the final pull).
    ``trace_stride=0`` disables the trace; totals are still exact.

    Recording styles:

    * ``record_block`` — one task repeats one action ``count`` times
      (sequential protocols, commit phases).
    * ``record_array`` — one task's per-step regrets.
    * ``record_interleaved`` — a ``(num_tasks, steps)`` matrix accounted in
      step-major order, i.e. at each step all tasks pull once, matching the
      concurrent multi-task protocol.
    """

    def __init__(self, num_tasks: int, trace_stride: int = 10):
        if num_tasks < 1:
            raise ValueError(f"num_tasks must be >= 1, got {num_tasks}")
        if trace_stride < 0:
            raise ValueError(f"trace_stride must be >= 0, got {trace_stride}")
        self.num_tasks = int(num_tasks)
        self.trace_stride = int(trace_stride)
        self.per_task = np.zeros(num_tasks)
        self.total = 0.0
        self.num_pulls = 0
        self._trace_t: list[np.ndarray] = []
        self._trace_cum: list[np.ndarray] = []

    @staticmethod
    def _validated(values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.size:
            lo = float(values.min())
            hi = float(values.max())
            if lo < -REGRET_SLACK or hi > 2.0 + REGRET_SLACK:
                raise ValueError(f"regret outside [0, 2]: range [{lo}, {hi}]")
        return np.clip(values, 0.0, 2.0)

    def _checkpoints(self, count: int) -> np.ndarray:
        """Pull indices in (num_pulls, num_pulls + count] hitting the stride grid."""
        stride = self.trace_stride
        first = ((self.num_pulls // stride) + 1) * stride
        return np.arange(first, self.num_pulls + count + 1, stride)

    def record_block(self, task: int, value: float, count: int) -> None:
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        if count == 0:
            return
        if not 0 <= task < self.num_tasks:
            raise ValueError(f"task index {task} out of range")
        value = float(self._validated(np.array([value]))[0])
        if self.trace_stride:
            ts = self._checkpoints(count)
            self._trace_t.append(ts)
            self._trace_cum.append(self.total + (ts - self.num_pulls) * value)
        self.per_task[task] += value * count
        self.total += value * count
        self.num_pulls += count

    def _advance(self, flat: np.ndarray) -> None:
        if flat.size == 0:
            return
        cums = np.cumsum(flat)
        if self.trace_stride:
            ts = self._checkpoints(flat.size)
            self._trace_t.append(ts)
            self._trace_cum.append(self.total + cums[ts - self.num_pulls - 1])
        self.total += float(cums[-1])
        self.num_pulls += flat.size

    def record_array(self, task: int, values: np.ndarray) -> None:
        if not 0 <= task < self.num_tasks:
            raise ValueError(f"task index {task} out of range")
        values = self._validated(np.asarray(values, dtype=float).ravel())
        self.per_task[task] += values.sum()
        self._advance(values)

    def record_interleaved(self, regrets: np.ndarray) -> None:
        regrets = self._validated(np.asarray(regrets, dtype=float))
        if regrets.ndim != 2 or regrets.shape[0] != self.num_tasks:
            raise ValueError(
                f"expected shape ({self.num_tasks}, steps), got {regrets.shape}"
            )
        self.per_task += regrets.sum(axis=1)
        self._advance(regrets.T.ravel())  # step-major: all tasks pull at each step

    def trace(self) -> tuple[np.ndarray, np.ndarray]:
        """Thinned cumulative-regret trace; empty when the trace is disabled."""
        if self.trace_stride == 0 or self.num_pulls == 0:
            return np.zeros(0, dtype=int), np.zeros(0)
        ts = np.concatenate(self._trace_t) if self._trace_t else np.zeros(0, dtype=int)
        cums = np.concatenate(self._trace_cum) if self._trace_cum else np.zeros(0)
        if ts.size == 0 or ts[-1] != self.num_pulls:
            ts = np.append(ts, self.num_pulls)
            cums = np.append(cums, self.total)
        return ts.astype(int), cums
