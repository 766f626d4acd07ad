"""Lifelong linear bandit learner: sequential tasks, growing shared basis.

Tasks arrive one at a time.  For each task the learner first explores the
columns of its current orthonormal basis and reconstructs the task
coefficient inside that span.  If the reconstruction's norm falls at or
below ``1 - epsilon`` (every true coefficient has unit norm), a direction
relevant to this task is missing: the learner re-estimates the coefficient
coordinate-wise over the standard basis, projects the estimate onto the
orthogonal complement of the current span, and appends the normalized
remainder as a new basis column.

Two modes:

* ``pure_exploration`` — stop each task after estimation; the goal is
  ``||theta_hat - theta|| <= epsilon`` for every task with probability
  ``1 - delta``, using as few samples as possible.  Budgets follow the
  high-probability formulas ``n1 = ceil(4 * width * L / eps^2)`` per
  column and ``n2 = ceil(16 * dim * L / eps^2)`` per coordinate, with
  ``L`` the confidence log factor.
* ``regret`` — after estimation, commit to the greedy unit-ball action for
  the rest of the per-task horizon.  ``epsilon`` is set to
  ``((dim^2 k + k^2 M) / (M T))**0.25``, which balances exploration cost
  against commit error.  The budget constants are reduced to
  ``n1 = ceil(4 * width / eps^2)`` and ``n2 = ceil(dim / eps^2)``:
  the log factors belong to the high-probability analysis and, kept
  literal, the per-coordinate budget alone would exceed moderate horizons
  (e.g. ~5e5 pulls against T=1e4).  Any fixed constant preserves the
  regret rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import (
    BanditInstance,
    RegretLedger,
    instant_regret,
    pull_block_mean,
)
from .errors import ConfigError, HorizonTooShortError
from .linalg import (
    argmax_unit_ball,
    empty_basis,
    project_orthogonal_complement,
    require_orthonormal,
)

MODES = ("pure_exploration", "regret")
# Confidence log factor: "union" scales the argument by dim * num_tasks so the
# per-coordinate deviation bounds survive a union bound over coordinates and
# tasks; "plain" uses the bare 2/delta.
LOG_ARGS = ("union", "plain")

EXTENSION_FLOOR_FRACTION = 0.25  # extend only when ||residual|| >= epsilon / 4
FULL_BASIS_RESIDUAL_ATOL = 1e-6


@dataclass(frozen=True)
class LllConfig:
    """Lifelong-learner configuration.

    ``epsilon`` is the target estimation accuracy and is required in
    pure-exploration mode; in regret mode it is derived from the instance
    and horizon (see module docstring), and the field is ignored.
    """

    epsilon: float | None = None
    delta: float = 0.05
    mode: str = "pure_exploration"
    log_arg: str = "union"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}, got {self.mode!r}")
        if self.log_arg not in LOG_ARGS:
            raise ConfigError(
                f"log_arg: must be one of {LOG_ARGS}, got {self.log_arg!r}"
            )
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta: must be in (0, 1), got {self.delta}")
        if self.mode == "pure_exploration":
            if self.epsilon is None or not 0 < self.epsilon < 1:
                raise ConfigError(
                    f"epsilon: must be in (0, 1) in pure_exploration mode, "
                    f"got {self.epsilon}"
                )


def log_factor(delta: float, dim: int, num_tasks: int, log_arg: str = "union") -> float:
    """Confidence log factor L: log(2 d M / delta) or log(2 / delta)."""
    if log_arg == "union":
        return math.log(2 * dim * num_tasks / delta)
    if log_arg == "plain":
        return math.log(2 / delta)
    raise ConfigError(f"log_arg: must be one of {LOG_ARGS}, got {log_arg!r}")


def sample_budget_stage1(
    width: int,
    epsilon: float,
    delta: float,
    dim: int,
    num_tasks: int,
    log_arg: str = "union",
) -> int:
    """Per-column budget for exploring the current basis: ceil(4 width L / eps^2).

    Zero for the empty basis; the first task skips straight to the norm test.
    """
    if width < 0:
        raise ValueError(f"width must be >= 0, got {width}")
    if width == 0:
        return 0
    lf = log_factor(delta, dim, num_tasks, log_arg)
    return math.ceil(4 * width * lf / epsilon**2)


def sample_budget_stage2(
    epsilon: float, delta: float, dim: int, num_tasks: int, log_arg: str = "union"
) -> int:
    """Per-coordinate budget for the full re-estimation: ceil(16 dim L / eps^2)."""
    lf = log_factor(delta, dim, num_tasks, log_arg)
    return math.ceil(16 * dim * lf / epsilon**2)


def regret_mode_epsilon(dim: int, rep_dim: int, num_tasks: int, horizon: int) -> float:
    """Accuracy target balancing exploration cost against commit-phase error."""
    return float(
        ((dim**2 * rep_dim + rep_dim**2 * num_tasks) / (num_tasks * horizon)) ** 0.25
    )


def _regret_mode_budgets(width: int, dim: int, epsilon: float) -> tuple[int, int]:
    """Rate-preserving budgets with the confidence logs dropped (see module docstring)."""
    n1 = 0 if width == 0 else math.ceil(4 * width / epsilon**2)
    n2 = math.ceil(dim / epsilon**2)
    return n1, n2


def task_specific_exploration(
    instance: BanditInstance,
    task: int,
    basis: np.ndarray,
    n1_per_column: int,
    rng: np.random.Generator,
    ledger: RegretLedger,
) -> tuple[np.ndarray, np.ndarray]:
    """Play each basis column for a block; reconstruct the coefficient in-span.

    Returns ``(theta_tilde, w_tilde)`` where ``w_tilde[j]`` is the mean
    reward of column ``j``'s block and ``theta_tilde = basis @ w_tilde``.
    Records ``width * n1_per_column`` regret entries.  With an empty basis
    the reconstruction is the zero vector and nothing is pulled.
    """
    basis = require_orthonormal(basis)
    width = basis.shape[1]
    w_tilde = np.zeros(width)
    for j in range(width):
        column = basis[:, j]
        w_tilde[j] = pull_block_mean(instance, task, column, n1_per_column, rng)
        ledger.record_block(
            task, instant_regret(instance, task, column), n1_per_column
        )
    return basis @ w_tilde, w_tilde


def needs_reestimation(theta_tilde: np.ndarray, epsilon: float) -> bool:
    """True when ``||theta_tilde|| <= 1 - epsilon`` (boundary included).

    A short reconstruction means a direction relevant to this task is
    missing from the current span.
    """
    return float(np.linalg.norm(theta_tilde)) <= 1.0 - epsilon


def reestimate_theta_coordinatewise(
    instance: BanditInstance,
    task: int,
    n2_per_coordinate: int,
    rng: np.random.Generator,
    ledger: RegretLedger,
) -> np.ndarray:
    """Estimate every coordinate by playing each standard basis vector in a block.

    Records ``dim * n2_per_coordinate`` regret entries.
    """
    if n2_per_coordinate < 1:
        raise ValueError(f"n2_per_coordinate must be >= 1, got {n2_per_coordinate}")
    dim = instance.dim
    theta_hat = np.empty(dim)
    coord = np.zeros(dim)
    for j in range(dim):
        coord[:] = 0.0
        coord[j] = 1.0
        theta_hat[j] = pull_block_mean(instance, task, coord, n2_per_coordinate, rng)
        ledger.record_block(
            task, instant_regret(instance, task, coord), n2_per_coordinate
        )
    return theta_hat


def extend_basis(
    basis: np.ndarray, theta_hat: np.ndarray, epsilon: float
) -> tuple[np.ndarray, bool]:
    """Append the normalized out-of-span component of ``theta_hat``.

    The component must have norm at least ``epsilon / 4`` — below that the
    estimate is explained by the current span up to noise and appending
    would admit a junk direction.  A full-width basis cannot be extended;
    its residual must already be numerically zero.
    """
    basis = require_orthonormal(basis)
    residual = project_orthogonal_complement(basis, theta_hat)
    norm = float(np.linalg.norm(residual))
    if basis.shape[1] == basis.shape[0]:
        assert norm < FULL_BASIS_RESIDUAL_ATOL, (
            f"full basis has residual {norm}; orthogonality is broken"
        )
        return basis, False
    if norm < epsilon * EXTENSION_FLOOR_FRACTION:
        return basis, False
    column = residual / norm
    # One re-orthogonalization pass keeps accumulated drift below tolerance.
    column = column - basis @ (basis.T @ column)
    column /= np.linalg.norm(column)
    return np.column_stack([basis, column]), True


@dataclass(eq=False)
class LllState:
    """Learner state threaded through the task sequence.

    ``extension_tasks`` lists the task that contributed each basis column,
    in order; its length always equals the basis width.  ``entered_stage2``
    also flags tasks whose re-estimation did not extend the basis (the
    residual floor declined the new direction), which still consumed
    stage-2 samples.
    """

    basis: np.ndarray
    theta_hats: np.ndarray  # (dim, num_tasks), filled as tasks complete
    extension_tasks: list[int] = field(default_factory=list)
    entered_stage2: np.ndarray | None = None  # (num_tasks,) bool
    width_after: np.ndarray | None = None  # (num_tasks,) int
    samples_used: np.ndarray | None = None  # (num_tasks,) int, exploration only
    per_task_regret: np.ndarray | None = None
    per_task_commit_regret: np.ndarray | None = None
    epsilon: float = 0.0

    @property
    def width(self) -> int:
        return self.basis.shape[1]


def run_lll(
    instance: BanditInstance,
    config: LllConfig | None = None,
    rng: np.random.Generator | None = None,
    trace_stride: int = 0,
) -> tuple[LllState, RegretLedger, int]:
    """Process all tasks sequentially; return state, ledger, and sample total.

    ``sample_total`` counts exploration pulls only (stage 1 and stage 2);
    regret-mode commit pulls are excluded.  In regret mode every task
    issues exactly ``horizon`` pulls, and a task whose exploration budget
    cannot fit inside the horizon raises ``HorizonTooShortError`` before
    the overrun rather than truncating.
    """
    config = config or LllConfig()
    config.validate()
    rng = rng if rng is not None else np.random.default_rng(0)
    dim, rep_dim = instance.dim, instance.rep_dim
    num_tasks, horizon = instance.num_tasks, instance.horizon

    regret_mode = config.mode == "regret"
    if regret_mode:
        epsilon = regret_mode_epsilon(dim, rep_dim, num_tasks, horizon)
    else:
        epsilon = float(config.epsilon)

    ledger = RegretLedger(num_tasks, trace_stride)
    state = LllState(
        basis=empty_basis(dim),
        theta_hats=np.zeros((dim, num_tasks)),
        entered_stage2=np.zeros(num_tasks, dtype=bool),
        width_after=np.zeros(num_tasks, dtype=int),
        samples_used=np.zeros(num_tasks, dtype=int),
        per_task_regret=np.zeros(num_tasks),
        per_task_commit_regret=np.zeros(num_tasks),
        epsilon=epsilon,
    )

    for task in range(num_tasks):
        width = state.width
        if regret_mode:
            n1, n2 = _regret_mode_budgets(width, dim, epsilon)
        else:
            n1 = sample_budget_stage1(
                width, epsilon, config.delta, dim, num_tasks, config.log_arg
            )
            n2 = sample_budget_stage2(
                epsilon, config.delta, dim, num_tasks, config.log_arg
            )
        regret_before = ledger.total
        used = width * n1
        if regret_mode and used > horizon:
            raise HorizonTooShortError(
                f"task {task}: stage-1 exploration needs {used} pulls, horizon is {horizon}"
            )
        theta_tilde, _ = task_specific_exploration(
            instance, task, state.basis, n1, rng, ledger
        )

        if needs_reestimation(theta_tilde, epsilon):
            if regret_mode and used + dim * n2 > horizon:
                raise HorizonTooShortError(
                    f"task {task}: exploration needs {used + dim * n2} pulls, "
                    f"horizon is {horizon}"
                )
            theta_hat = reestimate_theta_coordinatewise(instance, task, n2, rng, ledger)
            used += dim * n2
            state.entered_stage2[task] = True
            state.basis, extended = extend_basis(state.basis, theta_hat, epsilon)
            if extended:
                state.extension_tasks.append(task)
        else:
            theta_hat = theta_tilde

        state.theta_hats[:, task] = theta_hat
        state.samples_used[task] = used
        state.width_after[task] = state.width

        if regret_mode:
            action = argmax_unit_ball(theta_hat)
            gap = instant_regret(instance, task, action)
            commit_before = ledger.total
            ledger.record_block(task, gap, horizon - used)
            state.per_task_commit_regret[task] = ledger.total - commit_before
        state.per_task_regret[task] = ledger.total - regret_before

    return state, ledger, int(state.samples_used.sum())


def basis_growth_report(state: LllState, rep_dim: int, epsilon: float) -> dict:
    """Diagnostic comparing the final basis width against its expected scale.

    The reference scale is ``rep_dim * ceil(log(rep_dim / epsilon) + 1)``;
    the check allows a slack factor of 4.  Informational, not an assertion:
    unlucky noise can exceed it without invalidating a run.
    """
    reference = rep_dim * math.ceil(math.log(rep_dim / epsilon) + 1)
    threshold = 4 * reference
    return {
        "width_final": state.width,
        "reference": reference,
        "threshold": threshold,
        "within_bound": state.width <= threshold,
    }
