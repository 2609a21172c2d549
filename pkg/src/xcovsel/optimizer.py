"""Population-based stochastic search over the (p_t, p_u, q_u) grid.

The search maximizes a noisy objective, the signed gap between the
exact-model and asymptotic selection probabilities at fixed n, over the
integer parameter space.  One run:

1. evaluate every initial grid point with one batch of mc_res trials;
2. each iteration, select the m candidates with the largest empirical
   means (ties to the earlier-discovered candidate), give each survivor
   one additional batch, then spawn perturbed copies of each survivor
   and evaluate each new point with one batch;
3. after t_final iterations, report every candidate sorted by final
   empirical mean.

Perturbed copies that land on an existing candidate are merged into it,
pooling batches.  Batch b of candidate theta always draws from the
stream derived as (seed, 1, p_t, p_u, q_u, b) and the perturbation moves
from (seed, 2), so a run is reproducible for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import kernels
from .rng import SeedLike, as_seed_sequence, derive
from .risk import METHOD_IDS, normalize_method

Theta = tuple[int, int, int]
DIRECTIONS = ("exact-minus-asymptotic", "asymptotic-minus-exact")


@dataclass(frozen=True)
class DiscrepancyObjective:
    """Signed exact-vs-asymptotic selection probability gap at fixed n.

    direction "asymptotic-minus-exact" scores how much the Gaussian
    approximation overstates the selection probability; the opposite
    direction scores understatement.  With paired=True (default) each
    trial evaluates both samplers on one shared signal draw, a common
    random numbers scheme that reduces the variance of the difference;
    paired=False estimates the two probabilities from independent
    streams.
    """

    n: int
    method: str = "thresholding"
    direction: str = "asymptotic-minus-exact"
    paired: bool = True
    ndof: int | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        object.__setattr__(self, "method", normalize_method(self.method))
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")


ObjectiveLike = Union[DiscrepancyObjective, Callable[[Theta, int, np.random.Generator], float]]


@dataclass(frozen=True)
class SearchConfig:
    """Search hyperparameters; defaults follow the survey configuration."""

    initial_grid: tuple[Theta, ...]
    m: int = 10
    mc_res: int = 5000
    t_final: int = 5
    perturbations_per_survivor: int = 10
    # Noise-dimension boxes start at 0 so the search can reach corners
    # where one side of the response block carries no noise at all.
    bounds: tuple[tuple[int, int], tuple[int, int], tuple[int, int]] = (
        (2, 6),
        (0, 46),
        (0, 46),
    )

    def __post_init__(self) -> None:
        if not self.initial_grid:
            raise ValueError("initial_grid must be nonempty")
        if not 1 <= self.m <= len(self.initial_grid):
            raise ValueError(f"m must be in [1, {len(self.initial_grid)}], got {self.m}")
        for name in ("mc_res", "t_final", "perturbations_per_survivor"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValueError(f"invalid bounds {self.bounds}")
        for theta in self.initial_grid:
            if not _within_bounds(theta, self.bounds):
                raise ValueError(f"grid point {theta} outside bounds {self.bounds}")


def _within_bounds(theta: Theta, bounds) -> bool:
    return all(lo <= v <= hi for v, (lo, hi) in zip(theta, bounds))


def default_search_config(mc_res: int = 5000) -> SearchConfig:
    """The coarse survey grid: p_t in 2..6, p_u and q_u in {1,6,...,46}."""
    grid = tuple(
        (p_t, p_u, q_u)
        for p_t in range(2, 7)
        for p_u in range(1, 47, 5)
        for q_u in range(1, 47, 5)
    )
    return SearchConfig(initial_grid=grid, mc_res=mc_res)


@dataclass
class Candidate:
    """A visited theta with its running batch-mean average."""

    theta: Theta
    sum_objective: float = 0.0
    batches: int = 0
    discovered: int = 0

    @property
    def mean(self) -> float:
        return self.sum_objective / self.batches


@dataclass(frozen=True)
class TraceRecord:
    """One evaluation event: iteration 0 is the initial grid pass."""

    iteration: int
    theta: Theta
    event: str  # initial | survivor-update | perturbed-new | perturbed-merge
    batches: int
    mean: float


@dataclass(frozen=True)
class SearchResult:
    candidates: list[Candidate]
    trace: list[TraceRecord]
    survivors: list[list[Theta]]

    @property
    def best(self) -> Candidate:
        return self.candidates[0]


def perturb(theta: Theta, bounds, rng: np.random.Generator) -> Theta:
    """Additive integer perturbation, clamped into the bounds box.

    The first coordinate moves by a uniform draw from {-1, 0, 1}, the
    other two by uniform draws from {-3, ..., 3}.
    """
    d1 = int(rng.integers(-1, 2))
    d2 = int(rng.integers(-3, 4))
    d3 = int(rng.integers(-3, 4))
    moved = (theta[0] + d1, theta[1] + d2, theta[2] + d3)
    return tuple(
        int(np.clip(v, lo, hi)) for v, (lo, hi) in zip(moved, bounds)
    )  # type: ignore[return-value]


def evaluate_objective_batch(
    obj: DiscrepancyObjective, theta: Theta, mc_res: int, rng: SeedLike
) -> float:
    """Mean signed loss difference over one batch of mc_res trials."""
    p_t, p_u, q_u = (int(v) for v in theta)
    if p_t < 1 or p_u < 0 or q_u < 0:
        raise ValueError(f"invalid theta {theta}: need p_t >= 1, p_u >= 0, q_u >= 0")
    if mc_res < 1:
        raise ValueError(f"mc_res must be >= 1, got {mc_res}")
    nu = obj.n - 1 if obj.ndof is None else int(obj.ndof)
    method_id = METHOD_IDS[obj.method]
    if obj.paired:
        gen = np.random.default_rng(as_seed_sequence(rng))
        loss_e, loss_a, used, _disc = kernels.paired_batch(
            gen, p_t, p_u, q_u, nu, method_id, mc_res
        )
        if used == 0:
            raise ValueError("every paired trial was discarded as degenerate")
        diff = (loss_e - loss_a) / used
    else:
        base = as_seed_sequence(rng)
        le, ue, _d1 = kernels.mc_batch(
            np.random.default_rng(derive(base, 0)),
            p_t, p_u, q_u, nu, kernels.SAMPLER_WISHART, method_id, mc_res,
        )
        la, ua, _d2 = kernels.mc_batch(
            np.random.default_rng(derive(base, 1)),
            p_t, p_u, q_u, nu, kernels.SAMPLER_ASYMPTOTIC, method_id, mc_res,
        )
        if ue == 0 or ua == 0:
            raise ValueError("every trial was discarded as degenerate")
        diff = le / ue - la / ua
    # On the probability scale P - P_asym = E[loss_asym] - E[loss_exact].
    if obj.direction == "asymptotic-minus-exact":
        return float(diff)
    return float(-diff)


def _batch_worker(args) -> float:
    obj, theta, mc_res, ss = args
    return evaluate_objective_batch(obj, theta, mc_res, ss)


class _Evaluator:
    """Runs (theta, batch_index) evaluations, optionally in parallel.

    Streams depend only on (seed, theta, batch index), so parallel and
    serial execution produce identical sums.
    """

    def __init__(self, obj: ObjectiveLike, config: SearchConfig, base, workers: int):
        self.obj = obj
        self.config = config
        self.base = base
        self.workers = workers
        self.parallel = workers > 1 and isinstance(obj, DiscrepancyObjective)

    def stream(self, theta: Theta, batch_index: int):
        return derive(self.base, 1, theta[0], theta[1], theta[2], batch_index)

    def run(self, jobs: list[tuple[Theta, int]]) -> list[float]:
        if isinstance(self.obj, DiscrepancyObjective):
            args = [(self.obj, th, self.config.mc_res, self.stream(th, b)) for th, b in jobs]
            if self.parallel and len(args) > 1:
                with ProcessPoolExecutor(max_workers=self.workers) as pool:
                    return list(pool.map(_batch_worker, args))
            return [_batch_worker(a) for a in args]
        return [
            float(self.obj(th, self.config.mc_res, np.random.default_rng(self.stream(th, b))))
            for th, b in jobs
        ]


def run_search(
    obj: ObjectiveLike,
    config: SearchConfig,
    rng: SeedLike,
    workers: int = 1,
) -> SearchResult:
    """Run the full search; see the module docstring for the loop.

    ``obj`` is normally a DiscrepancyObjective; any callable
    ``f(theta, mc_res, rng) -> float`` is accepted for testing against
    known objectives (callables are evaluated serially).  Returns every
    candidate sorted by final empirical mean (ties to the
    earlier-discovered), the full evaluation trace, and the survivor
    sets per iteration.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    base = as_seed_sequence(rng)
    ev = _Evaluator(obj, config, base, workers)
    pert_rng = np.random.default_rng(derive(base, 2))

    candidates: dict[Theta, Candidate] = {}
    trace: list[TraceRecord] = []
    survivors_log: list[list[Theta]] = []

    def record(iteration: int, cand: Candidate, event: str) -> None:
        trace.append(
            TraceRecord(
                iteration=iteration,
                theta=cand.theta,
                event=event,
                batches=cand.batches,
                mean=cand.mean,
            )
        )

    def apply_batches(iteration: int, jobs: list[tuple[Theta, int]], events: list[str]) -> None:
        for (theta, _b), value, event in zip(jobs, ev.run(jobs), events):
            cand = candidates[theta]
            cand.sum_objective += value
            cand.batches += 1
            record(iteration, cand, event)

    # Initial grid: one batch per point.
    for theta in config.initial_grid:
        theta = tuple(int(v) for v in theta)
        if theta not in candidates:
            candidates[theta] = Candidate(theta=theta, discovered=len(candidates))
    apply_batches(0, [(c.theta, 0) for c in candidates.values()], ["initial"] * len(candidates))

    def ranked() -> list[Candidate]:
        return sorted(candidates.values(), key=lambda c: (-c.mean, c.discovered))

    for t in range(1, config.t_final + 1):
        survivors = ranked()[: config.m]
        survivors_log.append([c.theta for c in survivors])
        apply_batches(
            t,
            [(c.theta, c.batches) for c in survivors],
            ["survivor-update"] * len(survivors),
        )
        # Spawn perturbed copies; draws happen serially so the move
        # stream is identical under any worker count.
        new_jobs: list[tuple[Theta, int]] = []
        new_events: list[str] = []
        pending: dict[Theta, int] = {}  # extra batches queued this round
        for cand in survivors:
            for _copy in range(config.perturbations_per_survivor):
                target = perturb(cand.theta, config.bounds, pert_rng)
                if target in candidates:
                    existing = candidates[target]
                    batch_index = existing.batches + pending.get(target, 0)
                    pending[target] = pending.get(target, 0) + 1
                    new_jobs.append((target, batch_index))
                    new_events.append("perturbed-merge")
                else:
                    candidates[target] = Candidate(theta=target, discovered=len(candidates))
                    pending[target] = 1
                    new_jobs.append((target, 0))
                    new_events.append("perturbed-new")
        apply_batches(t, new_jobs, new_events)

    return SearchResult(candidates=ranked(), trace=trace, survivors=survivors_log)
