"""Flow solvers: shortest paths, induced human equilibrium, system optimum.

Both solvers are conditional-gradient methods over the enumerated path
polytope. The search direction is an all-or-nothing assignment to current
shortest paths and the step size comes from an exact closed-form line search
(every objective here is quadratic along a segment). Each iteration is
followed by a pairwise vertex-exchange sweep, moving mass from the worst
used path of each O/D pair to its best path, which removes the sublinear
tail of plain conditional gradient and lets tight gap tolerances be reached
on small networks.

The human equilibrium minimizes the convex potential
``sum_l [ h_l t_l^2 / 2 + (a_l s_l + b_l) t_l ]`` whose gradient is exactly
the link latency under a fixed leader flow, so the conditional-gradient gap
coincides with the Wardrop relative gap. The system optimum is nonconvex in
the joint class flows whenever a_l != h_l, but strictly convex in each class
separately; it is solved by block-coordinate descent over the two classes
with multistart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DimensionMismatch, NegativeFlow
from .model import ClassFlow, GameInstance, ODPair, Path, social_cost_links

_COST_FLOOR = 1e-30
_USED_EPS = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets shared by the flow solvers."""

    relative_gap_tol: float = 1e-8
    max_iterations: int = 50_000
    multistart_count: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.relative_gap_tol > 0:
            raise ValueError(f"relative_gap_tol must be > 0, got {self.relative_gap_tol}")
        if self.max_iterations < 1 or self.multistart_count < 1:
            raise ValueError("iteration and multistart counts must be >= 1")


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    """Solver output: flow, objective value, certificate and iteration trace.

    ``potential_or_cost`` is the final potential (human equilibrium) or the
    social cost (system optimum). ``trace`` records the objective once per
    outer iteration and is nonincreasing by construction.
    """

    flow: ClassFlow
    potential_or_cost: float
    relative_gap: float
    iterations: int
    converged: bool
    trace: tuple[float, ...] = ()


def _latency_vector(instance: GameInstance, link_latencies) -> np.ndarray:
    if isinstance(link_latencies, Mapping):
        lat = np.array([link_latencies[l.id] for l in instance.links], dtype=float)
    else:
        lat = np.asarray(link_latencies, dtype=float)
    if lat.shape != (instance.n_links,):
        raise DimensionMismatch(f"expected {instance.n_links} link latencies")
    return lat


def shortest_paths(
    instance: GameInstance, link_latencies
) -> dict[ODPair, tuple[Path, float]]:
    """Minimum-latency path per O/D pair at the given link latencies.

    Ties are broken by path-set order, so results are reproducible.
    """
    lat = _latency_vector(instance, link_latencies)
    path_lat = instance.incidence.T @ lat
    out: dict[ODPair, tuple[Path, float]] = {}
    for w, (start, end) in enumerate(instance.paths.od_slices):
        j = start + int(np.argmin(path_lat[start:end]))
        out[instance.od_pairs[w]] = (instance.paths.all_paths[j], float(path_lat[j]))
    return out


def _all_or_nothing(
    instance: GameInstance, path_costs: np.ndarray, demands: np.ndarray
) -> np.ndarray:
    y = np.zeros(instance.n_paths)
    for w, (start, end) in enumerate(instance.paths.od_slices):
        if demands[w] <= 0.0:
            continue
        j = start + int(np.argmin(path_costs[start:end]))
        y[j] = demands[w]
    return y


@dataclass(frozen=True, eq=False)
class _BlockSolution:
    x: np.ndarray
    gap: float
    iterations: int
    converged: bool
    trace: tuple[float, ...]
    objective: float


def _solve_quadratic_block(
    instance: GameInstance,
    demands: np.ndarray,
    quad: np.ndarray,
    lin: np.ndarray,
    x0: np.ndarray,
    tol: float,
    max_iterations: int,
) -> _BlockSolution:
    """Minimize sum_l [quad_l x_l^2 / 2 + lin_l x_l] over the path polytope.

    quad must be elementwise positive (strict convexity in link flows); the
    gradient quad*x + lin is then nonnegative whenever lin >= 0, keeping the
    shortest-path subproblems well posed.
    """
    inc = instance.incidence
    slices = instance.paths.od_slices
    x = np.array(x0, dtype=float)
    best_x, best_gap = x.copy(), np.inf
    trace: list[float] = []
    iterations = 0
    converged = False

    def objective(x_link: np.ndarray) -> float:
        return float(0.5 * np.dot(quad, x_link * x_link) + np.dot(lin, x_link))

    while True:
        x_link = inc @ x
        g = quad * x_link + lin
        path_g = inc.T @ g
        total = float(np.dot(g, x_link))
        aon_cost = 0.0
        y = np.zeros_like(x)
        for w, (start, end) in enumerate(slices):
            if demands[w] <= 0.0:
                continue
            j = start + int(np.argmin(path_g[start:end]))
            y[j] = demands[w]
            aon_cost += demands[w] * path_g[j]
        gap = 0.0 if total <= _COST_FLOOR else max(0.0, (total - aon_cost) / total)
        trace.append(objective(x_link))
        if gap < best_gap:
            best_gap, best_x = gap, x.copy()
        if gap <= tol:
            converged = True
            break
        if iterations >= max_iterations:
            break
        iterations += 1

        # conditional-gradient step with exact line search
        d = y - x
        d_link = inc @ d
        denom = float(np.dot(quad, d_link * d_link))
        num = float(np.dot(g, d_link))
        if denom > 0.0:
            eta = min(1.0, max(0.0, -num / denom))
        else:
            eta = 1.0 if num < 0.0 else 0.0
        if eta > 0.0:
            x += eta * d
            x_link = inc @ x

        # pairwise exchange sweep: worst used path -> best path, per O/D pair
        g = quad * x_link + lin
        for w, (start, end) in enumerate(slices):
            if demands[w] <= 0.0 or end - start < 2:
                continue
            seg = x[start:end]
            used = np.nonzero(seg > _USED_EPS * max(demands[w], 1.0))[0]
            if used.size == 0:
                continue
            path_g_w = inc[:, start:end].T @ g
            jw = start + int(used[np.argmax(path_g_w[used])])
            jb = start + int(np.argmin(path_g_w))
            if jw == jb:
                continue
            col = inc[:, jb] - inc[:, jw]
            curv = float(np.dot(quad, col * col))
            drop = float(path_g_w[jw - start] - path_g_w[jb - start])
            if curv <= 0.0 or drop <= 0.0:
                continue
            delta = min(drop / curv, float(x[jw]))
            x[jb] += delta
            x[jw] = max(0.0, x[jw] - delta)
            x_link = x_link + delta * col
            g = quad * x_link + lin

    return _BlockSolution(
        x=best_x if not converged else x,
        gap=best_gap if not converged else gap,
        iterations=iterations,
        converged=converged,
        trace=tuple(trace),
        objective=objective(inc @ (best_x if not converged else x)),
    )


def follower_equilibrium(
    instance: GameInstance,
    s: np.ndarray,
    config: SolverConfig = SolverConfig(),
    initial: np.ndarray | None = None,
) -> EquilibriumResult:
    """Wardrop equilibrium of the human class under a fixed leader link flow.

    Minimizes the potential sum_l [h_l t_l^2/2 + (a_l s_l + b_l) t_l] over
    the human feasibility polytope. Link flows at the optimum are unique
    (h_l > 0); the returned path decomposition is the solver's incumbent.
    Never raises on non-convergence: the result carries the best iterate
    with ``converged=False``.
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (instance.n_links,):
        raise DimensionMismatch(f"leader link flows must have shape ({instance.n_links},)")
    if s.min(initial=0.0) < 0.0:
        raise NegativeFlow(f"negative leader link flow: {s.min()}")
    demands = instance.human_demands
    lin = instance.a * s + instance.b
    if initial is None:
        x0 = _all_or_nothing(instance, instance.incidence.T @ lin, demands)
    else:
        x0 = np.asarray(initial, dtype=float)
        if x0.shape != (instance.n_paths,):
            raise DimensionMismatch(f"initial path flows must have shape ({instance.n_paths},)")
    sol = _solve_quadratic_block(
        instance, demands, instance.h, lin, x0, config.relative_gap_tol, config.max_iterations
    )
    flow = ClassFlow.from_path_flows(instance, np.zeros(instance.n_paths), sol.x)
    return EquilibriumResult(
        flow=flow,
        potential_or_cost=sol.objective,
        relative_gap=sol.gap,
        iterations=sol.iterations,
        converged=sol.converged,
        trace=sol.trace,
    )


def wardrop_gap(instance: GameInstance, s: np.ndarray, t) -> float:
    """Relative Wardrop gap of a human flow under a fixed leader flow.

    Zero iff every used path of every O/D pair has minimum latency. Defined
    as 0 when the human demand (hence total cost) vanishes.
    """
    s = np.asarray(s, dtype=float)
    if isinstance(t, ClassFlow):
        t_path = t.path_flows_h
    else:
        t_path = np.asarray(t, dtype=float)
    if s.shape != (instance.n_links,) or t_path.shape != (instance.n_paths,):
        raise DimensionMismatch("leader link flows / human path flows have wrong shape")
    t_link = instance.incidence @ t_path
    lat = instance.link_latencies(s, t_link)
    total = float(np.dot(lat, t_link))
    if total <= _COST_FLOOR:
        return 0.0
    path_lat = instance.incidence.T @ lat
    best = 0.0
    for w, (start, end) in enumerate(instance.paths.od_slices):
        demand = instance.human_demands[w]
        if demand <= 0.0:
            continue
        best += demand * float(np.min(path_lat[start:end]))
    return max(0.0, (total - best) / total)


def _multistart_points(
    instance: GameInstance, config: SolverConfig
) -> list[tuple[np.ndarray, np.ndarray]]:
    auto_d = instance.auto_demands
    human_d = instance.human_demands
    free_flow = instance.incidence.T @ instance.b
    starts = [
        (_all_or_nothing(instance, free_flow, auto_d), _all_or_nothing(instance, free_flow, human_d)),
    ]
    uniform_a = np.zeros(instance.n_paths)
    uniform_h = np.zeros(instance.n_paths)
    for w, (start, end) in enumerate(instance.paths.od_slices):
        k = end - start
        uniform_a[start:end] = auto_d[w] / k
        uniform_h[start:end] = human_d[w] / k
    starts.append((uniform_a, uniform_h))
    rng = np.random.default_rng(config.seed)
    while len(starts) < config.multistart_count:
        fa = np.zeros(instance.n_paths)
        fh = np.zeros(instance.n_paths)
        for w, (start, end) in enumerate(instance.paths.od_slices):
            fa[start + int(rng.integers(end - start))] = auto_d[w]
            fh[start + int(rng.integers(end - start))] = human_d[w]
        starts.append((fa, fh))
    return starts[: config.multistart_count]


def _block_gap(
    instance: GameInstance, demands: np.ndarray, grad: np.ndarray, x_link: np.ndarray
) -> float:
    total = float(np.dot(grad, x_link))
    if total <= _COST_FLOOR:
        return 0.0
    path_g = instance.incidence.T @ grad
    best = 0.0
    for w, (start, end) in enumerate(instance.paths.od_slices):
        if demands[w] <= 0.0:
            continue
        best += demands[w] * float(np.min(path_g[start:end]))
    return max(0.0, (total - best) / total)


def system_optimal(
    instance: GameInstance, config: SolverConfig = SolverConfig()
) -> EquilibriumResult:
    """Two-class flow approximately minimizing the social cost.

    Alternates conditional-gradient solves of the two per-class blocks
    (each strictly convex; class-a block gradient 2 a fa + (a+h) fh + b and
    symmetrically for class h) from several starting points: per-class
    all-or-nothing on free-flow latencies, the uniform path split, and
    seeded random polytope vertices. Returns the best local optimum found;
    ``relative_gap`` is the larger of the two block gaps at that point, so
    convergence certifies block-wise optimality only.
    """
    a, h, b = instance.a, instance.h, instance.b
    ah = a + h
    auto_d = instance.auto_demands
    human_d = instance.human_demands
    inc = instance.incidence
    tol = config.relative_gap_tol

    best: tuple[float, np.ndarray, np.ndarray, float, bool, tuple[float, ...]] | None = None
    total_iterations = 0
    for fa0, fh0 in _multistart_points(instance, config):
        fa, fh = fa0.copy(), fh0.copy()
        budget = config.max_iterations
        trace: list[float] = []
        converged = False
        gap = np.inf
        while budget > 0:
            fh_link = inc @ fh
            sol_a = _solve_quadratic_block(
                instance, auto_d, 2.0 * a, ah * fh_link + b, fa, tol, min(budget, 1000)
            )
            fa = sol_a.x
            budget -= max(sol_a.iterations, 1)
            fa_link = inc @ fa
            sol_h = _solve_quadratic_block(
                instance, human_d, 2.0 * h, ah * fa_link + b, fh, tol, min(budget, 1000)
            )
            fh = sol_h.x
            budget -= max(sol_h.iterations, 1)
            fa_link, fh_link = inc @ fa, inc @ fh
            trace.append(social_cost_links(instance, fa_link, fh_link))
            gap_a = _block_gap(instance, auto_d, 2.0 * a * fa_link + ah * fh_link + b, fa_link)
            gap_h = _block_gap(instance, human_d, 2.0 * h * fh_link + ah * fa_link + b, fh_link)
            gap = max(gap_a, gap_h)
            if gap <= tol:
                converged = True
                break
        total_iterations += config.max_iterations - budget
        cost = trace[-1] if trace else social_cost_links(instance, inc @ fa, inc @ fh)
        if best is None or cost < best[0] - 1e-15:
            best = (cost, fa, fh, gap, converged, tuple(trace))

    cost, fa, fh, gap, converged, trace = best
    flow = ClassFlow.from_path_flows(instance, fa, fh)
    return EquilibriumResult(
        flow=flow,
        potential_or_cost=cost,
        relative_gap=gap,
        iterations=total_iterations,
        converged=converged,
        trace=trace,
    )
