"""
Equilibrium Agent
Numerical search for Nash and cooperative equilibria of the echelon game

Capabilities:
- Best-response dynamics (cyclic or simultaneous) for NE
- Armijo ascent on the group benefit J for CE, with drift guards
- Brute-force residual scans over P x P (the n = 2 NE oracle and the
  last-agent CE gradient)
- Seeded restart batches, optionally on a thread pool
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from echelon.config.settings import settings
from echelon.tools.benefit import (
    NEIGHBOR_HOPS,
    BenefitFunction,
    DerivativeDomainError,
    FormationState,
    ce_gradient,
    ne_stationarity_residual,
    neighbors,
    total_benefit,
)
from echelon.tools.search_1d import GridMaximum, grid_maximize, grid_points
from .base_agent import BaseAgent
from .condition_agent import benefit_scale
from .state_schema import (
    EquilibriumKind,
    IntervalSpec,
    RestartSummary,
    ScanResult,
    SearchResult,
)

logger = logging.getLogger(__name__)

# Half-width of the best-response window around the front neighbor, in units of b
BEST_RESPONSE_HALF_WIDTH = 50
# Search grid for best responses, in units of b
BEST_RESPONSE_GRID = 1e-2
# Minimum |x_ij| kept away from neighbors, in units of b
SEPARATION = 0.01
# CE ascent stops when two agents come this close, in units of b
COHESION_LIMIT = 0.02
# Revisit distance, as a fraction of the NE stopping tolerance, that counts as a cycle
CYCLE_FRACTION = 1e-2
# Cells per chunk in the 2-D scans
SCAN_CHUNK = 4_000_000


def _separate(X: np.ndarray, scale: float) -> np.ndarray:
    """Nudge agents that share an x-position with a neighbor by +0.01 b"""
    X = np.array(X, dtype=float)
    xs = np.concatenate(([0.0], X))
    for i in range(1, len(xs)):
        for j in neighbors(i, len(X)):
            if xs[i] == xs[j]:
                logger.warning(f"x_{i}{j} = 0 (derivative kink); moving agent {i} by +{SEPARATION} b")
                xs[i] += SEPARATION * scale
    return xs[1:]


def _classify(X: np.ndarray, interval: Optional[IntervalSpec]) -> Tuple[List[float], List[bool]]:
    gaps = np.diff(np.concatenate(([0.0], X)))
    in_P = [interval.contains(g) for g in gaps] if interval is not None else []
    return [float(g) for g in gaps], in_P


def _min_separation(X: np.ndarray) -> float:
    xs = np.concatenate(([0.0], X))
    return min(
        abs(xs[i] - xs[j])
        for i in range(len(xs)) for j in range(i + 1, min(len(xs), i + NEIGHBOR_HOPS + 1))
    )


# ==================== Nash equilibria ====================

def best_response(
    f: BenefitFunction,
    state: FormationState,
    i: int,
    window: Optional[Tuple[float, float]] = None,
    step: Optional[float] = None,
) -> GridMaximum:
    """
    argmax over x_i in the window of per_agent_benefit, other agents fixed.

    Args:
        window: absolute (lo, hi); defaults to x_front -+ 50 b around agent i-1
        step: search grid; defaults to 0.01 b (then golden-section refined)

    Returns:
        GridMaximum; on_boundary flags an argmax at the window edge
    """
    if not 1 <= i <= state.n:
        raise IndexError(f"follower index {i} outside 1..{state.n}")
    scale = benefit_scale(f, state.beta)
    xs, ys = state.xs(), state.ys()
    if window is None:
        half = BEST_RESPONSE_HALF_WIDTH * scale
        window = (xs[i - 1] - half, xs[i - 1] + half)
    step = step or BEST_RESPONSE_GRID * scale
    margin = max(SEPARATION * scale, step)

    js = neighbors(i, state.n)
    others, dy = xs[js], ys[i] - ys[js]

    def objective(candidates):
        return np.sum(f.value(candidates[:, None] - others, dy), axis=1)

    def admissible(candidates):
        return np.all(np.abs(candidates[:, None] - others) >= margin, axis=1)

    peak = grid_maximize(objective, window[0], window[1], step, mask=admissible)
    if peak.on_boundary:
        logger.warning(f"best response of agent {i} on window boundary at x = {peak.x:.6g}")
    return peak


def find_ne(
    f: BenefitFunction,
    n: int,
    beta: float,
    init,
    mode: str = 'cyclic',
    max_iters: int = 200,
    interval: Optional[IntervalSpec] = None,
    tol: float = 1e-6,
    residual_tol: float = 1e-6,
    step: Optional[float] = None,
    record_trajectory: bool = False,
) -> SearchResult:
    """
    Best-response iteration until the largest position change drops below tol.

    Converged requires both a fixed point and a stationarity residual
    (max-norm of ne_stationarity_residual) below residual_tol.
    A revisited state is reported as oscillation.
    """
    if mode not in ('cyclic', 'simultaneous'):
        raise ValueError(f"Unknown best-response mode: {mode}")
    X = np.asarray(init, dtype=float)
    if X.shape != (n,):
        raise ValueError(f"init must hold {n} positions")
    scale = benefit_scale(f, beta)
    X = _separate(X, scale)

    trajectory = [X.tolist()] if record_trajectory else None
    history = [X.copy()]
    diagnosis = 'max_iters reached'
    fixed_point = False
    boundary = False
    iterations = 0

    for iterations in range(1, max_iters + 1):
        previous = X.copy()
        frozen = FormationState(X=X, beta=beta)
        boundary = False
        for i in range(1, n + 1):
            state = frozen if mode == 'simultaneous' else FormationState(X=X, beta=beta)
            response = best_response(f, state, i, step=step)
            boundary = boundary or response.on_boundary
            X[i - 1] = response.x
        X = _separate(X, scale)

        if trajectory is not None:
            trajectory.append(X.tolist())

        if np.max(np.abs(X - previous)) < tol:
            fixed_point = True
            diagnosis = ''
            # the last sweep changed nothing, so it does not count
            iterations -= 1
            break

        # a cycle returns to a state at least two sweeps old
        older = np.asarray(history[:-1])
        if len(older) and np.min(np.max(np.abs(older - X), axis=1)) < CYCLE_FRACTION * tol:
            diagnosis = 'oscillation: best-response cycle detected'
            logger.warning(f"NE search: {diagnosis} after {iterations} iterations")
            break
        history.append(X.copy())

    state = FormationState(X=X, beta=beta)
    residual = float(np.max(np.abs(ne_stationarity_residual(state, f))))
    if fixed_point and residual > residual_tol:
        diagnosis = 'fixed point with nonzero stationarity residual'
    if boundary:
        diagnosis = '; '.join(filter(None, [diagnosis, 'best response on window boundary']))

    gaps, in_P = _classify(X, interval)
    return SearchResult(
        kind=EquilibriumKind.NE,
        converged=fixed_point and residual <= residual_tol,
        X_final=X.tolist(),
        residual=residual,
        neighbor_gaps=gaps,
        in_P=in_P,
        iterations=iterations,
        diagnosis=diagnosis,
        objective=total_benefit(state, f),
        trajectory=trajectory,
    )


def _scan_grid(
    components: Callable[[np.ndarray, np.ndarray], np.ndarray],
    grid: np.ndarray,
) -> Tuple[float, int, int]:
    """Row-chunked minimum of components(u_index_block, v_index) over grid x grid"""
    cols = np.arange(len(grid))
    rows_per_chunk = max(SCAN_CHUNK // len(grid), 1)
    best, best_k, best_m = np.inf, 0, 0
    for start in range(0, len(grid), rows_per_chunk):
        rows = np.arange(start, min(start + rows_per_chunk, len(grid)))
        values = components(rows[:, None], cols[None, :])
        flat = int(np.argmin(values))
        k, m = divmod(flat, len(grid))
        if values[k, m] < best:
            best, best_k, best_m = float(values[k, m]), int(rows[k]), m
    return best, best_k, best_m


def _log_local_variation(components, grid: np.ndarray, k: int, m: int, minimum: float, step: float, kind: str):
    """Refining the grid cannot lower the minimum by more than the variation to adjacent samples"""
    last = len(grid) - 1
    ks = np.array([max(k - 1, 0), k, min(k + 1, last)])
    ms = np.array([max(m - 1, 0), m, min(m + 1, last)])
    around = components(ks[:, None], ms[None, :])
    bound = float(np.max(np.abs(around - minimum)))
    logger.info(
        f"{kind} scan: minimum {minimum:.6e} at ({grid[k]:.6g}, {grid[m]:.6g}), step {step:.3g}; "
        f"refinement can lower it by at most ~{bound:.3e}"
    )


def scan_ne_residual(
    f: BenefitFunction,
    beta: float,
    interval: IntervalSpec,
    grid_step: float = 1e-3,
) -> ScanResult:
    """
    Minimum over (x_10, x_21) in P x P of the max-norm of the n = 2 NE residual:

        r1 = f_x(x_10, -beta) + f_x(x_12, beta)
        r2 = f_x(x_20, -2 beta) + f_x(x_21, -beta)

    A strictly positive minimum means no joint zero on the grid.
    """
    grid = grid_points(*interval.P, grid_step)
    step = float(grid[1] - grid[0]) if len(grid) > 1 else 0.0
    # x_20 = x_10 + x_21 lies on the aligned grid over 2P
    sums = 2 * grid[0] + step * np.arange(2 * len(grid) - 1)

    front = f.deriv_x(grid, -beta)
    back = f.deriv_x(-grid, beta)
    two_hop = f.deriv_x(sums, -2 * beta)

    def components(k, m):
        r1 = front[k] + back[m]
        r2 = two_hop[k + m] + front[m]
        return np.maximum(np.abs(r1), np.abs(r2))

    minimum, k, m = _scan_grid(components, grid)
    _log_local_variation(components, grid, k, m, minimum, step, 'NE')
    return ScanResult(
        kind='ne',
        minimum=minimum,
        location=(float(grid[k]), float(grid[m])),
        grid_step=step,
        interval=interval.P,
        points=len(grid) ** 2,
        n=2,
    )


# ==================== Cooperative equilibria ====================

def _negative_semidefinite(f: BenefitFunction, state: FormationState, h: float, tol: float) -> bool:
    """Central-difference Hessian of J from ce_gradient"""
    X = np.asarray(state.X)
    H = np.empty((state.n, state.n))
    for k in range(state.n):
        shift = np.zeros(state.n)
        shift[k] = h
        plus = ce_gradient(state.with_positions(X + shift), f)
        minus = ce_gradient(state.with_positions(X - shift), f)
        H[:, k] = (plus - minus) / (2 * h)
    H = 0.5 * (H + H.T)
    return bool(np.max(np.linalg.eigvalsh(H)) <= tol)


def find_ce(
    f: BenefitFunction,
    n: int,
    beta: float,
    init,
    max_iters: int = 500,
    interval: Optional[IntervalSpec] = None,
    tol: float = 1e-7,
    sufficient_increase: float = 1e-4,
    contraction: float = 0.5,
    max_backtracks: int = 40,
    dispersion_radius: Optional[float] = None,
    record_trajectory: bool = False,
) -> SearchResult:
    """
    Local ascent on J along ce_gradient with Armijo backtracking.

    Converged when max |dJ/dx_i| < tol; the converged point is then checked
    for a negative semidefinite finite-difference Hessian.

    Guards:
        dispersion drift: max |x_i| exceeds dispersion_radius (default 100 b)
        cohesion drift: two agents within 0.02 b of each other
    """
    X = np.asarray(init, dtype=float)
    if X.shape != (n,):
        raise ValueError(f"init must hold {n} positions")
    scale = benefit_scale(f, beta)
    radius = dispersion_radius or settings.VALIDITY_WINDOW * scale
    X = _separate(X, scale)

    state = FormationState(X=X, beta=beta)
    J = total_benefit(state, f)
    gradient = ce_gradient(state, f)
    trajectory = [X.tolist()] if record_trajectory else None
    diagnosis = 'max_iters reached'
    converged = False
    t = None
    iterations = 0

    for iterations in range(max_iters + 1):
        if np.max(np.abs(gradient)) < tol:
            converged = True
            diagnosis = ''
            break
        if iterations == max_iters:
            break

        slope = float(gradient @ gradient)
        t = 2 * t if t else scale / float(np.max(np.abs(gradient)))
        for _ in range(max_backtracks):
            candidate = FormationState(X=X + t * gradient, beta=beta)
            J_candidate = total_benefit(candidate, f)
            if J_candidate >= J + sufficient_increase * t * slope:
                break
            t *= contraction
        else:
            diagnosis = 'line search stalled'
            break

        X = np.asarray(candidate.X)
        if trajectory is not None:
            trajectory.append(X.tolist())

        if np.max(np.abs(X)) > radius:
            diagnosis = 'dispersion drift: J keeps increasing as agents spread out'
            break
        if _min_separation(X) < COHESION_LIMIT * scale:
            diagnosis = 'cohesion drift: J keeps increasing as agents close up longitudinally'
            break

        X = _separate(X, scale)
        state = FormationState(X=X, beta=beta)
        J = total_benefit(state, f)
        gradient = ce_gradient(state, f)

    if diagnosis:
        logger.info(f"CE search stopped after {iterations} iterations: {diagnosis}")

    state = FormationState(X=X, beta=beta)
    try:
        residual = float(np.max(np.abs(ce_gradient(state, f))))
    except DerivativeDomainError:
        residual = float('inf')
    second_order = _negative_semidefinite(f, state, 1e-5 * scale, 1e-9) if converged else None

    gaps, in_P = _classify(X, interval)
    return SearchResult(
        kind=EquilibriumKind.CE,
        converged=converged,
        X_final=X.tolist(),
        residual=residual,
        neighbor_gaps=gaps,
        in_P=in_P,
        iterations=iterations,
        diagnosis=diagnosis,
        objective=total_benefit(state, f),
        second_order_ok=second_order,
        trajectory=trajectory,
    )


def scan_ce_gradient_n(
    f: BenefitFunction,
    beta: float,
    interval: IntervalSpec,
    grid_step: float = 1e-3,
    n: int = 3,
) -> ScanResult:
    """
    Minimum of |dJ/dx_n| over (x_(n-1)(n-2), x_n(n-1)) in P x P.

    Only the two gaps ahead of the last agent enter its gradient:

        dJ/dx_n = [f_x(x_n(n-1), -beta) - f_x(x_(n-1)n, beta)]
                + [f_x(x_n(n-2), -2 beta) - f_x(x_(n-2)n, 2 beta)]
    """
    if n < 2:
        raise ValueError("scan_ce_gradient_n needs n >= 2")
    grid = grid_points(*interval.P, grid_step)
    step = float(grid[1] - grid[0]) if len(grid) > 1 else 0.0
    sums = 2 * grid[0] + step * np.arange(2 * len(grid) - 1)

    one_hop = f.paired_deriv_x(grid, -beta)
    two_hop = f.paired_deriv_x(sums, -2 * beta)

    def components(k, m):
        return np.abs(one_hop[m] + two_hop[k + m])

    minimum, k, m = _scan_grid(components, grid)
    _log_local_variation(components, grid, k, m, minimum, step, 'CE')
    return ScanResult(
        kind='ce',
        minimum=minimum,
        location=(float(grid[k]), float(grid[m])),
        grid_step=step,
        interval=interval.P,
        points=len(grid) ** 2,
        n=n,
    )


# ==================== Restarts ====================

def restart_inits(n: int, interval: IntervalSpec, restarts: int, seed: int) -> np.ndarray:
    """Follower positions whose neighboring gaps are uniform in P"""
    rng = np.random.default_rng(seed)
    gaps = rng.uniform(-interval.alpha_l, -interval.alpha_s, size=(restarts, n))
    return np.cumsum(gaps, axis=1)


def run_restarts(
    f: BenefitFunction,
    kind: EquilibriumKind,
    n: int,
    beta: float,
    interval: IntervalSpec,
    restarts: int = 100,
    seed: int = 0,
    mode: str = 'cyclic',
    max_iters: Optional[int] = None,
    workers: Optional[int] = None,
    record_trajectory: bool = False,
    progress: bool = True,
) -> RestartSummary:
    """Seeded restart batch; results keep init order whatever the worker count"""
    kind = EquilibriumKind(kind)
    inits = restart_inits(n, interval, restarts, seed)
    workers = workers or settings.WORKERS

    options: Dict[str, Any] = {'interval': interval, 'record_trajectory': record_trajectory}
    if max_iters is not None:
        options['max_iters'] = max_iters

    def solve(init):
        if kind == EquilibriumKind.NE:
            return find_ne(f, n, beta, init, mode=mode, **options)
        return find_ce(f, n, beta, init, **options)

    bar = tqdm(total=restarts, desc=f"{kind.value} n={n}", disable=not progress or restarts == 0)
    results: List[SearchResult] = []
    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(solve, inits):
                results.append(result)
                bar.update(1)
    else:
        for init in inits:
            results.append(solve(init))
            bar.update(1)
    bar.close()

    summary = RestartSummary.from_results(kind, n, seed, interval.P, results)
    logger.info(
        f"{kind.value} n={n}: {summary.converged}/{summary.restarts} converged, "
        f"{summary.of_interest} of interest, {summary.drift} drift"
    )
    return summary


class EquilibriumAgent(BaseAgent):
    """
    Routes equilibrium searches and scans by task name

    Input: {'task': 'search_ne'|'search_ce'|'scan_ne'|'scan_ce',
            'params': {'benefit', 'interval', 'beta', 'n', ...}}
    """

    TASKS = ('search_ne', 'search_ce', 'scan_ne', 'scan_ce')

    def __init__(self, config: Optional[Dict] = None):
        super().__init__("equilibrium", config)

    def validate_input(self, input_data: Dict[str, Any]) -> bool:
        """Validate task, benefit and interval"""
        if not isinstance(input_data, dict) or input_data.get('task') not in self.TASKS:
            return False
        params = input_data.get('params', {})
        return (
            isinstance(params.get('benefit'), BenefitFunction) and
            isinstance(params.get('interval'), IntervalSpec)
        )

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        task = input_data['task']
        params = input_data['params']
        f, P, beta = params['benefit'], params['interval'], params['beta']

        if task == 'scan_ne':
            return {'scan': scan_ne_residual(f, beta, P, params.get('scan_step', 1e-3))}
        if task == 'scan_ce':
            return {'scan': scan_ce_gradient_n(f, beta, P, params.get('scan_step', 1e-3), params.get('n', 3))}

        kind = EquilibriumKind.NE if task == 'search_ne' else EquilibriumKind.CE
        summary = run_restarts(
            f, kind, params.get('n', 2), beta, P,
            restarts=params.get('restarts', 100),
            seed=params.get('seed', 0),
            mode=params.get('mode', 'cyclic'),
            max_iters=params.get('max_iters'),
            record_trajectory=params.get('record_trajectory', False),
        )
        return {'summary': summary}
