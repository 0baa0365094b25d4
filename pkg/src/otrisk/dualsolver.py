"""Primal and dual solvers for finitely generated target families.

For a target family on the grid y_0 < ... < y_K the dual program
minimizes, over vectors g with g[0] pinned to 0,

    J(g) = E_m[ max_k (x*y_k - g_k) ] + max_v <g, r^(v)>,

which upper-bounds the transport value for every g (weak duality) and
meets it at the optimum.  The primal side maximizes the concave map
lambda -> transport_value(m, mixture(lambda)) over the vertex simplex.

The workhorses:

* :func:`primal_frank_wolfe` — ascent on the mixture weights; the exact
  potentials of the current mixture double as the linearization oracle,
  so every iterate carries a certified ascent gap.
* :func:`solve_dual_subgradient` — plain subgradient descent on J with
  diminishing or Polyak steps, warm-started from the exact potentials of
  the best single generator.
* :func:`double_conjugate_refine` — one biconjugation sweep; never
  increases J and is idempotent.
* :func:`duality_gap_report` — chains the above into a certificate with
  explicit primal and dual witnesses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadOptions, NonFiniteValue, WrongMode
from .measures import DiscreteMeasure
from .transport import (
    Coupling,
    GeneratorSet,
    HullMode,
    comonotone_coupling,
    exact_potentials,
    finite_set_value,
    transport_value,
)

__all__ = [
    "DualPotential",
    "GapReport",
    "SolveStatus",
    "SolverOptions",
    "eval_conjugate",
    "support_function",
    "dual_objective",
    "solve_dual_subgradient",
    "primal_frank_wolfe",
    "double_conjugate_refine",
    "duality_gap_report",
]

SUBGRADIENT_ITERS_DEFAULT = 50_000
FRANK_WOLFE_ITERS_DEFAULT = 2_000
# convergence is re-tested every this many subgradient iterations
CHECK_EVERY = 100
# give up after this many iterations without a new best value
STALL_ITERS = 2_000


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    ITER_LIMIT = "iter_limit"


@dataclass(frozen=True)
class SolverOptions:
    """Iteration budgets and the target duality gap.

    ``max_iters = None`` means the per-solver default (50 000 subgradient
    steps, 2 000 Frank-Wolfe steps).  ``target_gap`` is applied in mixed
    absolute/relative form: converged when gap <= target_gap * (1 + |primal|).
    ``seed`` is reserved for randomized restart schedules; the bundled
    solvers are deterministic and do not consume it.
    """

    max_iters: int | None = None
    target_gap: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_iters is not None and (
            not isinstance(self.max_iters, int) or self.max_iters <= 0
        ):
            raise BadOptions(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if not (math.isfinite(self.target_gap) and self.target_gap > 0.0):
            raise BadOptions(f"target_gap must be positive and finite, got {self.target_gap!r}")
        if not isinstance(self.seed, int):
            raise BadOptions(f"seed must be an integer, got {self.seed!r}")

    def subgradient_iters(self) -> int:
        return self.max_iters if self.max_iters is not None else SUBGRADIENT_ITERS_DEFAULT

    def frank_wolfe_iters(self) -> int:
        return self.max_iters if self.max_iters is not None else FRANK_WOLFE_ITERS_DEFAULT


@dataclass(frozen=True)
class DualPotential:
    """Dual variable on the generator grid, pinned so values[0] == 0.

    Construction subtracts the first entry (a constant shift never
    changes the dual objective), so any finite vector is accepted.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("dual potential entries must be finite")
        v = v - v[0]
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class GapReport:
    """Certified sandwich primal_lower <= value <= dual_upper."""

    primal_lower: float
    dual_upper: float
    gap: float
    primal_weights: np.ndarray
    primal_coupling: Coupling
    dual_witness: DualPotential
    iterations: dict
    status: SolveStatus


# ----------------------------------------------------------------------
# the dual objective and its pieces


def _as_g(g) -> np.ndarray:
    return g.values if isinstance(g, DualPotential) else np.asarray(g, dtype=float)


def eval_conjugate(g, R: GeneratorSet, x: float) -> tuple[float, int]:
    """max over grid points of x*y_k - g_k, with the lowest argmax index."""
    scores = float(x) * R.support - _as_g(g)
    idx = int(np.argmax(scores))
    return float(scores[idx]), idx


def _conjugate_profile(gv: np.ndarray, R: GeneratorSet, xs: np.ndarray):
    """Conjugate values and argmax indices for a whole support vector."""
    scores = xs[:, None] * R.support[None, :] - gv[None, :]
    idx = np.argmax(scores, axis=1)  # first maximum wins ties
    return scores[np.arange(xs.size), idx], idx


def support_function(R: GeneratorSet, g) -> tuple[float, int]:
    """max over generators of <g, r^(v)>, with the lowest argmax index."""
    inner = R.vertices @ _as_g(g)
    idx = int(np.argmax(inner))
    return float(inner[idx]), idx


def dual_objective(m: DiscreteMeasure, R: GeneratorSet, g) -> float:
    """E_m[conjugate] + support function: an upper bound on the transport value."""
    gv = _as_g(g)
    conj, _ = _conjugate_profile(gv, R, m.positions)
    sigma, _ = support_function(R, gv)
    return math.fsum((conj * m.weights).tolist()) + sigma


def double_conjugate_refine(m: DiscreteMeasure, R: GeneratorSet, g) -> DualPotential:
    """One biconjugation sweep of the dual potential, re-pinned at the grid min.

    Replaces g by the conjugate (in y) of its own conjugate (in x),
    both restricted to the finite supports.  The result never has a
    larger dual objective and the sweep is idempotent.
    """
    gv = _as_g(g)
    f_tilde, _ = _conjugate_profile(gv, R, m.positions)
    g_tilde = np.max(m.positions[:, None] * R.support[None, :] - f_tilde[:, None], axis=0)
    return DualPotential(g_tilde)


# ----------------------------------------------------------------------
# subgradient descent on the dual


def _objective_and_subgradient(m, R, gv):
    """Dual objective at gv and a subgradient with the pinned slot zeroed.

    The subgradient is r^(v*) - q: v* the support-function argmax and q
    the pushforward of m-mass onto the conjugate argmax grid points.
    """
    x, w = m.positions, m.weights
    scores = x[:, None] * R.support[None, :] - gv[None, :]
    ki = np.argmax(scores, axis=1)
    conj = scores[np.arange(x.size), ki]
    inner = R.vertices @ gv
    vi = int(np.argmax(inner))
    J = math.fsum((conj * w).tolist()) + float(inner[vi])
    q = np.bincount(ki, weights=w, minlength=R.support.size)
    s = R.vertices[vi] - q
    s[0] = 0.0  # pinned coordinate never moves
    return J, s


def _warm_start(m: DiscreteMeasure, R: GeneratorSet) -> tuple[np.ndarray, float]:
    """Exact potentials of the best single generator, extended to the grid.

    Returns (pinned g vector, that generator's transport value).  The
    value is a valid primal lower bound in both hull modes.
    """
    value, idx = finite_set_value(m, R, allow_lower_bound=True)
    pair = exact_potentials(m, R.vertex_measure(idx), y_support=R.support)
    g0 = pair.g_values - pair.g_values[0]
    return g0, value


def solve_dual_subgradient(
    m: DiscreteMeasure,
    R: GeneratorSet,
    opts: SolverOptions = SolverOptions(),
    primal_lower: float | None = None,
    init=None,
) -> tuple[DualPotential, float, list[tuple[int, float]]]:
    """Subgradient descent on the dual objective over g (g[0] pinned).

    The subgradient at g is r^(v*) - q, where v* is the support-function
    argmax and q_k collects the m-mass whose conjugate argmax is k.
    Steps are Polyak ((J - primal_lower)/||s||^2) when a primal lower
    bound is known, else diminishing s0/sqrt(iter) with s0 set by the
    scale of the instance.  Returns (best potential, its objective, a
    trace of (iteration, best value) checkpoints).
    """
    if init is None:
        g, warm_value = _warm_start(m, R)
        if primal_lower is None:
            primal_lower = warm_value
    else:
        g = _as_g(init).copy()
        g = g - g[0]
    x, y = m.positions, R.support

    def objective_and_subgrad(gv):
        return _objective_and_subgradient(m, R, gv)

    max_iters = opts.subgradient_iters()
    J, s = objective_and_subgrad(g)
    best_g, best_J = g.copy(), J
    trace = [(0, best_J)]
    s0 = (float(x[-1] - x[0])) * float(np.abs(y).max())
    if s0 == 0.0:
        s0 = (1.0 + float(np.abs(x).max())) * max(float(np.abs(y).max()), 1.0)

    it = 0
    last_improved = 0
    while it < max_iters:
        it += 1
        norm_sq = float(s @ s)
        if norm_sq == 0.0:
            break  # exact minimizer found
        if primal_lower is not None:
            excess = J - primal_lower
            if excess <= 0.0:
                break  # certified optimal against the lower bound
            step = excess / norm_sq
        else:
            step = s0 / math.sqrt(it)
        g = g - step * s
        J, s = objective_and_subgrad(g)
        if J < best_J:
            best_J = J
            best_g = g.copy()
            last_improved = it
        if it % CHECK_EVERY == 0 or it == max_iters:
            trace.append((it, best_J))
            if it - last_improved >= STALL_ITERS:
                break  # best iterate has plateaued; more steps only oscillate
        if primal_lower is not None and best_J - primal_lower <= opts.target_gap * (
            1.0 + abs(primal_lower)
        ):
            break
    if trace[-1][0] != it:
        trace.append((it, best_J))
    return DualPotential(best_g), best_J, trace


# ----------------------------------------------------------------------
# Frank-Wolfe ascent on the primal hull problem


def _frank_wolfe(m, R, opts):
    if R.hull_mode is not HullMode.CONVEX_HULL:
        raise WrongMode("Frank-Wolfe solves the convex-hull problem; got a finite set")

    # start at the best single generator
    start_value, start_idx = finite_set_value(m, R, allow_lower_bound=True)
    lam = np.zeros(R.n_vertices)
    lam[start_idx] = 1.0
    best_lam, best_value = lam.copy(), start_value

    max_iters = opts.frank_wolfe_iters()
    it = 0
    for it in range(1, max_iters + 1):
        mixture = R.mixture_measure(lam)
        value = transport_value(m, mixture)
        if value > best_value:
            best_value, best_lam = value, lam.copy()
        pair = exact_potentials(m, mixture, y_support=R.support)
        scores = R.vertices @ pair.g_values
        v_star = int(np.argmax(scores))
        r_lam = lam @ R.vertices
        ascent_gap = float(scores[v_star]) - float(r_lam @ pair.g_values)
        if ascent_gap <= 0.25 * opts.target_gap * (1.0 + abs(best_value)):
            break
        gamma = 2.0 / (it + 2.0)
        lam = (1.0 - gamma) * lam
        lam[v_star] += gamma
    best_lam.setflags(write=False)
    return best_lam, best_value, R.mixture_measure(best_lam), it


def primal_frank_wolfe(
    m: DiscreteMeasure,
    R: GeneratorSet,
    opts: SolverOptions = SolverOptions(),
) -> tuple[np.ndarray, float, DiscreteMeasure]:
    """Maximize transport_value(m, .) over mixtures of the generators.

    Classical Frank-Wolfe with step 2/(k+2) on the vertex simplex.  The
    exact potentials of the current mixture give a linear upper bound
    whose vertex scores <g, r^(v)> pick the ascent direction; the same
    bound yields a per-iterate ascent gap used for early stopping.
    Returns (mixture weights, value, mixture measure); the value is a
    valid lower bound on the hull value at every iterate.
    """
    lam, value, mixture, _ = _frank_wolfe(m, R, opts)
    return lam, value, mixture


# ----------------------------------------------------------------------
# the certified report


def duality_gap_report(
    m: DiscreteMeasure, R: GeneratorSet, opts: SolverOptions = SolverOptions()
) -> GapReport:
    """Sandwich the family's value between a primal witness and a dual bound.

    ConvexHull: Frank-Wolfe supplies the primal mixture.  FiniteSet: the
    exact vertex max is the primal side, and the dual still certifies the
    hull closure, so a genuinely mixing finite family reports an honest
    positive gap.  The dual side warm-starts the subgradient descent from
    the exact potentials of the primal witness and refines the best
    iterate by biconjugation.
    """
    if R.hull_mode is HullMode.CONVEX_HULL:
        lam, primal, mixture, fw_iters = _frank_wolfe(m, R, opts)
    else:
        primal, idx = finite_set_value(m, R)
        lam = np.zeros(R.n_vertices)
        lam[idx] = 1.0
        lam.setflags(write=False)
        mixture = R.vertex_measure(idx)
        fw_iters = 0
    coupling = comonotone_coupling(m, mixture)

    pair = exact_potentials(m, mixture, y_support=R.support)
    init = DualPotential(pair.g_values)
    g_best, dual_value, trace = solve_dual_subgradient(
        m, R, opts, primal_lower=primal, init=init
    )
    refined = double_conjugate_refine(m, R, g_best)
    refined_value = dual_objective(m, R, refined)
    if refined_value <= dual_value:
        g_best, dual_value = refined, refined_value

    gap = dual_value - primal
    status = (
        SolveStatus.CONVERGED
        if gap <= opts.target_gap * (1.0 + abs(primal))
        else SolveStatus.ITER_LIMIT
    )
    return GapReport(
        primal_lower=primal,
        dual_upper=dual_value,
        gap=gap,
        primal_weights=lam,
        primal_coupling=coupling,
        dual_witness=g_best,
        iterations={"frank_wolfe": fw_iters, "subgradient": trace[-1][0]},
        status=status,
    )
