"""Single-beam steering optimizer for multiple TDMA users.

The problem: pick elevation/azimuth/directivity (alpha, beta, gamma) and
per-user time fractions tau maximizing sum_k log(tau_k * R_k).  The time
part decouples and is uniform (tau_k = 1/K); the angle part is non-convex,
so it is solved on a discrete (alpha, beta, gamma) grid, either by an
exact exhaustive scan or by a sparse-selection relaxation: put a weight
d_i >= 0, sum d_i = 1 on every grid point, penalize the weight vector
toward 1-sparsity with a reweighted l_q surrogate (0 < q < 1), and ascend
the penalized objective with projected gradient steps on the simplex.
The returned beam is always the grid point carrying the largest weight,
re-scored with the exact discrete objective.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import BeamConfig, PhyParams, UserPose, rates_from_gains
from .geometry import DegenerateGeometryError, orientation_grid


class InfeasibleError(RuntimeError):
    """Some user has zero gain at every grid point."""


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the steering parameter space.

    alpha runs inclusively from alpha_min to alpha_max, beta covers the
    half-open [0, 360) so 0 and 360 do not duplicate, gamma runs
    inclusively from gamma_min to gamma_max.  Angles in degrees.
    """

    alpha_min: float = 200.0
    alpha_max: float = 340.0
    alpha_step: float = 2.0
    beta_step: float = 2.0
    gamma_min: float = 1.0
    gamma_max: float = 15.0
    gamma_step: float = 1.0

    def __post_init__(self):
        if self.alpha_step <= 0 or self.beta_step <= 0 or self.gamma_step <= 0:
            raise ValueError("grid steps must be strictly positive")
        if self.alpha_max < self.alpha_min:
            raise ValueError("alpha_max must be >= alpha_min")
        if self.gamma_min < 1.0:
            raise ValueError("gamma_min must be >= 1")
        if self.gamma_max < self.gamma_min:
            raise ValueError("gamma_max must be >= gamma_min")
        if self.beta_step > 360.0:
            raise ValueError("beta_step must be <= 360")

    @property
    def alphas(self) -> np.ndarray:
        n = int(np.floor((self.alpha_max - self.alpha_min) / self.alpha_step + 1e-9)) + 1
        return self.alpha_min + self.alpha_step * np.arange(n)

    @property
    def betas(self) -> np.ndarray:
        n = int(np.ceil((360.0 - 1e-9) / self.beta_step))
        return self.beta_step * np.arange(n)

    @property
    def gammas(self) -> np.ndarray:
        n = int(np.floor((self.gamma_max - self.gamma_min) / self.gamma_step + 1e-9)) + 1
        return self.gamma_min + self.gamma_step * np.arange(n)

    @property
    def n_points(self) -> int:
        return self.alphas.size * self.betas.size * self.gammas.size


@dataclass(frozen=True)
class GainGrid:
    """Per-user channel gains over every grid point.

    gains has shape (K, S) with S = s_alpha * s_beta * s_gamma and linear
    index i = (i_alpha * s_beta + i_beta) * s_gamma + i_gamma.
    """

    gains: np.ndarray
    spec: GridSpec

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def n_points(self) -> int:
        return self.gains.shape[1]

    def beam_at(self, i: int) -> BeamConfig:
        """Grid point for a linear index."""
        s_b = self.spec.betas.size
        s_g = self.spec.gammas.size
        i_g = i % s_g
        i_b = (i // s_g) % s_b
        i_a = i // (s_g * s_b)
        return BeamConfig(
            alpha_deg=float(self.spec.alphas[i_a]),
            beta_deg=float(self.spec.betas[i_b]),
            gamma=float(self.spec.gammas[i_g]),
        )

    def index_of(self, beam: BeamConfig) -> int:
        """Linear index of a beam that lies on the grid."""
        i_a = int(round((beam.alpha_deg - self.spec.alpha_min) / self.spec.alpha_step))
        i_b = int(round(beam.beta_deg / self.spec.beta_step))
        i_g = int(round((beam.gamma - self.spec.gamma_min) / self.spec.gamma_step))
        alphas, betas, gammas = self.spec.alphas, self.spec.betas, self.spec.gammas
        if not (0 <= i_a < alphas.size and 0 <= i_b < betas.size and 0 <= i_g < gammas.size):
            raise ValueError(f"beam {beam} is outside the grid")
        if (
            abs(alphas[i_a] - beam.alpha_deg) > 1e-6
            or abs(betas[i_b] - beam.beta_deg) > 1e-6
            or abs(gammas[i_g] - beam.gamma) > 1e-6
        ):
            raise ValueError(f"beam {beam} does not lie on the grid")
        return (i_a * betas.size + i_b) * gammas.size + i_g

    def subset(self, users: list) -> "GainGrid":
        """Grid restricted to a subset of user rows."""
        return GainGrid(gains=self.gains[list(users)], spec=self.spec)


def equal_time_allocation(n_users: int) -> np.ndarray:
    """Uniform TDMA fractions tau_k = 1/K (the log-fair optimum)."""
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    return np.full(n_users, 1.0 / n_users)


def build_gain_grid(tx_pos, users: list, spec: GridSpec, A_r: float) -> GainGrid:
    """Channel gain of every user at every (alpha, beta, gamma) grid point.

    Vectorized over the grid; entries match the scalar los_gain evaluation
    to floating-point accuracy.  Only elementwise ufuncs are used so that
    identical (user, grid point) pairs produce bitwise-identical gains
    regardless of the surrounding grid shape.
    """
    if not users:
        raise ValueError("users must be non-empty")
    tx_pos = np.asarray(tx_pos, dtype=float)
    alphas, betas, gammas = spec.alphas, spec.betas, spec.gammas
    n_tx = orientation_grid(alphas, betas)  # (s_a * s_b, 3)
    n_ab = n_tx.shape[0]
    s_g = gammas.size
    prefactor = (gammas + 1.0) / (2.0 * np.pi)  # (s_g,)

    gains = np.zeros((len(users), n_ab * s_g))
    for k, user in enumerate(users):
        v = user.position - tx_pos
        d2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
        if d2 == 0.0:
            raise DegenerateGeometryError("degenerate geometry: user co-located with AP")
        d = np.sqrt(d2)
        cos_theta = -(v[0] * user.orientation[0] + v[1] * user.orientation[1] + v[2] * user.orientation[2]) / d
        if cos_theta <= 0.0:
            continue  # receiver faces away from the AP at every grid point
        cos_phi = (n_tx[:, 0] * v[0] + n_tx[:, 1] * v[1] + n_tx[:, 2] * v[2]) / d
        lit = cos_phi > 0.0
        # cos_phi^gamma on the lit part, via exp(gamma * log cos_phi)
        powers = np.exp(np.outer(np.log(cos_phi[lit]), gammas))  # (n_lit, s_g)
        block = np.zeros((n_ab, s_g))
        block[lit] = powers * (prefactor * (A_r * cos_theta / d2))
        gains[k] = block.reshape(-1)
    return GainGrid(gains=gains, spec=spec)


def grid_log_objective(grid: GainGrid, phy: PhyParams) -> np.ndarray:
    """Sum over users of ln(rate) at every grid point; -inf where any user is dark."""
    with np.errstate(divide="ignore"):
        log_rates = np.log(rates_from_gains(grid.gains, phy))
    return log_rates.sum(axis=0)


def solve_exhaustive(grid: GainGrid, phy: PhyParams) -> tuple[BeamConfig, float]:
    """Exact argmax of the sum-log-rate objective over the whole grid.

    Ties break to the lowest linear index.  Raises InfeasibleError when no
    grid point illuminates every user.
    """
    if grid.n_points < grid.n_users:
        raise ValueError("grid must have at least as many points as users")
    obj = grid_log_objective(grid, phy)
    best = int(np.argmax(obj))
    if not np.isfinite(obj[best]):
        raise InfeasibleError("infeasible: user unreachable at every grid point")
    return grid.beam_at(best), float(obj[best])


@dataclass(frozen=True)
class MMParams:
    """Knobs of the reweighted-l_q relaxation solver.

    lam is the initial sparsity penalty weight, doubled per continuation
    stage until the weight vector is effectively 1-sparse
    (max(d) > sparsity_target) or max_stages elapse.  q and epsilon shape
    the concave surrogate weights w_i = q * (d_i + epsilon)^(q-1).
    """

    lam: float = 1.0
    q: float = 0.1
    epsilon: float = 1e-3
    max_outer: int = 30
    max_inner: int = 500
    tol: float = 1e-6
    inner_tol: float = 1e-6
    max_stages: int = 10
    sparsity_target: float = 0.99
    round_support: int = 16

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1} (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = j[u + (1.0 - css) / j > 0.0][-1]
    lam = (1.0 - css[rho - 1]) / rho
    return np.maximum(v + lam, 0.0)


def _penalized_objective(d, gains, phy, lam, w):
    g = gains @ d
    snr = (phy.r * phy.p * g) ** 2 / (phy.N0 * phy.B)
    rates = phy.B * np.log2(1.0 + snr)
    with np.errstate(divide="ignore"):
        val = np.sum(np.log(rates))
    return val - lam * float(w @ d)


def _penalized_gradient(d, gains, phy, lam, w):
    g = gains @ d
    c = (phy.r * phy.p) ** 2 / (phy.N0 * phy.B)
    snr = c * g * g
    rates = phy.B * np.log2(1.0 + snr)
    coef = (phy.B / np.log(2.0)) * (2.0 * c * g) / ((1.0 + snr) * rates)
    return gains.T @ coef - lam * w


def _support(d, m):
    """Indices of the m heaviest coordinates that carry mass."""
    order = np.argsort(d)[::-1][:m]
    return [int(i) for i in order if d[i] > 0.0]


def _polish(grid, exact, start, max_moves=500):
    """Steepest-ascent walk on grid neighbors of the exact objective.

    Moves one step in alpha, beta (wrapping) or gamma at a time and stops
    at a local maximum.  Used to finish the relaxation's rounded point:
    the relaxation reliably lands near, but not on, the best compromise
    between users.
    """
    s_a = grid.spec.alphas.size
    s_b = grid.spec.betas.size
    s_g = grid.spec.gammas.size
    i = start
    for _ in range(max_moves):
        i_g = i % s_g
        i_b = (i // s_g) % s_b
        i_a = i // (s_g * s_b)
        best_i, best_v = i, exact[i]
        for da, db, dg in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            na, ng = i_a + da, i_g + dg
            if not (0 <= na < s_a and 0 <= ng < s_g):
                continue
            j = (na * s_b + (i_b + db) % s_b) * s_g + ng
            if exact[j] > best_v:
                best_i, best_v = j, exact[j]
        if best_i == i:
            break
        i = best_i
    return i


def _round_to_vertex(d, exact, m):
    """One-hot vector at the best grid point among the m heaviest."""
    support = _support(d, m)
    best = support[int(np.argmax(exact[support]))]
    e = np.zeros_like(d)
    e[best] = 1.0
    return e


def _ascend_inner(d, gains, phy, lam, w, mm, on_iterate=None):
    """Projected gradient ascent on the simplex for fixed surrogate weights.

    The first step is scaled so no coordinate moves by more than ~0.1
    before projection (adding a constant to the gradient does not change
    the projected point, so the scale is taken off the centered gradient);
    afterwards the step adapts by doubling on success, halving on failure.
    """
    f = _penalized_objective(d, gains, phy, lam, w)
    step = None
    for _ in range(mm.max_inner):
        grad = _penalized_gradient(d, gains, phy, lam, w)
        if step is None:
            spread = float(np.max(np.abs(grad - grad.mean())))
            step = 0.1 / spread if spread > 0 else 1.0
        accepted = False
        s = step
        for _ in range(60):  # halve until ascent
            cand = project_to_simplex(d + s * grad)
            fc = _penalized_objective(cand, gains, phy, lam, w)
            if fc > f:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        rel = (fc - f) / max(abs(f), 1e-12)
        d, f = cand, fc
        step = 2.0 * s
        if on_iterate is not None:
            on_iterate(d)
        if rel < mm.inner_tol:
            break
    return d, f


def solve_mm(
    grid: GainGrid,
    phy: PhyParams,
    mm: MMParams | None = None,
    on_iterate=None,
) -> tuple[BeamConfig, float]:
    """Near-optimal grid point via the reweighted-l_q relaxation.

    Outer loop: refresh the surrogate weights w_i = q (d_i + eps)^(q-1)
    around the previous iterate, re-solve the penalized subproblem by
    projected gradient ascent, stop once ||d_t - d_{t-1}||_inf < tol.
    A continuation schedule doubles the penalty weight until the selection
    vector concentrates on a single grid point.  The answer is rounded to
    the best discrete point among the coordinates the relaxation weighted
    and finished with a local steepest-ascent walk; the reported objective
    is the exact discrete value there, so it is always attainable by a
    physical beam.

    on_iterate, if given, is called with the current selection vector
    after every accepted inner step (testing hook).

    Warns on non-convergence and returns the best iterate found.
    """
    if mm is None:
        mm = MMParams()
    if grid.n_points < grid.n_users:
        raise ValueError("grid must have at least as many points as users")
    exact = grid_log_objective(grid, phy)
    feasible = np.isfinite(exact)
    if not feasible.any():
        raise InfeasibleError("infeasible: user unreachable at every grid point")

    # Points dark for any user can never be the discrete answer; keep the
    # selection vector on the feasible columns only.  Otherwise the
    # relaxation concentrates on mixtures of complementary partial-coverage
    # beams that no single physical beam can realize.
    columns = np.flatnonzero(feasible)
    gains = grid.gains[:, columns]
    exact_f = exact[columns]
    n = columns.size
    d = np.full(n, 1.0 / n)
    lam = mm.lam
    outer_converged = False
    candidates: set = set()
    for _ in range(mm.max_stages):
        stage_converged = False
        for _ in range(mm.max_outer):
            w = mm.q * (d + mm.epsilon) ** (mm.q - 1.0)
            d_new, _ = _ascend_inner(d, gains, phy, lam, w, mm, on_iterate)
            delta = float(np.max(np.abs(d_new - d)))
            d = d_new
            if delta < mm.tol:
                stage_converged = True
                break
        candidates.update(_support(d, mm.round_support))
        if float(d.max()) > mm.sparsity_target:
            outer_converged = stage_converged
            break
        if stage_converged:
            # The linearized penalty is indifferent between equal-weight
            # coordinates, so the outer loop can stall on a balanced
            # mixture.  Round to the best discrete point carried by the
            # mixture and let the following stages confirm or move it.
            d = _round_to_vertex(d, exact_f, mm.round_support)
        lam *= 2.0
    sparse_enough = float(d.max()) > mm.sparsity_target
    if not (outer_converged and sparse_enough):
        warnings.warn(
            "selection solver did not fully converge; returning best iterate",
            RuntimeWarning,
            stacklevel=2,
        )

    # Map back to a physical beam: the best discrete point among those the
    # relaxation put weight on, then a local steepest-ascent finish on the
    # exact objective.
    pool = sorted(candidates)
    best = int(columns[pool[int(np.argmax(exact_f[pool]))]])
    best = _polish(grid, exact, best)
    return grid.beam_at(best), float(exact[best])


def solve_single_beam(
    tx_pos,
    users: list,
    spec: GridSpec,
    phy: PhyParams,
    method: str = "exhaustive",
    mm: MMParams | None = None,
) -> tuple[BeamConfig, np.ndarray, np.ndarray]:
    """Full single-beam solution: beam, time fractions, delivered rates.

    Delivered rate of user k is tau_k * R_k with tau_k = 1/K.
    """
    grid = build_gain_grid(tx_pos, users, spec, phy.A_r)
    if method == "exhaustive":
        beam, _ = solve_exhaustive(grid, phy)
    elif method == "mm":
        beam, _ = solve_mm(grid, phy, mm)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'exhaustive' or 'mm'")
    tau = equal_time_allocation(len(users))
    full_rates = rates_from_gains(grid.gains[:, grid.index_of(beam)], phy)
    return beam, tau, tau * full_rates
