"""Cluster users onto independently steerable beams.

Modified k-means in gain space: seed each of the N clusters with one user,
then alternate (a) re-optimizing each cluster's beam for its current
members and (b) re-assigning every user to the beam giving it the largest
channel gain, until the beam parameters repeat across two consecutive
iterations.  Each beam transmits with power p/N.

A cluster can lose all members mid-run.  Recovery policy: restart with a
fresh random single-user-per-cluster seeding (up to max_restarts times),
then fall back to deleting the empty cluster and leaving its LED idle.
"""

from dataclasses import dataclass, replace

import numpy as np

from .channel import BeamConfig, PhyParams, UserPose
from .optimizer import (
    GainGrid,
    GridSpec,
    MMParams,
    build_gain_grid,
    solve_exhaustive,
    solve_mm,
)


@dataclass(frozen=True, eq=False)
class ClusterState:
    """Assignment sets, per-beam configurations, and the K x N gain matrix.

    beams[n] is None when the LED went idle via empty-cluster deletion.
    unreachable lists users whose gain was zero under every current beam
    at the last reassignment; it can only be non-empty on the first
    iteration (afterwards every user sits in a cluster whose solved beam
    lights all members), so converged states never carry the flag.
    """

    assignments: tuple
    beams: tuple
    gains: np.ndarray
    converged: bool
    n_iterations: int
    unreachable: tuple = ()

    @property
    def n_beams(self) -> int:
        return len(self.beams)


def reassign_users(state: ClusterState) -> ClusterState:
    """Move every user to the beam with the largest gain (ties: lowest index).

    A user dark under every beam goes to beam 0 by the tie rule and is
    flagged in `unreachable`; whether it can be served at all is decided
    by the next per-cluster solve.
    """
    n_users, n_beams = state.gains.shape
    assignments = [[] for _ in range(n_beams)]
    unreachable = []
    for k in range(n_users):
        row = state.gains[k]
        if not (row > 0.0).any():
            unreachable.append(k)
        assignments[int(np.argmax(row))].append(k)
    return replace(
        state,
        assignments=tuple(tuple(a) for a in assignments),
        unreachable=tuple(unreachable),
    )


def _solve_cluster(grid, members, phy_beam, method, mm):
    sub = grid.subset(members)
    if method == "mm":
        beam, _ = solve_mm(sub, phy_beam, mm)
    else:
        beam, _ = solve_exhaustive(sub, phy_beam)
    return beam


def _beam_gain_matrix(grid: GainGrid, beams) -> np.ndarray:
    gains = np.zeros((grid.n_users, len(beams)))
    for n, beam in enumerate(beams):
        if beam is not None:
            gains[:, n] = grid.gains[:, grid.index_of(beam)]
    return gains


def _iterate(grid, seeds, n_beams, phy_beam, max_iters, method, mm, allow_idle):
    """One full run of the alternating loop from a given seeding.

    Returns the final ClusterState, or None if a cluster emptied and idle
    deletion is not allowed.
    """
    assignments = [(s,) for s in seeds]
    prev_beams = None
    state = None
    for iteration in range(1, max_iters + 1):
        beams = []
        for n in range(n_beams):
            if not assignments[n]:
                if not allow_idle:
                    return None
                beams.append(None)
                continue
            beams.append(_solve_cluster(grid, assignments[n], phy_beam, method, mm))
        beams = tuple(beams)
        gains = _beam_gain_matrix(grid, beams)
        converged = prev_beams is not None and beams == prev_beams
        state = ClusterState(
            assignments=tuple(assignments),
            beams=beams,
            gains=gains,
            converged=converged,
            n_iterations=iteration,
        )
        state = reassign_users(state)
        if converged:
            return state
        prev_beams = beams
        assignments = list(state.assignments)
    return state


def vuc_cluster(
    tx_pos,
    users: list,
    n_beams: int,
    spec: GridSpec,
    phy: PhyParams,
    max_iters: int = 50,
    method: str = "exhaustive",
    mm: MMParams | None = None,
    rng: np.random.Generator | None = None,
    max_restarts: int = 5,
    power_shares: int | None = None,
) -> ClusterState:
    """Partition users onto n_beams steerable beams.

    phy carries the total transmit power; each per-cluster solve runs at
    p/n_beams (or p/power_shares when the power budget is split over more
    LEDs than there are clusters).  rng only drives the random restarts
    taken after an empty-cluster event, so identical inputs give
    identical output.
    """
    n_users = len(users)
    if not 1 <= n_beams <= n_users:
        raise ValueError("need 1 <= n_beams <= number of users")
    if rng is None:
        rng = np.random.default_rng(0)
    grid = build_gain_grid(tx_pos, users, spec, phy.A_r)
    phy_beam = replace(phy, p=phy.p / (power_shares if power_shares is not None else n_beams))

    seeds = list(range(n_beams))  # first N users, one per cluster
    for _ in range(max_restarts + 1):
        state = _iterate(grid, seeds, n_beams, phy_beam, max_iters, method, mm, allow_idle=False)
        if state is not None:
            return state
        seeds = [int(s) for s in rng.choice(n_users, size=n_beams, replace=False)]
    # all restarts hit an empty cluster: delete it and leave the LED idle
    return _iterate(
        grid, list(range(n_beams)), n_beams, phy_beam, max_iters, method, mm, allow_idle=True
    )
