import numpy as np
import pytest

from vlcsteer.channel import PhyParams, UserPose
from vlcsteer.clustering import ClusterState, reassign_users, vuc_cluster
from vlcsteer.geometry import orientation_from_angles
from vlcsteer.optimizer import GridSpec, build_gain_grid, solve_exhaustive, solve_single_beam

AP = np.array([4.0, 4.0, 4.0])
UP = np.array([0.0, 0.0, 1.0])
PHY = PhyParams()
COARSE = GridSpec(alpha_step=5.0, beta_step=10.0, gamma_step=2.0)


def users_at(*positions):
    return [UserPose(position=np.array([x, y, 0.85]), orientation=UP) for x, y in positions]


def random_users(rng, k):
    return [
        UserPose(position=np.array([rng.uniform(0, 8), rng.uniform(0, 8), 0.85]), orientation=UP)
        for _ in range(k)
    ]


def state_for_gains(gains):
    gains = np.asarray(gains, dtype=float)
    n = gains.shape[1]
    return ClusterState(
        assignments=tuple(() for _ in range(n)),
        beams=tuple(None for _ in range(n)),
        gains=gains,
        converged=False,
        n_iterations=0,
    )


def test_reassign_argmax_row():
    state = reassign_users(state_for_gains([[0.1, 0.3, 0.2]]))
    assert state.assignments == ((), (0,), ())


def test_reassign_tie_to_lowest_index():
    state = reassign_users(state_for_gains([[0.3, 0.3]]))
    assert state.assignments == ((0,), ())


def test_reassign_all_zero_row_flags_unreachable():
    state = reassign_users(state_for_gains([[0.0, 0.0, 0.0]]))
    assert state.unreachable == (0,)
    assert state.assignments == ((0,), (), ())  # tie rule sends it to beam 0


def test_reassign_partitions_all_users():
    rng = np.random.default_rng(0)
    gains = rng.uniform(0.1, 1.0, (7, 3))
    state = reassign_users(state_for_gains(gains))
    flat = sorted(k for members in state.assignments for k in members)
    assert flat == list(range(7))


def test_each_user_its_own_cluster():
    # N = K, users far apart: singleton clusters, beams aimed at their users
    users = users_at((0.7, 0.7), (7.3, 0.7), (4.0, 7.3))
    state = vuc_cluster(AP, users, 3, COARSE, PHY)
    assert state.converged
    sizes = sorted(len(m) for m in state.assignments)
    assert sizes == [1, 1, 1]
    for n, members in enumerate(state.assignments):
        k = members[0]
        beam = state.beams[n]
        # same physical direction can carry two (alpha, beta) labels, so
        # compare orientations: within one grid quantum of exact pointing
        v = users[k].position - AP
        n_beam = orientation_from_angles(beam.alpha_deg, beam.beta_deg)
        cos_err = float(n_beam @ (v / np.linalg.norm(v)))
        assert cos_err >= np.cos(np.radians(COARSE.alpha_step + COARSE.beta_step))
        assert beam.gamma == COARSE.gammas[-1]  # single-user optimum focuses fully


def test_single_cluster_equals_single_beam_solver():
    rng = np.random.default_rng(1)
    users = random_users(rng, 5)
    state = vuc_cluster(AP, users, 1, COARSE, PHY)
    assert state.converged
    assert state.assignments == ((0, 1, 2, 3, 4),)
    beam, _, _ = solve_single_beam(AP, users, COARSE, PHY)
    assert state.beams[0] == beam


def test_two_far_users_get_nearest_beams():
    users = users_at((0.7, 4.0), (7.3, 4.0))
    state = vuc_cluster(AP, users, 2, COARSE, PHY)
    assert state.converged
    # brute force over both partitions into non-empty singletons
    phy_beam = PhyParams(p=PHY.p / 2.0)
    grid = build_gain_grid(AP, users, COARSE, PHY.A_r)
    expected = {}
    for k in (0, 1):
        beam, _ = solve_exhaustive(grid.subset([k]), phy_beam)
        expected[k] = beam
    for n, members in enumerate(state.assignments):
        assert len(members) == 1
        assert state.beams[n] == expected[members[0]]
    # each beam's strongest user is its own
    for n, members in enumerate(state.assignments):
        assert int(np.argmax(state.gains[:, n])) == members[0]


def test_swapped_initial_assignment_converges_same():
    users = users_at((0.7, 4.0), (7.3, 4.0))
    a = vuc_cluster(AP, users, 2, COARSE, PHY)
    b = vuc_cluster(AP, users[::-1], 2, COARSE, PHY)
    beams_a = {beam for beam in a.beams}
    beams_b = {beam for beam in b.beams}
    assert beams_a == beams_b


def test_assignments_disjoint_and_complete():
    rng = np.random.default_rng(2)
    for _ in range(10):
        k = int(rng.integers(2, 8))
        n = int(rng.integers(1, k + 1))
        users = random_users(rng, k)
        state = vuc_cluster(AP, users, n, COARSE, PHY)
        flat = [u for members in state.assignments for u in members]
        assert sorted(flat) == list(range(k))
        assert len(flat) == len(set(flat))


def test_converged_state_is_fixed_point():
    rng = np.random.default_rng(3)
    users = random_users(rng, 6)
    state = vuc_cluster(AP, users, 3, COARSE, PHY)
    assert state.converged
    # one more solve + reassign from the returned assignments changes nothing
    from dataclasses import replace

    phy_beam = PhyParams(p=PHY.p / 3.0)
    grid = build_gain_grid(AP, users, COARSE, PHY.A_r)
    beams = tuple(
        solve_exhaustive(grid.subset(members), phy_beam)[0] for members in state.assignments
    )
    assert beams == state.beams
    gains = np.stack([grid.gains[:, grid.index_of(b)] for b in beams], axis=1)
    np.testing.assert_array_equal(gains, state.gains)
    assert reassign_users(replace(state, gains=gains)).assignments == state.assignments


def test_deterministic_given_seed():
    rng_users = np.random.default_rng(4)
    users = random_users(rng_users, 6)
    a = vuc_cluster(AP, users, 3, COARSE, PHY, rng=np.random.default_rng(9))
    b = vuc_cluster(AP, users, 3, COARSE, PHY, rng=np.random.default_rng(9))
    assert a.assignments == b.assignments
    assert a.beams == b.beams
    np.testing.assert_array_equal(a.gains, b.gains)
    assert a.converged == b.converged
    assert a.n_iterations == b.n_iterations


def test_colocated_users_fall_back_to_idle_beam():
    # identical users make every restart tie-break to beam 0; the empty
    # cluster is eventually deleted and its LED left idle
    users = users_at((2.0, 2.0), (2.0, 2.0))
    state = vuc_cluster(AP, users, 2, COARSE, PHY)
    assert state.converged
    assert state.assignments == ((0, 1), ())
    assert state.beams[0] is not None
    assert state.beams[1] is None
    np.testing.assert_array_equal(state.gains[:, 1], 0.0)


def test_beam_count_bounds():
    users = users_at((2.0, 2.0))
    with pytest.raises(ValueError):
        vuc_cluster(AP, users, 2, COARSE, PHY)
    with pytest.raises(ValueError):
        vuc_cluster(AP, users, 0, COARSE, PHY)


def test_well_separated_instances_form_singletons():
    # N = K with pairwise separation > 4 m: every cluster is a singleton
    rng = np.random.default_rng(5)
    found = 0
    while found < 10:
        users = random_users(rng, 3)
        pos = np.stack([u.position for u in users])
        dists = np.linalg.norm(pos[:, None] - pos[None, :], axis=-1)
        if dists[np.triu_indices(3, 1)].min() <= 4.0:
            continue
        found += 1
        state = vuc_cluster(AP, users, 3, COARSE, PHY)
        assert state.converged
        assert sorted(len(m) for m in state.assignments) == [1, 1, 1]
