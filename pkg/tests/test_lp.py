import numpy as np
import pytest

from omnical import kernels
from omnical._simplex_py import SolverError, solve_game_lp as solve_py
from omnical.forecaster import GridSpec, solve_round_minmax
from omnical.oracles import brute_minmax

try:
    from omnical._simplex_cy import solve_game_lp as solve_cy

    HAVE_CY = True
except ImportError:
    HAVE_CY = False


def two_event_instance():
    """Grid {0, 0.5, 1}; one event firing at p >= 0.5 with + weight 0.5,
    one firing at p < 0.5 with - weight 0.5. Optimal play must randomize:
    every point mass is worth at least 0.25, the optimum 0.125."""
    grid = GridSpec(d_free=1, spacing=0.5)
    pts = grid.points()
    fire = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0]])
    q = np.zeros((2, 1, 2))
    q[0, 0, 0] = 0.5
    q[1, 0, 1] = 0.5
    return grid, pts, fire, q


class TestWorkedInstance:
    def test_lp_value_and_support(self):
        grid, pts, fire, q = two_event_instance()
        dist, value, _ = solve_round_minmax(q, fire, np.array([0, 1]), grid, pts)
        assert value == pytest.approx(0.125, abs=1e-9)
        support = {float(p[0]): pr for p, pr in zip(dist.points, dist.probs)}
        assert support == {0.0: pytest.approx(0.5), 0.5: pytest.approx(0.5)}

    def test_brute_force_agrees(self):
        _, pts, fire, q = two_event_instance()
        brute = brute_minmax(q, fire, pts, 0.01)
        assert brute == pytest.approx(0.125, abs=0.01)

    def test_every_pure_point_is_worse(self):
        _, pts, fire, q = two_event_instance()
        delta = q[:, 0, 0] - q[:, 0, 1]
        for g in range(3):
            dterm = float(delta @ fire[:, g])
            value = dterm * pts[g, 0] + max(0.0, -dterm)
            assert value >= 0.25 - 1e-12


class TestDegenerateInstances:
    def test_no_events_returns_point_mass(self):
        grid = GridSpec(d_free=1, spacing=0.5)
        pts = grid.points()
        dist, value, iters = solve_round_minmax(
            np.zeros((0, 1, 2)), np.zeros((0, 3)), np.zeros(0, dtype=int), grid, pts
        )
        assert value == 0.0 and iters == 0
        assert np.array_equal(dist.points, pts[:1]) and dist.probs[0] == 1.0

    def test_symmetric_weights_cancel(self):
        grid = GridSpec(d_free=1, spacing=0.5)
        pts = grid.points()
        fire = np.ones((1, 3))
        q = np.zeros((1, 1, 2))
        q[0, 0, 0] = 0.5
        q[0, 0, 1] = 0.5
        dist, value, _ = solve_round_minmax(q, fire, np.array([0]), grid, pts)
        assert value == 0.0

    def test_empty_grid_rejected(self):
        with pytest.raises(SolverError):
            solve_py(np.zeros(0), np.zeros((0, 0)))


def random_round_lp(rng, n=None, m=None):
    n = n or int(rng.integers(1, 40))
    m = m if m is not None else int(rng.integers(0, 4))
    cost = rng.normal(size=n)
    dmat = rng.normal(size=(m, n))
    return cost, dmat


class TestOracleAgreement:
    def test_random_capped_instances(self):
        # d=1, <=3 grid points, <=4 events, random fire patterns and weights
        rng = np.random.default_rng(2024)
        grid = GridSpec(d_free=1, spacing=0.5)
        pts = grid.points()
        for _ in range(50):
            n_ev = int(rng.integers(1, 5))
            fire = (rng.random((n_ev, 3)) < 0.5).astype(float)
            q = rng.random((n_ev, 1, 2))
            q /= q.sum()
            _, value, _ = solve_round_minmax(q, fire, np.arange(n_ev), grid, pts)
            brute = brute_minmax(q, fire, pts, 0.01)
            assert abs(value - brute) <= 0.05
            assert value <= brute + 1e-9  # the LP cannot be worse than a coarse search


@pytest.mark.skipif(not HAVE_CY, reason="compiled kernel not built")
class TestBackendEquivalence:
    def test_bit_identical_outputs(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            cost, dmat = random_round_lp(rng)
            p1, v1, i1 = solve_py(cost, dmat)
            p2, v2, i2 = solve_cy(cost, dmat)
            assert np.array_equal(p1, p2)
            assert v1 == v2 and i1 == i2

    def test_selector_reports_backend(self):
        assert kernels.BACKEND in ("py", "cy")


class TestBasicLpProperties:
    def test_simplex_constraint_respected(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            cost, dmat = random_round_lp(rng)
            psi, value, _ = solve_py(cost, dmat)
            assert psi.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(psi >= 0.0)
            direct = float(cost @ psi) + float(
                np.sum(np.maximum(0.0, -(dmat @ psi)))
            ) if dmat.size else float(cost @ psi)
            assert value == pytest.approx(direct, abs=1e-8)

    def test_no_constraints_reduces_to_min_cost(self):
        cost = np.array([0.3, -0.2, 0.5])
        psi, value, _ = solve_py(cost, np.zeros((0, 3)))
        assert value == pytest.approx(-0.2)
        assert psi[1] == pytest.approx(1.0)
