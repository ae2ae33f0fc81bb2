import math

import numpy as np
import pytest

from fibrelin.errors import NonFinite, PreconditionError, SingularJacobian
from fibrelin.normal_form import build_normal_form
from fibrelin.ode import InputSignal, Trajectory, integrate
from fibrelin.sim import fibre_invariance, integrate_linear, lift_curve, simulate, verify_projection
from fibrelin.system import parse_system

X0 = [0.5, 0.2, -0.1]


def decay(x, u, t):
    return -x


class TestIntegrate:
    def test_exponential_decay(self):
        tr = integrate(decay, [1.0], 0.0, 1.0, 1e-3)
        assert abs(tr.final[0] - math.exp(-1)) <= 1e-9
        assert len(tr.times) == len(tr.states) == len(tr.input_trace) == 1001

    def test_constant_field(self):
        tr = integrate(lambda x, u, t: np.zeros_like(x), [1.0, -2.0], 0.0, 1.0, 0.1)
        assert np.all(tr.states == [1.0, -2.0])

    def test_uniform_step(self):
        tr = integrate(decay, [1.0], 0.0, 1.0, 0.01)
        assert np.allclose(np.diff(tr.times), 0.01, rtol=0, atol=1e-15)

    def test_fourth_order(self):
        errs = [abs(integrate(decay, [1.0], 0.0, 1.0, dt).final[0] - math.exp(-1)) for dt in (0.1, 0.05)]
        assert 14 <= errs[0] / errs[1] <= 17

    def test_time_reversal_linear(self):
        A = np.array([[0.0, 1.0], [-1.0, -0.2]])
        fwd = integrate(lambda x, u, t: A @ x, [1.0, 0.5], 0.0, 1.0, 1e-3)
        back = integrate(lambda x, u, t: -A @ x, fwd.final, 0.0, 1.0, 1e-3)
        assert np.max(np.abs(back.final - [1.0, 0.5])) <= 1e-8

    def test_input_sampled_at_stage_times(self):
        seen = []
        integrate(lambda x, u, t: (seen.append((t, u)), np.zeros(1))[1], [0.0], "2*t", 0.2, 0.1)
        assert all(u == pytest.approx(2 * t) for t, u in seen)
        assert sorted({round(t, 12) for t, _ in seen}) == [0.0, 0.05, 0.1, 0.15, 0.2]

    def test_blow_up_reports_time(self):
        with pytest.raises(NonFinite) as info:
            integrate(lambda x, u, t: x ** 2, [1.0], 0.0, 2.0, 0.01)
        assert 0.9 < info.value.time < 2.0

    @pytest.mark.parametrize("dt, t_end", [(0.0, 1.0), (-1e-3, 1.0), (0.1, 0.05)])
    def test_preconditions(self, dt, t_end):
        with pytest.raises(PreconditionError):
            integrate(decay, [1.0], 0.0, t_end, dt)


class TestInputSignal:
    def test_constant(self):
        assert InputSignal(2.5)(7.0) == 2.5

    def test_expression(self):
        assert InputSignal("sin(t)")(0.5) == pytest.approx(math.sin(0.5))

    def test_rejects_state_symbols(self):
        with pytest.raises(Exception):
            InputSignal("x1 + t")


class TestCsv:
    def test_round_trip_full_precision(self):
        tr = integrate(decay, [1.0, 1 / 3], "sin(t)", 0.01, 1e-3, names=("x1", "x2"))
        text = tr.to_csv()
        assert text.splitlines()[0] == "t,x1,x2,u"
        back = Trajectory.from_csv(text)
        assert np.array_equal(back.states, tr.states)
        assert np.array_equal(back.times, tr.times)
        assert np.array_equal(back.input_trace, tr.input_trace)

    def test_malformed(self):
        from fibrelin.errors import ParseError
        with pytest.raises(ParseError) as info:
            Trajectory.from_csv("t,z1,v\n0,1,0\n0.1,oops,0\n")
        assert info.value.line == 3


class TestVerifyProjection:
    def test_fixture_lifted(self, example, example_nf):
        rep = verify_projection(example, example_nf, X0, "sin(t)", 1.0, 1e-3)
        assert rep.max_error <= 1e-6
        assert rep.to_dict()["mode"] == "lifted"

    def test_full_system_also_tracks(self, example, example_nf):
        rep = verify_projection(example, example_nf, X0, "sin(t)", 1.0, 1e-3, mode="full")
        assert rep.max_error <= 1e-6

    def test_zero_input_on_zero_fibre(self, example, example_nf):
        rep = verify_projection(example, example_nf, [0.7, 0.0, 0.0], 0.0, 1.0, 1e-3)
        assert np.max(np.abs(rep.quotient.states)) == 0.0
        assert rep.max_error <= 1e-9

    def test_heuristic_completion(self, nocomp, nocomp_nf):
        assert verify_projection(nocomp, nocomp_nf, X0, "sin(t)").max_error <= 1e-6

    def test_curved_output(self):
        # Phi is nonlinear here, so agreement is no longer bit-exact (round-off only).
        s = parse_system('system "curved"\nstates x1 x2 x3\ninput u\n'
                         'f = [-x1, x1*x2, x2 + x3^2]\ng = [exp(x2), 1, 0]\nh = x3 + x1^2/10\n'
                         'point = [1, 0, 0]\n')
        nf = build_normal_form(s)
        rep = verify_projection(s, nf, [1.0, 0.1, -0.1], "sin(t)", 1.0, 1e-2)
        assert 0 < rep.max_error <= 1e-6


class TestLiftCurve:
    def test_constant_base(self, example_nf):
        times = np.linspace(0, 1, 11)
        base = Trajectory(times, np.tile([0.3, -0.7], (11, 1)), np.zeros(11), ("z1", "z2"))
        lifted = lift_curve(example_nf, base, [1.0, -0.7, 0.3])
        assert np.max(np.abs(lifted.states - [1.0, -0.7, 0.3])) == 0.0

    def test_matches_lifted_trajectory(self, example, example_nf):
        rep = verify_projection(example, example_nf, X0, "sin(t)", 1.0, 1e-3)
        lifted = lift_curve(example_nf, rep.quotient, X0)
        assert np.max(np.abs(lifted.states - rep.lifted.states)) <= 1e-5
        phi = example_nf.phi_program()
        proj = max(np.max(np.abs(phi(x) - z)) for x, z in zip(lifted.states, rep.quotient.states))
        assert proj <= 1e-6

    def test_with_system_evaluator(self, example, example_nf):
        rep = verify_projection(example, example_nf, X0, "sin(t)", 0.5, 1e-3)
        a = lift_curve(example_nf, rep.quotient, X0)
        b = lift_curve(example_nf, rep.quotient, X0, sys=example)
        assert np.max(np.abs(a.states - b.states)) <= 1e-14

    def test_start_mismatch(self, example_nf):
        z = integrate_linear(example_nf, [0.3, -0.7], "sin(t)", 0.1, 1e-2)
        with pytest.raises(PreconditionError):
            lift_curve(example_nf, z, [0.0, 0.0, 0.0])

    def test_wrong_dimension(self, example_nf):
        base = Trajectory(np.array([0.0, 0.1]), np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(PreconditionError):
            lift_curve(example_nf, base, [0.0, 0.0, 0.0])


class TestFibreInvariance:
    @pytest.mark.parametrize("fixture", ["example", "nocomp"])
    def test_ten_seeded_starts(self, fixture, request):
        sys = request.getfixturevalue(fixture)
        nf = build_normal_form(sys)
        rng = np.random.default_rng(5)
        for _ in range(10):
            drift, tr = fibre_invariance(sys, nf, rng.uniform(-1, 1, 3), "0.5*sin(t)")
            assert drift <= 1e-6

    def test_singular_jacobian_along_trajectory(self):
        s = parse_system('system "cubic"\nstates x1 x2\ninput u\nf = [-1, x1]\ng = [0, 1]\nh = x2\n'
                         'complement = [x1^3]\npoint = [1, 0]\n')
        nf = build_normal_form(s)
        with pytest.raises(SingularJacobian) as info:
            simulate(s, nf, "zero", [0.5, 0.0], 0.0, 1.0, 1e-3)
        assert info.value.time == pytest.approx(0.5, abs=2e-3)


class TestSimulateModes:
    def test_zero_mode(self, example, example_nf):
        tr = simulate(example, example_nf, "zero", [1, 0, 0])
        assert tr.final[0] == pytest.approx(0.367879, abs=1e-6)

    def test_linear_from_rest(self, example, example_nf):
        tr = simulate(example, example_nf, "linear", [0, 0], 0.0)
        assert np.all(tr.states == 0)

    def test_lifted_vs_linear(self, example, example_nf):
        lin = simulate(example, example_nf, "linear", [0.3, -0.7], "sin(t)")
        lifted = simulate(example, example_nf, "lifted", [0.1, -0.7, 0.3], "sin(t)")
        phi = example_nf.phi_program()
        err = max(np.max(np.abs(phi(x) - z)) for x, z in zip(lifted.states, lin.states))
        assert err <= 1e-6

    def test_full_mode_needs_no_normal_form(self, example):
        tr = simulate(example, None, "full", [0.1, 0.2, 0.3], 0.0, 0.1, 1e-2)
        assert tr.states.shape == (11, 3)

    @pytest.mark.parametrize("mode, x0", [("linear", [0, 0, 0]), ("zero", [0, 0]), ("bogus", [0, 0, 0])])
    def test_bad_arguments(self, example, example_nf, mode, x0):
        with pytest.raises(PreconditionError):
            simulate(example, example_nf, mode, x0)
