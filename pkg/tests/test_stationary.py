import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tunnelsplit.errors import OpacityOverflow
from tunnelsplit.potential import PotentialSpec, make_piecewise, make_rectangular
from tunnelsplit.stationary import (
    BoundaryAmplitudes,
    EnergyMode,
    ScatteringAmplitudes,
    evaluate_state,
    segment_wavevector,
    solve_full,
    state_from_left,
    state_from_right,
    total_transfer,
)

from _oracles import integrate_stationary, rectangular_transmission

CANONICAL = make_rectangular(1.0, 2.0, -1.0)


class TestEnergyMode:
    def test_wavenumber(self):
        assert EnergyMode(2.0).k == 2.0

    def test_rejects_nonpositive(self):
        for bad in (0.0, -1.0, float("nan")):
            with pytest.raises(ValueError):
                EnergyMode(bad)

    def test_from_k_roundtrip(self):
        mode = EnergyMode.from_k(1.0)
        assert mode.E == 0.5


class TestSegmentWavevector:
    def test_propagating(self):
        q, degenerate = segment_wavevector(2.0, 0.0)
        assert q == 2.0 and not degenerate

    def test_evanescent(self):
        q, degenerate = segment_wavevector(0.5, 2.5)
        assert q == 2j and not degenerate

    def test_degenerate(self):
        q, degenerate = segment_wavevector(1.0, 1.0)
        assert q == 0 and degenerate


class TestTransferMatrix:
    def test_free_is_identity(self):
        M = total_transfer(make_rectangular(0.0, 2.0, 0.0), EnergyMode(2.0))
        assert abs(M[0, 0]) == pytest.approx(1.0, abs=1e-12)
        assert abs(M[0, 1]) < 1e-12 and abs(M[1, 0]) < 1e-12

    def test_determinant_one(self):
        for spec in (
            CANONICAL,
            make_piecewise(0.0, [(1, 0.5), (1, 2.0), (1, 0.5)]),
            PotentialSpec(a=-1.0, segments=((0.7, 1.3), (1.1, -0.4))),
        ):
            for E in np.geomspace(0.01, 100.0, 25):
                M = total_transfer(spec, EnergyMode(float(E)))
                det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
                assert abs(det - 1.0) < 1e-10

    def test_overflow_reported(self):
        with pytest.raises(OpacityOverflow):
            total_transfer(make_rectangular(900.0, 10.0, 0.0), EnergyMode(0.1))


class TestSolveFull:
    def test_free_particle(self):
        amps = solve_full(make_rectangular(0.0, 2.0, 0.0), EnergyMode(1.3))
        assert abs(amps.A_T) == pytest.approx(1.0, abs=1e-12)
        assert abs(amps.A_R) < 1e-12
        assert amps.T == pytest.approx(1.0, abs=1e-12)

    def test_canonical_closed_form(self):
        amps = solve_full(CANONICAL, EnergyMode(0.5))
        want = rectangular_transmission(0.5, 1.0, 2.0)
        assert amps.T == pytest.approx(want, rel=1e-13)
        # kappa = 1 here, so T = 1/(1 + sinh(2)^2)
        assert want == pytest.approx(1.0 / (1.0 + math.sinh(2.0) ** 2), rel=1e-14)

    def test_degenerate_energy_equals_height(self):
        amps = solve_full(CANONICAL, EnergyMode(1.0))
        assert amps.T == pytest.approx(1.0 / (1.0 + 1.0 * 4.0 / 2.0), rel=1e-13)

    def test_closed_form_across_regimes(self):
        for V0, L, E in [
            (0.25, 0.5, 0.1),
            (2.0, 3.0, 0.4),
            (2.0, 3.0, 6.0),
            (8.0, 8.0, 0.02),
            (5.0, 1.5, 5.0),
        ]:
            amps = solve_full(make_rectangular(V0, L, 0.0), EnergyMode(E))
            assert amps.T == pytest.approx(
                rectangular_transmission(E, V0, L), rel=1e-12
            ), (V0, L, E)

    def test_unitarity_log_grid(self):
        specs = [
            CANONICAL,
            make_piecewise(0.0, [(0.5, 0.9), (1.0, 3.1), (0.5, 0.9)]),
            PotentialSpec(a=0.0, segments=((1.0, 2.0), (0.5, -1.0), (0.25, 0.7))),
        ]
        for spec in specs:
            for E in np.geomspace(0.01, 100.0, 40):
                amps = solve_full(spec, EnergyMode(float(E)))
                assert abs(amps.T + amps.R - 1.0) < 1e-10


class TestEvaluateState:
    def test_free_plane_wave_exact(self):
        spec = make_rectangular(0.0, 2.0, 0.0)
        mode = EnergyMode(2.0)
        x = np.linspace(-3.0, 4.0, 257)
        field = evaluate_state(spec, mode, BoundaryAmplitudes(1.0, 0.0), x)
        np.testing.assert_allclose(field.values, np.exp(1j * mode.k * x), rtol=0, atol=1e-13)

    def test_solve_consistency_right_side(self):
        mode = EnergyMode(0.5)
        amps = solve_full(CANONICAL, mode)
        x = np.linspace(1.0, 6.0, 101)
        field = evaluate_state(CANONICAL, mode, BoundaryAmplitudes(1.0, amps.A_R), x)
        np.testing.assert_allclose(
            field.values, amps.A_T * np.exp(1j * mode.k * x), rtol=0, atol=1e-10
        )

    def test_linearity(self):
        rng = np.random.default_rng(7)
        mode = EnergyMode(0.8)
        x = np.linspace(-4.0, 5.0, 301)
        for _ in range(5):
            a1, a2 = rng.normal(size=2) + 1j * rng.normal(size=2)
            b1 = BoundaryAmplitudes(a1, a2)
            b2 = BoundaryAmplitudes(a2, a1)
            alpha, beta = rng.normal(size=2) + 1j * rng.normal(size=2)
            combined = BoundaryAmplitudes(
                alpha * b1.incoming + beta * b2.incoming,
                alpha * b1.outgoing + beta * b2.outgoing,
            )
            lhs = evaluate_state(CANONICAL, mode, combined, x).values
            rhs = (
                alpha * evaluate_state(CANONICAL, mode, b1, x).values
                + beta * evaluate_state(CANONICAL, mode, b2, x).values
            )
            np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)

    def test_against_ode_integration(self):
        """|psi| from the cascade matches direct RK integration, >= 10 specs."""
        rng = np.random.default_rng(11)
        for trial in range(10):
            n_seg = int(rng.integers(1, 4))
            widths = rng.uniform(0.4, 1.5, n_seg)
            heights = rng.uniform(-1.5, 2.5, n_seg)
            a = float(rng.uniform(-1.0, 0.5))
            spec = PotentialSpec(
                a=a, segments=tuple((float(w), float(h)) for w, h in zip(widths, heights))
            )
            E = float(rng.uniform(0.2, 4.0))
            mode = EnergyMode(E)
            amps = solve_full(spec, mode)
            x = np.linspace(spec.a - 5.0, spec.b + 5.0, 601)
            got = evaluate_state(spec, mode, BoundaryAmplitudes(1.0, amps.A_R), x).values

            k = mode.k
            psi0 = np.exp(1j * k * x[0]) + amps.A_R * np.exp(-1j * k * x[0])
            dpsi0 = 1j * k * (np.exp(1j * k * x[0]) - amps.A_R * np.exp(-1j * k * x[0]))
            edges = spec.edges()
            table = [
                (float(edges[i]), float(edges[i + 1]), h)
                for i, (_, h) in enumerate(spec.segments)
            ]
            want = integrate_stationary(spec.a, spec.b, table, E, psi0, dpsi0, x)
            scale = np.max(np.abs(want))
            assert np.max(np.abs(np.abs(got) - np.abs(want))) < 1e-6 * scale, trial


class TestStateCascades:
    def test_backward_matches_forward(self):
        mode = EnergyMode(0.7)
        fwd = state_from_left(CANONICAL, mode, 1.0, 0.25 - 0.1j)
        back = state_from_right(CANONICAL, mode, fwd.right[0], fwd.right[1])
        x = np.linspace(-4.0, 4.0, 401)
        np.testing.assert_allclose(back.values(x), fwd.values(x), rtol=0, atol=1e-12)
        assert back.left[0] == pytest.approx(1.0, abs=1e-12)

    def test_derivative_consistent_with_fd(self):
        mode = EnergyMode(0.9)
        state = state_from_left(CANONICAL, mode, 1.0, 0.3j)
        x = np.linspace(-0.9, 0.9, 11)
        h = 1e-6
        fd = (state.values(x + h) - state.values(x - h)) / (2 * h)
        np.testing.assert_allclose(state.derivative(x), fd, rtol=1e-8, atol=1e-8)


@settings(deadline=None, max_examples=60)
@given(
    v0=st.floats(min_value=0.0, max_value=8.0),
    length=st.floats(min_value=0.1, max_value=6.0),
    energy=st.floats(min_value=0.02, max_value=50.0),
)
def test_unitarity_property(v0, length, energy):
    amps = solve_full(make_rectangular(v0, length, 0.0), EnergyMode(energy))
    assert abs(amps.T + amps.R - 1.0) < 1e-10


def test_amplitude_invariant_enforced():
    from tunnelsplit.errors import SolveSingular

    with pytest.raises(SolveSingular):
        ScatteringAmplitudes(A_T=1.0 + 0j, A_R=1.0 + 0j)
