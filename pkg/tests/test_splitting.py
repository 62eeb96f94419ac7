import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tunnelsplit.errors import AsymmetricPotential, NotNormalized
from tunnelsplit.potential import PotentialSpec, make_piecewise, make_rectangular
from tunnelsplit.stationary import EnergyMode, solve_full
from tunnelsplit.splitting import (
    build_decomposition,
    derivative_jump,
    interference_density,
    split_amplitude_candidates,
)

CANONICAL = make_rectangular(1.0, 2.0, -1.0)


def grid_for(spec, pad=5.0, n=2001):
    half = spec.width / 2.0 + pad
    return spec.x_c + np.linspace(-half, half, n)


class TestSplitCandidates:
    def test_full_transmission(self):
        plus, minus = split_amplitude_candidates(1.0, 0.0)
        assert plus.A_tr_in == 1.0 and plus.A_ref_in == 0.0
        assert minus.A_tr_in == 1.0 and minus.A_ref_in == 0.0

    def test_half_and_half(self):
        plus, minus = split_amplitude_candidates(0.5, 0.5)
        assert plus.A_tr_in == pytest.approx(0.5 + 0.5j)
        assert plus.A_ref_in == pytest.approx(0.5 - 0.5j)
        assert minus.A_tr_in == pytest.approx(0.5 - 0.5j)

    def test_rational_point(self):
        plus, _ = split_amplitude_candidates(0.36, 0.64)
        assert plus.A_tr_in == pytest.approx(0.36 + 0.48j)

    def test_rejects_unnormalized(self):
        with pytest.raises(NotNormalized):
            split_amplitude_candidates(0.6, 0.6)

    def test_sum_is_exactly_one_imag(self):
        plus, minus = split_amplitude_candidates(0.3, 0.7)
        for cand in (plus, minus):
            assert (cand.A_tr_in + cand.A_ref_in).imag == 0.0
            assert abs(cand.A_tr_in + cand.A_ref_in - 1.0) < 1e-15

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_moduli_carry_channel_weights(self, T):
        R = 1.0 - T
        plus, minus = split_amplitude_candidates(T, R)
        for cand in (plus, minus):
            assert abs(cand.A_tr_in) ** 2 == pytest.approx(T, abs=1e-12)
            assert abs(cand.A_ref_in) ** 2 == pytest.approx(R, abs=1e-12)

    @given(
        st.floats(min_value=0.05, max_value=0.95),
        st.floats(min_value=0.0, max_value=2.0 * math.pi),
    )
    def test_uniqueness_on_constraint_circle(self, T, theta):
        """A point with |A_tr| = sqrt(T) solves the constraint system only
        if it coincides with one of the two candidates."""
        R = 1.0 - T
        candidate = math.sqrt(T) * complex(math.cos(theta), math.sin(theta))
        satisfies = abs(abs(1.0 - candidate) ** 2 - R) < 1e-12
        plus, minus = split_amplitude_candidates(T, R)
        is_root = min(abs(candidate - plus.A_tr_in), abs(candidate - minus.A_tr_in)) < 1e-6
        if satisfies:
            assert is_root
        if not is_root:
            assert not satisfies


class TestBuildDecomposition:
    def test_free_particle_has_no_reflection_subwave(self):
        spec = make_rectangular(0.0, 2.0, 0.0)
        x = grid_for(spec)
        dec = build_decomposition(spec, EnergyMode(1.0), x)
        assert np.max(np.abs(dec.ref_solution)) < 1e-12
        assert np.max(np.abs(dec.ref_component)) < 1e-12
        np.testing.assert_allclose(
            dec.tr_solution, np.exp(1j * dec.mode.k * x), rtol=0, atol=1e-12
        )

    def test_exactly_one_root_is_odd(self):
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), grid_for(CANONICAL))
        odd_mid, even_mid = dec.midpoint_residuals
        assert odd_mid < 1e-8
        assert even_mid > 1e-8
        assert even_mid > 0.01 * np.max(np.abs(dec.even_ref_state.values(dec.x)))

    def test_identity_pointwise(self):
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), grid_for(CANONICAL))
        assert dec.identity_residual < 1e-10
        resid = np.max(np.abs(dec.tr_component + dec.ref_component - dec.full))
        assert resid < 1e-10

    def test_split_amplitudes_carry_weights(self):
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), grid_for(CANONICAL))
        assert abs(dec.split.A_tr_in) ** 2 == pytest.approx(dec.amplitudes.T, abs=1e-10)
        assert abs(dec.split.A_ref_in) ** 2 == pytest.approx(dec.amplitudes.R, abs=1e-10)
        assert dec.split.parity == "odd"
        assert dec.even_split.parity == "even"
        assert dec.split.root_sign != dec.even_split.root_sign

    def test_piecewise_cut_definitions(self):
        x = grid_for(CANONICAL)
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), x)
        right = x > dec.x_c
        assert np.all(dec.ref_component[right] == 0.0)
        np.testing.assert_array_equal(dec.tr_component[right], dec.full[right])
        left = x <= dec.x_c
        np.testing.assert_array_equal(dec.tr_component[left], dec.tr_solution[left])
        np.testing.assert_array_equal(dec.ref_component[left], dec.ref_solution[left])

    def test_parity_covariance(self):
        x = grid_for(CANONICAL)
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), x)
        mirrored = dec.ref_state.values(2.0 * dec.x_c - x)
        scale = np.max(np.abs(dec.ref_solution))
        assert np.max(np.abs(mirrored + dec.ref_solution)) < 1e-7 * scale

    def test_right_side_carries_transmitted_wave(self):
        x = np.linspace(CANONICAL.b, CANONICAL.b + 6.0, 301)
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), x)
        expected = dec.amplitudes.A_T * np.exp(1j * dec.mode.k * x)
        np.testing.assert_allclose(dec.tr_component, expected, rtol=0, atol=1e-12)

    def test_refuses_asymmetric(self):
        spec = PotentialSpec(a=0.0, segments=((1.0, 0.5), (1.0, 2.0)))
        with pytest.raises(AsymmetricPotential):
            build_decomposition(spec, EnergyMode(0.5), np.linspace(-3, 5, 101))

    def test_multisegment_barrier(self):
        spec = make_piecewise(-1.5, [(1, 0.5), (1, 2.0), (1, 0.5)])
        x = grid_for(spec)
        dec = build_decomposition(spec, EnergyMode(0.8), x)
        assert dec.identity_residual < 1e-10
        assert dec.midpoint_residuals[0] < 1e-8
        assert dec.parity_residual < 1e-7 * np.max(np.abs(dec.ref_solution))

    def test_even_segment_count_midpoint_on_edge(self):
        spec = make_piecewise(0.0, [(1.0, 2.0), (1.0, 2.0)])
        dec = build_decomposition(spec, EnergyMode(0.5), grid_for(spec))
        assert dec.midpoint_residuals[0] < 1e-8
        assert dec.identity_residual < 1e-10

    def test_deep_tunneling_remains_accurate(self):
        spec = make_rectangular(8.0, 8.0, -4.0)
        dec = build_decomposition(spec, EnergyMode(0.02), grid_for(spec, pad=3.0))
        assert dec.identity_residual < 1e-10
        assert dec.midpoint_residuals[0] < 1e-8
        assert dec.midpoint_residuals[1] > 1e-8

    def test_full_state_matches_direct_solve(self):
        x = grid_for(CANONICAL)
        mode = EnergyMode(0.5)
        dec = build_decomposition(CANONICAL, mode, x)
        amps = solve_full(CANONICAL, mode)
        left = x < CANONICAL.a
        expected = np.exp(1j * mode.k * x[left]) + amps.A_R * np.exp(-1j * mode.k * x[left])
        np.testing.assert_allclose(dec.full[left], expected, rtol=0, atol=1e-12)

    def test_grid_of_cases(self):
        for V0 in (0.25, 1.0, 4.0):
            for L in (0.5, 2.0, 5.0):
                spec = make_rectangular(V0, L, 0.0)
                for E in np.geomspace(0.05, 20.0, 9):
                    dec = build_decomposition(spec, EnergyMode(float(E)), grid_for(spec, n=401))
                    odd_mid, even_mid = dec.midpoint_residuals
                    assert odd_mid < 1e-8
                    assert even_mid > 1e-8
                    assert dec.identity_residual < 1e-10


class TestDerivativeJump:
    def test_free_case_no_jump(self):
        spec = make_rectangular(0.0, 2.0, 0.0)
        coarse = build_decomposition(spec, EnergyMode(1.0), grid_for(spec, n=2001))
        fine = build_decomposition(spec, EnergyMode(1.0), grid_for(spec, n=8001))
        for dec, bound in ((coarse, 1e-3), (fine, 1e-4)):
            jump_tr, jump_ref = derivative_jump(dec)
            # ref vanishes to roundoff; tr is smooth so its estimated jump
            # is pure stencil error, O(h^2)
            assert abs(jump_ref) < 1e-14
            assert abs(jump_tr) < bound
        jt_coarse, _ = derivative_jump(coarse)
        jt_fine, _ = derivative_jump(fine)
        assert abs(jt_fine) < abs(jt_coarse) / 8.0

    def test_jumps_cancel_at_second_order(self):
        mode = EnergyMode(0.5)
        sums, jumps = [], []
        for n in (501, 1001, 2001):
            dec = build_decomposition(CANONICAL, mode, grid_for(CANONICAL, n=n))
            jt, jr = derivative_jump(dec)
            sums.append(abs(jt + jr))
            jumps.append(jt)
        # the individual jump converges to the sub-solution derivative step
        expected = dec.ref_state.derivative(np.array([dec.x_c]))[0]
        assert jumps[-1] == pytest.approx(expected, rel=1e-3)
        # Richardson: halving h divides the cancellation defect by ~4
        order = math.log(sums[0] / sums[2]) / math.log(4.0)
        assert order > 1.6

    def test_ref_jump_is_minus_left_derivative(self):
        dec = build_decomposition(CANONICAL, EnergyMode(0.5), grid_for(CANONICAL, n=4001))
        _, jump_ref = derivative_jump(dec)
        left_deriv = dec.ref_state.derivative(np.array([dec.x_c]))[0]
        assert jump_ref == pytest.approx(-left_deriv, rel=1e-4)


def test_interference_density_integrates_to_overlap():
    x = grid_for(CANONICAL, pad=8.0, n=4001)
    dec = build_decomposition(CANONICAL, EnergyMode(0.5), x)
    cross = interference_density(dec)
    lhs = np.trapezoid(cross, x)
    inner = np.trapezoid(np.conj(dec.tr_component) * dec.ref_component, x)
    assert lhs == pytest.approx(2.0 * inner.real, abs=1e-10)
