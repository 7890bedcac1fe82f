"""
Tests for cascading, networks and frequency sweeps.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from Waveguide_Post_Solver.data_model import (
    ConvergenceReport,
    ScatteringMatrix,
    SweepPoint,
    SweepTable,
)
from Waveguide_Post_Solver.errors import InvalidInput, SingularCascade
from Waveguide_Post_Solver.junction import Discretization, PostJunction, solve_junction
from Waveguide_Post_Solver.modes import Waveguide, cutoff_frequency, mode_params
from Waveguide_Post_Solver.network import (
    DiscretizationPolicy,
    JunctionElement,
    Network,
    SweepSettings,
    UniformGuide,
    cascade,
    five_post_filter,
    frequency_sweep,
    reflection_zeros,
    solve_network,
    three_post_filter,
    two_post_structure,
    uniform_guide_smatrix,
)

WR62 = Waveguide.preset("WR-62")


def random_passive(rng, M, norm=0.9):
    """Random global-frame S-matrix with spectral norm ``norm``."""
    S = rng.standard_normal((2 * M, 2 * M)) + 1j * rng.standard_normal((2 * M, 2 * M))
    S *= norm / np.linalg.svd(S, compute_uv=False)[0]
    return ScatteringMatrix(S, n_propagating=M, frame="global")


def relative(a, b):
    return np.linalg.norm(a.S - b.S) / np.linalg.norm(b.S)


class TestUniformGuide:
    def test_zero_length_is_identity_through(self):
        sm = uniform_guide_smatrix(WR62, 0.0, 8, 15e9)
        assert_allclose(sm.S21, np.eye(8))
        assert_allclose(sm.S12, np.eye(8))
        assert not np.any(sm.S11)
        assert not np.any(sm.S22)
        assert sm.frame == "global"

    def test_propagating_mode_phase(self):
        sm = uniform_guide_smatrix(WR62, 0.01, 8, 15e9)
        beta = mode_params(WR62, 1, 15e9).gamma.imag
        assert abs(sm.S21[0, 0]) == pytest.approx(1.0)
        assert sm.S21[0, 0] == pytest.approx(np.exp(-1j * beta * 0.01))

    def test_evanescent_mode_decays(self):
        sm = uniform_guide_smatrix(WR62, 0.01, 8, 15e9)
        alpha = mode_params(WR62, 5, 15e9).gamma.real
        assert abs(sm.S21[4, 4]) == pytest.approx(math.exp(-alpha * 0.01))
        assert abs(sm.S21[4, 4]) < 1.0

    def test_negative_length(self):
        with pytest.raises(InvalidInput):
            uniform_guide_smatrix(WR62, -1e-3, 4, 15e9)
        with pytest.raises(InvalidInput):
            UniformGuide(-1e-3)


class TestCascade:
    """Algebraic properties of the Redheffer star product."""

    def test_neutral_element(self):
        rng = np.random.default_rng(7)
        S = random_passive(rng, 6)
        through = ScatteringMatrix(
            np.block([[np.zeros((6, 6)), np.eye(6)], [np.eye(6), np.zeros((6, 6))]]),
            frame="global",
        )
        assert relative(cascade(S, through), S) <= 1e-10
        assert relative(cascade(through, S), S) <= 1e-10

    def test_uniform_sections_add(self):
        first = uniform_guide_smatrix(WR62, 4e-3, 10, 15e9)
        second = uniform_guide_smatrix(WR62, 7e-3, 10, 15e9)
        both = uniform_guide_smatrix(WR62, 11e-3, 10, 15e9)
        assert relative(cascade(first, second), both) <= 1e-10

    def test_associativity(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            A, B, C = (random_passive(rng, 5) for _ in range(3))
            left = cascade(cascade(A, B), C)
            right = cascade(A, cascade(B, C))
            assert relative(left, right) <= 1e-10

    def test_passivity_is_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            A, B = random_passive(rng, 4, 1.0), random_passive(rng, 4, 1.0)
            assert cascade(A, B).max_singular_value() <= 1 + 1e-9

    def test_singular_feedback(self):
        M = 3
        eye, zero = np.eye(M), np.zeros((M, M))
        A = ScatteringMatrix(np.block([[zero, eye], [eye, eye]]), frame="global")
        B = ScatteringMatrix(np.block([[eye, eye], [eye, zero]]), frame="global")
        with pytest.raises(SingularCascade):
            cascade(A, B)

    def test_mode_count_mismatch(self):
        with pytest.raises(InvalidInput):
            cascade(ScatteringMatrix(np.eye(4)), ScatteringMatrix(np.eye(6)))

    def test_local_operands_are_converted(self):
        rng = np.random.default_rng(2)
        A, B = random_passive(rng, 3), random_passive(rng, 3)
        local = ScatteringMatrix(A.to_local().S, n_propagating=3, frame="local")
        result = cascade(local, B)
        assert result.frame == "global"
        assert relative(result, cascade(A, B)) <= 1e-12


class TestNetwork:
    def test_needs_an_element(self):
        with pytest.raises(InvalidInput):
            Network(WR62, ())

    def test_overlapping_posts(self):
        posts = [
            PostJunction.from_axis_offset(WR62, 3e-3, 2e-3),
            PostJunction.from_axis_offset(WR62, 5e-3, 2e-3),
        ]
        with pytest.raises(InvalidInput):
            Network.from_posts(WR62, posts, [3e-3])
        # 5 mm spacing keeps 2 mm posts apart
        Network.from_posts(WR62, posts, [5e-3])

    def test_spacing_sums_guide_sections(self):
        post = JunctionElement(PostJunction.from_axis_offset(WR62, 0.0, 2e-3))
        Network(WR62, (post, UniformGuide(2e-3), UniformGuide(2.5e-3), post))
        with pytest.raises(InvalidInput):
            Network(WR62, (post, UniformGuide(2e-3), UniformGuide(1e-3), post))

    def test_waveguide_mismatch(self):
        other = Waveguide.preset("WR-90")
        element = JunctionElement(PostJunction(other, 0.01, 2e-3))
        with pytest.raises(InvalidInput):
            Network(WR62, (element,))

    def test_reversed_mirrored(self):
        net = two_post_structure()
        reversed_net = net.reversed_mirrored()
        assert [j.h for j in reversed_net.junctions] == pytest.approx(
            [WR62.a - j.h for j in reversed(net.junctions)]
        )

    def test_presets(self):
        three = three_post_filter()
        assert [j.h for j in three.junctions] == pytest.approx(
            [0.5 * WR62.a + d for d in (3.4475e-3, 1.5137e-3, 3.4475e-3)]
        )
        alternating = five_post_filter(alternating=True)
        offsets = [j.h - 0.5 * WR62.a for j in alternating.junctions]
        assert offsets == pytest.approx(
            [3.9639e-3, -1.7958e-3, 1.3672e-3, -1.7958e-3, 3.9639e-3]
        )
        spacings = [e.length for e in alternating.elements if isinstance(e, UniformGuide)]
        assert spacings == pytest.approx([14.1461e-3, 15.9014e-3, 15.9014e-3, 14.1461e-3])


class TestSolveNetwork:
    """Whole-structure solves at a few frequencies."""

    M = 40

    def test_single_junction_matches_solve_junction(self):
        post = PostJunction.from_axis_offset(WR62, 3e-3, 2e-3)
        net = Network(WR62, (JunctionElement(post),))
        direct = solve_junction(post, Discretization.default(post, self.M), self.M, 15e9)
        assert_allclose(solve_network(net, self.M, None, 15e9).S, direct.to_global().S)

    def test_fixed_discretization_policy(self):
        post = PostJunction.from_axis_offset(WR62, 3e-3, 2e-3)
        net = Network(WR62, (JunctionElement(post),))
        disc = Discretization(30, 20, 20)
        policy = DiscretizationPolicy(fixed=disc)
        result = solve_network(net, self.M, policy, 15e9)
        assert_allclose(result.S, solve_junction(post, disc, self.M, 15e9).to_global().S)

    @pytest.mark.parametrize("f", [12.4e9, 15e9, 18e9])
    def test_two_post_energy_conservation(self, f):
        result = solve_network(two_post_structure(), 70, None, f)
        assert result.frame == "global"
        assert result.n_propagating == 1
        assert result.energy_error() <= 1e-3

    @pytest.mark.parametrize("f", [13e9, 16.5e9])
    def test_reversed_network_swaps_ports(self, f):
        net = two_post_structure()
        forward = solve_network(net, 70, None, f)
        backward = solve_network(net.reversed_mirrored(), 70, None, f)
        assert abs(backward.S21[0, 0]) == pytest.approx(abs(forward.S12[0, 0]), abs=1e-6)
        assert abs(backward.S21[0, 0]) == pytest.approx(abs(forward.S21[0, 0]), abs=1e-3)

    def test_spacing_perturbation_is_smooth(self):
        phases = [
            np.angle(solve_network(two_post_structure(spacing=l), self.M, None, 15e9).S21[0, 0])
            for l in (15e-3, 15.001e-3)
        ]
        jump = abs(np.angle(np.exp(1j * (phases[1] - phases[0]))))
        assert jump <= 0.01


class TestFrequencySweep:
    def test_single_point(self):
        net = two_post_structure()
        settings = SweepSettings(M=30)
        table = frequency_sweep(net, settings, 15e9, 16e9, 1)
        assert len(table) == 1
        expected = solve_network(net, 30, None, 15e9)
        assert_allclose(table.points[0].smatrix.S, expected.S)

    def test_cutoff_point_is_recorded(self):
        net = Network(WR62, (UniformGuide(0.01),))
        f_cut = cutoff_frequency(WR62, 2)
        table = frequency_sweep(net, SweepSettings(M=3), 15e9, f_cut, 2)
        assert [p.status for p in table] == ["ok", "cutoff"]
        assert table.points[1].smatrix is None
        assert "TE20" in table.points[1].message

    def test_thread_pool_keeps_order_and_values(self):
        net = two_post_structure()
        settings = SweepSettings(M=20)
        serial = frequency_sweep(net, settings, 12.4e9, 18e9, 6)
        threaded = frequency_sweep(net, settings, 12.4e9, 18e9, 6, workers=3)
        assert_allclose(threaded.frequencies, serial.frequencies)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.smatrix.S, b.smatrix.S)

    def test_invalid_range(self):
        net = two_post_structure()
        with pytest.raises(InvalidInput):
            frequency_sweep(net, SweepSettings(M=10), 18e9, 12e9, 5)
        with pytest.raises(InvalidInput):
            frequency_sweep(net, SweepSettings(M=10), 12e9, 18e9, 0)


def test_reflection_zeros_on_synthetic_table():
    def point(f, s11):
        t = math.sqrt(1 - s11**2)
        return SweepPoint(
            f,
            ScatteringMatrix(np.array([[s11, t], [t, s11]]), n_propagating=1),
        )

    levels = [0.5, 0.05, 0.001, 0.05, 0.5, 0.2, 0.005, 0.2, 0.5, 0.3, 0.5]
    table = SweepTable([point(1e9 + i * 1e8, s) for i, s in enumerate(levels)])
    assert reflection_zeros(table) == pytest.approx([1.2e9, 1.6e9])
    # the -10 dB dip at 1.9 GHz only counts with a looser threshold
    assert len(reflection_zeros(table, threshold_db=-5.0)) == 3


def test_reflection_zeros_at_band_edges():
    def point(f, s11):
        t = math.sqrt(1 - s11**2)
        return SweepPoint(
            f,
            ScatteringMatrix(np.array([[s11, t], [t, s11]]), n_propagating=1),
        )

    levels = [0.001, 0.05, 0.5, 0.05, 0.002]
    table = SweepTable([point(1e9 + i * 1e8, s) for i, s in enumerate(levels)])
    assert reflection_zeros(table) == pytest.approx([1.0e9, 1.4e9])


@pytest.mark.slow
class TestAcceptance:
    """Full-band reproductions of the published structures."""

    def test_two_post_energy_conservation_across_band(self):
        for spacing in (5e-3, 10e-3, 15e-3):
            net = two_post_structure(spacing=spacing)
            table = frequency_sweep(net, SweepSettings(M=70), 12.4e9, 18e9, 21, workers=4)
            assert all(p.ok for p in table)
            assert max(p.smatrix.energy_error() for p in table) <= 1e-3

    def test_three_post_filter_has_two_poles(self):
        table = frequency_sweep(
            three_post_filter(), SweepSettings(M=60), 12.4e9, 18e9, 201, workers=4
        )
        assert len(reflection_zeros(table, -20.0)) >= 2

    def test_five_post_filter_has_four_poles(self):
        table = frequency_sweep(
            five_post_filter(), SweepSettings(M=60), 12.4e9, 18e9, 201, workers=4
        )
        assert len(reflection_zeros(table, -20.0)) >= 4

    def test_reversed_filter_sweep(self):
        net = three_post_filter()
        settings = SweepSettings(M=40)
        forward = frequency_sweep(net, settings, 12.4e9, 18e9, 21, workers=4)
        backward = frequency_sweep(net.reversed_mirrored(), settings, 12.4e9, 18e9, 21, workers=4)
        assert_allclose(
            np.abs(backward.parameter("S21")), np.abs(forward.parameter("S12")), atol=1e-6
        )

    def test_mode_convergence_for_fifteen_millimetre_spacing(self):
        net = two_post_structure(spacing=15e-3)
        tables = {
            M: frequency_sweep(net, SweepSettings(M=M), 12.4e9, 18e9, 21, workers=4)
            for M in (60, 70)
        }
        assert ConvergenceReport(tables, threshold_db=0.1).converged_at == 70

    def test_mode_convergence_for_ten_millimetre_spacing(self):
        net = two_post_structure(spacing=10e-3)
        tables = {
            M: frequency_sweep(net, SweepSettings(M=M), 12.4e9, 18e9, 21, workers=4)
            for M in (60, 70)
        }
        assert ConvergenceReport(tables, threshold_db=0.1).converged_at == 70

    def test_close_posts_converge_more_slowly(self):
        deltas = {}
        for spacing in (5e-3, 15e-3):
            net = two_post_structure(spacing=spacing)
            tables = {
                M: frequency_sweep(net, SweepSettings(M=M), 12.4e9, 18e9, 21, workers=4)
                for M in (50, 60)
            }
            deltas[spacing] = ConvergenceReport(tables).deltas[0][2]
        assert deltas[5e-3] > deltas[15e-3]

    def test_five_millimetre_spacing_needs_seventy_modes(self):
        net = two_post_structure(spacing=5e-3)
        tables = {
            M: frequency_sweep(net, SweepSettings(M=M), 12.4e9, 18e9, 21, workers=4)
            for M in (40, 50, 60, 70)
        }
        assert ConvergenceReport(tables, threshold_db=0.1).converged_at == 70
