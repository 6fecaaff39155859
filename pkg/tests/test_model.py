import numpy as np
import pytest

from sisobarrier.model import (
    InstabilityError,
    IntervalCoefficient,
    UncertainPlant,
    companion,
    enumerate_corners,
    observable_canonical,
    pldi_vertices,
    shifted_realization,
)


def exact_plant(a, b):
    return UncertainPlant(
        n=len(a),
        a=tuple(IntervalCoefficient(v, v) for v in a),
        b=tuple(IntervalCoefficient(v, v) for v in b),
    )


def exo_plant():
    return UncertainPlant(
        n=2,
        a=(IntervalCoefficient(12.0, 12.0), IntervalCoefficient(4.0, 12.0)),
        b=(IntervalCoefficient(0.0, 0.0), IntervalCoefficient(4.0, 12.0)),
        ties=((("a", 1), ("b", 1)),),
    )


class TestIntervalCoefficient:
    def test_orders_bounds(self):
        with pytest.raises(ValueError):
            IntervalCoefficient(2.0, 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            IntervalCoefficient(0.0, np.inf)

    def test_degeneracy(self):
        assert IntervalCoefficient(3.0, 3.0).is_degenerate()
        assert not IntervalCoefficient(4.0, 12.0).is_degenerate()


class TestObservableCanonical:
    def test_second_order_example(self):
        real = observable_canonical([12.0, 8.0], [0.0, 8.0])
        assert np.array_equal(real.A, np.array([[-12.0, 1.0], [-8.0, 0.0]]))
        assert np.array_equal(real.b_u, np.array([0.0, 8.0]))
        assert np.array_equal(real.c0, np.array([1.0, 0.0]))

    def test_zero_coefficients_give_shift_matrix(self):
        real = observable_canonical(np.zeros(4), np.zeros(4))
        assert np.array_equal(real.A, np.eye(4, k=1))
        assert np.array_equal(real.b_u, np.zeros(4))

    def test_first_order(self):
        real = observable_canonical([3.0], [2.0])
        assert np.array_equal(real.A, np.array([[-3.0]]))
        assert real.transfer_value(1.0j) == pytest.approx(2.0 / (1.0j + 3.0), rel=1e-12)

    def test_zero_order_rejected(self):
        with pytest.raises(ValueError):
            observable_canonical([], [])

    def test_transfer_function_matches_polynomial_ratio(self):
        rng = np.random.default_rng(7)
        for n in (1, 2, 3, 5):
            a = rng.normal(size=n)
            b = rng.normal(size=n)
            real = observable_canonical(a, b)
            den = np.concatenate([[1.0], a])
            num = np.concatenate([[0.0], b])
            for s in (0.3 + 1.1j, -0.7 + 2.0j, 2.5, 0.01j):
                expected = np.polyval(num, s) / np.polyval(den, s)
                got = real.transfer_value(s)
                assert abs(got - expected) <= 1e-10 * max(1.0, abs(expected))


class TestCorners:
    def test_exoskeleton_ties_give_two_corners(self):
        corners = enumerate_corners(exo_plant(), tol=1e-12)
        assert corners.count == 2
        for a, b in corners.corners:
            assert a[1] == b[1]  # tie: both move together
        k_values = sorted(a[1] for a, _ in corners.corners)
        assert k_values == [4.0, 12.0]

    def test_fully_degenerate_single_corner(self):
        corners = enumerate_corners(exact_plant([1.0, 2.0], [0.0, 3.0]))
        assert corners.count == 1
        assert np.array_equal(corners.corners[0][0], [1.0, 2.0])

    def test_two_independent_uncertain_coefficients(self):
        plant = UncertainPlant(
            n=2,
            a=(IntervalCoefficient(1.0, 2.0), IntervalCoefficient(5.0, 5.0)),
            b=(IntervalCoefficient(0.0, 0.0), IntervalCoefficient(1.0, 3.0)),
        )
        assert enumerate_corners(plant).count == 4

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ValueError):
            enumerate_corners(exo_plant(), tol=-1.0)

    def test_corner_realizations_match_polynomial_ratio(self):
        for a, b in enumerate_corners(exo_plant()).corners:
            real = observable_canonical(a, b)
            den = np.concatenate([[1.0], a])
            num = np.concatenate([[0.0], b])
            for s in (0.5 + 1.0j, 2.0j, -1.5 + 0.25j):
                expected = np.polyval(num, s) / np.polyval(den, s)
                assert abs(real.transfer_value(s) - expected) <= 1e-10 * max(1.0, abs(expected))


class TestPldiVertices:
    def test_exoskeleton_vertices(self):
        verts = pldi_vertices(exo_plant(), gain=-1.2)
        expected = [
            np.array([[-12.0, 1.0], [-8.8, 0.0]]),
            np.array([[-12.0, 1.0], [-26.4, 0.0]]),
        ]
        assert len(verts) == 2
        got = sorted(verts, key=lambda A: A[1, 0], reverse=True)
        for G, E in zip(got, expected):
            assert np.allclose(G, E, atol=1e-12)

    def test_degenerate_plant_gives_nominal_closed_loop(self):
        plant = exact_plant([12.0, 8.0], [0.0, 8.0])
        verts = pldi_vertices(plant, gain=-1.2)
        assert len(verts) == 1
        assert np.allclose(verts[0], [[-12.0, 1.0], [-17.6, 0.0]])

    def test_four_uncertain_coefficients_give_sixteen(self):
        plant = UncertainPlant(
            n=2,
            a=(IntervalCoefficient(1.0, 2.0), IntervalCoefficient(3.0, 4.0)),
            b=(IntervalCoefficient(0.5, 1.0), IntervalCoefficient(1.0, 2.0)),
        )
        assert len(pldi_vertices(plant, gain=0.3)) == 16

    def test_vertices_match_corner_closed_loops(self):
        plant = exo_plant()
        gain = -1.2
        corners = enumerate_corners(plant)
        verts = pldi_vertices(plant, gain)
        c0 = np.array([1.0, 0.0])
        for (a, b), A_cl in zip(corners.corners, verts):
            assert np.array_equal(companion(a) + np.outer(gain * b, c0), A_cl)


class TestShiftedRealization:
    def test_exoskeleton_shift_coefficients(self):
        shifted = shifted_realization([12.0, 8.0], [0.0, 8.0], [13.60, 18.68])
        assert np.allclose(shifted.b_y, [1.60, 10.68], atol=1e-12)

    def test_identity_shift(self):
        shifted = shifted_realization([3.0, 2.0], [0.0, 1.0], [3.0, 2.0])
        assert np.array_equal(shifted.b_y, np.zeros(2))
        assert np.array_equal(shifted.A0, observable_canonical([3.0, 2.0], [0.0, 1.0]).A)

    def test_stability_sign_check(self):
        shifted = shifted_realization([1.0], [1.0], [0.5])
        assert np.array_equal(shifted.A0, [[-0.5]])
        with pytest.raises(InstabilityError):
            shifted_realization([1.0], [1.0], [-1.0])

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            n = rng.integers(1, 5)
            a = rng.normal(size=n)
            a_hat = np.abs(rng.normal(size=n)) + 0.5  # positive coefficients: stable for n<=2
            if n > 2:
                a_hat = np.poly(-np.abs(rng.normal(size=n)) - 0.1)[1:]
            shifted = shifted_realization(a, np.zeros(n), a_hat)
            c0 = np.zeros(n)
            c0[0] = 1.0
            rebuilt = shifted.A0 + np.outer(shifted.b_y, c0)
            assert np.allclose(rebuilt, observable_canonical(a, np.zeros(n)).A, atol=1e-12)


class TestPlantValidation:
    def test_tie_membership_checked(self):
        with pytest.raises(ValueError):
            UncertainPlant(
                n=2,
                a=(IntervalCoefficient(0, 1), IntervalCoefficient(0, 1)),
                b=(IntervalCoefficient(0, 1), IntervalCoefficient(0, 1)),
                ties=((("a", 0), ("c", 1)),),
            )

    def test_duplicate_tie_membership_rejected(self):
        with pytest.raises(ValueError):
            UncertainPlant(
                n=2,
                a=(IntervalCoefficient(0, 1), IntervalCoefficient(0, 1)),
                b=(IntervalCoefficient(0, 1), IntervalCoefficient(0, 1)),
                ties=((("a", 0), ("a", 1)), (("a", 0), ("b", 0))),
            )

    def test_contains_instance_respects_ties(self):
        plant = exo_plant()
        assert plant.contains_instance(np.array([12.0, 8.0]), np.array([0.0, 8.0]))
        assert not plant.contains_instance(np.array([12.0, 8.0]), np.array([0.0, 11.0]))
        assert not plant.contains_instance(np.array([12.0, 3.0]), np.array([0.0, 3.0]))
