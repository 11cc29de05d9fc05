"""
Tests for step cdfs: construction, evaluation, mixtures, KS distances and projection.
"""
import pytest
import numpy as np

from fairpolicy.distributions import (
    MonotoneStep,
    StepCdf,
    SupportInterval,
    evaluate,
    ks_distance,
    mixture,
    one_sided_ks,
    point_mass,
    project_mab,
    step_cdf_from_samples,
    sup_distance,
)
from fairpolicy.errors import (
    EmptySample,
    InvalidSupport,
    OutOfSupport,
    SupportMismatch,
    WeightMismatch,
)
from fairpolicy.oracle import toy_cdf_g


class TestSupportInterval:
    """Tests for the support interval."""

    def test_rejects_empty_interval(self):
        """Test that a >= b is rejected."""
        with pytest.raises(InvalidSupport):
            SupportInterval(1.0, 0.0)
        with pytest.raises(InvalidSupport):
            SupportInterval(0.5, 0.5)

    def test_rejects_infinite_bounds(self):
        """Test that infinite bounds are rejected."""
        with pytest.raises(InvalidSupport):
            SupportInterval(0.0, float("inf"))

    def test_width(self):
        """Test the interval width."""
        assert SupportInterval(-1, 3).width == 4.0


class TestStepCdfFromSamples:
    """Tests for empirical cdfs."""

    def test_repeated_values_coalesce(self, unit):
        """Test that repeated values become one atom with summed frequency."""
        F = step_cdf_from_samples([0.2, 0.2, 0.5], unit)
        points, masses = zip(*F.atoms)
        assert points == (0.2, 0.5)
        assert np.allclose(masses, [2 / 3, 1 / 3])

    def test_right_continuous_evaluation(self, unit):
        """Test evaluation below, at and between atoms."""
        F = step_cdf_from_samples([0.2, 0.2, 0.5], unit)
        assert F(0.1) == 0.0
        assert F(0.2) == pytest.approx(2 / 3)
        assert F(0.49) == pytest.approx(2 / 3)
        assert F(0.5) == 1.0
        assert F(1.0) == 1.0

    def test_vector_evaluation(self, unit):
        """Test that arrays evaluate elementwise."""
        F = step_cdf_from_samples([0.25, 0.75], unit)
        assert np.allclose(evaluate(F, np.array([0.0, 0.3, 0.8])), [0.0, 0.5, 1.0])

    def test_empty_sample(self, unit):
        """Test that no values raise EmptySample."""
        with pytest.raises(EmptySample):
            step_cdf_from_samples([], unit)

    def test_out_of_support(self, unit):
        """Test that values outside [a, b] raise OutOfSupport."""
        with pytest.raises(OutOfSupport):
            step_cdf_from_samples([0.5, 1.5], unit)

    def test_converges_to_continuous_cdf(self, unit):
        """Test that 10^4 draws of U^2 stay close to sqrt(y)."""
        rng = np.random.default_rng(3)
        F = step_cdf_from_samples(rng.random(10_000) ** 2, unit)
        assert sup_distance(F, toy_cdf_g) < 0.02


class TestStepCdfInvariants:
    """Tests for construction checks and serialization."""

    def test_masses_must_sum_to_one(self, unit):
        """Test that masses away from 1 raise WeightMismatch."""
        with pytest.raises(WeightMismatch):
            StepCdf(unit, [0.1, 0.2], [0.5, 0.4])

    def test_points_must_increase(self, unit):
        """Test that unsorted points are rejected by the raw constructor."""
        with pytest.raises(ValueError):
            StepCdf(unit, [0.2, 0.1], [0.5, 0.5])

    def test_from_atoms_sorts_and_merges(self, unit):
        """Test that from_atoms accepts unsorted and repeated points."""
        F = StepCdf.from_atoms([0.3, 0.1, 0.3], [0.25, 0.5, 0.25], unit)
        assert F.atoms == [(0.1, 0.5), (0.3, 0.5)]

    def test_buffers_are_read_only(self, unit):
        """Test that the atom arrays cannot be modified."""
        F = point_mass(0.5, unit)
        with pytest.raises(ValueError):
            F.points[0] = 0.1

    def test_dict_round_trip(self, make_random_cdf):
        """Test that to_dict and from_dict preserve the cdf."""
        F = make_random_cdf()
        G = StepCdf.from_dict(F.to_dict())
        assert np.array_equal(G.points, F.points)
        assert np.allclose(G.masses, F.masses, rtol=0, atol=1e-15)

    def test_point_mass(self, unit):
        """Test the point mass cdf."""
        F = point_mass(1.0, unit)
        assert F(0.999) == 0.0
        assert F(1.0) == 1.0
        with pytest.raises(OutOfSupport):
            point_mass(2.0, unit)


class TestMixture:
    """Tests for mixtures of cdfs."""

    def test_mixture_is_linear(self, make_random_cdf):
        """Test that the mixture evaluates to the weighted sum of its components."""
        F, G = make_random_cdf(), make_random_cdf()
        M = mixture([(F, 0.3), (G, 0.7)])
        ys = np.linspace(0, 1, 101)
        assert np.allclose(M(ys), 0.3 * F(ys) + 0.7 * G(ys))

    def test_weights_must_sum_to_one(self, make_random_cdf):
        """Test that bad weights raise WeightMismatch."""
        F = make_random_cdf()
        with pytest.raises(WeightMismatch):
            mixture([(F, 0.3), (F, 0.3)])
        with pytest.raises(WeightMismatch):
            mixture([(F, -0.5), (F, 1.5)])

    def test_supports_must_match(self, unit):
        """Test that components on different supports raise SupportMismatch."""
        other = SupportInterval(0.0, 2.0)
        with pytest.raises(SupportMismatch):
            mixture([(point_mass(0.5, unit), 0.5), (point_mass(0.5, other), 0.5)])

    def test_single_component(self, make_random_cdf):
        """Test that a weight-one mixture returns the component."""
        F = make_random_cdf()
        assert mixture([(F, 1.0)]) == F

    def test_zero_weight_components_are_ignored(self, unit):
        """Test that a zero-weight component adds no atoms."""
        F = point_mass(0.2, unit)
        M = mixture([(F, 1.0), (point_mass(0.9, unit), 0.0)])
        assert M.atoms == [(0.2, 1.0)]


class TestKsDistance:
    """Tests for the KS metric and its one-sided variant."""

    def test_separated_point_masses(self, unit):
        """Test that disjoint point masses are at distance 1."""
        assert ks_distance(point_mass(0.2, unit), point_mass(0.5, unit)) == 1.0

    def test_metric_axioms(self, make_random_cdf):
        """Test identity, symmetry and the triangle inequality on random triples."""
        for _ in range(200):
            F, G, H = make_random_cdf(), make_random_cdf(), make_random_cdf()
            assert ks_distance(F, F) == 0.0
            assert ks_distance(F, G) == pytest.approx(ks_distance(G, F))
            assert ks_distance(F, H) <= ks_distance(F, G) + ks_distance(G, H) + 1e-12

    def test_matches_merged_grid(self, make_random_cdf, unit):
        """Test the exact distance against evaluation at merged atoms and their midpoints."""
        for _ in range(100):
            F, G = make_random_cdf(), make_random_cdf()
            atoms = np.union1d(F.points, G.points)
            grid = np.union1d(atoms, (atoms[:-1] + atoms[1:]) / 2)
            grid = np.union1d(grid, [unit.a])
            expected = np.max(np.abs(evaluate(F, grid) - evaluate(G, grid)))
            assert ks_distance(F, G) == pytest.approx(expected, abs=1e-12)

    def test_one_sided_pair_gives_ks(self, make_random_cdf):
        """Test max(one_sided_ks(F, G), one_sided_ks(G, F)) == ks_distance(F, G) on random pairs."""
        for _ in range(200):
            F, G = make_random_cdf(), make_random_cdf()
            both = max(one_sided_ks(F, G), one_sided_ks(G, F))
            assert both == pytest.approx(ks_distance(F, G), abs=1e-12)

    def test_one_sided(self, unit):
        """Test that only positive differences count."""
        early, late = point_mass(0.2, unit), point_mass(0.5, unit)
        assert one_sided_ks(early, late) == 1.0
        assert one_sided_ks(late, early) == 0.0

    def test_support_mismatch(self, unit):
        """Test that cdfs on different supports cannot be compared."""
        with pytest.raises(SupportMismatch):
            ks_distance(point_mass(0.5, unit), point_mass(0.5, SupportInterval(0, 2)))


class TestProjection:
    """Tests for projecting monotone steps onto cdfs."""

    def test_missing_mass_goes_to_b(self, unit):
        """Test that a step with total below one is completed at b."""
        F = project_mab(MonotoneStep(unit, [0.3], [0.5]))
        assert F(0.3) == pytest.approx(0.5)
        assert F(0.99) == pytest.approx(0.5)
        assert F(1.0) == 1.0

    def test_excess_mass_is_clamped(self, unit):
        """Test that the cumulative sum is clamped at one."""
        step = MonotoneStep(unit, [0.5], [4.0])
        assert step(0.5) == 4.0
        F = project_mab(step)
        assert F(0.49) == 0.0
        assert F(0.5) == 1.0

    def test_valid_cdf_unchanged(self, make_random_cdf, unit):
        """Test that a step which already is a cdf is left as it is."""
        F = make_random_cdf()
        projected = project_mab(MonotoneStep(unit, F.points, F.masses))
        assert ks_distance(projected, F) < 1e-12

    def test_empty_step(self, unit):
        """Test that an empty step projects to a point mass at b."""
        F = project_mab(MonotoneStep(unit, [], []))
        assert F.atoms == [(1.0, 1.0)]

    def test_projection_is_valid(self, rng, unit):
        """Test that random steps always project to valid cdfs."""
        for _ in range(100):
            size = int(rng.integers(1, 10))
            step = MonotoneStep(unit, rng.uniform(0, 1, size), rng.exponential(0.3, size))
            F = project_mab(step)
            assert F.masses.sum() == pytest.approx(1.0)
            assert np.all(np.diff(F.cumulative) >= 0)
