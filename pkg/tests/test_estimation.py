"""
Tests for training samples, the plug-in estimator and IPW estimation.
"""
import pytest
import numpy as np
import pandas as pd

from fairpolicy.distributions import ks_distance, point_mass, step_cdf_from_samples
from fairpolicy.errors import (
    EmptySample,
    InvalidArray,
    OutOfSupport,
    UnknownGroup,
    ZeroEstimatedPropensity,
    ZeroPropensity,
)
from fairpolicy.estimation import (
    IpwModel,
    PropensityModel,
    TrainingRecord,
    TrainingSample,
    empirical_pz,
    estimate_propensity,
    fit_plugin,
    infer_space,
    ipw_group_cdf,
    ipw_group_step,
    ipw_objective,
    ipw_objective_estimated,
)
from fairpolicy.functionals import SimilarityMeasure, TargetFunctional
from fairpolicy.objective import CovariateSpace, DecisionRule, PluginModel, implied_cdf, omega
from fairpolicy.oracle import toy_group_cdf, toy_propensity, toy_rule, toy_sample

GINI = TargetFunctional.gini()
KS = SimilarityMeasure.ks()


@pytest.fixture
def one_cell_space():
    """One covariate level, one group, two treatments."""
    return CovariateSpace(("a",), ("g",), 2)


class TestTrainingSample:
    """Tests for sample validation."""

    def test_from_records(self, small_space, unit):
        """Test building a sample from records."""
        records = [TrainingRecord(0.1, "x0", "z0", 1), TrainingRecord(0.9, "x1", "z1", 2)]
        sample = TrainingSample.from_records(records, small_space, unit)
        assert sample.n == 2
        assert sample.records == records

    def test_empty(self, small_space, unit):
        """Test that an empty sample raises EmptySample."""
        with pytest.raises(EmptySample):
            TrainingSample.from_records([], small_space, unit)

    def test_missing_column(self, small_space, unit):
        """Test that a frame without d is rejected."""
        frame = pd.DataFrame({"y": [0.1], "x": ["x0"], "z": ["z0"]})
        with pytest.raises(InvalidArray):
            TrainingSample(small_space, unit, frame)

    def test_bad_values(self, small_space, unit):
        """Test outcomes, levels and treatments outside the schema."""
        def frame(**row):
            base = {"y": 0.5, "x": "x0", "z": "z0", "d": 1}
            base.update(row)
            return pd.DataFrame([base])

        with pytest.raises(OutOfSupport):
            TrainingSample(small_space, unit, frame(y=1.5))
        with pytest.raises(InvalidArray):
            TrainingSample(small_space, unit, frame(x="x9"))
        with pytest.raises(UnknownGroup):
            TrainingSample(small_space, unit, frame(z="z9"))
        with pytest.raises(InvalidArray):
            TrainingSample(small_space, unit, frame(d=3))

    def test_infer_space(self):
        """Test that levels keep their order of first appearance."""
        frame = pd.DataFrame({"y": [0.1] * 3, "x": ["b", "a", "b"], "z": [1, 0, 1], "d": [1, 3, 2]})
        space = infer_space(frame)
        assert space.x_levels == ("b", "a")
        assert space.z_levels == ("1", "0")
        assert space.k == 3
        assert infer_space(frame, k=5).k == 5

    def test_empirical_pz(self, small_space, unit):
        """Test group frequencies, including an unseen group."""
        records = [TrainingRecord(0.1, "x0", "z0", 1)] * 3
        sample = TrainingSample.from_records(records, small_space, unit)
        assert empirical_pz(sample) == {"z0": 1.0, "z1": 0.0}


class TestFitPlugin:
    """Tests for the plug-in conditional cdf array."""

    def test_cells_and_frequencies(self, small_space, unit):
        """Test cell cdfs, empty cells and p(x, z)."""
        records = [
            TrainingRecord(0.2, "x0", "z0", 1),
            TrainingRecord(0.4, "x0", "z0", 1),
            TrainingRecord(0.6, "x0", "z0", 2),
            TrainingRecord(0.8, "x1", "z1", 2),
        ]
        arr = fit_plugin(TrainingSample.from_records(records, small_space, unit))
        assert arr.cdfs[(1, "x0", "z0")].atoms == [(0.2, 0.5), (0.4, 0.5)]
        assert arr.cdfs[(1, "x1", "z1")] == point_mass(1.0, unit)
        assert arr.pxz[("x0", "z0")] == pytest.approx(0.75)
        assert arr.pxz[("x1", "z1")] == pytest.approx(0.25)
        assert arr.pxz[("x0", "z1")] == 0.0

    def test_consistent_on_toy_data(self, toy_data):
        """Test that the plug-in objective approaches the population value."""
        arr = fit_plugin(toy_data)
        rule = toy_rule(0.3)
        group = PluginModel(arr).rollout(rule).groups["0"]
        ys = np.linspace(0, 1, 201)
        assert np.max(np.abs(group(ys) - toy_group_cdf(0.3, 0, ys))) < 0.03

    def test_total_probability_reconstruction(self, rng, small_space, unit):
        """Test that the observed assignment frequencies rebuild the raw empirical cdf."""
        counts = {
            ("x0", "z0"): (1, 3), ("x0", "z1"): (2, 6),
            ("x1", "z0"): (2, 2), ("x1", "z1"): (1, 1),
        }
        records = []
        for (x, z), per_treatment in counts.items():
            for d, count in enumerate(per_treatment, start=1):
                records += [TrainingRecord(float(rng.uniform()), x, z, d) for _ in range(count)]
        sample = TrainingSample.from_records(records, small_space, unit)
        rule = DecisionRule(small_space, [[0.25, 0.75], [0.5, 0.5]])
        pooled = implied_cdf(rule, fit_plugin(sample))
        raw = step_cdf_from_samples([r.y for r in records], unit)
        assert ks_distance(pooled, raw) < 1e-9

    def test_adversarial_samples(self, rng, unit):
        """Test that random sparse samples with ties and boundary outcomes always give a valid array."""
        for _ in range(100):
            space = CovariateSpace(
                tuple(f"x{i}" for i in range(int(rng.integers(1, 4)))),
                tuple(f"z{i}" for i in range(int(rng.integers(1, 4)))),
                int(rng.integers(2, 5)),
            )
            n = int(rng.integers(1, 15))
            records = [
                TrainingRecord(
                    float(rng.choice([0.0, 1.0, 0.5, rng.uniform()])),
                    str(rng.choice(space.x_levels)),
                    str(rng.choice(space.z_levels)),
                    int(rng.integers(1, space.k + 1)),
                )
                for _ in range(n)
            ]
            arr = fit_plugin(TrainingSample.from_records(records, space, unit))
            assert len(arr.cdfs) == space.k * len(space.x_levels) * len(space.z_levels)
            for cdf in arr.cdfs.values():
                assert cdf.masses.sum() == pytest.approx(1.0)
                assert np.all(np.diff(cdf.points) > 0)
            assert sum(arr.pxz.values()) == pytest.approx(1.0)


class TestPropensity:
    """Tests for propensity models."""

    def test_validation(self, one_cell_space):
        """Test that rows must be probability vectors."""
        with pytest.raises(InvalidArray):
            PropensityModel(one_cell_space, {(1, "a", "g"): 0.5, (2, "a", "g"): 0.6}, {"g": 1.0})
        with pytest.raises(InvalidArray):
            PropensityModel(one_cell_space, {(1, "a", "g"): 0.5, (2, "a", "g"): 0.5}, {"g": 0.5})

    def test_cell_frequencies(self, small_space, unit):
        """Test estimated propensities, with 1/K in unobserved cells."""
        records = [
            TrainingRecord(0.2, "x0", "z0", 1),
            TrainingRecord(0.4, "x0", "z0", 1),
            TrainingRecord(0.6, "x0", "z0", 2),
            TrainingRecord(0.8, "x1", "z1", 2),
        ]
        prop = estimate_propensity(TrainingSample.from_records(records, small_space, unit))
        assert prop.table[0, 0, 0] == pytest.approx(2 / 3)
        assert prop.table[1, 0, 0] == pytest.approx(1 / 3)
        assert prop.table[0, 1, 1] == 0.0
        assert prop.table[:, 0, 1].tolist() == [0.5, 0.5]
        assert prop.pz_vector.tolist() == [0.75, 0.25]


class TestIpw:
    """Tests for inverse-propensity-weighted group cdfs."""

    def test_single_record_jump(self, one_cell_space, unit):
        """Test that one record with propensity 1/4 gives a jump of 4 before projection."""
        sample = TrainingSample.from_records([TrainingRecord(0.5, "a", "g", 1)], one_cell_space, unit)
        prop = PropensityModel.by_group(one_cell_space, {"g": [0.25, 0.75]}, {"g": 1.0})
        rule = DecisionRule.from_treatment(one_cell_space, 1)
        step = ipw_group_step(sample, rule, "g", prop)
        assert step(0.49) == 0.0
        assert step(0.5) == pytest.approx(4.0)
        assert ipw_group_cdf(sample, rule, "g", prop) == point_mass(0.5, unit)

    def test_zero_propensity_used(self, one_cell_space, unit):
        """Test that a weighted record in a zero-propensity cell raises ZeroPropensity."""
        sample = TrainingSample.from_records([TrainingRecord(0.5, "a", "g", 2)], one_cell_space, unit)
        prop = PropensityModel.by_group(one_cell_space, {"g": [1.0, 0.0]}, {"g": 1.0})
        with pytest.raises(ZeroPropensity):
            ipw_group_step(sample, DecisionRule.from_treatment(one_cell_space, 2), "g", prop)

    def test_zero_propensity_without_records(self, one_cell_space, unit):
        """Test that a rule using a zero-propensity treatment raises even when no record sits in that cell."""
        records = [TrainingRecord(0.2, "a", "g", 1), TrainingRecord(0.7, "a", "g", 1)]
        sample = TrainingSample.from_records(records, one_cell_space, unit)
        prop = PropensityModel.by_group(one_cell_space, {"g": [1.0, 0.0]}, {"g": 1.0})
        unsupported = DecisionRule.from_treatment(one_cell_space, 2)
        with pytest.raises(ZeroPropensity):
            ipw_group_cdf(sample, unsupported, "g", prop)
        with pytest.raises(ZeroPropensity):
            ipw_objective(sample, unsupported, 0.0, GINI, KS, prop)
        mixed = DecisionRule(one_cell_space, [[0.9, 0.1]])
        with pytest.raises(ZeroPropensity):
            IpwModel(sample, prop).rollout(mixed)
        observed = DecisionRule.from_treatment(one_cell_space, 1)
        assert ipw_objective(sample, observed, 0.0, GINI, KS, prop) == pytest.approx(0.1625)

    def test_unweighted_records_are_skipped(self, one_cell_space, unit):
        """Test that records the rule never assigns contribute nothing."""
        sample = TrainingSample.from_records([TrainingRecord(0.5, "a", "g", 2)], one_cell_space, unit)
        prop = PropensityModel.by_group(one_cell_space, {"g": [1.0, 0.0]}, {"g": 1.0})
        rule = DecisionRule.from_treatment(one_cell_space, 1)
        assert ipw_group_step(sample, rule, "g", prop).total == 0.0
        assert ipw_group_cdf(sample, rule, "g", prop) == point_mass(1.0, unit)

    def test_unknown_group(self, toy_data):
        """Test that an unknown group raises UnknownGroup."""
        prop = toy_propensity(0.75, "A1")
        with pytest.raises(UnknownGroup):
            ipw_group_step(toy_data, toy_rule(0.5), "7", prop)

    def test_known_propensity_value(self):
        """Test the group-0 IPW cdf at 1/2 on 10^5 toy records."""
        sample = toy_sample(100_000, 0.75, "A1", seed=11)
        prop = toy_propensity(0.75, "A1")
        step = ipw_group_step(sample, toy_rule(0.3), "0", prop)
        assert step(0.5) == pytest.approx(0.3 * np.sqrt(0.5) + 0.7 * 0.25, abs=0.01)

    def test_estimated_matches_plugin(self, full_design_sample):
        """Test that IPW with cell-frequency propensities equals the plug-in objective."""
        arr = fit_plugin(full_design_sample)
        rule = DecisionRule(full_design_sample.space, [[0.3, 0.7], [0.8, 0.2]])
        model = IpwModel.estimated(full_design_sample)
        plug = PluginModel(arr).rollout(rule)
        ipw = model.rollout(rule)
        assert ks_distance(ipw.population, plug.population) < 1e-9
        for z in ("z0", "z1"):
            assert ks_distance(ipw.groups[z], plug.groups[z]) < 1e-9
        for lam in (0.0, 0.4, 1.0):
            assert ipw_objective_estimated(full_design_sample, rule, lam, GINI, KS) == pytest.approx(
                omega(rule, arr, lam, GINI, KS), abs=1e-9
            )

    def test_estimated_rejects_empty_cells(self, small_space, unit):
        """Test that a rule using an unobserved treatment cell raises ZeroEstimatedPropensity."""
        records = [
            TrainingRecord(0.2, "x0", "z0", 1),
            TrainingRecord(0.4, "x1", "z0", 1),
            TrainingRecord(0.6, "x1", "z0", 2),
        ]
        sample = TrainingSample.from_records(records, small_space, unit)
        model = IpwModel.estimated(sample)
        assert model.active_groups == ("z0",)
        model.rollout(DecisionRule.from_treatment(small_space, 1))
        with pytest.raises(ZeroEstimatedPropensity):
            model.rollout(DecisionRule.from_treatment(small_space, 2))

    def test_known_propensities_close_to_plugin(self, toy_data):
        """Test that IPW and plug-in objectives agree on 10^4 toy records."""
        prop = toy_propensity(0.75, "A1")
        arr = fit_plugin(toy_data)
        for delta in (0.0, 0.3, 0.5, 1.0):
            rule = toy_rule(delta)
            ipw = ipw_objective(toy_data, rule, 0.3, GINI, KS, prop)
            assert ipw == pytest.approx(omega(rule, arr, 0.3, GINI, KS), abs=0.05)
