"""Tests for the Lipschitz lsc and calmness checkers and the descent tracker."""
import numpy as np
import pytest

from varistab.catalog import build_instance
from varistab.errors import ContractViolation, NoSolutionFound
from varistab.geneq import BaseFn, FieldFn, GenEqProblem
from varistab.metric_core import Box, Singleton
from varistab.slopes_dual import SlopeEstimate
from varistab.stability import (
    HypothesisStatus,
    Status,
    StabilityConfig,
    TrackerConfig,
    Verdict,
    _continuity_status,
    _lsc_status,
    check_calm,
    check_calm_coderivative,
    check_calm_smooth_base,
    check_liplsc,
    ekeland_track,
    estimate_perturbation_constants,
    zeta_liplsc,
)


def _status(report, hyp_id):
    return next(s for s in report.statuses if s.id == hyp_id)


def _problem(name, base, field):
    return GenEqProblem(
        name=name,
        base=BaseFn(base, 1, 1, 1),
        field=field,
        p_ref=[0.0],
        x_ref=[0.0],
        p_region=Box.interval(-1.0, 1.0),
        x_region=Box.interval(-1.0, 1.0),
    )


def _step_field():
    """f ≡ 0 with F(p,x) = [0, 1] for x <= 0 and [0, 2] for x > 0."""
    return _problem('step_field', lambda p, x: np.zeros(1),
                    FieldFn(lambda p, x: Box([0.0], [1.0 if x[0] <= 0 else 2.0]), 1))


def _jump_base(jump):
    return _problem('jump_base', lambda p, x: x + jump(p, x), FieldFn.constant(Singleton([0.0]), 1))


class TestHypothesisStatus:
    """Tests for status records."""

    def test_failure_needs_witness(self):
        """Test that a Fails status without a counterexample is refused."""
        with pytest.raises(ContractViolation):
            HypothesisStatus('iii', Status.FAILS)

    def test_verdict_exit_codes(self):
        assert [v.exit_code for v in Verdict] == [0, 2, 3]


class TestStabilityConfig:
    """Tests for checker settings."""

    def test_validation_points(self, affine, stability_config):
        """Test grid-aligned parameters p̄ ± t for t in 0.1..0.5."""
        points = stability_config.validation_points(affine)

        assert points[:, 0].tolist() == pytest.approx([0.1, -0.1, 0.2, -0.2, 0.3, -0.3, 0.4, -0.4, 0.5, -0.5])

    def test_radius_star_default(self, affine, stability_config):
        """Test that δ* defaults to half the region radius."""
        assert stability_config.radius_star(affine) == pytest.approx(1.0)

    def test_rejects_bad_grids(self):
        with pytest.raises(ContractViolation):
            StabilityConfig(x_step=0.0)


class TestPerturbationConstants:
    """Tests for l_F and l_f."""

    def test_affine_base_constant(self, affine, stability_config):
        """Test l_f = 1 and l_F = 0 for x - p = 0."""
        constants = estimate_perturbation_constants(affine, 'pointwise', stability_config.p_points(affine))

        assert constants.l_base == pytest.approx(1.0)
        assert constants.l_field == pytest.approx(0.0)
        assert constants.total == pytest.approx(1.0)

    def test_sqrt_base_diverges(self, stability_config):
        """Test that f = x - √|p| has an unbounded base constant."""
        prob = build_instance('sqrt_base')
        constants = estimate_perturbation_constants(prob, 'pointwise', stability_config.p_points(prob))

        assert constants.diverging_base is True
        assert constants.l_base == float('inf')

    def test_needs_distinct_parameter(self, affine):
        with pytest.raises(ContractViolation):
            estimate_perturbation_constants(affine, 'pointwise', np.array([[0.0]]))

    def test_unknown_mode(self, affine, stability_config):
        with pytest.raises(ContractViolation):
            estimate_perturbation_constants(affine, 'global', stability_config.p_points(affine))


class TestHypothesisSampling:
    """Tests for the sampled closedness and continuity hypotheses."""

    def test_continuous_instance_passes(self, affine, schedule):
        p_values = np.array([[0.0], [0.1]])

        assert _lsc_status('ii', affine, p_values, schedule, 0.5).status is Status.SAMPLED
        assert _continuity_status('iv', affine, p_values, schedule, 0.5).status is Status.SAMPLED

    def test_field_not_upper_semicontinuous(self, schedule):
        """Test that F(p,·) growing from [0, 1] to [0, 2] right of x = 0 fails with ψ ≡ 0."""
        status = _lsc_status('ii', _step_field(), np.array([[0.0]]), schedule, 0.5)

        assert status.status is Status.FAILS
        assert status.witness['x'] == [0.0]
        assert status.witness['nearby'][0] > 0
        assert status.witness['excess'] == pytest.approx(1.0)

    def test_base_jump_away_from_reference(self, schedule):
        """Test that a jump of f at x = 0.25 is found although f is continuous at x̄."""
        prob = _jump_base(lambda p, x: float(x[0] > 0.25))
        status = _continuity_status('iv', prob, np.array([[0.0]]), schedule, 0.5)

        assert status.status is Status.FAILS
        assert status.witness['x'] == pytest.approx([0.25])
        assert status.witness['jump'] >= 0.9

    def test_base_jump_only_off_reference_parameter(self, schedule):
        """Test that a jump present only for p ≠ p̄ is found at the nearby parameter."""
        prob = _jump_base(lambda p, x: float(p[0] != 0 and x[0] > 0))

        assert _continuity_status('iv', prob, np.array([[0.0]]), schedule, 0.5).status is Status.SAMPLED
        status = _continuity_status('iv', prob, np.array([[0.0], [0.1]]), schedule, 0.5)

        assert status.status is Status.FAILS
        assert status.witness['p'] == [0.1]


class TestCheckLiplsc:
    """Tests for the Lipschitz lsc checker."""

    def test_affine_passes(self, affine, stability_config):
        """Test that x - p = 0 is Lipschitz lsc with bound about 1."""
        report = check_liplsc(affine, stability_config)

        assert report.verdict is Verdict.PASS
        assert report.bound == pytest.approx(1.0, abs=0.05)
        assert all(row.passed for row in report.validation)
        assert report.empirical.value <= report.bound * 1.05 + 0.01

    def test_sqrt_epigraph_fails_field_constant(self, sqrt_epigraph, stability_config):
        """Test that l_F of [√|p|, ∞) diverges and is reported with a witness."""
        report = check_liplsc(sqrt_epigraph, stability_config)
        field = _status(report, 'iii')

        assert report.verdict is Verdict.FAIL
        assert field.status is Status.FAILS
        assert field.witness
        assert report.bound is None

    def test_infinite_slope_reports_zero_bound(self, affine, stability_config, monkeypatch):
        """Test that c = +inf gives the bound 0 and says so on the slope hypothesis."""
        radii = list(stability_config.schedule.radii)
        monkeypatch.setattr('varistab.stability.partial_strict_outer_slope_x',
                            lambda *args: SlopeEstimate(radii, [np.inf] * len(radii), np.inf, True))
        report = check_liplsc(affine, stability_config)

        assert report.bound == 0.0
        assert report.zeta is None
        assert 'reported as 0' in _status(report, 'vi').note

    def test_zeta_is_informational(self):
        """Test the validation radius formula on simple constants."""
        assert zeta_liplsc(1.0, 0.0, 1.0, 1.0) == pytest.approx(0.25)


class TestCheckCalm:
    """Tests for the graph-slope calmness checker."""

    def test_sqrt_base_fails_base_constant(self, stability_config):
        """Test that the uniform l_f of x - √|p| diverges and blocks the bound."""
        report = check_calm(build_instance('sqrt_base'), stability_config)
        base = _status(report, 'v')

        assert report.verdict is Verdict.FAIL
        assert base.status is Status.FAILS
        assert report.constants.mode == 'uniform'
        assert report.bound is None
        assert report.empirical is None


class TestCheckCalmCoderivative:
    """Tests for the coderivative calmness test."""

    def test_requires_null_base(self, affine, stability_config):
        with pytest.raises(ContractViolation):
            check_calm_coderivative(affine, stability_config)

    def test_bilinear_field_passes(self, bilinear, stability_config):
        """Test that F(p,x) = {|y| >= |px|} passes with c = +inf."""
        report = check_calm_coderivative(bilinear, stability_config)

        assert report.verdict is Verdict.PASS
        assert all(np.isinf(v) for v in report.c.values)
        assert np.isfinite(report.empirical.value)


class TestCheckCalmSmoothBase:
    """Tests for the smooth-base calmness condition."""

    def test_half_slope_field_holds(self, schedule):
        """Test σ_min = 1 against coderivative norm 1/2 with γ = 0.1."""
        report = check_calm_smooth_base(build_instance('half_slope_field'), 0.1, schedule)

        assert report.status.status is Status.HOLDS
        assert report.verdict is Verdict.PASS
        assert report.outer_norm_exact is True

    def test_double_base_holds(self, schedule):
        report = check_calm_smooth_base(build_instance('double_base'), 0.1, schedule)

        assert report.status.status is Status.HOLDS

    def test_square_base_fails(self, schedule):
        """Test that f = x² has a vanishing Jacobian near 0."""
        report = check_calm_smooth_base(build_instance('square_base'), 0.1, schedule)

        assert report.status.status is Status.FAILS
        assert report.status.witness['sigma'] <= 0.1
        assert not any(level.passed for level in report.levels)

    def test_gamma_must_be_positive(self, schedule):
        with pytest.raises(ContractViolation):
            check_calm_smooth_base(build_instance('double_base'), 0.0, schedule)


class TestEkelandTrack:
    """Tests for the descent tracker."""

    def test_affine_reaches_solution(self, affine):
        """Test that the tracker finds x = p within the certified bound."""
        x_hat, certificate = ekeland_track(affine, [0.3], TrackerConfig(c=0.5))

        assert x_hat == pytest.approx([0.3], abs=1e-6)
        assert certificate.psi <= 1e-8
        assert certificate.bound == pytest.approx(0.6)
        assert certificate.within_bound is True
        assert certificate.trace[0] == {'iteration': 0, 'psi': pytest.approx(0.3), 'distance': 0.0}

    def test_cubic_tracking(self):
        """Test x³ = 0.008 from x̄ = 0 with a small descent threshold."""
        prob = build_instance('cubic_tracking')
        x_hat, certificate = ekeland_track(prob, [0.008], TrackerConfig(c=0.01))

        assert x_hat == pytest.approx([0.2], abs=1e-5)
        assert certificate.within_bound is True

    def test_threshold_above_slope_stalls(self, affine):
        """Test that c larger than the slope of ψ cannot be met."""
        with pytest.raises(NoSolutionFound) as excinfo:
            ekeland_track(affine, [0.3], TrackerConfig(c=5.0))

        assert excinfo.value.trace[0]['psi'] == pytest.approx(0.3)

    def test_parameter_outside_region(self, affine):
        with pytest.raises(ContractViolation):
            ekeland_track(affine, [2.0], TrackerConfig(c=0.5))

    def test_config_validation(self):
        with pytest.raises(ContractViolation):
            TrackerConfig(c=0.0)
