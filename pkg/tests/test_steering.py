import numpy as np
import pytest
from numpy.testing import assert_allclose

from channel_steering import channels, steering
from channel_steering.errors import (
    DimensionMismatchError,
    InvariantViolation,
    SolverFailure,
    StrategyCapExceeded,
)
from channel_steering.linalg import fro, max_entangled
from channel_steering.samplers import random_density
from channel_steering.steering import (
    ChannelAssemblage,
    DeterministicStrategySet,
    MeasurementAssemblage,
    StateAssemblage,
    basis_measurement,
    channel_quantifier,
    choi_state_assemblage,
    induced_channel_assemblage,
    induced_state_assemblage,
    local_processing_covariance,
    mix_with_noise,
    processed_measurements,
    quantifier_value,
    random_measurement_assemblage,
    schmidt_coefficients,
    search_pure_inputs,
    steerable_weight,
    steered_choi_assemblage,
    steering_robustness,
    test_unsteerable as decide_unsteerable,
    theorem2_necessary_check,
    unsteerable_realization,
    verify_theorem1,
    verify_witness,
)

SQRT2_MINUS_1 = np.sqrt(2) - 1


def _werner(visibility):
    return visibility * max_entangled(2) + (1 - visibility) * np.eye(4) / 4


def _random_choi_assemblage(seed):
    rng = np.random.default_rng(seed)
    e = channels.random_extension(2, 2, 2, seed=rng)
    return choi_state_assemblage(induced_channel_assemblage(e, random_measurement_assemblage(2, 2, 2, seed=rng)))


# --- assemblages -------------------------------------------------------------------


def test_psi_plus_members(psi_plus_assemblage):
    sa = psi_plus_assemblage
    assert sa.outcomes == (2, 2)
    assert sa.dims == (2,)
    assert_allclose(sa.members[0][0], np.array([[1, 1], [1, 1]]) / 4, atol=1e-15)
    assert_allclose(sa.members[1][1], np.diag([0, 0.5]), atol=1e-15)
    assert_allclose(sa.reduced, np.eye(2) / 2, atol=1e-15)


def test_povm_completeness_is_enforced():
    with pytest.raises(InvariantViolation) as e:
        MeasurementAssemblage(((np.eye(2) / 2,),))
    assert e.value.invariant == "povm-completeness"
    with pytest.raises(InvariantViolation) as e:
        MeasurementAssemblage(((2 * np.eye(2), -np.eye(2)),))
    assert e.value.invariant == "povm-positivity"


def test_small_no_signalling_drift_is_repaired(psi_plus_assemblage):
    noisy = mix_with_noise(psi_plus_assemblage, 0.1)
    members = [list(row) for row in noisy.members]
    members[0][0] = members[0][0] + 1e-9 * np.eye(2)
    repaired = StateAssemblage(tuple(tuple(row) for row in members), (2,))
    sums = [sum(row) for row in repaired.members]
    assert_allclose(sums[0], sums[1], atol=1e-15)

    members[0][0] = members[0][0] + 1e-3 * np.eye(2)
    with pytest.raises(InvariantViolation) as e:
        StateAssemblage(tuple(tuple(row) for row in members), (2,))
    assert e.value.invariant == "no-signalling"


def test_channel_assemblage_no_signalling():
    inst = channels.random_instrument(2, 2, members=2, seed=1)
    other = channels.random_instrument(2, 2, members=2, seed=2)
    with pytest.raises(InvariantViolation):
        ChannelAssemblage((inst.members, other.members))


def test_strategy_enumeration():
    strategies = DeterministicStrategySet((3, 2))
    assert len(strategies) == 6
    assert strategies.strategies[0] == (0, 0)
    assert strategies.strategies[-1] == (2, 1)
    assert strategies.response(3, 1, 0) == 1
    assert strategies.response(3, 0, 1) == 0
    with pytest.raises(StrategyCapExceeded):
        DeterministicStrategySet((2,) * 13)
    with pytest.raises(StrategyCapExceeded):
        DeterministicStrategySet((2, 2), cap=3)


def test_trivial_measurement_is_unsteerable():
    trivial = MeasurementAssemblage(((np.eye(2),),))
    sa = induced_state_assemblage(max_entangled(2), (2, 2), 0, trivial)
    assert_allclose(sa.members[0][0], np.eye(2) / 2, atol=1e-15)
    verdict = decide_unsteerable(sa)
    assert not verdict.steerable
    assert verdict.certified


def test_pointer_measurement_recovers_the_instrument():
    inst = channels.random_instrument(2, 2, members=3, seed=11)
    ca = induced_channel_assemblage(channels.pointer_extension(inst), basis_measurement(3))
    for got, want in zip(ca.members[0], inst.members, strict=True):
        assert_allclose(got.choi, want.choi, atol=1e-12)


def test_induced_assemblage_dimension_checks(xz):
    with pytest.raises(DimensionMismatchError):
        induced_channel_assemblage(channels.random_extension(2, 3, 2, seed=0), xz)
    with pytest.raises(DimensionMismatchError):
        induced_state_assemblage(np.eye(6) / 6, (3, 2), 0, xz)


# --- witnesses -------------------------------------------------------------------------


def test_analytic_witness(psi_plus_assemblage, xz):
    check = verify_witness(psi_plus_assemblage, xz.povms)
    assert check.value == pytest.approx(2.0)
    assert check.bound == pytest.approx(1 + 1 / np.sqrt(2))
    assert check.gap == pytest.approx(1 - 1 / np.sqrt(2))
    assert check.steerable


def test_witness_validation(psi_plus_assemblage, xz):
    with pytest.raises(InvariantViolation):
        verify_witness(psi_plus_assemblage, ((-np.eye(2), np.eye(2)), xz.povms[1]))
    with pytest.raises(DimensionMismatchError):
        verify_witness(psi_plus_assemblage, (xz.povms[0],))


# --- quantifiers -----------------------------------------------------------------------


def test_consistent_robustness_of_psi_plus(psi_plus_assemblage):
    verdict = steering_robustness(psi_plus_assemblage)
    assert verdict.steerable
    assert verdict.quantifier == "robustness"
    assert verdict.value == pytest.approx(SQRT2_MINUS_1, abs=1e-6)
    assert verdict.certified
    assert not verdict.boundary
    check = verify_witness(psi_plus_assemblage, verdict.witness)
    assert check.gap >= verdict.value - 1e-6


def test_general_robustness_of_psi_plus(psi_plus_assemblage):
    verdict = steering_robustness(psi_plus_assemblage, noise="general")
    assert verdict.value == pytest.approx(3 - 2 * np.sqrt(2), abs=1e-6)
    assert verdict.certified
    with pytest.raises(ValueError):
        steering_robustness(psi_plus_assemblage, noise="white")


def test_robustness_under_added_noise(psi_plus_assemblage):
    verdict = steering_robustness(mix_with_noise(psi_plus_assemblage, 0.1))
    assert verdict.value == pytest.approx(0.9 * np.sqrt(2) - 1, abs=1e-6)
    assert verdict.certified


def test_noise_path_is_monotone(psi_plus_assemblage):
    values = [quantifier_value(mix_with_noise(psi_plus_assemblage, w)) for w in (0.0, 0.1, 0.2, 0.3, 0.5)]
    assert all(later <= earlier + 1e-7 for earlier, later in zip(values, values[1:]))
    assert values[-1] == pytest.approx(0.0, abs=1e-7)


def test_steerable_weight_of_psi_plus(psi_plus_assemblage):
    verdict = steerable_weight(psi_plus_assemblage)
    assert verdict.steerable
    assert verdict.value >= 0.1
    assert verdict.value <= 1 + 1e-6
    assert verdict.certified


def test_steerable_weight_of_the_dephasing_dilation(dephasing_dilation, xz):
    sa = choi_state_assemblage(induced_channel_assemblage(dephasing_dilation, xz))
    verdict = steerable_weight(sa)
    assert verdict.certified
    assert verdict.value == pytest.approx(1.0, abs=1e-6)
    assert channel_quantifier(dephasing_dilation, xz, "weight") == pytest.approx(verdict.value, abs=1e-7)


def test_steerable_weight_of_a_noisy_assemblage(psi_plus_assemblage):
    verdict = steerable_weight(mix_with_noise(psi_plus_assemblage, 0.1))
    assert verdict.steerable
    assert verdict.quantifier == "weight"
    # the X/Z witness alone forces at least (1.9 - b) / (2 - b) with b = 1 + 1/sqrt(2)
    assert 0.6 <= verdict.value <= 1 + 1e-6
    assert verdict.certified


def test_werner_state_below_the_threshold_is_unsteerable(xz):
    sa = induced_state_assemblage(_werner(0.5), (2, 2), 0, xz)
    verdict = decide_unsteerable(sa)
    assert not verdict.steerable
    assert verdict.quantifier == "feasibility"
    assert verdict.value == 0.0
    assert verdict.certified
    assert len(verdict.model) == len(verdict.strategies) == 4
    assert all(np.linalg.eigvalsh(x)[0] >= -1e-12 for x in verdict.model)


def test_product_state_is_unsteerable(xz):
    state = np.kron(random_density(2, seed=1), random_density(2, seed=2))
    verdict = decide_unsteerable(induced_state_assemblage(state, (2, 2), 0, xz))
    assert not verdict.steerable
    assert verdict.model_error <= 1e-7


def test_unsteerable_robustness_verdict_carries_a_model(xz):
    verdict = steering_robustness(induced_state_assemblage(_werner(0.5), (2, 2), 0, xz))
    assert not verdict.steerable
    assert verdict.value == pytest.approx(0.0, abs=1e-7)
    assert verdict.model is not None
    assert verdict.model_error <= 1e-7


@pytest.mark.parametrize("seed", range(4))
def test_feasibility_and_robustness_agree(seed):
    sa = _random_choi_assemblage(seed)
    decided = decide_unsteerable(sa)
    quantified = steering_robustness(sa)
    assert decided.steerable == quantified.steerable
    assert decided.certified
    assert quantified.certified


def test_missing_model_below_the_boundary_is_inconclusive(monkeypatch, xz):
    monkeypatch.setattr(steering, "_feasible_model", lambda sa, comp: (None, {}))
    with pytest.raises(SolverFailure) as info:
        steering_robustness(induced_state_assemblage(_werner(0.5), (2, 2), 0, xz))
    assert info.value.status == "inconclusive"


def test_quantifier_value_rejects_unknown_measure(psi_plus_assemblage):
    with pytest.raises(ValueError):
        quantifier_value(psi_plus_assemblage, "negativity")


# --- extensions -------------------------------------------------------------------------


def test_dephasing_dilation_matches_psi_plus(dephasing_dilation, xz):
    assert channel_quantifier(dephasing_dilation, xz) == pytest.approx(SQRT2_MINUS_1, abs=1e-6)


def test_one_dimensional_alice_cannot_steer():
    e = channels.random_extension(2, 1, 2, seed=3)
    assert channel_quantifier(e, basis_measurement(1)) == pytest.approx(0.0, abs=1e-7)


def test_channel_quantifier_options(dephasing_dilation, xz):
    with pytest.raises(ValueError):
        channel_quantifier(dephasing_dilation, xz, mode="best")
    with pytest.raises(ValueError):
        channel_quantifier(dephasing_dilation, xz, measure="negativity")


def test_schmidt_coefficients():
    assert_allclose(schmidt_coefficients([0.0]), [1.0, 0.0], atol=1e-15)
    assert_allclose(schmidt_coefficients([np.pi / 2]), [0.0, 1.0], atol=1e-15)
    p = schmidt_coefficients([0.3, 1.1, 0.7])
    assert len(p) == 4
    assert p.sum() == pytest.approx(1.0)


def test_uniform_input_is_the_choi_assemblage(dephasing_dilation, xz):
    ca = induced_channel_assemblage(dephasing_dilation, xz)
    steered = steered_choi_assemblage(ca, [0.5, 0.5])
    for row_s, row_c in zip(steered.members, choi_state_assemblage(ca).members, strict=True):
        for s, c in zip(row_s, row_c, strict=True):
            assert_allclose(s, c, atol=1e-12)


def test_input_search_never_loses_to_the_choi_input(dephasing_dilation, xz):
    ca = induced_channel_assemblage(dephasing_dilation, xz)
    result = search_pure_inputs(ca)
    assert result.value >= result.choi_value - 1e-9
    assert result.choi_value == pytest.approx(SQRT2_MINUS_1, abs=1e-6)
    assert sum(result.schmidt) == pytest.approx(1.0)
    assert result.evaluations > 1


def test_input_search_dimension_limit():
    ca = induced_channel_assemblage(channels.random_extension(5, 2, 3, seed=0), basis_measurement(2))
    with pytest.raises(DimensionMismatchError):
        search_pure_inputs(ca)


# --- structural checks -------------------------------------------------------------------


def test_choi_reduction_on_standard_extensions(dephasing_dilation, pointer, fixed_output, xz):
    report = verify_theorem1(dephasing_dilation, xz)
    assert report.agree
    assert report.channel_path.steerable

    report = verify_theorem1(fixed_output, xz)
    assert report.channel_path.steerable

    report = verify_theorem1(pointer, random_measurement_assemblage(3, 2, 2, seed=5))
    assert report.agree
    assert not report.channel_path.steerable


@pytest.mark.parametrize("seed", range(3))
def test_choi_reduction_on_random_extensions(seed):
    rng = np.random.default_rng(seed)
    e = channels.random_extension(2, 2, 2, seed=rng)
    report = verify_theorem1(e, random_measurement_assemblage(2, 2, 2, seed=rng))
    assert report.difference <= 1e-6


def test_ppt_check_of_extensions(fixed_output, pointer, dephasing_dilation):
    report = theorem2_necessary_check(fixed_output)
    assert not report.ppt
    assert report.status == "violation"
    assert report.min_eigenvalue == pytest.approx(-0.375)

    report = theorem2_necessary_check(pointer, incoherent=True)
    assert report.ppt
    assert report.status == "consistent"
    assert report.expected_incoherent
    assert not report.contradicts_incoherence
    assert "A : BC'" in report.caveat

    assert not theorem2_necessary_check(dephasing_dilation).ppt


def test_ppt_violation_on_an_incoherent_extension_is_flagged(fixed_output, dephasing_dilation):
    report = theorem2_necessary_check(dephasing_dilation, incoherent=True)
    assert report.status == "violation"
    assert report.contradicts_incoherence

    assert not theorem2_necessary_check(fixed_output).contradicts_incoherence


def test_local_processing_covariance(dephasing_dilation, xz):
    report = local_processing_covariance(dephasing_dilation, channels.identity_channel(2), xz)
    assert report.holds
    assert report.deviation <= 1e-12

    depolarize = channels.fixed_output_channel(np.eye(2) / 2, 2)
    assert local_processing_covariance(dephasing_dilation, depolarize, xz).holds
    effects = processed_measurements(depolarize, xz)
    assert all(np.allclose(m, np.eye(2) / 2) for povm in effects.povms for m in povm)

    with pytest.raises(DimensionMismatchError):
        processed_measurements(channels.identity_channel(3), xz)


def test_dephasing_alice_destroys_steering(dephasing_dilation, xz):
    dephase = channels.choi_from_kraus(channels.dephasing_kraus(0.5))
    assert local_processing_covariance(dephasing_dilation, dephase, xz).holds
    before = channel_quantifier(dephasing_dilation, xz)
    after = channel_quantifier(channels.compose_on_a(dephasing_dilation, dephase), xz)
    assert after <= before + 1e-7
    assert after == pytest.approx(0.0, abs=1e-7)


def test_unsteerable_realization(pointer):
    sa = choi_state_assemblage(induced_channel_assemblage(pointer, random_measurement_assemblage(3, 2, 2, seed=9)))
    verdict = decide_unsteerable(sa)
    assert not verdict.steerable
    realization = unsteerable_realization(sa, verdict)
    assert realization.deviation <= 1e-7
    assert realization.extension.d_a == len(verdict.strategies)
    assert theorem2_necessary_check(realization.extension).ppt
    # the realized extension implements the same channel towards B
    assert fro(channels.marginal(realization.extension, "B").choi - channels.marginal(pointer, "B").choi) <= 1e-6


def test_realization_needs_a_model(psi_plus_assemblage):
    verdict = steering_robustness(psi_plus_assemblage)
    with pytest.raises(InvariantViolation):
        unsteerable_realization(psi_plus_assemblage, verdict)
