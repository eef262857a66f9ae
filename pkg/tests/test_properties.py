"""
Randomized property sweeps over many instances.

All marked slow; run them with ``pytest -m slow``.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from channel_steering import channels, samplers
from channel_steering.linalg import fro
from channel_steering.steering import (
    channel_quantifier,
    choi_state_assemblage,
    induced_channel_assemblage,
    local_processing_covariance,
    pauli_measurements,
    mix_with_noise,
    random_measurement_assemblage,
    steerable_weight,
    steering_robustness,
    test_unsteerable as decide_unsteerable,
    theorem2_necessary_check,
    unsteerable_realization,
    verify_theorem1,
)
from channel_steering.tomography import (
    ExtensionBlackBox,
    default_probes,
    reconstruct_ancilla,
    reconstruct_products,
)

pytestmark = pytest.mark.slow


def _incoherent(seed: int, d: int | None = None) -> channels.ChannelExtension:
    """Instrument with 2-4 members, flagged either orthogonally or by random states."""
    rng = np.random.default_rng(seed)
    d = d or int(rng.integers(2, 4))
    members = int(rng.integers(2, 5))
    inst = channels.random_instrument(d, d, members, seed=rng)
    if seed % 2:
        return channels.pointer_extension(inst)
    return channels.incoherent_extension(inst, [samplers.random_density(2, rng) for _ in range(members)])


def _mixed_instance(seed: int) -> channels.ChannelExtension:
    rng = np.random.default_rng(1000 + seed)
    match seed % 4:
        case 0:
            return channels.pointer_extension(channels.random_instrument(2, 2, 2, seed=rng))
        case 1:
            return channels.kraus_pointer_extension(channels.KrausSet(tuple(samplers.random_kraus(2, 2, 2, rng))))
        case 2:
            inst = channels.random_instrument(2, 2, 2, seed=rng)
            return channels.incoherent_extension(inst, [samplers.random_density(2, rng) for _ in range(2)])
        case _:
            return channels.random_extension(2, 2, 2, seed=rng)


def _noisy_choi_assemblage(seed: int):
    rng = np.random.default_rng(2000 + seed)
    e = channels.random_extension(2, 2, 2, seed=rng)
    sa = choi_state_assemblage(induced_channel_assemblage(e, random_measurement_assemblage(2, 2, 2, seed=rng)))
    return mix_with_noise(sa, float(rng.uniform(0, 1)))


@pytest.mark.parametrize("seed", range(50))
def test_incoherent_extensions_are_unsteerable(seed):
    e = _incoherent(seed)
    ma = random_measurement_assemblage(e.d_a, 2, 2, seed=seed)
    sa = choi_state_assemblage(induced_channel_assemblage(e, ma))
    verdict = decide_unsteerable(sa)
    assert not verdict.steerable

    realization = unsteerable_realization(sa, verdict)
    assert realization.deviation <= 1e-7
    assert theorem2_necessary_check(realization.extension, incoherent=True).ppt


@pytest.mark.parametrize("seed", range(100))
def test_choi_reduction_agrees(seed):
    e = _mixed_instance(seed)
    report = verify_theorem1(e, random_measurement_assemblage(e.d_a, 2, 2, seed=seed))
    assert report.agree
    assert report.difference <= 1e-6


@pytest.mark.parametrize("seed", range(50))
def test_incoherent_extensions_are_ppt(seed):
    report = theorem2_necessary_check(_incoherent(seed), incoherent=True)
    assert report.min_eigenvalue >= -1e-8


@pytest.mark.parametrize("seed", range(20))
def test_two_kraus_dilations_violate_ppt(seed):
    kraus = channels.KrausSet(tuple(samplers.random_kraus(2, 2, 2, seed)))
    e = channels.extension_from_isometry(channels.stinespring_from_kraus(kraus))
    assert e.d_a == 2
    assert not theorem2_necessary_check(e).ppt


@pytest.mark.parametrize("seed", range(50))
def test_complementary_of_incoherent_is_entanglement_breaking(seed):
    rng = np.random.default_rng(seed)
    inst = channels.random_instrument(2, 2, 2, seed=rng)
    e = (
        channels.pointer_extension(inst)
        if seed % 2
        else channels.incoherent_extension(inst, [samplers.random_density(2, rng) for _ in range(2)])
    )
    assert channels.eb_check(channels.complementary(e)) is channels.EbStatus.EB_CERTIFIED
    assert_allclose(sum(channels.povm_from_instrument(inst)), np.eye(2), atol=1e-9)


@pytest.mark.parametrize("seed", range(50))
def test_reconstructions_match_direct_construction(seed):
    rng = np.random.default_rng(seed)
    e = channels.random_extension(2, 2, 2, seed=rng)
    ma = random_measurement_assemblage(2, 2, 2, seed=rng)
    box = ExtensionBlackBox(e, ma)
    direct = induced_channel_assemblage(e, ma)
    for reconstructed in (reconstruct_ancilla(box, 2, 2), reconstruct_products(box, default_probes(2), 2, 2)):
        error = max(
            fro(r.choi - d.choi)
            for row_r, row_d in zip(reconstructed.members, direct.members, strict=True)
            for r, d in zip(row_r, row_d, strict=True)
        )
        assert error <= 1e-8


@pytest.mark.parametrize("seed", range(50))
def test_processing_on_a_does_not_increase_robustness(seed):
    rng = np.random.default_rng(seed)
    e = channels.random_extension(2, 2, 2, seed=rng)
    gamma = channels.choi_from_kraus(channels.pauli_kraus(samplers.random_pauli_probabilities(rng)))
    xz = pauli_measurements("xz")

    assert local_processing_covariance(e, gamma, xz).deviation <= 1e-9
    before = channel_quantifier(e, xz)
    after = channel_quantifier(channels.compose_on_a(e, gamma), xz)
    assert after <= before + 1e-6


@pytest.mark.parametrize("seed", range(100))
def test_steerable_weight_is_a_fraction(seed):
    verdict = steerable_weight(_noisy_choi_assemblage(seed))
    assert -1e-7 <= verdict.value <= 1 + 1e-7
    assert verdict.certified


@pytest.mark.parametrize("seed", range(200))
def test_feasibility_and_robustness_agree(seed):
    sa = _noisy_choi_assemblage(seed)
    decided = decide_unsteerable(sa)
    quantified = steering_robustness(sa)
    assert decided.steerable == quantified.steerable
    assert decided.certified
    assert quantified.certified
    if not quantified.steerable:
        assert quantified.model is not None


@pytest.mark.parametrize("seed", range(50))
def test_processing_covariance_with_general_channels(seed):
    rng = np.random.default_rng(seed)
    e = channels.random_extension(2, 2, 2, seed=rng)
    gamma = channels.random_channel(2, 3, kraus_rank=3, seed=rng)
    ma = random_measurement_assemblage(3, 2, 3, seed=rng)
    assert local_processing_covariance(e, gamma, ma).deviation <= 1e-9
