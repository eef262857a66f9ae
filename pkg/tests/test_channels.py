import numpy as np
import pytest
from numpy.testing import assert_allclose

from channel_steering.channels import (
    Channel,
    ChannelExtension,
    EbStatus,
    Instrument,
    KrausSet,
    Subchannel,
    amplitude_damping_kraus,
    apply,
    apply_dual,
    channel_convex_extension,
    choi_from_kraus,
    complementary,
    compose_on_a,
    dephasing_kraus,
    depolarizing_kraus,
    dilation,
    eb_check,
    extension_from_isometry,
    fixed_output_channel,
    fixed_output_extension,
    identity_channel,
    incoherent_extension,
    is_extremal,
    kraus_from_choi,
    kraus_pointer_extension,
    luders_instrument,
    marginal,
    pointer_extension,
    povm_from_instrument,
    random_channel,
    random_extension,
    random_instrument,
    stinespring_from_kraus,
    subchannel_from_kraus,
    swap_receivers,
)
from channel_steering.errors import DimensionMismatchError, InvariantViolation
from channel_steering.linalg import PAULI, max_entangled, partial_trace, permute_subsystems
from channel_steering.samplers import random_density, random_kraus, random_povm


def _kraus_action(k: KrausSet, rho):
    return sum(op @ rho @ op.conj().T for op in k.operators)


@pytest.mark.parametrize("seed", range(5))
def test_kraus_choi_round_trip(seed):
    k = KrausSet(tuple(random_kraus(2, 3, 3, seed=seed)))
    c = choi_from_kraus(k)
    assert np.trace(c.choi).real == pytest.approx(1.0)
    again = choi_from_kraus(kraus_from_choi(c))
    assert_allclose(again.choi, c.choi, atol=1e-10)
    assert len(kraus_from_choi(c)) == 3


def test_kraus_rank_is_minimal():
    assert len(kraus_from_choi(identity_channel(3))) == 1
    assert len(kraus_from_choi(choi_from_kraus(dephasing_kraus(0.5)))) == 2
    assert len(kraus_from_choi(choi_from_kraus(depolarizing_kraus(1.0)))) == 4


@pytest.mark.parametrize("seed", range(5))
def test_apply_matches_kraus_action(seed):
    k = KrausSet(tuple(random_kraus(3, 2, 2, seed=seed)))
    rho = random_density(3, seed=100 + seed)
    assert_allclose(apply(choi_from_kraus(k), rho), _kraus_action(k, rho), atol=1e-12)


def test_apply_acts_on_the_first_factor_only():
    psi = max_entangled(2)
    assert_allclose(apply(identity_channel(2), psi, ancilla_dim=2), psi, atol=1e-12)
    sigma = random_density(2, seed=3)
    out = apply(fixed_output_channel(sigma, 2), psi, ancilla_dim=2)
    assert_allclose(out, np.kron(sigma, np.eye(2) / 2), atol=1e-12)


def test_apply_rejects_bad_inputs():
    with pytest.raises(InvariantViolation):
        apply(identity_channel(2), 2 * np.eye(2) / 2)
    with pytest.raises(DimensionMismatchError):
        apply(identity_channel(2), np.eye(3) / 3)


@pytest.mark.parametrize("seed", range(5))
def test_dual_is_the_adjoint(seed):
    rng = np.random.default_rng(seed)
    c = random_channel(2, 3, kraus_rank=2, seed=rng)
    rho = random_density(2, seed=rng)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    y = g + g.conj().T
    lhs = np.trace(y @ apply(c, rho))
    rhs = np.trace(apply_dual(c, y) @ rho)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    # unital dual of a trace-preserving map
    assert_allclose(apply_dual(c, np.eye(3)), np.eye(2), atol=1e-12)


def test_validation_of_maps():
    with pytest.raises(InvariantViolation) as e:
        Subchannel(-max_entangled(2), 2, 2)
    assert e.value.invariant == "complete-positivity"

    with pytest.raises(InvariantViolation) as e:
        Channel(max_entangled(2) / 2, 2, 2)
    assert e.value.invariant == "trace-preservation"

    with pytest.raises(InvariantViolation) as e:
        KrausSet((np.sqrt(2) * np.eye(2),))
    assert e.value.invariant == "trace-non-increasing"

    with pytest.raises(DimensionMismatchError):
        ChannelExtension(max_entangled(2), 2, (2,))

    # subchannels accept trace-decreasing maps
    half = Subchannel(max_entangled(2) / 2, 2, 2)
    assert half.out_dim == 2


def test_stinespring_is_an_isometry():
    k = amplitude_damping_kraus(0.3)
    iso = stinespring_from_kraus(k)
    assert iso.d_env == 2
    assert_allclose(iso.v.conj().T @ iso.v, np.eye(2), atol=1e-12)
    e = extension_from_isometry(iso)
    assert_allclose(marginal(e, "B").choi, choi_from_kraus(k).choi, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_dilation_recovers_the_channel(seed):
    c = random_channel(2, 3, kraus_rank=2, seed=seed)
    e = dilation(c)
    assert e.d_a == 2
    assert e.d_b == 3
    assert_allclose(marginal(e, "B").choi, c.choi, atol=1e-10)
    # pure extension: rank-one Choi
    assert np.linalg.matrix_rank(e.choi, tol=1e-9) == 1


def test_complementary_of_fixed_output_is_identity():
    sigma = np.diag([0.75, 0.25])
    e = fixed_output_extension(sigma)
    assert_allclose(complementary(e).choi, identity_channel(2).choi, atol=1e-12)
    assert_allclose(marginal(e, "B").choi, fixed_output_channel(sigma, 2).choi, atol=1e-12)


def test_swap_receivers_is_involutive():
    e = random_extension(2, 2, 3, seed=5)
    swapped = swap_receivers(e)
    assert swapped.d_out == (3, 2)
    assert_allclose(marginal(swapped, "A").choi, marginal(e, "B").choi, atol=1e-12)
    assert_allclose(swap_receivers(swapped).choi, e.choi, atol=1e-12)


def test_compose_on_a():
    e = random_extension(2, 2, 2, seed=8)
    assert_allclose(compose_on_a(e, identity_channel(2)).choi, e.choi, atol=1e-12)

    flat = compose_on_a(e, fixed_output_channel(np.eye(3) / 3, 2))
    assert flat.d_out == (3, 2)
    expected = permute_subsystems(np.kron(marginal(e, "B").choi, np.eye(3) / 3), (2, 2, 3), [0, 2, 1])
    assert_allclose(flat.choi, expected, atol=1e-12)

    with pytest.raises(DimensionMismatchError):
        compose_on_a(e, identity_channel(3))


def test_instrument_completeness():
    p0 = np.diag([1.0, 0.0])
    partial = subchannel_from_kraus(KrausSet((p0,)))
    with pytest.raises(InvariantViolation) as e:
        Instrument((partial,))
    assert e.value.invariant == "instrument-completeness"

    inst = luders_instrument([p0, np.eye(2) - p0])
    assert len(inst) == 2
    assert inst.channel.d_in == 2


def test_povm_of_a_luders_instrument():
    povm = random_povm(3, 3, seed=2)
    effects = povm_from_instrument(luders_instrument(povm))
    for got, want in zip(effects, povm, strict=True):
        assert_allclose(got, want, atol=1e-12)


def test_pointer_extension_marginals():
    inst = random_instrument(2, 2, 3, seed=4)
    e = pointer_extension(inst)
    assert e.d_a == 3
    assert_allclose(marginal(e, "B").choi, inst.channel.choi, atol=1e-12)
    # A holds the flag: its marginal is a measure-and-prepare channel
    flags = partial_trace(e.choi, e.dims, [0, 1])
    assert eb_check(Channel(flags, 2, 3)) != EbStatus.NOT_EB


def test_incoherent_extension_validation():
    inst = random_instrument(2, 2, 2, seed=6)
    with pytest.raises(DimensionMismatchError):
        incoherent_extension(inst, [np.eye(2) / 2])
    with pytest.raises(InvariantViolation):
        incoherent_extension(inst, [np.eye(2), np.eye(2) / 2])


def test_kraus_pointer_and_convex_extensions():
    k = dephasing_kraus(0.5)
    e = kraus_pointer_extension(k)
    assert_allclose(marginal(e, "B").choi, choi_from_kraus(k).choi, atol=1e-12)

    mix = channel_convex_extension([identity_channel(2), fixed_output_channel(np.eye(2) / 2, 2)], [0.25, 0.75])
    expected = 0.25 * identity_channel(2).choi + 0.75 * np.kron(np.eye(2) / 2, np.eye(2) / 2)
    assert_allclose(marginal(mix, "B").choi, expected, atol=1e-12)
    with pytest.raises(InvariantViolation):
        channel_convex_extension([identity_channel(2)], [0.5])


def test_eb_check():
    assert eb_check(identity_channel(2)) == EbStatus.NOT_EB
    assert eb_check(choi_from_kraus(dephasing_kraus(0.5))) == EbStatus.EB_CERTIFIED
    assert eb_check(fixed_output_channel(np.diag([0.75, 0.25]), 2)) == EbStatus.EB_CERTIFIED
    assert eb_check(fixed_output_channel(np.eye(3) / 3, 3)) == EbStatus.INCONCLUSIVE
    # the fixed-output extension as a whole keeps C' entangled with A
    e = fixed_output_extension(np.diag([0.75, 0.25]))
    assert eb_check(e) == EbStatus.NOT_EB


def test_extremality():
    assert is_extremal(amplitude_damping_kraus(0.5))
    assert not is_extremal(dephasing_kraus(0.5))
    assert is_extremal(KrausSet((PAULI["x"],)))
    assert not is_extremal(depolarizing_kraus(1.0))


def test_random_extension_needs_room():
    with pytest.raises(DimensionMismatchError):
        random_extension(3, 1, 2)
    e = random_extension(3, 1, 3, seed=1)
    assert e.dims == (3, 1, 3)
