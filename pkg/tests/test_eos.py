import numpy as np
import pytest

from mmflow.eos import (MaterialEos, entropy_diagnostic, pressure_from_energy,
                        sound_speed, specific_internal_energy)
from mmflow.errors import DomainError

AIR = MaterialEos(1.4, 0.0)
HELIUM = MaterialEos(1.648, 0.0)
WATER = MaterialEos(4.4, 6450.0)


def test_parameter_validation():
    with pytest.raises(DomainError):
        MaterialEos(1.0, 0.0)
    with pytest.raises(DomainError):
        MaterialEos(1.4, -1.0)


def test_internal_energy_examples():
    assert specific_internal_energy(AIR, 1.0, 1.0) == pytest.approx(2.5)
    # closed form evaluated independently: 1e5 / (0.648 * 0.2163)
    assert specific_internal_energy(HELIUM, 0.2163, 1e5) == pytest.approx(
        1e5 / (0.648 * 0.2163), rel=1e-12)
    # (1 + 4.4*6450) / (3.4*1)
    assert specific_internal_energy(WATER, 1.0, 1.0) == pytest.approx(
        8347.3529411764705, rel=1e-12)


def test_internal_energy_errors():
    with pytest.raises(DomainError):
        specific_internal_energy(AIR, -1.0, 1.0)
    with pytest.raises(DomainError):
        specific_internal_energy(AIR, 1.0, -1.0)


def test_pressure_from_energy_examples():
    assert pressure_from_energy(AIR, 1.0, 2.5) == pytest.approx(1.0)
    e = specific_internal_energy(WATER, 1.0, 1.0)
    assert pressure_from_energy(WATER, 1.0, e) == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(DomainError):
        pressure_from_energy(AIR, 1.0, -1.0)


def test_round_trip_randomized():
    rng = np.random.default_rng(1)
    for eos in (AIR, HELIUM, WATER):
        rho = rng.uniform(0.01, 10.0, 200)
        p = rng.uniform(0.01, 1e6, 200)
        e = specific_internal_energy(eos, rho, p)
        back = pressure_from_energy(eos, rho, e)
        assert np.allclose(back, p, rtol=1e-12)


def test_sound_speed_examples():
    assert sound_speed(AIR, 1.4, 1.0) == pytest.approx(1.0)
    assert sound_speed(AIR, 1.189, 1e5) == pytest.approx(343.1427, rel=1e-5)
    with pytest.raises(DomainError):
        sound_speed(AIR, 1.0, 0.0)


def test_sound_speed_identity():
    rng = np.random.default_rng(2)
    rho = rng.uniform(0.01, 10.0, 100)
    p = rng.uniform(0.01, 1e5, 100)
    for eos in (AIR, WATER):
        c = sound_speed(eos, rho, p)
        assert np.allclose(c ** 2 * rho, eos.gamma * (p + eos.p_inf),
                           rtol=1e-14)


def test_entropy_examples():
    assert entropy_diagnostic(AIR, 1.0, 1.0) == pytest.approx(1.0)
    s_pre = entropy_diagnostic(AIR, 1.189, 1e5)
    s_post = entropy_diagnostic(AIR, 1.6985715, 1.65625e5)
    # independently evaluated: 1e5/1.189^1.4 and 1.65625e5/1.6985715^1.4
    assert s_pre == pytest.approx(78479.0, rel=1e-3)
    assert s_post == pytest.approx(78889.0, rel=1e-3)
    assert s_post > s_pre


def test_entropy_isentrope_invariance():
    # the pair (2 rho, p') with p' + p_inf = 2^gamma (p + p_inf) lies on the
    # same isentrope by construction
    rho, p = 0.7, 2.3
    for eos in (AIR, WATER):
        p2 = (2.0 ** eos.gamma) * (p + eos.p_inf) - eos.p_inf
        assert entropy_diagnostic(eos, 2 * rho, p2) == \
            pytest.approx(entropy_diagnostic(eos, rho, p), rel=1e-12)


def test_entropy_increases_across_admissible_shocks():
    from mmflow.sim import ShockSpec, rankine_hugoniot_post_shock
    rng = np.random.default_rng(3)
    for _ in range(50):
        eos = MaterialEos(rng.uniform(1.1, 5.0), rng.uniform(0.0, 1e3))
        rho0 = rng.uniform(0.1, 5.0)
        p0 = rng.uniform(0.1, 1e4)
        mach = rng.uniform(1.01, 5.0)
        post, _, _ = rankine_hugoniot_post_shock(
            ShockSpec(rho0, 0.0, p0, mach=mach), eos)
        assert entropy_diagnostic(eos, post[0], post[2]) > \
            entropy_diagnostic(eos, rho0, p0)
