import io

import numpy as np
import pytest

from conftest import states
from nhmech import dynamics as dy
from nhmech import mechanics as mech
from nhmech import systems
from nhmech.errors import DomainError, NumericalError
from nhmech.mechanics import State


def test_free_particle_field_hand_value(free_particle):
    # q = (0, 1, 0), v = (1, 1, 1): λ = ẋẏ/(1+y²) = 0.5
    f = dy.constrained_field(free_particle.sys, free_particle.cs, State([0, 1, 0], [1, 1, 1]))
    np.testing.assert_allclose(f.acceleration, [-0.5, 0, 0.5], atol=1e-15)
    np.testing.assert_allclose(f.multipliers, [0.5], atol=1e-15)


def test_free_particle_closed_form_field(free_particle):
    # ẍ = −y ẋ ẏ/(1+y²), z̈ = ẋ ẏ/(1+y²) from d/dt(ż − y ẋ) = 0 with reactions along (−y, 0, 1)
    for s in states(free_particle, 10, seed=11):
        y, xd, yd = s.q[1], s.v[0], s.v[1]
        lam = xd * yd / (1 + y * y)
        expected = np.array([-y * lam, 0.0, lam])
        f = dy.constrained_field(free_particle.sys, free_particle.cs, s)
        np.testing.assert_allclose(f.acceleration, expected, atol=1e-13)


@pytest.mark.parametrize("name", ["free_particle", "carriage"])
def test_multiplier_and_projector_routes_agree(name):
    b = systems.get(name)
    for s in states(b, 100, seed=12):
        a = dy.constrained_field(b.sys, b.cs, s)
        p = dy.projector_field(b.sys, b.cs, s)
        assert np.max(np.abs(a.acceleration - p.acceleration)) < 1e-10
        assert np.max(np.abs(a.multipliers - p.multipliers)) < 1e-10


@pytest.mark.parametrize("name", ["free_particle", "carriage"])
def test_motion_equation_holds_and_perturbation_fails(name):
    b = systems.get(name)
    for s in states(b, 50, seed=13):
        assert dy.verify_motion_equation(b.sys, b.cs, s).passed
    s = states(b, 1, seed=14)[0]
    f = dy.constrained_field(b.sys, b.cs, s)
    d = mech.derivatives(b.sys, s.q, s.v)
    lam = f.multipliers + 1e-3
    A = np.asarray(b.cs.coeff(s.q), dtype=float)
    acc = np.linalg.solve(d.W, d.dq - d.Wvq @ s.v + A.T @ lam)
    bad = dy.ConstrainedField(acc, lam, 0.0)
    rep = dy.verify_motion_equation(b.sys, b.cs, s, field=bad)
    assert not rep.passed
    assert rep.notes["tangency_N"] > 1e-6


def test_nonlinear_constraint_field_is_tangent():
    b = systems.get("appel_hamel")
    for s in states(b, 10, seed=15):
        assert dy.verify_motion_equation(b.sys, b.cs, s).passed


@pytest.mark.parametrize("name", ["free_particle", "carriage"])
def test_integration_conserves_energy_and_constraints(name):
    b = systems.get(name)
    s0 = states(b, 1, seed=16)[0]
    tr = dy.integrate(b.sys, b.cs, s0, 1e-3, 500)
    assert np.max(np.abs(tr.energy - tr.energy[0])) < 1e-10
    assert np.max(tr.psi_max) < 1e-12


def test_integration_matches_known_free_particle_motion(free_particle):
    # with y fixed (ẏ = 0) the motion is uniform: x = t, z = y t
    tr = dy.integrate(free_particle.sys, free_particle.cs, State([0, 2, 0], [1, 0, 2]), 1e-2, 100)
    np.testing.assert_allclose(tr.q[-1], [1.0, 2.0, 2.0], atol=1e-12)


def test_zero_steps_single_row(free_particle):
    tr = dy.integrate(free_particle.sys, free_particle.cs, free_particle.default_state, 1e-3, 0)
    assert len(tr) == 1
    text = tr.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "t,q1,q2,q3,v1,v2,v3,lam1,energy,psi_max"
    assert len(lines) == 2


def test_csv_uses_17_digits(carriage):
    tr = dy.integrate(carriage.sys, carriage.cs, carriage.default_state, 1e-3, 3)
    buf = io.StringIO()
    tr.write_csv(buf)
    row = buf.getvalue().splitlines()[2].split(",")
    back = np.array([float(x) for x in row])
    np.testing.assert_array_equal(back[1:6], tr.q[1])


def test_integrate_rejects_off_N_and_reports_step(free_particle):
    with pytest.raises(DomainError):
        dy.integrate(free_particle.sys, free_particle.cs, State([0, 1, 0], [1, 0, 0]), 1e-3, 5)
    with pytest.raises(NumericalError) as info:
        dy.integrate(free_particle.sys, free_particle.cs, State([0, 0, 0], [1e200, 0, 0]), 1e300, 5)
    assert info.value.step >= 1


def test_hamiltonian_field_matches_lagrangian(carriage):
    for s in states(carriage, 10, seed=17):
        ph = mech.legendre(carriage.sys, s)
        hf = dy.hamiltonian_field(carriage.sys, carriage.cs, ph)
        f = dy.constrained_field(carriage.sys, carriage.cs, s)
        d = mech.derivatives(carriage.sys, s.q, s.v)
        np.testing.assert_allclose(hf.qdot, s.v, atol=1e-12)
        np.testing.assert_allclose(hf.multipliers, f.multipliers, atol=1e-10)
        # ṗ = d/dt (M v) = (∂M/∂q · v) v + M a
        np.testing.assert_allclose(hf.pdot, d.Wvq @ s.v + d.W @ f.acceleration, atol=1e-10)


@pytest.mark.parametrize("name", ["free_particle", "carriage"])
def test_bates_sniatycki_residual(name):
    b = systems.get(name)
    for s in states(b, 50, seed=18):
        rep = dy.bates_sniatycki_check(b.sys, b.cs, b.action, s)
        assert rep.passed, rep.max_residual
