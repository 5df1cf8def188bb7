import math
from dataclasses import replace

import numpy as np
import pytest

from rydgate import (
    build_basis,
    build_collapse_set,
    build_composite,
    basis_state,
    propagate_lindblad,
    propagate_schrodinger,
)
from rydgate.atom import LEVEL_INDEX, composite_index
from rydgate.dynamics import CollapseSet, QuantumState, reduced_populations
from rydgate.errors import PropagationError
from rydgate.params import scale_lifetimes
from rydgate.pulses import envelope_fn, square_shape


def two_level_system(s1, b0_zero=False):
    """Composite Hamiltonian with the control drive masked down to q1 <-> r."""
    basis = build_basis(s1)
    h = build_composite(s1, basis, basis)
    keep = np.zeros((10, 10))
    q1, rt = LEVEL_INDEX["q1"], LEVEL_INDEX["r_target"]
    keep[q1, rt] = keep[rt, q1] = 1.0
    masked = np.kron(keep, np.eye(10)) * h.drive_control
    return replace(h, drive_control=masked)


def test_zero_drive_is_stationary(s1):
    basis = build_basis(s1)
    h = build_composite(s1, basis, basis)
    psi0 = basis_state("q1", "q1")
    out = propagate_schrodinger(h, None, psi0, (0.0, 40.0))
    fidelity = abs(np.vdot(psi0.data, out.data)) ** 2
    assert fidelity == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("theta", [math.pi, math.pi / 2, 0.7 * math.pi])
def test_resonant_rabi_against_analytic(s1, theta):
    h = two_level_system(s1)
    shape = square_shape(10.0, theta)
    psi0 = basis_state("q1", "q0")
    out = propagate_schrodinger(h, (envelope_fn(shape), None), psi0, (0.0, 10.0))
    p_r = out.populations()[composite_index(LEVEL_INDEX["r_target"], LEVEL_INDEX["q0"])]
    assert abs(p_r - math.sin(theta / 2.0) ** 2) < 1e-8


def test_norm_not_renormalized_and_drift_small(s1):
    h = two_level_system(s1)
    shape = square_shape(50.0, 4.0 * math.pi)
    psi0 = basis_state("q1", "q0")
    out = propagate_schrodinger(h, (envelope_fn(shape), None), psi0, (0.0, 50.0))
    assert abs(out.norm() - 1.0) < 1e-9


def test_stacked_propagation_matches_individual(s1):
    basis = build_basis(s1)
    h = build_composite(s1, basis, basis)
    shape = square_shape(8.0, math.pi)
    env = (envelope_fn(shape), None)
    columns = []
    stack = np.zeros((100, 2), dtype=complex)
    for k, labels in enumerate((("q1", "q0"), ("q1", "q1"))):
        psi0 = basis_state(*labels)
        stack[:, k] = psi0.data
        columns.append(propagate_schrodinger(h, env, psi0, (0.0, 8.0)).data)
    out = propagate_schrodinger(h, env, stack, (0.0, 8.0))
    np.testing.assert_allclose(out, np.stack(columns, axis=1), atol=1e-12)


def test_integration_failure_reports_time(s1):
    h = two_level_system(s1)
    nasty = lambda t: 1e9 if t > 1.0 else 0.0  # not integrable at tolerance
    psi0 = basis_state("q1", "q0")
    with pytest.raises(PropagationError, match="t = "):
        propagate_schrodinger(h, (nasty, None), psi0, (0.0, 10.0))


# -- collapse operators --------------------------------------------------------

def test_collapse_set_structure(s1):
    basis = build_basis(s1)
    cs = build_collapse_set(s1, basis)
    assert len(cs.composite) == 7
    gamma = 1.0 / 538e3
    for label, rate, single in zip(cs.labels, cs.rates, cs.single):
        assert rate == pytest.approx(gamma, rel=1e-12)
        dense = single.toarray()
        col = LEVEL_INDEX[label]
        assert np.count_nonzero(dense) == 3
        assert np.count_nonzero(dense[:, col]) == 3
        # branch amplitudes square-sum to the full rate
        assert np.sum(np.abs(dense) ** 2) == pytest.approx(rate, rel=1e-12)
        ctc = (single.conj().T @ single).toarray()
        expected = np.zeros((10, 10))
        expected[col, col] = rate
        np.testing.assert_allclose(ctc, expected, atol=1e-18)


def test_collapse_branch_fractions(s1):
    basis = build_basis(s1)
    cs = build_collapse_set(s1, basis)
    dense = cs.single[0].toarray()
    col = LEVEL_INDEX["r_target"]
    gamma = cs.rates[0]
    assert abs(dense[LEVEL_INDEX["g"], col]) ** 2 == pytest.approx(gamma * 7 / 8)
    assert abs(dense[LEVEL_INDEX["q0"], col]) ** 2 == pytest.approx(gamma / 16)
    assert abs(dense[LEVEL_INDEX["q1"], col]) ** 2 == pytest.approx(gamma / 16)


def test_literal_amplitude_variant_changes_total_rate(s1):
    basis = build_basis(s1)
    cs = build_collapse_set(s1, basis, literal_amplitudes=True)
    dense = cs.single[0].toarray()
    gamma = cs.rates[0]
    total = np.sum(np.abs(dense) ** 2)
    assert total == pytest.approx(gamma * ((7 / 8) ** 2 + 2 * (1 / 16) ** 2), rel=1e-12)


def zero_collapse(cs: CollapseSet) -> CollapseSet:
    return CollapseSet(cs.labels, tuple(0.0 for _ in cs.rates),
                       tuple(0.0 * c for c in cs.single),
                       tuple(0.0 * c for c in cs.composite))


def test_lindblad_zero_rates_matches_schrodinger(s1):
    h = two_level_system(s1)
    basis = build_basis(s1)
    cs = zero_collapse(build_collapse_set(s1, basis))
    shape = square_shape(12.0, 1.3 * math.pi)
    env = (envelope_fn(shape), None)
    psi0 = basis_state("q1", "q0")
    ket = propagate_schrodinger(h, env, psi0, (0.0, 12.0))
    rho = propagate_lindblad(h, env, cs, psi0.as_density(), (0.0, 12.0))
    diff = rho.data - ket.as_density().data
    eigs = np.linalg.eigvalsh(diff)
    assert 0.5 * np.sum(np.abs(eigs)) < 1e-8


def test_decay_oracle_exponential_with_branching(s1):
    # at physical lifetimes the target-Rydberg population decays as a single
    # exponential with 7/8 of the loss arriving in g (the additive two-atom
    # collapse operator adds only an O((Gamma t)^2) cross-atom correction)
    basis = build_basis(s1)
    h = build_composite(s1, basis, basis)
    cs = build_collapse_set(s1, basis)
    gamma = 1.0 / 538e3
    rho0 = basis_state("r_target", "q1").as_density()
    t_final = 100.0
    out = propagate_lindblad(h, None, cs, rho0, (0.0, t_final))
    pops = out.populations()
    decayed = 1.0 - math.exp(-gamma * t_final)
    p_r = pops[composite_index(LEVEL_INDEX["r_target"], LEVEL_INDEX["q1"])]
    p_g = pops[composite_index(LEVEL_INDEX["g"], LEVEL_INDEX["q1"])]
    p_0 = pops[composite_index(LEVEL_INDEX["q0"], LEVEL_INDEX["q1"])]
    assert p_r == pytest.approx(math.exp(-gamma * t_final), abs=2e-9)
    assert p_g == pytest.approx(7 / 8 * decayed, abs=2e-9)
    assert p_0 == pytest.approx(1 / 16 * decayed, abs=2e-9)
    assert out.trace() == pytest.approx(1.0, abs=1e-9)


def test_decay_collective_closed_form(s1):
    # amplified rates expose the cross-atom term of C = c (x) 1 + 1 (x) c;
    # the no-jump sector solves in closed form to
    # P_{r,1}(t) = e^{-Gamma t} [1 + (cosh(Gamma t / 2) - 1) beta_1]^2
    hot = scale_lifetimes(s1, 1e-4)  # tau = 53.8 ns for every Rydberg level
    basis = build_basis(hot)
    h = build_composite(hot, basis, basis)
    cs = build_collapse_set(hot, basis)
    gamma = 1.0 / 53.8
    rho0 = basis_state("r_target", "q1").as_density()
    t_final = 60.0
    out = propagate_lindblad(h, None, cs, rho0, (0.0, t_final))
    p_r = out.populations()[composite_index(LEVEL_INDEX["r_target"], LEVEL_INDEX["q1"])]
    expected = math.exp(-gamma * t_final) * (
        1.0 + (math.cosh(gamma * t_final / 2.0) - 1.0) / 16.0) ** 2
    assert p_r == pytest.approx(expected, rel=1e-8)
    assert out.trace() == pytest.approx(1.0, abs=1e-9)


def test_lindblad_driven_trace_and_hermiticity(s1):
    hot = scale_lifetimes(s1, 1e-3)
    basis = build_basis(hot)
    h = build_composite(hot, basis, basis)
    cs = build_collapse_set(hot, basis)
    shape = square_shape(30.0, 3.0 * math.pi)
    env = (envelope_fn(shape), None)
    rho0 = basis_state("q1", "q1").as_density()
    out = propagate_lindblad(h, env, cs, rho0, (0.0, 30.0))
    assert abs(out.trace() - 1.0) < 1e-9
    assert np.max(np.abs(out.data - out.data.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(out.data).min() > -1e-9


def test_convergence_order_on_rabi_problem(s1):
    # fixed-step integration (loose tolerances, capped step) over a smooth
    # window of a resonant drive; on resonance H(t) commutes with itself, so
    # the exact result is a rotation by the quadrature pulse area, and the
    # global error should scale with the integrator's nominal order (8)
    from scipy.integrate import quad

    from rydgate.pulses import gaussian_shape

    h = two_level_system(s1)
    shape = gaussian_shape(10.0, 6.0 * math.pi, derivative_order=2)
    env = envelope_fn(shape)
    t0, t1 = 1.5, 8.5
    angle, _ = quad(env, t0, t1, epsabs=1e-14)
    q1, rt, q0 = LEVEL_INDEX["q1"], LEVEL_INDEX["r_target"], LEVEL_INDEX["q0"]
    exact = np.zeros(100, dtype=complex)
    exact[composite_index(q1, q0)] = math.cos(angle / 2.0)
    exact[composite_index(rt, q0)] = -1j * math.sin(angle / 2.0)
    psi0 = basis_state("q1", "q0")
    errors, steps = [], (0.7, 0.35, 0.175)
    for h_step in steps:
        out = propagate_schrodinger(h, (env, None), psi0, (t0, t1),
                                    rtol=0.9, atol=0.9, max_step=h_step)
        errors.append(np.linalg.norm(out.data - exact))
    slopes = np.diff(np.log(errors)) / np.diff(np.log(steps))
    assert np.all((slopes > 6.5) & (slopes < 9.5)), f"slopes off nominal order: {slopes}"


def test_trajectory_sampling_and_reduction(s1, tmp_path):
    h = two_level_system(s1)
    shape = square_shape(10.0, math.pi)
    psi0 = basis_state("q1", "q0")
    t_eval = np.linspace(0.0, 10.0, 21)
    final, times, samples = propagate_schrodinger(
        h, (envelope_fn(shape), None), psi0, (0.0, 10.0), t_eval=t_eval)
    assert times.shape == (21,)
    assert samples.shape == (21, 100)
    mid = QuantumState.ket(samples[10])
    pc, pt = reduced_populations(mid)
    assert pc.sum() == pytest.approx(1.0, abs=1e-9)
    assert pt[LEVEL_INDEX["q0"]] == pytest.approx(1.0, abs=1e-9)
    # halfway through a pi pulse the control atom is an equal superposition
    assert pc[LEVEL_INDEX["q1"]] == pytest.approx(0.5, abs=1e-6)

    from rydgate.dynamics import export_trajectory

    path = tmp_path / "traj.csv"
    export_trajectory(path, times, samples, "ket")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("t_ns,pop_c_g,")
    assert len(lines) == 22


def test_lindblad_trajectory_sampling(s1):
    hot = scale_lifetimes(s1, 1e-4)
    basis = build_basis(hot)
    h = build_composite(hot, basis, basis)
    cs = build_collapse_set(hot, basis)
    rho0 = basis_state("r_target", "q1").as_density()
    t_eval = np.linspace(0.0, 20.0, 5)
    final, times, samples = propagate_lindblad(h, None, cs, rho0, (0.0, 20.0),
                                               t_eval=t_eval)
    assert samples.shape == (5, 100, 100)
    first = QuantumState.density(samples[0])
    assert first.trace() == pytest.approx(1.0, abs=1e-10)
    pc, pt = reduced_populations(QuantumState.density(samples[-1]))
    assert pc[LEVEL_INDEX["r_target"]] < 1.0
    assert pc.sum() == pytest.approx(1.0, abs=1e-9)


def test_tolerance_halving_changes_little(s1):
    # tightening tolerances moves final amplitudes by far less than the
    # smallest infidelity budget the suite reports against
    h = two_level_system(s1)
    shape = square_shape(12.0, 1.7 * math.pi)
    env = (envelope_fn(shape), None)
    psi0 = basis_state("q1", "q0")
    loose = propagate_schrodinger(h, env, psi0, (0.0, 12.0), rtol=1e-10, atol=1e-12)
    tight = propagate_schrodinger(h, env, psi0, (0.0, 12.0), rtol=5e-11, atol=5e-13)
    assert np.max(np.abs(loose.data - tight.data)) < 1e-6
