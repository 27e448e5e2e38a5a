import numpy as np
import pytest

from dfszeno import bath, kernels
from dfszeno.bath import ContinuumBath, DiscreteModes
from dfszeno.gates import gate_schedule
from dfszeno.oracle import no_bath_fidelity
from dfszeno.perturbation import (
    PerturbationParams,
    QuadratureError,
    QuadratureSettings,
    chi,
    fidelity,
    fidelity_curve,
    fidelity_values,
    first_order_overlaps,
    gamma_mm,
    gamma_mp,
    gamma_pm,
    gamma_pp,
    kernel,
    narrow_error_estimate,
    node_vectors,
    reference_fidelity,
)
from dfszeno import dfs
from dfszeno.spin import collective_j, ladder

JZ = collective_j("z")
ONE = DiscreteModes(((1.0, 1.0),))


def params(**kw):
    base = dict(epsilon=1.0, lam=0.8, spectrum=DiscreteModes(((1.0, 1.3), (0.4, 3.0))), gate="cnot", tau=1.0)
    base.update(kw)
    return PerturbationParams(**base)


def test_params_validation():
    with pytest.raises(ValueError):
        params(epsilon=-1)
    with pytest.raises(ValueError):
        params(tau=0)
    p = PerturbationParams.dimensionless(lambda_ratio=800, nu_c=1e5, epsilon=2.0, tau_eps=1.0)
    assert p.lam == 1600 and p.spectrum.cutoff == 2e5 and p.tau == 0.5
    np.testing.assert_allclose(p.phi0_vec, dfs.default_initial_state())


def test_chi_idle_is_static():
    p = params(gate="idle")
    want = ladder(-1) @ dfs.encode(dfs.default_initial_state())
    for t in (0.0, 0.7, 5.0):
        np.testing.assert_allclose(chi("-", t, p), want, atol=1e-15)


@pytest.mark.parametrize("gate", ["cnot", "h1", "h2", "t1", "t2"])
def test_chi_sectors(gate):
    p = params(gate=gate)
    t = np.linspace(0, 4, 17)
    cp, cm = chi("+", t, p), chi("-", t, p)
    assert np.max(np.abs(cm @ JZ.T)) < 1e-13
    assert np.max(np.abs(cp @ JZ.T - 2 * cp)) < 1e-13


def test_chi_norms_constant_for_cnot():
    rng = np.random.default_rng(2)
    t = np.linspace(0, 4, 33)
    for _ in range(5):
        phi = rng.normal(size=4) + 1j * rng.normal(size=4)
        p = params(gate="cnot", phi0=tuple(phi / np.linalg.norm(phi)))
        for s in "+-":
            assert np.ptp(np.linalg.norm(chi(s, t, p), axis=1)) < 1e-13


def test_chi_norms_vary_for_phase_gate():
    # ||J_+ psi||^2 = |sum of DFS amplitudes|^2, which a relative phase changes
    p = params(gate="t1")
    n = np.linalg.norm(chi("+", np.array([0.0, 2.0]), p), axis=1)
    np.testing.assert_allclose(n, [0.0, 1.0], atol=1e-14)


def test_gamma_examples():
    p = params()
    t = 1.7
    assert np.isclose(gamma_pp(t, t, p), 0.25 * np.linalg.norm(chi("+", t, p)) ** 2)
    grid = np.linspace(0, 6, 50)
    assert np.max(np.abs(gamma_pm(grid, grid, p))) < 1e-13
    assert np.max(np.abs(gamma_mp(grid, grid, p))) < 1e-13
    other = params(lam=7.0, spectrum=ContinuumBath(30.0))
    np.testing.assert_allclose(np.abs(gamma_pp(grid, grid, p)), np.abs(gamma_pp(grid, grid, other)), atol=1e-15)
    np.testing.assert_allclose(np.abs(gamma_mm(grid, grid, p)), np.abs(gamma_mm(grid, grid, other)), atol=1e-15)


def test_chi_overlaps_bounded():
    grid = np.linspace(0, 5, 30)
    for gate in ("h1", "t2", "cnot"):
        p = params(gate=gate)
        for s in "+-":
            c = chi(s, grid, p)
            n = np.linalg.norm(c, axis=1)
            assert np.all(np.abs(c.conj() @ c.T) <= np.outer(n, n) + 1e-12)
    c = chi("-", grid, params(gate="cnot"))
    assert np.all(np.abs(c.conj() @ c.T) <= np.linalg.norm(c[0]) ** 2 + 1e-12)
    c = chi("+", grid, params(gate="idle"))
    assert np.ptp(np.abs(c.conj() @ c.T)) < 1e-13


def test_first_order_vanishes():
    p = params(gate="h2")
    a, b = first_order_overlaps(np.linspace(0, 3, 7), p)
    assert np.max(np.abs(a)) == 0 and np.max(np.abs(b)) == 0


def test_kernel_structure():
    p = params(epsilon=0.3)
    grid = np.linspace(0, 3, 9)
    k = kernel(grid, grid, p)
    np.testing.assert_allclose(k, k.conj().T, atol=1e-15)
    diag = np.diag(k)
    cp, cm = chi("+", grid, p), chi("-", grid, p)
    want = 0.09 * (np.linalg.norm(cp, axis=1) ** 2 + np.linalg.norm(cm, axis=1) ** 2) / 4
    assert np.max(np.abs(diag.imag)) < 1e-12
    np.testing.assert_allclose(diag.real, want, atol=1e-15)


@pytest.mark.parametrize("spec", [DiscreteModes(((1.0, 1.3), (0.4, 3.0))), ContinuumBath(4.0)])
def test_node_vectors_reproduce_kernel(spec):
    p = params(spectrum=spec, epsilon=0.5)
    t = np.array([0.0, 0.4, 1.1, 2.5])
    v = node_vectors(t, p)
    b = bath.stationary_factor(t[:, None] - t[None, :], p.lam, spec)
    fast = 0.25 * p.epsilon**2 * b * (v.conj() @ v.T)
    np.testing.assert_allclose(fast, kernel(t, t, p), atol=1e-14)


def test_lambda_zero_idle_closed_form():
    # K is constant: F = 1 - eps^2 t^2 ||J_x phi0||^2 and ||J_x phi0||^2 = 1/2
    eps = 0.3
    p = params(epsilon=eps, lam=0.0, gate="idle")
    t = np.array([0.5, 1.0, 2.0, 4.0])
    np.testing.assert_allclose(fidelity_values(t, p).values, 1 - 0.5 * eps**2 * t**2, rtol=0, atol=1e-13)


def test_lambda_zero_idle_against_exact_slope():
    eps_list = [0.02, 0.01, 0.005]
    d = []
    for eps in eps_list:
        p = params(epsilon=eps, lam=0.0, gate="idle")
        d.append(abs(fidelity(1.0, p) - no_bath_fidelity(1.0, "idle", 1.0, eps)))
    slope = np.polyfit(np.log(eps_list), np.log(d), 1)[0]
    assert 3.8 < slope < 4.2


def test_fidelity_trivial_limits():
    p = params()
    assert fidelity(0.0, p) == 1.0
    assert fidelity(2.0, params(epsilon=0.0)) == 1.0
    small = [1 - fidelity(2.0, params(epsilon=e)) for e in (1e-2, 1e-3)]
    assert np.isclose(small[0] / small[1], 100.0, rtol=1e-6)
    with pytest.raises(ValueError):
        fidelity_values([-1.0], p)


@pytest.mark.parametrize("gate", ["idle", "cnot", "h1"])
def test_fast_path_matches_reference_discrete(gate):
    p = params(gate=gate, epsilon=0.7)
    for t in (0.9, 2.6):
        fine = fidelity(t, p, QuadratureSettings(step=t / 64))
        assert abs(fine - reference_fidelity(t, p, panels=16, nodes=8)) < 1e-9


@pytest.mark.parametrize("wc,lam,gate,frozen", [
    (5.0, 3.0, "idle", 0.18795605443435),
    (50.0, 20.0, "cnot", 0.77336634942941),
])
def test_continuum_frozen_values(wc, lam, gate, frozen):
    p = params(spectrum=ContinuumBath(wc), lam=lam, gate=gate)
    assert abs(fidelity(1.5, p, QuadratureSettings(step=0.0025, method="direct")) - frozen) < 1e-11
    assert abs(fidelity(1.5, p) - frozen) < 1e-6


def test_narrow_path_agrees_with_direct():
    p = params(spectrum=ContinuumBath(20000.0), lam=1500.0, gate="cnot")
    t = np.linspace(0, 0.3, 4)
    narrow = fidelity_values(t, p, QuadratureSettings(method="narrow"))
    direct = fidelity_values(t, p, QuadratureSettings(method="direct"))
    assert narrow.plan.narrow and not direct.plan.narrow
    assert np.max(np.abs(narrow.values - direct.values)) < 1e-7
    assert narrow_error_estimate(p, 0.3) < 1e-6


def test_auto_avoids_narrow_when_estimate_is_large():
    p = params(spectrum=ContinuumBath(500.0), lam=60.0, gate="cnot")
    assert narrow_error_estimate(p, 3.0) > 1e-6
    res = fidelity_values(np.linspace(0, 3, 5), p)
    assert not res.plan.narrow
    fig = PerturbationParams.dimensionless(lambda_ratio=2000, nu_c=1e5)
    assert fidelity_values([0.0, 1.0], fig).plan.narrow


def test_narrow_integral_closed_form():
    for wc, lam in ((2000.0, 300.0), (1e5, 2000.0), (50.0, 20.0)):
        split = bath.narrow_split(lam, ContinuumBath(wc))
        c = lam**2 / (2 * wc**2)
        assert abs(split.integral - split.b_inf * c * np.pi / wc) < 1e-8 * split.integral


def test_quadrature_error_carries_estimates():
    p = params(epsilon=3.0, lam=4.0)
    with pytest.raises(QuadratureError) as info:
        fidelity(6.0, p, QuadratureSettings(step=1.5, tol=1e-12))
    assert info.value.coarse is not None and info.value.fine is not None


def test_refinement_flags():
    p = params(epsilon=3.0, lam=4.0)
    res = fidelity_values([2.0, 6.0], p, QuadratureSettings(step=1.0, tol=1e-12))
    assert "quad" in res.flags[1]
    res = fidelity_values([2.0, 6.0], p)
    assert res.flags == ["ok", "ok"]
    assert np.all(np.abs(res.refined - res.values) < 1e-6)


def test_uniform_grid_and_off_grid_times():
    p = params(epsilon=0.8)
    grid = np.linspace(0, 3, 7)
    odd = np.array([0.123, 1.7777, 2.95])
    q = QuadratureSettings(step=0.01)
    a = fidelity_values(np.concatenate([grid, odd]), p, q).values
    for t, f in zip(np.concatenate([grid, odd]), a):
        assert abs(f - reference_fidelity(t, p, panels=16, nodes=8)) < 1e-9


def test_schedule_matches_single_gate_then_idles():
    sched = tuple(gate_schedule(["cnot"], 1.0))
    single = params(gate="cnot")
    scheduled = params(schedule=sched)
    t = np.linspace(0, 1, 5)
    np.testing.assert_allclose(fidelity_values(t, scheduled).values, fidelity_values(t, single).values, atol=1e-9)
    # past the end of the schedule the system idles; panels align with the switch at t = 1
    after = 2.2
    a = fidelity(after, scheduled, QuadratureSettings(step=after / 88))
    b = fidelity(after, scheduled, QuadratureSettings(step=after / 176))
    assert abs(a - b) < 1e-10
    # the triangle reference does not align with the switch, so it converges slowly
    assert abs(a - reference_fidelity(after, scheduled, panels=64, nodes=8)) < 1e-6


def test_backends_agree():
    if "cython" not in kernels.BACKENDS:
        pytest.skip("compiled kernel not built")
    p = params(spectrum=ContinuumBath(50.0), lam=20.0)
    t = np.linspace(0, 6, 13)
    a = fidelity_values(t, p, QuadratureSettings(kernel="direct", backend="python")).values
    b = fidelity_values(t, p, QuadratureSettings(kernel="direct", backend="cython")).values
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("ratio", [0, 800, 2000])
@pytest.mark.parametrize("gate", ["cnot", "idle"])
def test_spectral_kernel_matches_direct(ratio, gate):
    p = PerturbationParams.dimensionless(lambda_ratio=ratio, gate=gate)
    t = np.linspace(0, 4, 41)
    a = fidelity_values(t, p, QuadratureSettings(kernel="direct")).values
    b = fidelity_values(t, p, QuadratureSettings(kernel="spectral")).values
    assert np.max(np.abs(a - b)) < 1e-11


def test_kernel_setting_validated():
    with pytest.raises(ValueError):
        QuadratureSettings(kernel="simpson")


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_threads_are_bitwise_stable(backend):
    p = params(spectrum=ContinuumBath(50.0), lam=20.0)
    t = np.linspace(0, 6, 13)
    a = fidelity_values(t, p, QuadratureSettings(kernel="direct", backend=backend, threads=1)).values
    b = fidelity_values(t, p, QuadratureSettings(kernel="direct", backend=backend, threads=4)).values
    np.testing.assert_array_equal(a, b)


def test_curve_basics():
    p = PerturbationParams.dimensionless(lambda_ratio=800, nu_c=1e5)
    curve = fidelity_curve(np.linspace(0, 3, 31), p)
    assert curve.fidelity[0] == 1.0
    assert np.all(np.isfinite(curve.fidelity))
    assert np.all(curve.fidelity <= 1 + 1e-6)
    assert curve.wall_time >= 0 and 0 < curve.mean_infidelity() < 1
    with pytest.raises(ValueError):
        fidelity_curve([0.0, 2.0, 1.0], p)
