import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wqed.analytics import (
    alpha_epsilon,
    generalized_critical_coupling,
    jc_kerr_spectrum,
    lobe_critical_hopping,
    single_photon_bound,
    strong_binding_threshold,
    weak_binding_threshold,
)
from wqed.basis import ModelSpec, NonlinearitySpec, enumerate_sector
from wqed.eigensolve import ground_state
from wqed.hamiltonian import build_hamiltonian


def dense_block(n, g, u_spec, delta):
    """2x2 oracle for the {|g,n>, |e,n-1>} subspace, rotating frame."""
    eg = u_spec.energy(n)
    ee = u_spec.energy(n - 1) - delta
    return np.array([[eg, g * math.sqrt(n)], [g * math.sqrt(n), ee]])


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(1, 20),
    g=st.floats(0.0, 5.0),
    u=st.floats(-2.0, 5.0),
    delta=st.floats(-3.0, 3.0),
)
def test_dressed_energies_match_two_by_two(n, g, u, delta):
    u_spec = NonlinearitySpec.kerr(u)
    plus, minus = jc_kerr_spectrum(n, g, u_spec, delta)
    vals = np.linalg.eigvalsh(dense_block(n, g, u_spec, delta))
    assert minus.energy == pytest.approx(vals[0], abs=1e-12)
    assert plus.energy == pytest.approx(vals[1], abs=1e-12)
    assert plus.energy >= minus.energy
    assert 0.0 <= minus.theta <= math.pi


def test_dressed_table_with_detuning_matches_block():
    tab = NonlinearitySpec.from_table([0.0, 0.0, 0.9, 1.7, 4.0])
    for n in (1, 2, 3, 4):
        for delta in (-0.7, 0.0, 1.3):
            plus, minus = jc_kerr_spectrum(n, 0.8, tab, delta)
            vals = np.linalg.eigvalsh(dense_block(n, 0.8, tab, delta))
            assert [minus.energy, plus.energy] == pytest.approx(vals, abs=1e-13)


def test_resonant_single_excitation():
    for u in (0.0, 0.5, 3.0):
        plus, minus = jc_kerr_spectrum(1, 1.0, NonlinearitySpec.kerr(u), 0.0)
        assert minus.energy == pytest.approx(-1.0)
        assert plus.energy == pytest.approx(1.0)
        assert minus.theta == pytest.approx(math.pi / 2)


def test_decoupled_two_excitation_limit():
    plus, minus = jc_kerr_spectrum(2, 0.0, NonlinearitySpec.kerr(0.8), 0.0)
    assert minus.energy == pytest.approx(0.0)  # |e,1>
    assert plus.energy == pytest.approx(0.8)  # |g,2>


def test_two_excitation_anchor():
    _, minus = jc_kerr_spectrum(2, 1.0, NonlinearitySpec.kerr(1.2), 0.0)
    assert minus.energy == pytest.approx(0.6 - 0.5 * math.sqrt(9.44), abs=1e-14)


def test_vacuum_convention():
    plus, minus = jc_kerr_spectrum(0, 1.0, NonlinearitySpec.kerr(1.0), 0.3)
    assert plus is None
    assert minus.energy == 0.0 and minus.theta == math.pi


def test_theta_continuity_through_resonance():
    u_spec = NonlinearitySpec.kerr(1.0)
    # delta_n = delta + u*(n-1) crosses zero at delta = -u for n = 2
    thetas = [jc_kerr_spectrum(2, 0.5, u_spec, d)[1].theta for d in (-1.001, -1.0, -0.999)]
    assert thetas[1] == pytest.approx(math.pi / 2)
    assert abs(thetas[0] - thetas[2]) < 0.01


def test_strong_thresholds_closed_form():
    for n in (2, 3, 4, 5, 7, 10):
        exact = math.sqrt((2 * n - 3) * (2 * n * (n - 2) + 1))
        for u in (0.5, 1.0, 2.3):
            assert strong_binding_threshold(n, 0.0, u) == pytest.approx(exact * u, rel=1e-10)


def test_strong_threshold_vanishes_at_large_detuning():
    assert strong_binding_threshold(2, 1.5, 1.0) == 0.0


def test_strong_threshold_ordering():
    gs = [strong_binding_threshold(n, 0.0, 1.0) for n in range(2, 11)]
    assert all(a < b for a, b in zip(gs, gs[1:]))


def test_weak_threshold():
    assert weak_binding_threshold(2, 0.7, 1.3) == pytest.approx(math.sqrt(2 * 0.7 * 1.3))
    assert weak_binding_threshold(4, 0.0, 1.0) == 0.0
    assert weak_binding_threshold(3, 1.0, 1.0) == pytest.approx(2.0)


def test_single_photon_bound_state():
    em, ep, lm, lp = single_photon_bound(1.0, 1.0)
    assert em == pytest.approx(-math.sqrt(2 + math.sqrt(5)), abs=1e-14)
    assert ep == -em and lm == lp
    # large-coupling limit approaches the bare dressed energy -g
    em_big, _, _, _ = single_photon_bound(1e6, 1.0)
    assert em_big / 1e6 == pytest.approx(-1.0, abs=1e-11)
    # always below the band edge
    for g in np.linspace(0.05, 4.0, 20):
        em_g, _, _, _ = single_photon_bound(g, 1.0)
        assert em_g < -2.0


def test_single_photon_band_edge_at_zero_coupling():
    em, ep, lm, lp = single_photon_bound(0.0, 1.0)
    assert (em, ep) == (-2.0, 2.0)
    assert math.isinf(lm) and math.isinf(lp)


def test_localization_length_against_ed_tail():
    # fit the exponential envelope of the single-excitation ground state
    g, L = 0.2, 1001
    spec = ModelSpec(L=L, atom_sites=(0,), n_ex=1, n_trunc=1, g=g, J=1.0)
    basis = enumerate_sector(spec)
    op = build_hamiltonian(spec, basis)
    res = ground_state(op, tol=1e-12, seed=0)
    dens, _ = (np.abs(res.ground_vector), None)
    amp = np.zeros(L)
    for i in range(basis.dim):
        c = basis.config(i)
        if c.atoms == 0:
            site = int(np.argmax(basis.photons[i]))
            amp[site] = abs(res.ground_vector[i])
    xs = np.arange(40, 140)
    slope = np.polyfit(xs, np.log(amp[xs]), 1)[0]
    lam_fit = -1.0 / slope
    _, _, lam, _ = single_photon_bound(g, 1.0)
    assert lam_fit == pytest.approx(lam, rel=0.05)
    assert lam == pytest.approx(4.0 / g**2, rel=0.05)


def test_alpha_epsilon_anchor_values():
    u = NonlinearitySpec.kerr
    al, eps = alpha_epsilon(2, 1.0, u(1.0))
    assert (round(al, 2), round(eps, 2)) == (1.15, 0.0)
    al, eps = alpha_epsilon(2, 1.0, u(1.2))
    assert (round(al, 2), round(eps, 2)) == (1.14, 0.06)
    assert eps == pytest.approx(0.6 - 0.5 * math.sqrt(9.44) + 1.0, abs=1e-14)
    al, eps = alpha_epsilon(2, 1.0, u(1.4))
    assert (round(al, 2), round(eps, 2)) == (1.13, 0.12)


def test_alpha_one_equals_removal_overlap():
    for g, u, delta in [(1.0, 0.7, 0.0), (0.4, 2.0, -0.6), (2.5, 0.0, 1.0)]:
        u_spec = NonlinearitySpec.kerr(u)
        al, _ = alpha_epsilon(1, g, u_spec, delta)
        theta1 = jc_kerr_spectrum(1, g, u_spec, delta)[1].theta
        assert al == pytest.approx(math.sin(theta1 / 2), abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 12), g=st.floats(1e-3, 5.0), u=st.floats(0.0, 4.0))
def test_alpha_positive(n, g, u):
    al, _ = alpha_epsilon(n, g, NonlinearitySpec.kerr(u))
    assert al > 0.0


def test_lobe_critical_hopping():
    u = NonlinearitySpec.kerr
    assert lobe_critical_hopping(2, 1.0, u(1.0)) == 0.0
    j2 = lobe_critical_hopping(2, 1.0, u(1.4))
    al, eps = alpha_epsilon(2, 1.0, u(1.4))
    assert j2 == pytest.approx(eps / (2 * al))
    assert j2 == pytest.approx(0.05407, abs=5e-5)
    # increases with repulsion past the binding threshold
    js = [lobe_critical_hopping(2, 1.0, u(x)) for x in np.linspace(1.0, 1.6, 13)]
    assert all(b >= a for a, b in zip(js, js[1:]))


def test_generalized_coupling_reduces_to_kerr():
    u = 0.9
    tab = [u * m * (m - 1) / 2 for m in range(4)]
    root = generalized_critical_coupling(2, tab)
    assert root == pytest.approx(strong_binding_threshold(2, 0.0, u), rel=1e-9)


def test_generalized_coupling_no_root_for_free_photons():
    assert generalized_critical_coupling(2, [0.0, 0.0, 0.0]) is None


def test_generalized_coupling_bisection_vs_newton():
    c = 0.8
    tab = [0.0, c, 2 * c]  # constant level spacing acts like a detuning
    root = generalized_critical_coupling(2, tab)
    assert root is not None

    def f(g):
        e2 = (tab[2] + tab[1]) / 2 - 0.5 * math.hypot(tab[2] - tab[1], 2 * g * math.sqrt(2))
        e1 = (tab[1] + tab[0]) / 2 - 0.5 * math.hypot(tab[1] - tab[0], 2 * g)
        return e2 - e1

    g = root + 0.1  # Newton refinement from a nearby start
    for _ in range(60):
        h = 1e-7
        g = g - f(g) / ((f(g + h) - f(g - h)) / (2 * h))
    assert root == pytest.approx(g, abs=1e-10)
