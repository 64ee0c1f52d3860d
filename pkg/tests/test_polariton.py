import itertools
import math

import numpy as np
import pytest

from wqed.analytics import alpha_epsilon, jc_kerr_spectrum
from wqed.basis import ModelSpec, NonlinearitySpec, enumerate_sector
from wqed.eigensolve import dense_spectrum
from wqed.hamiltonian import build_hamiltonian
from wqed.polariton import (
    build_hpol,
    build_polariton_spec,
    compare_spectra,
    polariton_basis,
)


def array_spec(L, d, n_ex, g, u=0.0, j=1.0, cap=None):
    return ModelSpec(
        L=L, atom_sites=tuple(range(0, L, d)), n_ex=n_ex, n_trunc=cap,
        J=j, g=g, nonlinearity=NonlinearitySpec.kerr(u),
    )


def test_zero_hopping_diagonal_matches_lower_branch_sums():
    spec = array_spec(3, 3, 2, g=1.1, u=0.6, j=0.0)
    pspec = build_polariton_spec(spec)
    basis = polariton_basis(pspec)
    h = build_hpol(pspec, basis)
    got = sorted(dense_spectrum(h))

    def e_site(x, n):
        if x in spec.atom_sites:
            return jc_kerr_spectrum(n, spec.g, spec.nonlinearity)[1].energy
        return spec.nonlinearity.energy(n)

    expect = sorted(
        sum(e_site(x, n) for x, n in enumerate(ph))
        for ph in itertools.product(range(spec.n_trunc + 1), repeat=3)
        if sum(ph) == 2
    )
    assert np.allclose(got, expect, atol=1e-12)
    # every such level exists in the full model's J = 0 spectrum
    full = dense_spectrum(build_hamiltonian(spec, enumerate_sector(spec)))
    for e in expect:
        assert np.min(np.abs(full - e)) < 1e-12


def test_reduces_to_bose_hubbard_without_impurities():
    spec = ModelSpec(L=4, atom_sites=(), n_ex=3, J=0.7, g=0.0,
                     nonlinearity=NonlinearitySpec.kerr(1.3))
    pspec = build_polariton_spec(spec)
    basis = polariton_basis(pspec)
    hp = build_hpol(pspec, basis)
    hf = build_hamiltonian(spec, enumerate_sector(spec))
    assert np.array_equal(hp.rows, hf.rows)
    assert np.array_equal(hp.cols, hf.cols)
    assert np.array_equal(hp.vals, hf.vals)


def test_exact_hermiticity():
    spec = array_spec(4, 2, 4, g=5.0, u=0.4)
    pspec = build_polariton_spec(spec)
    h = build_hpol(pspec).to_dense()
    assert np.max(np.abs(h - h.T)) == 0.0


def test_impurity_dressing_at_zero_occupation():
    spec = array_spec(2, 2, 2, g=0.9, u=0.5)
    pspec = build_polariton_spec(spec)
    theta1 = jc_kerr_spectrum(1, spec.g, spec.nonlinearity)[1].theta
    assert pspec.dressing(0, 0) == pytest.approx(math.sin(theta1 / 2), abs=1e-14)
    alpha2, _ = alpha_epsilon(2, spec.g, spec.nonlinearity)
    assert pspec.dressing(0, 1) == pytest.approx(alpha2 / math.sqrt(2), abs=1e-14)


def test_dressing_positive():
    spec = array_spec(4, 2, 4, g=2.0, u=1.7)
    pspec = build_polariton_spec(spec)
    for x in range(4):
        for n in range(spec.n_trunc + 1):
            assert pspec.dressing(x, n) > 0.0


def test_table_bounds_enforced():
    spec = array_spec(2, 2, 2, g=1.0)
    pspec = build_polariton_spec(spec)
    with pytest.raises(ValueError, match="beyond tabulated"):
        pspec.energy(0, spec.n_trunc + 1)


def test_compare_spectra_exact_at_zero_hopping():
    # lower-branch levels coincide exactly when hopping is off
    spec = ModelSpec(L=2, atom_sites=(0,), n_ex=1, J=0.0, g=1.0,
                     nonlinearity=NonlinearitySpec.kerr(0.0))
    cmp = compare_spectra(spec, k=2)
    assert np.allclose(cmp.energies_full, [-1.0, 0.0], atol=1e-12)
    assert np.max(cmp.deviations) <= 1e-12


def test_low_spectrum_tracks_full_model():
    cmp = compare_spectra(array_spec(4, 2, 4, g=5.0), k=10)
    assert np.max(cmp.deviations) <= 0.05


def test_accuracy_improves_with_coupling():
    devs = [
        np.max(compare_spectra(array_spec(4, 2, 4, g=g), k=10).deviations)
        for g in (5.0, 10.0, 50.0)
    ]
    assert devs[0] > devs[1] > devs[2]
