"""Shared brute-force oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wqed.basis import ModelSpec, SectorBasis

settings.register_profile(
    "repro", derandomize=True, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repro")


def brute_force_sector(L: int, n_atoms: int, n_ex: int, cap: int) -> set[tuple[tuple[int, ...], int]]:
    """Every (photons, atom_mask) with the right excitation total, by full product enumeration."""
    out = set()
    for ph in itertools.product(range(cap + 1), repeat=L):
        for mask in range(1 << n_atoms):
            if sum(ph) + bin(mask).count("1") == n_ex:
                out.add((ph, mask))
    return out


def dense_hop_operator(basis: SectorBasis, x: int, y: int) -> np.ndarray:
    """Dense matrix of a_x^dag a_y restricted to the sector (independent of the builder)."""
    spec = basis.spec
    dim = basis.dim
    m = np.zeros((dim, dim))
    for i in range(dim):
        ph = [int(v) for v in basis.photons[i]]
        mask = int(basis.atom_masks[i])
        if x == y:
            m[i, i] = ph[x]
            continue
        if ph[y] > 0 and ph[x] < spec.n_trunc:
            amp = np.sqrt(ph[y] * (ph[x] + 1))
            ph2 = list(ph)
            ph2[y] -= 1
            ph2[x] += 1
            j = basis.lookup(mask, bytes(ph2))
            m[j, i] = amp
    return m


def dense_site_number(basis: SectorBasis, x: int) -> np.ndarray:
    return np.diag(basis.photons[:, x].astype(float))


def dense_atom_number(basis: SectorBasis, a: int) -> np.ndarray:
    bits = ((basis.atom_masks >> a) & 1).astype(float)
    return np.diag(bits)


def assert_sum_rule(basis: SectorBasis, vec: np.ndarray, tol: float = 1e-10) -> None:
    """Total excitation number of a normalized sector vector equals n_ex."""
    from wqed.hamiltonian import apply_number_operators

    dens, probs = apply_number_operators(basis, vec)
    total = dens.sum() + probs.sum()
    assert abs(total - basis.spec.n_ex) <= tol, f"sum rule broken: {total} vs {basis.spec.n_ex}"


def random_sparse_symmetric(rng: np.random.Generator, dim: int, density: float = 0.05):
    """Random symmetric sparse test operator in upper-triangular storage."""
    from wqed.hamiltonian import SparseOperator

    n_off = max(1, int(density * dim * dim / 2))
    r = rng.integers(0, dim, size=n_off)
    c = rng.integers(0, dim, size=n_off)
    lo = np.minimum(r, c)
    hi = np.maximum(r, c)
    v = rng.standard_normal(n_off)
    d_idx = np.arange(dim)
    d_val = rng.standard_normal(dim)
    rows = np.concatenate([d_idx, lo])
    cols = np.concatenate([d_idx, hi])
    vals = np.concatenate([d_val, v])
    return SparseOperator.from_coo(dim, rows, cols, vals, drop_tol=0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
