"""Many-body effective polariton model on the lower dressed branch.

Each impurity site carries a ladder of lower dressed states with tabulated
energies, and photon hops on or off an impurity are rescaled by the dressed
removal overlaps. Away from the impurities the model is a plain interacting
boson chain. The basis is purely bosonic (no explicit atom bits); all energies
are rotating-frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .analytics import alpha_epsilon, jc_kerr_spectrum
from .basis import ModelSpec, SectorBasis, enumerate_sector
from .eigensolve import DEFAULT_TOL, low_spectrum
from .hamiltonian import SparseOperator, bond_list, build_hamiltonian, DROP_TOL


@dataclass(frozen=True)
class PolaritonSpec:
    """Per-site energy and hop-dressing tables, n = 0..n_trunc each."""

    base: ModelSpec
    site_energies: tuple[tuple[float, ...], ...]
    site_dressings: tuple[tuple[float, ...], ...]

    def energy(self, site: int, n: int) -> float:
        tab = self.site_energies[site]
        if n >= len(tab):
            raise ValueError(f"occupation {n} beyond tabulated range at site {site}")
        return tab[n]

    def dressing(self, site: int, n: int) -> float:
        tab = self.site_dressings[site]
        if n >= len(tab):
            raise ValueError(f"occupation {n} beyond tabulated range at site {site}")
        return tab[n]


def build_polariton_spec(spec: ModelSpec) -> PolaritonSpec:
    cap = spec.n_trunc
    impurity = set(spec.atom_sites)
    energies = []
    dressings = []
    e_imp = tuple(
        jc_kerr_spectrum(n, spec.g, spec.nonlinearity, spec.delta)[1].energy
        for n in range(cap + 1)
    )
    k_imp = tuple(
        alpha_epsilon(n + 1, spec.g, spec.nonlinearity, spec.delta)[0] / math.sqrt(n + 1)
        for n in range(cap + 1)
    )
    e_bare = tuple(spec.nonlinearity.energy(n) for n in range(cap + 1))
    k_bare = tuple(1.0 for _ in range(cap + 1))
    for x in range(spec.L):
        if x in impurity:
            energies.append(e_imp)
            dressings.append(k_imp)
        else:
            energies.append(e_bare)
            dressings.append(k_bare)
    return PolaritonSpec(base=spec, site_energies=tuple(energies), site_dressings=tuple(dressings))


def polariton_basis(pspec: PolaritonSpec, n_ex: int | None = None) -> SectorBasis:
    """Bosonic sector basis: polariton occupations only, same cap and lattice."""
    spec = pspec.base
    boson_spec = replace(spec, atom_sites=(), n_ex=spec.n_ex if n_ex is None else n_ex)
    return enumerate_sector(boson_spec)


def build_hpol(pspec: PolaritonSpec, basis: SectorBasis | None = None) -> SparseOperator:
    """Sparse polariton Hamiltonian in the bosonic sector basis.

    Hop x -> y between occupations (n, m): -J sqrt(n (m+1)) K_y(m) K_x(n-1),
    the dressing argument on the source being the post-removal occupation.
    Only the upper triangle is generated; hermiticity is exact because the
    reverse process produces the identical factor.
    """
    if basis is None:
        basis = polariton_basis(pspec)
    spec = pspec.base
    L, cap = spec.L, spec.n_trunc
    jval = spec.J
    bonds = bond_list(spec)
    e_tab = [np.asarray(t) for t in pspec.site_energies]
    k_tab = pspec.site_dressings

    diag = np.zeros(basis.dim)
    for x in range(L):
        diag += e_tab[x][basis.photons[:, x]]

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    blob = basis.photons.tobytes()
    lookup = basis.lookup
    for i in range(basis.dim):
        row_b = blob[i * L : (i + 1) * L]
        ph = list(row_b)
        if jval == 0.0:
            continue
        for x, y in bonds:
            for src, dst in ((x, y), (y, x)):
                n, m = ph[src], ph[dst]
                if n > 0 and m < cap:
                    buf = bytearray(row_b)
                    buf[src] = n - 1
                    buf[dst] = m + 1
                    j = lookup(0, bytes(buf))
                    if j > i:
                        amp = -jval * math.sqrt(n * (m + 1)) * k_tab[dst][m] * k_tab[src][n - 1]
                        rows.append(i)
                        cols.append(j)
                        vals.append(amp)

    nz = np.abs(diag) > DROP_TOL
    d_idx = np.nonzero(nz)[0]
    all_rows = np.concatenate([d_idx, np.asarray(rows, dtype=np.int64)])
    all_cols = np.concatenate([d_idx, np.asarray(cols, dtype=np.int64)])
    all_vals = np.concatenate([diag[d_idx], np.asarray(vals, dtype=np.float64)])
    return SparseOperator.from_coo(basis.dim, all_rows, all_cols, all_vals)


@dataclass
class SpectrumComparison:
    energies_full: np.ndarray
    energies_polariton: np.ndarray
    deviations: np.ndarray  # |E_full - E_pol| / spectral width of the full levels
    width: float


def compare_spectra(
    spec: ModelSpec, k: int, tol: float = DEFAULT_TOL, seed: int = 0
) -> SpectrumComparison:
    """Level-by-level comparison of the full model against the polariton model."""
    full_basis = enumerate_sector(spec)
    h_full = build_hamiltonian(spec, full_basis)
    e_full = low_spectrum(h_full, k, tol=tol, seed=seed, want_vectors=False).energies

    pspec = build_polariton_spec(spec)
    pb = polariton_basis(pspec)
    h_pol = build_hpol(pspec, pb)
    kk = min(k, pb.dim)
    e_pol = low_spectrum(h_pol, kk, tol=tol, seed=seed, want_vectors=False).energies
    if kk < k:
        raise ValueError(f"polariton sector holds only {pb.dim} states, k={k} requested")

    width = float(e_full[-1] - e_full[0])
    if width <= 0:
        width = max(1e-300, abs(float(e_full[0])))
    dev = np.abs(e_full - e_pol) / width
    return SpectrumComparison(e_full, e_pol, dev, width)
