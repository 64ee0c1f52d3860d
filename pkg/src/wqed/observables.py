"""Ground-state observables of sector vectors.

Densities, density-density correlations and local photon statistics are
diagonal in the occupation basis; the two-point coherence applies one hop to
the state through the basis index. The two-photon binding energy compares the
two-excitation ground state against one bound photon plus one free photon at
the band bottom, with a 1/L correction for the residual repulsion between the
free photon and the impurity cloud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import ModelSpec, SectorBasis, enumerate_sector
from .eigensolve import DEFAULT_TOL, ground_state
from .hamiltonian import apply_number_operators, build_hamiltonian


def _check_vector(basis: SectorBasis, vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (basis.dim,):
        raise ValueError(f"vector length {vec.shape} does not match dimension {basis.dim}")
    return vec


def two_point(vec: np.ndarray, basis: SectorBasis, x: int, y: int) -> float:
    """Coherence <a_x^dag a_y>; equals the site density for x = y."""
    vec = _check_vector(basis, vec)
    spec = basis.spec
    if not (0 <= x < spec.L and 0 <= y < spec.L):
        raise IndexError("site index out of range")
    if x == y:
        return float(basis.photons[:, x].astype(np.float64) @ (vec * vec))
    L, cap = spec.L, spec.n_trunc
    blob = basis.photons.tobytes()
    masks = basis.atom_masks.tolist()
    acc = 0.0
    for i in np.nonzero(vec)[0]:
        row_b = blob[i * L : (i + 1) * L]
        ny, nx = row_b[y], row_b[x]
        if ny > 0 and nx < cap:
            buf = bytearray(row_b)
            buf[y] = ny - 1
            buf[x] = nx + 1
            j = basis.lookup(masks[i], bytes(buf))
            acc += vec[j] * math.sqrt(ny * (nx + 1)) * vec[i]
    return float(acc)


def density_correlation(vec: np.ndarray, basis: SectorBasis, x_ref: int) -> np.ndarray:
    """Normalized density-density profile <n_x n_ref> / <n_ref^2> over all sites."""
    vec = _check_vector(basis, vec)
    spec = basis.spec
    if not 0 <= x_ref < spec.L:
        raise IndexError("reference site out of range")
    w = vec * vec
    ph = basis.photons.astype(np.float64)
    n_ref = ph[:, x_ref]
    denom = float((n_ref * n_ref) @ w)
    if denom <= 0.0:
        raise ValueError("density correlation undefined: <n_ref^2> vanishes")
    num = ph.T @ (w * n_ref)
    return num / denom


def g2_zero(vec: np.ndarray, basis: SectorBasis, site: int) -> float:
    """Equal-time pair correlation <n (n - 1)> / <n>^2 at one site."""
    vec = _check_vector(basis, vec)
    if not 0 <= site < basis.spec.L:
        raise IndexError("site index out of range")
    w = vec * vec
    n = basis.photons[:, site].astype(np.float64)
    mean = float(n @ w)
    if mean <= 0.0:
        raise ValueError("g2 undefined at zero density")
    pairs = float((n * (n - 1.0)) @ w)
    return pairs / mean**2


def g2_impurity_average(vec: np.ndarray, basis: SectorBasis) -> float:
    sites = basis.spec.atom_sites
    if not sites:
        raise ValueError("no impurity sites present")
    return float(np.mean([g2_zero(vec, basis, s) for s in sites]))


def fluctuations(vec: np.ndarray, basis: SectorBasis) -> tuple[float, float]:
    """Mean polariton-number and atom-number variances over the impurity sites.

    The polariton number at an impurity site counts the cavity photons plus
    the colocated atomic excitation.
    """
    vec = _check_vector(basis, vec)
    spec = basis.spec
    if spec.n_atoms == 0:
        raise ValueError("fluctuation parameters need at least one atom")
    w = vec * vec
    v_pol = 0.0
    v_atom = 0.0
    for a, site in enumerate(spec.atom_sites):
        bit = ((basis.atom_masks >> a) & 1).astype(np.float64)
        pol = basis.photons[:, site].astype(np.float64) + bit
        mean_pol = float(pol @ w)
        v_pol += float((pol * pol) @ w) - mean_pol**2
        p = float(bit @ w)
        v_atom += p - p * p
    return v_pol / spec.n_atoms, v_atom / spec.n_atoms


@dataclass
class ObservableReport:
    """Bundle of the standard sweep observables for one ground state."""

    densities: np.ndarray
    atom_probs: np.ndarray
    g2_avg: float | None
    v_pol: float | None
    v_atom: float | None
    c_x: np.ndarray | None
    two_point_pair: tuple[int, int] | None
    two_point_value: float | None


def bound_state_mixing_cosine(spec: ModelSpec, tol: float = DEFAULT_TOL, seed: int = 0) -> float:
    """Atomic weight of the single-excitation ground state (|cos theta| of the
    bound state); obtained numerically from the eigenvector."""
    if spec.n_atoms != 1:
        raise ValueError("defined for a single impurity")
    spec1 = replace(spec, n_ex=1, n_trunc=1)
    basis = enumerate_sector(spec1)
    res = ground_state(build_hamiltonian(spec1, basis), tol=tol, seed=seed)
    idx = basis.lookup(1, bytes(spec1.L))  # atom excited, photon vacuum
    return abs(float(res.ground_vector[idx]))


def binding_energy_n2(
    spec: ModelSpec,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    finite_size_correction: bool = True,
) -> float:
    """Two-photon binding energy, negative when a genuine pair state forms.

    Reference energy: single-excitation ground state plus one free photon at
    the band bottom, shifted by U cos(theta_1)/L to absorb the residual
    free-photon repulsion at finite lattice size. Clamped at zero from above.
    """
    if spec.n_atoms != 1 or spec.n_ex != 2:
        raise ValueError("binding energy is defined for one impurity and two excitations")
    spec1 = replace(spec, n_ex=1, n_trunc=1)
    basis1 = enumerate_sector(spec1)
    res1 = ground_state(build_hamiltonian(spec1, basis1), tol=tol, seed=seed)
    e1 = float(res1.energies[0])

    corr = 0.0
    if finite_size_correction:
        idx = basis1.lookup(1, bytes(spec1.L))  # atom excited, photon vacuum
        cos_theta = abs(float(res1.ground_vector[idx]))
        u_pair = spec.nonlinearity.energy(2) - 2.0 * spec.nonlinearity.energy(1)
        corr = u_pair * cos_theta / spec.L

    basis2 = enumerate_sector(spec)
    res2 = ground_state(build_hamiltonian(spec, basis2), tol=tol, seed=seed)
    e_gs = float(res2.energies[0])

    reference = e1 + corr - 2.0 * spec.J
    return min(e_gs - reference, 0.0)


def report(
    vec: np.ndarray,
    basis: SectorBasis,
    x_ref: int | None = None,
    with_correlations: bool = False,
) -> ObservableReport:
    """Standard observable bundle; correlations only on request (they are O(dim L))."""
    vec = _check_vector(basis, vec)
    spec = basis.spec
    densities, atom_probs = apply_number_operators(basis, vec)
    g2 = v_pol = v_atom = None
    if spec.n_atoms:
        try:
            g2 = g2_impurity_average(vec, basis)
        except ValueError:
            g2 = None
        v_pol, v_atom = fluctuations(vec, basis)
    c_x = None
    if with_correlations and x_ref is not None:
        try:
            c_x = density_correlation(vec, basis, x_ref)
        except ValueError:
            c_x = None
    pair = far_pair(spec)
    value = two_point(vec, basis, *pair) if pair is not None else None
    return ObservableReport(densities, atom_probs, g2, v_pol, v_atom, c_x, pair, value)


def far_pair(spec: ModelSpec) -> tuple[int, int] | None:
    """Deterministic pair of non-impurity sites roughly half a lattice apart,
    used as the representative long-range coherence probe."""
    impurity = set(spec.atom_sites)
    free = [x for x in range(spec.L) if x not in impurity]
    if not free:
        free = list(range(spec.L))
    a = free[0]
    target = (a + spec.L // 2) % spec.L
    b = min(free, key=lambda x: (abs(x - target), x))
    if a == b:
        return None
    return a, b
