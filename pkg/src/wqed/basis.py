"""Fixed-excitation occupation basis for a cavity chain with embedded two-level atoms.

A configuration stores one photon occupation per cavity (capped at ``n_trunc``)
plus one bit per atom. The sector contains every configuration whose total
excitation number (photons plus excited atoms) equals ``n_ex``. Configurations
are enumerated in a canonical order: ascending atom bitmask first, then the
photon occupation vectors in lexicographic order. Index lookup goes through a
hash map keyed on the packed configuration bytes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterator

import numpy as np

DEFAULT_TRUNC_CAP = 20
DEFAULT_MAX_DIM = 5_000_000
MAX_ATOMS = 63  # atom bitmask packed into a single int64


class SectorSizeError(RuntimeError):
    """Sector dimension exceeds the configured limit."""


class NotInSectorError(ValueError):
    """Configuration violates the excitation sum or the per-site truncation."""


@dataclass(frozen=True)
class NonlinearitySpec:
    """On-site photon interaction, either Kerr ``U n(n-1)/2`` or a per-occupation table.

    Tables store absolute offsets ``U_n`` with the gauge ``U_0 = U_1 = 0`` (any
    linear-in-n part belongs to the mode frequency, which the rotating frame
    removes).
    """

    kind: str
    u: float = 0.0
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("kerr", "table"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "table":
            if len(self.table) < 2:
                raise ValueError("table nonlinearity needs at least U_0 and U_1")
            if self.table[0] != 0.0 or self.table[1] != 0.0:
                raise ValueError("table nonlinearity must have U_0 = U_1 = 0")

    @classmethod
    def kerr(cls, u: float) -> "NonlinearitySpec":
        return cls(kind="kerr", u=float(u))

    @classmethod
    def from_table(cls, values) -> "NonlinearitySpec":
        return cls(kind="table", table=tuple(float(v) for v in values))

    def energy(self, n: int) -> float:
        """Interaction energy offset of ``n`` photons on one site."""
        if n < 0:
            raise ValueError("occupation must be non-negative")
        if self.kind == "kerr":
            return self.u * n * (n - 1) / 2.0
        if n >= len(self.table):
            raise ValueError(f"occupation {n} beyond table of length {len(self.table)}")
        return self.table[n]

    def as_table(self, n_max: int) -> tuple[float, ...]:
        return tuple(self.energy(n) for n in range(n_max + 1))


def _default_kerr() -> NonlinearitySpec:
    return NonlinearitySpec.kerr(0.0)


@dataclass(frozen=True)
class ModelSpec:
    """Full problem definition for one sector of the lattice model.

    Energies live in the rotating frame: the common cavity frequency is set to
    zero (eigenvalues are reported relative to ``n_ex`` times that frequency),
    so an excited atom carries energy ``-delta``.
    """

    L: int
    atom_sites: tuple[int, ...]
    n_ex: int
    boundary: str = "periodic"
    J: float = 1.0
    g: float = 1.0
    delta: float = 0.0
    nonlinearity: NonlinearitySpec = field(default_factory=_default_kerr)
    n_trunc: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("need at least one cavity")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        sites = tuple(int(s) for s in self.atom_sites)
        if len(set(sites)) != len(sites):
            raise ValueError("atom sites must be distinct")
        if any(s < 0 or s >= self.L for s in sites):
            raise ValueError("atom site out of range")
        if len(sites) > MAX_ATOMS:
            raise ValueError(f"at most {MAX_ATOMS} atoms supported")
        object.__setattr__(self, "atom_sites", tuple(sorted(sites)))
        if self.n_ex < 0:
            raise ValueError("n_ex must be non-negative")
        if self.n_trunc is None:
            object.__setattr__(self, "n_trunc", min(max(self.n_ex, 1), DEFAULT_TRUNC_CAP))
        if self.n_trunc < 1:
            raise ValueError("n_trunc must be at least 1")
        if self.nonlinearity.kind == "table" and len(self.nonlinearity.table) < self.n_trunc + 1:
            raise ValueError("nonlinearity table shorter than n_trunc + 1")
        if self.n_ex > self.n_trunc * self.L + self.n_atoms:
            raise ValueError(
                f"n_ex={self.n_ex} exceeds capacity {self.n_trunc * self.L + self.n_atoms}"
            )

    @property
    def n_atoms(self) -> int:
        return len(self.atom_sites)


@dataclass(frozen=True)
class Configuration:
    """One basis state: per-site photon occupations plus an atom bitmask (bit j = atom j excited)."""

    photons: tuple[int, ...]
    atoms: int


def occupation(c: Configuration, site: int) -> int:
    if site < 0 or site >= len(c.photons):
        raise IndexError(f"site {site} out of range")
    return c.photons[site]


def atom_excited(c: Configuration, j: int, n_atoms: int | None = None) -> bool:
    if j < 0 or (n_atoms is not None and j >= n_atoms):
        raise IndexError(f"atom {j} out of range")
    return bool((c.atoms >> j) & 1)


def _bounded_compositions(length: int, total: int, cap: int) -> list[bytes]:
    """All occupation vectors of ``total`` photons on ``length`` sites, each site
    holding at most ``cap``, in lexicographic order, packed one byte per site.

    Iterative successor stepping: find the rightmost site that can absorb one
    more photon from its suffix, then pack the remaining suffix photons as far
    right as possible (the lexicographically smallest suffix).
    """
    out: list[bytes] = []
    if length == 0:
        return [b""] if total == 0 else out
    if total > cap * length:
        return out

    def pack_right(buf: bytearray, start: int, amount: int) -> None:
        for p in range(length - 1, start - 1, -1):
            take = min(cap, amount)
            buf[p] = take
            amount -= take
        assert amount == 0

    buf = bytearray(length)
    pack_right(buf, 0, total)
    suffix = [0] * (length + 1)  # photons strictly to the right of each site
    while True:
        out.append(bytes(buf))
        for p in range(length - 1, -1, -1):
            suffix[p] = suffix[p + 1] + buf[p]
        i = None
        for p in range(length - 2, -1, -1):
            if buf[p] < cap and suffix[p + 1] >= 1:
                i = p
                break
        if i is None:
            return out
        buf[i] += 1
        pack_right(buf, i + 1, suffix[i + 1] - 1)


def composition_count(length: int, total: int, cap: int) -> int:
    """Number of compositions of ``total`` into ``length`` parts bounded by ``cap``
    (inclusion-exclusion over the stars-and-bars count)."""
    if total < 0:
        return 0
    if length == 0:
        return 1 if total == 0 else 0
    acc = 0
    for k in range(0, min(length, total // (cap + 1)) + 1):
        acc += (-1) ** k * comb(length, k) * comb(total - k * (cap + 1) + length - 1, length - 1)
    return acc


class SectorBasis:
    """Enumerated configurations of one fixed-excitation sector, with index lookup.

    ``photons`` is a (dim, L) uint8 array and ``atom_masks`` a (dim,) int64
    array; row i is the i-th configuration in canonical order. Instances are
    immutable after construction and safe to share across threads.
    """

    def __init__(self, spec: ModelSpec, photons: np.ndarray, atom_masks: np.ndarray):
        self.spec = spec
        self.photons = photons
        self.atom_masks = atom_masks
        self.dim = photons.shape[0]
        self._key_index: dict[bytes, int] = {}
        blob = photons.tobytes()
        L = spec.L
        masks = atom_masks.tolist()
        for i in range(self.dim):
            self._key_index[masks[i].to_bytes(8, "little") + blob[i * L : (i + 1) * L]] = i
        self.photons.setflags(write=False)
        self.atom_masks.setflags(write=False)

    def __len__(self) -> int:
        return self.dim

    def config(self, i: int) -> Configuration:
        return Configuration(tuple(int(v) for v in self.photons[i]), int(self.atom_masks[i]))

    def configs(self) -> Iterator[Configuration]:
        return (self.config(i) for i in range(self.dim))

    def lookup(self, mask: int, photon_bytes: bytes) -> int:
        """Raw index lookup; KeyError if the packed configuration is absent."""
        return self._key_index[mask.to_bytes(8, "little") + photon_bytes]

    def index_of(self, c: Configuration) -> int:
        spec = self.spec
        if len(c.photons) != spec.L:
            raise NotInSectorError(f"expected {spec.L} sites, got {len(c.photons)}")
        if any(p < 0 or p > spec.n_trunc for p in c.photons):
            raise NotInSectorError("per-site occupation outside [0, n_trunc]")
        if c.atoms < 0 or c.atoms >= (1 << spec.n_atoms):
            raise NotInSectorError("atom bitmask out of range")
        total = sum(c.photons) + c.atoms.bit_count()
        if total != spec.n_ex:
            raise NotInSectorError(f"total excitations {total} != n_ex {spec.n_ex}")
        key = c.atoms.to_bytes(8, "little") + bytes(c.photons)
        try:
            return self._key_index[key]
        except KeyError as err:  # unreachable for valid configurations
            raise NotInSectorError(f"configuration not enumerated: {c}") from err


def sector_dimension(spec: ModelSpec) -> int:
    """Dimension of the sector without enumerating it."""
    total = 0
    for k in range(0, min(spec.n_atoms, spec.n_ex) + 1):
        total += comb(spec.n_atoms, k) * composition_count(spec.L, spec.n_ex - k, spec.n_trunc)
    return total


def enumerate_sector(spec: ModelSpec, max_dim: int = DEFAULT_MAX_DIM) -> SectorBasis:
    """Enumerate every configuration of the sector in canonical order.

    Raises ``SectorSizeError`` when the dimension exceeds ``max_dim`` (checked
    combinatorially up front) and ``ValueError`` when the spec itself cannot
    hold ``n_ex`` excitations.
    """
    dim = sector_dimension(spec)
    if dim > max_dim:
        raise SectorSizeError(f"sector dimension {dim} exceeds limit {max_dim}")

    # Ascending-bitmask enumeration; photon blocks shared between masks with
    # equal excitation count.
    masks: list[int] = []
    for k in range(0, min(spec.n_atoms, spec.n_ex) + 1):
        for combo in itertools.combinations(range(spec.n_atoms), k):
            masks.append(sum(1 << j for j in combo))
    masks.sort()

    block_cache: dict[int, list[bytes]] = {}
    chunks: list[bytes] = []
    mask_out: list[int] = []
    for mask in masks:
        k_ph = spec.n_ex - mask.bit_count()
        block = block_cache.get(k_ph)
        if block is None:
            block = _bounded_compositions(spec.L, k_ph, spec.n_trunc)
            block_cache[k_ph] = block
        chunks.extend(block)
        mask_out.extend([mask] * len(block))

    if dim == 0:
        photons = np.zeros((0, spec.L), dtype=np.uint8)
    else:
        photons = np.frombuffer(b"".join(chunks), dtype=np.uint8).reshape(dim, spec.L).copy()
    atom_masks = np.asarray(mask_out, dtype=np.int64)
    return SectorBasis(spec, photons, atom_masks)


def state_index(basis: SectorBasis, c: Configuration) -> int:
    """Index of ``c`` in the canonical order; inverse of ``SectorBasis.config``."""
    return basis.index_of(c)
