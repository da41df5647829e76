"""Centrosymmetric network Hamiltonians.

Sites are indexed ``0 .. N-1``; site ``0`` is the input site and ``N-1`` the
output site. The remaining ``N-2`` bulk sites come in mirror pairs
``(k, N-1-k)``. A Hamiltonian has the bordered form::

    [[E',  v_1 ... v_n,  V ],
     [v_1                v_n],
     [ :       H_int      : ],
     [v_n                v_1],
     [V,   v_n ... v_1,  E' ]]

with ``H_int`` itself centrosymmetric, so that ``J H J == H`` for the
exchange operator ``J`` (ones on the anti-diagonal).
"""

import functools
import json
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import CentrosymmetryViolation, DimensionMismatch

CENTRO_TOL = 1e-12
CONSTRUCTIONS = ("project", "mirror")


@dataclass(frozen=True)
class NetworkParams:
    """Structural parameters of a network.

    Parameters
    ----------
    n_sites : int
        Total number of sites ``N`` (even, >= 2).
    onsite_energy : float
        Energy ``E'`` of the input and output sites.
    direct_coupling : float
        Direct input-output coupling ``V``.
    bulk_scale : float
        RMS scale ``xi`` of the bulk couplings.
    link_scale : float
        RMS scale ``chi`` of the input/output to bulk couplings.
    sample_onsite : bool
        Draw ``E'`` from ``Normal(0, 2 xi^2 / N)`` instead of using
        ``onsite_energy``.
    construction : {"project", "mirror"}
        How a random bulk is made centrosymmetric: ``"project"`` draws a
        full GOE matrix ``G`` and keeps ``(G + J G J) / 2``; ``"mirror"``
        draws one entry per symmetry orbit and copies it.
    """

    n_sites: int
    onsite_energy: float = 0.0
    direct_coupling: float = 1.0
    bulk_scale: float = 0.0
    link_scale: float = 0.0
    sample_onsite: bool = False
    construction: str = "project"

    def __post_init__(self):
        if self.construction not in CONSTRUCTIONS:
            raise ValueError(f"construction must be one of {CONSTRUCTIONS}")
        if int(self.n_sites) != self.n_sites or self.n_sites < 2 or self.n_sites % 2:
            raise ValueError(f"n_sites must be an even integer >= 2, got {self.n_sites}")
        if self.bulk_scale < 0 or self.link_scale < 0:
            raise ValueError("bulk_scale and link_scale must be non-negative")
        for name in ("onsite_energy", "direct_coupling", "bulk_scale", "link_scale"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def n_bulk(self):
        return self.n_sites - 2


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NetworkHamiltonian:
    matrix: np.ndarray
    params: NetworkParams
    v: np.ndarray
    bulk: np.ndarray
    seed: object = None

    @property
    def n_sites(self):
        return self.matrix.shape[0]

    @property
    def onsite_energy(self):
        return float(self.matrix[0, 0])

    @property
    def direct_coupling(self):
        return float(self.matrix[0, -1])

    def to_dict(self):
        return {
            "N": int(self.n_sites),
            "E_prime": self.onsite_energy,
            "V": self.direct_coupling,
            "v": self.v.tolist(),
            "bulk": self.bulk.ravel().tolist(),
            "seed": self.seed,
            "xi": self.params.bulk_scale,
            "chi": self.params.link_scale,
            "sample_onsite": self.params.sample_onsite,
            "construction": self.params.construction,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d):
        n = int(d["N"])
        params = NetworkParams(
            n_sites=n,
            onsite_energy=float(d["E_prime"]),
            direct_coupling=float(d["V"]),
            bulk_scale=float(d.get("xi", 0.0)),
            link_scale=float(d.get("chi", 0.0)),
            sample_onsite=bool(d.get("sample_onsite", False)),
            construction=d.get("construction", "project"),
        )
        bulk = np.asarray(d["bulk"], dtype=float).reshape(n - 2, n - 2)
        seed = d.get("seed")
        if isinstance(seed, list):
            seed = tuple(seed)
        return build_deterministic(params, d["v"], bulk, seed=seed)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SymmetryBlocks:
    """The two sectors of ``H`` in the basis of (anti)symmetric site pairs.

    Each sector is a bordered matrix: a corner energy (``E' + V`` or
    ``E' - V``), the coupling vector of the doublet state to the sector's bulk
    states, and the sector's bulk block.
    """

    plus_energy: float
    minus_energy: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray
    scale: float = 1.0

    def sector(self, sign):
        """Full bordered matrix of the ``+1`` or ``-1`` sector."""
        if sign > 0:
            e, v, h = self.plus_energy, self.v_plus, self.h_plus
        else:
            e, v, h = self.minus_energy, self.v_minus, self.h_minus
        m = len(v)
        out = np.empty((m + 1, m + 1))
        out[0, 0] = e
        out[0, 1:] = v
        out[1:, 0] = v
        out[1:, 1:] = h
        return out

    def reassemble(self):
        """Back-transform to the site basis."""
        q = symmetry_basis(2 * len(self.v_plus) + 2)
        m1 = len(self.v_plus) + 1
        block = np.zeros((2 * m1, 2 * m1))
        block[:m1, :m1] = self.sector(+1)
        block[m1:, m1:] = self.sector(-1)
        return q @ block @ q.T


def exchange_operator(n_sites):
    """Permutation matrix mapping site ``i`` to ``N-1-i``."""
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    return np.fliplr(np.eye(n_sites))


@functools.lru_cache(maxsize=None)
def _symmetry_basis(n_sites):
    m1 = n_sites // 2
    q = np.zeros((n_sites, n_sites))
    r = 1.0 / np.sqrt(2.0)
    for k in range(m1):
        q[k, k] = r
        q[n_sites - 1 - k, k] = r
        q[k, m1 + k] = r
        q[n_sites - 1 - k, m1 + k] = -r
    q.setflags(write=False)
    return q


def symmetry_basis(n_sites):
    """Orthogonal matrix whose columns are ``(|+>, symmetric bulk pairs,
    |->, antisymmetric bulk pairs)``.
    """
    if n_sites % 2:
        raise ValueError("odd site counts have no paired symmetry basis")
    return _symmetry_basis(n_sites)


def is_centrosymmetric(a, tol=CENTRO_TOL):
    a = np.asarray(a)
    if a.size == 0:
        return True
    return np.max(np.abs(a - a[::-1, ::-1])) <= tol * max(1.0, np.max(np.abs(a)))


def build_deterministic(params, v, bulk, seed=None):
    """Assemble the bordered centrosymmetric Hamiltonian from its parts."""
    n = params.n_sites
    v = np.asarray(v, dtype=float).reshape(-1)
    bulk = np.asarray(bulk, dtype=float)
    if bulk.size == 0:
        bulk = bulk.reshape(0, 0)
    if v.shape != (n - 2,) or bulk.shape != (n - 2, n - 2):
        raise DimensionMismatch(
            f"N={n} needs v of length {n - 2} and a {n - 2}x{n - 2} bulk, "
            f"got {v.shape} and {bulk.shape}")
    if bulk.size and np.max(np.abs(bulk - bulk.T)) > CENTRO_TOL * max(1.0, np.max(np.abs(bulk))):
        raise CentrosymmetryViolation("bulk block is not symmetric")
    if not is_centrosymmetric(bulk):
        raise CentrosymmetryViolation("bulk block does not commute with the exchange operator")

    h = np.zeros((n, n))
    h[1:-1, 1:-1] = bulk
    h[0, 0] = h[-1, -1] = params.onsite_energy
    h[0, -1] = h[-1, 0] = params.direct_coupling
    h[0, 1:-1] = v
    h[1:-1, 0] = v
    h[-1, 1:-1] = v[::-1]
    h[1:-1, -1] = v[::-1]
    # symmetrise exactly so that J H J == H bit for bit
    h[1:-1, 1:-1] = 0.5 * (bulk + bulk[::-1, ::-1])
    h[1:-1, 1:-1] = 0.5 * (h[1:-1, 1:-1] + h[1:-1, 1:-1].T)
    return NetworkHamiltonian(
        matrix=_frozen(h), params=params, v=_frozen(v),
        bulk=_frozen(h[1:-1, 1:-1]), seed=seed)


@functools.lru_cache(maxsize=None)
def _bulk_orbits(nb):
    """Canonical representatives of entries under transpose and mirroring.

    Returns (rows, cols, is_diag, orbit_of) where ``orbit_of`` is an ``nb x nb``
    integer array mapping every entry to its representative's index.
    """
    reps = []
    index = {}
    orbit_of = np.full((nb, nb), -1, dtype=int)
    for i in range(nb):
        for j in range(i, nb):
            images = {(i, j), (j, i), (nb - 1 - i, nb - 1 - j), (nb - 1 - j, nb - 1 - i)}
            key = min(images)
            if key not in index:
                index[key] = len(reps)
                reps.append(key)
            for a, b in images:
                orbit_of[a, b] = index[key]
    rows = np.array([r for r, _ in reps], dtype=int)
    cols = np.array([c for _, c in reps], dtype=int)
    return rows, cols, rows == cols, orbit_of


def make_rng(seed):
    """Generator for an int seed, a ``(master_seed, index)`` pair, a
    ``SeedSequence`` or an existing ``Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    if isinstance(seed, (tuple, list)):
        master, *key = (int(s) for s in seed)
        return np.random.default_rng(np.random.SeedSequence(master, spawn_key=tuple(key)))
    return np.random.default_rng(seed)


def _goe(nb, sd, rng):
    # upper triangle incl. diagonal, row-major; diagonal variance doubled
    iu = np.triu_indices(nb)
    g = np.zeros((nb, nb))
    draws = rng.normal(0.0, 1.0, size=len(iu[0])) * sd
    g[iu] = np.where(iu[0] == iu[1], np.sqrt(2.0), 1.0) * draws
    return g + np.triu(g, 1).T


def sample_random(params, rng_seed):
    """Draw a random centrosymmetric Hamiltonian.

    The border couplings ``v_i`` are i.i.d. ``Normal(0, chi^2 / N)`` and, when
    ``params.sample_onsite`` is set, ``E'`` is ``Normal(0, 2 xi^2 / N)``. Bulk
    entries start from ``Normal(0, (1 + delta_ij) xi^2 / N)``; see
    :class:`NetworkParams` for how centrosymmetry is imposed.

    Draw order is fixed (``E'``, ``v``, bulk) so a seed fully determines the
    matrix.
    """
    n = params.n_sites
    nb = n - 2
    rng = make_rng(rng_seed)
    xi, chi = params.bulk_scale, params.link_scale
    sd = xi / np.sqrt(n)

    e_prime = params.onsite_energy
    if params.sample_onsite:
        e_prime = float(rng.normal(0.0, np.sqrt(2.0) * sd))
    v = rng.normal(0.0, chi / np.sqrt(n), size=nb)

    bulk = np.zeros((nb, nb))
    if nb and params.construction == "mirror":
        rows, cols, diag, orbit_of = _bulk_orbits(nb)
        draws = rng.normal(0.0, 1.0, size=len(rows)) * sd * np.where(diag, np.sqrt(2.0), 1.0)
        bulk = draws[orbit_of]
    elif nb:
        g = _goe(nb, sd, rng)
        bulk = 0.5 * (g + g[::-1, ::-1])

    if isinstance(rng_seed, (int, np.integer)):
        seed = int(rng_seed)
    elif isinstance(rng_seed, (tuple, list)):
        seed = [int(s) for s in rng_seed]
    else:
        seed = None
    return build_deterministic(replace(params, onsite_energy=e_prime), v, bulk, seed=seed)


def decompose_symmetry(h):
    """Split a centrosymmetric Hamiltonian into its two symmetry sectors."""
    a = h.matrix if isinstance(h, NetworkHamiltonian) else np.asarray(h, dtype=float)
    n = a.shape[0]
    if n % 2:
        raise CentrosymmetryViolation("odd number of sites")
    if not is_centrosymmetric(a):
        raise CentrosymmetryViolation("Hamiltonian does not commute with the exchange operator")
    q = symmetry_basis(n)
    b = q.T @ a @ q
    b = 0.5 * (b + b.T)
    m1 = n // 2
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(b[:m1, m1:])) > CENTRO_TOL * scale:
        raise CentrosymmetryViolation("symmetry sectors do not decouple")
    return SymmetryBlocks(
        plus_energy=float(b[0, 0]),
        minus_energy=float(b[m1, m1]),
        v_plus=b[0, 1:m1].copy(),
        v_minus=b[m1, m1 + 1:].copy(),
        h_plus=b[1:m1, 1:m1].copy(),
        h_minus=b[m1 + 1:, m1 + 1:].copy(),
        scale=scale,
    )
