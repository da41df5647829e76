"""Dominant-doublet perturbation theory.

When the closed network has two eigenstates close to
``|+-> = (|in> +- |out>)/sqrt(2)``, the bulk enters only through the
second-order shifts ``s+-`` of the doublet levels ``E' +- V`` and the open
system behaves like a dimer with complex poles

    P+- = E' +- V + s+- - i Gamma/2.

Everything here is closed form in ``(E', V, Gamma, s+, s-)``.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import NearDegenerate, VanishingAmplitude
from .network import NetworkHamiltonian, decompose_symmetry
from .numerics import eig_sym

DEGENERACY_TOL = 1e-9
AMPLITUDE_FLOOR = 1e-12


class Regime(str, enum.Enum):
    SEPARATED = "Separated"
    MERGED = "Merged"
    OVERLAPPING = "Overlapping"


def classify(gamma, splitting, rtol=1e-12):
    """Regime from the channel width and the shifted doublet splitting."""
    splitting = abs(splitting)
    if abs(gamma - splitting) <= rtol * max(gamma, splitting):
        return Regime.MERGED
    return Regime.SEPARATED if gamma < splitting else Regime.OVERLAPPING


@dataclass(frozen=True)
class DoubletAnalysis:
    s_plus: float
    s_minus: float
    epsilon: float = 0.0
    onsite_energy: float = 0.0
    direct_coupling: float = 1.0
    gamma: float = 0.0

    @property
    def delta_s(self):
        return self.s_plus - self.s_minus

    @property
    def s_bar(self):
        return 0.5 * (self.s_plus + self.s_minus)

    @property
    def splitting(self):
        """``2V + delta_s``, the shifted doublet splitting (signed)."""
        return 2.0 * self.direct_coupling + self.delta_s

    @property
    def regime(self):
        return classify(self.gamma, self.splitting)

    @property
    def resonance_energies(self):
        return resonance_energies(self, self.onsite_energy, self.direct_coupling, self.gamma)

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "s_plus": self.s_plus,
            "s_minus": self.s_minus,
            "delta_s": self.delta_s,
            "s_bar": self.s_bar,
            "splitting": self.splitting,
            "regime": self.regime.value,
            "resonance_energies": [float(e) for e in self.resonance_energies],
        }


def _blocks(h):
    if isinstance(h, NetworkHamiltonian) or isinstance(h, np.ndarray):
        return decompose_symmetry(h)
    return h


def _doublet_partners(blocks):
    """Per sector: (eigenvalue, overlap) of the eigenstate closest to ``|+->``."""
    out = []
    for sign in (+1, -1):
        spec = eig_sym(blocks.sector(sign))
        weights = spec.eigenvectors[0, :] ** 2
        k = int(np.argmax(weights))
        out.append((float(spec.eigenvalues[k]), float(weights[k])))
    return out


def sector_overlaps(h):
    """Largest ``|<eta_i|+->|^2`` over the eigenvectors of each sector."""
    return tuple(w for _, w in _doublet_partners(_blocks(h)))


def sector_deficits(h):
    """``(eps+, eps-)``: the overlap deficit of each doublet partner."""
    return tuple(max(0.0, 1.0 - w) for w in sector_overlaps(h))


def doublet_quality(h):
    """Overlap deficit ``epsilon`` of the worse of the two doublet partners.

    The eigenstates of each symmetry sector are compared with the sector's
    doublet state; ``epsilon = 1 - min(max_i |<eta_i|+>|^2, max_i |<eta_i|->|^2)``.
    """
    return max(sector_deficits(h))


def exact_shifts(h):
    """Shifts of the closed-system doublet eigenvalues from ``E' +- V``.

    Unlike :func:`perturbative_shifts` these are exact: the partner
    eigenvalues come from diagonalising each sector.
    """
    blocks = _blocks(h)
    (e_plus, _), (e_minus, _) = _doublet_partners(blocks)
    return e_plus - blocks.plus_energy, e_minus - blocks.minus_energy


def perturbative_shifts(blocks, scale=None):
    """Second-order shifts ``(s+, s-)`` of the doublet levels.

    ``s+- = sum_i |<V+-|psi_i>|^2 / (E' +- V - e_i)`` over the eigenpairs of
    each sector's bulk block.

    Raises
    ------
    NearDegenerate
        If a doublet level lies within ``1e-9 * scale`` of a bulk level.
    """
    blocks = _blocks(blocks)
    if scale is None or scale <= 0:
        scale = blocks.scale
    shifts = []
    for e0, v, h in ((blocks.plus_energy, blocks.v_plus, blocks.h_plus),
                     (blocks.minus_energy, blocks.v_minus, blocks.h_minus)):
        if len(v) == 0:
            shifts.append(0.0)
            continue
        spec = eig_sym(h)
        den = e0 - spec.eigenvalues
        if np.min(np.abs(den)) < DEGENERACY_TOL * scale:
            raise NearDegenerate(
                f"doublet level {e0:.6g} within {np.min(np.abs(den)):.3g} of a bulk level")
        weights = (v @ spec.eigenvectors) ** 2
        shifts.append(float(np.sum(weights / den)))
    return tuple(shifts)


def analyze(h, gamma=0.0, scale=None):
    """Full doublet analysis of a network for channel width ``gamma``."""
    blocks = decompose_symmetry(h)
    if scale is None and isinstance(h, NetworkHamiltonian) and h.params.bulk_scale > 0:
        scale = h.params.bulk_scale
    s_plus, s_minus = perturbative_shifts(blocks, scale=scale)
    if isinstance(h, NetworkHamiltonian):
        e_prime, v = h.onsite_energy, h.direct_coupling
    else:
        e_prime = 0.5 * (blocks.plus_energy + blocks.minus_energy)
        v = 0.5 * (blocks.plus_energy - blocks.minus_energy)
    return DoubletAnalysis(
        s_plus=s_plus, s_minus=s_minus, epsilon=doublet_quality(blocks),
        onsite_energy=e_prime, direct_coupling=v, gamma=float(gamma))


def _poles(analysis, e_prime, v, gamma):
    p_plus = e_prime + v + analysis.s_plus - 0.5j * gamma
    p_minus = e_prime - v + analysis.s_minus - 0.5j * gamma
    return p_plus, p_minus


def approx_s_element(analysis, e_prime, v, gamma, energy):
    p_plus, p_minus = _poles(analysis, e_prime, v, gamma)
    return -0.5j * gamma * (1.0 / (energy - p_plus) - 1.0 / (energy - p_minus))


def approx_transfer_probability(analysis, e_prime, v, gamma, energy):
    g2 = 0.25 * gamma ** 2
    d = 2.0 * v + analysis.delta_s
    lower = (e_prime - v + analysis.s_minus - energy) ** 2 + g2
    upper = (e_prime + v + analysis.s_plus - energy) ** 2 + g2
    return g2 * d ** 2 / (lower * upper)


def approx_dwell_time(analysis, e_prime, v, gamma, energy):
    """Dwell time of the two-pole amplitude.

    With ``a = 1/(E - P+)`` and ``b = 1/(E - P-)`` the amplitude is
    ``-i Gamma/2 (a - b)`` and its logarithmic derivative is ``-(a + b)``,
    so the dwell time is a sum of two Lorentzians.
    """
    p_plus, p_minus = _poles(analysis, e_prime, v, gamma)
    a = 1.0 / (energy - p_plus)
    b = 1.0 / (energy - p_minus)
    if abs(0.5 * gamma * (a - b)) <= AMPLITUDE_FLOOR:
        raise VanishingAmplitude("two-pole amplitude vanishes")
    return float(-(a + b).imag)


def resonance_energies(analysis, e_prime, v, gamma):
    """Energies maximising the two-pole transfer probability."""
    d = 2.0 * v + analysis.delta_s
    centre = e_prime + analysis.s_bar
    if classify(gamma, d) is not Regime.SEPARATED:
        return (centre,)
    half = 0.5 * np.sqrt(d ** 2 - gamma ** 2)
    return (centre - half, centre + half)
