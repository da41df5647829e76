"""Named parameter sets for single networks, sweeps and density tables.

Sweep presets fix ``N``, ``xi`` and a target Cauchy width ``sigma_tilde``;
the link scale ``chi`` is the largest value allowed by the dominant-doublet
criterion at ``epsilon = 0.05`` and ``V`` then follows from
``sigma_tilde = chi^2 / (V xi)``.
"""

from dataclasses import dataclass

from .network import NetworkParams
from .statistics import chi_at_bound, coupling_for_sigma

EPSILON_BUDGET = 0.05
SWEEP_GAMMA_TILDES = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class NetworkPreset:
    name: str
    n_sites: int
    bulk_scale: float
    link_scale: float
    direct_coupling: float
    onsite_energy: float = 0.0
    gamma: float = None
    e_range: tuple = None
    sample_onsite: bool = False

    def network(self, construction="project"):
        return NetworkParams(
            n_sites=self.n_sites, onsite_energy=self.onsite_energy,
            direct_coupling=self.direct_coupling, bulk_scale=self.bulk_scale,
            link_scale=self.link_scale, sample_onsite=self.sample_onsite,
            construction=construction)


@dataclass(frozen=True)
class SweepPreset(NetworkPreset):
    sigma_tilde: float = None
    epsilon_budget: float = EPSILON_BUDGET
    gamma_tildes: tuple = SWEEP_GAMMA_TILDES


@dataclass(frozen=True)
class DensityPreset:
    name: str
    sigma_tildes: tuple
    gamma_tildes: tuple = None  # None: a log grid is used


def derive_sweep(name, n_sites, bulk_scale, sigma_tilde, epsilon_budget=EPSILON_BUDGET,
                 gamma_tildes=SWEEP_GAMMA_TILDES):
    """Sweep preset with ``chi`` at the doublet bound and ``V`` from ``sigma_tilde``."""
    chi = chi_at_bound(bulk_scale, n_sites, epsilon_budget)
    v = coupling_for_sigma(chi, bulk_scale, sigma_tilde)
    return SweepPreset(name=name, n_sites=n_sites, bulk_scale=bulk_scale, link_scale=chi,
                       direct_coupling=v, sample_onsite=True, sigma_tilde=sigma_tilde,
                       epsilon_budget=epsilon_budget, gamma_tildes=tuple(gamma_tildes))


def _build():
    presets = {
        "fig1": NetworkPreset("fig1", n_sites=8, bulk_scale=1.0, link_scale=1.0,
                              direct_coupling=1.0, gamma=5.0, e_range=(-4.0, 4.0)),
        "fig3": NetworkPreset("fig3", n_sites=10, bulk_scale=10.0, link_scale=1.0,
                              direct_coupling=0.01, gamma=0.2, e_range=(-0.5, 0.5)),
        "fig4": DensityPreset("fig4", sigma_tildes=(0.1, 1.0, 10.0)),
        "fig5": DensityPreset("fig5", sigma_tildes=(10.0,)),
        "fig6-top": derive_sweep("fig6-top", 8, 20.0, 0.1),
        "fig6-middle": derive_sweep("fig6-middle", 8, 50.0, 1.0),
        "fig6-bottom": derive_sweep("fig6-bottom", 10, 150.0, 10.0),
        "fig7": DensityPreset("fig7", sigma_tildes=(1.0, 10.0), gamma_tildes=(0.1, 1.0, 10.0)),
    }
    return presets


PRESETS = _build()


def get(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def describe(preset):
    """Plain-dict view including the derived parameters."""
    d = dict(preset.__dict__)
    for k, val in d.items():
        if isinstance(val, tuple):
            d[k] = list(val)
    return d
