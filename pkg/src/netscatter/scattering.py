"""Exact open-system response of a network coupled to two channels.

The input channel couples to site ``0`` and the output channel to site
``N-1`` with widths ``gamma_in`` and ``gamma_out``::

    W      = sqrt(gamma_in/2) |in><c_in| + sqrt(gamma_out/2) |out><c_out|
    H_eff  = H - i W W^T
    S(E)   = 1 - 2i W^T (E - H_eff)^{-1} W

The feshbach-style convention ``S = 1 - 2 pi i W'^T (E - H_eff)^{-1} W'`` is
the same thing with ``W = sqrt(pi) W'``; only the form above is implemented.
"""

import csv
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.optimize

from .exceptions import SingularMatrix, VanishingAmplitude
from .network import NetworkHamiltonian
from .numerics import Spectrum, eig_complex, solve_linear

AMPLITUDE_FLOOR = 1e-12


@dataclass(frozen=True)
class ChannelCoupling:
    gamma_in: float
    gamma_out: float = None

    def __post_init__(self):
        if self.gamma_out is None:
            object.__setattr__(self, "gamma_out", self.gamma_in)
        for g in (self.gamma_in, self.gamma_out):
            if not np.isfinite(g) or g < 0:
                raise ValueError(f"channel widths must be finite and >= 0, got {g}")

    @property
    def symmetric(self):
        return self.gamma_in == self.gamma_out


def _matrix(h):
    return h.matrix if isinstance(h, NetworkHamiltonian) else np.asarray(h, dtype=float)


def _coupling(c):
    return c if isinstance(c, ChannelCoupling) else ChannelCoupling(float(c))


def coupling_matrix(n_sites, c):
    """``N x 2`` matrix ``W`` with columns (input channel, output channel)."""
    c = _coupling(c)
    w = np.zeros((n_sites, 2))
    w[0, 0] = np.sqrt(c.gamma_in / 2.0)
    w[-1, 1] = np.sqrt(c.gamma_out / 2.0)
    return w


def effective_hamiltonian(h, c):
    c = _coupling(c)
    a = _matrix(h).astype(complex)
    a[0, 0] -= 0.5j * c.gamma_in
    a[-1, -1] -= 0.5j * c.gamma_out
    return a


def _resolvent_on_channels(h, c, energy, power=1):
    heff = effective_hamiltonian(h, c)
    n = heff.shape[0]
    w = coupling_matrix(n, c)
    x = solve_linear(energy * np.eye(n) - heff, w)
    if power == 2:
        x2 = solve_linear(energy * np.eye(n) - heff, x)
        return w, x, x2
    return w, x


def s_matrix(h, c, energy):
    """Full 2x2 S-matrix over channels (in, out) at real energy ``E``."""
    w, x = _resolvent_on_channels(h, c, energy)
    return np.eye(2) - 2j * (w.T @ x)


def transfer_probability(h, c, energy):
    return float(abs(s_matrix(h, c, energy)[0, 1]) ** 2)


def transfer_amplitudes(h, gammas, energies):
    """Vectorised ``S_in,out`` for paired arrays of channel widths and energies.

    Equal in- and out-widths; one batched LU solve for all pairs.
    """
    a = _matrix(h)
    n = a.shape[0]
    gammas, energies = np.broadcast_arrays(np.asarray(gammas, float), np.asarray(energies, float))
    gammas, energies = gammas.ravel(), energies.ravel()
    m = np.broadcast_to(-a.astype(complex), (len(gammas), n, n)).copy()
    m[:, np.arange(n), np.arange(n)] += energies[:, None]
    m[:, 0, 0] += 0.5j * gammas
    m[:, -1, -1] += 0.5j * gammas
    rhs = np.zeros((len(gammas), n, 1), complex)
    rhs[:, -1, 0] = 1.0
    try:
        x = np.linalg.solve(m, rhs)[:, 0, 0]
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from exc
    # S_io = -2i sqrt(g/2) sqrt(g/2) [(E - H_eff)^{-1}]_{0, N-1}
    return -1j * gammas * x


def _amplitude_and_derivative(h, c, energy):
    w, x, x2 = _resolvent_on_channels(h, c, energy, power=2)
    s = -2j * (w[:, 0] @ x[:, 1])
    ds = 2j * (w[:, 0] @ x2[:, 1])
    return s, ds


def dwell_time(h, c, energy):
    """``Im(dS_io/dE / S_io)`` with ``dS/dE = 2i W^T (E - H_eff)^{-2} W``.

    With the two channels on distinct sites the numerator of ``S_io`` is a
    real polynomial in ``E``, so this equals ``sum_k -Im(z_k) / |E - z_k|^2``
    over the resonances ``z_k`` of ``H_eff`` and is strictly positive.
    """
    s, ds = _amplitude_and_derivative(h, c, energy)
    if abs(s) <= AMPLITUDE_FLOOR:
        raise VanishingAmplitude(f"|S_in,out({energy})| = {abs(s):.3g}")
    return float((ds / s).imag)


@dataclass(frozen=True)
class ScatteringResponse:
    energies: np.ndarray
    s_elem: np.ndarray
    p: np.ndarray
    tau: np.ndarray  # NaN where the amplitude vanishes
    resonances: Spectrum

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["E", "p", "tau", "Re_S", "Im_S"])
            for e, p, t, s in zip(self.energies, self.p, self.tau, self.s_elem):
                writer.writerow([repr(float(e)), repr(float(p)),
                                 "" if np.isnan(t) else repr(float(t)),
                                 repr(float(s.real)), repr(float(s.imag))])

    def sidecar(self, **params):
        return {
            "resonances": [[float(z.real), float(z.imag)] for z in self.resonances.eigenvalues],
            "n_points": int(len(self.energies)),
            "n_missing_tau": int(np.isnan(self.tau).sum()),
            "params": params,
        }

    def write_json(self, path, **params):
        with open(path, "w") as fh:
            json.dump(self.sidecar(**params), fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_response_csv(path):
    """Read back a CSV written by :meth:`ScatteringResponse.write_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {k: np.array([float(r[k]) if r[k] != "" else np.nan for r in rows])
           for k in ("E", "p", "tau", "Re_S", "Im_S")}
    return out


def energy_grid(e_min, e_max, n_points):
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if n_points > 1 and not e_max > e_min:
        raise ValueError("e_max must exceed e_min")
    return np.linspace(e_min, e_max, n_points)


def scan(h, c, energies):
    """Evaluate S_io, p and the dwell time on an energy grid."""
    energies = np.asarray(energies, dtype=float)
    if energies.ndim != 1 or energies.size == 0:
        raise ValueError("energy grid must be a non-empty 1-d array")
    if np.any(np.diff(energies) <= 0):
        raise ValueError("energy grid must be strictly ascending")
    s = np.empty(len(energies), complex)
    tau = np.full(len(energies), np.nan)
    for k, e in enumerate(energies):
        amp, damp = _amplitude_and_derivative(h, c, e)
        s[k] = amp
        if abs(amp) > AMPLITUDE_FLOOR:
            tau[k] = (damp / amp).imag
    return ScatteringResponse(
        energies=energies, s_elem=s, p=np.abs(s) ** 2, tau=tau,
        resonances=eig_complex(effective_hamiltonian(h, c)))


class Peak(NamedTuple):
    energy: float
    height: float
    width: float  # curvature width sqrt(2 p / |p''|)


def _curvature_width(h, c, energy, height, step):
    p0 = transfer_probability(h, c, energy - step)
    p1 = transfer_probability(h, c, energy + step)
    curv = (p0 - 2.0 * height + p1) / step ** 2
    if curv >= 0:
        return np.inf
    return float(np.sqrt(2.0 * height / -curv))


def find_peaks(h, c, energies, min_height=0.0, min_width=0.0):
    """Local maxima of the exact transfer probability, refined off-grid.

    Grid maxima are polished by a bounded scalar search between their
    neighbouring grid points. Narrow peaks (bulk resonances) can be dropped
    with ``min_width``.
    """
    energies = np.asarray(energies, dtype=float)
    p = np.array([transfer_probability(h, c, e) for e in energies])
    step = 1e-4 * (energies[-1] - energies[0]) / max(len(energies) - 1, 1)
    idx = [k for k in range(len(p))
           if (k == 0 or p[k] >= p[k - 1]) and (k == len(p) - 1 or p[k] > p[k + 1])]
    peaks = []
    for k in idx:
        lo, hi = energies[max(k - 1, 0)], energies[min(k + 1, len(p) - 1)]
        e_best, p_best = energies[k], p[k]
        if hi > lo:
            res = scipy.optimize.minimize_scalar(
                lambda e: -transfer_probability(h, c, e), bounds=(lo, hi),
                method="bounded", options={"xatol": 1e-10 * (hi - lo)})
            if -res.fun >= p_best:
                e_best, p_best = float(res.x), float(-res.fun)
        if p_best < min_height:
            continue
        width = _curvature_width(h, c, e_best, p_best, step) if step > 0 else np.inf
        if width >= min_width:
            peaks.append(Peak(float(e_best), float(p_best), width))
    return peaks
