"""Monte-Carlo sweeps over random networks and channel widths.

For every realization index a Hamiltonian is drawn from its own seed stream
``(master_seed, index)``; the same draws are reused for every channel width
on the grid. The exact transfer probability is evaluated at the
closed-system doublet energy ``E' + V + s+`` and the samples are histogrammed
per scaled width ``gamma_tilde = Gamma / 2V``.
"""

import csv
import json
import logging
import os
import subprocess
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .doublet import doublet_quality, exact_shifts, perturbative_shifts, sector_deficits
from .exceptions import NearDegenerate
from .network import NetworkParams, decompose_symmetry, sample_random
from .scattering import transfer_amplitudes
from .statistics import (EDGE_DELTA, Histogram, ScaledParams, approx_p_at_doublet_energy,
                         doublet_bound_value, efficiency_cdf, efficiency_density,
                         estimate_cauchy, make_histogram, scaled_params_from_model,
                         write_curve_csv)

log = logging.getLogger(__name__)

SHIFT_METHODS = ("exact", "perturbative")
ENERGY_MODES = ("doublet", "detuned")


@dataclass(frozen=True)
class SweepConfig:
    """Everything that determines a sweep.

    The channel-width grid is geometric, ``gamma_start * gamma_factor**k``,
    unless ``gamma_tildes`` lists scaled widths explicitly.

    ``shift_method`` selects how the doublet shift ``s+`` that fixes the
    evaluation energy is obtained: ``"exact"`` diagonalises the closed
    network, ``"perturbative"`` uses the second-order sum. ``energy_mode``
    ``"detuned"`` evaluates at the maximum of the two-pole profile instead.
    """

    network: NetworkParams
    gamma_start: float = 0.01
    gamma_factor: float = 1.2
    gamma_count: int = 1
    gamma_tildes: tuple = None
    n_realizations: int = 10000
    epsilon_budget: float = 0.05
    master_seed: int = 0
    n_bins: int = 50
    delta: float = EDGE_DELTA
    shift_method: str = "exact"
    energy_mode: str = "doublet"
    reject_eps_violations: bool = False

    def __post_init__(self):
        if self.gamma_factor <= 1:
            raise ValueError("gamma_factor must exceed 1")
        if self.n_realizations < 1 or self.gamma_count < 1 or self.n_bins < 1:
            raise ValueError("n_realizations, gamma_count and n_bins must be >= 1")
        if self.gamma_tildes is None and not self.gamma_start > 0:
            raise ValueError("gamma_start must be positive")
        if self.gamma_tildes is not None:
            object.__setattr__(self, "gamma_tildes", tuple(float(g) for g in self.gamma_tildes))
            if not self.gamma_tildes or min(self.gamma_tildes) <= 0:
                raise ValueError("gamma_tildes must be positive")
        if self.shift_method not in SHIFT_METHODS:
            raise ValueError(f"shift_method must be one of {SHIFT_METHODS}")
        if self.energy_mode not in ENERGY_MODES:
            raise ValueError(f"energy_mode must be one of {ENERGY_MODES}")
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        if self.network.direct_coupling <= 0:
            raise ValueError("the direct coupling V must be positive for scaled widths")

    @property
    def gammas(self):
        v2 = 2.0 * self.network.direct_coupling
        if self.gamma_tildes is not None:
            return np.array(self.gamma_tildes) * v2
        return self.gamma_start * self.gamma_factor ** np.arange(self.gamma_count)

    @property
    def gamma_tilde_grid(self):
        return self.gammas / (2.0 * self.network.direct_coupling)

    def scaled_params(self):
        """Cauchy parameters predicted from the sampling scales, or None."""
        net = self.network
        if net.link_scale <= 0 or net.bulk_scale <= 0:
            return None
        return scaled_params_from_model(net.link_scale, net.bulk_scale, net.direct_coupling,
                                        net.n_sites)

    def to_dict(self):
        d = asdict(self)
        d["gamma_tildes"] = list(self.gamma_tildes) if self.gamma_tildes is not None else None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["network"] = NetworkParams(**d["network"])
        return cls(**d)


@dataclass
class Realization:
    index: int
    p: np.ndarray = None  # one entry per channel width
    s_plus: float = np.nan
    s_minus: float = np.nan
    epsilon: float = np.nan
    epsilon_partner: float = np.nan  # mean of the two per-partner deficits
    near_degenerate: bool = False


def evaluate_realization(config, index):
    """Draw realization ``index`` and evaluate it across the width grid."""
    net = config.network
    h = sample_random(net, (config.master_seed, index))
    blocks = decompose_symmetry(h)
    rec = Realization(index)
    scale = net.bulk_scale if net.bulk_scale > 0 else None
    try:
        s_pert = perturbative_shifts(blocks, scale=scale)
    except NearDegenerate:
        rec.near_degenerate = True
        return rec
    s_plus, s_minus = exact_shifts(blocks) if config.shift_method == "exact" else s_pert
    rec.s_plus, rec.s_minus = s_plus, s_minus
    rec.epsilon = doublet_quality(blocks)
    rec.epsilon_partner = float(np.mean(sector_deficits(blocks)))

    gammas = config.gammas
    e_prime, v = h.onsite_energy, h.direct_coupling
    if config.energy_mode == "doublet":
        energies = np.full(len(gammas), e_prime + v + s_plus)
    else:
        d = 2.0 * v + s_plus - s_minus
        centre = e_prime + 0.5 * (s_plus + s_minus)
        half = 0.5 * np.sqrt(np.clip(d ** 2 - gammas ** 2, 0.0, None))
        energies = centre + np.sign(d) * half
    rec.p = np.abs(transfer_amplitudes(h, gammas, energies)) ** 2
    return rec


def _evaluate_chunk(args):
    config, indices = args
    return [evaluate_realization(config, i) for i in indices]


def _theory_bin_mass(edges, scaled, gamma_tilde):
    cdf = efficiency_cdf(edges, gamma_tilde, scaled.sigma_tilde, scaled.s0_tilde)
    return np.diff(cdf)


@dataclass
class GammaRecord:
    gamma: float
    gamma_tilde: float
    indices: np.ndarray
    samples: np.ndarray
    delta_s_tilde: np.ndarray
    epsilon: np.ndarray
    histogram: Histogram
    epsilon_partner: np.ndarray = None
    theory_density: np.ndarray = None  # bin-averaged analytic density
    theory_curve: np.ndarray = None  # analytic density at bin centres
    n_ok: int = 0
    n_rejected_degenerate: int = 0
    n_eps_violation: int = 0
    sigma_tilde_empirical: float = np.nan
    s0_tilde_empirical: float = np.nan


@dataclass
class EnsembleResult:
    config: SweepConfig
    records: list = field(default_factory=list)
    scaled: ScaledParams = None
    bound_value: float = np.nan

    def __len__(self):
        return len(self.records)


def _realizations(config, threads):
    indices = np.arange(config.n_realizations)
    if threads <= 1:
        return [evaluate_realization(config, int(i)) for i in indices]
    chunks = [(config, [int(i) for i in c]) for c in np.array_split(indices, threads * 4) if len(c)]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        out = []
        for part in pool.map(_evaluate_chunk, chunks):
            out.extend(part)
    return out


def run_sweep(config, threads=1):
    """Run the full protocol; the result depends only on ``config``."""
    net = config.network
    scaled = config.scaled_params()
    bound = np.nan
    if net.bulk_scale > 0 and net.n_sites >= 4:
        bound = float(doublet_bound_value(net.link_scale, net.bulk_scale, net.n_sites))
        # presets sit exactly at equality; only a real excess warns
        if bound > config.epsilon_budget * (1.0 + 1e-9):
            warnings.warn(f"dominant-doublet bound violated: {bound:.4g} > "
                          f"{config.epsilon_budget}", RuntimeWarning, stacklevel=2)

    reals = _realizations(config, threads)
    ok = [r for r in reals if not r.near_degenerate]
    n_degenerate = len(reals) - len(ok)
    eps = np.array([r.epsilon for r in ok])
    violators = eps > config.epsilon_budget
    if config.reject_eps_violations:
        ok = [r for r, bad in zip(ok, violators) if not bad]
        eps = eps[~violators]
    n_eps = int(violators.sum())
    log.info("sweep: %d realizations, %d near-degenerate, %d above epsilon budget",
             len(reals), n_degenerate, n_eps)

    v2 = 2.0 * net.direct_coupling
    ds_tilde = np.array([(r.s_plus - r.s_minus) / v2 for r in ok])
    if len(ds_tilde):
        s0_emp, sigma_emp = estimate_cauchy(ds_tilde)
    else:
        s0_emp = sigma_emp = np.nan
    indices = np.array([r.index for r in ok], dtype=int)
    eps_partner = np.array([r.epsilon_partner for r in ok])
    p_all = np.array([r.p for r in ok]).reshape(len(ok), -1)

    result = EnsembleResult(config=config, scaled=scaled, bound_value=bound)
    lo, hi = config.delta, 1.0 - config.delta
    for k, (gamma, gt) in enumerate(zip(config.gammas, config.gamma_tilde_grid)):
        samples = p_all[:, k] if len(ok) else np.zeros(0)
        if len(samples):
            hist = make_histogram(samples, config.n_bins, (lo, hi))
        else:
            edges = np.linspace(lo, hi, config.n_bins + 1)
            hist = Histogram(edges, np.zeros(config.n_bins, dtype=np.int64))
        rec = GammaRecord(
            gamma=float(gamma), gamma_tilde=float(gt), indices=indices, samples=samples,
            delta_s_tilde=ds_tilde, epsilon=eps, histogram=hist, n_ok=len(samples),
            epsilon_partner=eps_partner,
            n_rejected_degenerate=n_degenerate,
            n_eps_violation=n_eps,
            sigma_tilde_empirical=sigma_emp, s0_tilde_empirical=s0_emp)
        if scaled is not None:
            rec.theory_density = _theory_bin_mass(hist.bin_edges, scaled, gt) / hist.widths
            rec.theory_curve = efficiency_density(hist.centers, gt, scaled.sigma_tilde,
                                                  scaled.s0_tilde, delta=config.delta)
        result.records.append(rec)
    return result


def compare_to_theory(result, scaled=None):
    """Histogram-vs-analytic distances per scaled channel width.

    The total-variation distance is taken over the partition formed by the
    histogram bins plus the two edge regions ``[0, delta)`` and
    ``(1-delta, 1]``; all masses are fractions of all accepted samples.
    ``sup_norm`` compares in-range densities bin by bin.
    """
    scaled = scaled or result.scaled
    if scaled is None:
        raise ValueError("no analytic parameters available for comparison")
    if not result.records:
        raise ValueError("empty ensemble result")
    delta = result.config.delta
    report = []
    for rec in result.records:
        hist = rec.histogram
        n = max(hist.n_total, 1)
        gt = rec.gamma_tilde
        th_mass = _theory_bin_mass(hist.bin_edges, scaled, gt)
        th_low = float(efficiency_cdf(delta, gt, scaled.sigma_tilde, scaled.s0_tilde))
        th_high = float(1.0 - efficiency_cdf(1.0 - delta, gt, scaled.sigma_tilde, scaled.s0_tilde))
        emp_mass = hist.counts / n
        tv = 0.5 * (np.abs(emp_mass - th_mass).sum()
                    + abs(hist.n_below / n - th_low) + abs(hist.n_above / n - th_high))
        emp_density = emp_mass / hist.widths
        th_density = th_mass / hist.widths
        sup = float(np.max(np.abs(emp_density - th_density)))
        report.append({
            "gamma_tilde": gt,
            "tv_distance": float(tv),
            "sup_norm": sup,
            "sup_norm_rel": sup / float(np.max(th_density)) if np.max(th_density) > 0 else np.inf,
            "edge_low": {"empirical": hist.n_below / n, "theory": th_low},
            "edge_high": {"empirical": hist.n_above / n, "theory": th_high},
            "n_samples": int(hist.n_total),
        })
    return report


def dimer_baseline(gamma_tildes, v=1.0):
    """Transfer probability of the bare dimer (no shifts) across ``gamma_tilde``.

    ``v`` is carried only for symmetry with the unscaled parameters; in
    scaled units the curve is ``1 / (1 + gamma_tilde^2 / 4)``.
    """
    return approx_p_at_doublet_energy(0.0, np.asarray(gamma_tildes, dtype=float))


def git_describe():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=10)
    except (OSError, subprocess.SubprocessError):
        return f"v{__version__}"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else f"v{__version__}"


def _num(x):
    x = float(x)
    return None if np.isnan(x) else x


def _gamma_files(k):
    return {"samples": f"samples_g{k:03d}.csv", "histogram": f"histogram_g{k:03d}.csv"}


def summary_rows(result):
    comparison = compare_to_theory(result) if result.scaled is not None else None
    rows = []
    for k, rec in enumerate(result.records):
        s = rec.samples
        rows.append({
            "gamma_tilde": rec.gamma_tilde,
            "mean_p": float(np.mean(s)) if len(s) else np.nan,
            "median_p": float(np.median(s)) if len(s) else np.nan,
            "tv_distance": comparison[k]["tv_distance"] if comparison else np.nan,
            "n_ok": rec.n_ok,
            "n_rejected": rec.n_rejected_degenerate
            + (rec.n_eps_violation if result.config.reject_eps_violations else 0),
        })
    return rows


def write_artifacts(result, out_dir, started_at=None):
    """Write manifest, per-width CSVs, summary table and dimer baseline.

    Output is a pure function of ``result`` (and ``started_at``, which is
    recorded verbatim), so equal configs give byte-identical files.
    """
    os.makedirs(out_dir, exist_ok=True)
    per_gamma = []
    for k, rec in enumerate(result.records):
        files = _gamma_files(k)
        with open(os.path.join(out_dir, files["samples"]), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["realization", "p", "delta_s_tilde", "epsilon"])
            for i, p, ds, e in zip(rec.indices, rec.samples, rec.delta_s_tilde, rec.epsilon):
                writer.writerow([int(i), repr(float(p)), repr(float(ds)), repr(float(e))])
        theory = rec.theory_density if rec.theory_density is not None else np.full(
            len(rec.histogram.counts), np.nan)
        rec.histogram.write_csv(os.path.join(out_dir, files["histogram"]), theory=theory)
        per_gamma.append({
            "gamma": rec.gamma,
            "gamma_tilde": rec.gamma_tilde,
            "files": files,
            "n_ok": rec.n_ok,
            "n_rejected_degenerate": rec.n_rejected_degenerate,
            "n_eps_violation": rec.n_eps_violation,
            "n_below_delta": rec.histogram.n_below,
            "n_above_delta": rec.histogram.n_above,
            "sigma_tilde_empirical": _num(rec.sigma_tilde_empirical),
            "s0_tilde_empirical": _num(rec.s0_tilde_empirical),
        })

    rows = summary_rows(result)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        cols = ["gamma_tilde", "mean_p", "median_p", "tv_distance", "n_ok", "n_rejected"]
        writer.writerow(cols)
        for r in rows:
            writer.writerow([repr(float(r[c])) if isinstance(r[c], float) else r[c] for c in cols])

    gts = result.config.gamma_tilde_grid
    write_curve_csv(os.path.join(out_dir, "dimer_baseline.csv"),
                    {"x": gts, "f": dimer_baseline(gts)})

    scaled = result.scaled
    manifest = {
        "config": result.config.to_dict(),
        "version": __version__,
        "git_describe": git_describe(),
        "started_at": started_at,
        "seeds": {"master_seed": result.config.master_seed,
                  "stream": "SeedSequence(master_seed, spawn_key=(realization,))"},
        "theory": None if scaled is None else {
            "sigma_tilde": scaled.sigma_tilde, "s0_tilde": scaled.s0_tilde},
        "doublet_bound_value": _num(result.bound_value),
        "per_gamma": per_gamma,
        "summary": "summary.csv",
        "dimer_baseline": "dimer_baseline.csv",
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def now_iso():
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()
