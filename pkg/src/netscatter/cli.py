"""Command-line driver.

Every subcommand writes CSV/JSON files under ``--out-dir`` and a JSON summary
on stdout. Values are resolved as: explicit flag, then ``--config`` file,
then preset, then built-in default.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from . import doublet as db
from . import presets as ps
from .ensemble import (SweepConfig, compare_to_theory, now_iso, run_sweep, summary_rows,
                       write_artifacts)
from .exceptions import NearDegenerate, NetscatterError
from .network import NetworkHamiltonian, NetworkParams, sample_random
from .scattering import ChannelCoupling, dwell_time, energy_grid, find_peaks, scan
from .statistics import (EDGE_DELTA, chi_at_bound, coupling_for_sigma, doublet_bound_value,
                         efficiency_density, efficient_fraction, write_curve_csv)

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("netscatter")

GLOBAL_DEFAULTS = {"seed": 0, "threads": 1, "out_dir": ".", "config": None, "dry_run": False}

NETWORK_DEFAULTS = {
    "n": 2, "xi": 0.0, "chi": 0.0, "eprime": 0.0, "v": 1.0, "sample_eprime": False,
    "construction": "project", "hamiltonian": None, "preset": None,
}

DEFAULTS = {
    "spectrum": {**NETWORK_DEFAULTS, "gamma": None, "gamma_out": None, "emin": None,
                 "emax": None, "points": 1001},
    "dwell": {**NETWORK_DEFAULTS, "gamma": None, "gamma_out": None, "emin": None,
              "emax": None, "points": 1001},
    "doublet": {**NETWORK_DEFAULTS, "gamma": None, "emin": None, "emax": None, "points": 801,
                "epsilon_budget": ps.EPSILON_BUDGET},
    "ensemble": {"preset": None, "n": 8, "xi": None, "chi": None, "v": None,
                 "sigma_tilde": None, "eprime": 0.0, "pin_eprime": False,
                 "construction": "project", "gamma_start": None, "gamma_factor": 1.2,
                 "gamma_count": None, "gamma_tildes": None, "realizations": 10000,
                 "bins": 50, "delta": EDGE_DELTA, "epsilon_budget": ps.EPSILON_BUDGET,
                 "shift_method": "exact", "energy_mode": "doublet", "reject_eps": False,
                 "timestamp": False},
    "density": {"preset": None, "sigma_tildes": None, "s0": 0.0, "gamma_tildes": None,
                "gamma_min": 0.01, "gamma_max": 100.0, "gamma_points": 201,
                "p_points": 199, "delta": EDGE_DELTA},
}


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}") from None


def _add_globals(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d, help="master seed for random draws (default 0)")
    g.add_argument("--threads", type=_positive_int, default=d,
                   help="worker processes for ensemble sweeps (default 1)")
    g.add_argument("--out-dir", default=d, help="directory for output files (default .)")
    g.add_argument("--config", default=d, help="JSON or TOML file with option values")
    g.add_argument("--dry-run", action="store_true", default=d,
                   help="print the resolved configuration and exit")


def _add_network(p, presets):
    g = p.add_argument_group("network")
    g.add_argument("--preset", choices=presets, help="named parameter set")
    g.add_argument("--n", type=int, help="number of sites N (even)")
    g.add_argument("--xi", type=float, help="bulk coupling scale")
    g.add_argument("--chi", type=float, help="input/output to bulk coupling scale")
    g.add_argument("--eprime", type=float, help="on-site energy of input/output sites")
    g.add_argument("--v", type=float, help="direct input-output coupling")
    g.add_argument("--sample-eprime", action="store_true", default=None,
                   help="draw the on-site energy instead of using --eprime")
    g.add_argument("--construction", choices=["project", "mirror"],
                   help="how a random bulk is made centrosymmetric")
    g.add_argument("--hamiltonian", help="JSON file with a serialized Hamiltonian")


def _add_scan(p):
    g = p.add_argument_group("channels and energy grid")
    g.add_argument("--gamma", type=float, help="channel width (required unless set by a preset)")
    g.add_argument("--gamma-out", type=float, help="output channel width (default: --gamma)")
    g.add_argument("--emin", type=float, help="lowest energy")
    g.add_argument("--emax", type=float, help="highest energy")
    g.add_argument("--points", type=_positive_int, help="number of grid points")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="netscatter", allow_abbrev=False,
        description="Transfer across disordered centrosymmetric networks: exact scattering, "
                    "doublet theory and ensemble statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    net_presets = [k for k, v in ps.PRESETS.items() if isinstance(v, ps.NetworkPreset)
                   and not isinstance(v, ps.SweepPreset)]
    for name, helptext in (("spectrum", "transfer probability over an energy grid"),
                           ("dwell", "dwell time over an energy grid")):
        p = sub.add_parser(name, help=helptext, description=helptext, allow_abbrev=False)
        _add_globals(p, suppress=True)
        _add_network(p, net_presets)
        _add_scan(p)

    p = sub.add_parser("doublet", allow_abbrev=False,
                       help="dominant-doublet analysis of one network",
                       description="Dominant-doublet analysis of one network, as JSON on stdout.")
    _add_globals(p, suppress=True)
    _add_network(p, net_presets)
    _add_scan(p)
    p.add_argument("--epsilon-budget", type=float, help="warn above this overlap deficit")

    sweep_presets = [k for k, v in ps.PRESETS.items() if isinstance(v, ps.SweepPreset)]
    p = sub.add_parser("ensemble", allow_abbrev=False,
                       help="Monte-Carlo sweep over random networks",
                       description="Monte-Carlo sweep over random networks and channel widths.")
    _add_globals(p, suppress=True)
    g = p.add_argument_group("network")
    g.add_argument("--preset", choices=sweep_presets, help="named sweep parameters")
    g.add_argument("--n", type=int, help="number of sites N (even)")
    g.add_argument("--xi", type=float, help="bulk coupling scale")
    g.add_argument("--chi", type=float,
                   help="link scale (default: largest value allowed by --epsilon-budget)")
    g.add_argument("--v", type=float, help="direct coupling (default: from --sigma-tilde)")
    g.add_argument("--sigma-tilde", type=float, help="target Cauchy width, fixes V")
    g.add_argument("--eprime", type=float, help="on-site energy when pinned")
    g.add_argument("--pin-eprime", action="store_true", default=None,
                   help="use --eprime instead of drawing the on-site energy")
    g.add_argument("--construction", choices=["project", "mirror"],
                   help="how a random bulk is made centrosymmetric")
    g = p.add_argument_group("sweep")
    g.add_argument("--gamma-start", type=float, help="first channel width of the geometric grid")
    g.add_argument("--gamma-factor", type=float, help="grid ratio (default 1.2)")
    g.add_argument("--gamma-count", type=_positive_int, help="number of grid widths")
    g.add_argument("--gamma-tildes", type=_float_list,
                   help="explicit scaled widths, comma separated (overrides the grid)")
    g.add_argument("--realizations", type=_positive_int, help="random networks (default 10000)")
    g.add_argument("--bins", type=_positive_int, help="histogram bins (default 50)")
    g.add_argument("--delta", type=float, help="histogram edge cut-off")
    g.add_argument("--epsilon-budget", type=float, help="doublet overlap budget (default 0.05)")
    g.add_argument("--shift-method", choices=["exact", "perturbative"],
                   help="how s+ is obtained (default exact)")
    g.add_argument("--energy-mode", choices=["doublet", "detuned"],
                   help="evaluation energy (default doublet)")
    g.add_argument("--reject-eps", action="store_true", default=None,
                   help="drop realizations above the overlap budget")
    g.add_argument("--timestamp", action="store_true", default=None,
                   help="record the start time in the manifest (breaks byte-reproducibility)")

    p = sub.add_parser("density", allow_abbrev=False,
                       help="tabulate analytic efficiency statistics",
                       description="Tabulate the efficient fraction and the efficiency density.")
    _add_globals(p, suppress=True)
    p.add_argument("--preset", choices=["fig4", "fig5", "fig7"], help="named set of widths")
    p.add_argument("--sigma-tildes", type=_float_list, help="Cauchy widths, comma separated")
    p.add_argument("--s0", type=float, help="Cauchy location (default 0)")
    p.add_argument("--gamma-tildes", type=_float_list, help="explicit scaled widths")
    p.add_argument("--gamma-min", type=float, help="lowest scaled width of the log grid")
    p.add_argument("--gamma-max", type=float, help="highest scaled width of the log grid")
    p.add_argument("--gamma-points", type=_positive_int, help="log grid size")
    p.add_argument("--p-points", type=_positive_int, help="efficiency grid size")
    p.add_argument("--delta", type=float, help="edge cut-off of the efficiency grid")
    return parser


def load_config(path):
    """Read a flat or per-command JSON/TOML option file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        data = tomllib.loads(raw.decode())
    else:
        data = json.loads(raw.decode())
    if not isinstance(data, dict):
        raise UsageError("config file must hold a table/object")
    return data


def _preset_values(command, name):
    if name is None:
        return {}
    pr = ps.get(name)
    if isinstance(pr, ps.SweepPreset):
        return {"n": pr.n_sites, "xi": pr.bulk_scale, "sigma_tilde": pr.sigma_tilde,
                "epsilon_budget": pr.epsilon_budget, "gamma_tildes": list(pr.gamma_tildes)}
    if isinstance(pr, ps.NetworkPreset):
        out = {"n": pr.n_sites, "xi": pr.bulk_scale, "chi": pr.link_scale,
               "v": pr.direct_coupling, "eprime": pr.onsite_energy, "gamma": pr.gamma}
        if pr.e_range is not None and command != "doublet":
            out.update(emin=pr.e_range[0], emax=pr.e_range[1])
        return out
    out = {"sigma_tildes": list(pr.sigma_tildes)}
    if pr.gamma_tildes is not None:
        out["gamma_tildes"] = list(pr.gamma_tildes)
    return out


def resolve(args):
    """Merge flags, config file, preset and defaults into one flat dict."""
    command = args.command
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "verbose"}
    config = {}
    if flags.get("config"):
        try:
            data = load_config(flags["config"])
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {flags['config']}: {exc}") from exc
        config = {k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)}
        config.update({k.replace("-", "_"): v
                       for k, v in data.get(command, {}).items()} if isinstance(
                           data.get(command), dict) else {})
    known = set(GLOBAL_DEFAULTS) | set(DEFAULTS[command]) | {"command"}
    unknown = sorted(set(config) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    preset = flags.get("preset", config.get("preset"))
    from_preset = _preset_values(command, preset)
    explicit = {**config, **flags}
    # an explicit geometric grid replaces the preset's scaled widths
    if ({"gamma_start", "gamma_count"} & set(explicit)) and "gamma_tildes" not in explicit:
        from_preset.pop("gamma_tildes", None)
    merged = {**GLOBAL_DEFAULTS, **DEFAULTS[command], **from_preset, **explicit}
    merged["command"] = command
    return merged


# -- network helpers ---------------------------------------------------------

def _network(cfg):
    if cfg.get("hamiltonian"):
        try:
            with open(cfg["hamiltonian"]) as fh:
                return NetworkHamiltonian.from_json(fh.read())
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read Hamiltonian: {exc}") from exc
    params = NetworkParams(
        n_sites=int(cfg["n"]), onsite_energy=float(cfg["eprime"]),
        direct_coupling=float(cfg["v"]), bulk_scale=float(cfg["xi"]),
        link_scale=float(cfg["chi"]), sample_onsite=bool(cfg["sample_eprime"]),
        construction=cfg["construction"])
    return sample_random(params, int(cfg["seed"]))


def _coupling(cfg):
    if cfg.get("gamma") is None:
        raise UsageError("--gamma is required")
    gamma_out = cfg.get("gamma_out")
    return ChannelCoupling(float(cfg["gamma"]), None if gamma_out is None else float(gamma_out))


def _default_window(h, c):
    spread = float(np.max(np.abs(np.linalg.eigvalsh(h.matrix)))) if h.n_sites else 1.0
    half = spread + 2.0 * max(c.gamma_in, c.gamma_out)
    return -half, half


def _grid(cfg, h, c):
    lo, hi = _default_window(h, c)
    emin = lo if cfg.get("emin") is None else float(cfg["emin"])
    emax = hi if cfg.get("emax") is None else float(cfg["emax"])
    return energy_grid(emin, emax, int(cfg["points"]))


def _prepare_out(cfg):
    out = cfg["out_dir"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=_json_default)
    sys.stdout.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


# -- subcommands -------------------------------------------------------------

def cmd_spectrum(cfg, kind="spectrum"):
    h = _network(cfg)
    c = _coupling(cfg)
    energies = _grid(cfg, h, c)
    if cfg["dry_run"]:
        return EXIT_OK
    out = _prepare_out(cfg)
    resp = scan(h, c, energies)
    csv_path = os.path.join(out, f"{kind}.csv")
    json_path = os.path.join(out, f"{kind}.json")
    resp.write_csv(csv_path)
    resp.write_json(json_path, gamma_in=c.gamma_in, gamma_out=c.gamma_out,
                    hamiltonian=h.to_dict())
    summary = {"files": [csv_path, json_path], "points": len(energies),
               "p_max": float(np.max(resp.p)), "n_missing_tau": int(np.isnan(resp.tau).sum())}
    if kind == "dwell":
        finite = resp.tau[np.isfinite(resp.tau)]
        summary["tau_min"] = float(finite.min()) if finite.size else None
        summary["tau_max"] = float(finite.max()) if finite.size else None
    _emit(summary)
    return EXIT_OK


def cmd_dwell(cfg):
    return cmd_spectrum(cfg, kind="dwell")


def cmd_doublet(cfg):
    h = _network(cfg)
    c = _coupling(cfg)
    gamma = c.gamma_in
    if cfg["dry_run"]:
        return EXIT_OK
    report = {"warnings": [], "network": h.to_dict()}
    eps = db.doublet_quality(h)
    report["epsilon"] = eps
    report["epsilon_partners"] = list(db.sector_deficits(h))
    if eps > cfg["epsilon_budget"]:
        report["warnings"].append({"type": "EpsilonViolation", "epsilon": eps,
                                   "budget": cfg["epsilon_budget"]})
    p = h.params
    if p.bulk_scale > 0 and p.n_sites >= 4:
        bound = float(doublet_bound_value(p.link_scale, p.bulk_scale, p.n_sites))
        report["doublet_bound_value"] = bound
        if bound > cfg["epsilon_budget"] * (1 + 1e-9):
            report["warnings"].append({"type": "DoubletBoundViolation", "value": bound,
                                       "budget": cfg["epsilon_budget"]})
    try:
        analysis = db.analyze(h, gamma=gamma)
    except NearDegenerate as exc:
        report["warnings"].append({"type": "NearDegenerate", "message": str(exc)})
        _emit(report)
        return EXIT_OK
    report.update(analysis.to_dict())
    e_prime, v = h.onsite_energy, h.direct_coupling
    predicted = []
    for e in analysis.resonance_energies:
        entry = {"energy": float(e),
                 "p": float(db.approx_transfer_probability(analysis, e_prime, v, gamma, e))}
        try:
            entry["tau"] = db.approx_dwell_time(analysis, e_prime, v, gamma, e)
        except NetscatterError:
            entry["tau"] = None
        predicted.append(entry)
    report["predicted"] = predicted

    d = abs(analysis.splitting)
    centre = e_prime + analysis.s_bar
    emin = centre - d / 2 - 2 * gamma if cfg.get("emin") is None else float(cfg["emin"])
    emax = centre + d / 2 + 2 * gamma if cfg.get("emax") is None else float(cfg["emax"])
    energies = energy_grid(emin, emax, int(cfg["points"]))
    peaks = find_peaks(h, c, energies, min_width=gamma / 10.0)
    exact = []
    for pk in sorted(peaks, key=lambda q: -q.height)[:len(predicted)]:
        try:
            tau = dwell_time(h, c, pk.energy)
        except NetscatterError:
            tau = None
        exact.append({"energy": pk.energy, "p": pk.height, "tau": tau})
    report["exact_peaks"] = sorted(exact, key=lambda q: q["energy"])
    _emit(report)
    return EXIT_OK


def _sweep_config(cfg):
    n = int(cfg["n"])
    xi = cfg.get("xi")
    if xi is None:
        raise UsageError("--xi (or a preset) is required")
    xi = float(xi)
    chi = cfg.get("chi")
    chi = chi_at_bound(xi, n, float(cfg["epsilon_budget"])) if chi is None else float(chi)
    v = cfg.get("v")
    if v is None:
        if cfg.get("sigma_tilde") is None:
            raise UsageError("give --v or --sigma-tilde (or a preset)")
        v = coupling_for_sigma(chi, xi, float(cfg["sigma_tilde"]))
    net = NetworkParams(n_sites=n, onsite_energy=float(cfg["eprime"]), direct_coupling=float(v),
                        bulk_scale=xi, link_scale=chi, sample_onsite=not cfg["pin_eprime"],
                        construction=cfg["construction"])
    gamma_tildes = cfg.get("gamma_tildes")
    kw = {}
    if gamma_tildes is None:
        kw.update(gamma_start=float(cfg["gamma_start"] if cfg.get("gamma_start") is not None
                                    else 0.01 * 2 * float(v)),
                  gamma_count=int(cfg["gamma_count"] or 1))
    return SweepConfig(
        network=net, gamma_factor=float(cfg["gamma_factor"]),
        gamma_tildes=None if gamma_tildes is None else tuple(gamma_tildes),
        n_realizations=int(cfg["realizations"]), epsilon_budget=float(cfg["epsilon_budget"]),
        master_seed=int(cfg["seed"]), n_bins=int(cfg["bins"]), delta=float(cfg["delta"]),
        shift_method=cfg["shift_method"], energy_mode=cfg["energy_mode"],
        reject_eps_violations=bool(cfg["reject_eps"]), **kw)


def cmd_ensemble(cfg):
    config = _sweep_config(cfg)
    if cfg["dry_run"]:
        return EXIT_OK
    out = _prepare_out(cfg)
    started = now_iso() if cfg["timestamp"] else None
    result = run_sweep(config, threads=int(cfg["threads"]))
    manifest = write_artifacts(result, out, started_at=started)
    summary = {"out_dir": out, "manifest": os.path.join(out, "manifest.json"),
               "theory": manifest["theory"], "rows": summary_rows(result)}
    if result.scaled is not None:
        summary["comparison"] = compare_to_theory(result)
    _emit(summary)
    return EXIT_OK


def cmd_density(cfg):
    sigmas = cfg.get("sigma_tildes")
    if not sigmas:
        raise UsageError("--sigma-tildes (or a preset) is required")
    if min(sigmas) <= 0:
        raise UsageError("sigma_tilde values must be positive")
    delta = float(cfg["delta"])
    if not 0 < delta < 0.5:
        raise UsageError("--delta must lie in (0, 0.5)")
    if cfg.get("gamma_tildes"):
        gts = np.array(cfg["gamma_tildes"], dtype=float)
    else:
        lo, hi = float(cfg["gamma_min"]), float(cfg["gamma_max"])
        if not 0 < lo < hi:
            raise UsageError("need 0 < --gamma-min < --gamma-max")
        gts = np.geomspace(lo, hi, int(cfg["gamma_points"]))
    if np.any(gts <= 0):
        raise UsageError("scaled widths must be positive")
    if cfg["dry_run"]:
        return EXIT_OK
    out = _prepare_out(cfg)
    s0 = float(cfg["s0"])
    cols = {"gamma_tilde": gts}
    for s in sigmas:
        cols[f"sigma_{s:g}"] = efficient_fraction(gts, s, s0)
    frac_path = os.path.join(out, "efficient_fraction.csv")
    write_curve_csv(frac_path, cols)

    pgrid = np.linspace(delta, 1.0 - delta, int(cfg["p_points"]))
    rows = {"sigma_tilde": [], "gamma_tilde": [], "p": [], "density": []}
    for s in sigmas:
        for g in gts:
            rows["sigma_tilde"].append(np.full(len(pgrid), s))
            rows["gamma_tilde"].append(np.full(len(pgrid), g))
            rows["p"].append(pgrid)
            rows["density"].append(efficiency_density(pgrid, g, s, s0, delta=delta))
    dens_path = os.path.join(out, "density.csv")
    write_curve_csv(dens_path, {k: np.concatenate(v) for k, v in rows.items()})
    _emit({"files": [frac_path, dens_path], "sigma_tildes": list(sigmas), "s0_tilde": s0,
           "gamma_points": len(gts), "p_points": len(pgrid)})
    return EXIT_OK


COMMANDS = {"spectrum": cmd_spectrum, "dwell": cmd_dwell, "doublet": cmd_doublet,
            "ensemble": cmd_ensemble, "density": cmd_density}


def _dry_run_view(cfg):
    view = dict(cfg)
    if cfg["command"] == "ensemble":
        view["sweep"] = _sweep_config(cfg).to_dict()
    if cfg.get("preset"):
        view["preset_values"] = ps.describe(ps.get(cfg["preset"]))
    return view


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args)
        if cfg["dry_run"]:
            COMMANDS[cfg["command"]](cfg)  # validates without computing
            _emit(_dry_run_view(cfg))
            return EXIT_OK
        return COMMANDS[cfg["command"]](cfg)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"netscatter {args.command}: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except NetscatterError as exc:
        print(f"netscatter {args.command}: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"netscatter {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
