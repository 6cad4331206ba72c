"""Command line client for the ketlab service.

The CLI is a thin client: it builds the same pydantic requests the HTTP
endpoints accept, dispatches them to the in-process service layer (or to a
remote server via ``--server``), and writes the responses as CSV tables and
JSON summaries plus a run manifest.

Configuration is a flat key/value file with dotted section prefixes
(``lattice.n1 = 11``); every key is also settable by a command line flag, and
the command line wins.  Each run echoes its fully resolved configuration so
it can be replayed exactly.

Exit codes: 0 success with all built-in checks passing, 1 check failure,
2 configuration or usage error.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .ensemble import EnsembleError, EvolutionInstabilityError
from .integrators import IntegrationError
from .lattice import LatticeError, make_lattice
from .matching import MatchingError
from .output import (
    format_number,
    write_config_echo,
    write_csv,
    write_json,
    write_manifest,
)
from .series_sums import SeriesError
from .service import handlers
from .service import schemas as sc

_DOMAIN_ERRORS = (LatticeError, SeriesError, MatchingError, EnsembleError,
                  IntegrationError, ValueError)

_UNSET = object()


class ConfigError(Exception):
    pass


def _parse_bool(text):
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_list(text):
    if isinstance(text, list):
        return [int(v) for v in text]
    return [int(part) for part in str(text).split(",") if part.strip()]


def _parse_float_list(text):
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(part) for part in str(text).split(",") if part.strip()]


_PARSERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
    "int_list": _parse_int_list,
    "float_list": _parse_float_list,
}


@dataclass(frozen=True)
class Option:
    flag: str
    key: str
    kind: str
    default: object
    help: str


_LATTICE = [
    Option("--d", "lattice.d", "int", 1, "lattice dimension"),
    Option("--n1", "lattice.n1", "int", None, "odd site count per axis"),
    Option("--a1", "lattice.a1", "float", 1.0, "lattice spacing"),
    Option("--l-cut", "lattice.l_cut", "float", None, "kernel cutoff half-length"),
]
_CONSTANTS = [
    Option("--hbar", "constants.hbar", "float", 1.0, "reduced Planck constant"),
    Option("--m-eff", "constants.m_eff", "float", 1.0, "effective mass"),
]
_TIME = [
    Option("--dt", "time.dt", "float", 1e-3, "time step"),
    Option("--steps", "time.steps", "int", 100, "number of steps"),
    Option("--stride", "time.sample_stride", "int", 1, "recording stride"),
]
_TARGETS = [
    Option("--e0", "targets.e0", "float", 0.0, "energy zero-point"),
    Option("--a", "targets.a_hop", "float", 0.0, "hopping constant"),
    Option("--alpha", "targets.alpha", "float", 0.0, "diffusion coefficient"),
    Option("--mu", "targets.mu", "float", 0.0, "growth coefficient"),
    Option("--kappa0", "targets.kappa0", "float", 0.0, "nonlinear coefficient"),
    Option("--kappa2", "targets.kappa2", "float", 0.0, "Laplacian coefficient"),
    Option("--v-kind", "potential.kind", "str", "constant", "potential shape"),
    Option("--v-value", "potential.value", "float", 0.0, "potential constant"),
    Option("--v-coeff", "potential.coeff", "float", 0.0, "quadratic coefficient"),
]
_INITIAL = [
    Option("--init-kind", "initial.kind", "str", "plane_wave", "initial state kind"),
    Option("--k-index", "initial.k_index", "int_list", [0], "per-axis mode index"),
    Option("--sigma", "initial.sigma", "float", None, "gaussian width"),
    Option("--center", "initial.center", "float_list", None, "gaussian center"),
    Option("--amp-re", "initial.amplitude_re", "float", 1.0, "amplitude (real)"),
    Option("--amp-im", "initial.amplitude_im", "float", 0.0, "amplitude (imag)"),
]
_NOISE = [
    Option("--noise-kind", "noise.kind", "str", "additive_iid",
           "none | additive_iid | state_correlated"),
    Option("--noise-sigma", "noise.sigma", "float", 0.0, "noise amplitude"),
    Option("--hermitian", "noise.hermitian", "bool", True,
           "project the noise direction onto its Hermitian part"),
]
_ENSEMBLE = [
    Option("--r", "ensemble.realizations", "int", 100, "realization count"),
    Option("--seed", "ensemble.master_seed", "int", 0, "master seed"),
    Option("--chunk-size", "ensemble.chunk_size", "int", 256, "realization chunk size"),
    Option("--workers", "ensemble.workers", "int", 1, "worker threads"),
]

_SUBCOMMAND_OPTIONS = {
    "sums": [
        Option("--n1", "sums.n1", "int_list", [5], "site counts (comma separated)"),
    ],
    "moments": [
        Option("--l", "moments.l_values", "float_list", [0.1, 1.0, 3.0],
               "interval half-lengths"),
        Option("--n-max", "moments.n_max", "int", 10, "largest moment order"),
        Option("--d", "moments.d", "int", 1, "box dimension"),
    ],
    "match": [
        Option("--target", "match.target", "str", "discrete",
               "discrete | continuum_1d | ddim | heat | nls | generic"),
        Option("--b", "match.b", "float", None, "reference lattice spacing"),
        Option("--mode", "match.mode", "str", "cutoff", "cutoff | full_length"),
        Option("--l-full", "match.l_full", "float", None,
               "half-length for full_length mode"),
        Option("--f0-re", "match.f0_re", "float", 0.0, "generic F0 (real)"),
        Option("--f0-im", "match.f0_im", "float", 0.0, "generic F0 (imag)"),
        Option("--f2-re", "match.f2_re", "float", 0.0, "generic F2 (real)"),
        Option("--f2-im", "match.f2_im", "float", 0.0, "generic F2 (imag)"),
    ] + _TARGETS + _LATTICE + _CONSTANTS + _INITIAL,
    "evolve": [
        Option("--kind", "evolve.kind", "str", "discrete_sl",
               "discrete_sl | continuum_sl | heat | nls"),
        Option("--scheme", "evolve.scheme", "str", "euler",
               "euler | norm_preserving"),
        Option("--trajectory", "output.trajectory", "bool", True,
               "write the sampled trajectory CSV"),
    ] + _LATTICE + _CONSTANTS + _TIME + _TARGETS + _INITIAL,
    "dispersion": [
        Option("--e0", "targets.e0", "float", 0.0, "energy zero-point"),
        Option("--a", "targets.a_hop", "float", 1.0, "hopping constant"),
        Option("--a1", "lattice.a1", "float", 1.0, "lattice spacing"),
        Option("--n1", "lattice.n1", "int", 101, "odd site count"),
        Option("--k-index", "dispersion.k_index", "int", 1, "plane-wave mode index"),
        Option("--dt", "time.dt", "float", 1e-4, "time step"),
        Option("--t-total", "time.total", "float", 2.0, "total evolution time"),
        Option("--scheme", "evolve.scheme", "str", "norm_preserving",
               "euler | norm_preserving"),
    ] + _CONSTANTS,
    "remainder-study": [
        Option("--l", "remainder.l_values", "float_list", None,
               "explicit cutoff list (overrides the log range)"),
        Option("--l-min", "remainder.l_min", "float", 1e-4, "smallest cutoff"),
        Option("--l-max", "remainder.l_max", "float", 1.0, "largest cutoff"),
        Option("--count", "remainder.count", "int", 13, "cutoff sample count"),
        Option("--n-max", "remainder.n_max", "int", 8, "largest tail order"),
        Option("--d", "remainder.d", "int", 1, "dimension"),
    ] + _CONSTANTS,
    "compare": _LATTICE + _CONSTANTS + _TIME
        + [o for o in _TARGETS if o.key in ("targets.e0", "targets.a_hop")]
        + _NOISE + _ENSEMBLE + _INITIAL,
    "ensemble": [
        Option("--trajectory", "output.trajectory", "bool", True,
               "write the mean trajectory CSV"),
    ] + _LATTICE + _CONSTANTS + _TIME
        + [o for o in _TARGETS if o.key in ("targets.e0", "targets.a_hop")]
        + _NOISE + _ENSEMBLE + _INITIAL,
}


def build_parser():
    import argparse

    parser = argparse.ArgumentParser(
        prog="ketlab",
        description="Stochastic-to-deterministic lattice evolution laboratory.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, options in _SUBCOMMAND_OPTIONS.items():
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", default=None, help="flat key=value config file")
        sub.add_argument("--out", default=None, help="output directory")
        sub.add_argument("--server", default=None,
                         help="base URL of a remote ketlab service")
        seen = set()
        for opt in options:
            if opt.flag in seen:
                continue
            seen.add(opt.flag)
            sub.add_argument(opt.flag, dest=opt.key, default=_UNSET,
                             type=_PARSERS[opt.kind], help=opt.help, metavar="V")
    serve = subparsers.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_config_file(path: str, valid: dict) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in valid:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[valid[key].kind](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def resolve_config(command: str, args) -> dict:
    options = {opt.key: opt for opt in _SUBCOMMAND_OPTIONS[command]}
    resolved = {key: opt.default for key, opt in options.items()}
    if args.config:
        resolved.update(_load_config_file(args.config, options))
    for key in options:
        value = getattr(args, key, _UNSET)
        if value is not _UNSET:
            resolved[key] = value
    return resolved


def _config_echo_values(resolved: dict) -> dict:
    echo = {}
    for key, value in resolved.items():
        if value is None:
            continue
        if isinstance(value, list):
            echo[key] = ",".join(format_number(v) for v in value)
        else:
            echo[key] = value
    return echo


# ---------------------------------------------------------------------------
# request builders
# ---------------------------------------------------------------------------

def _lattice_params(cfg) -> sc.LatticeParams:
    if cfg.get("lattice.n1") is None:
        raise ConfigError("lattice.n1 is required")
    return sc.LatticeParams(d=cfg["lattice.d"], n1=cfg["lattice.n1"],
                            a1=cfg["lattice.a1"], l_cut=cfg["lattice.l_cut"])


def _constants_params(cfg) -> sc.ConstantsParams:
    return sc.ConstantsParams(hbar=cfg["constants.hbar"], m_eff=cfg["constants.m_eff"])


def _time_params(cfg) -> sc.TimeParams:
    return sc.TimeParams(dt=cfg["time.dt"], steps=cfg["time.steps"],
                         sample_stride=cfg["time.sample_stride"])


def _initial_params(cfg) -> sc.InitialStateParams:
    return sc.InitialStateParams(kind=cfg["initial.kind"],
                                 k_index=cfg["initial.k_index"],
                                 sigma=cfg["initial.sigma"],
                                 center=cfg["initial.center"],
                                 amplitude_re=cfg["initial.amplitude_re"],
                                 amplitude_im=cfg["initial.amplitude_im"])


def _target_params(cfg) -> sc.TargetParams:
    return sc.TargetParams(
        e0=cfg.get("targets.e0", 0.0), a_hop=cfg.get("targets.a_hop", 0.0),
        alpha=cfg.get("targets.alpha", 0.0), mu=cfg.get("targets.mu", 0.0),
        kappa0=cfg.get("targets.kappa0", 0.0), kappa2=cfg.get("targets.kappa2", 0.0),
        potential=sc.PotentialSpec(kind=cfg.get("potential.kind", "constant"),
                                   value=cfg.get("potential.value", 0.0),
                                   coeff=cfg.get("potential.coeff", 0.0)))


def _noise_params(cfg) -> sc.NoiseParams:
    return sc.NoiseParams(kind=cfg["noise.kind"], sigma=cfg["noise.sigma"],
                          hermitian=cfg["noise.hermitian"])


def _ensemble_params(cfg) -> sc.EnsembleRunParams:
    return sc.EnsembleRunParams(realizations=cfg["ensemble.realizations"],
                                master_seed=cfg["ensemble.master_seed"],
                                chunk_size=cfg["ensemble.chunk_size"],
                                workers=cfg["ensemble.workers"])


def build_sums(cfg):
    return sc.SumsRequest(n1_values=cfg["sums.n1"])


def build_moments(cfg):
    return sc.MomentsRequest(l_values=cfg["moments.l_values"],
                             n_max=cfg["moments.n_max"], d=cfg["moments.d"])


def build_match(cfg):
    lattice = None
    if cfg.get("lattice.n1") is not None:
        lattice = _lattice_params(cfg)
    return sc.MatchRequest(
        target=cfg["match.target"], constants=_constants_params(cfg),
        e0=cfg["targets.e0"], a_hop=cfg["targets.a_hop"], a1=cfg["lattice.a1"],
        n1=cfg["lattice.n1"], b=cfg["match.b"], mode=cfg["match.mode"],
        l_full=cfg["match.l_full"], d=cfg["lattice.d"],
        l_cut=cfg["lattice.l_cut"],
        m_eff=cfg["constants.m_eff"],
        potential=sc.PotentialSpec(kind=cfg["potential.kind"],
                                   value=cfg["potential.value"],
                                   coeff=cfg["potential.coeff"]),
        lattice=lattice,
        alpha=cfg["targets.alpha"], mu=cfg["targets.mu"],
        kappa0=cfg["targets.kappa0"], kappa2=cfg["targets.kappa2"],
        initial=_initial_params(cfg),
        f0_re=cfg["match.f0_re"], f0_im=cfg["match.f0_im"],
        f2_re=cfg["match.f2_re"], f2_im=cfg["match.f2_im"])


def build_evolve(cfg):
    return sc.EvolveRequest(kind=cfg["evolve.kind"], lattice=_lattice_params(cfg),
                            constants=_constants_params(cfg), time=_time_params(cfg),
                            scheme=cfg["evolve.scheme"], initial=_initial_params(cfg),
                            targets=_target_params(cfg),
                            include_trajectory=cfg["output.trajectory"])


def build_dispersion(cfg):
    if cfg.get("lattice.n1") is None:
        raise ConfigError("lattice.n1 is required")
    return sc.DispersionRequest(e0=cfg["targets.e0"], a_hop=cfg["targets.a_hop"],
                                a1=cfg["lattice.a1"], n1=cfg["lattice.n1"],
                                k_index=cfg["dispersion.k_index"],
                                dt=cfg["time.dt"], total_time=cfg["time.total"],
                                scheme=cfg["evolve.scheme"],
                                constants=_constants_params(cfg))


def build_remainder(cfg):
    return sc.RemainderStudyRequest(l_values=cfg["remainder.l_values"],
                                    l_min=cfg["remainder.l_min"],
                                    l_max=cfg["remainder.l_max"],
                                    count=cfg["remainder.count"],
                                    n_max=cfg["remainder.n_max"],
                                    d=cfg["remainder.d"],
                                    constants=_constants_params(cfg))


def build_compare(cfg):
    return sc.CompareRequest(lattice=_lattice_params(cfg),
                             constants=_constants_params(cfg),
                             time=_time_params(cfg), targets=_target_params(cfg),
                             noise=_noise_params(cfg), ensemble=_ensemble_params(cfg),
                             initial=_initial_params(cfg))


def build_ensemble(cfg):
    return sc.EnsembleRequest(lattice=_lattice_params(cfg),
                              constants=_constants_params(cfg),
                              time=_time_params(cfg), targets=_target_params(cfg),
                              noise=_noise_params(cfg), ensemble=_ensemble_params(cfg),
                              initial=_initial_params(cfg),
                              include_trajectory=cfg["output.trajectory"])


# ---------------------------------------------------------------------------
# dispatch (in-process service layer, or remote server)
# ---------------------------------------------------------------------------

_ROUTES = {
    "sums": (build_sums, handlers.handle_sums, "/v1/sums", sc.SumsResponse),
    "moments": (build_moments, handlers.handle_moments, "/v1/moments", sc.MomentsResponse),
    "match": (build_match, handlers.handle_match, "/v1/match", sc.MatchResponse),
    "evolve": (build_evolve, handlers.handle_evolve, "/v1/evolve", sc.EvolveResponse),
    "dispersion": (build_dispersion, handlers.handle_dispersion, "/v1/dispersion",
                   sc.DispersionResponse),
    "remainder-study": (build_remainder, handlers.handle_remainder_study,
                        "/v1/remainder-study", sc.RemainderStudyResponse),
    "compare": (build_compare, handlers.handle_compare, "/v1/compare",
                sc.CompareResponse),
    "ensemble": (build_ensemble, handlers.handle_ensemble, "/v1/ensemble",
                 sc.EnsembleResponse),
}


def dispatch(command: str, request, server: str | None):
    _, handler, path, response_model = _ROUTES[command]
    if server is None:
        return handler(request)
    import httpx

    reply = httpx.post(server.rstrip("/") + path,
                       json=request.model_dump(mode="json"), timeout=600.0)
    if reply.status_code >= 400:
        detail = reply.json().get("detail", reply.text)
        raise _DOMAIN_ERRORS[0](f"server error {reply.status_code}: {detail}")
    return response_model.model_validate(reply.json())


# ---------------------------------------------------------------------------
# output writers (per subcommand)
# ---------------------------------------------------------------------------

def _write_sums(resp, cfg, outdir):
    rows = [[r.n1, r.s0, r.s1, r.s2, r.s0_brute, r.s1_brute, r.s2_brute,
             r.max_abs_diff] for r in resp.rows]
    files = [write_csv(outdir / "sums.csv",
                       ["n1", "s0", "s1", "s2", "s0_brute", "s1_brute",
                        "s2_brute", "max_abs_diff"], rows)]
    files.append(write_json(outdir / "summary.json",
                            {"rows": [r.model_dump() for r in resp.rows]}))
    checks = {"sum_identities_exact": all(r.max_abs_diff == 0 for r in resp.rows)}
    return files, checks


def _write_moments(resp, cfg, outdir):
    rows = [[r.kind, r.d, r.l, "" if r.n is None else r.n,
             "" if r.axis_a is None else r.axis_a,
             "" if r.axis_b is None else r.axis_b,
             r.closed_form, r.oracle, r.abs_diff] for r in resp.rows]
    files = [write_csv(outdir / "moments.csv",
                       ["kind", "d", "l", "n", "axis_a", "axis_b",
                        "closed_form", "oracle", "abs_diff"], rows)]
    agreement = all(r.abs_diff <= 1e-12 * max(1.0, abs(r.closed_form))
                    for r in resp.rows)
    files.append(write_json(outdir / "summary.json",
                            {"rows": len(resp.rows),
                             "oracle_agreement": agreement}))
    return files, {"oracle_agreement": agreement}


def _write_match(resp, cfg, outdir):
    files = [write_json(outdir / "match.json", resp.model_dump())]
    checks = {"residuals_within_1e-12": resp.max_residual <= 1e-12}
    return files, checks


def _trajectory_rows(samples, lattice):
    coords = lattice.coordinate_grid().reshape(lattice.d, -1)
    rows = []
    for sample in samples:
        for site in range(lattice.site_count):
            rows.append([sample.time, site,
                         *[coords[ax, site] for ax in range(lattice.d)],
                         sample.re[site], sample.im[site]])
    return rows


def _write_evolve(resp, cfg, outdir):
    files = []
    if resp.trajectory is not None:
        lattice = make_lattice(cfg["lattice.d"], cfg["lattice.n1"],
                               cfg["lattice.a1"], cfg["lattice.l_cut"])
        header = ["time", "site", *[f"x{ax}" for ax in range(lattice.d)],
                  "re_psi", "im_psi"]
        files.append(write_csv(outdir / "trajectory.csv", header,
                               _trajectory_rows(resp.trajectory, lattice)))
    files.append(write_json(outdir / "summary.json",
                            {"times": resp.times, "norm_drift": resp.norm_drift,
                             "warnings": resp.warnings}))
    return files, {"completed": True}


def _write_dispersion(resp, cfg, outdir):
    files = [write_json(outdir / "dispersion.json", resp.model_dump())]
    return files, {"completed": True}


def _write_remainder(resp, cfg, outdir):
    rows = [[r.l_cut, r.n, r.paper_value, r.exact_value, r.ratio]
            for r in resp.rows]
    files = [write_csv(outdir / "remainder.csv",
                       ["l_cut", "n", "paper_value", "exact_value", "ratio"], rows)]
    files.append(write_json(outdir / "summary.json",
                            {"fitted_slopes": resp.fitted_slopes,
                             "decay_monotonic": resp.decay_monotonic,
                             "c_constant": resp.c_constant, "c_n": resp.c_n}))
    checks = {
        "odd_orders_exact_zero": all(r.exact_value == 0.0 for r in resp.rows
                                     if r.n % 2 == 1),
        "slopes_match_order_minus_2": all(
            abs(slope - (int(n) - 2)) <= 1e-6
            for n, slope in resp.fitted_slopes.items()),
        "decay_monotonic": resp.decay_monotonic,
    }
    return files, checks


def _write_compare(resp, cfg, outdir):
    rows = [[t, p, m] for t, p, m in zip(resp.times, resp.p99_per_time,
                                         resp.max_gap_per_time)]
    files = [write_csv(outdir / "compare.csv", ["time", "p99_gap", "max_gap"], rows)]
    files.append(write_json(outdir / "summary.json", resp.model_dump()))
    return files, {"ensemble_matches_deterministic": resp.passed}


def _write_ensemble(resp, cfg, outdir):
    files = []
    if resp.mean is not None:
        rows = []
        for sample, stderr in zip(resp.mean, resp.stderr):
            for site, (re, im, se) in enumerate(zip(sample.re, sample.im, stderr)):
                rows.append([sample.time, site, re, im, se])
        files.append(write_csv(outdir / "ensemble.csv",
                               ["time", "site", "re_mean", "im_mean", "stderr"],
                               rows))
    files.append(write_json(outdir / "summary.json",
                            {"times": resp.times,
                             "realization_count": resp.realization_count}))
    return files, {"completed": True}


_WRITERS = {
    "sums": _write_sums,
    "moments": _write_moments,
    "match": _write_match,
    "evolve": _write_evolve,
    "dispersion": _write_dispersion,
    "remainder-study": _write_remainder,
    "compare": _write_compare,
    "ensemble": _write_ensemble,
}


def _output_dir(command: str, args) -> Path:
    if args.out:
        return Path(args.out)
    base = os.environ.get("KETLAB_OUT", "runs")
    return Path(base) / command


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    started = time.perf_counter()
    try:
        cfg = resolve_config(args.command, args)
        builder = _ROUTES[args.command][0]
        request = builder(cfg)
    except (ConfigError, *_DOMAIN_ERRORS) as exc:
        print(f"ketlab {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        response = dispatch(args.command, request, args.server)
    except EvolutionInstabilityError as exc:
        print(f"ketlab {args.command}: {exc}", file=sys.stderr)
        return 1
    except _DOMAIN_ERRORS as exc:
        print(f"ketlab {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2

    outdir = _output_dir(args.command, args)
    outdir.mkdir(parents=True, exist_ok=True)
    files, checks = _WRITERS[args.command](response, cfg, outdir)
    echo = _config_echo_values(cfg)
    files.append(write_config_echo(outdir / "config_resolved.txt", echo))
    wall = time.perf_counter() - started
    write_manifest(outdir / "manifest.json", echo,
                   [f.name for f in files], checks, wall)

    ok = all(checks.values())
    status = "ok" if ok else "CHECK FAILED"
    summary = ", ".join(f"{name}={'pass' if good else 'FAIL'}"
                        for name, good in checks.items())
    print(f"ketlab {args.command}: {status} ({summary}) -> {outdir}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
