"""Command-line front end: one flat config file, subcommands, CSV artifacts.

Configuration is a single JSON object with flat dotted keys (see README for
the schema); ``--set key=value`` overrides individual entries.  Every
artifact starts with a comment line carrying the configuration hash and the
seed, so reruns are byte-identical and archives are self-describing.

Exit codes: 0 success, 1 numerical/runtime failure, 2 usage or configuration
error.
"""

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, hyp, noise, solver
from .errors import (BlowUpError, ConfigurationError, DegenerateSampleError,
                     DivergentIntegralError, DomainError, ResolutionError)
from .green import GreenFunction
from .grids import GridSpec
from .spectral import SpectralModel

CONFIG_ERRORS = (ConfigurationError, DomainError, KeyError, ValueError, TypeError)
RUNTIME_ERRORS = (BlowUpError, DivergentIntegralError, ResolutionError,
                  DegenerateSampleError, FloatingPointError)

DEFAULTS = {
    "k": 1,
    "seed": 0,
    "workers": 1,
    "M": 1000,
    "coeffs.name": "linear_const",
    "out": "out",
}


#: keys that select where/how to run, not what experiment to run
EXECUTION_KEYS = {"out", "workers"}


def canonical_config(cfg):
    payload = {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(cfg):
    return hashlib.sha256(canonical_config(cfg).encode()).hexdigest()[:16]


def load_config(path, overrides=()):
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigurationError("config file must hold a JSON object")
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            cfg[key] = json.loads(raw)
        except json.JSONDecodeError:
            cfg[key] = raw
    for key, val in DEFAULTS.items():
        cfg.setdefault(key, val)
    return cfg


def _require(cfg, key):
    if key not in cfg:
        raise ConfigurationError(f"missing config key {key!r}")
    return cfg[key]


def build_model(cfg):
    kind = _require(cfg, "model.kind")
    d = int(_require(cfg, "d"))
    if kind == "riesz":
        return SpectralModel(kind="riesz", d=d, beta=float(_require(cfg, "model.beta")))
    if kind == "gaussian_kernel":
        return SpectralModel(kind="gaussian_kernel", d=d,
                             ell=float(_require(cfg, "model.ell")))
    raise ConfigurationError(f"unknown model.kind {kind!r}")


def build_grid(cfg):
    return GridSpec(
        d=int(_require(cfg, "d")),
        n_points=int(_require(cfg, "grid.n")),
        extent=float(_require(cfg, "grid.extent")),
        dt=float(_require(cfg, "grid.dt")),
    )


def coeff_params(cfg):
    # a flat config may carry parameters for several registry entries; keep
    # only the ones the selected entry accepts
    import inspect

    from .solver import REGISTRY
    name = cfg["coeffs.name"]
    if name not in REGISTRY:
        raise ConfigurationError(f"unknown coefficient set {name!r}")
    accepted = set(inspect.signature(REGISTRY[name]).parameters) - {"k"}
    prefix = "coeffs."
    out = {}
    for key, val in cfg.items():
        if key.startswith(prefix) and key != "coeffs.name":
            param = key[len(prefix):]
            if param in accepted:
                out[param] = val
    return out


def build_runspec(cfg):
    return solver.RunSpec(
        operator=_require(cfg, "operator"),
        model=build_model(cfg),
        grid=build_grid(cfg),
        k=int(cfg["k"]),
        coeffs_name=cfg["coeffs.name"],
        coeffs_params=coeff_params(cfg),
        T=float(_require(cfg, "T")),
    )


def probe_of(cfg):
    d = int(_require(cfg, "d"))
    probe = cfg.get("probe", [0.0] * d)
    return [float(x) for x in np.atleast_1d(probe)]


def write_csv(path, header, rows, cfg, seed):
    lines = [f"# config_hash={config_hash(cfg)} seed={seed}", ",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload, cfg, seed):
    payload = dict(payload)
    payload["config_hash"] = config_hash(cfg)
    payload["seed"] = seed
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True,
                                     default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj)}")


PLOT_STUB = """\
# Rendering stub: each CSV in this directory is two- or three-column data
# (see the header row).  Example with matplotlib:
#
#   import pandas as pd
#   import matplotlib.pyplot as plt
#   df = pd.read_csv("<artifact>.csv", comment="#")
#   df.plot(x=df.columns[0], y=df.columns[1], loglog=True)
#   plt.savefig("<artifact>.png")
"""


def ensure_outdir(cfg):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "plot_stub.py").write_text(PLOT_STUB)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_hypcheck(cfg):
    out = ensure_outdir(cfg)
    seed = int(cfg["seed"])
    model = build_model(cfg)
    g = GreenFunction(_require(cfg, "operator"), int(_require(cfg, "d")))
    gamma4 = float(cfg.get("hyp.gamma4", 0.5))
    hcfg = hyp.HypCheckConfig(horizon=float(cfg.get("hyp.horizon", 1.0)))
    report = hyp.verify_hypotheses(g, model, gamma4, hcfg)
    write_json(out / "hyp_report.json", report.as_dict(), cfg, seed)
    (out / "hyp_report.txt").write_text(report.table() + "\n")
    print(report.table())
    return 0


def cmd_noise_test(cfg):
    out = ensure_outdir(cfg)
    seed = int(cfg["seed"])
    model = build_model(cfg)
    grid = build_grid(cfg)
    M = int(cfg["M"])
    lag_cells = cfg.get("noise.lags", [0, 1, 2, 4, 8])
    weights = noise.spectral_weights(model, grid)
    stream = noise.NoiseStream(seed)
    samples = [noise.sample_increment(weights, 1, stream, i, 0, grid.dt, grid)
               for i in range(M)]
    if cfg.get("noise.dump_increment"):
        inc = samples[0]
        rows = []
        for idx in np.ndindex(*grid.shape):
            for comp in range(inc.fields.shape[0]):
                rows.append(idx + (comp, float(inc.fields[(comp,) + idx])))
        write_csv(out / "increment.csv",
                  [f"index_{i+1}" for i in range(grid.d)] + ["component", "value"],
                  rows, cfg, seed)
    lags = [(int(c),) * grid.d for c in lag_cells]
    ests = noise.empirical_covariance(samples, lags, grid)
    rows = []
    for est in ests:
        oracle = noise.band_limited_covariance(weights, grid, est.lag_cells)
        rows.append((est.lag_cells[0], est.lag_physical[0], est.estimate,
                     est.stderr, oracle))
    write_csv(out / "covariance.csv",
              ["lag_cells", "lag_physical", "estimate", "stderr", "oracle"],
              rows, cfg, seed)
    print(f"noise-test: wrote {len(rows)} lags to {out/'covariance.csv'}")
    return 0


def cmd_simulate(cfg):
    out = ensure_outdir(cfg)
    seed = int(cfg["seed"])
    spec = build_runspec(cfg)
    times = [float(t) for t in cfg.get("output_times", [spec.T])]
    if cfg.get("simulate.dump_kernel") and spec.T > 0:
        from .green import kernel_weights, weights_to_rows
        w = kernel_weights(spec.green, spec.T, spec.grid)
        rows = weights_to_rows(w, spec.grid)
        write_csv(out / "kernel_weights.csv",
                  [f"index_{i+1}" for i in range(spec.grid.d)] + ["weight"],
                  rows, cfg, seed)
    traj = solver.simulate(spec, seed, record_times=times)
    rows = []
    for snap in traj.snapshots:
        step = round(snap.t / spec.grid.dt)
        for comp in range(spec.k):
            flat = snap.fields[comp].ravel()
            for idx, val in enumerate(flat):
                rows.append((step, snap.t, idx, comp, float(val)))
    write_csv(out / "trajectory.csv",
              ["step", "time", "flat_index", "component", "value"],
              rows, cfg, seed)
    print(f"simulate: {len(traj.snapshots)} snapshots -> {out/'trajectory.csv'}")
    return 0


def _ensemble(cfg):
    spec = build_runspec(cfg)
    seed = int(cfg["seed"])
    values, extras = solver.simulate_ensemble(
        spec, int(cfg["M"]), probe_of(cfg), seed,
        workers=int(cfg["workers"]))
    return spec, seed, values, extras


def cmd_density(cfg):
    out = ensure_outdir(cfg)
    spec, seed, values, extras = _ensemble(cfg)
    rows = [(i,) + tuple(float(v) for v in values[i]) for i in range(values.shape[0])]
    write_csv(out / "samples.csv",
              ["sample"] + [f"component_{j+1}" for j in range(spec.k)],
              rows, cfg, seed)
    est = analysis.kde(values)
    coeffs = spec.coefficients()
    region = analysis.SigmaRegion(coeffs.sigma, cfg.get("density.delta_det"))
    threshold = cfg.get("density.threshold")
    report = analysis.positivity_check(
        est, region,
        quantile_box=float(cfg.get("density.quantile_box", 0.9)),
        threshold=float(threshold) if threshold is not None else None)
    mesh = np.meshgrid(*est.axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    dens_rows = [tuple(float(x) for x in pts[i]) + (float(est.values.ravel()[i]),)
                 for i in range(pts.shape[0])]
    write_csv(out / "density.csv",
              [f"y_{j+1}" for j in range(spec.k)] + ["density"],
              dens_rows, cfg, seed)
    write_json(out / "verdict.json", {
        "verdict": report.verdict,
        "min_density": report.min_density,
        "threshold": report.threshold,
        "n_eval_points": report.n_eval_points,
        "n_margin_excluded": report.n_margin_excluded,
        "delta_det": report.delta_det,
        "quantile_box": report.quantile_box,
        "bandwidth": est.bandwidth,
        "probe_index": extras["probe_index"],
        "probe_coords": extras["probe_coords"],
    }, cfg, seed)
    print(f"density: verdict={report.verdict} min={report.min_density:.6g} "
          f"threshold={report.threshold:.6g}")
    return 0


def cmd_hoelder(cfg):
    out = ensure_outdir(cfg)
    spec = build_runspec(cfg)
    seed = int(cfg["seed"])
    direction = cfg.get("hoelder.direction", "time")
    lags = [float(x) for x in _require(cfg, "hoelder.lags")]
    fit = analysis.hoelder_estimate(
        spec, direction, lags, p=float(cfg.get("hoelder.p", 2.0)),
        M=int(cfg["M"]), probe=probe_of(cfg), seed=seed,
        workers=int(cfg["workers"]))
    rows = [(float(l), float(m), float(s))
            for l, m, s in zip(fit.lags, fit.moments, fit.moment_stderr)]
    write_csv(out / "moments.csv", ["lag", "moment", "stderr"], rows, cfg, seed)
    write_json(out / "hoelder.json", {
        "direction": fit.direction,
        "p": fit.p,
        "exponent": fit.exponent,
        "ci_low": fit.ci_low,
        "ci_high": fit.ci_high,
        "n_boot": fit.n_boot,
    }, cfg, seed)
    print(f"hoelder[{direction}]: exponent={fit.exponent:.4f} "
          f"CI=[{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
    return 0


def cmd_localize(cfg):
    out = ensure_outdir(cfg)
    spec = build_runspec(cfg)
    seed = int(cfg["seed"])
    n_values = [int(n) for n in cfg.get("localize.n_values", [2, 3, 4, 5])]
    curve = analysis.localization_convergence(
        spec, n_values, int(cfg["M"]), probe_of(cfg), seed)
    rows = list(zip(curve.n_values, curve.normalizers, curve.mean_errors,
                    curve.stderrs))
    write_csv(out / "localization.csv",
              ["n", "normalizer", "mean_error", "stderr"], rows, cfg, seed)
    write_json(out / "localization.json", {
        "n_values": curve.n_values,
        "mean_errors": curve.mean_errors,
        "decay_rate": curve.decay_rate,
    }, cfg, seed)
    print(f"localize: errors={['%.4g' % e for e in curve.mean_errors]} "
          f"decay_rate={curve.decay_rate:.3f}")
    return 0


def cmd_oracle(cfg):
    out = ensure_outdir(cfg)
    spec, seed, values, extras = _ensemble(cfg)
    c = float(cfg.get("oracle.c", cfg.get("coeffs.c", 1.0)))
    g = spec.green
    oracle = analysis.gaussian_oracle_variance(g, spec.model, c, spec.T)
    emp = float(np.var(values[:, 0], ddof=1))
    M = values.shape[0]
    se = emp * math.sqrt(2.0 / (M - 1))
    z = (emp - oracle) / se if se > 0 else math.inf
    write_csv(out / "oracle.csv",
              ["t", "empirical_var", "stderr", "oracle_var", "z_score"],
              [(spec.T, emp, se, oracle, z)], cfg, seed)
    print(f"oracle: empirical={emp:.6g} oracle={oracle:.6g} z={z:+.2f}")
    return 0


COMMANDS = {
    "hypcheck": cmd_hypcheck,
    "noise-test": cmd_noise_test,
    "simulate": cmd_simulate,
    "density": cmd_density,
    "hoelder": cmd_hoelder,
    "localize": cmd_localize,
    "oracle": cmd_oracle,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spdelab",
        description="numerical laboratory for stochastic heat/wave systems "
                    "driven by spatially homogeneous noise")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (value parsed as JSON)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        cfg = load_config(args.config, args.set)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.workers is not None:
            cfg["workers"] = args.workers
        if args.out is not None:
            cfg["out"] = args.out
        command = COMMANDS[args.command]
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return command(cfg)
    except RUNTIME_ERRORS as exc:
        # checked before the config bucket: runtime guards subclass ValueError
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    except CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
