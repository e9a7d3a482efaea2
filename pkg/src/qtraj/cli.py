"""Command-line interface: ``qtraj run``, ``qtraj sweep`` and ``qtraj verify``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (or a failed
verification), 3 I/O failure.  Failures print one JSON line on stderr.
"""
from __future__ import annotations

import csv
import json
import logging
import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__, models
from ._accel import USE_NUMBA
from .config import apply_overrides, metadata_document, parse_config, parse_value
from .ensemble import jump_statistics, map_trajectories, poincare_points, run_ensemble
from .errors import ConfigError, QTrajError, TrajectoryFailure
from .fock import coherent_state, make_annihilation, number_operator
from .frame import moving_frame_run
from .master import evolve_master, pure_density

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
QUADRATURES = "q=(a+a^dagger)/sqrt2, p=(a-a^dagger)/(i*sqrt2)"


def build_model(cfg):
    m, dim = cfg.model, cfg.run.dim
    if m.name == "duffing":
        return models.duffing(models.DuffingParams(beta=m.beta, damping=m.damping,
                                                   drive_amplitude=m.drive_amplitude,
                                                   drive_frequency=m.drive_frequency, dim=dim))
    return models.damped_ho(models.HOParams(omega=m.omega, gamma=m.gamma, nbar=m.nbar, force=m.force, dim=dim))


def _fmt(x):
    return "%.17g" % x


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _master_series(cfg, model, psi0):
    res = evolve_master(model, pure_density(psi0), cfg.run.dt, cfg.run.t_final, sample_every=cfg.run.sample_every)
    a = make_annihilation(model.dim)
    n = number_operator(model.dim)
    mean = np.array([np.trace(a @ r) for r in res.states])
    occ = np.array([np.trace(n @ r).real for r in res.states])
    drift = np.array([abs(np.trace(r).real - 1.0) for r in res.states])
    return res.times, mean, occ, occ - np.abs(mean) ** 2, drift


def _records(cfg, model, psi0):
    r, fr = cfg.run, cfg.frame
    if fr.enabled:
        def one(i):
            try:
                return moving_frame_run(model, psi0, r.stepper, r.dt, r.t_final, fr.recenter_threshold,
                                        frame_dim=fr.frame_dim, sample_every=r.sample_every, seed=r.seed,
                                        stream_id=i, scheme=r.scheme)
            except QTrajError as exc:
                raise TrajectoryFailure(i, getattr(exc, "t", None), exc) from exc
        return map_trajectories(one, r.n_traj), None
    summary = run_ensemble(model, psi0, r.stepper, r.dt, r.t_final, r.checkpoints, r.n_traj, r.seed,
                           keep_records=True, scheme=r.scheme, sample_every=r.sample_every)
    return summary.records, summary


def run_experiment(cfg, directory=None, suffix=""):
    """Execute ``cfg`` and write its outputs; returns {kind: path}."""
    out = Path(cfg.output.directory if directory is None else directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    model = build_model(cfg)
    psi0 = coherent_state(cfg.alpha0, cfg.run.dim)
    formats = set(cfg.output.formats)
    files = {}
    extra = {"meta.version": __version__, "meta.numba": USE_NUMBA, "meta.fingerprint": model.fingerprint(),
             "meta.quadratures": QUADRATURES}
    duffing = cfg.model.name == "duffing"
    period = 2 * np.pi / cfg.model.drive_frequency if duffing else None
    scale = cfg.model.beta if duffing else 1.0

    def path(stem, ext="csv"):
        p = out / f"{stem}{suffix}.{ext}"
        files[stem] = p
        return p

    if cfg.run.stepper == "master":
        times, mean, occ, width, drift = _master_series(cfg, model, psi0)
        records, summary = [], None
        if "trajectory" in formats:
            _write_csv(path("trajectory"), ["t", "re_mean_a", "im_mean_a", "n_mean", "delta_alpha_sq", "norm_drift"],
                       zip(times, mean.real, mean.imag, occ, width, drift))
        if "jumps" in formats:
            _write_csv(path("jumps"), ["t", "channel", "rate", "magnitude", "traj"], [])
        if duffing and "poincare" in formats:
            from .ensemble import strobe
            pts = strobe(times, np.sqrt(2) * mean.real / scale, np.sqrt(2) * mean.imag / scale, period,
                         cfg.output.poincare_skip_periods * period)
            _write_csv(path("poincare"), ["q", "p", "traj"], ((q, p, 0) for q, p in pts))
    else:
        records, summary = _records(cfg, model, psi0)
        if "trajectory" in formats:
            rec0 = records[0]
            stack = lambda attr: np.mean([getattr(r, attr) for r in records], axis=0)
            mean = stack("mean_a")
            _write_csv(path("trajectory"), ["t", "re_mean_a", "im_mean_a", "n_mean", "delta_alpha_sq", "norm_drift"],
                       zip(rec0.times, mean.real, mean.imag, stack("n_mean"), stack("delta_alpha_sq"),
                           stack("norm_drift")))
        if "jumps" in formats:
            rows = ((t, int(c), rate, mag, i) for i, rec in enumerate(records)
                    for t, c, rate, mag in zip(rec.jump_times, rec.jump_channels, rec.jump_rates,
                                               rec.jump_magnitudes))
            _write_csv(path("jumps"), ["t", "channel", "rate", "magnitude", "traj"], rows)
        if duffing and "poincare" in formats:
            rows = []
            for i, rec in enumerate(records):
                pts = poincare_points(rec, period, cfg.output.poincare_skip_periods * period, scale=scale)
                rows.extend((q, p, i) for q, p in pts)
            _write_csv(path("poincare"), ["q", "p", "traj"], rows)
        if cfg.run.t_final > 0:
            rate, mag = jump_statistics(records, (0.0, records[0].times[-1]), model.n_channels)
            extra["result.jump_rate"] = [float(x) for x in rate]
            extra["result.jump_magnitude"] = [float(x) for x in mag]
        extra["result.max_tail_mass"] = float(max(np.max(r.tail_mass) for r in records))
    if summary is not None and summary.trace_distance is not None and "summary" in formats:
        _write_csv(path("summary"), ["t", "trace_distance_to_master"],
                   zip(summary.checkpoints, summary.trace_distance))
    meta = path("metadata", "toml")
    extra["meta.timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    extra["meta.files"] = sorted(p.name for k, p in files.items() if k != "metadata")
    meta.write_text(metadata_document(cfg, extra), encoding="utf-8")
    return files


def _fail(code, exc):
    payload = {"exit": code, "kind": type(exc).__name__, "message": str(exc).replace("\n", " ")}
    if isinstance(exc, ConfigError):
        payload["key"] = exc.key
    if isinstance(exc, TrajectoryFailure):
        payload["stream_id"] = exc.stream_id
        payload["t"] = exc.t
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _guard(fn):
    try:
        return fn()
    except ConfigError as exc:
        _fail(EXIT_CONFIG, exc)
    except (QTrajError, FloatingPointError) as exc:
        _fail(EXIT_NUMERICAL, exc)
    except OSError as exc:
        _fail(EXIT_IO, exc)


def _parse_overrides(args):
    """``--section.key=value`` or ``--section.key value`` pairs."""
    out = {}
    it = iter(args)
    for arg in it:
        if not arg.startswith("--"):
            raise ConfigError(arg, "unexpected argument; overrides look like --section.key=value")
        key, eq, value = arg[2:].partition("=")
        if not eq:
            value = next(it, None)
            if value is None:
                raise ConfigError(key, "override is missing a value")
        out[key] = parse_value(value)
    return out


def _load(config_path, overrides):
    try:
        text = Path(config_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {config_path}: {exc}") from exc
    cfg = parse_config(text)
    return apply_overrides(cfg, overrides) if overrides else cfg


OVERRIDABLE = dict(ignore_unknown_options=True, allow_extra_args=True)


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Quantum trajectories for damped oscillators and the Duffing oscillator."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command(context_settings=OVERRIDABLE)
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("-o", "--out", "directory", default=None, help="Output directory (overrides output.directory).")
@click.pass_context
def run(ctx, config, directory):
    """Run one configuration.  Extra --section.key=value flags override the file."""
    def go():
        cfg = _load(config, _parse_overrides(ctx.args))
        files = run_experiment(cfg, directory)
        for p in files.values():
            click.echo(str(p))
    _guard(go)


def _suffix(key, text):
    leaf = key.rsplit(".", 1)[-1]
    return "_" + re.sub(r"[^A-Za-z0-9.+-]", "_", f"{leaf}{text}")


@main.command(context_settings=OVERRIDABLE)
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--param", "params", required=True, multiple=True,
              help="section.key=v1,v2,... ; several --param flags form a grid.")
@click.option("-o", "--out", "directory", default=None, help="Output directory (overrides output.directory).")
@click.pass_context
def sweep(ctx, config, params, directory):
    """Run a configuration once per parameter value, writing suffixed outputs."""
    def go():
        base = _load(config, _parse_overrides(ctx.args))
        grid = [{}]
        for item in params:
            key, eq, values = item.partition("=")
            if not eq or not values:
                raise ConfigError(item, "expected section.key=v1,v2,...")
            grid = [dict(g, **{key: v.strip()}) for g in grid for v in values.split(",")]
        for point in grid:
            cfg = apply_overrides(base, {k: parse_value(v) for k, v in point.items()})
            suffix = "".join(_suffix(k, v) for k, v in point.items())
            files = run_experiment(cfg, directory, suffix)
            for p in files.values():
                click.echo(str(p))
    _guard(go)


@main.command()
@click.option("--seeds", default=10, show_default=True, help="Number of fixed seeds per stochastic check.")
def verify(seeds):
    """Run the invariant suite; one PASS/FAIL line per check."""
    from .verify import run_all

    def go():
        ok = True
        for name, passed, detail in run_all(seeds):
            ok &= passed
            click.echo(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        if not ok:
            sys.exit(EXIT_NUMERICAL)
    _guard(go)


if __name__ == "__main__":
    main()
