"""Command-line front end: config parsing, experiment orchestration, file emission.

Configs are flat INI files with sections; every run echoes the fully
resolved config (defaults included) into the output directory so experiment
logs diff cleanly. Data CSVs are byte-identical for identical config and
seed regardless of the thread count; timestamps live only in
``run_metadata.json``.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 window
collision with the spectral edge.
"""

from __future__ import annotations

import configparser
import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._csvio import fmt, write_rows
from .model import (CouplingVariant, DisorderDistribution, ModelParams,
                    ValidationError, build_hamiltonian, realization_to_csv,
                    sample_disorder)
from .pruefer import BracketError, pruefer_sweep, trace_to_csv
from .sturm import SpectralQuery, bisect_eigenvalues, eigenvalues_to_csv, full_interval
from .stats import (EnsembleSpec, WindowCollisionError, circular_variance_mod_pi,
                    clock_spacing_experiment, diagnostics_to_csv, local_point_process,
                    phase_convergence_diagnostic, resonant_subsequence, spacings_to_csv)

EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_WINDOW = 4


def _fail(kind: str, code: int, field: str, message: str):
    message = " ".join(str(message).split())
    click.echo(f"error kind={kind} field={field or '-'}: {message}", err=True)
    sys.exit(code)


class _Config:
    """Typed access to a parsed INI config; missing/bad fields name themselves."""

    def __init__(self, path: str):
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        read = self.parser.read(path)
        if not read:
            raise OSError(f"config file {path!r} not found or unreadable")
        self.resolved: dict = {}

    def _raw(self, section: str, key: str, default):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        if default is _REQUIRED:
            raise ValidationError("missing required field", f"{section}.{key}")
        return default

    def _record(self, section: str, key: str, value):
        self.resolved.setdefault(section, {})[key] = value
        return value

    def get_float(self, section, key, default=None):
        raw = self._raw(section, key, default)
        if raw is None:
            return self._record(section, key, None)
        try:
            return self._record(section, key, float(raw))
        except (TypeError, ValueError):
            raise ValidationError(f"expected a real number, got {raw!r}",
                                  f"{section}.{key}") from None

    def get_int(self, section, key, default=None):
        raw = self._raw(section, key, default)
        if raw is None:
            return self._record(section, key, None)
        try:
            return self._record(section, key, int(str(raw)))
        except (TypeError, ValueError):
            raise ValidationError(f"expected an integer, got {raw!r}",
                                  f"{section}.{key}") from None

    def get_str(self, section, key, default=None):
        raw = self._raw(section, key, default)
        return self._record(section, key, raw)

    def get_bool(self, section, key, default=False):
        raw = self._raw(section, key, default)
        if isinstance(raw, bool):
            return self._record(section, key, raw)
        low = str(raw).lower()
        if low in ("1", "true", "yes", "on"):
            return self._record(section, key, True)
        if low in ("0", "false", "no", "off"):
            return self._record(section, key, False)
        raise ValidationError(f"expected a boolean, got {raw!r}", f"{section}.{key}")

    def get_int_list(self, section, key, default=None):
        raw = self._raw(section, key, default)
        if raw is None or isinstance(raw, (list, tuple)):
            return self._record(section, key, list(raw) if raw else [])
        try:
            vals = [int(tok) for tok in str(raw).split()]
        except ValueError:
            raise ValidationError(f"expected space-separated integers, got {raw!r}",
                                  f"{section}.{key}") from None
        return self._record(section, key, vals)

    def get_float_list(self, section, key, default=None):
        raw = self._raw(section, key, default)
        if raw is None or isinstance(raw, (list, tuple)):
            return self._record(section, key, list(raw) if raw else [])
        try:
            vals = [float(tok) for tok in str(raw).split()]
        except ValueError:
            raise ValidationError(f"expected space-separated reals, got {raw!r}",
                                  f"{section}.{key}") from None
        return self._record(section, key, vals)

    def disorder(self) -> DisorderDistribution:
        if not self.parser.has_section("disorder"):
            raise ValidationError("missing [disorder] section", "disorder.kind")
        dist = DisorderDistribution.from_items(self.parser.items("disorder"))
        self.resolved["disorder"] = {"kind": dist.kind}
        for name in ("half_width", "delta", "scale"):
            val = getattr(dist, name)
            if val is not None:
                self.resolved["disorder"][name] = val
        return dist

    def echo(self, out_dir: Path):
        echoed = configparser.ConfigParser()
        for section in sorted(self.resolved):
            echoed.add_section(section)
            for key in sorted(self.resolved[section]):
                val = self.resolved[section][key]
                if val is None:
                    continue
                if isinstance(val, float):
                    echoed.set(section, key, fmt(val))
                elif isinstance(val, (list, tuple)):
                    echoed.set(section, key, " ".join(str(v) for v in val))
                else:
                    echoed.set(section, key, str(val))
        with open(out_dir / "resolved.cfg", "w", encoding="utf-8") as fh:
            echoed.write(fh)


_REQUIRED = object()


def _model_params(cfg: _Config, *, need_theta: bool = True, size_key: str = "size") -> ModelParams:
    alpha = cfg.get_float("model", "alpha", _REQUIRED)
    size = cfg.get_int("model", size_key, _REQUIRED)
    variant = cfg.get_str("model", "variant", "decaying_site")
    theta = cfg.get_float("model", "theta", _REQUIRED if need_theta else math.pi / 2)
    try:
        variant_enum = CouplingVariant(variant)
    except ValueError:
        raise ValidationError(f"unknown variant {variant!r}", "model.variant") from None
    try:
        return ModelParams(alpha=alpha, size=size, variant=variant_enum, energy_theta=theta)
    except ValidationError as exc:
        raise ValidationError(str(exc), f"model.{exc.field}") from None


def _common(cfg: _Config, seed, threads):
    master_seed = cfg.get_int("run", "master_seed", 0)
    if seed is not None:
        master_seed = cfg._record("run", "master_seed", int(seed))
    cfg_threads = cfg.get_int("run", "threads", 0)
    if threads is not None:
        cfg_threads = cfg._record("run", "threads", int(threads))
    return master_seed, (cfg_threads if cfg_threads and cfg_threads > 0 else None)


def _write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _run_command(name: str, config: str, out: str, seed, threads, body):
    t0 = time.time()
    try:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg = _Config(config)
        master_seed, n_threads = _common(cfg, seed, threads)
        summary = body(cfg, out_dir, master_seed, n_threads)
        cfg.echo(out_dir)
        _write_json(out_dir / "run_metadata.json", {
            "command": name,
            "version": __version__,
            "started_unix": t0,
            "elapsed_seconds": time.time() - t0,
        })
        click.echo(summary)
    except ValidationError as exc:
        _fail("validation", EXIT_VALIDATION, exc.field, str(exc))
    except (WindowCollisionError, BracketError) as exc:
        _fail("window", EXIT_WINDOW, "process.window_k", str(exc))
    except OSError as exc:
        _fail("io", EXIT_IO, "", str(exc))


def _command_options(fn):
    fn = click.option("--config", "config", required=True,
                      type=click.Path(), help="INI config file")(fn)
    fn = click.option("--out", "out", required=True,
                      type=click.Path(file_okay=False), help="output directory")(fn)
    fn = click.option("--seed", "seed", type=click.IntRange(min=0), default=None,
                      help="override [run] master_seed")(fn)
    fn = click.option("--threads", "threads", type=click.IntRange(min=1), default=None,
                      help="worker threads (results are invariant to this)")(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Disordered-chain eigenvalue statistics toolkit."""


@main.command()
@_command_options
def spectrum(config, out, seed, threads):
    """All eigenvalues of one realization via Sturm bisection."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        params = _model_params(cfg, need_theta=False)
        dist = cfg.disorder()
        index = cfg.get_int("run", "realization_index", 0)
        tolerance = cfg.get_float("spectrum", "tolerance", 1e-11)
        disorder = sample_disorder(dist, params.size, master_seed, index)
        op = build_hamiltonian(params, disorder)
        evals = bisect_eigenvalues(SpectralQuery(op, full_interval(op), tolerance=tolerance))
        eigenvalues_to_csv(evals, out_dir / "spectrum.csv")
        realization_to_csv(params, disorder, out_dir / "realization.csv")
        return (f"spectrum: {evals.size} eigenvalues in "
                f"[{fmt(evals.min())}, {fmt(evals.max())}] -> {out_dir / 'spectrum.csv'}")

    _run_command("spectrum", config, out, seed, threads, body)


@main.command("pruefer-trace")
@_command_options
def pruefer_trace(config, out, seed, threads):
    """Phase recursion trace of one realization at the config theta."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        params = _model_params(cfg)
        dist = cfg.disorder()
        index = cfg.get_int("run", "realization_index", 0)
        amplitude = cfg.get_bool("trace", "amplitude", False)
        disorder = sample_disorder(dist, params.size, master_seed, index)
        trace = pruefer_sweep(params, disorder, params.energy_theta,
                              include_amplitude=amplitude)
        trace_to_csv(trace, out_dir / "trace.csv")
        return (f"pruefer-trace: {params.size} sites, final phase "
                f"{fmt(trace.final_phase)} -> {out_dir / 'trace.csv'}")

    _run_command("pruefer-trace", config, out, seed, threads, body)


@main.command()
@_command_options
def process(config, out, seed, threads):
    """Rescaled local point process of one realization."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        params = _model_params(cfg)
        dist = cfg.disorder()
        index = cfg.get_int("run", "realization_index", 0)
        window_k = cfg.get_float("process", "window_k", _REQUIRED)
        disorder = sample_disorder(dist, params.size, master_seed, index)
        sample = local_point_process(params, disorder, window_k)
        write_rows(out_dir / "points.csv", ("i", "x_i", "energy_i"),
                   ((int(sample.indices[j]), sample.x_points[j], sample.energy_points[j])
                    for j in range(sample.x_points.size)))
        write_rows(out_dir / "roots.csv", ("k", "theta", "energy"),
                   ((int(sample.enumeration_offset + sample.indices[j]),
                     sample.theta0 + sample.x_points[j] / params.size,
                     params.energy + sample.energy_points[j] / params.size)
                    for j in range(sample.x_points.size)))
        _write_json(out_dir / "process_summary.json", {
            "points": int(sample.x_points.size),
            "enumeration_offset": sample.enumeration_offset,
            "max_remainder": sample.max_remainder(),
            "window_k": window_k,
        })
        return (f"process: {sample.x_points.size} points, offset "
                f"{sample.enumeration_offset} -> {out_dir / 'points.csv'}")

    _run_command("process", config, out, seed, threads, body)


@main.command()
@_command_options
def ensemble(config, out, seed, threads):
    """Clock-spacing Monte Carlo over chain lengths."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        alpha = cfg.get_float("model", "alpha", _REQUIRED)
        theta = cfg.get_float("model", "theta", _REQUIRED)
        variant = cfg.get_str("model", "variant", "decaying_site")
        dist = cfg.disorder()
        window_k = cfg.get_float("process", "window_k", _REQUIRED)
        sizes = cfg.get_int_list("ensemble", "sizes", _REQUIRED)
        realizations = cfg.get_int("ensemble", "realizations", _REQUIRED)
        try:
            spec = EnsembleSpec(distribution=dist, alpha=alpha, theta0=theta,
                                window_k=window_k, sizes=tuple(sizes),
                                realizations=realizations, master_seed=master_seed,
                                variant=CouplingVariant(variant))
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(str(exc), "model.variant") from None
        result = clock_spacing_experiment(spec, threads=n_threads)
        spacings_to_csv(result, out_dir / "spacings.csv")
        offset_rows = []
        for size in spec.sizes:
            offs = result.per_size[size].offset_samples
            for r, phi in enumerate(offs):
                offset_rows.append((size, r, phi))
        write_rows(out_dir / "offsets.csv", ("L", "realization", "offset_mod_pi"),
                   offset_rows)
        payload = {"sizes": {}, "realizations": realizations}
        for size in spec.sizes:
            st = result.per_size[size]
            payload["sizes"][str(size)] = {
                "sample_count": st.sample_count,
                "mean_spacing": st.mean_spacing,
                "std_spacing": st.std_spacing,
                "histogram": {"edges": [float(e) for e in st.histogram_edges],
                              "counts": [int(c) for c in st.histogram_counts]},
                "offset_circular_variance": circular_variance_mod_pi(st.offset_samples),
                "excluded": [{"realization": r, "reason": reason}
                             for r, reason in result.excluded[size]],
            }
        _write_json(out_dir / "summary.json", payload)
        worst = max(spec.sizes)
        return (f"ensemble: sizes {list(spec.sizes)}, "
                f"{realizations} realizations, std at L={worst}: "
                f"{fmt(result.per_size[worst].std_spacing)} -> {out_dir / 'summary.json'}")

    _run_command("ensemble", config, out, seed, threads, body)


@main.command("diagnose-tail")
@_command_options
def diagnose_tail(config, out, seed, threads):
    """Tail-exit indices, restricted drift moments, and window sup-discrepancy."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        alpha = cfg.get_float("model", "alpha", _REQUIRED)
        theta = cfg.get_float("model", "theta", _REQUIRED)
        variant = cfg.get_str("model", "variant", "decaying_site")
        dist = cfg.disorder()
        beta = cfg.get_float("diagnose", "beta", _REQUIRED)
        n_list = cfg.get_int_list("diagnose", "n_list", _REQUIRED)
        m = cfg.get_int("diagnose", "m", _REQUIRED)
        realizations = cfg.get_int("diagnose", "realizations", _REQUIRED)
        sup_sizes = cfg.get_int_list("diagnose", "sup_sizes", "")
        window_k = cfg.get_float("process", "window_k", 10.0)
        spec = EnsembleSpec(distribution=dist, alpha=alpha, theta0=theta,
                            window_k=window_k, sizes=tuple(sup_sizes) or (m,),
                            realizations=realizations, master_seed=master_seed,
                            variant=CouplingVariant(variant))
        diag = phase_convergence_diagnostic(spec, beta, n_list, m,
                                            compute_sup=bool(sup_sizes),
                                            threads=n_threads)
        diagnostics_to_csv(diag, out_dir / "diagnostics.csv")
        write_rows(out_dir / "tail_exit.csv", ("realization", "n_omega"),
                   ((r, int(v)) for r, v in enumerate(diag.n_omega_samples)))
        sup_rows = []
        for size in sorted(diag.sup_discrepancy):
            for r, v in enumerate(diag.sup_discrepancy[size]):
                sup_rows.append((size, r, v))
        if sup_rows:
            write_rows(out_dir / "sup_discrepancy.csv", ("L", "realization", "sup"), sup_rows)
        _write_json(out_dir / "tail_summary.json", {
            "beta": beta,
            "empirical_B_N": {str(n): v for n, v in diag.empirical_b_n.items()},
            "moments": {str(n): diag.ytilde_l2[(n, m)] for n in sorted(diag.empirical_b_n)},
            "envelope": {str(n): v for n, v in diag.envelope.items()},
            "insufficient_N": diag.insufficient_n,
        })
        return (f"diagnose-tail: {realizations} realizations, "
                f"moments at N={sorted(diag.empirical_b_n)} -> {out_dir / 'diagnostics.csv'}")

    _run_command("diagnose-tail", config, out, seed, threads, body)


@main.command()
@_command_options
def subsequence(config, out, seed, threads):
    """Chain lengths with prescribed fractional phase (L+1)*theta/pi."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        theta = cfg.get_float("model", "theta", _REQUIRED)
        target = cfg.get_float("subsequence", "target", _REQUIRED)
        count = cfg.get_int("subsequence", "count", _REQUIRED)
        l_min = cfg.get_int("subsequence", "l_min", 1)
        l_max = cfg.get_int("subsequence", "l_max", _REQUIRED)
        ls = resonant_subsequence(theta, target, count, (l_min, l_max))
        frac = np.mod((ls + 1) * theta / math.pi, 1.0)
        dist = np.abs(frac - target)
        dist = np.minimum(dist, 1.0 - dist)
        write_rows(out_dir / "subsequence.csv", ("L", "frac", "distance"),
                   ((int(ls[i]), frac[i], dist[i]) for i in range(ls.size)))
        return (f"subsequence: {ls.size} lengths, best distance {fmt(dist.min())} "
                f"-> {out_dir / 'subsequence.csv'}")

    _run_command("subsequence", config, out, seed, threads, body)


@main.command("compare-oracle")
@_command_options
def compare_oracle(config, out, seed, threads):
    """Cross-validate phase root-finding against Sturm bisection on windows."""

    def body(cfg: _Config, out_dir: Path, master_seed: int, n_threads):
        alpha = cfg.get_float("model", "alpha", _REQUIRED)
        variant = cfg.get_str("model", "variant", "decaying_site")
        dist = cfg.disorder()
        sizes = cfg.get_int_list("compare", "sizes", _REQUIRED)
        thetas = cfg.get_float_list("compare", "thetas", _REQUIRED)
        realizations = cfg.get_int("compare", "realizations", _REQUIRED)
        window_k = cfg.get_float("compare", "window_k", 15.0)
        threshold = cfg.get_float("compare", "tolerance", 1e-9)

        max_diff = 0.0
        n_points = 0
        count_mismatch = 0
        for size in sizes:
            for theta0 in thetas:
                params = ModelParams(alpha=alpha, size=size,
                                     variant=CouplingVariant(variant), energy_theta=theta0)
                for r in range(realizations):
                    disorder = sample_disorder(dist, size, master_seed, r)
                    sample = local_point_process(params, disorder, window_k,
                                                 cross_check=False)
                    op = build_hamiltonian(params, disorder)
                    half = window_k / (2.0 * math.sin(theta0)) * (1.0 + 10.0 / size)
                    e_lo = 2.0 * math.cos(theta0 + half / size)
                    e_hi = 2.0 * math.cos(theta0 - half / size)
                    oracle = bisect_eigenvalues(SpectralQuery(op, (e_lo, e_hi),
                                                              tolerance=1e-12))
                    pr = np.sort(2.0 * math.cos(sample.theta0)
                                 + sample.energy_points / size)
                    n_points += pr.size
                    if pr.size != oracle.size:
                        count_mismatch += 1
                        continue
                    if pr.size:
                        max_diff = max(max_diff, float(np.max(np.abs(pr - oracle))))
        status = "pass" if (count_mismatch == 0 and max_diff < threshold) else "fail"
        _write_json(out_dir / "compare.json", {
            "status": status,
            "max_abs_diff": max_diff,
            "points": n_points,
            "count_mismatches": count_mismatch,
            "tolerance": threshold,
        })
        return (f"compare-oracle: status={status} max|dE|={fmt(max_diff)} "
                f"over {n_points} points -> {out_dir / 'compare.json'}")

    _run_command("compare-oracle", config, out, seed, threads, body)


if __name__ == "__main__":
    main()
