"""Command-line interface: reconstruct, estimate, bench, validate, ensemble-info.

Exit codes: 0 success, 1 numerical failure, 2 usage/parse/coverage error.
Seeds are always explicit flags (or config-file entries); there is no
environment-variable fallback, so every stochastic run is reproducible from
its recorded invocation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .qcore import DensityMatrix, QcoreError, load_density_matrix, spawn_rng
from .operators import Observable, ObservableError, format_observable, \
    parse_observable, rotate_to_x_structure
from .ensembles import EnsembleError, ensemble_info, parse_ensemble_list, \
    parse_ensemble_spec
from .channels import ChannelError
from .shadow import CoverageError, combine_pses, ensemble_pse, \
    reconstruction_report, sampled_pse
from . import bench as bench_mod
from .bench import BenchError, DEFAULT_SHOT_GRID, DEFAULT_TRIALS, \
    bench_rows, load_fixture, measurement_models, write_csv
from .golden import run_validation

_USAGE_ERRORS = (EnsembleError, ObservableError, BenchError, CoverageError)
_NUMERICAL_ERRORS = (QcoreError, ChannelError)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Map domain exceptions onto the CLI exit-code contract."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _USAGE_ERRORS as exc:
            _fail(str(exc), 2)
        except _NUMERICAL_ERRORS as exc:
            _fail(str(exc), 1)
        except OSError as exc:
            _fail(str(exc), 1)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"cannot read config {path}: {exc}", 2)
    if not isinstance(doc, dict):
        _fail(f"config {path} must be a flat JSON object", 2)
    return doc


def _merge(config: dict, **flags):
    """Explicit CLI flags win; config file fills unset options."""
    out = {}
    for key, value in flags.items():
        out[key] = config.get(key) if value is None else value
    return out


def _require_seed(seed):
    if seed is None:
        _fail("a --seed is required for stochastic runs (no implicit default)", 2)
    return int(seed)


def _resolve_state(source: str) -> tuple[str, DensityMatrix]:
    if source is None:
        _fail("a --state (fixture name or density-matrix JSON file) is required", 2)
    if Path(source).exists():
        return Path(source).stem, load_density_matrix(source, relaxed=True)
    fixture = load_fixture(source)
    if fixture.state is None:
        raise BenchError(f"fixture {source!r} is an observable, not a state")
    return source, fixture.state


def _resolve_observable(source: str, n: int | None = None) -> tuple[str, Observable]:
    if source is None:
        _fail("an --obs (fixture name or 'coeff WORD; ...' string) is required", 2)
    if source in bench_mod._OBSERVABLE_SPECS:
        return source, load_fixture(source).observable
    obs = parse_observable(source, n)
    return format_observable(obs), obs


@click.group()
def main():
    """Partial shadow tomography toolkit for small qubit registers."""


@main.command()
@click.option("--state", default=None, help="Fixture name or density-matrix JSON file.")
@click.option("--sets", "sets_spec", default=None,
              help="Comma-separated ensemble specs; '|' joins zeta-A parts into unions.")
@click.option("--exact", is_flag=True, default=False,
              help="Exact diagonal-tomography mode (no sampling, no seed).")
@click.option("--shots", type=int, default=None, help="Shots per measurement set.")
@click.option("--seed", type=int, default=None)
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Write the reconstruction report as JSON.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON config; explicit flags override it.")
@_guarded
def reconstruct(state, sets_spec, exact, shots, seed, output, config_path):
    """Reconstruct a density matrix from one PSE per measurement set."""
    cfg = _load_config(config_path)
    opts = _merge(cfg, state=state, sets=sets_spec, shots=shots, seed=seed,
                  output=output)
    exact = exact or bool(cfg.get("exact", False))
    state_name, rho = _resolve_state(opts["state"])
    if opts["sets"] is None:
        _fail("--sets is required (e.g. 'zeta-X,zeta-A:1|zeta-A:2')", 2)
    ensembles = parse_ensemble_list(opts["sets"], rho.n)
    if exact:
        pses = [ensemble_pse(rho, ens) for ens in ensembles]
        shots_per_set = 0
        run_seed = opts["seed"]
    else:
        if opts["shots"] is None:
            _fail("sampled mode needs --shots (or use --exact)", 2)
        run_seed = _require_seed(opts["seed"])
        shots_per_set = int(opts["shots"])
        pses = [sampled_pse(rho, ens, shots_per_set, spawn_rng(run_seed, i))
                for i, ens in enumerate(ensembles)]
    estimate = combine_pses(pses)
    report = reconstruction_report(estimate, pses, shots_per_set, run_seed,
                                   reference=rho)
    report["state"] = state_name
    if opts["output"]:
        with open(opts["output"], "w") as fh:
            json.dump(report, fh, indent=1)
            fh.write("\n")
        click.echo(f"report written to {opts['output']}")
    click.echo(f"sets: {', '.join(p.ensemble_name for p in pses)}")
    click.echo(f"fidelity vs input: {report['fidelity_vs_reference']:.10f}")


@main.command()
@click.option("--state", default=None)
@click.option("--obs", "obs_spec", default=None,
              help="Fixture name or observable string 'coeff WORD; ...'.")
@click.option("--method", default="pqst",
              type=click.Choice(["pqst", "pqst-auto", "pqst-rotated",
                                 "pauli", "clifford", "mub"]))
@click.option("--exact", is_flag=True, default=False)
@click.option("--shots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@_guarded
def estimate(state, obs_spec, method, exact, shots, seed, config_path):
    """Estimate the expectation value of a Pauli-string observable."""
    cfg = _load_config(config_path)
    opts = _merge(cfg, state=state, obs=obs_spec, shots=shots, seed=seed)
    exact = exact or bool(cfg.get("exact", False))
    state_name, rho = _resolve_state(opts["state"])
    obs_name, obs = _resolve_observable(opts["obs"], rho.n)

    if method == "pqst-rotated":
        found = rotate_to_x_structure(obs)
        if found is None:
            raise CoverageError("no per-qubit rotation X-structures this observable")
        u, rotated, assignment = found
        rot_mat = u @ rho.mat @ u.conj().T
        rho = DensityMatrix((rot_mat + rot_mat.conj().T) / 2, herm_tol=1e-8,
                            trace_tol=5e-3, eig_floor=-5e-3)
        obs = rotated
        models_method = "pqst"
        method_label = f"pqst-rotated (per-qubit {','.join(assignment)})"
    else:
        models_method = method
        method_label = method

    models = measurement_models(rho, obs, models_method)
    if exact:
        ensembles = bench_mod._method_ensembles(models_method, obs)
        pses = [ensemble_pse(rho, ens) for ens in ensembles]
        from .shadow import estimate_observable
        value = estimate_observable(obs, pses)
        click.echo(f"method: {method_label} (exact)")
        click.echo(f"estimate: {value!r}")
    else:
        if opts["shots"] is None:
            _fail("sampled mode needs --shots (or use --exact)", 2)
        run_seed = _require_seed(opts["seed"])
        share = int(opts["shots"])
        rng = spawn_rng(run_seed, 0)
        value = 0.0
        variance = 0.0
        for model in models:
            counts = rng.multinomial(share, model.probs)
            part = float(counts @ model.values) / share
            second = float(counts @ (model.values**2)) / share
            value += part
            variance += max(0.0, second - part**2) / share
        click.echo(f"method: {method_label} (sampled, {share} shots per set, "
                   f"{len(models)} sets)")
        click.echo(f"estimate: {value!r}")
        click.echo(f"stderr: {variance**0.5!r}")


@main.command()
@click.option("--state", default=None)
@click.option("--obs", "obs_spec", default=None)
@click.option("--methods", default="pqst-auto,pauli,clifford,mub",
              help="Comma-separated subset of pqst-auto,pauli,clifford,mub.")
@click.option("--shots-grid", default=None,
              help="Comma-separated shot budgets (default 100,1000,10000,100000).")
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=1,
              help="Worker threads; never changes the results.")
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="CSV output path (required).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@_guarded
def bench(state, obs_spec, methods, shots_grid, trials, seed, workers, output,
          config_path):
    """Run the MSE-scaling benchmark and write one CSV row per (method, shots)."""
    cfg = _load_config(config_path)
    opts = _merge(cfg, state=state, obs=obs_spec, shots_grid=shots_grid,
                  trials=trials, seed=seed, output=output)
    state_name, rho = _resolve_state(opts["state"])
    obs_name, obs = _resolve_observable(opts["obs"], rho.n)
    run_seed = _require_seed(opts["seed"])
    if opts["output"] is None:
        _fail("--output CSV path is required", 2)
    grid = DEFAULT_SHOT_GRID if opts["shots_grid"] is None else \
        tuple(int(s) for s in str(opts["shots_grid"]).split(","))
    n_trials = DEFAULT_TRIALS if opts["trials"] is None else int(opts["trials"])
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    rows = bench_rows(state_name, rho, obs_name, obs, method_list, grid,
                      n_trials, run_seed, workers)
    write_csv(opts["output"], rows)
    click.echo(f"{len(rows)} rows written to {opts['output']}")


@main.command()
@click.option("--seed", type=int, default=2024, show_default=True,
              help="Base seed for the randomized closed-form checks.")
@_guarded
def validate(seed):
    """Run the golden closed-form and structural checks; nonzero exit on failure."""
    results = run_validation(seed)
    failures = 0
    for label, passed, resid in results:
        status = "PASS" if passed else "FAIL"
        click.echo(f"[{status}] {label} (max residual {resid:.3e})")
        failures += 0 if passed else 1
    click.echo(f"{len(results) - failures}/{len(results)} checks passed")
    if failures:
        sys.exit(1)


@main.command("ensemble-info")
@click.option("--ensemble", "spec", required=True,
              help="Ensemble spec, e.g. zeta-X, zeta-A:1,3, zeta-m:2, pauli, clifford, mub.")
@click.option("--n", "n_qubits", type=int, required=True)
@_guarded
def ensemble_info_cmd(spec, n_qubits):
    """Describe an ensemble: members, p, inverse, trusted element classes."""
    click.echo(ensemble_info(parse_ensemble_spec(spec, n_qubits)))


if __name__ == "__main__":
    main()
