"""Load experiment files, run them and write the artifacts."""
import hashlib
import logging
import os
from collections import namedtuple

import numpy as np
import pandas as pd
import toml
from marshmallow import ValidationError

import bgk
from app.config import Config
from app.schemas import ExperimentSchema, dump_manifest, dump_report
from bgk import (
    DensityField,
    SolverConfig,
    SpaceGrid,
    VelocityGrid,
    resolve_model,
    velocity_grid_for,
)
from bgk.errors import CheckFailure, ConfigError
from bgk.stochastic import ensemble, sample_shift, solve_pathwise_direct, solve_pathwise_shift
from bgk.solver import run
from bgk.verification import (
    calibrate_entropy_tolerance,
    check_comparison,
    check_contraction_pair,
    check_decay,
    check_defect_budget,
    check_defect_field,
    check_linf_bound,
    check_sign_preservation,
    entropy_residual,
    godunov_reference,
)

logger = logging.getLogger(__name__)

PAIR_CHECKS = {"contraction", "comparison"}

Experiment = namedtuple("Experiment", ["settings", "config", "rho0", "model"])
RunResult = namedtuple("RunResult", ["out_dir", "artifacts", "failed_checks"])


def parse_override(override: str) -> tuple[str, str, object]:
    """'section.key=value' with value read as a TOML literal, falling back to a bare string."""
    target, separator, raw = override.partition("=")
    section, dot, key = target.strip().partition(".")
    if not separator or not dot or not key:
        raise ConfigError(
            description=f"Override [{override}] must look like section.key=value",
            errors={"set": [override]},
        )
    try:
        value = toml.loads(f"value = {raw.strip()}")["value"]
    except (toml.TomlDecodeError, IndexError):
        value = raw.strip()
    return section, key, value


def load_experiment(config_file: str, overrides=()) -> dict:
    try:
        with open(config_file) as handle:
            raw = toml.load(handle)
    except toml.TomlDecodeError as err:
        raise ConfigError(description=f"Could not parse {config_file}: {err}")
    for override in overrides:
        section, key, value = parse_override(override)
        raw.setdefault(section, {})[key] = value
    try:
        return ExperimentSchema().load(raw)
    except ValidationError as err:
        raise ConfigError(description="Invalid experiment configuration.", errors=err.messages)


def initial_profile(section: dict, base_dir: str = "."):
    """Callable x -> ρ₀(x) for the [initial] section."""
    profile = section["profile"]
    if profile == "riemann":
        left, right, x0 = section["left"], section["right"], section["x0"]
        return lambda x: np.where(x < x0, left, right)
    if profile == "gaussian":
        center, width, height = section["center"], section["width"], section["height"]
        return lambda x: height * np.exp(-(((x - center) / width) ** 2))
    if profile == "bump":
        center, width, height = section["center"], section["width"], section["height"]

        def bump(x):
            s = (x - center) / width
            inside = np.abs(s) < 1.0
            safe = np.where(inside, s, 0.0)
            return np.where(inside, height * np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

        return bump
    if not section.get("path"):
        raise ConfigError(description="from-file profile needs initial.path", errors={"path": ["required"]})
    path = os.path.join(base_dir, section["path"])
    table = pd.read_csv(path)
    if not {"x", "rho"} <= set(table.columns):
        raise ConfigError(description=f"{path} must have columns x and rho", errors={"path": [path]})
    return lambda x: np.interp(x, table["x"].to_numpy(), table["rho"].to_numpy(), left=0.0, right=0.0)


def build_experiment(settings: dict, base_dir: str = ".") -> Experiment:
    model = resolve_model(**settings["model"])
    grid, solver = settings["grid"], settings["solver"]
    space = SpaceGrid(grid["x_min"], grid["x_max"], grid["nx"])
    rho0 = DensityField.from_function(space, initial_profile(settings["initial"], base_dir))
    if grid["v_max"] is not None:
        velocity = VelocityGrid.symmetric(grid["v_max"], grid["nv"])
    else:
        bound = rho0.linf_norm()
        if PAIR_CHECKS & set(settings["checks"]["run"]):
            bound += settings["checks"]["comparison_offset"]
        velocity = velocity_grid_for(bound, model.forcing, solver["t_final"], grid["nv"])
    config = SolverConfig(
        space=space,
        velocity=velocity,
        flux=model.flux,
        forcing=model.forcing,
        eps=solver["eps"],
        t_final=solver["t_final"],
        dt=solver["dt"],
        cfl_target=solver["cfl"],
        record_every=solver["record_every"],
        char_substeps=solver["char_substeps"],
        boundary=solver["boundary"],
        splitting=solver["splitting"],
    )
    return Experiment(settings=settings, config=config, rho0=rho0, model=model)


def _raised_copy(rho0: DensityField, offset: float) -> DensityField:
    """ρ₀ + offset on the cells where ρ₀ is nonzero, so supports stay put."""
    return DensityField(space=rho0.space, values=rho0.values + offset * (rho0.values != 0))


def run_checks(experiment: Experiment, trajectory) -> dict:
    """Named checks from the [checks] section, keyed by check name."""
    config, rho0, model = experiment.config, experiment.rho0, experiment.model
    names = experiment.settings["checks"]["run"]
    reports = {}
    other = None
    if PAIR_CHECKS & set(names):
        other = run(config, _raised_copy(rho0, experiment.settings["checks"]["comparison_offset"]), label="pair")
    for name in names:
        if name == "sign":
            reports[name] = check_sign_preservation(trajectory)
        elif name == "linf":
            reports[name] = check_linf_bound(trajectory, model.forcing)
        elif name == "defect":
            reports[name] = check_defect_field(trajectory, config.defect_tol)
        elif name == "defect_budget":
            reports[name] = check_defect_budget(trajectory, model.forcing)
        elif name == "contraction":
            reports[name] = check_contraction_pair(trajectory, other, model.forcing)
        elif name == "comparison":
            reports[name] = check_comparison(trajectory, other)
        elif name == "decay":
            reports[name] = check_decay(trajectory, model.forcing, "1")
        elif name == "entropy":
            reference = godunov_reference(model.flux, model.forcing, rho0, t_final=config.t_final, boundary=config.boundary)
            calibration = entropy_residual(reference, model.flux, model.forcing)
            tol = calibrate_entropy_tolerance(calibration, config.space.dx, config.time_grid[1], config.eps)
            reports[name] = entropy_residual(trajectory, model.flux, model.forcing, tol=tol)
    return reports


def _config_digest(config_file: str, overrides) -> str:
    digest = hashlib.sha256()
    with open(config_file, "rb") as handle:
        digest.update(handle.read())
    for override in overrides:
        digest.update(b"\0" + override.encode())
    return digest.hexdigest()


def _write(path: str, text: str, artifacts: list, out_dir: str):
    with open(path, "w") as handle:
        handle.write(text)
    artifacts.append(os.path.relpath(path, out_dir))
    logger.info(f"Wrote {path}")


def _write_csv(frame: pd.DataFrame, path: str, artifacts: list, out_dir: str):
    frame.to_csv(path, index=False, float_format=Config.FLOAT_FORMAT)
    artifacts.append(os.path.relpath(path, out_dir))
    logger.info(f"Wrote {path}")


def snapshot_table(trajectory) -> pd.DataFrame:
    """Long table of (t, x, rho), one block of n_x rows per snapshot."""
    x = trajectory.space.centers
    return pd.DataFrame(
        {
            "t": np.repeat(trajectory.times, x.size),
            "x": np.tile(x, len(trajectory)),
            "rho": trajectory.densities.ravel(),
        }
    )


def run_experiment(config_file: str, out_dir: str = None, seed: int = None, overrides=()) -> RunResult:
    """Run one experiment file; raises CheckFailure after writing every artifact if a check fails."""
    settings = load_experiment(config_file, overrides)
    experiment = build_experiment(settings, os.path.dirname(os.path.abspath(config_file)))
    config, rho0, model = experiment.config, experiment.rho0, experiment.model
    stochastic = settings["stochastic"]
    seed = stochastic["seed"] if seed is None else seed
    out_dir = out_dir or Config.OUTPUT_DIR
    os.makedirs(out_dir, exist_ok=True)
    artifacts = []

    logger.info(f"Running {config_file} into {out_dir}")
    if stochastic["n_paths"] == 0 or model.noise.is_zero:
        trajectory = run(config, rho0, label=os.path.basename(config_file))
    else:
        n_steps, dt = config.time_grid
        shift = sample_shift(model.noise, seed, dt if n_steps else 1.0, config.t_final)
        if stochastic["scheme"] == "shift":
            trajectory = solve_pathwise_shift(config, rho0, shift, mode=stochastic["mode"])
        else:
            trajectory = solve_pathwise_direct(config, rho0, shift, mode=stochastic["mode"])
        path_frame = pd.DataFrame({"t": shift.times, "w": shift.wiener.samples, "m": shift.values})
        _write_csv(path_frame, os.path.join(out_dir, "path.csv"), artifacts, out_dir)
        if stochastic["n_paths"] > 1:
            stats = ensemble(
                config,
                rho0,
                model.noise,
                stochastic["n_paths"],
                seed,
                scheme=stochastic["scheme"],
                mode=stochastic["mode"],
                max_workers=Config.MAX_WORKERS,
            )
            x = config.space.centers
            mean_frame = pd.DataFrame(
                {
                    "t": np.repeat(stats.times, x.size),
                    "x": np.tile(x, stats.times.size),
                    "mean": stats.mean.ravel(),
                    "variance": stats.variance.ravel(),
                }
            )
            norm_frame = pd.DataFrame({"t": stats.times, "mean_l1": stats.mean_l1, "mean_linf": stats.mean_linf})
            _write_csv(mean_frame, os.path.join(out_dir, "ensemble.csv"), artifacts, out_dir)
            _write_csv(norm_frame, os.path.join(out_dir, "ensemble_norms.csv"), artifacts, out_dir)

    _write_csv(snapshot_table(trajectory), os.path.join(out_dir, "snapshots.csv"), artifacts, out_dir)
    _write_csv(trajectory.norms(), os.path.join(out_dir, "norms.csv"), artifacts, out_dir)

    failed = []
    reports = run_checks(experiment, trajectory)
    if reports:
        os.makedirs(os.path.join(out_dir, "reports"), exist_ok=True)
    for name, report in reports.items():
        if not report.passed:
            failed.append(name)
        path = os.path.join(out_dir, "reports", f"{name}.json")
        _write(path, dump_report(name, report, report.passed), artifacts, out_dir)

    manifest = {
        "version": bgk.__version__,
        "config_file": os.path.basename(config_file),
        "config_sha256": _config_digest(config_file, overrides),
        "overrides": list(overrides),
        "seed": seed,
        "experiment": settings,
        "artifacts": sorted(artifacts),
    }
    _write(os.path.join(out_dir, "manifest.json"), dump_manifest(manifest), artifacts, out_dir)

    if failed:
        raise CheckFailure(
            description=f"Checks failed: {', '.join(failed)}",
            errors={name: ["failed"] for name in failed},
        )
    return RunResult(out_dir=out_dir, artifacts=artifacts, failed_checks=failed)
