"""
Command-line front end for the frozen-ensemble toolkit
"""
import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from config.config import settings
from models.models import CheckResult, EnsembleSpec, ErrorReport, GridSpec, PolynomialFamily, RunConfig
from services.airy import default_evaluator
from services.dualbasis import build_dual_basis, dual_orthogonality_residual, eigenvector_matrix
from services.ensemblesim import (
    covariance_zscores,
    empirical_moments,
    mean_zscores,
    sample_chains,
    wlt_centering,
    wlt_scale,
)
from services.freezecov import (
    build_freezing_covariance,
    covariance_de_hermite,
    limit_mean,
    require_inverse_consistency,
    spectrum_check,
)
from services.orthopoly import polynomial_residual, zeros_and_weights
from services.softedge import (
    airy_normalization_check,
    edge_profile,
    edge_variances,
    plancherel_rotach_check,
    profile_trend,
    sigma_trend,
    variance_integral,
)
from utils.errors import DomainError, FreezeError, NumericFailure, ToleranceExceeded
from utils.serialization import load_config_file, matrix_rows, to_plain, write_csv, write_json, zeroset_payload
from utils.validators import max_relative_gap, parse_int_list

logger = logging.getLogger(__name__)

PUBLISHED_VARIANCES = {1: 0.834, 2: 0.582, 3: 0.472, 4: 0.407}
PUBLISHED_LAGUERRE = 0.417
TOLERANCE_FLAGS = ("tol_identity", "tol_inverse", "tol_orthogonality", "tol_spectrum", "tol_published")
DEFAULT_SAMPLING_BETA = 1e4


def _configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


# ---------------------------------------------------------------- arguments


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with flag values")
    common.add_argument("--ensemble", choices=["hermite", "laguerre", "jacobi-trig", "jacobi"])
    common.add_argument("-N", "--n-list", dest="n_list", help="N or a comma separated list of N")
    common.add_argument("--nu", type=float)
    common.add_argument("--alpha", type=float, help="Laguerre alpha, sets nu = alpha + 1")
    common.add_argument("--a", type=float)
    common.add_argument("--b", type=float)
    common.add_argument("-r", type=int, dest="r")
    common.add_argument("--r-max", type=int, dest="r_max")
    common.add_argument("--side", choices=["upper", "lower"])
    common.add_argument("--grid", help="min:max:step")
    common.add_argument("--t", type=float)
    common.add_argument("--beta", type=float, help="k for hermite, kappa otherwise")
    common.add_argument("--samples", type=int)
    common.add_argument("--burn-in", type=int, dest="burn_in")
    common.add_argument("--thinning", type=int)
    common.add_argument("--chains", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", type=Path)
    common.add_argument("--check", action="store_true", default=None)
    common.add_argument("--include-sampling", action="store_true", default=None, dest="include_sampling")
    for name in TOLERANCE_FLAGS:
        common.add_argument(f"--{name.replace('_', '-')}", type=float, dest=name)

    parser = argparse.ArgumentParser(prog="freeze-rmt", description="Frozen beta-ensemble numerics")
    commands = parser.add_subparsers(dest="command", required=True)
    for command, text in (
        ("zeros", "Zeros, Christoffel and dual Christoffel numbers"),
        ("covariance", "Inverse covariance, covariance and spectrum"),
        ("softedge", "Soft-edge variances and trend tables"),
        ("profile", "Edge eigenvector profiles against their Airy limit"),
        ("sample", "Metropolis-Hastings draws and moment summary"),
        ("airy", "Airy function table and zeros"),
        ("check-all", "Run every verification and write a pass/fail table"),
    ):
        commands.add_parser(command, parents=[common], help=text)
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over the config file over settings defaults"""
    merged: Dict[str, Any] = {"format": settings.default_format}
    config_path = args.config or (Path(settings.config_file) if settings.config_file else None)
    if config_path is not None:
        merged.update(load_config_file(config_path))

    flags = {key: value for key, value in vars(args).items() if value is not None and key != "config"}
    tolerances = dict(merged.pop("tolerances", {}) or {})
    for name in TOLERANCE_FLAGS:
        if name in merged:
            tolerances[name] = merged.pop(name)
        if name in flags:
            tolerances[name] = flags.pop(name)
    merged.update(flags)

    if "alpha" in merged:
        merged["nu"] = float(merged.pop("alpha")) + 1.0
    if isinstance(merged.get("n_list"), (str, int)):
        merged["n_list"] = parse_int_list(str(merged["n_list"]))
    merged["tolerances"] = tolerances
    return RunConfig.model_validate(merged)


def apply_tolerances(config: RunConfig) -> Dict[str, float]:
    """Set tolerance overrides on settings and return the values they replaced"""
    unknown = sorted(set(config.tolerances) - set(TOLERANCE_FLAGS))
    if unknown:
        raise DomainError(f"unknown tolerance {unknown[0]!r}")
    previous = {name: getattr(settings, name) for name in config.tolerances}
    for name, value in config.tolerances.items():
        setattr(settings, name, float(value))
    return previous


def default_output(config: RunConfig) -> RunConfig:
    """Data goes to <command>.<format> in the working directory when --out is absent"""
    if config.out is not None:
        return config
    return config.model_copy(update={"out": Path(f"{config.command}.{config.format}")})


def _sibling(out: Optional[Path], tag: str, suffix: Optional[str] = None) -> Optional[Path]:
    if out is None:
        return None
    return out.with_name(f"{out.stem}_{tag}{suffix or out.suffix}")


def _emit(config: RunConfig, out: Optional[Path], header: Sequence[str], rows: List[list], payload: Dict[str, Any]) -> None:
    if config.format == "json":
        write_json(out, payload)
    else:
        write_csv(out, header, rows)


def _require(quantity: str, value: float, tolerance: float) -> None:
    if not value <= tolerance:
        raise ToleranceExceeded(quantity, value, tolerance)


# ----------------------------------------------------------------- commands


def cmd_zeros(config: RunConfig) -> str:
    zerosets = [zeros_and_weights(config.ensemble_spec(n).family, n) for n in config.n_list]
    single = len(zerosets) == 1
    header = ["i", "z", "w", "w_star"] if single else ["n", "i", "z", "w", "w_star"]
    rows = []
    for zs in zerosets:
        for i in range(zs.n):
            row = [i + 1, zs.zeros[i], zs.christoffel[i], zs.dual_christoffel[i]]
            rows.append(row if single else [zs.n] + row)
    payload = zeroset_payload(zerosets[0]) if single else {"kind": "zerosets", "zerosets": zerosets}
    _emit(config, config.out, header, rows, payload)

    if config.check:
        for zs in zerosets:
            _require(f"polynomial residual N={zs.n}", polynomial_residual(zs), settings.tol_identity)
    return f"zeros: {zerosets[0].family.label()} N={config.n_list} ({len(rows)} rows)"


def cmd_covariance(config: RunConfig) -> str:
    rows: List[list] = []
    payload: Dict[str, Any] = {"kind": "covariance", "results": []}
    for n in config.n_list:
        fc = build_freezing_covariance(config.ensemble_spec(n))
        report = spectrum_check(fc)
        residual = require_inverse_consistency(fc, settings.tol_inverse)
        entry: Dict[str, Any] = {"n": n, "covariance": fc, "spectrum": report}
        for name, matrix in (("S", fc.s_matrix), ("Sigma", fc.sigma_matrix)):
            rows.extend([n] + row for row in matrix_rows(name, matrix))
        for i, (analytic, dense) in enumerate(zip(report.analytic_eigenvalues, report.dense_eigenvalues)):
            rows.append([n, "lambda", i + 1, 0, analytic])
            rows.append([n, "lambda_dense", i + 1, 0, dense])
        rows.append([n, "inverse_residual", 0, 0, residual])
        rows.append([n, "eigenvalue_error", 0, 0, report.max_eigenvalue_error])
        if config.ensemble == "hermite":
            delta = covariance_de_hermite(n) - fc.sigma_matrix
            entry["de_delta"] = delta
            rows.extend([n] + row for row in matrix_rows("de_delta", delta))
        payload["results"].append(entry)
        if config.check:
            _require(f"eigenvalue error N={n}", report.max_eigenvalue_error, settings.tol_spectrum)
    _emit(config, config.out, ["n", "quantity", "i", "j", "value"], rows, payload)
    return f"covariance: {config.ensemble} N={config.n_list}"


def cmd_softedge(config: RunConfig) -> str:
    variances = edge_variances(config.r_max)
    rows = [[v.r, v.value, v.error, v.de_value, v.laguerre_value if v.laguerre_value is not None else ""] for v in variances]
    _emit(
        config,
        config.out,
        ["r", "sigma2_max", "error", "de_value", "laguerre_value"],
        rows,
        {"kind": "softedge", "variances": variances},
    )

    if config.ensemble in ("hermite", "laguerre"):
        r = config.r if config.ensemble == "hermite" else 1
        trend = sigma_trend(config.ensemble, config.n_list, r=r, nu=config.nu)
        _emit(
            config,
            _sibling(config.out, "trend"),
            ["n", "scaled_sigma", "limit", "gap"],
            [[row.n, row.value, row.limit, row.gap] for row in trend],
            {"kind": "sigma_trend", "ensemble": config.ensemble, "r": r, "rows": trend},
        )

    if config.check:
        tolerance = settings.tol_published
        for v in variances:
            if v.r in PUBLISHED_VARIANCES:
                _require(f"sigma2_max,{v.r} gap", abs(v.value - PUBLISHED_VARIANCES[v.r]), tolerance)
            if v.laguerre_value is not None:
                _require("Laguerre variance gap", abs(v.laguerre_value - PUBLISHED_LAGUERRE), tolerance / 2.0)
        _require("quartic form gap", abs(variances[0].de_value - variances[0].value), tolerance)
    return f"softedge: sigma2_max,1 = {variances[0].value:.6f} for r = 1..{config.r_max}"


def cmd_profile(config: RunConfig) -> str:
    if config.ensemble not in ("hermite", "laguerre"):
        raise DomainError(f"profiles are available for hermite and laguerre, got {config.ensemble}")
    grid = (config.grid or GridSpec(start=0.0, stop=4.0, step=0.05)).values()
    rows, profiles = [], []
    for n in config.n_list:
        profile = edge_profile(config.ensemble, n, grid, r=config.r, alpha=config.nu - 1.0, side=config.side)
        profiles.append(profile)
        for y, f_n, f in zip(profile.grid, profile.f_n_values, profile.f_limit_values):
            rows.append([n, y, f_n, f, abs(f_n - f)])
    _emit(config, config.out, ["n", "y", "f_n", "f", "abs_diff"], rows, {"kind": "profile", "profiles": profiles})

    trend_rows, exponent = profile_trend(
        config.ensemble, config.n_list, r=config.r, alpha=config.nu - 1.0, y_max=float(grid[-1])
    )
    _emit(
        config,
        _sibling(config.out, "trend"),
        ["n", "sup_error"],
        [[row.n, row.sup_error] for row in trend_rows],
        {"kind": "profile_trend", "rows": trend_rows, "rate_exponent": exponent},
    )
    if config.check and len(trend_rows) > 1 and not -0.45 <= exponent <= -0.2:
        raise ToleranceExceeded("profile rate exponent distance from [-0.45, -0.2]", abs(exponent + 0.325) - 0.125, 0.0)
    return f"profile: {config.ensemble} r={config.r} N={config.n_list}, rate exponent {exponent:.3f}"


def cmd_sample(config: RunConfig) -> str:
    n = config.n_list[0]
    spec = config.ensemble_spec(n)
    beta_like = config.beta or DEFAULT_SAMPLING_BETA
    batch = sample_chains(
        spec,
        beta_like,
        chains=config.chains,
        seed=config.seed,
        t=config.t,
        samples=config.samples,
        burn_in=config.burn_in,
        thinning=config.thinning,
    )
    moments = empirical_moments(batch, wlt_centering(spec, beta_like, config.t), wlt_scale(spec, config.t, beta_like))
    sigma = build_freezing_covariance(spec).sigma_matrix
    z_cov = covariance_zscores(moments, sigma)
    z_mean = mean_zscores(moments, limit_mean(spec))

    write_csv(config.out, [f"x{i + 1}" for i in range(n)], batch.draws.tolist())
    write_json(
        _sibling(config.out, "summary", ".json"),
        {
            "kind": "sample_summary",
            "spec": spec,
            "beta_like": beta_like,
            "t": config.t,
            "seed": config.seed,
            "chains": config.chains,
            "acceptance_rate": batch.acceptance_rate,
            "step_size": batch.step_size,
            "burn_in": batch.burn_in,
            "thinning": batch.thinning,
            "tuning_warning": batch.tuning_warning,
            "moments": moments,
            "predicted_covariance": sigma,
            "covariance_zscores": z_cov,
            "mean_zscores": z_mean,
        },
    )
    worst = float(max(np.max(np.abs(z_cov)), np.max(np.abs(z_mean))))
    if config.check:
        _require("max |z| of sampled moments", worst, 4.0)
    return f"sample: {spec.kind} N={n} beta={beta_like:g} M={len(batch.draws)} acceptance {batch.acceptance_rate:.3f} max|z| {worst:.2f}"


def cmd_airy(config: RunConfig) -> str:
    evaluator = default_evaluator()
    xs = (config.grid or GridSpec(start=-10.0, stop=10.0, step=0.5)).values()
    values, derivatives = evaluator.ai(xs), evaluator.ai_prime(xs)
    _emit(
        config,
        config.out,
        ["x", "ai", "ai_prime"],
        [[x, v, d] for x, v, d in zip(xs, values, derivatives)],
        {"kind": "airy", "x": xs, "ai": values, "ai_prime": derivatives},
    )
    zeros = evaluator.airy_zeros(config.r_max)
    _emit(
        config,
        _sibling(config.out, "zeros"),
        ["r", "a_r", "ai_prime_at_a_r"],
        [[r + 1, a, evaluator.ai_prime(a)] for r, a in enumerate(zeros)],
        {"kind": "airy_zeros", "zeros": zeros},
    )
    if config.check:
        gaps = evaluator.continuity_gaps()
        _require("Airy branch gap", max(gaps.values()), 1e-10)
        _require("Airy ODE residual", evaluator.ode_residual(xs), 1e-8)
    return f"airy: {len(xs)} points, zeros a_1..a_{config.r_max}"


# --------------------------------------------------------------- check-all


def _check(name: str, tolerance: float, compute: Callable[[], float], detail: str = "") -> CheckResult:
    try:
        value = float(compute())
    except FreezeError as e:
        logger.error(f"Check {name} failed: {str(e)}")
        return CheckResult(name=name, passed=False, value=math.nan, tolerance=tolerance, detail=str(e))
    return CheckResult(name=name, passed=bool(value <= tolerance), value=value, tolerance=tolerance, detail=detail)


def _spectrum_error() -> float:
    specs = [EnsembleSpec(kind="hermite", n=n) for n in (2, 5, 10, 25, 50)]
    specs += [EnsembleSpec(kind="laguerre", n=n, nu=nu) for n in (2, 5, 10, 25, 50) for nu in (1.0, 2.5)]
    specs += [EnsembleSpec(kind="jacobi-trig", n=n, a=a, b=b) for n in (2, 5, 10, 25, 50) for a, b in ((1.0, 1.0), (0.5, 2.0))]
    return max(spectrum_check(build_freezing_covariance(spec)).max_eigenvalue_error for spec in specs)


def _inverse_error() -> float:
    worst = 0.0
    for kind in ("hermite", "laguerre", "jacobi-trig", "jacobi"):
        for n in (2, 10, 50):
            fc = build_freezing_covariance(EnsembleSpec(kind=kind, n=n, nu=1.5, a=1.0, b=1.0))
            worst = max(worst, spectrum_check(fc).inverse_residual)
    return worst


def _de_gap() -> float:
    return max(
        max_relative_gap(build_freezing_covariance(EnsembleSpec(kind="hermite", n=n)).sigma_matrix, covariance_de_hermite(n))
        for n in range(1, 13)
    )


def _dual_identity_error() -> float:
    families = [
        PolynomialFamily.hermite(),
        PolynomialFamily.laguerre(0.0),
        PolynomialFamily.laguerre(1.5),
        PolynomialFamily.jacobi(1.0, 0.0),
        PolynomialFamily.jacobi(-0.5, -0.5),
    ]
    worst = 0.0
    for family in families:
        for n in (2, 10, 50):
            zs = zeros_and_weights(family, n)
            dual = build_dual_basis(zs)
            t_matrix = eigenvector_matrix(dual, zs)
            worst = max(
                worst,
                dual_orthogonality_residual(dual, zs),
                float(np.max(np.abs(t_matrix @ t_matrix.T - np.eye(n)))),
            )
    return worst


def _plancherel_rotach_growth() -> float:
    n_list = [50, 100, 200, 400]
    worst = 0.0
    tables = [plancherel_rotach_check("hermite", n_list, r=r) for r in (1, 2, 3)]
    tables.append(plancherel_rotach_check("laguerre", n_list, r=1))
    for rows in tables:
        scaled = [row.scaled_residual for row in rows]
        worst = max(worst, scaled[-1] / max(scaled[:-1]))
    return worst


def _airy_error() -> float:
    evaluator = default_evaluator()
    return max(
        abs(evaluator.ai(0.0) - 0.3550280539) / 1e-9,
        abs(evaluator.airy_zero(1) + 2.3381) / 1e-3,
        evaluator.ode_residual(np.linspace(-20.0, 10.0, 301)) / 1e-8,
        airy_normalization_check(1) / 1e-8,
    )


def _decay_ratio() -> float:
    values = [variance_integral(r).value for r in range(1, 51)]
    if any(later >= earlier for earlier, later in zip(values, values[1:])):
        raise NumericFailure("edge variances are not strictly decreasing")
    return max(values[r - 1] * r ** (1.0 / 3.0) / math.log(r) for r in range(5, 51))


def _sampling_zscore() -> float:
    worst = 0.0
    for spec in (EnsembleSpec(kind="hermite", n=2), EnsembleSpec(kind="laguerre", n=2, nu=2.0)):
        batch = sample_chains(spec, DEFAULT_SAMPLING_BETA, seed=2024)
        moments = empirical_moments(batch, wlt_centering(spec, DEFAULT_SAMPLING_BETA), wlt_scale(spec, 1.0, DEFAULT_SAMPLING_BETA))
        sigma = build_freezing_covariance(spec).sigma_matrix
        worst = max(
            worst,
            float(np.max(np.abs(covariance_zscores(moments, sigma)))),
            float(np.max(np.abs(mean_zscores(moments, limit_mean(spec))))),
        )
    return worst


def run_checks(include_sampling: bool = False) -> List[CheckResult]:
    def variance_gap() -> float:
        variance_rows = edge_variances(4)
        gaps = [abs(v.value - PUBLISHED_VARIANCES[v.r]) for v in variance_rows]
        gaps.append(2.0 * abs(variance_rows[0].laguerre_value - PUBLISHED_LAGUERRE))
        gaps.append(abs(variance_rows[0].de_value - variance_rows[0].value))
        return max(gaps)

    def profile_exponent() -> float:
        n_list = [50, 100, 200, 400]
        _, hermite = profile_trend("hermite", n_list)
        _, laguerre = profile_trend("laguerre", n_list, y_max=3.0)
        return max(abs(exponent + 0.325) - 0.125 for exponent in (hermite, laguerre))

    rows = [
        _check("spectrum reproduction", settings.tol_spectrum, _spectrum_error),
        _check("inverse consistency", settings.tol_inverse, _inverse_error),
        _check("hermite formula cross-validation", settings.tol_inverse, _de_gap),
        _check("soft-edge constants", settings.tol_published, variance_gap),
        _check("profile convergence rate", 0.0, profile_exponent, "distance of the hermite and laguerre exponents from [-0.45, -0.2]"),
        _check("plancherel-rotach growth", 1.5, _plancherel_rotach_growth, "N |residual| at N=400 over its earlier maximum"),
        _check("airy module", 1.0, _airy_error, "largest error in units of its tolerance"),
        _check("dual-basis identities", settings.tol_identity, _dual_identity_error),
        _check("variance decay", 3.0, _decay_ratio, "max sigma2 r^(1/3) / log r over r = 5..50"),
    ]
    if include_sampling:
        rows.append(_check("monte carlo freezing limit", 4.0, _sampling_zscore, "max |z| of covariance and mean"))
    return rows


def cmd_check_all(config: RunConfig) -> str:
    results = run_checks(config.include_sampling)
    _emit(
        config,
        config.out,
        ["name", "passed", "value", "tolerance", "detail"],
        [[r.name, r.passed, r.value, r.tolerance, r.detail] for r in results],
        {"kind": "check_all", "results": results},
    )
    failed = [r for r in results if not r.passed]
    if failed:
        raise ToleranceExceeded(f"failed checks ({', '.join(r.name for r in failed)})", float(len(failed)), 0.0)
    return f"check-all: {len(results)} checks passed"


COMMANDS: Dict[str, Callable[[RunConfig], str]] = {
    "zeros": cmd_zeros,
    "covariance": cmd_covariance,
    "softedge": cmd_softedge,
    "profile": cmd_profile,
    "sample": cmd_sample,
    "airy": cmd_airy,
    "check-all": cmd_check_all,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    previous: Dict[str, float] = {}
    try:
        config = default_output(build_run_config(args))
        previous = apply_tolerances(config)
        summary = COMMANDS[config.command](config)
    except (DomainError, ValidationError) as e:
        return _report(e, 2)
    except NumericFailure as e:
        return _report(e, 3)
    except FreezeError as e:
        return _report(e, e.exit_code)
    finally:
        for name, value in previous.items():
            setattr(settings, name, value)

    print(f"{summary} -> {config.out}")
    return 0


def _report(error: Exception, exit_code: int) -> int:
    logger.error(f"{type(error).__name__}: {str(error)}")
    diagnostics = getattr(error, "diagnostics", {}) or {}
    if isinstance(error, ValidationError):
        diagnostics = {"errors": [item["msg"] for item in error.errors()]}
    report = ErrorReport(message=str(error), exit_code=exit_code, diagnostics=to_plain(diagnostics))
    print(json.dumps(report.model_dump(), default=str), file=sys.stderr)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
