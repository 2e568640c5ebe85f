"""Command-line pipeline: make-fixture -> fit-tails -> simulate -> value -> report.

Every command writes its outputs under a single --out directory with fixed
filenames plus a run manifest, so downstream steps and acceptance scripts
are path-stable. All randomness flows from one --seed per command.

Exit codes: 0 success, 2 usage/validation of arguments or unparseable
files, 3 fit failure, 4 data error.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, fixture, growthfit, revenue, scenario, tailfit, timeseries, valuation
from .errors import (
    ConfidenceFailureError,
    CoverageError,
    DegenerateInputError,
    FitFailureError,
    InsufficientDataError,
    NoDecayError,
    ParseError,
    ValidationError,
)
from .manifest import RunManifest

EXIT_USAGE = 2
EXIT_FIT_FAILURE = 3
EXIT_DATA_ERROR = 4

TAILS_FILENAME = "tails.csv"
SCENARIOS_FILENAME = "scenarios.csv"
BAND_FILENAME = "band.csv"
VALUATIONS_FILENAME = "valuations.csv"
SUMMARY_FILENAME = "summary.json"

DEFAULT_FIXTURE_CADENCE = 53  # fixture default only; real runs re-estimate tau


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _pipeline_command(fn):
    """Translate library errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as exc:
            _fail(EXIT_USAGE, f"parse error: {exc}")
        except FileNotFoundError as exc:
            _fail(EXIT_USAGE, f"missing file: {exc}")
        except (FitFailureError, NoDecayError, InsufficientDataError,
                ConfidenceFailureError) as exc:
            _fail(EXIT_FIT_FAILURE, str(exc))
        except (ValidationError, CoverageError, DegenerateInputError) as exc:
            _fail(EXIT_DATA_ERROR, str(exc))
        except ValueError as exc:
            _fail(EXIT_USAGE, str(exc))

    return wrapper


def _load_config_file(path):
    """Flat key=value file; keys mirror flag names (dashes or underscores)."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", line=lineno)
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _positive(name):
    def check(ctx, param, value):
        if value is not None and value <= 0:
            raise click.BadParameter(f"{name} must be positive")
        return value

    return check


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Flat key=value config file; flags take precedence.")
@click.pass_context
def main(ctx, config_path):
    """DAU-driven Monte Carlo discounted-cash-flow valuation pipeline."""
    if config_path:
        try:
            values = _load_config_file(config_path)
        except ParseError as exc:
            raise click.UsageError(f"bad config file: {exc}")
        ctx.default_map = {name: values for name in main.commands}


@main.command("make-fixture")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--games", default=20, show_default=True, callback=_positive("games"))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--cadence", default=DEFAULT_FIXTURE_CADENCE, show_default=True,
              callback=_positive("cadence"))
@_pipeline_command
def cmd_make_fixture(out, games, seed, cadence):
    """Generate a synthetic DAU catalog and financials with a truth sidecar."""
    out = _out_dir(out)
    dau_path, fin_path, truth_path = fixture.make_fixture(
        out, games=games, seed=seed, cadence_days=cadence
    )
    manifest = RunManifest(
        command="make-fixture",
        parameters={"games": games, "seed": seed, "cadence": cadence},
        outputs=[p.name for p in (dau_path, fin_path, truth_path)],
    )
    manifest.write(out)
    click.echo(f"wrote {dau_path} ({games} games), {fin_path}, {truth_path}")


@main.command("fit-tails")
@click.argument("dau_csv", type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--top", default=None, type=int, callback=_positive("top"),
              help="Keep only the N games with the highest peak DAU.")
@click.option("--allow-flat-fallback", is_flag=True,
              help="Extrapolate non-decaying games flat instead of failing.")
@_pipeline_command
def cmd_fit_tails(dau_csv, out, top, allow_flat_fallback):
    """Fit power-law decay tails to every game in a DAU catalog."""
    out = _out_dir(out)
    catalog = timeseries.load_catalog(dau_csv)
    selected = timeseries.select_top(catalog, top) if top else catalog
    templates = []
    for record in selected:
        try:
            t_min = tailfit.detect_tmin(record)
            tail = tailfit.fit_power_law(record, t_min)
            templates.append(tailfit.build_template(record, tail))
            click.echo(
                f"{record.game_id}: t_min={tail.t_min} gamma={tail.gamma:.4f} "
                f"r2={tail.r_squared:.4f}"
            )
        except (NoDecayError, InsufficientDataError):
            if not allow_flat_fallback:
                raise
            templates.append(tailfit.build_template(record, None))
            click.echo(f"{record.game_id}: no decay, flat fallback")
    tails_path = out / TAILS_FILENAME
    tailfit.write_tails_csv(templates, tails_path)
    manifest = RunManifest(
        command="fit-tails",
        parameters={"top": top, "allow_flat_fallback": allow_flat_fallback},
        outputs=[TAILS_FILENAME],
    )
    manifest.add_input(dau_csv)
    manifest.write(out)
    click.echo(f"wrote {tails_path} ({len(templates)} games)")


def _templates_from_files(dau_csv, tails_csv):
    catalog = timeseries.load_catalog(dau_csv)
    present = max(r.observed.end_day for r in catalog)
    tails = tailfit.read_tails_csv(tails_csv)
    by_id = {r.game_id: r for r in catalog}
    missing = sorted(set(tails) - set(by_id))
    if missing:
        raise ValidationError(f"tails reference unknown games: {missing}")
    templates = tuple(
        tailfit.build_template(by_id[game_id], tail)
        for game_id, tail in tails.items()
    )
    return templates, present


@main.command("simulate")
@click.argument("dau_csv", type=click.Path(dir_okay=False))
@click.argument("tails_csv", type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--tau", default=None, type=int, callback=_positive("tau"),
              help="Days between simulated launches; estimated from the data if omitted.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--scenarios", default=1000, show_default=True,
              callback=_positive("scenarios"))
@click.option("--horizon-years", default=20, show_default=True,
              callback=_positive("horizon-years"))
@_pipeline_command
def cmd_simulate(dau_csv, tails_csv, out, tau, seed, scenarios, horizon_years):
    """Monte Carlo ensemble of aggregate DAU paths from fitted templates."""
    out = _out_dir(out)
    templates, present = _templates_from_files(dau_csv, tails_csv)
    if tau is None:
        tau = scenario.estimate_tau(templates)
        click.echo(f"estimated tau = {tau} days")
    config = scenario.SimulationConfig(
        tau=tau, present=present, templates=templates,
        horizon_years=horizon_years, n_scenarios=scenarios, seed=seed,
    )
    ensemble = scenario.run_ensemble(config)
    scenario.write_scenarios_csv(ensemble, out / SCENARIOS_FILENAME)
    scenario.write_band_csv(ensemble, out / BAND_FILENAME)
    manifest = RunManifest(
        command="simulate",
        parameters={
            "tau": tau, "seed": seed, "scenarios": scenarios,
            "horizon_years": horizon_years, "present": present.isoformat(),
        },
        outputs=[SCENARIOS_FILENAME, BAND_FILENAME],
    )
    manifest.add_input(dau_csv)
    manifest.add_input(tails_csv)
    manifest.write(out)
    click.echo(f"wrote {out / SCENARIOS_FILENAME} ({scenarios} scenarios)")


@main.command("value")
@click.argument("scenarios_csv", type=click.Path(dir_okay=False))
@click.argument("financials_csv", type=click.Path(dir_okay=False))
@click.argument("dau_csv", type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--margin", default=0.15, show_default=True, callback=_positive("margin"))
@click.option("--discount", default=0.05, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--resamples", default=1000, show_default=True,
              callback=_positive("resamples"))
@_pipeline_command
def cmd_value(scenarios_csv, financials_csv, dau_csv, out, margin, discount, seed,
              resamples):
    """Discounted-cash-flow valuation distribution per revenue scenario."""
    out = _out_dir(out)
    catalog = timeseries.load_catalog(dau_csv)
    present = max(r.observed.end_day for r in catalog)
    first = min(r.observed.start_day for r in catalog)
    total_days = (present - first).days + 1
    dau_total = timeseries.aggregate(
        [r.observed for r in catalog], first, total_days
    )

    quarters = revenue.load_financials(financials_csv)
    annual = revenue.trailing_annual_revenue(quarters)
    points = revenue.revenue_per_dau(annual, dau_total)
    scenarios_params = revenue.build_scenarios(
        points, origin=annual[0][0], seed=seed, n_resamples=resamples
    )

    ensemble = scenario.read_scenarios_csv(scenarios_csv, start_day=present)
    horizon_years = (len(ensemble[0].dau) - 1) // scenario.DAYS_PER_YEAR
    cfg = valuation.ValuationConfig(
        profit_margin=margin, discount_rate=discount, horizon_years=horizon_years
    )

    t_offset = (present - scenarios_params.origin).days
    t_grid = np.arange(1, cfg.horizon_years * scenario.DAYS_PER_YEAR + 1) + t_offset
    ordered_curves = (
        valuation.curves_pointwise_ordered(scenarios_params.base,
                                           scenarios_params.high, t_grid)
        and valuation.curves_pointwise_ordered(scenarios_params.high,
                                               scenarios_params.extreme, t_grid)
    )
    if not ordered_curves:
        click.echo(
            "warning: refit revenue curves are not pointwise ordered over the "
            "valuation horizon; scenario value ordering is not guaranteed",
            err=True,
        )

    summary = []
    with open(out / VALUATIONS_FILENAME, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "revenue_case", "value_usd"])
        for case, params in scenarios_params.cases():
            dist = valuation.value_ensemble(
                ensemble, params, cfg, revenue_origin=scenarios_params.origin
            )
            for s, value in zip(ensemble, dist.scenario_values):
                writer.writerow([s.scenario_id, case, f"{value:.6f}"])
            summary.append(
                {
                    "case": case,
                    "K": params.K,
                    "median": dist.median,
                    "ci_low": dist.ci95[0],
                    "ci_high": dist.ci95[1],
                    "mean": dist.mean,
                    "p_exceeds_ipo": valuation.probability_exceeds(
                        dist, valuation.IPO_REFERENCE_VALUE_USD
                    ),
                }
            )
            click.echo(
                f"{case}: median {dist.median:.3e} USD, "
                f"95% CI [{dist.ci95[0]:.3e}; {dist.ci95[1]:.3e}]"
            )
    with open(out / SUMMARY_FILENAME, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    manifest = RunManifest(
        command="value",
        parameters={
            "margin": margin, "discount": discount, "seed": seed,
            "resamples": resamples, "horizon_years": horizon_years,
        },
        outputs=[VALUATIONS_FILENAME, SUMMARY_FILENAME],
    )
    for path in (scenarios_csv, financials_csv, dau_csv):
        manifest.add_input(path)
    manifest.write(out)


@main.command("report")
@click.argument("run_dir", type=click.Path(file_okay=False, exists=True))
@click.option("--json", "json_out", type=click.Path(dir_okay=False), default=None,
              help="Also write the recomputed summary to this path.")
@_pipeline_command
def cmd_report(run_dir, json_out):
    """Summarize a value run: per-case median, 95% interval and mean."""
    path = Path(run_dir) / VALUATIONS_FILENAME
    if not path.exists():
        raise FileNotFoundError(path)
    per_case = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["scenario_id", "revenue_case", "value_usd"]:
            raise ParseError("bad valuations header", line=1)
        for row in reader:
            per_case.setdefault(row["revenue_case"], []).append(float(row["value_usd"]))
    if not per_case:
        raise ValidationError(f"{path} holds no valuation rows")
    summary = []
    click.echo(f"{'case':<10}{'median':>14}{'ci_low':>14}{'ci_high':>14}{'mean':>14}{'P(>IPO)':>10}")
    for case, values in per_case.items():
        dist = valuation.distribution_from_values(values)
        p_ipo = valuation.probability_exceeds(dist, valuation.IPO_REFERENCE_VALUE_USD)
        summary.append(
            {
                "case": case,
                "median": dist.median,
                "ci_low": dist.ci95[0],
                "ci_high": dist.ci95[1],
                "mean": dist.mean,
                "p_exceeds_ipo": p_ipo,
            }
        )
        click.echo(
            f"{case:<10}{dist.median:>14.4e}{dist.ci95[0]:>14.4e}"
            f"{dist.ci95[1]:>14.4e}{dist.mean:>14.4e}{p_ipo:>10.3f}"
        )
    if json_out:
        with open(json_out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")


if __name__ == "__main__":
    main()
