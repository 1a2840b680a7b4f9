"""Command-line entry point.

Two subcommands::

    tricav simulate --scenario fig2 [--model full|effective|closed-form]
                    [--config FILE] [--set KEY=VALUE ...]
                    [--feedback none|sigma-x1|sigma-x2] [--feedback-channel LABEL]
                    [--initial-state LABEL] [--out DIR] [--dump-effective PATH]

    tricav sweep --scenario fig5|fig6|fig7 --out DIR [--jobs N]
                 [--config FILE] [--set KEY=VALUE ...] [--model ...]

Settings come from three layers, later wins: scenario defaults, ``--config``
file, ``--set`` flags.  Config files are flat ``key = value`` lines with
``#`` comments; the key set is closed (unknown keys are an error) so typos
fail loudly instead of silently running the defaults.

Exit codes: 0 on success, 1 when a run fails (singular reduction, unstable
integration), 2 for usage, config, or validation errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Mapping

from .dynamics import IntegrationError
from .effective import NearSingularError
from .model import ModelParams
from .scenarios import (
    FEEDBACK_CHOICES,
    MODEL_CHOICES,
    ScenarioSpec,
    SweepGrid,
    run_scenario,
    scenario_defaults,
    scenario_names,
    sweep,
    sweep_grid,
    sweep_names,
    write_csv,
)

__all__ = ["parse_config", "build_parser", "main", "run_scenario", "sweep", "write_csv"]

_PARAM_KEYS = ("g", "Omega", "omega", "Delta", "J", "delta", "kappa", "gamma")
_FLOAT_KEYS = _PARAM_KEYS + ("t_final", "step")
_INT_KEYS = ("record_every",)
_STR_KEYS = ("initial_state", "feedback", "feedback_channel")
CONFIG_KEYS = _FLOAT_KEYS + _INT_KEYS + _STR_KEYS


def _coerce(key: str, raw: str):
    """Validate and type one setting; raises ValueError with the key named."""
    if key not in CONFIG_KEYS:
        raise ValueError(
            f"unknown config key {key!r}; known keys: {', '.join(CONFIG_KEYS)}"
        )
    if key in _STR_KEYS:
        value = raw.strip()
        if key == "feedback" and value not in FEEDBACK_CHOICES:
            raise ValueError(
                f"feedback must be one of {', '.join(FEEDBACK_CHOICES)}, got {value!r}"
            )
        if not value:
            raise ValueError(f"{key} must not be empty")
        return value
    if key in _INT_KEYS:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{key} must be an integer, got {raw!r}") from None
        if value < 1:
            raise ValueError(f"{key} must be a positive integer, got {value}")
        return value
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{key} must be a number, got {raw!r}") from None
    if key in ("kappa", "gamma", "Omega", "omega") and value < 0:
        raise ValueError(f"{key} must be non-negative, got {value:g}")
    if key in ("g", "t_final", "step") and value <= 0:
        raise ValueError(f"{key} must be positive, got {value:g}")
    return value


def parse_config(path) -> dict[str, object]:
    """Read a flat ``key = value`` settings file.

    ``#`` starts a comment (whole-line or trailing); blank lines are skipped;
    a repeated key keeps its last value.  Keys outside :data:`CONFIG_KEYS`
    and out-of-range values raise ValueError naming the line.
    """
    settings: dict[str, object] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        try:
            settings[key.strip()] = _coerce(key.strip(), raw.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return settings


def _parse_set_flags(items) -> dict[str, object]:
    settings: dict[str, object] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        settings[key.strip()] = _coerce(key.strip(), raw.strip())
    return settings


def _split_settings(settings: Mapping[str, object]):
    params = {k: v for k, v in settings.items() if k in _PARAM_KEYS}
    other = {k: v for k, v in settings.items() if k not in _PARAM_KEYS}
    return params, other


def _rebuild_params(params: ModelParams, overrides: Mapping[str, object]) -> ModelParams:
    if not overrides:
        return params
    kwargs = dict(params.as_dict())
    # The engineered detuning depends on g, J, Delta; re-resolve it whenever
    # one of those moves and delta itself was not pinned explicitly.
    if "delta" not in overrides and any(k in overrides for k in ("g", "J", "Delta")):
        kwargs["delta"] = None
    kwargs.update(overrides)
    return ModelParams(**kwargs)


def _apply_settings(spec: ScenarioSpec, settings: Mapping[str, object]) -> ScenarioSpec:
    param_over, other = _split_settings(settings)
    fields: dict[str, object] = {}
    if param_over:
        fields["params"] = _rebuild_params(spec.params, param_over)
    for key in ("t_final", "step", "record_every", "initial_state"):
        if key in other:
            fields[key] = other[key]
    if "feedback" in other:
        generator = FEEDBACK_CHOICES[str(other["feedback"])]
        fields["feedback"] = generator
        if generator is None:
            fields["feedback_channel"] = None
    if "feedback_channel" in other:
        fields["feedback_channel"] = other["feedback_channel"]
    return replace(spec, **fields)


def _apply_sweep_settings(grid: SweepGrid, settings: Mapping[str, object]) -> SweepGrid:
    param_over, other = _split_settings(settings)
    axis_names = {name for name, _ in grid.axes}
    clash = axis_names & param_over.keys()
    if clash:
        raise ValueError(
            f"cannot override sweep axis value(s) {', '.join(sorted(clash))}; "
            "they are scanned by the grid"
        )
    fields: dict[str, object] = {}
    if param_over:
        base = dict(grid.base)
        base.update(param_over)
        fields["base"] = base
    for key in ("t_final", "step", "record_every", "initial_state"):
        if key in other:
            fields[key] = other[key]
    if "feedback" in other:
        generator = FEEDBACK_CHOICES[str(other["feedback"])]
        fields["feedback"] = generator
        if generator is None:
            fields["feedback_channel"] = None
    if "feedback_channel" in other:
        fields["feedback_channel"] = other["feedback_channel"]
    return replace(grid, **fields)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tricav",
        description="Dissipative preparation of a three-dimensional entangled "
        "state of two atoms in coupled bimode cavities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write its time series")
    sim.add_argument("--scenario", required=True, choices=scenario_names())
    sim.add_argument("--config", type=Path, help="flat key=value settings file")
    sim.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one setting (repeatable; wins over --config)",
    )
    sim.add_argument("--model", choices=tuple(MODEL_CHOICES), default="effective")
    sim.add_argument("--feedback", choices=tuple(FEEDBACK_CHOICES))
    sim.add_argument("--feedback-channel", metavar="LABEL")
    sim.add_argument("--initial-state", metavar="LABEL")
    sim.add_argument("--out", type=Path, help="directory for the CSV and run log")
    sim.add_argument(
        "--dump-effective",
        type=Path,
        metavar="PATH",
        help="also write the effective-model coefficient table",
    )

    sw = sub.add_parser("sweep", help="run a parameter grid and write the aggregate CSV")
    sw.add_argument("--scenario", required=True, choices=sweep_names())
    sw.add_argument("--out", type=Path, required=True)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--config", type=Path)
    sw.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE"
    )
    sw.add_argument("--model", choices=tuple(MODEL_CHOICES), default="effective")
    return parser


def _collect_settings(args) -> dict[str, object]:
    settings: dict[str, object] = {}
    if args.config is not None:
        settings.update(parse_config(args.config))
    settings.update(_parse_set_flags(args.overrides))
    return settings


def _cmd_simulate(args) -> None:
    spec = _apply_settings(scenario_defaults(args.scenario), _collect_settings(args))
    if args.feedback is not None:
        generator = FEEDBACK_CHOICES[args.feedback]
        channel = args.feedback_channel or spec.feedback_channel
        if generator is None:
            spec = replace(spec, feedback=None, feedback_channel=None)
        elif channel is None:
            raise ValueError("--feedback needs --feedback-channel LABEL")
        else:
            spec = replace(spec, feedback=generator, feedback_channel=channel)
    elif args.feedback_channel is not None:
        if spec.feedback is None:
            raise ValueError("--feedback-channel without --feedback has no effect")
        spec = replace(spec, feedback_channel=args.feedback_channel)
    if args.initial_state is not None:
        spec = replace(spec, initial_state=args.initial_state)

    traj, record = run_scenario(
        spec, model=args.model, out_dir=args.out, dump_effective=args.dump_effective
    )
    print(
        f"{spec.name} [{record.model}, {record.backend} kernel]: "
        f"fidelity_T1 = {traj.final('fidelity_T1'):.6f} at t = {spec.t_final:g}"
    )
    if record.csv_path:
        print(f"wrote {record.csv_path}")


def _cmd_sweep(args) -> None:
    grid = _apply_sweep_settings(sweep_grid(args.scenario), _collect_settings(args))
    csv_path = sweep(grid, args.out, jobs=args.jobs, model=args.model)
    print(f"wrote {csv_path} ({grid.size} grid points)")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            _cmd_simulate(args)
        else:
            _cmd_sweep(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NearSingularError, IntegrationError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
