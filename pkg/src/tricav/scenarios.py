"""Named simulation scenarios, parameter sweeps, and their file outputs.

A :class:`ScenarioSpec` pins everything one run needs — model parameters,
horizon, initial state, optional jump-conditioned feedback — so the CLI, the
test suite, and scripted studies all reproduce the same numbers.  The
single-run table covers the dissipation studies ``fig2``/``fig3``, the
feedback demonstration ``fig4``, and the mixed-rate benchmark ``fig8``; the
grid studies ``fig5``/``fig6`` (rate maps with/without feedback) and ``fig7``
(hop-strength spread) live in the sweep table.

Output contract: one CSV per run with columns ``t``, the observable labels in
order, and ``trace_drift``; aggregate sweep CSVs with one row per grid point
(axis columns, then ``fidelity_at_t``).  Values are formatted with ``%.12g``
so reruns are byte-identical.  Every run also appends a provenance line to
``runs.jsonl`` next to its CSV.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .dynamics import (
    FeedbackScheme,
    IntegrationError,
    IntegratorConfig,
    ObservableSet,
    Trajectory,
    build_feedback_unitary,
    evolve_with_feedback,
    suggest_step,
)
from .effective import (
    EffectiveModel,
    NearSingularError,
    closed_form_gamma,
    closed_form_kappa,
    dump_coefficients,
    reduce_effective,
)
from .kernels import backend
from .model import (
    CHANNEL_LABELS,
    ModelParams,
    build_H_full,
    build_collapse_channels,
    ground_state_vector,
)
from .space import build_state_space

__all__ = [
    "MODEL_CHOICES",
    "FEEDBACK_CHOICES",
    "ScenarioSpec",
    "SweepGrid",
    "scenario_defaults",
    "sweep_grid",
    "scenario_names",
    "sweep_names",
    "RunRecord",
    "run_scenario",
    "sweep",
    "write_csv",
]

# CLI token → provenance token recorded in runs.jsonl.
MODEL_CHOICES = {
    "full": "full",
    "effective": "effective_numeric",
    "closed-form": "effective_closed_form",
}
# CLI token → generator name used by build_feedback_unitary.
FEEDBACK_CHOICES = {"none": None, "sigma-x1": "sigma_x1", "sigma-x2": "sigma_x2"}

# Step default for the full model: resolves the fastest Bohr frequency
# (≈ J + δ + g) with a couple dozen points per period, which the accuracy
# checks in the test suite validate against step halving.
FULL_MODEL_STEP = 0.02
# Target number of CSV rows when record_every is not pinned.
SAMPLE_TARGET = 1000


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one reproducible run."""

    name: str
    description: str
    params: ModelParams
    t_final: float
    initial_state: str = "gagL"
    feedback: str | None = None  # "sigma_x1" | "sigma_x2"
    feedback_channel: str | None = None
    step: float | None = None  # None → heuristic
    record_every: int | None = None  # None → aim for ~SAMPLE_TARGET rows

    def __post_init__(self) -> None:
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if (self.feedback is None) != (self.feedback_channel is None):
            raise ValueError("feedback and feedback_channel must be given together")


def _single_runs() -> dict[str, ScenarioSpec]:
    return {
        "fig2": ScenarioSpec(
            name="fig2",
            description="fidelity growth under spontaneous emission only",
            params=ModelParams(Omega=0.01, omega=0.002, gamma=0.04, kappa=0.0),
            t_final=10_000.0,
        ),
        "fig3": ScenarioSpec(
            name="fig3",
            description="fidelity growth under cavity decay only",
            params=ModelParams(Omega=0.03, omega=0.0015, kappa=0.05, gamma=0.0),
            t_final=20_000.0,
        ),
        "fig4": ScenarioSpec(
            name="fig4",
            description="cavity decay with a jump-conditioned correction pulse",
            params=ModelParams(Omega=0.04, omega=0.002, kappa=0.1, gamma=0.0),
            t_final=20_000.0,
            feedback="sigma_x1",
            feedback_channel="kappa.cR1",
        ),
        "fig8": ScenarioSpec(
            name="fig8",
            description="both decay rates at realistic strengths",
            params=ModelParams(
                Omega=0.02, omega=0.008, kappa=2.65 / 750.0, gamma=3.5 / 750.0
            ),
            t_final=20_000.0,
        ),
    }


@dataclass(frozen=True)
class SweepGrid:
    """A cartesian grid of parameter overrides applied to a base run.

    ``base`` holds raw :class:`ModelParams` keyword arguments; the engineered
    detuning is left unset there so it is re-resolved at every grid point
    (it depends on J).  Axis order fixes both the iteration order and the
    aggregate CSV columns.
    """

    name: str
    description: str
    base: Mapping[str, float]
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    t_final: float
    initial_state: str = "gagL"
    feedback: str | None = None
    feedback_channel: str | None = None
    step: float | None = None
    record_every: int | None = None

    @property
    def size(self) -> int:
        return math.prod(len(values) for _, values in self.axes)

    def points(self) -> Iterator[dict[str, float]]:
        names = [name for name, _ in self.axes]
        for combo in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combo))

    def spec_for(self, point: Mapping[str, float]) -> ScenarioSpec:
        kwargs = dict(self.base)
        kwargs.update(point)
        tag = ",".join(f"{k}={v:g}" for k, v in point.items())
        return ScenarioSpec(
            name=f"{self.name}[{tag}]",
            description=self.description,
            params=ModelParams(**kwargs),
            t_final=self.t_final,
            initial_state=self.initial_state,
            feedback=self.feedback,
            feedback_channel=self.feedback_channel,
            step=self.step,
            record_every=self.record_every,
        )


_RATE_AXIS = tuple(round(0.01 * i, 10) for i in range(11))


def _sweeps() -> dict[str, SweepGrid]:
    return {
        "fig5": SweepGrid(
            name="fig5",
            description="late-time fidelity over the (kappa, gamma) plane",
            base={"Omega": 0.03, "omega": 0.006},
            axes=(("kappa", _RATE_AXIS), ("gamma", _RATE_AXIS)),
            t_final=60_000.0,
        ),
        "fig6": SweepGrid(
            name="fig6",
            description="the rate plane with the correction pulse active",
            base={"Omega": 0.03, "omega": 0.006},
            axes=(("kappa", _RATE_AXIS), ("gamma", _RATE_AXIS)),
            t_final=20_000.0,
            feedback="sigma_x1",
            feedback_channel="kappa.cR1",
        ),
        "fig7": SweepGrid(
            name="fig7",
            description="sensitivity of the late-time fidelity to the hop strength",
            base={
                "Omega": 0.02,
                "omega": 0.008,
                "kappa": 2.65 / 750.0,
                "gamma": 3.5 / 750.0,
            },
            axes=(("J", (5.0, 6.0, 7.0)),),
            t_final=20_000.0,
        ),
    }


def scenario_names() -> tuple[str, ...]:
    return tuple(_single_runs())


def sweep_names() -> tuple[str, ...]:
    return tuple(_sweeps())


def scenario_defaults(name: str) -> ScenarioSpec:
    """The pinned defaults of a single-run scenario."""
    table = _single_runs()
    if name in table:
        return table[name]
    if name in _sweeps():
        raise ValueError(f"{name!r} is a sweep; use the sweep command / sweep()")
    raise ValueError(f"unknown scenario {name!r}; known: {', '.join(table)}")


def sweep_grid(name: str) -> SweepGrid:
    """The pinned grid of a sweep scenario."""
    table = _sweeps()
    if name in table:
        return table[name]
    if name in _single_runs():
        raise ValueError(f"{name!r} is a single run; use the simulate command / run_scenario()")
    raise ValueError(f"unknown sweep {name!r}; known: {', '.join(table)}")


# ---------------------------------------------------------------------------
# model preparation


def _prepare(params: ModelParams, model: str):
    """Build (H, channels, source) for a model choice token.

    ``source`` is the object observables and initial states are built from:
    the :class:`StateSpace` for the full model, the :class:`EffectiveModel`
    otherwise.
    """
    if model not in MODEL_CHOICES:
        raise ValueError(
            f"unknown model {model!r}; choose from {', '.join(MODEL_CHOICES)}"
        )
    space = build_state_space(max_excitation=1, per_mode_cap=1)
    if model == "full":
        return build_H_full(params, space), build_collapse_channels(params, space), space
    if model == "effective":
        em = reduce_effective(params, space)
    else:  # closed-form
        if params.kappa > 0 and params.gamma > 0:
            raise ValueError(
                "the closed-form tables cover one dissipation type at a time; "
                "use --model effective when both kappa and gamma are nonzero"
            )
        if params.kappa > 0:
            em = closed_form_kappa(params, space)
        else:
            em = closed_form_gamma(params, space)
    return em.H_eff, em.channels, em


def _initial_density(source, label: str) -> np.ndarray:
    if isinstance(source, EffectiveModel):
        vec = source.ket(label)
    else:
        vec = ground_state_vector(source, label)
    return np.outer(vec, vec.conj())


def _resolve_config(spec: ScenarioSpec, model: str, h_op, channels) -> IntegratorConfig:
    step = spec.step
    if step is None:
        step = FULL_MODEL_STEP if model == "full" else suggest_step(h_op, channels)
    n_steps = max(1, int(math.ceil(spec.t_final / step - 1e-9)))
    rec = spec.record_every
    if rec is None:
        rec = max(1, round(n_steps / SAMPLE_TARGET))
    return IntegratorConfig(step=step, t_final=spec.t_final, record_every=rec)


# ---------------------------------------------------------------------------
# runs and records


@dataclass(frozen=True)
class RunRecord:
    """One provenance line in ``runs.jsonl``."""

    scenario: str
    model: str  # provenance token from MODEL_CHOICES
    params: Mapping[str, float]
    t_final: float
    step: float
    record_every: int
    initial_state: str
    feedback: str | None
    feedback_channel: str | None
    backend: str
    version: str
    wall_time_s: float
    csv_path: str | None
    csv_sha256: str | None
    timestamp: str
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _package_version() -> str:
    try:
        from importlib.metadata import version

        return version("tricav")
    except Exception:
        return "unknown"


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".12g")


def write_csv(path, header: Sequence[str], rows) -> str:
    """Write a deterministic CSV and return its SHA-256 hex digest.

    Numbers are rendered with ``%.12g`` and lines end with ``\\n``
    regardless of platform, so identical data gives identical bytes.
    """
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    data = ("\n".join(lines) + "\n").encode("ascii")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _trajectory_table(traj: Trajectory) -> tuple[list[str], Iterator[tuple]]:
    labels = list(traj.observables)
    header = ["t", *labels, "trace_drift"]
    columns = [traj.times, *(traj.observables[k] for k in labels), traj.trace_drift]
    return header, zip(*columns)


def _append_run_log(out_dir: Path, records: Sequence[RunRecord]) -> None:
    with open(out_dir / "runs.jsonl", "a", encoding="ascii") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")


def run_scenario(
    spec: ScenarioSpec | str,
    *,
    model: str = "effective",
    out_dir=None,
    dump_effective=None,
) -> tuple[Trajectory, RunRecord]:
    """Execute one scenario and (optionally) write its CSV and log line.

    ``spec`` may be a scenario name from the defaults table or a fully
    customized :class:`ScenarioSpec`.  When ``out_dir`` is given, the
    trajectory lands in ``<out_dir>/<name>.csv`` and a provenance record is
    appended to ``<out_dir>/runs.jsonl``.  ``dump_effective`` writes the
    effective-model coefficient table to the given path (effective models
    only).
    """
    if isinstance(spec, str):
        spec = scenario_defaults(spec)

    started = time.perf_counter()
    h_op, channels, source = _prepare(spec.params, model)

    if dump_effective is not None:
        if not isinstance(source, EffectiveModel):
            raise ValueError("coefficient dumps exist only for the effective models")
        dump_coefficients(source, dump_effective)

    if spec.feedback is not None:
        if spec.feedback_channel not in CHANNEL_LABELS:
            raise ValueError(
                f"unknown feedback channel {spec.feedback_channel!r}; "
                f"known labels: {', '.join(CHANNEL_LABELS)}"
            )
        unitary = build_feedback_unitary(spec.feedback, source)
        scheme = FeedbackScheme({spec.feedback_channel: unitary})
    else:
        scheme = FeedbackScheme.identity()

    observables = ObservableSet.standard(source)
    rho0 = _initial_density(source, spec.initial_state)
    config = _resolve_config(spec, model, h_op, channels)
    traj = evolve_with_feedback(h_op, channels, rho0, config, scheme, observables)
    wall = time.perf_counter() - started

    csv_path = None
    digest = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{spec.name}.csv"
        header, rows = _trajectory_table(traj)
        digest = write_csv(csv_path, header, rows)

    record = RunRecord(
        scenario=spec.name,
        model=MODEL_CHOICES[model],
        params=spec.params.as_dict(),
        t_final=spec.t_final,
        step=config.step,
        record_every=config.record_every,
        initial_state=spec.initial_state,
        feedback=spec.feedback,
        feedback_channel=spec.feedback_channel,
        backend=backend(),
        version=_package_version(),
        wall_time_s=round(wall, 6),
        csv_path=str(csv_path) if csv_path else None,
        csv_sha256=digest,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    if out_dir is not None:
        _append_run_log(out_dir, [record])
    return traj, record


def _sweep_point(grid: SweepGrid, point: Mapping[str, float], model: str):
    """Run one grid point; singular or unstable points become NaN rows."""
    spec = grid.spec_for(point)
    try:
        traj, record = run_scenario(spec, model=model, out_dir=None)
        return traj.final("fidelity_T1"), record
    except (NearSingularError, IntegrationError, np.linalg.LinAlgError) as exc:
        record = RunRecord(
            scenario=spec.name,
            model=MODEL_CHOICES[model],
            params=spec.params.as_dict(),
            t_final=spec.t_final,
            step=float("nan"),
            record_every=0,
            initial_state=spec.initial_state,
            feedback=spec.feedback,
            feedback_channel=spec.feedback_channel,
            backend=backend(),
            version=_package_version(),
            wall_time_s=0.0,
            csv_path=None,
            csv_sha256=None,
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            error=f"{type(exc).__name__}: {exc}",
        )
        return float("nan"), record


def sweep(
    grid: SweepGrid | str,
    out_dir,
    *,
    jobs: int = 1,
    model: str = "effective",
) -> Path:
    """Run every grid point and write the aggregate CSV.

    Points run in deterministic axis order.  A point whose reduction is
    singular (the rate-free corner of the rate maps) or whose propagation
    fails is recorded as ``nan`` with the error kept in ``runs.jsonl`` —
    the sweep itself still succeeds.  Returns the aggregate CSV path.
    """
    if isinstance(grid, str):
        grid = sweep_grid(grid)
    if jobs < 1:
        raise ValueError("jobs must be a positive integer")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    points = list(grid.points())
    if jobs == 1:
        results = [_sweep_point(grid, point, model) for point in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(
                pool.map(_sweep_point, itertools.repeat(grid), points, itertools.repeat(model))
            )

    axis_names = [name for name, _ in grid.axes]
    header = [*axis_names, "fidelity_at_t"]
    rows = [
        tuple(point[name] for name in axis_names) + (fid,)
        for point, (fid, _) in zip(points, results)
    ]
    csv_path = out_dir / f"{grid.name}.csv"
    write_csv(csv_path, header, rows)
    _append_run_log(out_dir, [record for _, record in results])
    return csv_path
