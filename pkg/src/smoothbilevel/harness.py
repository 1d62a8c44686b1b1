"""Experiment harness: batches of synthetic instances swept over smoothing
kernels, with deterministic CSV/JSON reporting and the curve sampler.

results.csv carries one aggregate row per kernel in the fixed column order
    i, obj, sbkkt, mu_end, sparsity, ave_time_s, ite, success_pct
where the averages are taken over successful runs only (runs that stopped
on the SB-KKT criterion, not the mu floor).  report.json keeps the full
per-run records, including the outer-iteration history and medians next to
the means.  For a fixed config and seed the CSV is reproduced byte for
byte; wall-clock timing is read from an injectable timer so that even the
timing column is reproducible under a controlled clock.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .driver import OuterConfig, RunResult, run_algorithm1
from .kernels import KERNEL_IDS, make_kernel, make_smooth_abs
from .penalties import PENALTY_IDS, make_penalty
from .problem import derive_instance_seed, gen_synthetic, problem_from_instance
from .regularizer import RegSpec

__all__ = [
    "ExperimentConfig",
    "RunRow",
    "KernelSummary",
    "RunReport",
    "load_experiment_config",
    "run_experiment",
    "plot_smoothers",
    "CSV_HEADER",
]

CSV_HEADER = "i,obj,sbkkt,mu_end,sparsity,ave_time_s,ite,success_pct"

DEFAULT_KERNELS = ("rho1", "rho2", "rho3", "rho4", "rho6")


@dataclass(frozen=True)
class ExperimentConfig:
    """Batch description; field names double as the config-file keys."""

    n: int = 50
    m1: int = 100
    m2: int = 100
    num_instances: int = 5
    p: float = 0.5
    penalty: str = "psi1"
    penalty_a: float = 1.0
    kernels: tuple[str, ...] = DEFAULT_KERNELS
    seed: int = 0
    noise: float = 0.01
    jobs: int = 1
    outer: OuterConfig = field(default_factory=OuterConfig)

    def __post_init__(self):
        if self.penalty not in PENALTY_IDS:
            raise ValueError(f"unknown penalty id {self.penalty!r}")
        for kid in self.kernels:
            if kid not in KERNEL_IDS:
                raise ValueError(f"unknown kernel id {kid!r}")
        if self.num_instances < 1:
            raise ValueError("num_instances must be at least 1")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        object.__setattr__(self, "kernels", tuple(self.kernels))


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a JSON config whose keys mirror ExperimentConfig field names.

    The optional "outer" object mirrors OuterConfig.  Unknown keys are
    rejected with the offending key named.
    """
    data = json.loads(Path(path).read_text())
    return experiment_config_from_dict(data)


def experiment_config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    top_fields = {f.name for f in dataclasses.fields(ExperimentConfig)}
    outer_fields = {f.name for f in dataclasses.fields(OuterConfig)}
    kwargs = {}
    for key, value in data.items():
        if key == "outer":
            if not isinstance(value, dict):
                raise ValueError("config key 'outer' must be an object")
            for okey in value:
                if okey not in outer_fields:
                    raise ValueError(f"unknown config key: 'outer.{okey}'")
            kwargs["outer"] = OuterConfig(**value)
        elif key in top_fields:
            kwargs[key] = tuple(value) if key == "kernels" else value
        else:
            raise ValueError(f"unknown config key: {key!r}")
    return ExperimentConfig(**kwargs)


@dataclass(frozen=True)
class RunRow:
    """One (kernel, instance) run."""

    kernel: str
    instance: int
    seed: int
    obj: float
    sbkkt: float
    mu_end: float
    sparsity_pct: float
    time_s: float
    outer_iters: int
    success: bool
    termination: str
    history: tuple


@dataclass(frozen=True)
class KernelSummary:
    """Per-kernel aggregates; means and medians are over successes only."""

    kernel: str
    index: int
    n_success: int
    success_pct: float
    mean: dict
    median: dict


@dataclass
class RunReport:
    config: ExperimentConfig
    rows: list[RunRow]
    summaries: list[KernelSummary]
    results_csv: Optional[Path] = None
    report_json: Optional[Path] = None


def _run_single(
    config: ExperimentConfig, kernel_id: str, instance_index: int, seed: int, timer
) -> RunRow:
    instance = gen_synthetic(
        config.n, config.m1, config.m2, noise=config.noise, seed=seed, p=config.p
    )
    penalty = make_penalty(config.penalty, config.penalty_a)
    smooth = make_smooth_abs(make_kernel(kernel_id))
    problem = problem_from_instance(instance, penalty)
    spec = RegSpec(p=config.p, penalty=penalty, smooth=smooth)
    started = timer()
    result: RunResult = run_algorithm1(problem, spec, config.outer)
    elapsed = timer() - started
    history = tuple(
        dataclasses.asdict(record) for record in result.history
    )
    return RunRow(
        kernel=kernel_id,
        instance=instance_index,
        seed=seed,
        obj=result.obj,
        sbkkt=result.sbkkt.norm,
        mu_end=result.mu_end,
        sparsity_pct=result.sparsity_pct,
        time_s=elapsed,
        outer_iters=result.outer_iters,
        success=result.success,
        termination=result.termination,
        history=history,
    )


def _run_instance(
    config: ExperimentConfig, instance_index: int, seed: int, timer
) -> list[RunRow]:
    return [
        _run_single(config, kernel_id, instance_index, seed, timer)
        for kernel_id in config.kernels
    ]


def _summarize(config: ExperimentConfig, rows: list[RunRow]) -> list[KernelSummary]:
    summaries = []
    for kernel_id in config.kernels:
        kernel_rows = [row for row in rows if row.kernel == kernel_id]
        winners = [row for row in kernel_rows if row.success]
        fields = ("obj", "sbkkt", "mu_end", "sparsity_pct", "time_s", "outer_iters")

        def stat(fn, name):
            values = [float(getattr(row, name)) for row in winners]
            return float(fn(values)) if values else float("nan")

        summaries.append(
            KernelSummary(
                kernel=kernel_id,
                index=int(kernel_id[3:]),
                n_success=len(winners),
                success_pct=100.0 * len(winners) / max(len(kernel_rows), 1),
                mean={name: stat(np.mean, name) for name in fields},
                median={name: stat(np.median, name) for name in fields},
            )
        )
    return summaries


def format_results_csv(summaries: list[KernelSummary]) -> str:
    lines = [CSV_HEADER]
    for s in summaries:
        m = s.mean
        lines.append(
            ",".join(
                [
                    str(s.index),
                    format(m["obj"], ".6e"),
                    format(m["sbkkt"], ".6e"),
                    format(m["mu_end"], ".6e"),
                    format(m["sparsity_pct"], ".2f"),
                    format(m["time_s"], ".3f"),
                    format(m["outer_iters"], ".1f"),
                    format(s.success_pct, ".1f"),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def run_experiment(
    config: ExperimentConfig,
    out_dir: Union[str, Path, None] = None,
    timer: Callable[[], float] = time.perf_counter,
) -> RunReport:
    """Run all instances of the batch over all configured kernels.

    Per-instance seeds are derived deterministically from config.seed, so
    results do not depend on the degree of parallelism; jobs > 1 spreads
    instances (never a single solve) over worker processes.  When out_dir
    is given, writes results.csv and report.json there.
    """
    seeds = [
        derive_instance_seed(config.seed, index)
        for index in range(config.num_instances)
    ]
    if config.jobs > 1 and config.num_instances > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [
                pool.submit(_run_instance, config, index, seed, timer)
                for index, seed in enumerate(seeds)
            ]
            per_instance = [future.result() for future in futures]
    else:
        per_instance = [
            _run_instance(config, index, seed, timer)
            for index, seed in enumerate(seeds)
        ]

    # order rows kernel-major to match the summary table
    rows: list[RunRow] = []
    for kernel_pos in range(len(config.kernels)):
        for instance_rows in per_instance:
            rows.append(instance_rows[kernel_pos])
    summaries = _summarize(config, rows)
    report = RunReport(config=config, rows=rows, summaries=summaries)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        results_path = out / "results.csv"
        results_path.write_text(format_results_csv(summaries))
        payload = {
            "config": dataclasses.asdict(config),
            "rows": [dataclasses.asdict(row) for row in rows],
            "summaries": [dataclasses.asdict(s) for s in summaries],
        }
        report_path = out / "report.json"
        report_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        report.results_csv = results_path
        report.report_json = report_path
    return report


def plot_smoothers(
    mu: float,
    p: float,
    out_dir: Union[str, Path],
    render: bool = False,
    grid_points: int = 401,
) -> list[Path]:
    """Sample |x| and all six smoothing curves on [-2, 2] at the given mu.

    Writes curves_phi.csv (the curves themselves) and curves_phi_p.csv
    (their p-th powers against |x|^p); with render=True also saves PNG
    figures next to the CSVs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    xs = np.linspace(-2.0, 2.0, grid_points)
    columns = {"abs": np.abs(xs)}
    for kid in KERNEL_IDS:
        smooth = make_smooth_abs(make_kernel(kid))
        columns[f"phi{kid[3:]}"] = np.asarray(smooth.phi(mu, xs))

    written = []
    for suffix, transform in (("", lambda v: v), ("_p", lambda v: v ** p)):
        path = out / f"curves_phi{suffix}.csv"
        names = list(columns)
        header = "x," + ",".join(name + suffix for name in names)
        lines = [header]
        data = [transform(columns[name]) for name in names]
        for i, x in enumerate(xs):
            lines.append(
                format(x, ".17g")
                + ","
                + ",".join(format(col[i], ".17g") for col in data)
            )
        path.write_text("\n".join(lines) + "\n")
        written.append(path)

    if render:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        for suffix, transform, title in (
            ("", lambda v: v, f"smoothing curves, mu={mu:g}"),
            ("_p", lambda v: v ** p, f"p-th powers, mu={mu:g}, p={p:g}"),
        ):
            fig, ax = plt.subplots(figsize=(6, 4))
            for name, values in columns.items():
                ax.plot(xs, transform(values), label=name)
            ax.set_title(title)
            ax.legend(fontsize=8)
            fig.tight_layout()
            png = out / f"curves_phi{suffix}.png"
            fig.savefig(png, dpi=120)
            plt.close(fig)
            written.append(png)
    return written
