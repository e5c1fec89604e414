"""Report emission: delimited records, structured summaries, and figures.

The ``report`` path writes a comma-separated table of per-replicate records,
a YAML summary, plot-ready (x, y) series, and PNG figures rendered from those
series.  Output bytes are identical across runs given identical inputs.
"""

from __future__ import annotations

import dataclasses
import typing
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import yaml

from .experiments import ConcentrationResult, ExperimentRecord, summarize_records

_FIELD_TYPES = typing.get_type_hints(ExperimentRecord)
_FIELD_NAMES = [f.name for f in dataclasses.fields(ExperimentRecord)]


def _cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records) -> str:
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    lines = [",".join(_FIELD_NAMES)]
    for rec in records:
        lines.append(",".join(_cell(getattr(rec, name)) for name in _FIELD_NAMES))
    return "\n".join(lines) + "\n"


def parse_records(text: str) -> list[ExperimentRecord]:
    """Inverse of :func:`records_to_csv`; floats round-trip bit-exactly."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("records table needs a header and at least one row")
    header = lines[0].split(",")
    if header != _FIELD_NAMES:
        raise ValueError(f"unexpected record columns: {header}")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        kwargs = {}
        for name, cell in zip(_FIELD_NAMES, cells):
            ftype = _FIELD_TYPES[name]
            if ftype is bool:
                kwargs[name] = cell == "1"
            elif ftype is int:
                kwargs[name] = int(cell)
            elif ftype is float:
                kwargs[name] = float(cell)
            else:
                kwargs[name] = cell
        out.append(ExperimentRecord(**kwargs))
    return out


def _series_csv(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(_cell(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _save_fig(fig, path: Path) -> None:
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def _inequality_figure(records, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    lhs = np.array([r.lhs_surrogate for r in records])
    rhs = np.array([r.rhs for r in records])
    event = np.array([r.tuning_dominates for r in records])
    ax.scatter(rhs[event], lhs[event], s=12, label="penalty dominates deviation")
    if np.any(~event):
        ax.scatter(rhs[~event], lhs[~event], s=12, marker="x", label="tuning event fails")
    lim = max(rhs.max(), lhs.max(), 1e-12) * 1.05
    ax.plot([0, lim], [0, lim], "k--", lw=1, label="lhs = rhs")
    ax.set_xlabel("oracle bound (rhs)")
    ax.set_ylabel("excess + l1 distance (lhs)")
    ax.set_title("Oracle inequality, per replicate")
    ax.legend()
    _save_fig(fig, path)


def _rate_figure(ns, med_lhs, mean_rn, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.loglog(ns, med_lhs, "o-", label="median lhs")
    ax.loglog(ns, mean_rn, "s-", label="mean r_n")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("value")
    ax.set_title("Rate behavior across sample sizes")
    ax.legend()
    _save_fig(fig, path)


def _tail_figure(thresholds, empirical, bound, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    positive = np.asarray(empirical) > 0
    ax.semilogy(thresholds, np.asarray(bound), "k-", label="sub-Gaussian bound")
    ax.semilogy(
        np.asarray(thresholds)[positive],
        np.asarray(empirical)[positive],
        "o",
        label="empirical tail",
    )
    ax.set_xlabel("deviation t")
    ax.set_ylabel("P{sample - mean >= t}")
    ax.set_title("Concentration of the deviation-ratio statistic")
    ax.legend()
    _save_fig(fig, path)


def emit_report(
    records,
    out_dir,
    prefix: str = "experiment",
    summary: dict | None = None,
    concentration: ConcentrationResult | None = None,
    figures: bool = True,
) -> list[Path]:
    """Write the records table, summary, plot series, and figures.

    Returns the list of files written.  Raises on empty records; identical
    inputs produce identical bytes.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    records_path = out / f"{prefix}_records.csv"
    records_path.write_text(records_to_csv(records), encoding="utf-8")
    written.append(records_path)

    summary = summarize_records(records) if summary is None else summary
    summary_path = out / f"{prefix}_summary.yaml"
    summary_path.write_text(yaml.safe_dump(summary, sort_keys=True), encoding="utf-8")
    written.append(summary_path)

    ns = sorted({r.n for r in records})
    if len(ns) > 1:
        med_lhs = [float(np.median([r.lhs_surrogate for r in records if r.n == n])) for n in ns]
        mean_rn = [float(np.mean([r.r_n for r in records if r.n == n])) for n in ns]
        rate_path = out / f"{prefix}_rate_curve.csv"
        rate_path.write_text(
            _series_csv({"n": np.array(ns, float), "median_lhs": np.array(med_lhs), "mean_rn": np.array(mean_rn)}),
            encoding="utf-8",
        )
        written.append(rate_path)
        if figures:
            fig_path = out / f"{prefix}_rate.png"
            _rate_figure(ns, med_lhs, mean_rn, fig_path)
            written.append(fig_path)

    if concentration is not None:
        tail_path = out / f"{prefix}_tail_curve.csv"
        tail_path.write_text(
            _series_csv(
                {
                    "t": concentration.curve_thresholds,
                    "empirical": concentration.curve_empirical,
                    "bound": concentration.curve_bound,
                }
            ),
            encoding="utf-8",
        )
        written.append(tail_path)
        if figures:
            fig_path = out / f"{prefix}_tail.png"
            _tail_figure(
                concentration.curve_thresholds,
                concentration.curve_empirical,
                concentration.curve_bound,
                fig_path,
            )
            written.append(fig_path)

    if figures:
        fig_path = out / f"{prefix}_inequality.png"
        _inequality_figure(records, fig_path)
        written.append(fig_path)
    return written
