"""CSV and Markdown rendering of experiment reports."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .experiment import BEAT_MARGIN, ExperimentReport

PERFORMANCE_COLUMNS = [
    "dataset", "model", "size", "avg", "min", "max", "sd", "f_measure", "auc",
    "pruning_level", "beats_rf",
]
PRUNING_COLUMNS = ["dataset", "max_pruning_level_outperforming_rf", "best_performer_size",
                   "best_performer_pruning_level", "best_performer_speedup"]
BIAS_VARIANCE_COLUMNS = ["dataset", "model", "size", "pruning_level", "bias", "variance",
                         "bias_beats_rf", "variance_beats_rf"]


def pct(x: float | None) -> str:
    """Rate in [0, 1] as a percentage with 2 decimals."""
    if x is None:
        return ""
    return "nan" if math.isnan(x) else f"{100 * x:.2f}"


def num(x: float | None) -> str:
    if x is None:
        return ""
    return "nan" if math.isnan(x) else f"{x:.2f}"


def _performance_rows(report: ExperimentReport) -> list[dict]:
    rows = []
    for ds in report.datasets:
        for r in ds.rows:
            m = r.metrics
            rows.append({
                "dataset": ds.name, "model": "LOFB-DRF", "size": str(r.k),
                "avg": pct(m.avg), "min": pct(m.min), "max": pct(m.max), "sd": pct(m.sd),
                "f_measure": num(m.f_measure), "auc": num(m.auc),
                "pruning_level": num(r.pruning_level), "beats_rf": str(int(r.beats_rf)),
            })
        rows.append({
            "dataset": ds.name, "model": "RF", "size": str(ds.parent_size),
            "avg": pct(ds.rf.avg), "min": "", "max": "", "sd": "",
            "f_measure": num(ds.rf.f_measure), "auc": num(ds.rf.auc),
            "pruning_level": num(0.0), "beats_rf": "",
        })
    return rows


def _pruning_rows(report: ExperimentReport) -> list[dict]:
    rows = []
    for ds in report.datasets:
        best = ds.best_row()
        rows.append({
            "dataset": ds.name,
            "max_pruning_level_outperforming_rf": num(ds.max_outperforming_pruning_level()),
            "best_performer_size": str(best.k),
            "best_performer_pruning_level": num(best.pruning_level),
            "best_performer_speedup": num(ds.parent_size / best.k),
        })
    return rows


def _bias_variance_rows(report: ExperimentReport) -> list[dict]:
    rows = []
    for ds in report.datasets:
        if not ds.bias_variance:
            continue
        rf = next(b for b in ds.bias_variance if b.model == "RF")
        for b in ds.bias_variance:
            is_rf = b.model == "RF"
            rows.append({
                "dataset": ds.name, "model": b.model, "size": str(b.size),
                "pruning_level": num(b.pruning_level), "bias": pct(b.bias), "variance": pct(b.variance),
                "bias_beats_rf": "" if is_rf else str(int(rf.bias - b.bias > BEAT_MARGIN)),
                "variance_beats_rf": "" if is_rf else str(int(rf.variance - b.variance > BEAT_MARGIN)),
            })
    return rows


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _md_table(header, rows) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def render_markdown(report: ExperimentReport) -> str:
    cfg = report.config
    out = [
        "# LOFB-DRF vs RF",
        "",
        f"Parent forest size {cfg.trees}, LOF neighbourhood {cfg.k_lof}, {cfg.runs} runs, "
        f"train fraction {cfg.train_fraction}, seed {cfg.seed}"
        + (", fixed split" if cfg.fixed_split else "")
        + ("; **NON-PAPER ranking: lowest weights selected**" if cfg.invert_ranking else "")
        + ".",
        "",
        "Accuracy columns are percentages; SD is the population standard deviation; "
        "F-measure is macro-averaged F1; AUC is one-vs-rest macro AUC on vote fractions. "
        "Bold AVG marks a child that beats the parent RF.",
    ]
    for ds in report.datasets:
        body = []
        for r in ds.rows:
            m = r.metrics
            avg = f"**{pct(m.avg)}**" if r.beats_rf else pct(m.avg)
            body.append([str(r.k), avg, pct(m.min), pct(m.max), pct(m.sd), num(m.f_measure), num(m.auc)])
        body.append([f"RF ({ds.parent_size})", pct(ds.rf.avg), "", "", "", num(ds.rf.f_measure), num(ds.rf.auc)])
        out += ["", f"## {ds.name} (n={ds.n})", ""]
        out += _md_table(["LOFB-DRF Size", "AVG", "MIN", "MAX", "SD", "Fmeasure", "AUC"], body)

    out += ["", "## Pruning level", ""]
    out += _md_table(
        ["Dataset", "Maximum pruning level beating RF", "Best performer size",
         "Best performer pruning level", "Speedup"],
        [[r[c] or "-" for c in PRUNING_COLUMNS] for r in _pruning_rows(report)],
    )
    bv = _bias_variance_rows(report)
    if bv:
        out += ["", "## Bias / variance (0/1 loss, percentages)", ""]
        out += _md_table(
            ["Dataset", "Model", "Size", "Pruning level", "Bias", "Variance"],
            [[r["dataset"], r["model"], r["size"], r["pruning_level"],
              f"**{r['bias']}**" if r["bias_beats_rf"] == "1" else r["bias"],
              f"**{r['variance']}**" if r["variance_beats_rf"] == "1" else r["variance"]] for r in bv],
        )
    return "\n".join(out) + "\n"


def emit_report(report: ExperimentReport, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    """Write the report files and return their paths.

    ``fmt`` is ``csv`` (performance.csv, pruning.csv, bias_variance.csv),
    ``markdown`` (report.md) or ``both``.
    """
    if fmt not in ("csv", "markdown", "both"):
        raise ValueError(f"unknown report format {fmt!r}")
    if not report.datasets or any(not ds.rows for ds in report.datasets):
        raise ValueError("report has no rows; refusing to write an empty report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    if fmt in ("csv", "both"):
        files["performance.csv"] = _csv_text(PERFORMANCE_COLUMNS, _performance_rows(report))
        files["pruning.csv"] = _csv_text(PRUNING_COLUMNS, _pruning_rows(report))
        bv = _bias_variance_rows(report)
        if bv:
            files["bias_variance.csv"] = _csv_text(BIAS_VARIANCE_COLUMNS, bv)
    if fmt in ("markdown", "both"):
        files["report.md"] = render_markdown(report)
    written = []
    for name, text in files.items():
        p = out_dir / name
        p.write_text(text, encoding="utf-8")
        written.append(p)
    return written
