"""Combine per-method metrics reports into one comparison table and CSV.

Reads every ``metrics_<method>.txt`` written by ``evaluate`` in the output
directory and writes:

  comparison.txt   side-by-side table plus one ``metric,value,...`` line per metric
  comparison.csv   one row per method (columns from ``ReportRow``)

Usage:
    python entry_points/generate_report.py
    python entry_points/generate_report.py --output-dir ./output --report-dir ./output/report
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from court_fusion.errors import DataError  # noqa: E402
from court_fusion.metrics.report import MetricsReport, comparison_table  # noqa: E402


# ── CSV schema ──────────────────────────────────────────────────────────────

@dataclass
class ReportRow:
    """One row of comparison.csv (one evaluated method)."""

    method: str = ""
    MOTA: float = 0.0
    IDF1: float = 0.0
    HOTA: float = 0.0
    DetA: float = 0.0
    AssA: float = 0.0
    R_ID: str = "n/a"
    N_re: int = 0
    N_dis: int = 0
    IDSW: int = 0
    FP: int = 0
    FN: int = 0
    GT: int = 0
    Pred: int = 0
    distance_threshold: float = 0.0
    source_file: str = ""


CSV_COLUMNS = [f.name for f in fields(ReportRow)]

# Metrics listed one per line under the table, in this order.
METRIC_LINES = ("MOTA", "IDF1", "HOTA", "DetA", "AssA", "R_ID", "IDSW")


# ── Helpers ─────────────────────────────────────────────────────────────────

def to_row(report: MetricsReport, source: Path | str = "") -> ReportRow:
    return ReportRow(
        method=report.method,
        MOTA=round(report.mota, 6),
        IDF1=round(report.idf1, 6),
        HOTA=round(report.hota, 6),
        DetA=round(report.deta, 6),
        AssA=round(report.assa, 6),
        R_ID="n/a" if report.rid_no_events else f"{report.r_id:.6f}",
        N_re=report.n_re,
        N_dis=report.n_dis,
        IDSW=report.idsw,
        FP=report.fp,
        FN=report.fn,
        GT=report.gt_count,
        Pred=report.pred_count,
        distance_threshold=round(report.distance_threshold, 6),
        source_file=str(source),
    )


def metric_lines(rows: list[ReportRow]) -> list[str]:
    """``metric,<method>,...`` header then one CSV-style line per metric."""
    lines = ["metric," + ",".join(r.method for r in rows)]
    for name in METRIC_LINES:
        lines.append(name + "," + ",".join(str(getattr(r, name)) for r in rows))
    return lines


def load_reports(output_dir: Path) -> list[tuple[Path, MetricsReport]]:
    paths = sorted(output_dir.glob("metrics_*.txt"))
    if not paths:
        raise DataError(f"no metrics_*.txt reports in {output_dir}; run evaluate first")
    return [(p, MetricsReport.read(p)) for p in paths]


# ── Main report generation ──────────────────────────────────────────────────

def generate_report(output_dir: Path, report_dir: Path | None = None) -> dict[str, Path]:
    """Write comparison.txt and comparison.csv; returns their paths."""
    output_dir = Path(output_dir)
    report_dir = Path(report_dir) if report_dir else output_dir
    loaded = load_reports(output_dir)
    reports = [r for _, r in loaded]
    rows = [to_row(r, p.name) for p, r in loaded]

    report_dir.mkdir(parents=True, exist_ok=True)
    text_path = report_dir / "comparison.txt"
    text_path.write_text(
        comparison_table(reports) + "\n\n" + "\n".join(metric_lines(rows)) + "\n", encoding="utf-8"
    )

    csv_path = report_dir / "comparison.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: getattr(row, col) for col in CSV_COLUMNS})

    print(f"Report generated: {text_path}")
    print(f"  Methods: {', '.join(r.method for r in rows)}")
    print(f"  CSV:     {csv_path}")
    return {"text": text_path, "csv": csv_path}


# ── CLI ─────────────────────────────────────────────────────────────────────

def main():
    """CLI entry point for report generation."""
    parser = argparse.ArgumentParser(
        description="Generate the method comparison table and CSV from evaluate output."
    )
    parser.add_argument(
        "--output-dir",
        type=Path,
        default=Path("./output"),
        help="Directory containing metrics_*.txt (default: ./output)",
    )
    parser.add_argument(
        "--report-dir",
        type=Path,
        default=None,
        help="Directory to write the report (default: the output directory)",
    )
    args = parser.parse_args()

    try:
        generate_report(args.output_dir, args.report_dir)
    except DataError as e:
        print(f"Error: {e}")
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
