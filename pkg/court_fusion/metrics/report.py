"""
Metrics report: one evaluation of a track file against ground truth.

Reports are stored as flat ``key=value`` lines so they can be diffed and
re-read by ``report``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from ..errors import EmptyInputError, InvariantViolation, ParseError
from ..ingestion.records import GroundTruthSequence
from ..tracking.tracker import TrackTable
from .matching import MatchingConfig, match_sequence
from .scores import hota, hota_sweep, id_recovery_rate, id_switches, identity_counts, mota


@dataclass
class MetricsReport:
    method: str = ""
    mota: float = 0.0
    idf1: float = 0.0
    hota: float = 0.0
    deta: float = 0.0
    assa: float = 0.0
    r_id: float = 1.0
    rid_no_events: bool = True
    n_re: int = 0
    n_dis: int = 0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    idsw: int = 0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    gt_count: int = 0
    pred_count: int = 0
    distance_threshold: float = 0.0
    hota_sweep: float | None = None
    deta_sweep: float | None = None
    assa_sweep: float | None = None

    def to_lines(self) -> list[str]:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return lines

    @classmethod
    def from_lines(cls, lines: Sequence[str], path: str | Path = "<report>") -> "MetricsReport":
        types = {f.name: f.type for f in fields(cls)}
        values: dict[str, object] = {}
        for line_no, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, raw = line.partition("=")
            if not sep or key not in types:
                raise ParseError(path, line_no, f"unexpected report line '{line}'")
            kind = types[key]
            try:
                if key == "method":
                    values[key] = raw
                elif kind == "bool":
                    values[key] = raw == "true"
                elif kind == "int":
                    values[key] = int(raw)
                else:
                    values[key] = float(raw)
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from exc
        return cls(**values)

    def write(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.to_lines()) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "MetricsReport":
        path = Path(path)
        return cls.from_lines(path.read_text(encoding="utf-8").splitlines(), path)

    def render_text(self) -> str:
        rid = "n/a (no events)" if self.rid_no_events else f"{self.r_id:.3f}"
        lines = [
            f"Method: {self.method or '-'}",
            f"  MOTA   {self.mota:.3f}   IDF1 {self.idf1:.3f}",
            f"  HOTA   {self.hota:.3f}   DetA {self.deta:.3f}   AssA {self.assa:.3f}",
            f"  R_ID   {rid}   (N_re {self.n_re} / N_dis {self.n_dis})",
            f"  FP {self.fp}  FN {self.fn}  IDSW {self.idsw}  GT {self.gt_count}  Pred {self.pred_count}",
            f"  distance threshold {self.distance_threshold:.3f} m",
        ]
        if self.hota_sweep is not None:
            lines.append(
                f"  HOTA sweep {self.hota_sweep:.3f}   DetA {self.deta_sweep:.3f}   AssA {self.assa_sweep:.3f}"
            )
        return "\n".join(lines)


def evaluate_sequence(
    gt: GroundTruthSequence,
    pred: TrackTable,
    cfg: MatchingConfig | None = None,
    method: str = "",
    sweep: bool = False,
) -> MetricsReport:
    """Run every metric from one set of per-frame matches."""
    if len(gt) == 0:
        raise EmptyInputError("cannot evaluate against empty ground truth")
    cfg = (cfg or MatchingConfig()).resolve(gt)
    seq = match_sequence(gt, pred, cfg)
    h, det_a, ass_a = hota(seq)
    if abs(h * h - det_a * ass_a) > 1e-9:
        raise InvariantViolation("HOTA^2 differs from DetA * AssA")
    ids = identity_counts(seq)
    recovery = id_recovery_rate(seq)
    report = MetricsReport(
        method=method,
        mota=mota(seq),
        idf1=ids.idf1,
        hota=h,
        deta=det_a,
        assa=ass_a,
        r_id=recovery.rate,
        rid_no_events=recovery.no_events,
        n_re=recovery.n_re,
        n_dis=recovery.n_dis,
        tp=seq.tp,
        fp=seq.fp,
        fn=seq.fn,
        idsw=id_switches(seq),
        idtp=ids.idtp,
        idfp=ids.idfp,
        idfn=ids.idfn,
        gt_count=seq.gt_count,
        pred_count=seq.pred_count,
        distance_threshold=seq.distance_threshold,
    )
    if sweep:
        report = dataclasses.replace(report, **dict(zip(
            ("hota_sweep", "deta_sweep", "assa_sweep"), hota_sweep(gt, pred, cfg).mean,
        )))
    return report


COMPARISON_COLUMNS = ("MOTA", "IDF1", "HOTA", "DetA", "AssA", "R_ID", "IDSW")


def comparison_table(reports: Sequence[MetricsReport]) -> str:
    """Side-by-side table, one row per method."""
    width = max([len("Method")] + [len(r.method) for r in reports])
    header = f"{'Method':<{width}}  " + "  ".join(f"{c:>6}" for c in COMPARISON_COLUMNS)
    rows = [header, "-" * len(header)]
    for r in reports:
        rid = "   n/a" if r.rid_no_events else f"{r.r_id:6.3f}"
        values = [f"{r.mota:6.3f}", f"{r.idf1:6.3f}", f"{r.hota:6.3f}", f"{r.deta:6.3f}",
                  f"{r.assa:6.3f}", rid, f"{r.idsw:6d}"]
        rows.append(f"{r.method:<{width}}  " + "  ".join(values))
    return "\n".join(rows)
