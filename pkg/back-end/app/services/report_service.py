import csv
import io
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from app.schemas import OutputFormat, RunReport, SweepReport

logger = logging.getLogger(__name__)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


class ReportService:
    """Writes run and sweep reports as JSON, with CSV tables on request"""

    def curve_csv(self, report: RunReport) -> str:
        return _csv_text(("N", "lhs", "rhs", "ratio"), ((r.N, r.lhs, r.rhs, r.ratio) for r in report.curve))

    def norms_csv(self, report: RunReport) -> str:
        return _csv_text(("depth", "squared", "value"), ((n.depth, n.squared, n.value) for n in report.norms))

    def verdicts_csv(self, report: RunReport) -> str:
        rows = [(key, "" if value is None else str(value).lower()) for key, value in report.verdicts.model_dump().items()]
        return _csv_text(("verdict", "value"), rows)

    def checks_csv(self, report: SweepReport) -> str:
        return _csv_text(("check", "passed", "failed"), ((t.name, t.passed, t.failed) for t in report.checks))

    def embedding_csv(self, report: SweepReport) -> str:
        return _csv_text(
            ("p", "depth", "samples", "max_ratio", "mean_ratio"),
            ((e.p, e.depth, e.samples, repr(e.max_ratio), repr(e.mean_ratio)) for e in report.embedding),
        )

    def _write(self, out_dir: Path, name: str, text: str) -> Path:
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_run(self, report: RunReport, out_dir: Union[str, Path], fmt: OutputFormat = OutputFormat.JSON) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        command = report.command.value
        paths = [self._write(out_dir, f"{command}.json", report.model_dump_json(indent=2))]
        if fmt == OutputFormat.CSV:
            paths.append(self._write(out_dir, f"{command}_verdicts.csv", self.verdicts_csv(report)))
            if report.curve:
                paths.append(self._write(out_dir, f"{command}_curve.csv", self.curve_csv(report)))
            if report.norms:
                paths.append(self._write(out_dir, f"{command}_norms.csv", self.norms_csv(report)))
        return paths

    def write_sweep(self, report: SweepReport, out_dir: Union[str, Path], fmt: OutputFormat = OutputFormat.JSON) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = [self._write(out_dir, "sweep.json", report.model_dump_json(indent=2))]
        if fmt == OutputFormat.CSV:
            paths.append(self._write(out_dir, "sweep_checks.csv", self.checks_csv(report)))
            if report.embedding:
                paths.append(self._write(out_dir, "sweep_embedding.csv", self.embedding_csv(report)))
        return paths


report_service = ReportService()
