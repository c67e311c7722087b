"""Export of evaluation reports, curve dumps, traces and run manifests."""

import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from .. import __version__
from ..evaluation.evaluate import REPORT_COLUMNS, EvalReport
from ..model.training import TrainTrace
from ..utils.config import (
    CURVES_CSV,
    MANIFEST_TEMPLATE,
    OUTPUT_DIR,
    REPORT_CSV,
    REPORT_TXT,
    TRACE_CSV,
)
from ..utils.errors import DataIOError
from ..utils.files import read_json, write_json


def manifest_filename(command: str) -> str:
    """Per-command manifest name, ``manifest.<command>.json``."""
    return MANIFEST_TEMPLATE.format(command=command)


class ReportExporter:
    """Write experiment outputs as CSV, text and JSON files."""

    def __init__(self, output_dir: str = OUTPUT_DIR):
        """
        Initialize the exporter.

        Args:
            output_dir: Directory to save exported files
        """
        self.output_dir = Path(output_dir)
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataIOError(
                f"Cannot create output directory {output_dir}: {e}"
            ) from e

    def export_frame(self, frame: pd.DataFrame, filename: str) -> str:
        """Write any table as CSV under the output directory; returns its path."""
        output_path = self.output_dir / filename
        output_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            frame.to_csv(output_path, index=False)
        except OSError as e:
            raise DataIOError(f"Failed to write {output_path}: {e}") from e
        return str(output_path)

    def export_report_csv(
        self, reports: List[EvalReport], filename: str = REPORT_CSV
    ) -> str:
        """
        Export run rows and one aggregate row per report.

        Args:
            reports: One report per model kind
            filename: Output filename

        Returns:
            Path to exported file
        """
        frames = [report.to_frame() for report in reports]
        if frames:
            frame = pd.concat(frames, ignore_index=True)
        else:
            frame = pd.DataFrame(columns=REPORT_COLUMNS)
        return self.export_frame(frame, filename)

    def export_report_txt(
        self, reports: List[EvalReport], filename: str = REPORT_TXT
    ) -> str:
        """
        Export a human-readable summary table.

        Returns:
            Path to exported file
        """
        lines = []
        for report in reports:
            first = report.rows[0]
            lines.append(
                f"{first.model_kind}  ({first.style} family {first.family}, "
                f"alpha={first.alpha:g}, grid={first.grid_size}, runs={report.runs})"
            )
            runs = pd.DataFrame(
                [
                    {
                        "run": r.run,
                        "seed": r.seed,
                        "sqrt_MISE": r.rmise,
                        "sqrt_DPE": r.rdpe,
                    }
                    for r in report.rows
                ]
            )
            lines.append(runs.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
            suffix = "  (single run)" if report.single_run else ""
            lines.append(
                f"  sqrt(MISE) = {report.rmise_mean:.4f} +/- {report.rmise_ci:.4f}   "
                f"sqrt(DPE) = {report.rdpe_mean:.4f} +/- {report.rdpe_ci:.4f}{suffix}"
            )
            lines.append("")
        output_path = self.output_dir / filename
        try:
            output_path.write_text("\n".join(lines), encoding="utf-8")
        except OSError as e:
            raise DataIOError(f"Failed to write {output_path}: {e}") from e
        return str(output_path)

    def export_curves(
        self, reports: List[EvalReport], filename: str = CURVES_CSV
    ) -> str:
        """
        Export ``sample_id,t,y_true,y_pred`` for the first run of each report.

        A ``model_kind`` column is added when several reports share the file.
        """
        frames = []
        for report in reports:
            dump = report.rows[0].curves
            if dump is None:
                continue
            frame = dump.to_frame()
            if len(reports) > 1:
                frame.insert(0, "model_kind", report.rows[0].model_kind)
            frames.append(frame)
        if not frames:
            frames = [pd.DataFrame(columns=["sample_id", "t", "y_true", "y_pred"])]
        return self.export_frame(pd.concat(frames, ignore_index=True), filename)

    def export_trace(self, trace: TrainTrace, filename: str = TRACE_CSV) -> str:
        """Export the per-epoch loss components."""
        return self.export_frame(trace.to_frame(), filename)

    def export_manifest(
        self,
        command: str,
        config: Dict[str, Any],
        config_hash: str,
        seed: int,
        outputs: Optional[List[str]] = None,
        extra: Optional[Dict[str, Any]] = None,
        filename: Optional[str] = None,
    ) -> str:
        """
        Export the run manifest: command, effective config, hash, seed and version.

        Output paths are stored relative to the output directory. ``extra`` keys
        (e.g. the hash of the dataset a model was trained on) are merged in.
        """
        relative = sorted(os.path.relpath(p, self.output_dir) for p in (outputs or []))
        payload = {
            "command": command,
            "code_version": __version__,
            "config_hash": config_hash,
            "seed": seed,
            "config": config,
            "outputs": relative,
        }
        payload.update(extra or {})
        target = self.output_dir / (filename or manifest_filename(command))
        return write_json(str(target), payload)

    def describe_output(self, filepath: str) -> Dict[str, Any]:
        """
        Summarize a written output for the listing printed after each command.

        CSV files report their data rows and columns, checkpoints their model
        kind and completed epochs, manifests the command that wrote them.

        Returns:
            Dictionary with ``filename``, ``format``, ``size_kb``, the
            format-specific fields and a one-line ``summary``

        Raises:
            DataIOError: If the file does not exist or cannot be read
        """
        path = Path(filepath)
        if not path.is_file():
            raise DataIOError(f"Output not found: {filepath}")
        size_kb = round(path.stat().st_size / 1024, 1)
        info: Dict[str, Any] = {
            "filename": path.name,
            "format": path.suffix.lower(),
            "size_kb": size_kb,
        }
        summary = f"{size_kb} KB"
        if info["format"] == ".csv":
            try:
                columns = len(pd.read_csv(path, nrows=0).columns)
                with open(path, encoding="utf-8") as handle:
                    rows = sum(1 for line in handle if line.strip()) - 1
            except (OSError, ValueError) as e:
                raise DataIOError(f"Failed to read {filepath}: {e}") from e
            info.update(rows=max(rows, 0), columns=columns)
            summary = f"{info['rows']} rows x {columns} columns, {summary}"
        elif info["format"] == ".json":
            payload = read_json(str(path))
            if "format_version" in payload and "kind" in payload:
                info.update(
                    kind=payload["kind"], epochs=payload.get("epochs_completed", 0)
                )
                summary = (
                    f"{info['kind']} checkpoint, {info['epochs']} epochs, {summary}"
                )
            elif "command" in payload:
                info["command"] = payload["command"]
                summary = f"{info['command']} manifest, {summary}"
        info["summary"] = summary
        return info
