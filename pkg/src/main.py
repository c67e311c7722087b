"""Command-line entry point for the ContiVAE dose-response toolkit."""

import argparse
import glob
import itertools
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .baselines.mlp import MlpBaseline, fit_mlp, resume_mlp, save_mlp
from .data.curves import GroundTruthOracle
from .data.dataset import Dataset
from .data.generators import build_dataset
from .data.loaders import DatasetLoader, DatasetWriter, load_ground_truth
from .evaluation.evaluate import REPORT_COLUMNS, EvalRow, aggregate, evaluate_model
from .evaluation.predictors import (
    OraclePredictor,
    config_parameter_count,
    load_predictor,
    save_oracle_checkpoint,
    train_predictor,
)
from .evaluation.selection import cross_validate
from .export.exporters import ReportExporter, manifest_filename
from .model.checkpoint import resume_model, save_model
from .model.config import config_hash
from .model.contivae import init_model
from .model.training import TrainTrace, train
from .utils.config import (
    BEST_CONFIG_FILE,
    CHECKPOINT_FILE,
    SWEEP_CELLS_DIR,
    SWEEP_RUNS_CSV,
    SWEEP_SUMMARY_CSV,
    TRACE_CSV,
)
from .utils.errors import ContiVaeError, DataIOError, ValidationError
from .utils.experiment import (
    MODEL_CHOICES,
    SWEEP_AXES,
    ExperimentConfig,
    apply_overrides,
    load_experiment,
    model_config,
    run_seed,
    sweep_cell,
)
from .utils.files import ensure_dir, read_json, write_json
from .utils.log import setup_logging

logger = logging.getLogger(__name__)

SWEEP_KEY_COLUMNS = ["axis", "axis_value"]
CV_SCORES_CSV = "cv_scores.csv"


def dataset_hash(dataset: Dataset) -> str:
    return config_hash(dataset.settings.to_dict())


def _run_index(path: str) -> int:
    match = re.search(r"run_(\d+)", path)
    return int(match.group(1)) if match else 0


def checkpoint_paths(path: str) -> List[Tuple[int, str]]:
    """
    Resolve a checkpoint argument into ``(run, path)`` pairs.

    A directory yields every ``run_<r>/checkpoint.json`` below it in run order;
    a file yields itself as run 0.
    """
    if os.path.isdir(path):
        found = glob.glob(os.path.join(path, "run_*", CHECKPOINT_FILE))
        if not found and os.path.exists(os.path.join(path, CHECKPOINT_FILE)):
            found = [os.path.join(path, CHECKPOINT_FILE)]
        if not found:
            raise DataIOError(f"No checkpoints found under {path}")
        return sorted((_run_index(p), p) for p in found)
    if not os.path.exists(path):
        raise DataIOError(f"Checkpoint not found: {path}")
    return [(_run_index(path), path)]


def run_sweep_cell(
    cell: ExperimentConfig, value: float, cells_dir: str
) -> pd.DataFrame:
    """
    Train and evaluate one (axis value, model kind) cell over its repeat runs.

    Completed cells are read back from ``cells/<cell-hash>.csv``. A failing cell
    returns a single ``failed`` row carrying the error string and writes nothing.
    """
    cell_path = os.path.join(cells_dir, f"{cell.cell_hash()}.csv")
    if os.path.exists(cell_path):
        logger.info("Skipping completed cell %s", os.path.basename(cell_path))
        return pd.read_csv(
            cell_path, float_precision="round_trip", keep_default_na=False
        )

    kind = cell.model.kind
    try:
        dataset, oracle = build_dataset(cell.dataset)
        settings = cell.resolved_model()
        rows = []
        for r in range(cell.eval.repeat_runs):
            seed = run_seed(cell.seed, r)
            if kind == "oracle":
                predictor = OraclePredictor(oracle)
            else:
                config = model_config(
                    settings,
                    dataset.covariate_dim,
                    seed,
                    dataset.binary_covariates,
                    cell.eval.mc_samples,
                )
                predictor, _ = train_predictor(config, dataset)
            rows.append(
                evaluate_model(
                    predictor, dataset, oracle, cell.eval.grid_size, run=r, seed=seed
                )
            )
        frame = aggregate(rows).to_frame()
    except Exception as e:  # partial-failure policy: record and continue
        logger.error("Sweep cell %s=%s %s failed: %s", cell.sweep.axis, value, kind, e)
        failed = {column: None for column in REPORT_COLUMNS}
        failed.update({"row_type": "failed", "model_kind": kind})
        frame = pd.DataFrame([failed], columns=REPORT_COLUMNS)
        frame.insert(0, "axis_value", value)
        frame.insert(0, "axis", cell.sweep.axis)
        frame["error"] = f"{type(e).__name__}: {e}"
        return frame

    frame.insert(0, "axis_value", value)
    frame.insert(0, "axis", cell.sweep.axis)
    frame["error"] = ""
    ensure_dir(cells_dir)
    try:
        frame.to_csv(cell_path, index=False)
    except OSError as e:
        raise DataIOError(f"Failed to write {cell_path}: {e}") from e
    return frame


def concat_cell_frames(frames: Sequence[pd.DataFrame]) -> pd.DataFrame:
    """
    Stack sweep cell frames, keeping the column order of their union.

    Columns that are entirely empty in a frame (the metrics of a failed cell)
    are dropped from it first and come back as NaN, so the metric columns keep
    a float dtype.
    """
    columns = list(dict.fromkeys(c for frame in frames for c in frame.columns))
    trimmed = [frame.dropna(axis=1, how="all") for frame in frames]
    return pd.concat(trimmed, ignore_index=True).reindex(columns=columns)


class ExperimentRunner:
    """Runs one CLI command against an effective experiment config."""

    def __init__(self, config: ExperimentConfig, jobs: int = 1):
        """
        Initialize the runner.

        Args:
            config: Effective config (file plus CLI overrides)
            jobs: Worker processes for sweep cells
        """
        self.config = config
        self.jobs = max(1, int(jobs))
        self.exporter = ReportExporter(config.output_dir)

    def load_data(
        self, path: Optional[str], need_truth: bool = True
    ) -> Tuple[Dataset, Optional[GroundTruthOracle]]:
        """
        Load dataset files (and their ground truth) from ``path``.

        Args:
            path: Dataset directory or CSV; defaults to the output directory
            need_truth: Raise when the ground-truth sidecar is missing
        """
        path = path or self.config.output_dir
        print("Loading data...")
        dataset = DatasetLoader.load(path)
        oracle = load_ground_truth(path) if need_truth else None
        print(
            f"  Loaded {len(dataset)} rows, {dataset.covariate_dim} covariates "
            f"({dataset.train_idx.size} train / {dataset.test_idx.size} test)"
        )
        return dataset, oracle

    def finish(
        self, command: str, outputs: List[str], extra: Optional[Dict[str, Any]] = None
    ) -> List[str]:
        """Write the manifest and print what was produced."""
        manifest = self.exporter.export_manifest(
            command,
            self.config.to_dict(),
            self.config.hash(),
            self.config.seed,
            outputs,
            extra,
        )
        outputs = list(outputs) + [manifest]
        print(f"\n  Wrote {len(outputs)} files")
        for filepath in outputs:
            info = self.exporter.describe_output(filepath)
            print(f"    {os.path.relpath(filepath)}: {info['summary']}")
        return outputs

    def cmd_generate(self) -> List[str]:
        """Generate the dataset, its metadata and the ground-truth sidecar."""
        settings = self.config.dataset
        print(
            f"Generating {settings.style} family {settings.family} dataset "
            f"(n={settings.n}, alpha={settings.alpha:g})..."
        )
        dataset, oracle = build_dataset(settings)
        paths = DatasetWriter.write(dataset, oracle, self.config.output_dir)
        return self.finish("generate", list(paths.values()))

    def _train_run(
        self, dataset: Dataset, run: int, resume: bool
    ) -> Tuple[str, str]:
        settings = self.config.resolved_model()
        run_dir = ensure_dir(os.path.join(self.config.output_dir, f"run_{run}"))
        checkpoint = os.path.join(run_dir, CHECKPOINT_FILE)
        trace_path = os.path.join(run_dir, TRACE_CSV)
        seed = run_seed(self.config.seed, run)

        if settings.kind == "oracle":
            return save_oracle_checkpoint(checkpoint), ""

        config = model_config(
            settings,
            dataset.covariate_dim,
            seed,
            dataset.binary_covariates,
            self.config.eval.mc_samples,
        )
        resuming = resume and os.path.exists(checkpoint)
        if resume and not resuming:
            logger.info("No checkpoint at %s; training from scratch", checkpoint)

        if settings.kind == "mlp":
            model = resume_mlp(checkpoint, config) if resuming else MlpBaseline(config)
            trace = fit_mlp(model, dataset)
            save = save_mlp
        else:
            model = resume_model(checkpoint, config) if resuming else init_model(config)
            trace = train(model, dataset)
            save = save_model

        if resuming and os.path.exists(trace_path):
            previous = TrainTrace.from_frame(
                pd.read_csv(trace_path, float_precision="round_trip")
            )
            previous.extend(trace)
            trace = previous
        save(model, checkpoint)
        trace_file = ReportExporter(run_dir).export_trace(trace)
        print(f"  Run {run}: {model.epochs_completed} epochs, seed {seed}")
        return checkpoint, trace_file

    def cmd_train(
        self, dataset_path: Optional[str] = None, resume: bool = False
    ) -> List[str]:
        """
        Train one model per repeat run.

        Writes ``run_<r>/checkpoint.json`` and ``run_<r>/trace.csv``.
        """
        dataset, _ = self.load_data(dataset_path, need_truth=False)
        kind = self.config.model.kind
        print(f"Training {kind} ({self.config.eval.repeat_runs} runs)...")
        outputs = []
        for run in range(self.config.eval.repeat_runs):
            outputs.extend(p for p in self._train_run(dataset, run, resume) if p)
        return self.finish("train", outputs, {"dataset_hash": dataset_hash(dataset)})

    def _check_trained_on(self, checkpoint_arg: str, dataset: Dataset) -> None:
        manifest = os.path.join(checkpoint_arg, manifest_filename("train"))
        if not os.path.isdir(checkpoint_arg) or not os.path.exists(manifest):
            return
        trained_on = read_json(manifest).get("dataset_hash")
        if trained_on is not None and trained_on != dataset_hash(dataset):
            raise ValidationError(
                f"Checkpoints in {checkpoint_arg} were trained on a different dataset"
            )

    def cmd_evaluate(
        self, checkpoint: Optional[str] = None, dataset_path: Optional[str] = None
    ) -> List[str]:
        """Evaluate every run checkpoint and write report, summary and curves."""
        checkpoint = checkpoint or self.config.output_dir
        dataset, oracle = self.load_data(dataset_path)
        self._check_trained_on(checkpoint, dataset)

        print("Evaluating...")
        grid_size = self.config.eval.grid_size
        by_kind: Dict[str, List[EvalRow]] = {}
        for run, path in checkpoint_paths(checkpoint):
            predictor = load_predictor(path, oracle, self.config.eval.mc_samples)
            model = getattr(predictor, "model", None)
            expected = model.config.covariate_dim if model is not None else None
            if expected is not None and expected != dataset.covariate_dim:
                raise ValidationError(
                    f"{path} expects {expected} covariates, "
                    f"dataset has {dataset.covariate_dim}"
                )
            seed = model.config.seed if model is not None else 0
            row = evaluate_model(
                predictor, dataset, oracle, grid_size, run=run, seed=seed
            )
            by_kind.setdefault(row.model_kind, []).append(row)
            print(f"  Run {run} ({row.model_kind}): sqrt(MISE)={row.rmise:.4f}")

        reports = [aggregate(rows) for rows in by_kind.values()]
        outputs = [
            self.exporter.export_report_csv(reports),
            self.exporter.export_report_txt(reports),
            self.exporter.export_curves(reports),
        ]
        return self.finish("evaluate", outputs, {"dataset_hash": dataset_hash(dataset)})

    def cmd_sweep(self) -> List[str]:
        """
        Run the full (axis value x model kind) grid with repeat runs per cell.

        Writes ``sweep_runs.csv`` (run rows and failed cells) and
        ``sweep_summary.csv`` (one aggregate row per cell).
        """
        plan = self.config.sweep
        cells = [
            (value, sweep_cell(self.config, value, kind))
            for value in plan.values
            for kind in plan.models
        ]
        cells_dir = os.path.join(self.config.output_dir, SWEEP_CELLS_DIR)
        print(
            f"Sweeping {plan.axis} over {len(plan.values)} values x "
            f"{len(plan.models)} models ({len(cells)} cells, {self.jobs} jobs)..."
        )
        if self.jobs > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = [
                    pool.submit(run_sweep_cell, c, v, cells_dir) for v, c in cells
                ]
                frames = [future.result() for future in futures]
        else:
            frames = [run_sweep_cell(c, v, cells_dir) for v, c in cells]

        combined = concat_cell_frames(frames)
        failed = int((combined["row_type"] == "failed").sum())
        if failed:
            print(f"  {failed} of {len(cells)} cells failed; see the error column")
        runs = combined[combined["row_type"] != "aggregate"]
        summary = combined[combined["row_type"] == "aggregate"]
        outputs = [
            self.exporter.export_frame(runs, SWEEP_RUNS_CSV),
            self.exporter.export_frame(summary, SWEEP_SUMMARY_CSV),
        ]
        return self.finish("sweep", outputs)

    def cv_candidates(self, covariate_dim: int, binary: bool) -> List[Tuple[Any, Any]]:
        """``(model settings, model config)`` pairs of the cross-validation grid."""
        base = self.config.resolved_model()
        if base.kind == "oracle":
            raise ValidationError("The oracle has nothing to cross-validate")
        grid = self.config.cv
        scales = grid.recon_scales or [base.recon_scale]
        if base.kind == "mlp":
            scales = [base.recon_scale]
        seed = run_seed(self.config.seed, 0)
        pairs, seen = [], set()
        hidden_grid = grid.hidden_units or [base.hidden_units]
        latent_grid = grid.latent_dims or [base.latent_dim]
        for scale, hidden, latent in itertools.product(
            scales, hidden_grid, latent_grid
        ):
            settings = replace(
                base,
                recon_scale=float(scale),
                hidden_units=int(hidden),
                latent_dim=int(latent),
            )
            config = model_config(
                settings, covariate_dim, seed, binary, self.config.eval.mc_samples
            )
            key = config.hash()
            if key not in seen:
                seen.add(key)
                pairs.append((settings, config))
        return pairs

    def cmd_cv(self, dataset_path: Optional[str] = None) -> List[str]:
        """
        Select hyperparameters by k-fold validation on the training split.

        Writes ``best_config.json`` (a loadable experiment config) and
        ``cv_scores.csv``.
        """
        dataset, oracle = self.load_data(dataset_path)
        pairs = self.cv_candidates(dataset.covariate_dim, dataset.binary_covariates)
        print(
            f"Cross-validating {len(pairs)} candidates "
            f"({self.config.eval.folds} folds)..."
        )
        configs = [config for _, config in pairs]
        result = cross_validate(
            configs,
            dataset,
            oracle,
            self.config.eval.folds,
            self.config.seed,
            self.config.eval.grid_size,
        )
        best_settings = pairs[configs.index(result.best)][0]
        best = replace(self.config, model=best_settings)

        scores = result.scores or [float("nan")] * len(pairs)
        frame = pd.DataFrame(
            [
                {
                    "recon_scale": s.recon_scale,
                    "hidden_units": s.hidden_units,
                    "latent_dim": s.latent_dim,
                    "parameter_count": config_parameter_count(c),
                    "mean_rmise": score,
                    "selected": s == best_settings,
                }
                for (s, c), score in zip(pairs, scores)
            ]
        )
        print(
            f"  Selected lambda={best_settings.recon_scale:g}, "
            f"h={best_settings.hidden_units}, d_z={best_settings.latent_dim}"
        )
        best_path = os.path.join(self.config.output_dir, BEST_CONFIG_FILE)
        outputs = [
            write_json(best_path, best.to_dict()),
            self.exporter.export_frame(frame, CV_SCORES_CSV),
        ]
        return self.finish("cv", outputs)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment config JSON file")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--model", choices=MODEL_CHOICES, help="Model kind")
    common.add_argument("--alpha", type=float, help="Selection-bias strength (>= 1)")
    common.add_argument(
        "--lambda",
        dest="recon_scale",
        type=float,
        help="Covariate reconstruction weight",
    )
    common.add_argument("--grid-size", type=int, help="Dose grid points for evaluation")
    common.add_argument("--repeats", type=int, help="Repeat runs")
    common.add_argument(
        "--jobs", type=int, default=1, help="Worker processes for sweeps"
    )
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="contivae", description="Dose-response curve estimation with ContiVAE"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser(
        "generate", parents=[common], help="Generate a benchmark dataset"
    )

    train_cmd = commands.add_parser("train", parents=[common], help="Train repeat runs")
    train_cmd.add_argument("--data", help="Dataset directory (default: --out)")
    train_cmd.add_argument(
        "--resume", action="store_true", help="Continue from checkpoints"
    )

    eval_cmd = commands.add_parser(
        "evaluate", parents=[common], help="Evaluate checkpoints"
    )
    eval_cmd.add_argument("--checkpoint", help="Checkpoint file or training directory")
    eval_cmd.add_argument("--data", help="Dataset directory (default: --out)")

    sweep_cmd = commands.add_parser(
        "sweep", parents=[common], help="Run a parameter sweep"
    )
    sweep_cmd.add_argument("--sweep-axis", choices=SWEEP_AXES)
    sweep_cmd.add_argument("--sweep-values", type=float, nargs="+")
    sweep_cmd.add_argument("--models", choices=MODEL_CHOICES, nargs="+")

    cv_cmd = commands.add_parser(
        "cv", parents=[common], help="Cross-validate hyperparameters"
    )
    cv_cmd.add_argument("--data", help="Dataset directory (default: --out)")
    return parser


def effective_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config file (or defaults) with the given flags applied."""
    return apply_overrides(
        load_experiment(args.config),
        seed=args.seed,
        model=args.model,
        alpha=args.alpha,
        recon_scale=args.recon_scale,
        grid_size=args.grid_size,
        repeats=args.repeats,
        out=args.out,
        sweep_axis=getattr(args, "sweep_axis", None),
        sweep_values=getattr(args, "sweep_values", None),
        models=getattr(args, "models", None),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        0 on success, else the exit code of the error category
        (validation 2, io 3, numeric 4)
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    print("ContiVAE Dose-Response Toolkit")
    print("=" * 50)

    try:
        runner = ExperimentRunner(effective_config(args), args.jobs)
        if args.command == "generate":
            runner.cmd_generate()
        elif args.command == "train":
            runner.cmd_train(args.data, args.resume)
        elif args.command == "evaluate":
            runner.cmd_evaluate(args.checkpoint, args.data)
        elif args.command == "sweep":
            runner.cmd_sweep()
        else:
            runner.cmd_cv(args.data)
    except ContiVaeError as e:
        print(f"\n❌ {args.command} failed ({e.category}): {e}", file=sys.stderr)
        return e.exit_code

    print(f"\n✅ {args.command} complete")
    return 0


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()
