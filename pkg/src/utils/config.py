"""Configuration constants for the ContiVAE dose-response toolkit."""

import math

# Model defaults
LATENT_DIM = 20
HIDDEN_UNITS = 128
HIDDEN_LAYERS = 2
TILT = 3.0
RECON_SCALE = 1.0
MC_SAMPLES_INFERENCE = 100
BATCH_SIZE = 64
LEARNING_RATE = 1e-3
EPOCHS = 100

# Every Gaussian stddev head is softplus(head) + STDDEV_FLOOR
STDDEV_FLOOR = 1e-6

# Training outcomes: median-centred, divided by IQR / IQR_PER_SD, clipped to +/- this
OUTCOME_CLIP = 10.0
IQR_PER_SD = 1.349

# Adam
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Training presets per dataset style (learning rate, epochs)
STYLE_PRESETS = {
    "news": {"learning_rate": 1e-4, "epochs": 100},
    "tcga": {"learning_rate": 1e-3, "epochs": 300},
}

# Dataset defaults
CURVE_SCALE = 10.0
NOISE_SD = math.sqrt(0.02)
TEST_FRACTION = 0.2
HIDDEN_CONFOUNDER_DIM = 10
PROXY_NOISE_SD = 0.1
DOSE_CLAMP_LOW = 0.01
DOSE_CLAMP_HIGH = 0.99
MIN_DENOMINATOR = 1e-8
MAX_RESAMPLE_ATTEMPTS = 100

# Evaluation defaults
GRID_SIZE = 65
ORACLE_GRID_SIZE = 1025
REPEAT_RUNS = 5
CV_FOLDS = 5
CI_Z = 1.96

# Tilted prior numerics
SERIES_TOL = 1e-12
SERIES_MAX_TERMS = 100_000
OPTIMAL_NORM_TOL = 1e-6
OPTIMAL_NORM_SCAN_POINTS = 401

# File paths
OUTPUT_DIR = "output"
DATASET_CSV = "dataset.csv"
DATASET_META = "dataset.meta.json"
GROUND_TRUTH = "ground_truth.json"
CHECKPOINT_FILE = "checkpoint.json"
TRACE_CSV = "trace.csv"
REPORT_CSV = "report.csv"
REPORT_TXT = "report.txt"
CURVES_CSV = "curves.csv"
MANIFEST_TEMPLATE = "manifest.{command}.json"
BEST_CONFIG_FILE = "best_config.json"
SWEEP_RUNS_CSV = "sweep_runs.csv"
SWEEP_SUMMARY_CSV = "sweep_summary.csv"
SWEEP_CELLS_DIR = "cells"

# Checkpoint format
CHECKPOINT_VERSION = 1
MODEL_KINDS = ("contivae", "contivae_n", "mlp", "oracle")
