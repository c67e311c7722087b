"""
Dose-response curve families of the semi-synthetic benchmarks.

Every family depends on a row only through three projections w1, w2, w3:

    tcga:  w_k = v_k . x                (v_k unit norm, length d_x)
    news:  w_k = u^T V_k x              (V_k of shape d_u x d_x)

and with C the scale constant:

    1: C * (w1 + 12 t (t - k)^2),   k = 0.75 * w2 / w3
    2: C * (w1 + sin(pi * (w2 / w3) * t))
    3: C * (w1 + 12 w2 t - 12 w3 t^2)
    4: C * (cos((2 + w1) pi t + w2 pi) + w3)
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..utils.config import (
    CURVE_SCALE,
    MAX_RESAMPLE_ATTEMPTS,
    MIN_DENOMINATOR,
    ORACLE_GRID_SIZE,
)
from ..utils.errors import (
    ContractError,
    DegenerateCurveError,
    DimensionError,
    ValidationError,
)

logger = logging.getLogger(__name__)

FAMILIES = (1, 2, 3, 4)
STYLES = ("tcga", "news")

# Analytic and grid optimal doses count as agreeing within this distance
DOSE_AGREEMENT_TOL = 2.0 / 1024.0

# Rows evaluated per block on the oracle grid
GRID_CHUNK_ROWS = 4096

# Curve values this close to the row maximum count as tied
TIE_RTOL = 1e-9

REFINE_STEPS = 48
GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


@dataclass
class CurveSpec:
    """
    One curve family with its sampled parameters.

    ``params`` has shape ``(3, d_x)`` for tcga style (rows v1, v2, v3) and
    ``(3, d_u, d_x)`` for news style (V1, V2, V3).
    """

    family: int
    style: str
    params: np.ndarray
    scale: float = CURVE_SCALE

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValidationError(
                f"Curve family must be one of {FAMILIES}, got {self.family}"
            )
        if self.style not in STYLES:
            raise ValidationError(
                f"Curve style must be one of {STYLES}, got '{self.style}'"
            )
        self.params = np.asarray(self.params, dtype=np.float64)
        expected_ndim = 2 if self.style == "tcga" else 3
        if self.params.ndim != expected_ndim or self.params.shape[0] != 3:
            raise DimensionError(
                f"{self.style} curve parameters need shape (3, ...) with "
                f"{expected_ndim} axes, got {self.params.shape}"
            )

    @property
    def covariate_dim(self) -> int:
        return self.params.shape[-1]

    @property
    def needs_hidden(self) -> bool:
        return self.style == "news"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "style": self.style,
            "scale": self.scale,
            "shape": list(self.params.shape),
            "params": self.params.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "CurveSpec":
        try:
            params = np.asarray(payload["params"], dtype=np.float64)
            params = params.reshape(payload["shape"])
            family, style = int(payload["family"]), payload["style"]
            scale = float(payload["scale"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed curve spec: {e}") from e
        return cls(family, style, params, scale)


def projections(
    spec: CurveSpec, x: np.ndarray, u: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Compute (w1, w2, w3) per row.

    Args:
        spec: Curve family
        x: Covariates ``(n, d_x)``
        u: Hidden confounders ``(n, d_u)``; required for news style

    Returns:
        Array of shape ``(n, 3)``
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != spec.covariate_dim:
        raise DimensionError(
            f"Curve expects {spec.covariate_dim} covariates, got {x.shape[1]}"
        )
    if spec.style == "tcga":
        return x @ spec.params.T
    if u is None:
        raise ContractError("news-style curves need the hidden confounders u")
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    expected = (x.shape[0], spec.params.shape[1])
    if u.shape != expected:
        raise DimensionError(
            f"Hidden confounders must have shape {expected}, got {u.shape}"
        )
    return np.stack(
        [np.sum((u @ spec.params[k]) * x, axis=1) for k in range(3)], axis=1
    )


def _response(family: int, w: np.ndarray, t: np.ndarray, scale: float) -> np.ndarray:
    # w is (n, 3); t broadcasts against (n, 1)
    w1, w2, w3 = w[:, 0:1], w[:, 1:2], w[:, 2:3]
    with np.errstate(divide="ignore", invalid="ignore"):
        if family == 1:
            k = 0.75 * w2 / w3
            inner = w1 + 12.0 * t * (t - k) ** 2
        elif family == 2:
            inner = w1 + np.sin(np.pi * (w2 / w3) * t)
        elif family == 3:
            inner = w1 + 12.0 * w2 * t - 12.0 * w3 * t * t
        else:
            inner = np.cos((2.0 + w1) * np.pi * t + w2 * np.pi) + w3
    return scale * inner


def eval_curve_batch(
    spec: CurveSpec, x: np.ndarray, u: Optional[np.ndarray], t_grid: np.ndarray
) -> np.ndarray:
    """Noiseless curves of every row on a shared dose grid, ``(n, len(t_grid))``."""
    t_grid = np.asarray(t_grid, dtype=np.float64).reshape(1, -1)
    return _response(spec.family, projections(spec, x, u), t_grid, spec.scale)


def eval_curve_at(
    spec: CurveSpec, x: np.ndarray, u: Optional[np.ndarray], doses: np.ndarray
) -> np.ndarray:
    """Noiseless curve of row ``i`` at its own dose ``doses[i]``."""
    doses = np.asarray(doses, dtype=np.float64).reshape(-1, 1)
    return _response(spec.family, projections(spec, x, u), doses, spec.scale)[:, 0]


def eval_curve(
    spec: CurveSpec, x: np.ndarray, u: Optional[np.ndarray], t: float
) -> float:
    """
    Value of one row's curve at dose ``t``.

    Raises:
        ContractError: If ``t`` lies outside [0, 1] or u is missing for news style
    """
    if not 0.0 <= t <= 1.0:
        raise ContractError(f"Dose must lie in [0, 1], got {t}")
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    u = None if u is None else np.asarray(u, dtype=np.float64).reshape(1, -1)
    return float(eval_curve_at(spec, x, u, np.array([t]))[0])


def _pick_best(candidates: np.ndarray, values: np.ndarray) -> np.ndarray:
    # smallest dose among the candidates within TIE_RTOL of the row maximum
    values = np.where(np.isnan(values), -np.inf, values)
    best = np.max(values, axis=1, keepdims=True)
    tied = values >= best - TIE_RTOL * np.maximum(1.0, np.abs(best))
    return np.min(np.where(tied, candidates, np.inf), axis=1)


def _first_peak(rate: np.ndarray, offset: np.ndarray) -> np.ndarray:
    # smallest t >= 0 with rate * t + offset on a multiple of 2 pi; nan if rate is 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(
            rate > 0.0,
            np.mod(-offset, 2.0 * np.pi) / rate,
            np.where(rate < 0.0, np.mod(offset, 2.0 * np.pi) / -rate, np.nan),
        )


def analytic_optimal_doses(family: int, w: np.ndarray) -> np.ndarray:
    """
    Closed-form optimal dose per row.

    Candidates are both ends of [0, 1] plus the family's stationary maximum
    (clamped): ``k / 3`` for family 1, the first crest of the sine for
    family 2 (``w3 / (2 w2)`` when the ratio is positive), the vertex
    ``w2 / (2 w3)`` of a concave family 3 and the first crest of the cosine for
    family 4. The best candidate wins; exact ties go to the smallest dose.
    """
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    w1, w2, w3 = w[:, 0], w[:, 1], w[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        if family == 1:
            interior = 0.25 * w2 / w3
        elif family == 2:
            ratio = w2 / w3
            interior = np.where(
                ratio > 0.0, 0.5 / ratio, np.where(ratio < 0.0, -1.5 / ratio, np.nan)
            )
        elif family == 3:
            interior = np.where(w3 > 0.0, w2 / (2.0 * w3), np.nan)
        else:
            interior = _first_peak((2.0 + w1) * np.pi, w2 * np.pi)
    interior = np.where(np.isfinite(interior), np.clip(interior, 0.0, 1.0), np.nan)
    n = w.shape[0]
    candidates = np.column_stack([np.zeros(n), interior, np.ones(n)])
    values = _response(family, w, np.nan_to_num(candidates), 1.0)
    values[np.isnan(candidates)] = -np.inf
    return np.nan_to_num(_pick_best(candidates, values), nan=0.0)


def _refine(family: int, w: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # golden-section search for the maximum of each curve inside [lo, hi]
    for _ in range(REFINE_STEPS):
        width = (hi - lo) * GOLDEN
        left, right = hi - width, lo + width
        keep_left = _response(family, w, left[:, None], 1.0)[:, 0] >= _response(
            family, w, right[:, None], 1.0
        )[:, 0]
        hi = np.where(keep_left, right, hi)
        lo = np.where(keep_left, lo, left)
    return 0.5 * (lo + hi)


def grid_optimal_doses(
    spec: CurveSpec,
    x: np.ndarray,
    u: Optional[np.ndarray] = None,
    grid_size: int = ORACLE_GRID_SIZE,
) -> np.ndarray:
    """
    Optimal dose per row by dense grid search.

    Every local maximum of the curve on the uniform grid is refined inside its
    neighbouring grid cells; the highest refined crest wins and exact ties go
    to the smallest dose.
    """
    grid = np.linspace(0.0, 1.0, grid_size)
    w_all = projections(spec, x, u)
    doses = np.empty(w_all.shape[0])
    for start in range(0, w_all.shape[0], GRID_CHUNK_ROWS):
        w = w_all[start : start + GRID_CHUNK_ROWS]
        block = _response(spec.family, w, grid.reshape(1, -1), 1.0)
        padded = np.pad(block, ((0, 0), (1, 1)), constant_values=-np.inf)
        peaks = (block >= padded[:, :-2]) & (block >= padded[:, 2:])
        row, col = np.nonzero(peaks)

        lo = grid[np.maximum(col - 1, 0)]
        hi = grid[np.minimum(col + 1, grid_size - 1)]
        refined = _refine(spec.family, w[row], lo, hi)
        refined_value = _response(spec.family, w[row], refined[:, None], 1.0)[:, 0]
        better = refined_value > block[row, col]
        t = np.where(better, refined, grid[col])
        value = np.where(better, refined_value, block[row, col])

        best = np.full(w.shape[0], -np.inf)
        np.maximum.at(best, row, value)
        tied = value >= best[row] - TIE_RTOL * np.maximum(1.0, np.abs(best[row]))
        chunk = np.full(w.shape[0], np.inf)
        np.minimum.at(chunk, row[tied], t[tied])
        # rows without a finite curve value fall back to the plain argmax
        fallback = grid[np.argmax(np.nan_to_num(block, nan=-np.inf), axis=1)]
        doses[start : start + w.shape[0]] = np.where(
            np.isfinite(chunk), chunk, fallback
        )
    return doses


def optimal_doses(
    spec: CurveSpec, x: np.ndarray, u: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Optimal dose per row, checked against the 1025-point grid.

    Returns:
        ``(doses, agrees)``: the analytic dose where it lies within 2/1024 of the
        grid argmax, the grid argmax elsewhere, and the agreement mask
    """
    analytic = analytic_optimal_doses(spec.family, projections(spec, x, u))
    grid = grid_optimal_doses(spec, x, u)
    agrees = np.abs(analytic - grid) <= DOSE_AGREEMENT_TOL
    return np.where(agrees, analytic, grid), agrees


def optimal_dose(
    spec: CurveSpec, x: np.ndarray, u: Optional[np.ndarray] = None
) -> float:
    """Single-row form of ``optimal_doses``."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    u = None if u is None else np.asarray(u, dtype=np.float64).reshape(1, -1)
    doses, _ = optimal_doses(spec, x, u)
    return float(doses[0])


def _draw_params(
    style: str, d_x: int, d_u: int, rng: np.random.Generator
) -> np.ndarray:
    if style == "tcga":
        vectors = rng.standard_normal((3, d_x))
        return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    return rng.standard_normal((3, d_u, d_x))


def make_curve_spec(
    family: int,
    style: str,
    d_x: int,
    d_u: int,
    x: np.ndarray,
    u: Optional[np.ndarray],
    scale: float,
    rng: np.random.Generator,
) -> CurveSpec:
    """
    Sample curve parameters, redrawing while any row hits a degenerate denominator.

    Families 1 and 2 divide by w3; a draw is rejected when ``|w3| < 1e-8`` on
    any row of ``x``.

    Raises:
        DegenerateCurveError: After ``MAX_RESAMPLE_ATTEMPTS`` rejected draws
    """
    for attempt in range(1, MAX_RESAMPLE_ATTEMPTS + 1):
        spec = CurveSpec(family, style, _draw_params(style, d_x, d_u, rng), scale)
        if family not in (1, 2):
            return spec
        w3 = projections(spec, x, u)[:, 2]
        if np.min(np.abs(w3)) >= MIN_DENOMINATOR:
            if attempt > 1:
                logger.info("Curve parameters accepted after %d draws", attempt)
            return spec
    raise DegenerateCurveError(
        f"Family {family} curve kept a |denominator| < {MIN_DENOMINATOR} "
        f"after {MAX_RESAMPLE_ATTEMPTS} draws"
    )


@dataclass
class GroundTruthOracle:
    """
    Noise-free curves and optimal doses for the rows of one dataset.

    ``hidden`` holds the confounders U aligned with the dataset rows (news
    style only); models never see it.
    """

    spec: CurveSpec
    hidden: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def hidden_for(self, rows: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
        if self.hidden is None:
            if self.spec.needs_hidden:
                raise ContractError("news-style oracle has no hidden confounders")
            return None
        return self.hidden if rows is None else self.hidden[rows]

    def true_curves(
        self, x: np.ndarray, t_grid: np.ndarray, rows: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """Curves of the dataset rows ``rows`` whose covariates are ``x``."""
        return eval_curve_batch(self.spec, x, self.hidden_for(rows), t_grid)

    def values_at(
        self, x: np.ndarray, doses: np.ndarray, rows: Optional[np.ndarray] = None
    ) -> np.ndarray:
        return eval_curve_at(self.spec, x, self.hidden_for(rows), doses)

    def optimal_doses(
        self, x: np.ndarray, rows: Optional[np.ndarray] = None
    ) -> Tuple[np.ndarray, np.ndarray]:
        return optimal_doses(self.spec, x, self.hidden_for(rows))

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "curve": self.spec.to_dict(),
            "seed": self.seed,
            "hidden": None,
        }
        if self.hidden is not None:
            payload["hidden"] = {
                "shape": list(self.hidden.shape),
                "values": self.hidden.reshape(-1).tolist(),
            }
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "GroundTruthOracle":
        spec = CurveSpec.from_dict(payload["curve"])
        hidden = payload.get("hidden")
        if hidden is not None:
            values = np.asarray(hidden["values"], dtype=np.float64)
            hidden = values.reshape(hidden["shape"])
        return cls(spec, hidden, payload.get("seed"))
