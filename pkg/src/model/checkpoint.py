"""
Self-describing JSON checkpoints.

Layout::

    {
      "format_version": 1,
      "kind": "contivae" | "contivae_n" | "mlp" | "oracle",
      "config": {...},
      "config_hash": "<sha256>",
      "epochs_completed": 100,
      "outcome_scaler": {"center": 1.2, "scale": 8.5} | null,
      "parameters": {"f1.W0": {"shape": [128, 10], "values": [...]}, ...},
      "optimizer": {"step": 4000, "m": {...}, "v": {...}}
    }
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np

from ..gradcore.optim import Adam
from ..gradcore.tensor import Tensor
from ..processing.normalization import OutcomeScaler
from ..utils.config import CHECKPOINT_VERSION, MODEL_KINDS
from ..utils.errors import ValidationError
from ..utils.files import read_json, write_json
from .config import ContiVaeConfig, config_hash
from .contivae import ContiVaeModel

logger = logging.getLogger(__name__)


def _encode_array(values: np.ndarray) -> Dict[str, Any]:
    return {"shape": list(values.shape), "values": values.reshape(-1).tolist()}


def _decode_array(entry: Dict[str, Any], name: str) -> np.ndarray:
    try:
        values = np.asarray(entry["values"], dtype=np.float64)
        return values.reshape(tuple(entry["shape"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Checkpoint tensor '{name}' is malformed: {e}") from e


def build_payload(
    kind: str,
    config: Dict[str, Any],
    parameters: Dict[str, Tensor],
    optimizer: Optional[Adam],
    epochs_completed: int,
    outcome_scaler: Optional[OutcomeScaler] = None,
) -> Dict[str, Any]:
    """Assemble the checkpoint document for any model kind."""
    if kind not in MODEL_KINDS:
        raise ValidationError(f"Unknown model kind '{kind}'")
    payload: Dict[str, Any] = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config,
        "config_hash": config_hash(config),
        "epochs_completed": int(epochs_completed),
        "outcome_scaler": outcome_scaler.to_dict() if outcome_scaler else None,
        "parameters": {name: _encode_array(p.values) for name, p in parameters.items()},
        "optimizer": None,
    }
    if optimizer is not None:
        names = list(parameters)
        payload["optimizer"] = {
            "step": optimizer.state.step,
            "m": {n: _encode_array(m) for n, m in zip(names, optimizer.state.m)},
            "v": {n: _encode_array(v) for n, v in zip(names, optimizer.state.v)},
        }
    return payload


def read_checkpoint(
    path: str, expected_kinds: Optional[List[str]] = None
) -> Dict[str, Any]:
    """
    Load and validate a checkpoint document.

    Args:
        path: Checkpoint file
        expected_kinds: Kinds the caller can restore; all kinds when omitted

    Returns:
        The raw payload

    Raises:
        DataIOError: If the file cannot be read
        ValidationError: On a bad version, an unknown kind or a hash mismatch
    """
    payload = read_json(path)
    version = payload.get("format_version")
    if version is None:
        raise ValidationError(f"Checkpoint {path} has no format_version")
    if version != CHECKPOINT_VERSION:
        raise ValidationError(
            f"Checkpoint {path} has format_version {version}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    kind = payload.get("kind")
    allowed = expected_kinds or list(MODEL_KINDS)
    if kind not in allowed:
        raise ValidationError(
            f"Checkpoint {path} has kind '{kind}', expected one of {allowed}"
        )
    config = payload.get("config", {})
    if payload.get("config_hash") != config_hash(config):
        raise ValidationError(
            f"Checkpoint {path}: config_hash does not match its config"
        )
    return payload


def restore_parameters(
    payload: Dict[str, Any], parameters: Dict[str, Tensor], optimizer: Optional[Adam]
) -> None:
    """Copy stored tensors (and Adam moments) into freshly built ones."""
    stored = payload.get("parameters", {})
    missing = sorted(set(parameters) - set(stored))
    extra = sorted(set(stored) - set(parameters))
    if missing or extra:
        raise ValidationError(
            f"Checkpoint parameters differ: missing={missing}, extra={extra}"
        )
    for name, tensor in parameters.items():
        values = _decode_array(stored[name], name)
        if values.shape != tensor.shape:
            raise ValidationError(
                f"Checkpoint tensor '{name}' has shape {values.shape}, "
                f"expected {tensor.shape}"
            )
        tensor.values[...] = values

    state = payload.get("optimizer")
    if optimizer is None or state is None:
        return
    optimizer.state.step = int(state["step"])
    for i, name in enumerate(parameters):
        optimizer.state.m[i][...] = _decode_array(state["m"][name], name)
        optimizer.state.v[i][...] = _decode_array(state["v"][name], name)


def save_model(model: ContiVaeModel, path: str) -> str:
    """Write a ContiVAE checkpoint (kind ``contivae`` or ``contivae_n``)."""
    payload = build_payload(
        model.config.model_kind,
        model.config.to_dict(),
        model.parameters(),
        model.optimizer,
        model.epochs_completed,
        model.outcome_scaler,
    )
    write_json(path, payload)
    logger.debug("Saved %s checkpoint to %s", model.config.model_kind, path)
    return path


def model_from_payload(payload: Dict[str, Any]) -> ContiVaeModel:
    config = ContiVaeConfig.from_dict(payload["config"])
    if config.model_kind != payload["kind"]:
        raise ValidationError(
            f"Checkpoint kind '{payload['kind']}' contradicts "
            f"prior_kind '{config.prior_kind}'"
        )
    model = ContiVaeModel(config)
    restore_parameters(payload, model.parameters(), model.optimizer)
    model.epochs_completed = int(payload.get("epochs_completed", 0))
    model.outcome_scaler = OutcomeScaler.from_dict(payload.get("outcome_scaler"))
    return model


def load_model(path: str) -> ContiVaeModel:
    """Rebuild a ContiVAE model bitwise from its checkpoint."""
    return model_from_payload(read_checkpoint(path, ["contivae", "contivae_n"]))


def resume_model(path: str, config: ContiVaeConfig) -> ContiVaeModel:
    """
    Load a checkpoint to continue training under ``config``.

    Only ``epochs`` may differ between the stored and the current config, so a
    finished run can be extended.

    Raises:
        ValidationError: If any other config field differs
    """
    payload = read_checkpoint(path, ["contivae", "contivae_n"])
    stored, current = resume_hash(payload["config"]), resume_hash(config.to_dict())
    if stored != current:
        raise ValidationError(
            f"Cannot resume from {path}: stored config hash {stored[:12]} "
            f"differs from current {current[:12]}"
        )
    model = model_from_payload(payload)
    model.config = config
    return model


def resume_hash(config: Dict[str, Any]) -> str:
    """Config hash ignoring the epoch budget."""
    return config_hash({k: v for k, v in config.items() if k != "epochs"})
