"""
ContiVAE network stack and training objective.

Decoder (generative side), each a shared ELU trunk with two output heads:

    p(x | z)    px_trunk(z)      -> f1 (mean or logits), f2 (stddev)
    p(t | z)    pt_trunk(z)      -> f3, f4
    p(y | t, z) py_trunk(t || z) -> f5, f6

Encoder (inference side), stacked on one covariate trunk:

    q(t | x)          qt_trunk(x)                -> g1, g2
    q(y | t, x)       qy_trunk(h_x || t)         -> g3, g4
    q(z | x, t, y)    qz_trunk(h_x || t || y)    -> g5, g6

Every stddev head goes through softplus plus a small floor, so an underflowing
head still gives a valid Gaussian.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..distributions.gaussian import (
    DiagGaussian,
    bernoulli_log_prob,
    gaussian_log_prob,
    normal_kl,
    reparam_sample,
)
from ..distributions.tilted import TiltedGaussianPrior, tilted_kl
from ..gradcore import ops
from ..gradcore.nn import MLP, Linear, named_parameters
from ..gradcore.optim import Adam
from ..gradcore.tensor import Tensor, as_tensor
from ..processing.normalization import OutcomeScaler
from ..utils.config import STDDEV_FLOOR
from ..utils.errors import ContractError, DimensionError, DomainError, NumericError
from ..utils.seeding import derive_seed, make_rng
from .config import ContiVaeConfig

logger = logging.getLogger(__name__)

LOSS_COMPONENTS = ("recon_x", "recon_t", "recon_y", "aux_t", "aux_y", "kl")


@dataclass
class EncoderOutput:
    t_dist: DiagGaussian
    y_dist: DiagGaussian
    z_dist: DiagGaussian


@dataclass
class DecoderOutput:
    t_dist: DiagGaussian
    y_dist: DiagGaussian
    x_dist: Optional[DiagGaussian] = None
    x_logits: Optional[Tensor] = None


@dataclass
class LossResult:
    """Scalar objective plus its six additive components (as floats)."""

    total: Tensor
    components: Dict[str, float] = field(default_factory=dict)


def _stddev(head: Tensor) -> Tensor:
    return ops.add(ops.softplus(head), STDDEV_FLOOR)


def _column(values: Any, rows: int, label: str) -> Tensor:
    tensor = as_tensor(values)
    if tensor.values.ndim == 1:
        tensor = ops.reshape(tensor, (-1, 1))
    if tensor.shape != (rows, 1):
        raise DimensionError(
            f"{label} must have {rows} entries, got shape {tensor.shape}"
        )
    return tensor


class ContiVaeModel:
    """All encoder/decoder parameters, optimizer state and latent prior."""

    def __init__(
        self, config: ContiVaeConfig, rng: Optional[np.random.Generator] = None
    ):
        """
        Build the networks.

        Args:
            config: Model configuration
            rng: Initialization stream; defaults to the ``init`` sub-seed of config.seed
        """
        self.config = config
        rng = rng if rng is not None else make_rng(derive_seed(config.seed, "init"))
        d_x, d_z = config.covariate_dim, config.latent_dim
        h, layers = config.hidden_units, config.hidden_layers

        # Decoder
        self.px_trunk = MLP(d_z, h, layers, rng, "px_trunk")
        self.f1 = Linear(h, d_x, rng, "f1")
        self.f2 = Linear(h, d_x, rng, "f2") if self.gaussian_covariates else None
        self.pt_trunk = MLP(d_z, h, layers, rng, "pt_trunk")
        self.f3 = Linear(h, 1, rng, "f3")
        self.f4 = Linear(h, 1, rng, "f4")
        self.py_trunk = MLP(d_z + 1, h, layers, rng, "py_trunk")
        self.f5 = Linear(h, 1, rng, "f5")
        self.f6 = Linear(h, 1, rng, "f6")

        # Encoder
        self.qt_trunk = MLP(d_x, h, layers, rng, "qt_trunk")
        self.g1 = Linear(h, 1, rng, "g1")
        self.g2 = Linear(h, 1, rng, "g2")
        self.qy_trunk = MLP(h + 1, h, layers, rng, "qy_trunk")
        self.g3 = Linear(h, 1, rng, "g3")
        self.g4 = Linear(h, 1, rng, "g4")
        self.qz_trunk = MLP(h + 2, h, layers, rng, "qz_trunk")
        self.g5 = Linear(h, d_z, rng, "g5")
        self.g6 = Linear(h, d_z, rng, "g6")

        self.prior = None
        if config.prior_kind == "tilted":
            self.prior = TiltedGaussianPrior(config.tilt, d_z)
        self.optimizer = Adam(list(self.parameters().values()), lr=config.learning_rate)
        self.epochs_completed = 0
        # Set by the first call to train; outcomes stay raw until then
        self.outcome_scaler: Optional[OutcomeScaler] = None

    @property
    def gaussian_covariates(self) -> bool:
        return self.config.covariate_likelihood == "gaussian"

    def parameters(self) -> Dict[str, Tensor]:
        modules = [
            self.px_trunk, self.f1, self.f2, self.pt_trunk, self.f3, self.f4,
            self.py_trunk, self.f5, self.f6,
            self.qt_trunk, self.g1, self.g2, self.qy_trunk, self.g3, self.g4,
            self.qz_trunk, self.g5, self.g6,
        ]
        return named_parameters(*[m for m in modules if m is not None])

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())

    # ------------------------------------------------------------------
    # Networks
    # ------------------------------------------------------------------

    def encode(self, x: Any, t_obs: Any = None, y_obs: Any = None) -> EncoderOutput:
        """
        Run the encoder.

        Args:
            x: Covariates, shape ``(batch, d_x)``
            t_obs: Observed treatments; the predicted mean is used when omitted
            y_obs: Observed outcomes; the predicted mean is used when omitted

        Returns:
            q(t|x), q(y|t,x) and q(z|x,t,y)
        """
        x = as_tensor(x)
        if x.values.ndim != 2 or x.shape[1] != self.config.covariate_dim:
            raise DimensionError(
                f"encode expects covariates of width {self.config.covariate_dim}, "
                f"got {x.shape}"
            )
        rows = x.shape[0]
        h_x = self.qt_trunk(x)
        t_dist = DiagGaussian(self.g1(h_x), _stddev(self.g2(h_x)))
        t_in = _column(t_obs, rows, "t_obs") if t_obs is not None else t_dist.mean

        h_y = self.qy_trunk(ops.concat(h_x, t_in, axis=1))
        y_dist = DiagGaussian(self.g3(h_y), _stddev(self.g4(h_y)))
        y_in = _column(y_obs, rows, "y_obs") if y_obs is not None else y_dist.mean

        h_z = self.qz_trunk(ops.concat(h_x, t_in, y_in, axis=1))
        z_dist = DiagGaussian(self.g5(h_z), _stddev(self.g6(h_z)))
        return EncoderOutput(t_dist, y_dist, z_dist)

    def decode(self, z: Any, t: Any) -> DecoderOutput:
        """
        Run the decoder.

        Args:
            z: Latent codes, shape ``(batch, d_z)``
            t: Treatments, ``batch`` entries

        Returns:
            p(x|z), p(t|z) and p(y|t,z)
        """
        z = as_tensor(z)
        t = _column(t, z.shape[0], "t")
        h_x = self.px_trunk(z)
        if self.gaussian_covariates:
            x_dist = DiagGaussian(self.f1(h_x), _stddev(self.f2(h_x)))
            x_logits = None
        else:
            x_dist, x_logits = None, self.f1(h_x)
        h_t = self.pt_trunk(z)
        t_dist = DiagGaussian(self.f3(h_t), _stddev(self.f4(h_t)))
        y_dist = self.outcome_dist(z, t)
        return DecoderOutput(t_dist, y_dist, x_dist, x_logits)

    def outcome_dist(self, z: Any, t: Any) -> DiagGaussian:
        """p(y | t, z) alone; used at inference where x and t heads are not needed."""
        z = as_tensor(z)
        t = _column(t, z.shape[0], "t")
        h_y = self.py_trunk(ops.concat(t, z, axis=1))
        return DiagGaussian(self.f5(h_y), _stddev(self.f6(h_y)))

    # ------------------------------------------------------------------
    # Objective
    # ------------------------------------------------------------------

    def kl_term(self, z_dist: DiagGaussian) -> Tensor:
        if self.prior is not None:
            return tilted_kl(z_dist.mean, self.prior)
        return normal_kl(z_dist)

    def loss(
        self,
        x: Any,
        t: Any,
        y: Any,
        recon_scale: float,
        rng: np.random.Generator,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
    ) -> LossResult:
        """
        Negative scaled ELBO summed over the batch.

        total = lambda * recon_x + recon_t + recon_y + aux_t + aux_y + kl, where
        every recon/aux term is a negative log-likelihood and z is one
        reparameterized draw from q(z | x, t, y) per sample.

        Raises:
            NumericError: If a component is not finite
        """
        x = as_tensor(x)
        rows = x.shape[0]
        if rows == 0:
            raise DimensionError("loss needs a non-empty batch")
        t = _column(t, rows, "t")
        y = _column(y, rows, "y")

        enc = self.encode(x, t, y)
        z = reparam_sample(enc.z_dist, rng)
        dec = self.decode(z, t)

        if self.gaussian_covariates:
            x_term = lambda: ops.neg(gaussian_log_prob(x, dec.x_dist))  # noqa: E731
        else:
            x_term = lambda: ops.neg(bernoulli_log_prob(x, dec.x_logits))  # noqa: E731
        builders = {
            "recon_x": x_term,
            "recon_t": lambda: ops.neg(gaussian_log_prob(t, dec.t_dist)),
            "recon_y": lambda: ops.neg(gaussian_log_prob(y, dec.y_dist)),
            "aux_t": lambda: ops.neg(gaussian_log_prob(t, enc.t_dist)),
            "aux_y": lambda: ops.neg(gaussian_log_prob(y, enc.y_dist)),
            "kl": lambda: self.kl_term(enc.z_dist),
        }
        terms = {}
        for name, build in builders.items():
            try:
                terms[name] = build()
            except DimensionError:
                raise
            except (ContractError, DomainError) as exc:
                # Collapsed stddev heads or log of a non-positive value
                raise NumericError(str(exc), name, epoch, batch) from exc
        components = {name: terms[name].item() for name in LOSS_COMPONENTS}
        for name, value in components.items():
            if not np.isfinite(value):
                raise NumericError(f"Non-finite loss value {value}", name, epoch, batch)

        total = ops.mul(terms["recon_x"], recon_scale)
        for name in LOSS_COMPONENTS[1:]:
            total = ops.add(total, terms[name])
        return LossResult(total, components)


def init_model(
    config: ContiVaeConfig, rng: Optional[np.random.Generator] = None
) -> ContiVaeModel:
    """Build a freshly initialized model; deterministic for a fixed seed."""
    model = ContiVaeModel(config, rng)
    logger.debug(
        "Initialized %s with %d parameters", config.model_kind, model.parameter_count()
    )
    return model
