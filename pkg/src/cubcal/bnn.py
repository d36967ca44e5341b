"""Minimal mean-field Gaussian variational classifier (two fully connected
layers) with reparameterization sampling, closed-form Gaussian KL, ELBO
training, Monte-Carlo predictive inference, and magnitude-proportional
initialization from pre-trained deterministic weights.

Everything is plain numpy with hand-written backprop; training is
single-threaded and bit-reproducible given a seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary import BoundaryConfig, softmax
from .loss import LossWeights, _barrier_grad_probs
from .metrics import avu, avu_counts, delta_u
from .records import PredictionRecord

SIGMA_FLOOR = 1e-6


class TrainingDivergence(RuntimeError):
    """Raised when the training loss becomes non-finite."""


def softplus(x):
    x = np.asarray(x, dtype=float)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def softplus_inv(y):
    """Inverse of softplus for y > 0: log(exp(y) - 1), computed stably."""
    y = np.asarray(y, dtype=float)
    return y + np.log(-np.expm1(-y))


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    learning_rate: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 5e-4
    mc_train: int = 3
    mc_infer: int = 20
    seed: int = 42
    kl_scale_mode: str = "n_train"   # "n_train" -> KL / N_train per step, "unscaled" -> full KL
    hidden: int = 32
    init_mode: str = "random"        # "random" | "two_stage" | "moped"
    init_sigma: float = 0.05
    moped_alpha: float = 0.01
    prior_std: float = 1.0
    class_weighted: bool = False
    lr_schedule: str = "constant"    # "constant" | "step"
    lr_step_size: int = 30
    lr_step_gamma: float = 0.1
    pretrain_epochs: int = 40
    grad_clip: float | None = None   # global gradient-norm cap; None disables

    def __post_init__(self):
        if self.mc_train < 1 or self.mc_infer < 1:
            raise ValueError("mc_train and mc_infer must be >= 1")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive when set")
        if self.kl_scale_mode not in ("n_train", "unscaled"):
            raise ValueError(f"unknown kl_scale_mode {self.kl_scale_mode!r}")
        if self.init_mode not in ("random", "two_stage", "moped"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")
        if self.lr_schedule not in ("constant", "step"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")


class VariationalLayer:
    """Fully connected layer with a factorized Gaussian over weights and
    biases; the scale is the softplus of an unconstrained parameter."""

    def __init__(self, n_in: int, n_out: int, prior_std: float = 1.0,
                 init_sigma: float = 0.05, rng: np.random.Generator | None = None):
        if prior_std <= 0:
            raise ValueError(f"prior_std must be > 0, got {prior_std}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.mu_w = rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_out, n_in))
        self.mu_b = np.zeros(n_out)
        rho0 = float(softplus_inv(init_sigma))
        self.rho_w = np.full((n_out, n_in), rho0)
        self.rho_b = np.full(n_out, rho0)
        self.prior_std = float(prior_std)

    @property
    def sigma_w(self) -> np.ndarray:
        return np.maximum(softplus(self.rho_w), SIGMA_FLOOR)

    @property
    def sigma_b(self) -> np.ndarray:
        return np.maximum(softplus(self.rho_b), SIGMA_FLOOR)

    def sample(self, rng: np.random.Generator):
        """Reparameterized draw: w = mu + sigma * eps; returns the concrete
        weights together with the noise used (needed for backprop)."""
        eps_w = rng.standard_normal(self.mu_w.shape)
        eps_b = rng.standard_normal(self.mu_b.shape)
        w = self.mu_w + self.sigma_w * eps_w
        b = self.mu_b + self.sigma_b * eps_b
        return w, b, eps_w, eps_b

    def kl(self) -> float:
        """Closed-form KL from the factorized posterior to N(0, prior_std^2)."""
        out = 0.0
        for mu, sigma in ((self.mu_w, self.sigma_w), (self.mu_b, self.sigma_b)):
            out += float(np.sum(
                np.log(self.prior_std / sigma)
                + (sigma**2 + mu**2) / (2.0 * self.prior_std**2)
                - 0.5
            ))
        return out

    def params(self):
        return [self.mu_w, self.mu_b, self.rho_w, self.rho_b]


@dataclass
class MCPredictive:
    """Monte-Carlo predictive bundle for a batch of inputs.

    ``sample_logits`` has shape (S, N, K); the probabilities are the average
    of the per-draw softmax outputs, the logits the plain average.
    """

    sample_logits: np.ndarray
    mean_logits: np.ndarray
    mean_probs: np.ndarray
    s: int


class VariationalMLP:
    """Two-layer ReLU network with variational weights."""

    def __init__(self, dim_in: int, hidden: int, k: int, prior_std: float = 1.0,
                 init_sigma: float = 0.05, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dim_in, self.hidden, self.k = dim_in, hidden, k
        self.layers = [
            VariationalLayer(dim_in, hidden, prior_std, init_sigma, rng),
            VariationalLayer(hidden, k, prior_std, init_sigma, rng),
        ]

    def kl(self) -> float:
        return sum(layer.kl() for layer in self.layers)

    def sample_weights(self, rng: np.random.Generator):
        return [layer.sample(rng) for layer in self.layers]

    def forward(self, x: np.ndarray, weights):
        """Forward pass with concrete sampled weights; returns logits and the
        activation cache used by backprop."""
        (w1, b1, _, _), (w2, b2, _, _) = weights
        h_pre = x @ w1.T + b1
        h = np.maximum(h_pre, 0.0)
        z = h @ w2.T + b2
        return z, (h_pre, h)

    def backward(self, x, weights, cache, dz):
        """Gradients of a scalar loss w.r.t. the sampled weights, given dz."""
        (w1, b1, _, _), (w2, b2, _, _) = weights
        h_pre, h = cache
        dw2 = dz.T @ h
        db2 = dz.sum(axis=0)
        dh = dz @ w2
        dh_pre = dh * (h_pre > 0)
        dw1 = dh_pre.T @ x
        db1 = dh_pre.sum(axis=0)
        return [(dw1, db1), (dw2, db2)]


def predict(model: VariationalMLP, x: np.ndarray, mc_infer: int,
            rng: np.random.Generator) -> MCPredictive:
    """MC predictive for a batch: one weight draw per forward pass, shared
    across the batch, averaged over draws."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    logits = np.empty((mc_infer, x.shape[0], model.k))
    for s in range(mc_infer):
        weights = model.sample_weights(rng)
        logits[s], _ = model.forward(x, weights)
    probs = softmax(logits, axis=-1).mean(axis=0)
    return MCPredictive(
        sample_logits=logits,
        mean_logits=logits.mean(axis=0),
        mean_probs=probs,
        s=mc_infer,
    )


def predict_records(model: VariationalMLP, x: np.ndarray, y: np.ndarray,
                    mc_infer: int, rng: np.random.Generator,
                    id_prefix: str = "") -> list[PredictionRecord]:
    pred = predict(model, x, mc_infer, rng)
    return [
        PredictionRecord.from_mc_logits(
            int(y[i]), pred.sample_logits[:, i, :], record_id=f"{id_prefix}{i}"
        )
        for i in range(len(y))
    ]


def elbo_loss(x, y, model: VariationalMLP, mc_train: int,
              rng: np.random.Generator, kl_scale: float = 1.0,
              class_weights: np.ndarray | None = None) -> tuple[float, float]:
    """(nll, kl) pair: mean per-draw cross-entropy over ``mc_train`` draws,
    and the KL term already multiplied by ``kl_scale``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise ValueError("elbo_loss requires a nonempty batch")
    w = np.ones(len(y)) if class_weights is None else class_weights[y]
    nll = 0.0
    for _ in range(mc_train):
        weights = model.sample_weights(rng)
        z, _ = model.forward(x, weights)
        logq = z - np.max(z, axis=1, keepdims=True)
        logq = logq - np.log(np.sum(np.exp(logq), axis=1, keepdims=True))
        nll += float(np.mean(-w * logq[np.arange(len(y)), y]))
    return nll / mc_train, kl_scale * model.kl()


def moped_init(weights: dict, alpha: float = 0.01,
               prior_std: float = 1.0) -> VariationalMLP:
    """Bayesian model anchored at pre-trained weights: posterior mean equals
    the deterministic weights, scale alpha * |w| (floored at SIGMA_FLOOR)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    model = _model_from_shapes(weights, prior_std)
    for layer, (wk, bk) in zip(model.layers, (("w1", "b1"), ("w2", "b2"))):
        layer.mu_w = np.array(weights[wk], dtype=float)
        layer.mu_b = np.array(weights[bk], dtype=float)
        layer.rho_w = softplus_inv(np.maximum(alpha * np.abs(layer.mu_w), SIGMA_FLOOR))
        layer.rho_b = softplus_inv(np.maximum(alpha * np.abs(layer.mu_b), SIGMA_FLOOR))
    return model


def convert_to_bayesian(weights: dict, init_sigma: float = 1e-3,
                        prior_std: float = 1.0) -> VariationalMLP:
    """Two-stage conversion: posterior mean from pre-trained weights, a small
    constant initial scale everywhere."""
    model = _model_from_shapes(weights, prior_std)
    rho0 = float(softplus_inv(max(init_sigma, SIGMA_FLOOR)))
    for layer, (wk, bk) in zip(model.layers, (("w1", "b1"), ("w2", "b2"))):
        layer.mu_w = np.array(weights[wk], dtype=float)
        layer.mu_b = np.array(weights[bk], dtype=float)
        layer.rho_w = np.full(layer.mu_w.shape, rho0)
        layer.rho_b = np.full(layer.mu_b.shape, rho0)
    return model


def _model_from_shapes(weights: dict, prior_std: float) -> VariationalMLP:
    w1 = np.asarray(weights["w1"])
    w2 = np.asarray(weights["w2"])
    return VariationalMLP(w1.shape[1], w1.shape[0], w2.shape[0], prior_std=prior_std)


def train_deterministic(dim_in: int, hidden: int, k: int, data: dict,
                        cfg: TrainConfig) -> dict:
    """Plain SGD+momentum cross-entropy pre-training; returns a weight dict
    usable by :func:`moped_init` / :func:`convert_to_bayesian`."""
    rng = np.random.default_rng([cfg.seed, 101])
    w1 = rng.normal(0.0, 1.0 / np.sqrt(dim_in), size=(hidden, dim_in))
    b1 = np.zeros(hidden)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(k, hidden))
    b2 = np.zeros(k)
    vel = [np.zeros_like(p) for p in (w1, b1, w2, b2)]
    x, y = np.asarray(data["X_train"], dtype=float), np.asarray(data["y_train"], dtype=int)
    cw = _class_weights(y, k) if cfg.class_weighted else None
    n = len(y)
    for epoch in range(cfg.pretrain_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            w = np.ones(len(yb)) if cw is None else cw[yb]
            h_pre = xb @ w1.T + b1
            h = np.maximum(h_pre, 0.0)
            z = h @ w2.T + b2
            q = softmax(z, axis=-1)
            dz = q.copy()
            dz[np.arange(len(yb)), yb] -= 1.0
            dz *= w[:, None] / len(yb)
            dw2 = dz.T @ h + cfg.weight_decay * w2
            db2 = dz.sum(axis=0)
            dh = (dz @ w2) * (h_pre > 0)
            dw1 = dh.T @ xb + cfg.weight_decay * w1
            db1 = dh.sum(axis=0)
            for p, v, g in zip((w1, b1, w2, b2), vel, (dw1, db1, dw2, db2)):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                p += v
    return {"w1": w1, "b1": b1, "w2": w2, "b2": b2}


def build_model(cfg: TrainConfig, dim_in: int, k: int,
                data: dict | None = None) -> VariationalMLP:
    """Construct the variational model per the configured initialization mode."""
    if cfg.init_mode == "random":
        rng = np.random.default_rng([cfg.seed, 7])
        return VariationalMLP(dim_in, cfg.hidden, k, cfg.prior_std, cfg.init_sigma, rng)
    if data is None:
        raise ValueError(f"init_mode {cfg.init_mode!r} needs training data for pre-training")
    pretrained = train_deterministic(dim_in, cfg.hidden, k, data, cfg)
    if cfg.init_mode == "moped":
        return moped_init(pretrained, cfg.moped_alpha, cfg.prior_std)
    return convert_to_bayesian(pretrained, cfg.init_sigma, cfg.prior_std)


def _class_weights(y: np.ndarray, k: int) -> np.ndarray:
    """Inverse-frequency (balanced) class weights, mean-normalized."""
    counts = np.bincount(y, minlength=k).astype(float)
    counts[counts == 0] = 1.0
    w = len(y) / (k * counts)
    return w


def _lr_at(cfg: TrainConfig, epoch: int) -> float:
    if cfg.lr_schedule == "step":
        return cfg.learning_rate * cfg.lr_step_gamma ** (epoch // cfg.lr_step_size)
    return cfg.learning_rate


def train(model: VariationalMLP, data: dict, cfg: TrainConfig,
          boundary_cfg: BoundaryConfig | None = None,
          loss_weights: LossWeights | None = None,
          u_th: float = 0.325) -> list[dict]:
    """Minibatch SGD on the joint objective; returns the per-epoch trace.

    Each epoch records the mean training nll / kl / barrier components and
    the validation accuracy and accuracy-versus-uncertainty rate. The
    barrier component is tracked from epoch 0 but only weighted into the
    update after the warm-up.
    """
    loss_weights = loss_weights if loss_weights is not None else LossWeights(beta=0.0)
    if loss_weights.beta > 0 and boundary_cfg is None:
        raise ValueError("boundary_cfg is required when beta > 0")
    x = np.asarray(data["X_train"], dtype=float)
    y = np.asarray(data["y_train"], dtype=int)
    x_val = np.asarray(data["X_val"], dtype=float)
    y_val = np.asarray(data["y_val"], dtype=int)
    n = len(y)
    kl_scale = 1.0 / n if cfg.kl_scale_mode == "n_train" else 1.0
    cw = _class_weights(y, model.k) if cfg.class_weighted else None

    rng = np.random.default_rng([cfg.seed, 11])
    params = [p for layer in model.layers for p in layer.params()]
    vel = [np.zeros_like(p) for p in params]

    trace: list[dict] = []
    for epoch in range(cfg.epochs):
        beta_eff = loss_weights.effective_beta(epoch)
        lr = _lr_at(cfg, epoch)
        order = rng.permutation(n)
        ep_nll = ep_kl = ep_cub = 0.0
        n_steps = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            b = len(yb)
            wvec = np.ones(b) if cw is None else cw[yb]

            draws = []
            probs_sum = np.zeros((b, model.k))
            nll = 0.0
            for _ in range(cfg.mc_train):
                weights = model.sample_weights(rng)
                z, cache = model.forward(xb, weights)
                q = softmax(z, axis=-1)
                probs_sum += q
                logq = np.log(np.clip(q[np.arange(b), yb], 1e-300, None))
                nll += float(np.mean(-wvec * logq))
                draws.append((weights, cache, q))
            nll /= cfg.mc_train
            mean_probs = probs_sum / cfg.mc_train

            # Barrier term on the MC-mean distribution, batch-mean aggregated.
            cub_value = 0.0
            gp_batch = np.zeros((b, model.k))
            if boundary_cfg is not None:
                cub_value, gp_batch = _batch_barrier(mean_probs, yb, boundary_cfg,
                                                     with_grad=beta_eff > 0)

            kl_value = kl_scale * model.kl()
            step_loss = nll + kl_value + beta_eff * cub_value
            if not np.isfinite(step_loss):
                raise TrainingDivergence(
                    f"non-finite loss at epoch {epoch}, step {n_steps}: "
                    f"nll={nll!r} kl={kl_value!r} cub={cub_value!r}"
                )

            grads = [np.zeros_like(p) for p in params]
            for weights, cache, q in draws:
                dz = q.copy()
                dz[np.arange(b), yb] -= 1.0
                dz *= wvec[:, None] / (b * cfg.mc_train)
                if beta_eff > 0:
                    # gp_batch already carries the 1/b batch-mean factor; the
                    # 1/S comes from mean_probs being the draw average.
                    inner = np.sum(q * gp_batch, axis=1, keepdims=True)
                    dz_cub = q * (gp_batch - inner) / cfg.mc_train
                    dz = dz + beta_eff * dz_cub
                layer_grads = model.backward(xb, weights, cache, dz)
                _accumulate_reparam(model, weights, layer_grads, grads)

            _accumulate_kl(model, grads, kl_scale)

            gi = 0
            for layer in model.layers:
                grads[gi] += cfg.weight_decay * layer.mu_w  # decay on means only
                gi += 4

            if cfg.grad_clip is not None:
                # The barrier gradient blows up as delta_norm approaches the
                # clamp; a global norm cap keeps single samples from dominating
                # an update.
                gnorm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
                if gnorm > cfg.grad_clip:
                    scale = cfg.grad_clip / gnorm
                    grads = [g * scale for g in grads]

            for p, v, g in zip(params, vel, grads):
                v *= cfg.momentum
                v -= lr * g
                p += v

            ep_nll += nll
            ep_kl += kl_value
            ep_cub += cub_value
            n_steps += 1

        eval_rng = np.random.default_rng([cfg.seed, 999, epoch])
        val_records = predict_records(model, x_val, y_val, cfg.mc_infer, eval_rng)
        acc = float(np.mean([r.accurate for r in val_records]))
        val_avu = avu(avu_counts(val_records, u_th))
        val_du = delta_u(val_records)
        trace.append({
            "epoch": epoch,
            "nll": ep_nll / n_steps,
            "kl": ep_kl / n_steps,
            "cub": ep_cub / n_steps,
            "acc": acc,
            "avu": val_avu,
            "delta_u": val_du,
        })
    return trace


def _batch_barrier(mean_probs: np.ndarray, yb: np.ndarray,
                   boundary_cfg: BoundaryConfig,
                   with_grad: bool) -> tuple[float, np.ndarray]:
    """Batch-mean barrier value and its per-sample probability gradients
    (both carry the 1/b factor)."""
    from .loss import boundary_deviation

    b = mean_probs.shape[0]
    gp = np.zeros_like(mean_probs)
    total = 0.0
    for i in range(b):
        p = mean_probs[i]
        rec = _lightweight_record(p, int(yb[i]))
        dnorm = boundary_deviation(rec, boundary_cfg).delta_norm
        total += -np.log(1.0 - dnorm)
        if with_grad:
            gp[i] = _barrier_grad_probs(p, int(yb[i]), boundary_cfg)
    return total / b, gp / b


def _lightweight_record(probs: np.ndarray, label: int) -> PredictionRecord:
    from .boundary import entropy

    pred = int(np.argmax(probs))
    return PredictionRecord(
        label=label,
        mean_logits=np.log(np.clip(probs, 1e-300, None)),
        mean_probs=probs,
        pred=pred,
        confidence=float(probs[pred]),
        uncertainty=entropy(probs),
    )


def _accumulate_reparam(model: VariationalMLP, weights, layer_grads, grads) -> None:
    """Chain sampled-weight gradients into (mu, rho) via w = mu + softplus(rho) * eps."""
    gi = 0
    for layer, (w, b, eps_w, eps_b), (dw, db) in zip(model.layers, weights, layer_grads):
        sig_w = 1.0 / (1.0 + np.exp(-layer.rho_w))  # d softplus / d rho
        sig_b = 1.0 / (1.0 + np.exp(-layer.rho_b))
        grads[gi] += dw
        grads[gi + 1] += db
        grads[gi + 2] += dw * eps_w * sig_w
        grads[gi + 3] += db * eps_b * sig_b
        gi += 4


def _accumulate_kl(model: VariationalMLP, grads, kl_scale: float) -> None:
    gi = 0
    for layer in model.layers:
        ps2 = layer.prior_std**2
        sigma_w, sigma_b = layer.sigma_w, layer.sigma_b
        sig_w = 1.0 / (1.0 + np.exp(-layer.rho_w))
        sig_b = 1.0 / (1.0 + np.exp(-layer.rho_b))
        grads[gi] += kl_scale * layer.mu_w / ps2
        grads[gi + 1] += kl_scale * layer.mu_b / ps2
        grads[gi + 2] += kl_scale * (sigma_w / ps2 - 1.0 / sigma_w) * sig_w
        grads[gi + 3] += kl_scale * (sigma_b / ps2 - 1.0 / sigma_b) * sig_b
        gi += 4


def save_checkpoint(model: VariationalMLP, path, cfg: TrainConfig | None = None,
                    extra_meta: dict | None = None) -> None:
    """Serialize the model as documented JSON (shapes, mu, rho, prior_std, meta)."""
    meta: dict = dict(extra_meta or {})
    if cfg is not None:
        meta["seed"] = cfg.seed
        meta["config_hash"] = hashlib.sha256(
            json.dumps(asdict(cfg), sort_keys=True).encode()
        ).hexdigest()
    obj = {
        "dim_in": model.dim_in,
        "hidden": model.hidden,
        "k": model.k,
        "layers": [
            {
                "shape": list(layer.mu_w.shape),
                "mu_w": layer.mu_w.tolist(),
                "rho_w": layer.rho_w.tolist(),
                "mu_b": layer.mu_b.tolist(),
                "rho_b": layer.rho_b.tolist(),
                "prior_std": layer.prior_std,
            }
            for layer in model.layers
        ],
        "meta": meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)


def load_checkpoint(path) -> VariationalMLP:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    model = VariationalMLP(obj["dim_in"], obj["hidden"], obj["k"])
    for layer, spec in zip(model.layers, obj["layers"]):
        layer.mu_w = np.array(spec["mu_w"], dtype=float)
        layer.rho_w = np.array(spec["rho_w"], dtype=float)
        layer.mu_b = np.array(spec["mu_b"], dtype=float)
        layer.rho_b = np.array(spec["rho_b"], dtype=float)
        layer.prior_std = float(spec["prior_std"])
    return model
