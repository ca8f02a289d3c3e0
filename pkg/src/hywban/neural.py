"""Dense network engine: autoencoder + classifier head, Adam, early stopping, int8 quantization.

Everything is plain numpy in float64. Weight matrices are stored as
``(input_dim, output_dim)`` so a layer computes ``x @ W + b``.
"""
from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_NAMES, FeatureVector, SemanticLabel, ValidationError
from .seeding import derive_seed, make_rng

N_FEATURES = len(FEATURE_NAMES)
N_CLASSES = len(SemanticLabel)
CODE_DIM = 32


class UntrainedModelError(RuntimeError):
    pass


class Activation(enum.IntEnum):
    RELU = 0
    LINEAR = 1
    SOFTMAX = 2


@dataclass(frozen=True)
class LayerSpec:
    input_dim: int
    output_dim: int
    activation: Activation
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValidationError("layer dims must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError("dropout_rate must be in [0, 1)")


ENCODER = (LayerSpec(N_FEATURES, 64, Activation.RELU), LayerSpec(64, CODE_DIM, Activation.RELU))
DECODER = (LayerSpec(CODE_DIM, 64, Activation.RELU), LayerSpec(64, N_FEATURES, Activation.LINEAR))
HEAD = (LayerSpec(CODE_DIM, 16, Activation.RELU, dropout_rate=0.2), LayerSpec(16, N_CLASSES, Activation.SOFTMAX))
GROUPS = ("encoder", "decoder", "head")


@dataclass
class Layer:
    spec: LayerSpec
    W: np.ndarray
    b: np.ndarray


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 50
    batch_size: int = 256
    early_stop_patience: int = 5
    early_stop_min_delta: float = 1e-4
    seed: int = 42
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if not 0 < self.learning_rate < 1:
            raise ValidationError("learning_rate must be in (0, 1)")
        # epochs == 0 is allowed and means "return the model untouched".
        if self.epochs < 0 or self.batch_size < 1 or self.early_stop_patience < 1:
            raise ValidationError("epochs, batch_size and patience must be positive")
        if self.early_stop_min_delta < 0 or self.adam_eps <= 0:
            raise ValidationError("min_delta and adam_eps must be positive")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValidationError("Adam betas must be in (0, 1)")


# Autoencoder defaults above follow the published setup; the head trains
# longer on smaller batches because 50 epochs of batch 256 underfits it.
CLASSIFIER_CONFIG = TrainConfig(batch_size=32, epochs=200, early_stop_patience=10)


@dataclass
class Model:
    encoder: list[Layer]
    decoder: list[Layer]
    head: list[Layer]
    feature_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    feature_std: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))
    autoencoder_trained: bool = False
    classifier_trained: bool = False
    optimizer_state: dict = field(default_factory=dict)

    def group(self, name: str) -> list[Layer]:
        return getattr(self, name)

    def named_params(self, groups=GROUPS):
        for g in groups:
            for i, layer in enumerate(self.group(g)):
                yield f"{g}.{i}.W", layer.W
                yield f"{g}.{i}.b", layer.b

    def copy(self) -> "Model":
        return copy.deepcopy(self)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.feature_mean) / self.feature_std


def init_limit(spec: LayerSpec) -> float:
    """Uniform init bound: He for ReLU layers, LeCun otherwise."""
    gain = 6.0 if spec.activation == Activation.RELU else 3.0
    return math.sqrt(gain / spec.input_dim)


def init_model(seed: int = 42) -> Model:
    rng = make_rng(derive_seed(seed, "init"))
    groups = []
    for specs in (ENCODER, DECODER, HEAD):
        layers = []
        for spec in specs:
            lim = init_limit(spec)
            W = rng.uniform(-lim, lim, size=(spec.input_dim, spec.output_dim))
            layers.append(Layer(spec, W, np.zeros(spec.output_dim)))
        groups.append(layers)
    return Model(*groups)


# ---------------------------------------------------------------- forward/backward

def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _activate(z: np.ndarray, act: Activation) -> np.ndarray:
    if act == Activation.RELU:
        return np.maximum(z, 0.0)
    if act == Activation.SOFTMAX:
        return softmax(z)
    return z


def forward(layers, x: np.ndarray, training: bool = False, rng: np.random.Generator | None = None):
    """Run ``x`` through ``layers``; returns ``(output, caches)`` for :func:`backward`."""
    caches = []
    a = x
    for layer in layers:
        z = a @ layer.W + layer.b
        out = _activate(z, layer.spec.activation)
        mask = None
        if training and layer.spec.dropout_rate > 0:
            keep = 1.0 - layer.spec.dropout_rate
            mask = (rng.random(out.shape) < keep) / keep
            out = out * mask
        caches.append((a, z, mask))
        a = out
    return a, caches


def backward(layers, caches, grad_z_last: np.ndarray):
    """Backprop from the gradient w.r.t. the last layer's pre-activation.

    Returns ``(grads, grad_input)`` with ``grads`` a list of ``(dW, db)``.
    """
    grads = [None] * len(layers)
    gz = grad_z_last
    for i in range(len(layers) - 1, -1, -1):
        a_in, _, _ = caches[i]
        grads[i] = (a_in.T @ gz, gz.sum(axis=0))
        ga = gz @ layers[i].W.T
        if i == 0:
            return grads, ga
        _, z_prev, mask_prev = caches[i - 1]
        if mask_prev is not None:
            ga = ga * mask_prev
        act = layers[i - 1].spec.activation
        if act == Activation.RELU:
            gz = ga * (z_prev > 0)
        elif act == Activation.LINEAR:
            gz = ga
        else:
            raise ValidationError("softmax is only supported as the final layer")
    return grads, gz


def reconstruction_loss(model: Model, xs: np.ndarray) -> float:
    code, _ = forward(model.encoder, xs)
    recon, _ = forward(model.decoder, code)
    return float(np.mean((recon - xs) ** 2))


def cross_entropy(probs: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(probs[np.arange(len(y)), y], 1e-12, 1.0)
    return float(-np.mean(np.log(p)))


def autoencoder_grads(model: Model, xs: np.ndarray, training=False, rng=None):
    """MSE loss and gradients for encoder+decoder on standardized ``xs``."""
    code, enc_c = forward(model.encoder, xs, training, rng)
    recon, dec_c = forward(model.decoder, code, training, rng)
    loss = float(np.mean((recon - xs) ** 2))
    g = 2.0 * (recon - xs) / recon.size
    dec_g, g_code = backward(model.decoder, dec_c, g)
    # the encoder's final activation sits between g_code and its pre-activation
    _, z_last, mask_last = enc_c[-1]
    if mask_last is not None:
        g_code = g_code * mask_last
    g_code = g_code * (z_last > 0)
    enc_g, _ = backward(model.encoder, enc_c, g_code)
    return loss, {"encoder": enc_g, "decoder": dec_g}


def classifier_grads(model: Model, codes: np.ndarray, y: np.ndarray, training=False, rng=None):
    """Cross-entropy loss and head gradients on precomputed codes."""
    probs, caches = forward(model.head, codes, training, rng)
    loss = cross_entropy(probs, y)
    g = probs.copy()
    g[np.arange(len(y)), y] -= 1.0
    g /= len(y)
    head_g, g_codes = backward(model.head, caches, g)
    return loss, {"head": head_g}, g_codes


def full_classifier_grads(model: Model, xs: np.ndarray, y: np.ndarray):
    """Cross-entropy gradients through head *and* encoder (used only for gradient checks)."""
    code, enc_c = forward(model.encoder, xs)
    loss, grads, g_code = classifier_grads(model, code, y)
    g_code = g_code * (enc_c[-1][1] > 0)
    grads["encoder"], _ = backward(model.encoder, enc_c, g_code)
    return loss, grads


# ---------------------------------------------------------------- optimizer / early stopping

class Adam:
    """Adam with bias correction; moments live in ``model.optimizer_state`` keyed by parameter name."""

    def __init__(self, model: Model, cfg: TrainConfig, stage: str):
        self.model = model
        self.cfg = cfg
        self.state = model.optimizer_state.setdefault(stage, {"step": 0, "m": {}, "v": {}})

    def step(self, grads: dict) -> None:
        cfg, st = self.cfg, self.state
        st["step"] += 1
        t = st["step"]
        c1 = 1.0 - cfg.adam_beta1 ** t
        c2 = 1.0 - cfg.adam_beta2 ** t
        for g_name, layer_grads in grads.items():
            for i, (dW, db) in enumerate(layer_grads):
                layer = self.model.group(g_name)[i]
                for suffix, p, g in (("W", layer.W, dW), ("b", layer.b, db)):
                    key = f"{g_name}.{i}.{suffix}"
                    m = st["m"].setdefault(key, np.zeros_like(p))
                    v = st["v"].setdefault(key, np.zeros_like(p))
                    m *= cfg.adam_beta1
                    m += (1 - cfg.adam_beta1) * g
                    v *= cfg.adam_beta2
                    v += (1 - cfg.adam_beta2) * g * g
                    p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)


class EarlyStopping:
    """Patience counter on validation loss.

    Improvements smaller than ``min_delta`` do not reset patience, but the
    best snapshot always tracks the strict minimum so the restored model
    really is the lowest-loss one seen.
    """

    def __init__(self, patience: int, min_delta: float):
        self.patience = patience
        self.min_delta = min_delta
        self.best = math.inf
        self.best_epoch = -1
        self._ref = math.inf
        self.wait = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Record ``loss``; returns True if this epoch is the new best."""
        improved = loss < self.best
        if improved:
            self.best, self.best_epoch = loss, epoch
        if loss < self._ref - self.min_delta:
            self._ref = loss
            self.wait = 0
        else:
            self.wait += 1
        return improved

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience


def fit_standardizer(model: Model, x: np.ndarray) -> None:
    x = np.asarray(x, dtype=np.float64)
    std = x.std(axis=0)
    model.feature_mean = x.mean(axis=0)
    model.feature_std = np.where(std > 0, std, 1.0)


def _round_to_float32(model: Model) -> None:
    # keeps the saved float32 container lossless with respect to the in-memory model
    for _, p in model.named_params():
        p[...] = p.astype(np.float32)


def _snapshot(model, groups):
    return {name: p.copy() for name, p in model.named_params(groups)}


def _restore(model, snap):
    for name, p in model.named_params():
        if name in snap:
            p[...] = snap[name]


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_autoencoder(m: Model, train, val, cfg: TrainConfig = TrainConfig()):
    """Fit encoder+decoder on reconstruction MSE.

    The standardizer is fitted on ``train`` here. History row 0 holds the
    losses before any update.
    """
    if len(train) == 0 or len(val) == 0:
        raise ValidationError("training and validation sets must be non-empty")
    model = m.copy()
    if cfg.epochs == 0:
        return model, []
    fit_standardizer(model, train.features)
    xt, xv = model.standardize(train.features), model.standardize(val.features)
    rng = make_rng(derive_seed(cfg.seed, "train-autoencoder"))
    opt = Adam(model, cfg, "autoencoder")
    stopper = EarlyStopping(cfg.early_stop_patience, cfg.early_stop_min_delta)
    groups = ("encoder", "decoder")

    history = []
    val_loss = reconstruction_loss(model, xv)
    history.append({"epoch": 0, "train_loss": reconstruction_loss(model, xt), "val_loss": val_loss,
                    "val_accuracy": None})
    stopper.update(0, val_loss)
    best = _snapshot(model, groups)
    for epoch in range(1, cfg.epochs + 1):
        for idx in _batches(len(xt), cfg.batch_size, rng):
            _, grads = autoencoder_grads(model, xt[idx], True, rng)
            opt.step(grads)
        val_loss = reconstruction_loss(model, xv)
        history.append({"epoch": epoch, "train_loss": reconstruction_loss(model, xt), "val_loss": val_loss,
                        "val_accuracy": None})
        if stopper.update(epoch, val_loss):
            best = _snapshot(model, groups)
        if stopper.should_stop:
            break
    _restore(model, best)
    _round_to_float32(model)
    model.autoencoder_trained = True
    return model, history


def _codes(model: Model, x: np.ndarray) -> np.ndarray:
    code, _ = forward(model.encoder, model.standardize(x))
    return code


def train_classifier(m: Model, train, val, cfg: TrainConfig = CLASSIFIER_CONFIG):
    """Fit the head on frozen-encoder codes with cross-entropy.

    History rows carry ``val_accuracy``; the final row also exposes
    ``train_accuracy`` and an ``overfit`` flag (train - val accuracy > 0.05).
    """
    if not m.autoencoder_trained:
        raise UntrainedModelError("train the autoencoder before the classifier")
    if len(train) == 0 or len(val) == 0:
        raise ValidationError("training and validation sets must be non-empty")
    model = m.copy()
    if cfg.epochs == 0:
        return model, []
    ct, cv = _codes(model, train.features), _codes(model, val.features)
    yt, yv = train.labels, val.labels
    rng = make_rng(derive_seed(cfg.seed, "train-classifier"))
    opt = Adam(model, cfg, "classifier")
    stopper = EarlyStopping(cfg.early_stop_patience, cfg.early_stop_min_delta)

    def evaluate(codes, y):
        probs, _ = forward(model.head, codes)
        return cross_entropy(probs, y), float(np.mean(probs.argmax(axis=1) == y))

    history = []
    tl, _ = evaluate(ct, yt)
    vl, va = evaluate(cv, yv)
    history.append({"epoch": 0, "train_loss": tl, "val_loss": vl, "val_accuracy": va})
    stopper.update(0, vl)
    best = _snapshot(model, ("head",))
    for epoch in range(1, cfg.epochs + 1):
        for idx in _batches(len(ct), cfg.batch_size, rng):
            _, grads, _ = classifier_grads(model, ct[idx], yt[idx], True, rng)
            opt.step(grads)
        tl, _ = evaluate(ct, yt)
        vl, va = evaluate(cv, yv)
        history.append({"epoch": epoch, "train_loss": tl, "val_loss": vl, "val_accuracy": va})
        if stopper.update(epoch, vl):
            best = _snapshot(model, ("head",))
        if stopper.should_stop:
            break
    _restore(model, best)
    _round_to_float32(model)
    model.classifier_trained = True
    _, train_acc = evaluate(ct, yt)
    _, val_acc = evaluate(cv, yv)
    history[-1]["train_accuracy"] = train_acc
    history[-1]["overfit"] = train_acc - val_acc > 0.05
    return model, history


# ---------------------------------------------------------------- inference

def _as_matrix(f) -> np.ndarray:
    if isinstance(f, FeatureVector):
        return f.as_array()[None, :]
    x = np.asarray(f, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def encode(m: Model, f) -> np.ndarray:
    """32-dim latent code(s) for a FeatureVector or an ``(n, 5)`` matrix."""
    if not m.autoencoder_trained:
        raise UntrainedModelError("encoder has not been trained")
    single = isinstance(f, FeatureVector) or np.ndim(f) == 1
    code = _codes(m, _as_matrix(f))
    return code[0] if single else code


def predict_proba(m: Model, x) -> np.ndarray:
    if not (m.autoencoder_trained and m.classifier_trained):
        raise UntrainedModelError("model has not been fully trained")
    probs, _ = forward(m.head, _codes(m, _as_matrix(x)))
    return probs


def classify(m: Model, f) -> tuple[SemanticLabel, np.ndarray]:
    probs = predict_proba(m, f)[0]
    return SemanticLabel(int(np.argmax(probs))), probs


def predict(m: Model, x) -> np.ndarray:
    return predict_proba(m, x).argmax(axis=1)


# ---------------------------------------------------------------- gradient check

def _param_index(model: Model, groups):
    return [(name, p) for name, p in model.named_params(groups)]


def grad_check(m: Model, xs: np.ndarray, y: np.ndarray, n_params: int = 100, eps: float = 1e-5,
               seed: int = 0) -> dict[str, float]:
    """Max relative error between analytic and central-difference gradients.

    ``xs`` is a standardized feature batch, ``y`` its labels. Checks the
    reconstruction loss over encoder+decoder and the cross-entropy over
    head+encoder, ``n_params`` random entries each. Dropout is off.
    """
    model = m.copy()
    rng = make_rng(seed)
    xs = np.asarray(xs, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    checks = {
        "reconstruction": (("encoder", "decoder"),
                           lambda: autoencoder_grads(model, xs),
                           lambda: reconstruction_loss(model, xs)),
        "cross_entropy": (("head", "encoder"),
                          lambda: full_classifier_grads(model, xs, y),
                          lambda: cross_entropy(forward(model.head, forward(model.encoder, xs)[0])[0], y)),
    }
    result = {}
    for name, (groups, grad_fn, loss_fn) in checks.items():
        _, grads = grad_fn()
        analytic = {}
        for g in groups:
            for i, (dW, db) in enumerate(grads[g]):
                analytic[f"{g}.{i}.W"] = dW
                analytic[f"{g}.{i}.b"] = db
        params = _param_index(model, groups)
        sizes = np.array([p.size for _, p in params])
        picks = rng.choice(sizes.sum(), size=min(n_params, sizes.sum()), replace=False)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        worst = 0.0
        for flat in picks:
            k = int(np.searchsorted(offsets, flat, side="right") - 1)
            pname, p = params[k]
            idx = np.unravel_index(flat - offsets[k], p.shape)
            orig = p[idx]
            p[idx] = orig + eps
            lp = loss_fn()
            p[idx] = orig - eps
            lm = loss_fn()
            p[idx] = orig
            numeric = (lp - lm) / (2 * eps)
            a = analytic[pname][idx]
            denom = max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, abs(a - numeric) / denom)
        result[name] = float(worst)
    return result


# ---------------------------------------------------------------- quantization

@dataclass
class QuantizedLayer:
    spec: LayerSpec
    q: np.ndarray  # int8 weights
    scale: float
    zero_point: int
    b: np.ndarray  # biases stay in float

    def dequantize(self) -> np.ndarray:
        return (self.q.astype(np.float64) - self.zero_point) * self.scale


@dataclass
class QuantizedModel:
    encoder: list[QuantizedLayer]
    decoder: list[QuantizedLayer]
    head: list[QuantizedLayer]
    feature_mean: np.ndarray
    feature_std: np.ndarray

    def group(self, name: str) -> list[QuantizedLayer]:
        return getattr(self, name)

    def dequantized(self) -> Model:
        groups = [[Layer(ql.spec, ql.dequantize(), ql.b.astype(np.float64).copy()) for ql in self.group(g)]
                  for g in GROUPS]
        return Model(*groups, feature_mean=self.feature_mean.copy(), feature_std=self.feature_std.copy(),
                     autoencoder_trained=True, classifier_trained=True)


def quantize_tensor(w: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Per-tensor symmetric int8: scale = max|w| / 127, zero point 0."""
    peak = float(np.max(np.abs(w))) if w.size else 0.0
    scale = peak / 127.0 if peak > 0 else 1.0
    q = np.clip(np.rint(w / scale), -127, 127).astype(np.int8)
    return q, scale, 0


def quantize(m: Model) -> QuantizedModel:
    if not (m.autoencoder_trained and m.classifier_trained):
        raise UntrainedModelError("quantize expects a trained model")
    groups = []
    for g in GROUPS:
        qlayers = []
        for layer in m.group(g):
            q, scale, zp = quantize_tensor(layer.W)
            qlayers.append(QuantizedLayer(layer.spec, q, scale, zp, layer.b.astype(np.float32).astype(np.float64)))
        groups.append(qlayers)
    return QuantizedModel(*groups, feature_mean=m.feature_mean.copy(), feature_std=m.feature_std.copy())


def classify_quantized(qm: QuantizedModel, f) -> tuple[SemanticLabel, np.ndarray]:
    return classify(qm.dequantized(), f)


def predict_quantized(qm: QuantizedModel, x) -> np.ndarray:
    return predict(qm.dequantized(), x)
