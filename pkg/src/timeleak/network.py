"""Three-branch feedforward ReLU model of execution time.

The secret branch ends in a k-bit hard-threshold interface; the joint branch
reads only those k bits plus the public branch output, so the predicted time
depends on the secret input solely through the interface valuation. Training
uses mini-batch Adam with a straight-through surrogate gradient at the
threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    FeatureSchema,
    Normalizer,
    TraceDataset,
    fit_normalizer,
    normalizer_from_json,
    normalizer_to_json,
    schema_from_json,
    schema_to_json,
)

MODEL_FORMAT = "timeleak-model"
MODEL_VERSION = 1


class NetworkError(Exception):
    pass


class DimensionMismatch(NetworkError):
    pass


class NonFiniteLoss(NetworkError):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class ModelFormatError(NetworkError):
    pass


class SchemaVersionMismatch(ModelFormatError):
    pass


@dataclass(frozen=True)
class Architecture:
    """Branch widths: secret hidden stack, k-bit interface, public stack, joint stack."""

    n_secret: int
    n_public: int
    k: int
    secret_widths: tuple[int, ...] = ()
    public_widths: tuple[int, ...] = ()
    joint_widths: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "secret_widths", tuple(self.secret_widths))
        object.__setattr__(self, "public_widths", tuple(self.public_widths))
        object.__setattr__(self, "joint_widths", tuple(self.joint_widths))
        if self.k < 0:
            raise DimensionMismatch("interface width k must be >= 0")
        if self.n_secret < 0 or self.n_public < 0 or (self.n_secret == 0 and self.n_public == 0):
            raise DimensionMismatch("need at least one input feature")
        if self.k > 0 and self.n_secret == 0:
            raise DimensionMismatch("a k >= 1 interface needs secret features")
        for w in self.secret_widths + self.public_widths + self.joint_widths:
            if w < 1:
                raise DimensionMismatch("hidden widths must be >= 1")

    @property
    def public_out_dim(self) -> int:
        return self.public_widths[-1] if self.public_widths else self.n_public

    @property
    def joint_in_dim(self) -> int:
        return self.k + self.public_out_dim


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 32
    max_epochs: int = 2000
    patience: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    seed: int = 0
    ste_clip: float = 1.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise NetworkError("learning_rate must be positive")
        if self.patience < 1:
            raise NetworkError("patience must be >= 1")
        if self.ste_clip <= 0:
            raise NetworkError("ste_clip must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise NetworkError("batch_size and max_epochs must be >= 1")
        if self.seed < 0:
            raise NetworkError("seed must be non-negative")


Layer = tuple[np.ndarray, np.ndarray]  # weight (out, in), bias (out,)


@dataclass(eq=False)
class TriBranchNetwork:
    arch: Architecture
    secret_layers: list[Layer]
    iface: Layer | None
    public_layers: list[Layer]
    joint_layers: list[Layer]
    out_layer: Layer
    normalizer: Normalizer | None = None
    schema: FeatureSchema | None = None
    seed: int = 0
    metrics: dict | None = None

    @property
    def k(self) -> int:
        return self.arch.k

    def parameters(self) -> list[np.ndarray]:
        """Weight/bias arrays in canonical order (shared with gradient lists)."""
        ps: list[np.ndarray] = []
        for w, b in self.secret_layers:
            ps += [w, b]
        if self.iface is not None:
            ps += [self.iface[0], self.iface[1]]
        for w, b in self.public_layers:
            ps += [w, b]
        for w, b in self.joint_layers:
            ps += [w, b]
        ps += [self.out_layer[0], self.out_layer[1]]
        return ps

    def ste_parameter_count(self) -> int:
        """Number of leading parameters whose gradients pass the STE surrogate."""
        return 2 * len(self.secret_layers) + (2 if self.iface is not None else 0)


def init(arch: Architecture, seed: int) -> TriBranchNetwork:
    """He-style uniform fan-in initialization with zero biases; deterministic per seed."""
    rng = np.random.default_rng(seed)

    def make(n_out: int, n_in: int) -> Layer:
        limit = np.sqrt(6.0 / max(n_in, 1))
        w = rng.uniform(-limit, limit, size=(n_out, n_in))
        return w, np.zeros(n_out)

    secret_layers: list[Layer] = []
    iface = None
    if arch.k > 0:
        d = arch.n_secret
        for w_out in arch.secret_widths:
            secret_layers.append(make(w_out, d))
            d = w_out
        iface = make(arch.k, d)
    public_layers: list[Layer] = []
    d = arch.n_public
    for w_out in arch.public_widths:
        public_layers.append(make(w_out, d))
        d = w_out
    joint_layers: list[Layer] = []
    d = arch.joint_in_dim
    for w_out in arch.joint_widths:
        joint_layers.append(make(w_out, d))
        d = w_out
    out_layer = make(1, d)
    return TriBranchNetwork(arch, secret_layers, iface, public_layers, joint_layers, out_layer, seed=seed)


def binarize(preact: np.ndarray) -> np.ndarray:
    """Threshold to bits: 1 where the pre-activation is >= 0 (ties map to 1)."""
    a = np.asarray(preact, dtype=np.float64)
    return (a >= 0).astype(np.int64)


def secret_interface_bits(net: TriBranchNetwork, xn: np.ndarray) -> np.ndarray:
    """Interface bits for a batch of normalized secret vectors; shape (rows, k)."""
    if net.k == 0:
        return np.zeros((xn.shape[0], 0), dtype=np.int64)
    h = xn
    for w, b in net.secret_layers:
        h = np.maximum(h @ w.T + b, 0.0)
    a = h @ net.iface[0].T + net.iface[1]
    return (a >= 0).astype(np.int64)


def _forward_cache(net: TriBranchNetwork, xn: np.ndarray, yn: np.ndarray) -> dict:
    cache: dict = {}
    rows = yn.shape[0] if net.arch.n_public else xn.shape[0]

    if net.k > 0:
        h = xn
        sec_in, sec_z = [], []
        for w, b in net.secret_layers:
            sec_in.append(h)
            z = h @ w.T + b
            sec_z.append(z)
            h = np.maximum(z, 0.0)
        preact = h @ net.iface[0].T + net.iface[1]
        bits = (preact >= 0).astype(np.float64)
        cache.update(sec_in=sec_in, sec_z=sec_z, sec_out=h, iface_preact=preact)
    else:
        bits = np.zeros((rows, 0))

    h = yn
    pub_in, pub_z = [], []
    for w, b in net.public_layers:
        pub_in.append(h)
        z = h @ w.T + b
        pub_z.append(z)
        h = np.maximum(z, 0.0)
    cache.update(pub_in=pub_in, pub_z=pub_z, pub_out=h)

    h = np.hstack([bits, h]) if net.k > 0 else h
    joint_in, joint_z = [], []
    for w, b in net.joint_layers:
        joint_in.append(h)
        z = h @ w.T + b
        joint_z.append(z)
        h = np.maximum(z, 0.0)
    t_hat = (h @ net.out_layer[0].T + net.out_layer[1])[:, 0]
    cache.update(joint_in=joint_in, joint_z=joint_z, joint_out=h, bits=bits, t_hat=t_hat)
    return cache


def predict_batch(net: TriBranchNetwork, xn: np.ndarray, yn: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized predictions and interface bits for batches of normalized inputs."""
    cache = _forward_cache(net, xn, yn)
    return cache["t_hat"], cache["bits"].astype(np.int64)


def forward(net: TriBranchNetwork, x, y) -> tuple[float, np.ndarray]:
    """Single-sample forward pass on already-normalized inputs -> (t_hat, bits)."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    y = np.asarray(y, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != net.arch.n_secret or y.shape[1] != net.arch.n_public:
        raise DimensionMismatch(
            f"expected {net.arch.n_secret} secret / {net.arch.n_public} public features, "
            f"got {x.shape[1]} / {y.shape[1]}"
        )
    t_hat, bits = predict_batch(net, x, y)
    return float(t_hat[0]), bits[0]


def loss_and_gradients(
    net: TriBranchNetwork,
    batch: tuple[np.ndarray, np.ndarray, np.ndarray],
    ste_clip: float = 1.0,
) -> tuple[float, list[np.ndarray]]:
    """Mean squared error over a normalized batch plus reverse-mode gradients.

    At the interface threshold the backward pass uses the straight-through
    surrogate: the incoming gradient passes unchanged where the pre-activation
    magnitude is at most `ste_clip` and is zeroed elsewhere.
    """
    xn, yn, tn = batch
    rows = tn.shape[0]
    if rows == 0:
        raise NetworkError("batch must be non-empty")
    cache = _forward_cache(net, xn, yn)
    resid = cache["t_hat"] - tn
    loss = float(np.mean(resid**2))
    if not np.isfinite(loss):
        raise NonFiniteLoss("loss is not finite")

    params = net.parameters()
    index = {id(p): i for i, p in enumerate(params)}
    out: list[np.ndarray | None] = [None] * len(params)

    def put(param: np.ndarray, grad: np.ndarray) -> None:
        out[index[id(param)]] = grad

    dz = (2.0 / rows) * resid[:, None]
    put(net.out_layer[0], dz.T @ cache["joint_out"])
    put(net.out_layer[1], dz.sum(axis=0))
    dh = dz @ net.out_layer[0]
    for (w, b), h_in, z in zip(reversed(net.joint_layers), reversed(cache["joint_in"]), reversed(cache["joint_z"])):
        dz = dh * (z > 0)
        put(w, dz.T @ h_in)
        put(b, dz.sum(axis=0))
        dh = dz @ w

    k = net.k
    dbits, dpub = dh[:, :k], dh[:, k:]

    if k > 0:
        preact = cache["iface_preact"]
        da = dbits * (np.abs(preact) <= ste_clip)
        put(net.iface[0], da.T @ cache["sec_out"])
        put(net.iface[1], da.sum(axis=0))
        dh_s = da @ net.iface[0]
        for (w, b), h_in, z in zip(reversed(net.secret_layers), reversed(cache["sec_in"]), reversed(cache["sec_z"])):
            dz = dh_s * (z > 0)
            put(w, dz.T @ h_in)
            put(b, dz.sum(axis=0))
            dh_s = dz @ w

    dh_p = dpub
    for (w, b), h_in, z in zip(reversed(net.public_layers), reversed(cache["pub_in"]), reversed(cache["pub_z"])):
        dz = dh_p * (z > 0)
        put(w, dz.T @ h_in)
        put(b, dz.sum(axis=0))
        dh_p = dz @ w

    assert all(g is not None for g in out)
    return loss, out  # type: ignore[return-value]


@dataclass
class AdamState:
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    config: TrainConfig,
) -> AdamState:
    """One bias-corrected Adam update, applied to the parameter arrays in place."""
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    t = state.step
    b1, b2 = config.beta1, config.beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g**2
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        p -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps_adam)
    return state


def _normalized_arrays(net_norm: Normalizer, ds: TraceDataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return net_norm.map_secrets(ds.x), net_norm.map_publics(ds.y), net_norm.map_time(ds.t)


def _sse_arrays(net: TriBranchNetwork, xn, yn, tn) -> float:
    t_hat, _ = predict_batch(net, xn, yn)
    return float(np.sum((t_hat - tn) ** 2))


def train(
    ds_train: TraceDataset,
    ds_valid: TraceDataset,
    arch: Architecture,
    config: TrainConfig,
) -> tuple[TriBranchNetwork, list[tuple[float, float]]]:
    """Mini-batch Adam training; early-stops on validation SSE and returns the
    best-validation snapshot plus the per-epoch (train SSE, valid SSE) history."""
    if ds_train.schema != ds_valid.schema:
        raise DimensionMismatch("train and validation datasets must share a schema")
    if arch.n_secret != ds_train.schema.n_secret or arch.n_public != ds_train.schema.n_public:
        raise DimensionMismatch("architecture input dims do not match the schema")

    norm = fit_normalizer(ds_train)
    xtr, ytr, ttr = _normalized_arrays(norm, ds_train)
    xva, yva, tva = _normalized_arrays(norm, ds_valid)

    net = init(arch, config.seed)
    net.normalizer = norm
    net.schema = ds_train.schema
    params = net.parameters()
    state = AdamState()

    n = ds_train.n_rows
    history: list[tuple[float, float]] = []
    best_valid = np.inf
    best_snapshot = [p.copy() for p in params]
    stall = 0

    for epoch in range(config.max_epochs):
        order = np.random.default_rng([config.seed, epoch]).permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            try:
                loss, grads = loss_and_gradients(net, (xtr[idx], ytr[idx], ttr[idx]), config.ste_clip)
            except NonFiniteLoss as exc:
                raise NonFiniteLoss(f"loss diverged at epoch {epoch}", epoch) from exc
            adam_step(params, grads, state, config)

        train_sse = _sse_arrays(net, xtr, ytr, ttr)
        valid_sse = _sse_arrays(net, xva, yva, tva)
        if not (np.isfinite(train_sse) and np.isfinite(valid_sse)):
            raise NonFiniteLoss(f"SSE diverged at epoch {epoch}", epoch)
        history.append((train_sse, valid_sse))

        if valid_sse < best_valid - 1e-12:
            best_valid = valid_sse
            best_snapshot = [p.copy() for p in params]
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                break

    for p, s in zip(params, best_snapshot):
        p[...] = s
    net.metrics = {
        "epochs": len(history),
        "train_sse": history[-1][0],
        "valid_sse": best_valid,
    }
    return net, history


def sse(net: TriBranchNetwork, ds: TraceDataset) -> float:
    """Sum of squared residuals on the normalized time scale."""
    if ds.n_rows == 0:
        raise NetworkError("dataset is empty")
    return _sse_arrays(net, *_normalized_arrays(net.normalizer, ds))


def r2(net: TriBranchNetwork, ds: TraceDataset) -> float:
    """Coefficient of determination on the denormalized time scale."""
    if ds.n_rows == 0:
        raise NetworkError("dataset is empty")
    xn, yn, _ = _normalized_arrays(net.normalizer, ds)
    t_hat = net.normalizer.unmap_time(predict_batch(net, xn, yn)[0])
    ss_res = float(np.sum((ds.t - t_hat) ** 2))
    ss_tot = float(np.sum((ds.t - ds.t.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def max_abs_residual(net: TriBranchNetwork, ds: TraceDataset) -> float:
    """Largest absolute prediction error in raw time units (the infinity norm)."""
    if ds.n_rows == 0:
        raise NetworkError("dataset is empty")
    xn, yn, _ = _normalized_arrays(net.normalizer, ds)
    t_hat = net.normalizer.unmap_time(predict_batch(net, xn, yn)[0])
    return float(np.max(np.abs(ds.t - t_hat)))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _layer_to_json(layer: Layer) -> dict:
    return {"w": layer[0].tolist(), "b": layer[1].tolist()}


def _layer_from_json(obj: dict) -> Layer:
    return np.asarray(obj["w"], dtype=np.float64), np.asarray(obj["b"], dtype=np.float64)


def to_json(net: TriBranchNetwork) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "architecture": {
            "n_secret": net.arch.n_secret,
            "n_public": net.arch.n_public,
            "k": net.arch.k,
            "secret_widths": list(net.arch.secret_widths),
            "public_widths": list(net.arch.public_widths),
            "joint_widths": list(net.arch.joint_widths),
        },
        "weights": {
            "secret": [_layer_to_json(l) for l in net.secret_layers],
            "iface": _layer_to_json(net.iface) if net.iface is not None else None,
            "public": [_layer_to_json(l) for l in net.public_layers],
            "joint": [_layer_to_json(l) for l in net.joint_layers],
            "out": _layer_to_json(net.out_layer),
        },
        "normalizer": normalizer_to_json(net.normalizer) if net.normalizer else None,
        "schema": schema_to_json(net.schema) if net.schema else None,
        "seed": net.seed,
        "metrics": net.metrics,
    }


def from_json(obj: dict) -> TriBranchNetwork:
    if not isinstance(obj, dict) or obj.get("format") != MODEL_FORMAT:
        raise SchemaVersionMismatch("not a timeleak model file")
    if obj.get("version") != MODEL_VERSION:
        raise SchemaVersionMismatch(f"unsupported model version {obj.get('version')!r}")
    a = obj["architecture"]
    arch = Architecture(
        n_secret=a["n_secret"],
        n_public=a["n_public"],
        k=a["k"],
        secret_widths=tuple(a["secret_widths"]),
        public_widths=tuple(a["public_widths"]),
        joint_widths=tuple(a["joint_widths"]),
    )
    w = obj["weights"]
    net = TriBranchNetwork(
        arch,
        [_layer_from_json(l) for l in w["secret"]],
        _layer_from_json(w["iface"]) if w["iface"] is not None else None,
        [_layer_from_json(l) for l in w["public"]],
        [_layer_from_json(l) for l in w["joint"]],
        _layer_from_json(w["out"]),
        normalizer=normalizer_from_json(obj["normalizer"]) if obj.get("normalizer") else None,
        schema=schema_from_json(obj["schema"]) if obj.get("schema") else None,
        seed=int(obj.get("seed", 0)),
        metrics=obj.get("metrics"),
    )
    return net


def save(net: TriBranchNetwork, path) -> None:
    from .jsonio import write_json

    write_json(path, to_json(net))


def load(path) -> TriBranchNetwork:
    try:
        text = Path(path).read_text(encoding="utf-8")
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return from_json(obj)
