"""Small convolutional regression policy trained from scratch: forward pass,
hand-derived backpropagation, Adam, the training loop, gradient checking,
the control law wrapping the network, and the binary weights format.

All in-memory math is float64; the weights file stores float32.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .dataset import unmap_label

# (kind, out, kernel, stride, relu) for conv; pad is kernel // 2.
# The leading center layer shifts [0, 1] pixel inputs to zero mean, which the
# He-uniform initialization assumes.
DEFAULT_ARCH = (
    ("center", 0.5),
    ("conv", 8, 5, 2, True),
    ("conv", 16, 3, 2, True),
    ("conv", 32, 3, 2, True),
    ("flatten",),
    ("dense", 64, True),
    ("dense", 2, False),
)

WEIGHTS_MAGIC = b"HVSW"
WEIGHTS_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("invalid training configuration")


@dataclass
class DlbvsGains:
    alpha: float = 0.05
    label_units: str = "m"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")


@dataclass
class PolicyModel:
    arch: tuple
    input_hw: tuple
    params: dict
    meta: dict = field(default_factory=dict)


def _param_layout(arch, input_hw):
    """Yield (name, spec, in_shape) per parameterized layer, tracking shapes."""
    c, h, w = 1, input_hw[0], input_hw[1]
    conv_i = dense_i = 0
    flat = None
    for spec in arch:
        kind = spec[0]
        if kind == "conv":
            conv_i += 1
            _, out_ch, k, stride, _ = spec
            pad = k // 2
            yield f"conv{conv_i}", spec, (c, h, w)
            h = (h + 2 * pad - k) // stride + 1
            w = (w + 2 * pad - k) // stride + 1
            c = out_ch
        elif kind == "flatten":
            flat = c * h * w
        elif kind == "dense":
            dense_i += 1
            n_in = flat if flat is not None else c
            yield f"dense{dense_i}", spec, (n_in,)
            flat = None
            c = spec[1]
        elif kind != "center":
            raise ValueError(f"unknown layer kind {kind!r}")


def build_policy(seed=0, input_hw=(64, 64), arch=DEFAULT_ARCH, rng=None):
    """He-uniform initialized policy; biases start at zero."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    params = {}
    for name, spec, in_shape in _param_layout(arch, input_hw):
        if spec[0] == "conv":
            _, out_ch, k, _, _ = spec
            fan_in = in_shape[0] * k * k
            lim = np.sqrt(6.0 / fan_in)
            params[f"{name}.w"] = rng.uniform(-lim, lim, size=(out_ch, in_shape[0], k, k))
            params[f"{name}.b"] = np.zeros(out_ch)
        else:
            n_in, n_out = in_shape[0], spec[1]
            lim = np.sqrt(6.0 / n_in)
            params[f"{name}.w"] = rng.uniform(-lim, lim, size=(n_in, n_out))
            params[f"{name}.b"] = np.zeros(n_out)
    return PolicyModel(tuple(arch), tuple(input_hw), params, {"seed": seed})


def _im2col(x, k, stride, pad):
    b, c, h, w = x.shape
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((b, c, k, k, ho, wo))
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride]
    return cols.transpose(0, 4, 5, 1, 2, 3).reshape(b, ho * wo, c * k * k), (ho, wo)


def _col2im(dcols, x_shape, k, stride, pad):
    b, c, h, w = x_shape
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    dxp = np.zeros((b, c, h + 2 * pad, w + 2 * pad))
    d6 = dcols.reshape(b, ho, wo, c, k, k).transpose(0, 3, 4, 5, 1, 2)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += d6[:, :, i, j]
    return dxp[:, :, pad : pad + h, pad : pad + w]


def _forward_batch(model, x, want_cache=False):
    """x: (B, 1, h, w) -> (B, 2); optionally returns layer caches for backward."""
    caches = [] if want_cache else None
    conv_i = dense_i = 0
    h = x
    for spec in model.arch:
        kind = spec[0]
        if kind == "conv":
            conv_i += 1
            _, out_ch, k, stride, relu = spec
            w = model.params[f"conv{conv_i}.w"]
            bvec = model.params[f"conv{conv_i}.b"]
            cols, (ho, wo) = _im2col(h, k, stride, k // 2)
            y = cols @ w.reshape(out_ch, -1).T + bvec
            y = y.transpose(0, 2, 1).reshape(h.shape[0], out_ch, ho, wo)
            mask = None
            if relu:
                mask = y > 0
                y = np.where(mask, y, 0.0)
            if want_cache:
                caches.append((cols, h.shape, mask))
            h = y
        elif kind == "center":
            h = h - spec[1]
            if want_cache:
                caches.append(None)
        elif kind == "flatten":
            if want_cache:
                caches.append(h.shape)
            h = h.reshape(h.shape[0], -1)
        else:  # dense
            dense_i += 1
            w = model.params[f"dense{dense_i}.w"]
            bvec = model.params[f"dense{dense_i}.b"]
            y = h @ w + bvec
            mask = None
            if spec[2]:
                mask = y > 0
                y = np.where(mask, y, 0.0)
            if want_cache:
                caches.append((h, mask))
            h = y
    return (h, caches) if want_cache else h


def _backward_batch(model, dout, caches):
    """Gradient of the cached forward pass; returns a dict matching params."""
    grads = {}
    conv_i = sum(1 for s in model.arch if s[0] == "conv")
    dense_i = sum(1 for s in model.arch if s[0] == "dense")
    dh = dout
    for spec in reversed(model.arch):
        kind = spec[0]
        cache = caches.pop()
        if kind == "dense":
            h_in, mask = cache
            if mask is not None:
                dh = np.where(mask, dh, 0.0)
            w = model.params[f"dense{dense_i}.w"]
            grads[f"dense{dense_i}.w"] = h_in.T @ dh
            grads[f"dense{dense_i}.b"] = dh.sum(axis=0)
            dh = dh @ w.T
            dense_i -= 1
        elif kind == "center":
            pass
        elif kind == "flatten":
            dh = dh.reshape(cache)
        else:  # conv
            cols, x_shape, mask = cache
            _, out_ch, k, stride, _ = spec
            if mask is not None:
                dh = np.where(mask, dh, 0.0)
            b = dh.shape[0]
            dy = dh.reshape(b, out_ch, -1).transpose(0, 2, 1)  # (B, ho*wo, F)
            w = model.params[f"conv{conv_i}.w"]
            dw = dy.reshape(-1, out_ch).T @ cols.reshape(-1, cols.shape[2])
            grads[f"conv{conv_i}.w"] = dw.reshape(w.shape)
            grads[f"conv{conv_i}.b"] = dy.sum(axis=(0, 1))
            dcols = dy @ w.reshape(out_ch, -1)
            dh = _col2im(dcols, x_shape, k, stride, k // 2)
            conv_i -= 1
    return grads


def forward(model, img):
    """Mapped-label estimate (2,) for a single grayscale image."""
    img = np.asarray(img, dtype=float)
    if img.shape != model.input_hw:
        raise ValueError(f"expected image of shape {model.input_hw}, got {img.shape}")
    return _forward_batch(model, img[None, None])[0]


def mse_loss_and_grads(model, x, y):
    """Mean squared error over all outputs plus its parameter gradients."""
    pred, caches = _forward_batch(model, x, want_cache=True)
    diff = pred - y
    loss = float(np.mean(diff * diff))
    grads = _backward_batch(model, 2.0 * diff / diff.size, caches)
    return loss, grads, pred


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def for_params(cls, params):
        return cls(
            {k: np.zeros_like(p) for k, p in params.items()},
            {k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(params, grads, state: AdamState, cfg: TrainConfig):
    state.t += 1
    c1 = 1.0 - cfg.beta1**state.t
    c2 = 1.0 - cfg.beta2**state.t
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        params[name] -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)


def train(dataset, cfg: TrainConfig | None = None, seed=0):
    """Train a fresh policy on the dataset; returns (model, epoch loss curve).

    Deterministic for fixed seeds: init and shuffle streams are spawned from
    the one seed, and iteration order is fixed.
    """
    cfg = cfg or TrainConfig()
    if len(dataset.images) == 0:
        raise ValueError("dataset is empty")
    init_ss, shuffle_ss = np.random.SeedSequence(seed).spawn(2)
    model = build_policy(
        seed=seed, input_hw=dataset.images.shape[1:], rng=np.random.default_rng(init_ss)
    )
    shuffle_rng = np.random.default_rng(shuffle_ss)
    x_all = dataset.images[:, None, :, :]
    y_all = dataset.labels
    n = len(x_all)
    state = AdamState.for_params(model.params)
    curve = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        sq_sum = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads, pred = mse_loss_and_grads(model, x_all[idx], y_all[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch + 1}, step {lo // cfg.batch_size}: "
                    f"lr={cfg.learning_rate}"
                )
            sq_sum += loss * pred.size
            adam_step(model.params, grads, state, cfg)
        curve.append(sq_sum / (n * y_all.shape[1]))
    model.meta.update(epochs=cfg.epochs, final_loss=curve[-1], seed=seed)
    return model, curve


def grad_check(model, sample, delta=1e-5, samples_per_tensor=None, seed=0):
    """Max relative error between analytic and central-difference gradients.

    sample is an (image, label) pair.  With samples_per_tensor set, only that
    many randomly chosen entries per tensor are probed.
    """
    img, label = sample
    x = np.asarray(img, dtype=float)[None, None]
    y = np.asarray(label, dtype=float)[None]
    _, grads, _ = mse_loss_and_grads(model, x, y)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in sorted(model.params):
        p = model.params[name]
        if samples_per_tensor is None or p.size <= samples_per_tensor:
            flat_indices = np.arange(p.size)
        else:
            flat_indices = rng.choice(p.size, size=samples_per_tensor, replace=False)
        for i in flat_indices:
            orig = p.flat[i]
            p.flat[i] = orig + delta
            up = float(np.mean((_forward_batch(model, x) - y) ** 2))
            p.flat[i] = orig - delta
            dn = float(np.mean((_forward_batch(model, x) - y) ** 2))
            p.flat[i] = orig
            numeric = (up - dn) / (2.0 * delta)
            analytic = grads[name].flat[i]
            denom = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def dlbvs_step(model, img, gains: DlbvsGains | None = None):
    """Learned-policy control step: dq = -alpha * unmap(forward(img)), in mm."""
    gains = gains or DlbvsGains()
    return -gains.alpha * unmap_label(forward(model, img), units=gains.label_units)


# --- weights file -----------------------------------------------------------

def _arch_descriptor(model):
    parts = [f"in:{model.input_hw[0]}x{model.input_hw[1]}"]
    for spec in model.arch:
        if spec[0] == "conv":
            _, out_ch, k, stride, relu = spec
            parts.append(f"conv:{out_ch},k{k},s{stride}" + (",relu" if relu else ""))
        elif spec[0] == "center":
            parts.append(f"center:{spec[1]:g}")
        elif spec[0] == "flatten":
            parts.append("flatten")
        else:
            parts.append(f"dense:{spec[1]}" + (",relu" if spec[2] else ""))
    return ";".join(parts)


def _parse_descriptor(text):
    parts = text.split(";")
    if not parts or not parts[0].startswith("in:"):
        raise ValueError(f"bad architecture descriptor {text!r}")
    h, w = (int(t) for t in parts[0][3:].split("x"))
    arch = []
    for part in parts[1:]:
        if part == "flatten":
            arch.append(("flatten",))
        elif part.startswith("center:"):
            arch.append(("center", float(part[7:])))
        elif part.startswith("conv:"):
            fields = part[5:].split(",")
            arch.append(
                ("conv", int(fields[0]), int(fields[1][1:]), int(fields[2][1:]), "relu" in fields)
            )
        elif part.startswith("dense:"):
            fields = part[6:].split(",")
            arch.append(("dense", int(fields[0]), "relu" in fields))
        else:
            raise ValueError(f"bad layer descriptor {part!r}")
    return tuple(arch), (h, w)


def save_weights(model, path):
    """HVSW container: magic, u32 version, length-prefixed descriptor, then
    per tensor: length-prefixed name, u32 rank, u32 dims, float32 LE values."""
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", WEIGHTS_VERSION))
        desc = _arch_descriptor(model).encode("utf-8")
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        for name in sorted(model.params):
            data = model.params[name]
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", data.ndim))
            fh.write(struct.pack(f"<{data.ndim}I", *data.shape))
            fh.write(data.astype("<f4").tobytes())


def load_weights(path):
    with open(path, "rb") as fh:
        if fh.read(4) != WEIGHTS_MAGIC:
            raise ValueError(f"{path}: not a weights file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != WEIGHTS_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        (dlen,) = struct.unpack("<I", fh.read(4))
        arch, input_hw = _parse_descriptor(fh.read(dlen).decode("utf-8"))
        params = {}
        while True:
            head = fh.read(4)
            if not head:
                break
            (nlen,) = struct.unpack("<I", head)
            name = fh.read(nlen).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
            count = int(np.prod(dims))
            values = np.frombuffer(fh.read(4 * count), dtype="<f4")
            params[name] = values.astype(float).reshape(dims)
    return PolicyModel(arch, input_hw, params, {"loaded_from": str(path)})
