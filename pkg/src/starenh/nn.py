"""Networks: style encoder, mapping network, and curve encoder.

All convolutional trunks are shallow residual stacks with no normalization
layers; residual branches are Fixup-initialized (zero final conv, depth-scaled
first conv) so every block starts as the identity map. Style conditioning
enters the curve encoder through Dual AdaIN: per-channel affine statistics
come from the mapping network, never from the feature map itself.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict

import numpy as np
import torch
from torch import nn as tnn
from torch.nn import functional as F

SIGMA_MIN = 1e-3
WEIGHTS_MAGIC = b"STARENH1"


@dataclass(frozen=True)
class ModelConfig:
    downsample_size: int = 256  # K: low-res input fed to both encoders
    embed_dim: int = 64  # E
    num_styles: int = 2  # |Q| for the classifier head
    style_widths: tuple = (16, 32, 64)
    encoder_widths: tuple = (16, 32, 64, 96)  # one Dual AdaIN after each stage
    mapping_hidden: int = 128
    mapping_layers: int = 2
    color_knots: int = 17
    coord_knots: int = 9
    logit_scale: float = 30.0  # s in the classification loss

    @property
    def insertion_count(self) -> int:
        return len(self.encoder_widths)  # L

    @property
    def total_knots(self) -> int:
        return 9 * self.color_knots + 6 * self.coord_knots

    def to_dict(self) -> dict:
        d = asdict(self)
        d["style_widths"] = list(self.style_widths)
        d["encoder_widths"] = list(self.encoder_widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["style_widths"] = tuple(d["style_widths"])
        d["encoder_widths"] = tuple(d["encoder_widths"])
        return cls(**d)


def _he_init(weight: torch.Tensor, g: torch.Generator, gain: float = 1.0):
    fan_in = weight.shape[1] * weight[0][0].numel()
    std = gain * (2.0 / fan_in) ** 0.5
    with torch.no_grad():
        weight.copy_(torch.randn(weight.shape, generator=g) * std)


class FixupBlock(tnn.Module):
    """Two-conv residual branch with Fixup scalar biases/scale; identity at init."""

    def __init__(self, channels: int):
        super().__init__()
        self.bias1a = tnn.Parameter(torch.zeros(1))
        self.conv1 = tnn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.bias1b = tnn.Parameter(torch.zeros(1))
        self.bias2a = tnn.Parameter(torch.zeros(1))
        self.conv2 = tnn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.scale = tnn.Parameter(torch.ones(1))
        self.bias2b = tnn.Parameter(torch.zeros(1))

    def reset_parameters(self, g: torch.Generator, num_blocks: int):
        _he_init(self.conv1.weight, g, gain=num_blocks ** -0.5)
        with torch.no_grad():
            self.conv2.weight.zero_()
            self.bias1a.zero_()
            self.bias1b.zero_()
            self.bias2a.zero_()
            self.bias2b.zero_()
            self.scale.fill_(1.0)

    def forward(self, x):
        out = self.conv1(x + self.bias1a)
        out = F.relu(out + self.bias1b)
        out = self.conv2(out + self.bias2a)
        return x + out * self.scale + self.bias2b


class _ConvTrunk(tnn.Module):
    """Stem + per-stage (strided transition conv, Fixup block)."""

    def __init__(self, widths):
        super().__init__()
        self.stem = tnn.Conv2d(3, widths[0], 3, stride=2, padding=1)
        self.transitions = tnn.ModuleList()
        self.blocks = tnn.ModuleList()
        prev = widths[0]
        for w in widths:
            self.transitions.append(tnn.Conv2d(prev, w, 3, stride=2, padding=1))
            self.blocks.append(FixupBlock(w))
            prev = w

    def reset_parameters(self, g: torch.Generator):
        _he_init(self.stem.weight, g)
        with torch.no_grad():
            self.stem.bias.zero_()
        for conv in self.transitions:
            _he_init(conv.weight, g)
            with torch.no_grad():
                conv.bias.zero_()
        for block in self.blocks:
            block.reset_parameters(g, len(self.blocks))

    def stages(self, x):
        x = F.relu(self.stem(x))
        for conv, block in zip(self.transitions, self.blocks):
            x = F.relu(conv(x))
            x = block(x)
            yield x


class StyleEncoder(tnn.Module):
    """Downsampled image -> embedding f (global average pool of the last stage)."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        if config.style_widths[-1] != config.embed_dim:
            raise ValueError("last style-encoder width must equal embed_dim")
        self.trunk = _ConvTrunk(config.style_widths)
        self.head = tnn.Linear(config.embed_dim, config.num_styles, bias=False)

    def reset_parameters(self, g: torch.Generator):
        self.trunk.reset_parameters(g)
        with torch.no_grad():
            self.head.weight.copy_(torch.randn(self.head.weight.shape, generator=g) * 0.1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ValueError(f"expected (B,3,K,K) input, got {tuple(x.shape)}")
        for feat in self.trunk.stages(x):
            pass
        return feat.mean(dim=(2, 3))


class MappingNetwork(tnn.Module):
    """Unit latent -> L sets of per-channel (mu, sigma) style codes.

    Sigma is parameterized as 1 + raw, clamped to SIGMA_MIN, so a
    zero-initialized output layer yields identity codes.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.widths = tuple(config.encoder_widths)
        out_dim = 2 * sum(self.widths)
        dims = [config.embed_dim] + [config.mapping_hidden] * config.mapping_layers
        self.hidden = tnn.ModuleList(
            tnn.Linear(dims[k], dims[k + 1]) for k in range(len(dims) - 1)
        )
        self.out = tnn.Linear(dims[-1], out_dim)

    def reset_parameters(self, g: torch.Generator):
        for lin in self.hidden:
            _he_init(lin.weight, g)
            with torch.no_grad():
                lin.bias.zero_()
        with torch.no_grad():
            self.out.weight.zero_()
            self.out.bias.zero_()

    def forward(self, latent: torch.Tensor) -> list:
        if latent.ndim == 1:
            latent = latent.unsqueeze(0)
        norms = torch.linalg.vector_norm(latent, dim=-1)
        if torch.any((norms - 1.0).abs() > 1e-3):
            raise ValueError("mapping network input must be unit-norm")
        h = latent
        for lin in self.hidden:
            h = F.relu(lin(h))
        raw = self.out(h)
        codes = []
        pos = 0
        for w in self.widths:
            mu = raw[:, pos : pos + w]
            sigma = (1.0 + raw[:, pos + w : pos + 2 * w]).clamp_min(SIGMA_MIN)
            codes.append((mu, sigma))
            pos += 2 * w
        return codes


def dual_adain(feat: torch.Tensor, a_codes, b_codes) -> torch.Tensor:
    """F' = sigma_b * (F - mu_a) / sigma_a + mu_b, per channel.

    No statistics are read from the feature map; codes may be (C,) or (B,C).
    """
    mu_a, sigma_a = a_codes
    mu_b, sigma_b = b_codes
    c = feat.shape[1]
    for code in (mu_a, sigma_a, mu_b, sigma_b):
        if code.shape[-1] != c:
            raise ValueError(f"code channels {code.shape[-1]} != feature channels {c}")
    for sigma in (sigma_a, sigma_b):
        if torch.any(sigma < SIGMA_MIN * (1 - 1e-9)):
            raise ValueError(f"sigma below floor {SIGMA_MIN}")

    def _expand(code):
        return code.reshape(-1, c, 1, 1) if code.ndim == 2 else code.reshape(1, c, 1, 1)

    return _expand(sigma_b) * (feat - _expand(mu_a)) / _expand(sigma_a) + _expand(mu_b)


class CurveEncoder(tnn.Module):
    """Downsampled image + style codes -> flat knot parameter vector u."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.trunk = _ConvTrunk(config.encoder_widths)
        self.head = tnn.Linear(config.encoder_widths[-1], config.total_knots)

    def reset_parameters(self, g: torch.Generator):
        self.trunk.reset_parameters(g)
        with torch.no_grad():
            self.head.weight.zero_()  # zero head: identity enhancement at init
            self.head.bias.zero_()

    def forward(self, x: torch.Tensor, source_codes=None, target_codes=None) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ValueError(f"expected (B,3,K,K) input, got {tuple(x.shape)}")
        if (source_codes is None) != (target_codes is None):
            raise ValueError("provide both code sets or neither")
        if source_codes is not None and len(source_codes) != len(self.trunk.blocks):
            raise ValueError(
                f"expected {len(self.trunk.blocks)} code pairs, got {len(source_codes)}"
            )
        for idx, feat in enumerate(self.trunk.stages(x)):
            if source_codes is not None:
                feat = dual_adain(feat, source_codes[idx], target_codes[idx])
            x = feat
        pooled = x.mean(dim=(2, 3))
        return self.head(pooled)


@dataclass
class ModelBundle:
    """The three trained networks plus their shared architecture config."""

    config: ModelConfig
    style_encoder: StyleEncoder
    mapping: MappingNetwork
    curve_encoder: CurveEncoder

    def modules(self) -> dict:
        return {
            "style_encoder": self.style_encoder,
            "mapping": self.mapping,
            "curve_encoder": self.curve_encoder,
        }


def fixup_init(config: ModelConfig, seed: int = 0) -> ModelBundle:
    """Build all networks with deterministic Fixup initialization."""
    g = torch.Generator().manual_seed(seed)
    style = StyleEncoder(config)
    mapping = MappingNetwork(config)
    encoder = CurveEncoder(config)
    style.reset_parameters(g)
    mapping.reset_parameters(g)
    encoder.reset_parameters(g)
    return ModelBundle(config, style, mapping, encoder)


def backward(loss: torch.Tensor):
    """Reverse-mode gradients from a scalar loss; accumulates like torch
    (call zero_grad between steps; parameters not reached keep grad None,
    read as zero)."""
    if loss.numel() != 1:
        raise ValueError("backward root must be a scalar")
    loss.backward()


def save_weights(path: str, bundle: ModelBundle):
    """Write magic, length-prefixed JSON header, then raw f32 LE tensors."""
    manifest = []
    blobs = []
    for mod_name, module in bundle.modules().items():
        for name, tensor in module.state_dict().items():
            full = f"{mod_name}.{name}"
            arr = tensor.detach().numpy().astype("<f4")
            manifest.append([full, list(arr.shape)])
            blobs.append(arr.tobytes())
    header = json.dumps({"config": bundle.config.to_dict(), "manifest": manifest}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_weights(path: str) -> ModelBundle:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != WEIGHTS_MAGIC:
            raise ValueError(f"not a weights file (magic {magic!r})")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        bundle = fixup_init(config, seed=0)
        states = {name: {} for name in bundle.modules()}
        for full, shape in header["manifest"]:
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(4 * count), dtype="<f4").reshape(shape)
            mod_name, _, name = full.partition(".")
            states[mod_name][name] = torch.from_numpy(data.copy())
        for mod_name, module in bundle.modules().items():
            module.load_state_dict(states[mod_name])
    return bundle


def style_forward(image: torch.Tensor, encoder: StyleEncoder) -> torch.Tensor:
    """Embedding of a (B,3,K,K) or (3,K,K) downsampled image."""
    single = image.ndim == 3
    if single:
        image = image.unsqueeze(0)
    out = encoder(image)
    return out[0] if single else out


def mapping_forward(source_latent: torch.Tensor, target_latent: torch.Tensor, mapping: MappingNetwork):
    """Style codes for a (source, target) latent pair."""
    return mapping(source_latent), mapping(target_latent)


def encoder_forward(image: torch.Tensor, source_codes, target_codes, encoder: CurveEncoder) -> torch.Tensor:
    """Flat knot vector(s) u for a (B,3,K,K) or (3,K,K) image."""
    single = image.ndim == 3
    if single:
        image = image.unsqueeze(0)
    out = encoder(image, source_codes, target_codes)
    return out[0] if single else out
