"""Conditional flow matching between flood maps and terrain.

A straight probability path connects a flood map x0 (t=0) to its DEM x1
(t=1) with isotropic noise sigma; the regression target along the path is
the constant displacement x1 - x0. The velocity model is the per-pixel
field network conditioned on the DEM, an equilibrium-solver prior, and the
attention embedding of the rainfall series. Generation integrates the
learned field from t=1 (terrain) back to t=0 (flood).

All map-valued tensors here live in normalized units: elevations and
depths are affinely mapped to [-1, 1] with corpus constants carried in
Normalization, and hourly rainfall is divided by rain_scale before the
encoder. The constants travel with the model so checkpoints are
self-contained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import DemGrid, FloodMap
from .neural import (ModelParams, encoder_backward, encoder_forward,
                     field_backward, field_forward, init_params, named_arrays,
                     params_from_arrays)
from .odesolve import OdeSpec, integrate
from .rainfall import RainfallSeries

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class CfmConfig:
    """Training hyperparameters; defaults are the reference settings."""

    sigma: float = 0.1
    batch: int = 128
    lr: float = 5e-4
    iters: int = 10_000
    lr_decay: float = 0.99
    decay_every: int = 1000
    seed: int = 0
    embed_dim: int = 8
    hidden: tuple[int, ...] = (32, 32)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if self.batch < 1 or self.iters < 0:
            raise ValueError(f"batch must be >= 1 and iters >= 0, got {self.batch}, {self.iters}")
        if self.lr <= 0 or not 0 < self.lr_decay <= 1 or self.decay_every < 1:
            raise ValueError("lr must be positive, lr_decay in (0, 1], decay_every >= 1")
        object.__setattr__(self, "hidden", tuple(self.hidden))

    def lr_at(self, iteration: int) -> float:
        """Learning rate for a zero-based iteration index."""
        return self.lr * self.lr_decay ** (iteration // self.decay_every)


@dataclass(frozen=True)
class Normalization:
    """Affine value maps recorded at training time and stored in checkpoints."""

    dem_min: float
    dem_max: float
    flood_min: float
    flood_max: float
    rain_scale: float

    @classmethod
    def identity(cls) -> "Normalization":
        """Pass-through mapping, handy for unit-space tests."""
        return cls(dem_min=-1.0, dem_max=1.0, flood_min=-1.0, flood_max=1.0, rain_scale=1.0)

    @staticmethod
    def _encode(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
        span = hi - lo
        if span <= 0:
            return np.zeros_like(np.asarray(x, dtype=np.float64))
        return (np.asarray(x, dtype=np.float64) - lo) * (2.0 / span) - 1.0

    @staticmethod
    def _decode(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
        span = hi - lo
        if span <= 0:
            return np.full_like(np.asarray(x, dtype=np.float64), lo)
        return (np.asarray(x, dtype=np.float64) + 1.0) * (span / 2.0) + lo

    def encode_dem(self, elevations: np.ndarray) -> np.ndarray:
        return self._encode(elevations, self.dem_min, self.dem_max)

    def encode_flood(self, depths: np.ndarray) -> np.ndarray:
        return self._encode(depths, self.flood_min, self.flood_max)

    def decode_flood(self, values: np.ndarray) -> np.ndarray:
        return self._decode(values, self.flood_min, self.flood_max)


@dataclass(frozen=True)
class Conditioning:
    """Everything the velocity field sees besides the state: rain, terrain, prior."""

    series: RainfallSeries
    dem: DemGrid
    prior: FloodMap


@dataclass(frozen=True)
class PathSample:
    """One training point: noisy state on the path, its time, and the target velocity."""

    x_t: np.ndarray
    t: float
    u_target: np.ndarray
    cond: Conditioning


@dataclass(frozen=True)
class FlowModel:
    """Trained velocity field plus the value maps it was trained under."""

    params: ModelParams
    norm: Normalization
    config: CfmConfig


@dataclass(frozen=True)
class TrainingScenario:
    """A rainfall scenario over one DEM with per-hour priors and truth maps."""

    dem: DemGrid
    series: RainfallSeries
    priors: tuple   # 24 FloodMaps, solver equilibria per cumulative hour
    truths: tuple   # 24 FloodMaps, training targets per hour

    def __post_init__(self) -> None:
        object.__setattr__(self, "priors", tuple(self.priors))
        object.__setattr__(self, "truths", tuple(self.truths))
        if len(self.priors) != 24 or len(self.truths) != 24:
            raise ValueError(f"expected 24 priors and 24 truths, got {len(self.priors)}, {len(self.truths)}")
        for fm in (*self.priors, *self.truths):
            if fm.shape != self.dem.shape:
                raise ValueError(f"flood map shape {fm.shape} does not match DEM shape {self.dem.shape}")


def sample_path(x0: FloodMap, x1: DemGrid, t: float, sigma: float,
                noise_seed, cond: Conditioning | None = None,
                norm: Normalization | None = None) -> PathSample:
    """Draw a point on the straight path between x0 (t=0) and x1 (t=1).

    x_t = (1-t) x0 + t x1 + sigma * eps with eps standard normal per cell;
    the target velocity is x1 - x0 regardless of t and sigma. When norm is
    given, endpoints are first mapped to normalized units. noise_seed is a
    seed or a numpy Generator.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must be in [0, 1], got {t}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if x0.shape != x1.shape:
        raise ValueError(f"flood shape {x0.shape} does not match DEM shape {x1.shape}")
    a0 = norm.encode_flood(x0.depths) if norm is not None else x0.depths
    a1 = norm.encode_dem(x1.elevations) if norm is not None else x1.elevations
    rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
    x_t = (1.0 - t) * a0 + t * a1
    if sigma > 0:
        x_t = x_t + sigma * rng.standard_normal(a0.shape)
    return PathSample(x_t=x_t, t=float(t), u_target=a1 - a0, cond=cond)


def _stack_channels(model: FlowModel, batch: list[PathSample],
                    embeddings: dict[int, np.ndarray]) -> np.ndarray:
    """Assemble (B, C, H, W) input channels for the field network."""
    H, W = batch[0].x_t.shape
    C = model.params.channels
    channels = np.empty((len(batch), C, H, W), dtype=np.float64)
    for i, s in enumerate(batch):
        channels[i, 0] = s.x_t
        channels[i, 1] = s.t
        channels[i, 2] = model.norm.encode_dem(s.cond.dem.elevations)
        channels[i, 3] = model.norm.encode_flood(s.cond.prior.depths)
        channels[i, 4:] = embeddings[id(s.cond.series)][:, None, None]
    return channels


def cfm_loss(model: FlowModel, batch: list[PathSample]) -> tuple[float, dict[str, np.ndarray]]:
    """Flow-matching loss and exact gradients for every parameter.

    Loss is the mean over the batch of the per-sample mean squared error
    between the predicted and target velocity maps. Samples sharing a
    rainfall series object share one encoder pass; gradient accumulation
    order is fixed, so results are deterministic.
    """
    if not batch:
        raise ValueError("batch must contain at least one sample")
    shape = batch[0].x_t.shape
    for i, s in enumerate(batch):
        if s.cond is None:
            raise ValueError(f"sample {i} has no conditioning")
        if s.x_t.shape != shape or s.u_target.shape != shape:
            raise ValueError(f"sample {i} shape differs from sample 0")

    # One encoder pass per distinct series, in order of first appearance.
    enc_caches: dict[int, tuple[np.ndarray, dict]] = {}
    order: list[int] = []
    for s in batch:
        key = id(s.cond.series)
        if key not in enc_caches:
            scaled = s.cond.series.hourly / model.norm.rain_scale
            enc_caches[key] = encoder_forward(model.params, scaled)
            order.append(key)
    embeddings = {key: emb for key, (emb, _) in enc_caches.items()}

    channels = _stack_channels(model, batch, embeddings)
    velocity, cache = field_forward(model.params, channels)

    targets = np.stack([s.u_target for s in batch])
    diff = velocity - targets
    per_sample = diff.reshape(len(batch), -1)
    per_sample_loss = (per_sample ** 2).mean(axis=1)
    for i, val in enumerate(per_sample_loss):
        if not np.isfinite(val):
            raise ValueError(f"non-finite loss for sample {i}")
    loss = float(per_sample_loss.mean())

    d_velocity = diff * (2.0 / diff.size)
    grads, d_channels = field_backward(model.params, cache, d_velocity)

    # Embedding channels are broadcast over the grid; fold their gradient
    # back per sample, then per series, then through the encoder.
    d_emb_per_sample = d_channels[:, 4:, :, :].sum(axis=(2, 3))
    d_emb: dict[int, np.ndarray] = {}
    for i, s in enumerate(batch):
        key = id(s.cond.series)
        if key in d_emb:
            d_emb[key] = d_emb[key] + d_emb_per_sample[i]
        else:
            d_emb[key] = d_emb_per_sample[i].copy()
    enc_grads: dict[str, np.ndarray] = {}
    for key in order:
        _, enc_cache = enc_caches[key]
        g = encoder_backward(model.params, enc_cache, d_emb[key])
        for name, arr in g.items():
            enc_grads[name] = enc_grads.get(name, 0.0) + arr
    grads.update(enc_grads)
    return loss, grads


def train(dataset: list[TrainingScenario], cfg: CfmConfig = CfmConfig()) -> tuple[FlowModel, list[float]]:
    """Fit the velocity field on (scenario, hour) pairs drawn uniformly.

    Returns the trained model and the per-iteration loss history. The run
    is deterministic in cfg.seed: batch composition, path times, and noise
    all come from one generator, and updates use Adam with the stepwise
    decayed learning rate. iters=0 returns the freshly initialized model.
    """
    if not dataset:
        raise ValueError("dataset must contain at least one scenario")
    shape = dataset[0].dem.shape
    for i, sc in enumerate(dataset):
        if sc.dem.shape != shape:
            raise ValueError(f"scenario {i} grid shape {sc.dem.shape} differs from scenario 0 {shape}")

    norm = _corpus_normalization(dataset)
    params = init_params(embed_dim=cfg.embed_dim, hidden=cfg.hidden, seed=cfg.seed)
    model = FlowModel(params=params, norm=norm, config=cfg)
    history: list[float] = []
    if cfg.iters == 0:
        return model, history

    rng = np.random.default_rng(cfg.seed)
    names = [name for name, _ in named_arrays(params)]
    m = {name: np.zeros_like(arr) for name, arr in named_arrays(params)}
    v = {name: np.zeros_like(arr) for name, arr in named_arrays(params)}

    for it in range(cfg.iters):
        scen_idx = rng.integers(0, len(dataset), size=cfg.batch)
        hours = rng.integers(0, 24, size=cfg.batch)
        ts = rng.random(size=cfg.batch)
        noise = rng.standard_normal((cfg.batch, *shape))
        batch = []
        for b in range(cfg.batch):
            sc = dataset[scen_idx[b]]
            cond = Conditioning(series=sc.series, dem=sc.dem, prior=sc.priors[hours[b]])
            x0n = norm.encode_flood(sc.truths[hours[b]].depths)
            x1n = norm.encode_dem(sc.dem.elevations)
            t = float(ts[b])
            x_t = (1.0 - t) * x0n + t * x1n + cfg.sigma * noise[b]
            batch.append(PathSample(x_t=x_t, t=t, u_target=x1n - x0n, cond=cond))

        loss, grads = cfm_loss(model, batch)
        if not np.isfinite(loss):
            raise ArithmeticError(f"training diverged at iteration {it}: loss {loss}")
        history.append(loss)

        lr_t = cfg.lr_at(it)
        step = it + 1
        bc1 = 1.0 - ADAM_BETA1 ** step
        bc2 = 1.0 - ADAM_BETA2 ** step
        arrays = dict(named_arrays(model.params))
        updated = {}
        for name in names:
            g = grads[name].reshape(arrays[name].shape)
            m[name] = ADAM_BETA1 * m[name] + (1.0 - ADAM_BETA1) * g
            v[name] = ADAM_BETA2 * v[name] + (1.0 - ADAM_BETA2) * g * g
            mhat = m[name] / bc1
            vhat = v[name] / bc2
            updated[name] = arrays[name] - lr_t * mhat / (np.sqrt(vhat) + ADAM_EPS)
        model = replace(model, params=params_from_arrays(updated))
    return model, history


def _corpus_normalization(dataset: list[TrainingScenario]) -> Normalization:
    dem_lo = min(float(sc.dem.elevations[sc.dem.active_mask].min()) for sc in dataset)
    dem_hi = max(float(sc.dem.elevations[sc.dem.active_mask].max()) for sc in dataset)
    flood_lo, flood_hi = math.inf, -math.inf
    for sc in dataset:
        for fm in (*sc.truths, *sc.priors):
            flood_lo = min(flood_lo, float(fm.depths.min()))
            flood_hi = max(flood_hi, float(fm.depths.max()))
    rain_hi = max(float(sc.series.hourly.max()) for sc in dataset)
    if dem_hi <= dem_lo:
        dem_hi = dem_lo + 1.0
    if flood_hi <= flood_lo:
        flood_hi = flood_lo + 1.0
    return Normalization(dem_min=dem_lo, dem_max=dem_hi, flood_min=flood_lo,
                         flood_max=flood_hi, rain_scale=max(rain_hi, 1.0))


def sample_flood(model: FlowModel, dem: DemGrid, series: RainfallSeries, hour: int,
                 spm_prior: FloodMap, spec: OdeSpec = OdeSpec()) -> FloodMap:
    """Generate a flood map by integrating the learned field from terrain.

    The state starts at the normalized DEM (t=1) and is integrated to t=0
    with the requested fixed-step solver; conditioning (DEM, prior for the
    requested hour, rainfall embedding) is frozen along the trajectory.
    Deterministic: no noise is drawn. Decoded depths are clamped at zero.
    """
    if not 1 <= hour <= 24:
        raise ValueError(f"hour must be in 1..24, got {hour}")
    if spm_prior.shape != dem.shape:
        raise ValueError(f"prior shape {spm_prior.shape} does not match DEM shape {dem.shape}")
    if not (spec.t_start == 1.0 and spec.t_end == 0.0):
        raise ValueError("flood sampling integrates t from 1 to 0")

    H, W = dem.shape
    emb, _ = encoder_forward(model.params, series.hourly / model.norm.rain_scale)
    demn = model.norm.encode_dem(dem.elevations)
    priorn = model.norm.encode_flood(spm_prior.depths)
    C = model.params.channels
    channels = np.empty((C, H, W), dtype=np.float64)
    channels[2] = demn
    channels[3] = priorn
    channels[4:] = emb[:, None, None]

    def field(x: np.ndarray, t: float) -> np.ndarray:
        channels[0] = x.reshape(H, W)
        channels[1] = t
        velocity, _ = field_forward(model.params, channels)
        return velocity.ravel()

    final = integrate(field, demn.ravel(), spec)
    depths = np.maximum(model.norm.decode_flood(final.reshape(H, W)), 0.0)
    return FloodMap(depths=depths, cell_size=dem.cell_size)
