"""Plain-text model checkpoints.

Layout: the magic line ``PIFFCKPT1``, then ``key=value`` config lines
(training hyperparameters and normalization constants), then each parameter
array as a ``name dim0 [dim1 ...]`` line followed by its values. Floats use
shortest round-trip formatting, so save -> load reproduces every weight
bit-exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .flowmatch import CfmConfig, FlowModel, Normalization
from .neural import named_arrays, params_from_arrays

MAGIC = "PIFFCKPT1"


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed."""


def _fmt(value: float) -> str:
    return repr(float(value))


def save_checkpoint(model: FlowModel, path: str | os.PathLike) -> None:
    cfg, norm = model.config, model.norm
    lines = [
        MAGIC,
        "version=1",
        f"sigma={_fmt(cfg.sigma)}",
        f"batch={cfg.batch}",
        f"lr={_fmt(cfg.lr)}",
        f"iters={cfg.iters}",
        f"lr_decay={_fmt(cfg.lr_decay)}",
        f"decay_every={cfg.decay_every}",
        f"seed={cfg.seed}",
        f"embed_dim={cfg.embed_dim}",
        "hidden=" + ",".join(str(w) for w in cfg.hidden),
        f"dem_min={_fmt(norm.dem_min)}",
        f"dem_max={_fmt(norm.dem_max)}",
        f"flood_min={_fmt(norm.flood_min)}",
        f"flood_max={_fmt(norm.flood_max)}",
        f"rain_scale={_fmt(norm.rain_scale)}",
    ]
    for name, arr in named_arrays(model.params):
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"{name} {dims}")
        if arr.ndim == 1:
            lines.append(" ".join(_fmt(v) for v in arr))
        else:
            for row in arr:
                lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path: str | os.PathLike) -> FlowModel:
    spath = os.fspath(path)
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines or lines[0] != MAGIC:
        head = lines[0] if lines else "<empty file>"
        raise CheckpointError(f"{spath}: bad magic {head!r}, expected {MAGIC}")

    config: dict[str, str] = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        key, _, value = lines[i].partition("=")
        config[key.strip()] = value.strip()
        i += 1

    required = ("sigma", "batch", "lr", "iters", "lr_decay", "decay_every",
                "seed", "embed_dim", "hidden", "dem_min", "dem_max",
                "flood_min", "flood_max", "rain_scale")
    missing = [k for k in required if k not in config]
    if missing:
        raise CheckpointError(f"{spath}: missing config keys {missing}")

    arrays: dict[str, np.ndarray] = {}
    while i < len(lines):
        parts = lines[i].split()
        name, dims = parts[0], parts[1:]
        try:
            shape = tuple(int(d) for d in dims)
        except ValueError:
            raise CheckpointError(f"{spath}: bad array header {lines[i]!r}") from None
        if not shape or any(d < 1 for d in shape):
            raise CheckpointError(f"{spath}: bad array header {lines[i]!r}")
        count = int(np.prod(shape))
        values: list[float] = []
        i += 1
        while len(values) < count:
            if i >= len(lines):
                raise CheckpointError(f"{spath}: array {name!r} truncated, "
                                      f"expected {count} values, found {len(values)}")
            try:
                values.extend(float(tok) for tok in lines[i].split())
            except ValueError:
                raise CheckpointError(f"{spath}: non-numeric value in array {name!r}") from None
            i += 1
        if len(values) != count:
            raise CheckpointError(f"{spath}: array {name!r} has {len(values)} values, expected {count}")
        arrays[name] = np.array(values, dtype=np.float64).reshape(shape)

    try:
        hidden = tuple(int(w) for w in config["hidden"].split(",") if w)
        cfg = CfmConfig(
            sigma=float(config["sigma"]), batch=int(config["batch"]),
            lr=float(config["lr"]), iters=int(config["iters"]),
            lr_decay=float(config["lr_decay"]), decay_every=int(config["decay_every"]),
            seed=int(config["seed"]), embed_dim=int(config["embed_dim"]), hidden=hidden,
        )
        norm = Normalization(
            dem_min=float(config["dem_min"]), dem_max=float(config["dem_max"]),
            flood_min=float(config["flood_min"]), flood_max=float(config["flood_max"]),
            rain_scale=float(config["rain_scale"]),
        )
        params = params_from_arrays(arrays)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{spath}: {exc}") from None
    model = FlowModel(params=params, norm=norm, config=cfg)
    if params.embed_dim != cfg.embed_dim:
        raise CheckpointError(f"{spath}: embed_dim {cfg.embed_dim} does not match "
                              f"encoder arrays ({params.embed_dim})")
    return model
