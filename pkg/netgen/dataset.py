"""Datasets of layouts and channel episodes, plus their binary container.

File layout, little-endian:

    b"AGDS"                 magic
    u32 version             currently 1
    u32 header_length
    header_length bytes     UTF-8 JSON: K, field_length, frames, layouts, rho_mode, seed
    M x f8                  rho per layout
    M*K*2 x f8              transmitter positions (m)
    M*K*2 x f8              receiver positions (m)
    M*K*K x f8              large-scale gains g_ls
    M*T*K*K*2 x f8          small-scale states h_ss, interleaved re/im
    M*T*K*K*2 x f8          channel coefficients H(t) = sqrt(g_ls) h_ss, interleaved re/im

Gains are always recomputed as g_ls * |h_ss|^2, so a loaded dataset is bit-identical
to the generated one.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from config import ChannelConfig
from utils.exceptions import DataError

from .channel import ChannelEpisode, evolve_episode
from .layout import NetworkLayout, generate_layout, large_scale_gains

logger = logging.getLogger(__name__)

MAGIC = b"AGDS"
VERSION = 1


class ChannelDataset(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_links: int
    field_length: float
    frames: int
    seed: int
    rho_mode: Literal["uniform", "fixed"]
    rho: np.ndarray  # (M,)
    tx_positions: np.ndarray  # (M, K, 2)
    rx_positions: np.ndarray  # (M, K, 2)
    g_ls: np.ndarray  # (M, K, K)
    h_ss: np.ndarray  # (M, T, K, K) complex

    def __len__(self) -> int:
        return self.g_ls.shape[0]

    @property
    def gains(self) -> np.ndarray:
        """Power gains |h_{j,i}(t)|^2, shape (M, T, K, K)."""
        return self.g_ls[:, None] * np.abs(self.h_ss) ** 2

    @property
    def channels(self) -> np.ndarray:
        return np.sqrt(self.g_ls)[:, None] * self.h_ss

    @property
    def link_density(self) -> float:
        return self.n_links / self.field_length**2

    def episode(self, index: int) -> ChannelEpisode:
        return ChannelEpisode(g_ls=self.g_ls[index], h_ss=self.h_ss[index], rho=float(self.rho[index]))

    def layout(self, index: int) -> NetworkLayout:
        return NetworkLayout(
            n_links=self.n_links,
            field_length=self.field_length,
            tx_positions=self.tx_positions[index],
            rx_positions=self.rx_positions[index],
        )

    def subset(self, indices) -> "ChannelDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return self.model_copy(
            update={
                "rho": self.rho[indices],
                "tx_positions": self.tx_positions[indices],
                "rx_positions": self.rx_positions[indices],
                "g_ls": self.g_ls[indices],
                "h_ss": self.h_ss[indices],
            }
        )

    def split(self, fraction: float, seed: int = 0) -> tuple["ChannelDataset", "ChannelDataset"]:
        """Random (train, held-out) split; the held-out part has round(fraction*M) layouts."""
        order = np.random.default_rng(seed).permutation(len(self))
        held = int(round(fraction * len(self)))
        if held == 0 or held == len(self):
            return self, self.subset(order[:held])
        return self.subset(np.sort(order[held:])), self.subset(np.sort(order[:held]))


def generate_dataset(
    cfg: ChannelConfig,
    n_layouts: int,
    seed: int,
    *,
    n_links: int | None = None,
    field_length: float | None = None,
    frames: int | None = None,
    rho: float | None = None,
    workers: int = 4,
) -> ChannelDataset:
    """
    Generates ``n_layouts`` layouts with one episode each.

    Layout m draws from ``default_rng([seed, m])`` so layouts are independent of the
    order (and thread) in which they are generated. ``rho`` (or ``cfg.rho``) fixes the
    correlation coefficient; otherwise it is drawn from U[0, 1) per layout.
    """
    n_links = n_links or cfg.n_links
    field_length = field_length or cfg.field_length
    frames = frames or cfg.frames
    rho = cfg.rho if rho is None else rho
    if n_layouts < 1:
        raise DataError("need at least one layout")
    if seed < 0:
        raise DataError(f"seeds must be non-negative, got {seed}")

    def generate_one(index: int) -> tuple[NetworkLayout, ChannelEpisode]:
        rng = np.random.default_rng([seed, index])
        layout = generate_layout(n_links, field_length, cfg.min_link_distance, cfg.max_link_distance, rng)
        g_ls = large_scale_gains(
            layout, cfg.antenna_gain_db, cfg.carrier_frequency, cfg.tx_height, cfg.rx_height
        )
        layout_rho = rho if rho is not None else float(rng.uniform(0.0, 1.0))
        return layout, evolve_episode(g_ls, layout_rho, frames, rng)

    logger.info(
        "generating %d layouts: K=%d, l=%.1f m, T=%d, rho=%s, seed=%d",
        n_layouts, n_links, field_length, frames, "U[0,1)" if rho is None else rho, seed,
    )
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(executor.map(generate_one, range(n_layouts)))

    return ChannelDataset(
        n_links=n_links,
        field_length=float(field_length),
        frames=frames,
        seed=seed,
        rho_mode="uniform" if rho is None else "fixed",
        rho=np.array([episode.rho for _, episode in results]),
        tx_positions=np.stack([layout.tx_positions for layout, _ in results]),
        rx_positions=np.stack([layout.rx_positions for layout, _ in results]),
        g_ls=np.stack([episode.g_ls for _, episode in results]),
        h_ss=np.stack([episode.h_ss for _, episode in results]),
    )


def _interleave(z: np.ndarray) -> bytes:
    return np.ascontiguousarray(np.stack((z.real, z.imag), axis=-1), dtype="<f8").tobytes()


def save_dataset(path: str | Path, dataset: ChannelDataset) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "K": dataset.n_links,
        "field_length": dataset.field_length,
        "frames": dataset.frames,
        "layouts": len(dataset),
        "rho_mode": dataset.rho_mode,
        "seed": dataset.seed,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [
        MAGIC,
        np.array([VERSION, len(header_bytes)], dtype="<u4").tobytes(),
        header_bytes,
        np.ascontiguousarray(dataset.rho, dtype="<f8").tobytes(),
        np.ascontiguousarray(dataset.tx_positions, dtype="<f8").tobytes(),
        np.ascontiguousarray(dataset.rx_positions, dtype="<f8").tobytes(),
        np.ascontiguousarray(dataset.g_ls, dtype="<f8").tobytes(),
        _interleave(dataset.h_ss),
        _interleave(dataset.channels),
    ]
    path.write_bytes(b"".join(parts))
    logger.info("dataset written: %s (%d layouts)", path, len(dataset))


def load_dataset(path: str | Path) -> ChannelDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise DataError(f"{path} is not a dataset file (bad magic)")
    if len(data) < 12:
        raise DataError(f"{path} is truncated")
    version, header_length = (int(v) for v in np.frombuffer(data[4:12], dtype="<u4"))
    if version != VERSION:
        raise DataError(f"unsupported dataset version {version}")
    try:
        header = json.loads(data[12 : 12 + header_length].decode("utf-8"))
        m, k, t = int(header["layouts"]), int(header["K"]), int(header["frames"])
    except (ValueError, KeyError, TypeError) as e:
        raise DataError(f"{path} has an unreadable header: {e}") from e

    offset = 12 + header_length
    shapes = [(m,), (m, k, 2), (m, k, 2), (m, k, k), (m, t, k, k, 2), (m, t, k, k, 2)]
    arrays = []
    for shape in shapes:
        count = int(np.prod(shape))
        chunk = data[offset : offset + 8 * count]
        if len(chunk) != 8 * count:
            raise DataError(f"{path} is truncated")
        arrays.append(np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64))
        offset += 8 * count
    if offset != len(data):
        raise DataError(f"{path} has {len(data) - offset} trailing bytes")
    rho, tx, rx, g_ls, h_ss, _channels = arrays

    return ChannelDataset(
        n_links=k,
        field_length=float(header["field_length"]),
        frames=t,
        seed=int(header["seed"]),
        rho_mode=header["rho_mode"],
        rho=rho,
        tx_positions=tx,
        rx_positions=rx,
        g_ls=g_ls,
        h_ss=h_ss[..., 0] + 1j * h_ss[..., 1],
    )
