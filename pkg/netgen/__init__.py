from .channel import ChannelEpisode, complex_gaussian, evolve_episode
from .dataset import ChannelDataset, generate_dataset, load_dataset, save_dataset
from .layout import NetworkLayout, as_rng, generate_layout, large_scale_gains
from .pathloss import breakpoint_distance, breakpoint_loss_db, dbm_to_mw, mw_to_dbm, noise_power, pathloss_db

__all__ = [
    "pathloss_db",
    "breakpoint_distance",
    "breakpoint_loss_db",
    "noise_power",
    "dbm_to_mw",
    "mw_to_dbm",
    "NetworkLayout",
    "generate_layout",
    "large_scale_gains",
    "as_rng",
    "ChannelEpisode",
    "evolve_episode",
    "complex_gaussian",
    "ChannelDataset",
    "generate_dataset",
    "save_dataset",
    "load_dataset",
]
