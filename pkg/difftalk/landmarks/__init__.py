"""
68-point facial landmark data model
"""
from difftalk.landmarks.io import load_landmark_file, load_landmark_map, read_indexed_landmarks, save_landmark_file
from difftalk.landmarks.landmark import (
    Landmark68,
    denormalize,
    inner_lip_gap,
    inside_jaw_hull,
    merge,
    merge_points,
    mouth_centroid,
    normalize,
    split,
)
from difftalk.landmarks.partition import DEFAULT_PARTITION, N_PREDICTED, RegionPartition
from difftalk.landmarks.raster import rasterize, rasterize_batch

__all__ = [
    "DEFAULT_PARTITION",
    "Landmark68",
    "N_PREDICTED",
    "RegionPartition",
    "denormalize",
    "inner_lip_gap",
    "inside_jaw_hull",
    "load_landmark_file",
    "load_landmark_map",
    "merge",
    "merge_points",
    "mouth_centroid",
    "normalize",
    "rasterize",
    "rasterize_batch",
    "read_indexed_landmarks",
    "save_landmark_file",
    "split",
]
