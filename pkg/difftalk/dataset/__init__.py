"""
Synthetic talking-face corpus: analytic geometry, renderer, generator and loader
"""
from difftalk.dataset.generate import gen_sequence, image_path
from difftalk.dataset.geometry import FaceParams, landmarks_from_params, mouth_gap, sequence_params
from difftalk.dataset.inverse import read_back_landmarks
from difftalk.dataset.io import load_params_file, save_params_file
from difftalk.dataset.loader import FaceDataset, load_dataset, train_test_split
from difftalk.dataset.render import mouth_box, render

__all__ = [
    "FaceDataset",
    "FaceParams",
    "gen_sequence",
    "image_path",
    "landmarks_from_params",
    "load_dataset",
    "load_params_file",
    "mouth_box",
    "mouth_gap",
    "read_back_landmarks",
    "render",
    "save_params_file",
    "sequence_params",
    "train_test_split",
]
