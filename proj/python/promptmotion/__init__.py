"""Python bindings for the promptmotion text-to-motion pipeline."""

import json

import numpy as np

from . import _core
from ._core import (
    PromptMotionError,
    aggregate_token_matrices,
    aggregate_vectors,
    build_prompt,
    rotmat_to_sixd,
    sixd_to_rotmat,
    stub_descriptions,
)

__all__ = [
    "PromptMotionError",
    "aggregate_token_matrices",
    "aggregate_vectors",
    "ape",
    "ave",
    "build_prompt",
    "default_config",
    "embed_texts",
    "evaluate",
    "forward_kinematics",
    "generate",
    "make_synthetic_dataset",
    "rotmat_to_sixd",
    "sixd_to_rotmat",
    "stub_descriptions",
    "train",
]


def embed_texts(texts, kind="token-matrix", dimension=16, seed=0):
    """Hash-embed and mean-aggregate. Returns (values, mask)."""
    values, mask = _core.embed_texts(list(texts), kind, dimension, seed)
    return np.asarray(values), np.asarray(mask, dtype=bool)


def forward_kinematics(rotations, root, skeleton_path=""):
    """rotations: (N, J, 6); root: (N, 3). Returns global (N, J, 3), local (N, J, 3), trajectory (N, 2)."""
    rotations = np.asarray(rotations, dtype=float)
    n = rotations.shape[0]
    g, l, traj = _core.forward_kinematics(rotations.reshape(n, -1), np.asarray(root, dtype=float), skeleton_path)
    return np.stack(g), np.stack(l), np.asarray(traj)


def _frames(samples):
    return [[np.asarray(frame, dtype=float) for frame in np.asarray(s, dtype=float)] for s in samples]


def ape(generated, ground_truth, variant="mean global"):
    """Each argument is a list of (N_i, J, 3) global position arrays."""
    return _core.ape(_frames(generated), _frames(ground_truth), variant)


def ave(generated, ground_truth, variant="mean global"):
    return _core.ave(_frames(generated), _frames(ground_truth), variant)


def default_config(variant="vae"):
    return json.loads(_core.default_config(variant))


def make_synthetic_dataset(path, seed=0, count=12, pairs=0):
    _core.make_synthetic_dataset(str(path), seed, count, pairs)


def train(dataset, checkpoint, config=None, offline=True):
    """Trains and writes a checkpoint; returns the per-step reconstruction losses."""
    return _core.train(str(dataset), str(checkpoint), json.dumps(config) if config else "", offline)


def generate(checkpoint, phrases, frames, seed=0, offline=True, mode=""):
    """Returns rotations (N, J, 6), root_translation (N, 3) and frame_rate."""
    if isinstance(phrases, str):
        phrases = [phrases]
    if isinstance(frames, int):
        frames = [frames] * len(phrases)
    out = _core.generate(str(checkpoint), list(phrases), list(frames), seed, offline, mode)
    rotations = np.asarray(out["rotations"])
    return {
        "rotations": rotations.reshape(rotations.shape[0], -1, 6),
        "root_translation": np.asarray(out["root_translation"]),
        "frame_rate": out["frame_rate"],
    }


def evaluate(checkpoint, dataset, split="test", seed=0, offline=True):
    return json.loads(_core.evaluate(str(checkpoint), str(dataset), split, seed, offline))
