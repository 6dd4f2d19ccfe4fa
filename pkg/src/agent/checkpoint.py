"""
agent/checkpoint.py

JSON checkpoints for trained Q-networks.

A checkpoint holds the format version, layer sizes, weights and biases, the
training seed and a sha256 hash of the TrainConfig that produced it. Loading
checks the version and that every array has the shape its layer sizes imply.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from config import TrainConfig
from errors import CheckpointError
from agent.qnetwork import QNetwork
from simsignal import NUM_ACTIONS, OBSERVATION_WIDTH

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1


class CheckpointDocument(BaseModel):
    format_version: int
    layer_sizes: List[int] = Field(min_length=2)
    weights: List[List[List[float]]]
    biases: List[List[float]]
    config_hash: str
    seed: int


@dataclass(frozen=True)
class Checkpoint:
    network: QNetwork
    config_hash: str
    seed: int
    format_version: int = CHECKPOINT_FORMAT_VERSION


def config_hash(cfg: TrainConfig) -> str:
    payload = json.dumps(cfg.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_checkpoint(net: QNetwork, path: Union[str, Path], cfg: Optional[TrainConfig] = None) -> Path:
    cfg = cfg or TrainConfig()
    doc = CheckpointDocument(
        format_version=CHECKPOINT_FORMAT_VERSION,
        layer_sizes=net.layer_sizes,
        weights=[w.tolist() for w in net.weights],
        biases=[b.tolist() for b in net.biases],
        config_hash=config_hash(cfg),
        seed=cfg.seed,
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(doc.model_dump_json(), encoding="utf-8")
    logger.info(f"Saved checkpoint {path} (layers {net.layer_sizes})")
    return path


def load_checkpoint(
    path: Union[str, Path],
    input_width: int = OBSERVATION_WIDTH,
    output_width: int = NUM_ACTIONS,
) -> Checkpoint:
    """
    Raises
    ------
    CheckpointError
        If the file is missing, malformed, from another format version, or
        its arrays do not match the declared layer sizes.
    """
    path = Path(path)
    try:
        doc = CheckpointDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    except ValidationError as e:
        raise CheckpointError(f"Malformed checkpoint {path}: {e}") from e

    if doc.format_version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(
            f"Checkpoint {path} has format version {doc.format_version}, expected {CHECKPOINT_FORMAT_VERSION}"
        )
    sizes = doc.layer_sizes
    if sizes[0] != input_width or sizes[-1] != output_width:
        raise CheckpointError(
            f"Checkpoint {path} maps {sizes[0]} -> {sizes[-1]}, expected {input_width} -> {output_width}"
        )

    net = QNetwork(sizes, seed=doc.seed)
    params = []
    for w, b in zip(doc.weights, doc.biases):
        params.extend((np.asarray(w, dtype=float), np.asarray(b, dtype=float)))
    try:
        net.set_parameters(params)
    except ValueError as e:
        raise CheckpointError(f"Checkpoint {path} does not match its layer sizes: {e}") from e

    logger.info(f"Loaded checkpoint {path} (layers {sizes}, seed {doc.seed})")
    return Checkpoint(network=net, config_hash=doc.config_hash, seed=doc.seed, format_version=doc.format_version)
