import json
import logging
import os
import zipfile
from dataclasses import dataclass, field

import numpy as np

from errors import CheckpointError
from storage.digest import arrays_digest

logger = logging.getLogger(__name__)

PARAM_PREFIX = "param/"
OPTIM_PREFIX = "optim/"
META_KEY = "meta"


@dataclass
class Checkpoint:
    params: dict                # module path -> array
    config: dict
    epoch: int
    rng_state: dict
    vocab: dict
    optimizer: dict = field(default_factory=dict)
    digest: str = None

    def __post_init__(self):
        if self.digest is None:
            self.digest = arrays_digest(self.params)


def save_checkpoint(checkpoint, path):
    arrays = {PARAM_PREFIX + name: value for name, value in checkpoint.params.items()}
    arrays.update({OPTIM_PREFIX + name: value for name, value in checkpoint.optimizer.items()})
    meta = {
        "config": checkpoint.config,
        "epoch": checkpoint.epoch,
        "rng_state": checkpoint.rng_state,
        "vocab": checkpoint.vocab,
        "digest": checkpoint.digest,
    }
    arrays[META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    # a file handle keeps numpy from appending .npz
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info(f"Saved checkpoint for epoch {checkpoint.epoch} to {path}")
    return path


# Read a checkpoint and check its parameter digest
def load_checkpoint(path):
    try:
        with np.load(path, allow_pickle=False) as archive:
            if META_KEY not in archive.files:
                raise CheckpointError(f"{path}: no metadata entry")
            meta = json.loads(str(archive[META_KEY]))
            params = {k[len(PARAM_PREFIX):]: archive[k] for k in archive.files if k.startswith(PARAM_PREFIX)}
            optimizer = {k[len(OPTIM_PREFIX):]: archive[k] for k in archive.files if k.startswith(OPTIM_PREFIX)}
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}")
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"{path}: unreadable checkpoint ({e})")

    actual = arrays_digest(params)
    if actual != meta.get("digest"):
        raise CheckpointError(f"{path}: parameter digest {actual[:12]} does not match recorded {str(meta.get('digest'))[:12]}")
    logger.debug(f"Loaded checkpoint {path} (epoch {meta['epoch']}, digest {actual[:12]})")
    return Checkpoint(
        params=params,
        config=meta["config"],
        epoch=meta["epoch"],
        rng_state=meta["rng_state"],
        vocab=meta["vocab"],
        optimizer=optimizer,
        digest=actual,
    )


# Copy checkpoint arrays into a model built with matching dims
def restore_params(model, checkpoint):
    try:
        model.load_state_dict(checkpoint.params)
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"checkpoint does not fit the model: {e}")
