import json

import numpy as np
from cryptography.hazmat.primitives import hashes


# SHA-256 of bytes or text
def sha256(data):
    if isinstance(data, str):
        data = data.encode("utf-8")
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize()


# Canonical JSON (sorted keys, no whitespace) so equal objects hash equally
def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def json_digest(obj):
    return sha256(canonical_json(obj)).hex()


# Digest of named float arrays covering names, shapes, dtypes and raw bytes, in name order
def arrays_digest(arrays):
    digest = hashes.Hash(hashes.SHA256())
    for name in sorted(arrays):
        array = np.ascontiguousarray(arrays[name])
        header = canonical_json({"name": name, "shape": list(array.shape), "dtype": str(array.dtype)})
        digest.update(header.encode("utf-8"))
        digest.update(array.tobytes())
    return digest.finalize().hex()
