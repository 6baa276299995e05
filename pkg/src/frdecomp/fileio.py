"""Binary and CSV artifact formats.

Kernel/block dumps are a 5-field float64 header followed by the row-major
float64 payload:

    (d, N, t, m2, B)   torus kernels: d >= 1, N the side length
    (0, n, t, m2, B)   graph blocks: payload is the n x n matrix, t = L^j

Sample dumps carry the header (backend_id, size, j_min, j_max, seed) with
backend_id 1 = torus, 2 = graph, followed by the (scales + 1, size)
component matrix of one replicate (white piece first, totals not stored).
All writers are deterministic: identical inputs produce identical bytes.
"""

import csv
import json

import numpy as np

BACKEND_IDS = {"torus": 1.0, "graph": 2.0}
FORMAT_VERSION = 1


def fmt(value):
    """Shortest exact decimal representation of a float (deterministic)."""
    return repr(float(value))


def write_kernel_binary(path, header, array):
    header = np.asarray(header, dtype=np.float64)
    if header.shape != (5,):
        raise ValueError("header must have exactly 5 fields")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(array, dtype=np.float64).tobytes())


def read_kernel_binary(path, shape=None):
    raw = np.fromfile(path, dtype=np.float64)
    header, payload = raw[:5], raw[5:]
    if shape is not None:
        payload = payload.reshape(shape)
    return header, payload


def write_kernel_csv(path, array):
    """Flat CSV alternative: rows (flat_index, value)."""
    flat = np.asarray(array, dtype=np.float64).ravel()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in enumerate(flat):
            w.writerow([i, fmt(v)])


def write_block(path_base, block, extra=None):
    """Binary matrix + JSON certificate sidecar for a graph scale block."""
    n = block.matrix.shape[0]
    header = [0.0, float(n), block.L_ratio**block.j, np.nan, np.nan]
    if extra and "m2" in extra:
        header[3] = float(extra["m2"])
    if extra and "B" in extra:
        header[4] = float(extra["B"])
    write_kernel_binary(f"{path_base}.bin", header, block.matrix)
    sidecar = {"j": block.j, "L_ratio": block.L_ratio,
               "format_version": FORMAT_VERSION}
    if extra:
        sidecar.update({k: v for k, v in extra.items() if k not in ("m2", "B")})
    with open(f"{path_base}.json", "w") as fh:
        fh.write(block.certificates.to_json(extra=sidecar))
        fh.write("\n")


def write_samples(path, samples, backend, j_min, j_max, max_replicates=None):
    """One binary record per replicate, concatenated into a single file."""
    header = np.array([BACKEND_IDS[backend], samples.components.shape[2],
                       float(j_min), float(j_max), float(samples.seed)])
    count = samples.components.shape[0]
    if max_replicates is not None:
        count = min(count, max_replicates)
    with open(path, "wb") as fh:
        for r in range(count):
            fh.write(header.tobytes())
            fh.write(np.ascontiguousarray(samples.components[r]).tobytes())


def write_rows_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out_dir, command, artifacts):
    """Versioned index of the artifacts a CLI run produced."""
    import os
    write_json(os.path.join(out_dir, "report_manifest.json"),
               {"format_version": FORMAT_VERSION, "command": command,
                "artifacts": sorted(artifacts)})
