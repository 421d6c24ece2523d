"""
The utils module contains common functions that are used by the other submodules:
sliding windows with replicate padding, the entropy of a window's values, checksums, and the key=value manifest format.
"""
import hashlib
import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Bounds the size of the (rows, width, M, M) comparison arrays built by window_entropy.
CHUNK_ELEMENTS = 4_000_000


def check_window_size(window_size):
    """Raises ValueError unless window_size is an odd integer >= 3."""
    if isinstance(window_size, bool) or not isinstance(window_size, (int, np.integer)):
        raise TypeError("Type of parameter 'window_size' cannot be '" + type(window_size).__name__ + "', needs to be an int")
    if window_size < 3 or window_size % 2 == 0:
        raise ValueError("Window size must be an odd integer >= 3, got " + str(window_size))


def padded_windows(array, window_size):
    """
    Returns a read-only view of shape (height, width, window_size, window_size) holding the window centered on each pixel.

    Borders are handled by replicate padding (edge clamping), so there is one window per pixel.
    """
    radius = window_size // 2
    padded = np.pad(array, radius, mode="edge")
    return sliding_window_view(padded, (window_size, window_size))


def log_in_base(values, base):
    """Logarithm in an arbitrary base > 1, base 2 and e use the exact numpy functions."""
    if base == 2:
        return np.log2(values)
    if base == np.e:
        return np.log(values)
    return np.log(values) / np.log(base)


def window_entropy(codes, base=2):
    """
    Shannon entropy of the empirical distribution of the values found in each window.

    Every value x_j of a window of M values contributes -(1/M) * log(count(x_j) / M),
    which summed over the window gives -sum_g q_g * log(q_g) with q_g the relative frequency of value g.
    Comparing values instead of building histograms keeps the result independent of how the values are labeled.

    :param numpy.ndarray codes: Integer array of shape (height, width, M).
    :param float base: Base of the logarithm.
    :return: Array of shape (height, width).
    """
    codes = np.asarray(codes)
    height, width, size = codes.shape
    result = np.empty((height, width), dtype=np.float64)
    rows_per_chunk = max(1, CHUNK_ELEMENTS // max(1, width * size * size))
    for start in range(0, height, rows_per_chunk):
        chunk = codes[start:start + rows_per_chunk]
        counts = (chunk[..., :, None] == chunk[..., None, :]).sum(axis=-1)
        result[start:start + rows_per_chunk] = -np.sum(log_in_base(counts / size, base), axis=-1) / size
    # -0.0 for windows holding a single value
    return result + 0.0


def sha256_of_file(path):
    """Returns the hexadecimal SHA-256 checksum of a file."""
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for block in iter(lambda: file.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def sha256_of_directory(path):
    """Checksum over every file of a directory: relative names and contents, in sorted order."""
    digest = hashlib.sha256()
    for top, dirs, files in os.walk(path):
        dirs.sort()
        for name in sorted(files):
            full_path = os.path.join(top, name)
            digest.update(os.path.relpath(full_path, path).encode("utf-8"))
            digest.update(sha256_of_file(full_path).encode("ascii"))
    return digest.hexdigest()


def format_manifest(entries):
    """Formats a dictionary as UTF-8 key=value lines with sorted keys."""
    lines = []
    for key in sorted(entries):
        value = str(entries[key])
        if "\n" in key or "=" in key or "\n" in value:
            raise ValueError("Manifest entry '" + key + "' cannot hold '=' in its key or a newline")
        lines.append(key + "=" + value + "\n")
    return "".join(lines).encode("utf-8")


def parse_manifest(data):
    """Reads key=value lines back into a dictionary of strings, blank lines are skipped."""
    entries = dict()
    for number, line in enumerate(bytes(data).decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ValueError("Manifest line " + str(number) + " is not a key=value pair: " + repr(line))
        key, value = line.split("=", 1)
        entries[key] = value
    return entries
