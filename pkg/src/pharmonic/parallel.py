"""Worker-count and reduction-order settings for element assembly.

Nodal scatter-adds are split into chunks.  In deterministic mode the chunk
boundaries are fixed (independent of the number of workers) and partial sums
are combined in chunk order, so results are bit-identical for any worker
count.  Otherwise there is one chunk per worker and partials are combined in
completion order.
"""

from __future__ import annotations

import contextlib
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np

CHUNK = 16384

_settings = {"workers": 1, "deterministic": True}


def configure(workers: int | None = None, deterministic: bool | None = None) -> dict:
    if workers is not None:
        if workers < 1:
            raise ValueError("workers must be >= 1")
        _settings["workers"] = int(workers)
    if deterministic is not None:
        _settings["deterministic"] = bool(deterministic)
    return dict(_settings)


def settings() -> dict:
    return dict(_settings)


@contextlib.contextmanager
def parallel_settings(workers: int | None = None, deterministic: bool | None = None):
    saved = dict(_settings)
    configure(workers, deterministic)
    try:
        yield settings()
    finally:
        _settings.update(saved)


def _partial(index, values, size):
    return np.stack(
        [np.bincount(index, weights=values[:, j], minlength=size) for j in range(values.shape[1])],
        axis=1,
    )


def scatter_add(index, values, size: int) -> np.ndarray:
    """Sum rows of ``values`` (m, k) into ``size`` bins given by ``index`` (m,)."""
    index = np.asarray(index).ravel()
    values = np.asarray(values, dtype=float)
    values = values.reshape(len(index), -1) if values.size else values.reshape(len(index), max(values.shape[-1], 1))
    workers = _settings["workers"]
    if _settings["deterministic"]:
        bounds = list(range(0, len(index), CHUNK)) + [len(index)]
    else:
        bounds = np.linspace(0, len(index), workers + 1).astype(int).tolist()
    spans = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    out = np.zeros((size, values.shape[1]))
    if not spans:
        return out
    if workers == 1 or len(spans) == 1:
        for a, b in spans:
            out += _partial(index[a:b], values[a:b], size)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_partial, index[a:b], values[a:b], size) for a, b in spans]
        if _settings["deterministic"]:
            for fut in futures:
                out += fut.result()
        else:
            for fut in as_completed(futures):
                out += fut.result()
    return out
