"""Pure numpy fallback for :mod:`etdclust._kernels`.

Same signatures, same results bit-for-bit. Squared differences are summed
over variables in index order and the square root is taken after the max,
exactly as in the compiled loop.
"""
import numpy as np


def etd_rows(values, out, start, stop):
    n, _, p = values.shape
    for i in range(start, stop):
        if i + 1 >= n:
            continue
        diff = values[i + 1:] - values[i]
        acc = diff[:, :, 0] * diff[:, :, 0]
        for d in range(1, p):
            acc = acc + diff[:, :, d] * diff[:, :, d]
        row = np.sqrt(acc.max(axis=1))
        out[i, i + 1:] = row
        out[i + 1:, i] = row


def first_layer_groups(adjacency):
    adjacency = np.asarray(adjacency, dtype=bool)
    n = adjacency.shape[0]
    counts = adjacency.sum(axis=1).astype(np.int64)
    alive = np.ones(n, dtype=bool)
    group_of = np.full(n, -1, dtype=np.int64)
    cores = []
    g = 0
    while alive.any():
        masked = np.where(alive, counts, -1)
        core = int(np.argmax(masked))
        members = alive & adjacency[core]
        alive &= ~members
        group_of[members] = g
        counts -= adjacency[:, members].sum(axis=1)
        cores.append(core)
        g += 1
    return group_of, cores
