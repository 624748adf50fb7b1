"""Pure-numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` operation for operation. Block energies are
accumulated in the same sequential order as the compiled loop so that both
backends select identical supports.
"""

import numpy as np


def block_project(v, n_keep, b):
    """Keep the ``n_keep`` length-``b`` blocks of ``v`` with largest energy.

    Ties go to the lower block index. Returns ``(projected, kept_blocks)``
    with ``kept_blocks`` sorted ascending.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    nb = v.shape[0] // b
    blocks = v.reshape(nb, b)
    energy = np.zeros(nb)
    for j in range(b):
        energy = energy + blocks[:, j] * blocks[:, j]
    n_keep = min(int(n_keep), nb)
    kept = np.sort(np.argsort(-energy, kind="stable")[:n_keep]).astype(np.int64)
    out = np.zeros_like(blocks)
    out[kept] = blocks[kept]
    return out.reshape(-1), kept


def tone_argmax(U, Dm, freqs, order):
    """Matched-filter argmax for each row of ``U``.

    Row ``l`` holds samples ``u`` taken at locations ``Dm[l]``. Each candidate
    frequency scores ``<u, sin(w d)> / ||sin(w d)||`` (zero-norm templates
    score 0). Candidates are visited in ``order`` and only a strictly larger
    score replaces the incumbent, so ``order`` encodes the tie-break.
    Returns ``(best_index, best_score)``.
    """
    U = np.ascontiguousarray(U, dtype=np.float64)
    Dm = np.ascontiguousarray(Dm, dtype=np.float64)
    order = np.asarray(order, dtype=np.int64)
    w = np.asarray(freqs, dtype=np.float64)[order]
    q = U.shape[0]
    best_idx = np.empty(q, dtype=np.int64)
    best_score = np.empty(q)
    for l in range(q):
        S = np.sin(np.outer(w, Dm[l]))
        nrm = np.sqrt(np.einsum("ij,ij->i", S, S))
        dot = S @ U[l]
        score = np.zeros_like(dot)
        np.divide(dot, nrm, out=score, where=nrm > 0)
        j = int(np.argmax(score))
        best_idx[l] = order[j]
        best_score[l] = score[j]
    return best_idx, best_score


def tone_scores(U, Dm, freqs):
    """Full ``(q, G)`` matrix of normalized correlations."""
    U = np.ascontiguousarray(U, dtype=np.float64)
    Dm = np.ascontiguousarray(Dm, dtype=np.float64)
    w = np.asarray(freqs, dtype=np.float64)
    out = np.zeros((U.shape[0], w.shape[0]))
    for l in range(U.shape[0]):
        S = np.sin(np.outer(w, Dm[l]))
        nrm = np.sqrt(np.einsum("ij,ij->i", S, S))
        np.divide(S @ U[l], nrm, out=out[l], where=nrm > 0)
    return out
