"""Monte Carlo stratum integrals  int_{X(q)} |det L| dv_X.

Samples are drawn in fixed-size chunks; chunk i uses the i-th child of
``SeedSequence(seed)``.  Chunk sums are reduced in chunk order, so the
result depends on (seed, N, CHUNK) only and not on the worker count.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .levi import classify_batch, levi_eigs
from .manifold import CRModel

CHUNK = 1 << 16
REJECT_LIMIT = 0.01


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int
    rejected: int = 0

    @property
    def rejection_rate(self) -> float:
        tot = self.n_samples + self.rejected
        return self.rejected / tot if tot else 0.0

    @property
    def inconclusive(self) -> bool:
        return self.rejection_rate > REJECT_LIMIT


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("CRMORSE_WORKERS", "1")))
    except ValueError:
        return 1


def _stratum_values(model: CRModel, rng, size: int):
    """(size, n) array: column q holds weight * 1_{X(q)} * |det L| per sample."""
    b = model.sample(rng, size)
    eig = levi_eigs(model, b.points)
    q = classify_batch(eig)
    det = np.abs(np.prod(eig, axis=1))
    out = np.zeros((len(b.weights), model.n))
    rows = np.nonzero(q >= 0)[0]
    out[rows, q[rows]] = b.weights[rows] * det[rows]
    return out, b.rejected


def _chunk(args):
    model, child, size = args
    return _stratum_values(model, np.random.default_rng(child), size)


def _signed_matrix(n):
    # row q: sum_{j<=q} (-1)^{q-j} e_j
    S = np.zeros((n, n))
    for q in range(n):
        for j in range(q + 1):
            S[q, j] = (-1) ** (q - j)
    return S


def _run(model: CRModel, N: int, seed: int, transforms, workers=None):
    """Accumulate the transformed per-sample vectors; returns list of MCEstimate."""
    workers = default_workers() if workers is None else workers
    nchunks = max(1, -(-int(N) // CHUNK))
    sizes = [CHUNK] * (nchunks - 1) + [int(N) - CHUNK * (nchunks - 1)]
    children = np.random.SeedSequence(seed).spawn(nchunks)
    jobs = [(model, c, s) for c, s in zip(children, sizes)]
    if workers > 1 and nchunks > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_chunk, jobs))
    else:
        results = [_chunk(j) for j in jobs]
    return _merge(results, transforms, seed)


def _merge(results, transforms, seed):
    """Reduce per-chunk (values, rejected) pairs in chunk order."""
    k = transforms.shape[0]
    # chunk means and centered sums of squares, merged pairwise in chunk order
    mean = np.zeros(k)
    m2 = np.zeros(k)
    n_tot = rej = 0
    for vals, r_i in results:
        tv = vals @ transforms.T
        nb = len(tv)
        if nb == 0:
            continue
        mb = tv.mean(axis=0)
        m2b = ((tv - mb) ** 2).sum(axis=0)
        n_new = n_tot + nb
        delta = mb - mean
        mean = mean + delta * nb / n_new
        m2 = m2 + m2b + delta ** 2 * n_tot * nb / n_new
        n_tot = n_new
        rej += r_i
    var = m2 / max(n_tot - 1, 1)
    se = np.sqrt(var / n_tot)
    return [MCEstimate(float(m), float(e), n_tot, int(seed), int(rej)) for m, e in zip(mean, se)]


def integrate_stratum(model: CRModel, q: int, N: int, seed: int, workers=None) -> MCEstimate:
    """Estimate int_X 1_{X(q)} |det L| dv_X."""
    if not 0 <= q <= model.n - 1:
        raise ValueError(f"q must lie in 0..{model.n - 1}")
    e = np.zeros((1, model.n))
    e[0, q] = 1.0
    return _run(model, N, seed, e, workers)[0]


def stratum_integrals(model: CRModel, N: int, seed: int, workers=None) -> list:
    """All strata from one shared sample stream."""
    return _run(model, N, seed, np.eye(model.n), workers)


def signed_sums(model: CRModel, q_max: int, N: int, seed: int, workers=None) -> list:
    """Alternating partial sums sum_{j<=q} (-1)^{q-j} int_{X(j)} |det L|, q = 0..q_max."""
    if not 0 <= q_max <= model.n - 1:
        raise ValueError(f"q_max must lie in 0..{model.n - 1}")
    return _run(model, N, seed, _signed_matrix(model.n)[: q_max + 1], workers)


def functionals(model: CRModel, T, N: int, seed: int, workers=None) -> list:
    """Estimates of T @ (int_{X(0)} |det L|, ..., int_{X(n-1)} |det L|) from one sample stream.

    Rows of T are combined per sample, so the stderr of a difference accounts
    for the correlation between strata.
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[1] != model.n:
        raise ValueError(f"functional matrix must have {model.n} columns")
    return _run(model, N, seed, T, workers)


def volume(model: CRModel, N: int, seed: int) -> MCEstimate:
    """Vol(X) estimate from the same sampler (f = 1)."""
    nchunks = max(1, -(-int(N) // CHUNK))
    sizes = [CHUNK] * (nchunks - 1) + [int(N) - CHUNK * (nchunks - 1)]
    T = np.ones((1, 1))
    vals = []
    for child, size in zip(np.random.SeedSequence(seed).spawn(nchunks), sizes):
        b = model.sample(np.random.default_rng(child), size)
        vals.append((b.weights[:, None], b.rejected))
    return _merge(vals, T, seed)[0]


def to_csv(rows) -> str:
    """rows: iterable of (model_name, q, MCEstimate)."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["model", "q", "N", "seed", "value", "stderr"])
    for name, q, est in rows:
        wr.writerow([name, q, est.n_samples, est.seed, f"{est.value:.17g}", f"{est.stderr:.17g}"])
    return buf.getvalue()


def as_dict(est: MCEstimate) -> dict:
    d = asdict(est)
    d["inconclusive"] = est.inconclusive
    return d
