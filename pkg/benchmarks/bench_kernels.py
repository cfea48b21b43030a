"""Time the cosine sweep kernels against each other on synthetic data.

Builds a random CSR weight matrix shaped like a mid-sized indexed project,
then runs every query through both the numpy and the jitted backend and
reports per-query latency. The first jitted call is excluded from timing
(compilation), and both backends are checked for agreement before timing.

Usage: python3 benchmarks/bench_kernels.py [--docs N] [--vocab N] ...
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from croloc._kernels import active_backend, csr_cosine_numba, csr_cosine_numpy


def synthetic_csr(n_docs: int, vocab: int, nnz_per_doc: int, rng: np.random.Generator):
    indptr = np.zeros(n_docs + 1, dtype=np.int64)
    rows = []
    weights = []
    for d in range(n_docs):
        nnz = int(rng.integers(nnz_per_doc // 2, nnz_per_doc + 1))
        cols = rng.choice(vocab, size=min(nnz, vocab), replace=False)
        cols.sort()
        rows.append(cols.astype(np.int64))
        weights.append(rng.random(cols.shape[0]))
        indptr[d + 1] = indptr[d] + cols.shape[0]
    indices = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    data = np.concatenate(weights) if weights else np.zeros(0)
    norms = np.sqrt(np.add.reduceat(data * data, indptr[:-1])) if data.size else np.zeros(n_docs)
    norms[np.diff(indptr) == 0] = 0.0
    return indptr, indices, data.astype(np.float64), norms.astype(np.float64)


def synthetic_queries(n_queries: int, vocab: int, terms: int, rng: np.random.Generator):
    queries = []
    for _ in range(n_queries):
        dense = np.zeros(vocab, dtype=np.float64)
        cols = rng.choice(vocab, size=terms, replace=False)
        dense[cols] = rng.random(terms)
        queries.append((dense, float(np.sqrt(np.dot(dense, dense)))))
    return queries


def time_backend(fn, matrix, queries, repeats: int) -> list[float]:
    indptr, indices, data, norms = matrix
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        for dense, qnorm in queries:
            fn(indptr, indices, data, norms, dense, qnorm)
        samples.append((time.perf_counter() - start) / len(queries))
    return samples


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--docs", type=int, default=4000)
    parser.add_argument("--vocab", type=int, default=20000)
    parser.add_argument("--nnz", type=int, default=120, help="max nonzeros per document row")
    parser.add_argument("--query-terms", type=int, default=40)
    parser.add_argument("--queries", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    matrix = synthetic_csr(args.docs, args.vocab, args.nnz, rng)
    queries = synthetic_queries(args.queries, args.vocab, args.query_terms, rng)
    nnz = matrix[2].shape[0]
    print(f"matrix: {args.docs} docs x {args.vocab} terms, {nnz} nonzeros; "
          f"{args.queries} queries x {args.repeats} repeats")

    numpy_samples = time_backend(csr_cosine_numpy, matrix, queries, args.repeats)
    best_numpy = min(numpy_samples)
    print(f"numpy : best {best_numpy * 1e3:8.3f} ms/query  "
          f"median {statistics.median(numpy_samples) * 1e3:8.3f} ms/query")

    try:
        indptr, indices, data, norms = matrix
        dense, qnorm = queries[0]
        jit_first = csr_cosine_numba(indptr, indices, data, norms, dense, qnorm)
    except RuntimeError as exc:
        print(f"numba : skipped ({exc})")
        return 0

    reference = csr_cosine_numpy(indptr, indices, data, norms, dense, qnorm)
    if not np.allclose(jit_first, reference, rtol=1e-12, atol=1e-15):
        print("backends disagree; refusing to time")
        return 1

    numba_samples = time_backend(csr_cosine_numba, matrix, queries, args.repeats)
    best_numba = min(numba_samples)
    print(f"numba : best {best_numba * 1e3:8.3f} ms/query  "
          f"median {statistics.median(numba_samples) * 1e3:8.3f} ms/query")
    print(f"speedup (best/best): {best_numpy / best_numba:.2f}x  "
          f"[dispatcher would pick: {active_backend()}]")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
