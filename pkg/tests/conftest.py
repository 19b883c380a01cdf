"""Shared helpers for building random test instances."""

from __future__ import annotations

import numpy as np

from drstd.corpus_io import (Candidate, ConfusionNetworkDoc, KeywordEntry,
                             RefOccurrence, Slot)


def random_corpus(rng: np.random.Generator, max_docs: int = 50,
                  vocab_size: int = 12, eps_prob: float = 0.3,
                  max_slots: int = 25) -> list[ConfusionNetworkDoc]:
    """Small random confusion networks with a tiny, collision-heavy vocab."""
    vocab = [f"t{i}" for i in range(vocab_size)]
    docs = []
    for d in range(int(rng.integers(1, max_docs + 1))):
        slots = []
        clock = float(rng.uniform(0, 2))
        for _ in range(int(rng.integers(1, max_slots + 1))):
            duration = float(rng.uniform(0.1, 0.5))
            n_arcs = int(rng.integers(1, 4))
            tokens = list(rng.choice(vocab_size, size=n_arcs, replace=False))
            arcs = [vocab[t] for t in tokens]
            if rng.random() < eps_prob:
                arcs[-1] = "<eps>"
            weights = rng.dirichlet(np.ones(len(arcs))) * 0.98 + 0.02 / len(arcs)
            slots.append(Slot(start=clock, duration=duration,
                              arcs=tuple(zip(arcs, map(float, weights)))))
            clock += duration + float(rng.uniform(0, 0.1))
        docs.append(ConfusionNetworkDoc(doc_id=f"doc{d:03d}", slots=tuple(slots)))
    return docs


def random_keywords(rng: np.random.Generator, n: int, vocab_size: int = 12,
                    max_len: int = 3) -> list[KeywordEntry]:
    out = []
    for i in range(n):
        length = int(rng.integers(1, max_len + 1))
        tokens = tuple(f"t{int(rng.integers(vocab_size))}" for _ in range(length))
        out.append(KeywordEntry(kw_id=f"K{i:03d}", tokens=tokens))
    return out


def random_candidates(rng: np.random.Generator, n: int, n_kws: int = 10,
                      n_docs: int = 10) -> list[Candidate]:
    out = []
    for _ in range(n):
        out.append(Candidate(
            kw_id=f"K{int(rng.integers(n_kws)):03d}",
            doc_id=f"doc{int(rng.integers(n_docs)):03d}",
            start=round(float(rng.uniform(0, 600)), 3),
            duration=round(float(rng.uniform(0.1, 0.9)), 3),
            score=float(rng.uniform(0.001, 1.0))))
    return out


def random_references(rng: np.random.Generator, n: int, n_kws: int = 10,
                      n_docs: int = 10) -> list[RefOccurrence]:
    out = []
    for _ in range(n):
        out.append(RefOccurrence(
            kw_id=f"K{int(rng.integers(n_kws)):03d}",
            doc_id=f"doc{int(rng.integers(n_docs)):03d}",
            start=round(float(rng.uniform(0, 600)), 3),
            duration=round(float(rng.uniform(0.1, 0.9)), 3)))
    return out
