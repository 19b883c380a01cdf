"""Seeded synthetic confusion-network corpora with topic burstiness.

Documents are grouped into fixed-size topics. Each keyword gets a home
topic; each of its true occurrences is planted in a home-topic document
with probability ``topic_affinity`` and in a uniformly random document
otherwise, so correct hits cluster in topic-related documents to a
controllable degree.

Every slot carries one "spoken" token plus 2-4 competitor arcs (one of
which is occasionally the null arc). The spoken token's posterior is
drawn uniformly from [0.78 - 0.72 * noise, 0.97 - 0.46 * noise]: noise
both lowers and spreads it, so at noise 0 it always dominates its slot
and at high noise it sinks into the competitor range, producing misses
and false alarms downstream. The remaining probability mass is split
across competitors by a flattened Dirichlet (0.7 * Dirichlet(1,..,1)
+ 0.3 * uniform), which keeps every arc posterior printable at six
decimals. Competitor tokens are drawn from a power-law (Zipf, exponent
1.07) profile over the vocabulary with keyword tokens damped to a tenth
of their share, filler tokens from the same profile restricted to
non-keyword tokens, so keywords are never "spoken" outside their planted
slots but do show up as recognizer confusions; inside a keyword's own
home topic they additionally appear as the top competitor in a small
fraction of slots, concentrating false alarms where document weights are
high. Generation is single-threaded and fully determined by the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus_io import (ConfusionNetworkDoc, EPS_TOKEN, KeywordEntry,
                        RefOccurrence, Slot)

TRUE_POSTERIOR_RANGE = (0.78, 0.97)
# Noise pulls the spoken token's posterior down and also spreads it out:
# the lower edge falls faster than the upper one.
NOISE_SLOPE_LO = 0.72
NOISE_SLOPE_HI = 0.46
COMPETITOR_RANGE = (2, 5)  # rng.integers bounds: 2..4 competitors
EPS_ARC_PROB = 0.15
DIRICHLET_MIX = 0.7
SLOT_DURATION_RANGE = (0.25, 0.45)
OCCURRENCES_RANGE = (6, 13)  # 6..12 true occurrences per keyword
ZIPF_EXPONENT = 1.07
# Keyword tokens are rarer recognizer confusions than fillers: their
# share of the competitor-draw profile is scaled down by this factor.
KEYWORD_CONFUSION_FACTOR = 0.10
# ... except inside their own home topic, where confusable words recur:
# this fraction of home-topic slots hypothesizes the keyword as the top
# competitor arc, concentrating false alarms in high-weight documents.
TOPICAL_CONFUSION_PROB = 0.03


@dataclass(frozen=True, slots=True)
class SynthConfig:
    num_docs: int
    slots_per_doc: int
    vocab_size: int
    num_keywords: int
    topic_affinity: float
    docs_per_topic: int
    noise: float
    seed: int

    def __post_init__(self):
        for name in ("num_docs", "slots_per_doc", "vocab_size",
                     "num_keywords", "docs_per_topic"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("topic_affinity", "noise"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {getattr(self, name)}")

    @property
    def num_topics(self) -> int:
        return math.ceil(self.num_docs / self.docs_per_topic)


def generate(config: SynthConfig) -> tuple[
        list[ConfusionNetworkDoc], list[KeywordEntry], list[RefOccurrence]]:
    """Generate (corpus, keyword list, reference list) for one config.

    Deterministic given the seed; raises ValueError when the vocabulary
    is too small to host the keywords plus at least one filler token.
    """
    if config.vocab_size < config.num_keywords + 1:
        raise ValueError(
            f"vocabulary of {config.vocab_size} is too small to host "
            f"{config.num_keywords} keywords plus filler tokens")
    rng = np.random.default_rng(config.seed)
    vocab = [f"w{i:04d}" for i in range(config.vocab_size)]
    zipf = 1.0 / np.arange(1, config.vocab_size + 1) ** ZIPF_EXPONENT
    zipf /= zipf.sum()

    kw_indices = rng.choice(config.vocab_size, size=config.num_keywords,
                            replace=False)
    kw_tokens = [vocab[i] for i in kw_indices]
    keywords = [KeywordEntry(kw_id=f"KW{i + 1:04d}", tokens=(tok,))
                for i, tok in enumerate(kw_tokens)]

    filler_mask = np.ones(config.vocab_size, dtype=bool)
    filler_mask[kw_indices] = False
    filler_probs = np.where(filler_mask, zipf, 0.0)
    filler_probs /= filler_probs.sum()
    competitor_probs = np.where(filler_mask, zipf,
                                zipf * KEYWORD_CONFUSION_FACTOR)
    competitor_probs /= competitor_probs.sum()

    planted, home_topics = _plan_placements(config, rng, kw_tokens)
    topic_keywords: dict[int, list[str]] = {}
    for token, topic in home_topics.items():
        topic_keywords.setdefault(topic, []).append(token)

    docs: list[ConfusionNetworkDoc] = []
    refs: list[RefOccurrence] = []
    token_to_kw = {tok: kw.kw_id for tok, kw in zip(kw_tokens, keywords)}
    for doc_idx in range(config.num_docs):
        doc_id = f"d{doc_idx:04d}"
        doc_plants = planted.get(doc_idx, {})
        topical = topic_keywords.get(doc_idx // config.docs_per_topic, [])
        slots = []
        clock = 0.0
        for slot_idx in range(config.slots_per_doc):
            duration = float(rng.uniform(*SLOT_DURATION_RANGE))
            spoken = doc_plants.get(slot_idx)
            if spoken is None:
                spoken = vocab[int(rng.choice(config.vocab_size, p=filler_probs))]
            else:
                refs.append(RefOccurrence(kw_id=token_to_kw[spoken],
                                          doc_id=doc_id, start=clock,
                                          duration=duration))
            slots.append(Slot(start=clock, duration=duration,
                              arcs=_draw_arcs(config, rng, competitor_probs,
                                              vocab, spoken, topical)))
            clock += duration
        docs.append(ConfusionNetworkDoc(doc_id=doc_id, slots=tuple(slots)))
    refs.sort(key=lambda r: (r.kw_id, r.doc_id, r.start))
    return docs, keywords, refs


def _plan_placements(config: SynthConfig, rng: np.random.Generator,
                     kw_tokens: list[str]
                     ) -> tuple[dict[int, dict[int, str]], dict[str, int]]:
    """Choose (doc, slot) for every true occurrence before building docs."""
    topic_docs = {
        t: [d for d in range(t * config.docs_per_topic,
                             min((t + 1) * config.docs_per_topic, config.num_docs))]
        for t in range(config.num_topics)
    }
    planted: dict[int, dict[int, str]] = {}
    home_topics: dict[str, int] = {}
    for token in kw_tokens:
        home = int(rng.integers(config.num_topics))
        home_topics[token] = home
        n_occ = int(rng.integers(*OCCURRENCES_RANGE))
        for _ in range(n_occ):
            if rng.random() < config.topic_affinity:
                doc_idx = int(rng.choice(topic_docs[home]))
            else:
                doc_idx = int(rng.integers(config.num_docs))
            used = planted.setdefault(doc_idx, {})
            slot_idx = _free_slot(rng, used, config.slots_per_doc)
            if slot_idx is None:
                continue  # document saturated; drop this occurrence
            used[slot_idx] = token
    return planted, home_topics


def _free_slot(rng: np.random.Generator, used: dict[int, str],
               slots_per_doc: int) -> int | None:
    for _ in range(50):
        slot_idx = int(rng.integers(slots_per_doc))
        if slot_idx not in used:
            return slot_idx
    for slot_idx in range(slots_per_doc):
        if slot_idx not in used:
            return slot_idx
    return None


def _draw_arcs(config: SynthConfig, rng: np.random.Generator,
               competitor_probs: np.ndarray, vocab: list[str], spoken: str,
               topical: list[str]) -> tuple[tuple[str, float], ...]:
    lo, hi = TRUE_POSTERIOR_RANGE
    p_spoken = float(rng.uniform(lo - NOISE_SLOPE_LO * config.noise,
                                 hi - NOISE_SLOPE_HI * config.noise))
    n_comp = int(rng.integers(*COMPETITOR_RANGE))
    draw = rng.choice(len(vocab), size=n_comp + 1, replace=False,
                      p=competitor_probs)
    comp_tokens = [vocab[i] for i in draw if vocab[i] != spoken][:n_comp]
    candidates_topical = [t for t in topical if t != spoken]
    topical_hit = False
    if candidates_topical and rng.random() < TOPICAL_CONFUSION_PROB:
        confusion = candidates_topical[int(rng.integers(len(candidates_topical)))]
        if confusion not in comp_tokens:
            comp_tokens[0] = confusion
            topical_hit = True
    if rng.random() < EPS_ARC_PROB and len(comp_tokens) > 1:
        comp_tokens[-1] = EPS_TOKEN
    shares = rng.dirichlet(np.ones(len(comp_tokens)))
    shares = DIRICHLET_MIX * shares + (1.0 - DIRICHLET_MIX) / len(comp_tokens)
    if topical_hit:
        shares = np.concatenate([[shares.max()],
                                 np.delete(shares, shares.argmax())])
    remainder = 1.0 - p_spoken
    arcs = [(spoken, p_spoken)]
    arcs += [(tok, float(remainder * share))
             for tok, share in zip(comp_tokens, shares)]
    return tuple(arcs)


def plant_report(refs: list[RefOccurrence], config: SynthConfig,
                 keywords: list[KeywordEntry]) -> dict[str, float]:
    """Fraction of each keyword's occurrences that landed in one topic.

    Reports, per kw_id, the share of its references falling inside the
    single topic that hosts most of them (its de-facto home).
    """
    per_kw_topic: dict[str, dict[int, int]] = {}
    for ref in refs:
        doc_idx = int(ref.doc_id[1:])
        topic = doc_idx // config.docs_per_topic
        per_kw_topic.setdefault(ref.kw_id, {})
        per_kw_topic[ref.kw_id][topic] = per_kw_topic[ref.kw_id].get(topic, 0) + 1
    out = {}
    for kw in keywords:
        topics = per_kw_topic.get(kw.kw_id, {})
        total = sum(topics.values())
        out[kw.kw_id] = max(topics.values()) / total if total else 0.0
    return out


def min_true_posterior(docs: list[ConfusionNetworkDoc],
                       refs: list[RefOccurrence],
                       keywords: list[KeywordEntry]) -> float:
    """Smallest posterior of any planted keyword arc (for threshold picks)."""
    token_of = {kw.kw_id: kw.tokens[0] for kw in keywords}
    by_doc = {doc.doc_id: doc for doc in docs}
    smallest = 1.0
    for ref in refs:
        for slot in by_doc[ref.doc_id].slots:
            if slot.start == ref.start:
                for token, posterior in slot.arcs:
                    if token == token_of[ref.kw_id]:
                        smallest = min(smallest, posterior)
                break
    return smallest
