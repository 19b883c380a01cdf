"""Hard YES/NO detection decisions from candidate scores.

Two policies: a single global threshold, or a keyword-specific threshold
(KST) derived by maximizing the expected term-weighted value when each
candidate's score is read as its probability of being a true hit. With
N = sum of scores (the expected number of true occurrences), cost ratio
beta, and trial duration T seconds, a candidate is worth accepting iff

    score >= beta * N / (T + (beta - 1) * N)

which is the per-keyword threshold computed here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus_io import Candidate

DEFAULT_BETA = 999.9


@dataclass(frozen=True, slots=True)
class DecisionPolicy:
    mode: str  # "global" or "kst"
    global_threshold: float = 0.5
    beta: float = DEFAULT_BETA
    trial_seconds: float = 3600.0

    def __post_init__(self):
        if self.mode not in ("global", "kst"):
            raise ValueError(f"mode must be 'global' or 'kst', got {self.mode!r}")
        if not 0.0 <= self.global_threshold <= 1.0:
            raise ValueError(f"global_threshold outside [0, 1]: {self.global_threshold}")
        if self.beta <= 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.trial_seconds <= 0.0:
            raise ValueError(f"trial_seconds must be > 0, got {self.trial_seconds}")


def kst_threshold(candidates: Sequence[Candidate], policy: DecisionPolicy) -> float:
    """Keyword-specific threshold for one keyword's candidate list.

    An empty list returns 1.0 by convention: nothing can pass.
    """
    if policy.mode != "kst":
        raise ValueError("kst_threshold requires a policy with mode='kst'")
    expected_true = sum(c.score for c in candidates)
    if expected_true <= 0.0:
        return 1.0
    return (policy.beta * expected_true
            / (policy.trial_seconds + (policy.beta - 1.0) * expected_true))


def apply_decisions(candidates: Sequence[Candidate],
                    policy: DecisionPolicy) -> list[Candidate]:
    """Set each candidate's decision field; order and other fields kept.

    Global mode: YES iff score >= global_threshold. KST mode: YES iff
    score >= the keyword's own threshold. Idempotent.
    """
    if policy.mode == "global":
        thresholds = None
    else:
        by_kw: dict[str, list[Candidate]] = {}
        for cand in candidates:
            by_kw.setdefault(cand.kw_id, []).append(cand)
        thresholds = {kw_id: kst_threshold(group, policy)
                      for kw_id, group in by_kw.items()}
    out = []
    for cand in candidates:
        cut = policy.global_threshold if thresholds is None else thresholds[cand.kw_id]
        decision = "YES" if cand.score >= cut else "NO"
        out.append(Candidate(kw_id=cand.kw_id, doc_id=cand.doc_id,
                             start=cand.start, duration=cand.duration,
                             score=cand.score, decision=decision))
    return out


def yes_only(candidates: Sequence[Candidate]) -> list[Candidate]:
    """The accepted detections of a decided candidate list."""
    return [c for c in candidates if c.decision == "YES"]
