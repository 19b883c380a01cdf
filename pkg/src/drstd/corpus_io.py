"""Readers and writers for the on-disk artifacts of the toolkit.

Four file formats are handled here:

* confusion-network corpora: JSON-lines, one document object per line,
  ``{"doc_id": str, "slots": [{"start": f, "dur": f, "arcs": [[token, posterior], ...]}, ...]}``
* keyword lists: TSV ``kw_id<TAB>token token ...``
* reference occurrences: TSV ``kw_id<TAB>doc_id<TAB>start<TAB>dur``
* candidate occurrences: TSV ``kw_id<TAB>doc_id<TAB>start<TAB>dur<TAB>score[<TAB>YES|NO]``

Lines starting with ``#`` and blank lines are ignored in all TSV formats.
All invariants of the in-memory types are enforced at parse time and
violations raise :class:`FormatError` carrying the offending line number.
Tokens (both confusion-network arcs and keyword text) are normalized to
NFC + lowercase at parse time so that matching elsewhere is exact-string.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

EPS_TOKEN = "<eps>"

# Tolerance for the per-slot posterior sum; absorbs decimal serialization
# error without hiding real mass-accounting bugs.
POSTERIOR_SUM_TOL = 1e-6

SCORE_DECIMALS = 6


class FormatError(ValueError):
    """A file violated its schema or a type invariant.

    Carries enough location information (path and 1-based line number)
    to produce a one-line actionable message.
    """

    def __init__(self, message: str, *, path: str | Path | None = None,
                 line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        loc = ""
        if self.path is not None:
            loc = f"{self.path}:"
            if line is not None:
                loc += f"{line}:"
            loc += " "
        super().__init__(loc + message)


@dataclass(frozen=True, slots=True)
class Slot:
    """One time slot of a confusion network: competing word arcs.

    ``arcs`` holds (token, posterior) pairs; the reserved token ``<eps>``
    marks the null arc and may appear at most once per slot.
    """

    start: float
    duration: float
    arcs: tuple[tuple[str, float], ...]

    @property
    def end(self) -> float:
        return self.start + self.duration

    def eps_posterior(self) -> float | None:
        """Posterior of this slot's null arc, or None if it has none."""
        for token, posterior in self.arcs:
            if token == EPS_TOKEN:
                return posterior
        return None


@dataclass(frozen=True, slots=True)
class ConfusionNetworkDoc:
    """One transcribed document: an ordered sequence of slots."""

    doc_id: str
    slots: tuple[Slot, ...]


@dataclass(frozen=True, slots=True)
class KeywordEntry:
    """A query term: an id and one or more normalized tokens."""

    kw_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class RefOccurrence:
    """A ground-truth occurrence of a keyword in a document."""

    kw_id: str
    doc_id: str
    start: float
    duration: float


@dataclass(frozen=True, slots=True)
class Candidate:
    """A hypothesized keyword occurrence with its confidence score.

    ``decision`` is None until a thresholding step sets it to "YES"/"NO".
    """

    kw_id: str
    doc_id: str
    start: float
    duration: float
    score: float
    decision: str | None = None

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def midpoint(self) -> float:
        return self.start + self.duration / 2.0

    def sort_key(self) -> tuple:
        return (self.kw_id, self.doc_id, self.start, self.duration,
                self.score, self.decision or "")


def normalize_token(token: str) -> str:
    """NFC-normalize and lowercase a token."""
    return unicodedata.normalize("NFC", token).lower()


def validate_doc(doc: ConfusionNetworkDoc, *, path: str | Path | None = None,
                 line: int | None = None) -> None:
    """Check all confusion-network invariants, raising FormatError on the first hit."""
    prev_start = None
    for slot_idx, slot in enumerate(doc.slots):
        where = f"doc '{doc.doc_id}' slot {slot_idx}"
        if not slot.arcs:
            raise FormatError(f"{where}: slot has no arcs", path=path, line=line)
        if slot.duration < 0:
            raise FormatError(f"{where}: negative duration {slot.duration}",
                              path=path, line=line)
        if prev_start is not None and slot.start < prev_start:
            raise FormatError(
                f"{where}: start {slot.start} precedes previous slot start {prev_start}",
                path=path, line=line)
        prev_start = slot.start
        eps_count = 0
        total = 0.0
        for token, posterior in slot.arcs:
            if not 0.0 < posterior <= 1.0:
                raise FormatError(
                    f"{where}: arc '{token}' posterior {posterior} outside (0, 1]",
                    path=path, line=line)
            if token == EPS_TOKEN:
                eps_count += 1
            total += posterior
        if eps_count > 1:
            raise FormatError(f"{where}: more than one {EPS_TOKEN} arc",
                              path=path, line=line)
        if abs(total - 1.0) > POSTERIOR_SUM_TOL:
            raise FormatError(f"{where}: posterior sum {total!r} differs from 1",
                              path=path, line=line)


def parse_cn_corpus(path: str | Path) -> list[ConfusionNetworkDoc]:
    """Parse a JSON-lines confusion-network corpus.

    Documents are returned in file order. A duplicate doc_id, a malformed
    line, or any violated type invariant raises FormatError with the line
    number.
    """
    docs: list[ConfusionNetworkDoc] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed JSON ({exc.msg})",
                                  path=path, line=lineno) from exc
            doc = _doc_from_obj(obj, path=path, line=lineno)
            if doc.doc_id in seen:
                raise FormatError(f"duplicate doc_id '{doc.doc_id}'",
                                  path=path, line=lineno)
            seen.add(doc.doc_id)
            validate_doc(doc, path=path, line=lineno)
            docs.append(doc)
    return docs


def _doc_from_obj(obj: object, *, path: str | Path, line: int) -> ConfusionNetworkDoc:
    if not isinstance(obj, dict):
        raise FormatError("document line is not a JSON object", path=path, line=line)
    try:
        doc_id = obj["doc_id"]
        raw_slots = obj["slots"]
    except KeyError as exc:
        raise FormatError(f"missing field {exc.args[0]!r}", path=path, line=line) from exc
    if not isinstance(doc_id, str) or not doc_id:
        raise FormatError("doc_id must be a non-empty string", path=path, line=line)
    slots = []
    for raw in raw_slots:
        try:
            arcs = tuple(
                (normalize_token(str(token)), float(posterior))
                for token, posterior in raw["arcs"]
            )
            slots.append(Slot(start=float(raw["start"]),
                              duration=float(raw["dur"]),
                              arcs=arcs))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed slot in doc '{doc_id}': {exc}",
                              path=path, line=line) from exc
    return ConfusionNetworkDoc(doc_id=doc_id, slots=tuple(slots))


def write_cn_corpus(path: str | Path, docs: Iterable[ConfusionNetworkDoc]) -> None:
    """Write documents as JSON-lines, one object per line, in input order."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            obj = {
                "doc_id": doc.doc_id,
                "slots": [
                    {"start": slot.start, "dur": slot.duration,
                     "arcs": [[token, posterior] for token, posterior in slot.arcs]}
                    for slot in doc.slots
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def parse_keyword_list(path: str | Path) -> list[KeywordEntry]:
    """Parse a TSV keyword list; duplicate kw_id or blank text is an error."""
    entries: list[KeywordEntry] = []
    seen: set[str] = set()
    for lineno, fields in _tsv_rows(path):
        if len(fields) != 2:
            raise FormatError(f"expected 2 tab-separated columns, got {len(fields)}",
                              path=path, line=lineno)
        kw_id, text = fields
        if kw_id in seen:
            raise FormatError(f"duplicate kw_id '{kw_id}'", path=path, line=lineno)
        seen.add(kw_id)
        tokens = tuple(normalize_token(tok) for tok in text.split())
        if not tokens:
            raise FormatError(f"keyword '{kw_id}' has blank text", path=path, line=lineno)
        entries.append(KeywordEntry(kw_id=kw_id, tokens=tokens))
    return entries


def write_keyword_list(path: str | Path, keywords: Iterable[KeywordEntry]) -> None:
    lines = ["# kw_id\ttokens"]
    lines += [f"{kw.kw_id}\t{' '.join(kw.tokens)}" for kw in keywords]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_occurrence_table(path: str | Path,
                           kind: Literal["ref", "candidate"]
                           ) -> list[RefOccurrence] | list[Candidate]:
    """Parse a reference or candidate TSV; rows are returned in file order.

    Candidate scores are validated to [0, 1]; durations of references must
    be positive and of candidates non-negative.
    """
    if kind not in ("ref", "candidate"):
        raise ValueError(f"kind must be 'ref' or 'candidate', got {kind!r}")
    rows: list = []
    for lineno, fields in _tsv_rows(path):
        if kind == "ref":
            rows.append(_parse_ref_row(fields, path=path, line=lineno))
        else:
            rows.append(_parse_candidate_row(fields, path=path, line=lineno))
    return rows


def _parse_ref_row(fields: list[str], *, path, line) -> RefOccurrence:
    if len(fields) != 4:
        raise FormatError(f"expected 4 columns for a reference row, got {len(fields)}",
                          path=path, line=line)
    kw_id, doc_id, start_s, dur_s = fields
    start, dur = _parse_floats(path, line, start=start_s, dur=dur_s)
    if dur <= 0:
        raise FormatError(f"reference duration must be > 0, got {dur}",
                          path=path, line=line)
    return RefOccurrence(kw_id=kw_id, doc_id=doc_id, start=start, duration=dur)


def _parse_candidate_row(fields: list[str], *, path, line) -> Candidate:
    if len(fields) not in (5, 6):
        raise FormatError(f"expected 5 or 6 columns for a candidate row, got {len(fields)}",
                          path=path, line=line)
    kw_id, doc_id, start_s, dur_s, score_s = fields[:5]
    decision = None
    if len(fields) == 6:
        decision = fields[5]
        if decision not in ("YES", "NO"):
            raise FormatError(f"decision column must be YES or NO, got {decision!r}",
                              path=path, line=line)
    start, dur, score = _parse_floats(path, line, start=start_s, dur=dur_s,
                                      score=score_s)
    if dur < 0:
        raise FormatError(f"negative duration {dur}", path=path, line=line)
    if not 0.0 <= score <= 1.0:
        raise FormatError(f"score {score} outside [0, 1]", path=path, line=line)
    return Candidate(kw_id=kw_id, doc_id=doc_id, start=start, duration=dur,
                     score=score, decision=decision)


def _parse_floats(path, line, **named: str) -> tuple[float, ...]:
    values = []
    for name, text in named.items():
        try:
            values.append(float(text))
        except ValueError as exc:
            raise FormatError(f"column '{name}' is not a number: {text!r}",
                              path=path, line=line) from exc
    return tuple(values)


def _tsv_rows(path: str | Path):
    """Yield (lineno, fields) for non-blank, non-comment TSV lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.rstrip("\n")
            if not stripped.strip() or stripped.lstrip().startswith("#"):
                continue
            yield lineno, stripped.split("\t")


def write_candidates(path: str | Path, candidates: Sequence[Candidate]) -> None:
    """Write candidates sorted by (kw_id, doc_id, start); scores at 6 decimals.

    The output parses back to an equal sequence, with scores compared after
    6-decimal quantization.
    """
    lines = ["# kw_id\tdoc_id\tstart\tdur\tscore[\tdecision]"]
    for cand in sorted(candidates, key=Candidate.sort_key):
        row = (f"{cand.kw_id}\t{cand.doc_id}\t{cand.start!r}\t{cand.duration!r}"
               f"\t{cand.score:.{SCORE_DECIMALS}f}")
        if cand.decision is not None:
            row += f"\t{cand.decision}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_references(path: str | Path, refs: Sequence[RefOccurrence]) -> None:
    """Write references sorted by (kw_id, doc_id, start)."""
    lines = ["# kw_id\tdoc_id\tstart\tdur"]
    for ref in sorted(refs, key=lambda r: (r.kw_id, r.doc_id, r.start, r.duration)):
        lines.append(f"{ref.kw_id}\t{ref.doc_id}\t{ref.start!r}\t{ref.duration!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def quantize_score(score: float) -> float:
    """Score equality under the 6-decimal serialization used by write_candidates."""
    return float(f"{score:.{SCORE_DECIMALS}f}")


def corpus_duration_seconds(docs: Iterable[ConfusionNetworkDoc]) -> float:
    """Total speech duration: the summed time span of every document."""
    total = 0.0
    for doc in docs:
        if doc.slots:
            total += doc.slots[-1].end - doc.slots[0].start
    return total
