"""Inverted index over processed documents.

Two searchable fields ("title", "body"); publication dates and the
HTML-stripped body text ride along as per-document metadata (the raw body
feeds the keyword-reduction step of the re-ranker). The index is immutable
once built and safe for unlimited concurrent readers.

Persistence is a single versioned binary file::

    magic "BLIX" | u16 version | section* | sha256 digest (32 bytes)
    section := u8 name_len | name (utf-8) | u64 payload_len | payload

Sections (all integers little-endian): "meta" (JSON: doc_count, fields,
avg_field_length), "docids" and "rawbodies" (u32 count, then u32 byte-length
+ utf-8 per string), "dates" (u32 count + i64 each), "lengths:<field>"
(u32 count + u32 each), "postings:<field>" (u32 term count, then per term:
u16 term byte-length + utf-8 term + u32 postings count + (u32 ordinal,
u32 tf) pairs). The digest covers everything before it; load verifies it,
so truncation or corruption is detected.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from backlink.corpus import ProcessedDocument

FIELDS = ("title", "body")

_MAGIC = b"BLIX"
_VERSION = 1


class InvertedIndexError(Exception):
    """Index construction or persistence failure."""


class DuplicateDocumentError(InvertedIndexError):
    pass


class IndexFormatError(InvertedIndexError):
    """Unreadable, corrupt, or wrong-version index file."""


def unknown_field(name: str) -> ValueError:
    return ValueError(f"unknown field {name!r}; indexed fields are {FIELDS}")


@dataclass
class InvertedIndex:
    # field -> term -> (ordinals u32 ascending, term frequencies u32)
    postings: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]]
    doc_ids: list[str]
    doc_dates: np.ndarray  # i64 epoch ms, parallel to doc_ids
    field_lengths: dict[str, np.ndarray]  # u32 token counts per document
    avg_field_length: dict[str, float]
    doc_count: int
    raw_bodies: list[str]
    _id_to_ordinal: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._id_to_ordinal:
            self._id_to_ordinal = {d: i for i, d in enumerate(self.doc_ids)}

    # -- lookups ---------------------------------------------------------

    def ordinal(self, doc_id: str) -> int:
        try:
            return self._id_to_ordinal[doc_id]
        except KeyError:
            raise KeyError(f"document {doc_id!r} not in index") from None

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._id_to_ordinal

    def term_postings(self, term: str, field_name: str):
        """(ordinals, tfs) arrays for a term, or None if absent."""
        if field_name not in self.postings:
            raise unknown_field(field_name)
        return self.postings[field_name].get(term)

    def tf(self, term: str, doc_ordinal: int, field_name: str) -> int:
        """Occurrences of term in one document's field; 0 if absent."""
        if not 0 <= doc_ordinal < self.doc_count:
            raise IndexError(f"ordinal {doc_ordinal} out of range")
        entry = self.term_postings(term, field_name)
        if entry is None:
            return 0
        ords, tfs = entry
        pos = int(np.searchsorted(ords, doc_ordinal))
        if pos < len(ords) and ords[pos] == doc_ordinal:
            return int(tfs[pos])
        return 0

    def df(self, term: str, field_name: str) -> int:
        """Number of documents whose field contains the term."""
        entry = self.term_postings(term, field_name)
        return 0 if entry is None else len(entry[0])

    def idf(self, term: str, field_name: str) -> float:
        """Smoothed inverse document frequency, ln((N-df+0.5)/(df+0.5)+1).

        Always positive; well-defined at df = 0 thanks to the smoothing.
        """
        if self.doc_count < 1:
            raise InvertedIndexError("idf undefined on an empty index")
        df = self.df(term, field_name)
        n = self.doc_count
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)


def build(docs: Iterable[tuple[ProcessedDocument, int]]) -> InvertedIndex:
    """Build an index from (processed document, publish date) pairs.

    Duplicate ids raise DuplicateDocumentError. An empty stream yields a
    valid empty index.
    """
    doc_ids: list[str] = []
    dates: list[int] = []
    raw_bodies: list[str] = []
    lengths: dict[str, list[int]] = {f: [] for f in FIELDS}
    # field -> term -> ([ordinals], [tfs]); appended in doc order, so the
    # ordinal lists come out strictly ascending
    acc: dict[str, dict[str, tuple[list[int], list[int]]]] = {f: {} for f in FIELDS}
    seen: set[str] = set()

    for doc, date in docs:
        if doc.id in seen:
            raise DuplicateDocumentError(f"duplicate document id {doc.id!r}")
        seen.add(doc.id)
        ordinal = len(doc_ids)
        doc_ids.append(doc.id)
        dates.append(int(date))
        raw_bodies.append(doc.raw_body)
        for field_name, tokens in (("title", doc.title_tokens), ("body", doc.body_tokens)):
            lengths[field_name].append(len(tokens))
            counts: dict[str, int] = {}
            for tok in tokens:
                counts[tok] = counts.get(tok, 0) + 1
            table = acc[field_name]
            for term, tf in counts.items():
                entry = table.get(term)
                if entry is None:
                    entry = table[term] = ([], [])
                entry[0].append(ordinal)
                entry[1].append(tf)

    postings = {
        f: {
            term: (
                np.asarray(ords, dtype=np.uint32),
                np.asarray(tfs, dtype=np.uint32),
            )
            for term, (ords, tfs) in table.items()
        }
        for f, table in acc.items()
    }
    field_lengths = {f: np.asarray(v, dtype=np.uint32) for f, v in lengths.items()}
    avg = {
        f: (float(arr.sum()) / len(arr) if len(arr) else 0.0)
        for f, arr in field_lengths.items()
    }
    return InvertedIndex(
        postings=postings,
        doc_ids=doc_ids,
        doc_dates=np.asarray(dates, dtype=np.int64),
        field_lengths=field_lengths,
        avg_field_length=avg,
        doc_count=len(doc_ids),
        raw_bodies=raw_bodies,
    )


def structurally_equal(a: InvertedIndex, b: InvertedIndex) -> bool:
    if a.doc_count != b.doc_count or a.doc_ids != b.doc_ids:
        return False
    if a.raw_bodies != b.raw_bodies:
        return False
    if not np.array_equal(a.doc_dates, b.doc_dates):
        return False
    for f in FIELDS:
        if not np.array_equal(a.field_lengths[f], b.field_lengths[f]):
            return False
        if abs(a.avg_field_length[f] - b.avg_field_length[f]) > 1e-12:
            return False
        if a.postings[f].keys() != b.postings[f].keys():
            return False
        for term, (ords, tfs) in a.postings[f].items():
            o2, t2 = b.postings[f][term]
            if not (np.array_equal(ords, o2) and np.array_equal(tfs, t2)):
                return False
    return True


# -- persistence ----------------------------------------------------------


def _pack_strings(items: list[str]) -> bytes:
    parts = [struct.pack("<I", len(items))]
    for s in items:
        raw = s.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    return b"".join(parts)


def _pack_postings(table: dict[str, tuple[np.ndarray, np.ndarray]]) -> bytes:
    parts = [struct.pack("<I", len(table))]
    for term in sorted(table):
        ords, tfs = table[term]
        raw = term.encode("utf-8")
        parts.append(struct.pack("<HI", len(raw), len(ords)))
        parts.append(raw)
        parts.append(ords.astype("<u4", copy=False).tobytes())
        parts.append(tfs.astype("<u4", copy=False).tobytes())
    return b"".join(parts)


def save(index: InvertedIndex, path: str | Path) -> None:
    """Write the index to a single checksummed file."""
    sections: list[tuple[str, bytes]] = []
    meta = {
        "doc_count": index.doc_count,
        "fields": list(FIELDS),
        "avg_field_length": index.avg_field_length,
    }
    sections.append(("meta", json.dumps(meta, sort_keys=True).encode("utf-8")))
    sections.append(("docids", _pack_strings(index.doc_ids)))
    sections.append((
        "dates",
        struct.pack("<I", index.doc_count)
        + index.doc_dates.astype("<i8", copy=False).tobytes(),
    ))
    for f in FIELDS:
        arr = index.field_lengths[f]
        sections.append((
            f"lengths:{f}",
            struct.pack("<I", len(arr)) + arr.astype("<u4", copy=False).tobytes(),
        ))
    for f in FIELDS:
        sections.append((f"postings:{f}", _pack_postings(index.postings[f])))
    sections.append(("rawbodies", _pack_strings(index.raw_bodies)))

    blob = [_MAGIC, struct.pack("<H", _VERSION)]
    for name, payload in sections:
        raw = name.encode("ascii")
        blob.append(struct.pack("<B", len(raw)))
        blob.append(raw)
        blob.append(struct.pack("<Q", len(payload)))
        blob.append(payload)
    body = b"".join(blob)
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + digest)


class _Cursor:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise IndexFormatError("index file truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.buf)


def _unpack_strings(payload: bytes) -> list[str]:
    cur = _Cursor(payload)
    (count,) = cur.unpack("<I")
    return [cur.take(cur.unpack("<I")[0]).decode("utf-8") for _ in range(count)]


def _unpack_postings(payload: bytes) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    cur = _Cursor(payload)
    (count,) = cur.unpack("<I")
    table: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for _ in range(count):
        term_len, n = cur.unpack("<HI")
        term = cur.take(term_len).decode("utf-8")
        ords = np.frombuffer(cur.take(4 * n), dtype="<u4").astype(np.uint32)
        tfs = np.frombuffer(cur.take(4 * n), dtype="<u4").astype(np.uint32)
        table[term] = (ords, tfs)
    return table


def load(path: str | Path) -> InvertedIndex:
    """Read an index written by save(); verifies version and checksum."""
    data = Path(path).read_bytes()
    if len(data) < len(_MAGIC) + 2 + 32:
        raise IndexFormatError("index file truncated")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise IndexFormatError("index file checksum mismatch (corrupt or truncated)")
    cur = _Cursor(body)
    if cur.take(len(_MAGIC)) != _MAGIC:
        raise IndexFormatError("not an index file (bad magic)")
    (version,) = cur.unpack("<H")
    if version != _VERSION:
        raise IndexFormatError(f"unsupported index version {version} (expected {_VERSION})")

    sections: dict[str, bytes] = {}
    while not cur.exhausted:
        (name_len,) = cur.unpack("<B")
        name = cur.take(name_len).decode("ascii")
        (payload_len,) = cur.unpack("<Q")
        sections[name] = cur.take(payload_len)

    try:
        meta = json.loads(sections["meta"].decode("utf-8"))
        doc_ids = _unpack_strings(sections["docids"])
        dcur = _Cursor(sections["dates"])
        (n_dates,) = dcur.unpack("<I")
        dates = np.frombuffer(dcur.take(8 * n_dates), dtype="<i8").astype(np.int64)
        field_lengths = {}
        postings = {}
        for f in FIELDS:
            lcur = _Cursor(sections[f"lengths:{f}"])
            (n_len,) = lcur.unpack("<I")
            field_lengths[f] = np.frombuffer(
                lcur.take(4 * n_len), dtype="<u4"
            ).astype(np.uint32)
            postings[f] = _unpack_postings(sections[f"postings:{f}"])
        raw_bodies = _unpack_strings(sections["rawbodies"])
    except KeyError as exc:
        raise IndexFormatError(f"index file missing section {exc}") from exc

    return InvertedIndex(
        postings=postings,
        doc_ids=doc_ids,
        doc_dates=dates,
        field_lengths=field_lengths,
        avg_field_length={f: float(v) for f, v in meta["avg_field_length"].items()},
        doc_count=int(meta["doc_count"]),
        raw_bodies=raw_bodies,
    )
