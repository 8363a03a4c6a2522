"""Load publication and organisation records from exported files.

Field names follow the BigQuery export schema (`id`, `title`, `year`,
`date_inserted`, `journal_title`, `doc_type`, `research_orgs`, `concepts`
with `{concept, relevance}` pairs for publications; `id`, `name`,
`country_code` for organisations), so table exports load unmodified.

Two file formats are supported:

* JSONL: one record per line, UTF-8. Records carrying a ``name`` field are
  organisations; everything else is a publication.
* CSV: header row required. A header containing ``name`` marks an
  organisation file. List-valued cells are ``;``-delimited; concept cells
  encode each mention as ``text:relevance``.

Malformed records are skipped and counted; structural corruption (a
duplicate id) aborts the ingest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

DOC_TYPES = ("article", "preprint", "other")

# Reasons kept verbatim in the ingest report are capped so a fully broken
# file cannot balloon the report.
MAX_REPORTED_REASONS = 20


class CorpusError(Exception):
    """Base class for corpus ingest/validation failures."""


class DuplicateIdError(CorpusError):
    def __init__(self, kind: str, entity_id: str) -> None:
        self.kind = kind
        self.entity_id = entity_id
        super().__init__(f"duplicate {kind} id: {entity_id!r}")


class EmptyCorpusError(CorpusError):
    def __init__(self) -> None:
        super().__init__("empty corpus: no valid publication records ingested")


class _RecordError(ValueError):
    """Internal: a single record violates an invariant (skip and count)."""


@dataclass(frozen=True, slots=True)
class ConceptMention:
    concept: str
    relevance: float


@dataclass(frozen=True, slots=True)
class Publication:
    id: str
    title: str | None = None
    year: int | None = None
    date_inserted: date | None = None
    journal_title: str | None = None
    doc_type: str | None = None
    research_orgs: tuple[str, ...] = ()
    concepts: tuple[ConceptMention, ...] = ()


@dataclass(frozen=True, slots=True)
class Organisation:
    id: str
    name: str
    country_code: str | None = None


@dataclass(frozen=True, slots=True)
class Provenance:
    sources: tuple[str, ...]
    ingested_at: datetime


@dataclass(frozen=True)
class Corpus:
    """Immutable snapshot of ingested records, safe to share across threads.

    Every org id referenced by a publication either resolves in
    ``organisations`` or appears in ``unresolved_orgs``; nothing is dropped
    silently.
    """

    publications: dict[str, Publication]
    organisations: dict[str, Organisation]
    unresolved_orgs: frozenset[str]
    provenance: Provenance

    def to_canonical_dict(self) -> dict:
        """Content-only view with deterministic ordering (no timestamps)."""
        pubs = {}
        for pid in sorted(self.publications):
            p = self.publications[pid]
            pubs[pid] = {
                "id": p.id,
                "title": p.title,
                "year": p.year,
                "date_inserted": p.date_inserted.isoformat() if p.date_inserted else None,
                "journal_title": p.journal_title,
                "doc_type": p.doc_type,
                "research_orgs": list(p.research_orgs),
                "concepts": [
                    {"concept": c.concept, "relevance": c.relevance} for c in p.concepts
                ],
            }
        orgs = {}
        for oid in sorted(self.organisations):
            o = self.organisations[oid]
            orgs[oid] = {"id": o.id, "name": o.name, "country_code": o.country_code}
        return {
            "publications": pubs,
            "organisations": orgs,
            "unresolved_orgs": sorted(self.unresolved_orgs),
            "sources": list(self.provenance.sources),
        }

    def to_canonical_json(self) -> str:
        return json.dumps(self.to_canonical_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


@dataclass
class IngestReport:
    files: list[str] = field(default_factory=list)
    rows_total: int = 0
    publications: int = 0
    organisations: int = 0
    skipped: int = 0
    skip_reasons: list[str] = field(default_factory=list)
    unresolved_org_count: int = 0

    def record_skip(self, source: str, line_no: int, reason: str) -> None:
        self.skipped += 1
        if len(self.skip_reasons) < MAX_REPORTED_REASONS:
            self.skip_reasons.append(f"{source}:{line_no}: {reason}")

    def to_dict(self) -> dict:
        return {
            "files": self.files,
            "rows_total": self.rows_total,
            "publications": self.publications,
            "organisations": self.organisations,
            "skipped": self.skipped,
            "skip_reasons": self.skip_reasons,
            "unresolved_org_count": self.unresolved_org_count,
        }

    def summary(self) -> str:
        lines = [
            f"ingested {self.publications} publications and "
            f"{self.organisations} organisations from {len(self.files)} file(s) "
            f"({self.rows_total} rows, {self.skipped} skipped, "
            f"{self.unresolved_org_count} unresolved org ids)"
        ]
        for reason in self.skip_reasons:
            lines.append(f"  skipped {reason}")
        if self.skipped > len(self.skip_reasons):
            lines.append(f"  ... and {self.skipped - len(self.skip_reasons)} more")
        return "\n".join(lines)


@dataclass(frozen=True, slots=True)
class StatsReport:
    publications: int
    organisations: int
    concepts: int

    def to_dict(self) -> dict:
        return {
            "publications": self.publications,
            "organisations": self.organisations,
            "concepts": self.concepts,
        }


def _require_str(record: dict, key: str, required: bool = False) -> str | None:
    value = record.get(key)
    if value is None or value == "":
        if required:
            raise _RecordError(f"missing required field {key!r}")
        return None
    if not isinstance(value, str):
        raise _RecordError(f"field {key!r} must be a string, got {type(value).__name__}")
    return value


def _coerce_year(value) -> int | None:
    if value is None or value == "":
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise _RecordError(f"field 'year' must be an integer, got {value!r}")
    return value


def _coerce_date(value) -> date | None:
    """Accept a calendar date or a timestamp; keep the date part only."""
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise _RecordError(f"field 'date_inserted' must be a string, got {value!r}")
    head = value.replace("T", " ").split(" ", 1)[0]
    try:
        return date.fromisoformat(head)
    except ValueError:
        raise _RecordError(f"field 'date_inserted' is not a date: {value!r}") from None


def _coerce_doc_type(value) -> str | None:
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise _RecordError(f"field 'doc_type' must be a string, got {value!r}")
    value = value.strip().lower()
    # exports carry more kinds (chapters, monographs, ...) than the three
    # this engine distinguishes; everything unknown folds into "other"
    return value if value in ("article", "preprint") else "other"


def _coerce_org_list(value) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise _RecordError(f"field 'research_orgs' must be a list, got {type(value).__name__}")
    orgs = []
    for item in value:
        if not isinstance(item, str):
            raise _RecordError(f"research_orgs entries must be strings, got {item!r}")
        item = item.strip()
        if item:
            orgs.append(item)
    return tuple(orgs)


def _coerce_relevance(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _RecordError(f"concept relevance must be a number, got {value!r}")
    rel = float(value)
    if not 0.0 <= rel <= 1.0:
        raise _RecordError(f"concept relevance {rel} outside [0, 1]")
    return rel


def _coerce_concepts(value) -> tuple[ConceptMention, ...]:
    if value is None:
        return ()
    if not isinstance(value, list):
        raise _RecordError(f"field 'concepts' must be a list, got {type(value).__name__}")
    mentions = []
    for item in value:
        if not isinstance(item, dict):
            raise _RecordError(f"concepts entries must be objects, got {item!r}")
        text = item.get("concept")
        if not isinstance(text, str):
            raise _RecordError(f"concept text must be a string, got {text!r}")
        text = text.strip().lower()
        if not text:
            raise _RecordError("concept text is empty after trimming")
        mentions.append(ConceptMention(text, _coerce_relevance(item.get("relevance"))))
    return tuple(mentions)


def parse_publication(record: dict) -> Publication:
    """Validate one publication record; raises on invariant violations."""
    pid = _require_str(record, "id", required=True)
    return Publication(
        id=pid,
        title=_require_str(record, "title"),
        year=_coerce_year(record.get("year")),
        date_inserted=_coerce_date(record.get("date_inserted")),
        journal_title=_require_str(record, "journal_title"),
        doc_type=_coerce_doc_type(record.get("doc_type")),
        research_orgs=_coerce_org_list(record.get("research_orgs")),
        concepts=_coerce_concepts(record.get("concepts")),
    )


def parse_organisation(record: dict) -> Organisation:
    oid = _require_str(record, "id", required=True)
    name = _require_str(record, "name", required=True)
    country = _require_str(record, "country_code")
    if country is not None and len(country) != 2:
        raise _RecordError(f"country_code must be 2 letters, got {country!r}")
    return Organisation(id=oid, name=name, country_code=country)


def _iter_jsonl(path: Path) -> Iterator[tuple[int, dict | _RecordError]]:
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                yield line_no, _RecordError(f"invalid JSON: {exc.msg}")
                continue
            if not isinstance(record, dict):
                yield line_no, _RecordError("record is not an object")
                continue
            yield line_no, record


def _split_list_cell(cell: str) -> list[str]:
    return [part for part in (p.strip() for p in cell.split(";")) if part]


def _csv_to_record(row: dict, is_org_file: bool) -> dict:
    record: dict = {k: v for k, v in row.items() if k is not None and v not in (None, "")}
    if is_org_file:
        return record
    if "year" in record:
        try:
            record["year"] = int(record["year"])
        except ValueError:
            raise _RecordError(f"field 'year' must be an integer, got {record['year']!r}")
    if "research_orgs" in record:
        record["research_orgs"] = _split_list_cell(record["research_orgs"])
    if "concepts" in record:
        mentions = []
        for part in _split_list_cell(record["concepts"]):
            text, sep, rel = part.rpartition(":")
            if not sep:
                raise _RecordError(f"concept cell entry {part!r} lacks a ':relevance' suffix")
            try:
                mentions.append({"concept": text, "relevance": float(rel)})
            except ValueError:
                raise _RecordError(f"concept relevance {rel!r} is not a number")
        record["concepts"] = mentions
    return record


def _iter_csv(path: Path) -> Iterator[tuple[int, dict | _RecordError, bool]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        is_org_file = "name" in fields
        for line_no, row in enumerate(reader, start=2):
            try:
                yield line_no, _csv_to_record(row, is_org_file), is_org_file
            except _RecordError as exc:
                yield line_no, exc, is_org_file


def _detect_format(path: Path, declared: str | None) -> str:
    if declared is not None:
        if declared not in ("jsonl", "csv"):
            raise ValueError(f"unsupported format {declared!r} (expected 'jsonl' or 'csv')")
        return declared
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise ValueError(f"cannot infer format of {path}: pass format='jsonl' or 'csv'")


def expand_corpus_paths(paths: Iterable[str | Path]) -> list[Path]:
    """Resolve files and directories (scanned for *.jsonl / *.csv) to files."""
    out: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            found = sorted(
                q for q in p.iterdir() if q.suffix.lower() in (".jsonl", ".ndjson", ".json", ".csv")
            )
            if not found:
                raise FileNotFoundError(f"no .jsonl or .csv files in directory {p}")
            out.extend(found)
        else:
            if not p.exists():
                raise FileNotFoundError(f"corpus file not found: {p}")
            out.append(p)
    return out


def ingest(paths: Iterable[str | Path], format: str | None = None) -> tuple[Corpus, IngestReport]:
    """Ingest exported files into a validated Corpus.

    Malformed records are skipped and counted in the report. Duplicate
    publication ids abort with :class:`DuplicateIdError`; organisations may
    be re-listed only with identical payloads. Zero valid publications
    aborts with :class:`EmptyCorpusError`.
    """
    files = expand_corpus_paths(paths)
    if not files:
        raise EmptyCorpusError()

    report = IngestReport(files=[str(p) for p in files])
    publications: dict[str, Publication] = {}
    organisations: dict[str, Organisation] = {}

    def add_record(record: dict, source: str, line_no: int, is_org: bool) -> None:
        if is_org:
            org = parse_organisation(record)
            existing = organisations.get(org.id)
            if existing is not None:
                # identical re-listing across export files is harmless;
                # conflicting payloads are structural corruption
                if existing != org:
                    raise DuplicateIdError("organisation", org.id)
                return
            organisations[org.id] = org
            report.organisations += 1
        else:
            pub = parse_publication(record)
            if pub.id in publications:
                raise DuplicateIdError("publication", pub.id)
            publications[pub.id] = pub
            report.publications += 1

    for path in files:
        fmt = _detect_format(path, format)
        source = str(path)
        if fmt == "jsonl":
            for line_no, item in _iter_jsonl(path):
                report.rows_total += 1
                if isinstance(item, _RecordError):
                    report.record_skip(source, line_no, str(item))
                    continue
                is_org = "name" in item
                try:
                    add_record(item, source, line_no, is_org)
                except _RecordError as exc:
                    report.record_skip(source, line_no, str(exc))
        else:
            for line_no, item, is_org in _iter_csv(path):
                report.rows_total += 1
                if isinstance(item, _RecordError):
                    report.record_skip(source, line_no, str(item))
                    continue
                try:
                    add_record(item, source, line_no, is_org)
                except _RecordError as exc:
                    report.record_skip(source, line_no, str(exc))

    if not publications:
        raise EmptyCorpusError()

    referenced = {org_id for pub in publications.values() for org_id in pub.research_orgs}
    unresolved = frozenset(referenced - organisations.keys())
    report.unresolved_org_count = len(unresolved)

    corpus = Corpus(
        publications=publications,
        organisations=organisations,
        unresolved_orgs=unresolved,
        provenance=Provenance(
            sources=tuple(str(p) for p in files),
            ingested_at=datetime.now(timezone.utc),
        ),
    )
    return corpus, report


def build_corpus(
    publications: Iterable[Publication],
    organisations: Iterable[Organisation],
    sources: tuple[str, ...] = ("<memory>",),
) -> Corpus:
    """Assemble a Corpus from already-constructed records (tests, synthesis)."""
    pubs: dict[str, Publication] = {}
    orgs: dict[str, Organisation] = {}
    for pub in publications:
        if not pub.id:
            raise CorpusError("publication id must be non-empty")
        if pub.id in pubs:
            raise DuplicateIdError("publication", pub.id)
        pubs[pub.id] = pub
    for org in organisations:
        if org.id in orgs and orgs[org.id] != org:
            raise DuplicateIdError("organisation", org.id)
        orgs[org.id] = org
    if not pubs:
        raise EmptyCorpusError()
    referenced = {oid for pub in pubs.values() for oid in pub.research_orgs}
    return Corpus(
        publications=pubs,
        organisations=orgs,
        unresolved_orgs=frozenset(referenced - orgs.keys()),
        provenance=Provenance(sources=sources, ingested_at=datetime.now(timezone.utc)),
    )


def merge_corpora(a: Corpus, b: Corpus) -> Corpus:
    """Merge two corpora with disjoint publication id sets."""
    overlap = a.publications.keys() & b.publications.keys()
    if overlap:
        raise DuplicateIdError("publication", sorted(overlap)[0])
    orgs = dict(a.organisations)
    for oid, org in b.organisations.items():
        if oid in orgs and orgs[oid] != org:
            raise DuplicateIdError("organisation", oid)
        orgs[oid] = org
    pubs = {**a.publications, **b.publications}
    referenced = {oid for pub in pubs.values() for oid in pub.research_orgs}
    return Corpus(
        publications=pubs,
        organisations=orgs,
        unresolved_orgs=frozenset(referenced - orgs.keys()),
        provenance=Provenance(
            sources=a.provenance.sources + b.provenance.sources,
            ingested_at=max(a.provenance.ingested_at, b.provenance.ingested_at),
        ),
    )


def corpus_stats(corpus: Corpus) -> StatsReport:
    concepts = {m.concept for pub in corpus.publications.values() for m in pub.concepts}
    return StatsReport(
        publications=len(corpus.publications),
        organisations=len(corpus.organisations),
        concepts=len(concepts),
    )
