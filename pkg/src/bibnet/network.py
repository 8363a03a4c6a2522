"""Co-occurrence network construction.

Semantics match the BigQuery templates rendered by :mod:`bibnet.sqlgen`:
node candidates are ranked by distinct-publication count and capped at
``max_nodes``; every unordered pair of distinct selected entities on a
publication contributes one to that pair's weight (distinct publications,
so duplicate listings within one record are harmless); pairs are stored
canonically with the lexicographically greater key first, mirroring the
SQL dedup guard; edges below ``min_edge_weight`` are dropped. Organisation
ids missing from the organisations table are excluded (inner-join
semantics), and organisation labels are ``"{name} ({id})"``.
"""

from __future__ import annotations

from dataclasses import dataclass

from bibnet.corpus import Corpus
from bibnet.query import SubsetResult

ORGANISATION = "organisation"
CONCEPT = "concept"
KINDS = (ORGANISATION, CONCEPT)

DEFAULT_MAX_NODES = 500
DEFAULT_MIN_EDGE_WEIGHT = 2
DEFAULT_CONCEPT_MIN_RELEVANCE = 0.5


@dataclass(frozen=True, slots=True)
class NetworkParams:
    max_nodes: int = DEFAULT_MAX_NODES
    min_edge_weight: int = DEFAULT_MIN_EDGE_WEIGHT
    concept_min_relevance: float = DEFAULT_CONCEPT_MIN_RELEVANCE

    def __post_init__(self) -> None:
        if self.max_nodes < 1:
            raise ValueError(f"max_nodes must be >= 1, got {self.max_nodes}")
        if self.min_edge_weight < 1:
            raise ValueError(f"min_edge_weight must be >= 1, got {self.min_edge_weight}")
        if not 0.0 <= self.concept_min_relevance <= 1.0:
            raise ValueError(
                f"concept_min_relevance must be in [0, 1], got {self.concept_min_relevance}"
            )

    def to_dict(self) -> dict:
        return {
            "max_nodes": self.max_nodes,
            "min_edge_weight": self.min_edge_weight,
            "concept_min_relevance": self.concept_min_relevance,
        }


@dataclass(frozen=True, slots=True)
class Node:
    key: str
    label: str
    pubs: int


@dataclass(frozen=True, slots=True)
class Edge:
    a: str  # greater key in lexicographic byte order
    b: str
    weight: int


@dataclass(frozen=True)
class Network:
    kind: str
    name: str
    params: NetworkParams
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    subset_size: int


def _check_kind(kind: str) -> None:
    if kind not in KINDS:
        raise ValueError(f"unknown network kind {kind!r} (expected one of {KINDS})")


def _pub_entities(corpus: Corpus, pub, kind: str, params: NetworkParams) -> set[str]:
    """Deduplicated entity keys of one publication that may enter the network."""
    if kind == ORGANISATION:
        orgs = corpus.organisations
        return {oid for oid in pub.research_orgs if oid in orgs}
    gate = params.concept_min_relevance
    return {m.concept for m in pub.concepts if m.relevance >= gate}


def _node_label(corpus: Corpus, kind: str, key: str) -> str:
    if kind == ORGANISATION:
        org = corpus.organisations[key]
        return f"{org.name} ({key})"
    return key


def top_nodes(
    corpus: Corpus, subset: SubsetResult, kind: str, params: NetworkParams
) -> list[Node]:
    """Entities ranked by subset publication count (desc), key (asc), capped.

    Each publication counts once per entity regardless of duplicate
    listings; for concepts only mentions at or above the relevance gate
    participate.
    """
    _check_kind(kind)
    counts: dict[str, int] = {}
    subset_ids = subset.ids
    for pid, pub in corpus.publications.items():
        if pid not in subset_ids:
            continue
        for key in _pub_entities(corpus, pub, kind, params):
            counts[key] = counts.get(key, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: params.max_nodes]
    return [Node(key=key, label=_node_label(corpus, kind, key), pubs=n) for key, n in ranked]


def _build(corpus: Corpus, subset: SubsetResult, kind: str, params: NetworkParams) -> Network:
    nodes = top_nodes(corpus, subset, kind, params)
    selected = {node.key for node in nodes}
    subset_ids = subset.ids

    pair_counts: dict[tuple[str, str], int] = {}
    subset_size = 0
    for pid, pub in corpus.publications.items():
        if pid not in subset_ids:
            continue
        subset_size += 1
        members = _pub_entities(corpus, pub, kind, params) & selected
        if len(members) < 2:
            continue
        ordered = sorted(members, reverse=True)  # yields (greater, lesser) pairs
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                key = (a, b)
                pair_counts[key] = pair_counts.get(key, 0) + 1

    threshold = params.min_edge_weight
    edges = tuple(
        Edge(a=a, b=b, weight=w)
        for (a, b), w in sorted(pair_counts.items())
        if w >= threshold
    )
    return Network(
        kind=kind,
        name=subset.query_name,
        params=params,
        nodes=tuple(nodes),
        edges=edges,
        subset_size=subset_size,
    )


def build_org_network(corpus: Corpus, subset: SubsetResult, params: NetworkParams) -> Network:
    """Collaboration network over author affiliations: edge weight counts the
    publications two organisations share within the subset."""
    return _build(corpus, subset, ORGANISATION, params)


def build_concept_network(corpus: Corpus, subset: SubsetResult, params: NetworkParams) -> Network:
    """Co-word network: edge weight counts the subset publications in which
    both concepts pass the relevance gate."""
    return _build(corpus, subset, CONCEPT, params)


def build_network(
    corpus: Corpus, subset: SubsetResult, kind: str, params: NetworkParams
) -> Network:
    _check_kind(kind)
    return _build(corpus, subset, kind, params)


def normalize_kind(value: str) -> str:
    """Map CLI/user spellings (org, orgs, concepts, ...) to a canonical kind."""
    lowered = value.strip().lower()
    if lowered in ("org", "orgs", "organisation", "organization", "organisations"):
        return ORGANISATION
    if lowered in ("concept", "concepts"):
        return CONCEPT
    raise ValueError(f"unknown network kind {value!r} (expected 'org' or 'concept')")


def kind_slug(kind: str) -> str:
    _check_kind(kind)
    return "org" if kind == ORGANISATION else "concept"
