"""Render the parameterized BigQuery templates for cloud execution.

The organisation collaboration template is kept byte-exact; rendering only
splices the user's subquery into the ``{user-provided-subquery}`` slot and
rewrites the dataset prefix when overridden. ``@max_nodes`` and
``@min_edge_weight`` stay as named query parameters, with their values
returned alongside the SQL.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

from bibnet.network import CONCEPT, KINDS, ORGANISATION, NetworkParams

DEFAULT_DATASET_PREFIX = "covid-19-dimensions-ai.data"
SUBQUERY_PLACEHOLDER = "{user-provided-subquery}"

_TEMPLATE_FILES = {
    ORGANISATION: "org_collab.sql",
    CONCEPT: "concept_cooc.sql",
}


@dataclass(frozen=True)
class SqlRequest:
    user_subquery: str
    kind: str
    params: NetworkParams = field(default_factory=NetworkParams)
    dataset_prefix: str = DEFAULT_DATASET_PREFIX


@dataclass(frozen=True)
class RenderedSql:
    sql: str
    named_params: dict


def load_template(kind: str) -> str:
    if kind not in _TEMPLATE_FILES:
        raise ValueError(f"unknown template kind {kind!r} (expected one of {KINDS})")
    return (
        resources.files("bibnet.templates").joinpath(_TEMPLATE_FILES[kind]).read_text("utf-8")
    )


def render_sql(req: SqlRequest) -> RenderedSql:
    """Pure, deterministic render; the user subquery is inserted verbatim."""
    if not req.user_subquery.strip():
        raise ValueError("user subquery must be non-empty")
    if not req.dataset_prefix.strip():
        raise ValueError("dataset prefix must be non-empty")
    template = load_template(req.kind)
    # prefix rewrite happens before the splice so user SQL is never touched
    sql = template.replace(DEFAULT_DATASET_PREFIX, req.dataset_prefix)
    sql = sql.replace(SUBQUERY_PLACEHOLDER, req.user_subquery)
    named_params = {
        "max_nodes": req.params.max_nodes,
        "min_edge_weight": req.params.min_edge_weight,
    }
    if req.kind == CONCEPT:
        named_params["concept_min_relevance"] = req.params.concept_min_relevance
    return RenderedSql(sql=sql, named_params=named_params)
