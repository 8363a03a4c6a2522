from __future__ import annotations

import json
import random

import pytest

from bibnet.corpus import Organisation, Publication, build_corpus
from bibnet.network import CONCEPT, Network, NetworkParams, build_org_network
from bibnet.vos import (
    BundleLockError,
    LOCK_FILE,
    document_from_dict,
    document_to_dict,
    dumps_document,
    slugify,
    to_vos_json,
    validate_bundle,
    validate_document_dict,
    write_bundle,
)

from gen import make_subset, random_corpus, random_params, random_subset

STAMP = "2022-07-01T00:00:00+00:00"


def abc_network(abc_corpus, **params_kwargs) -> Network:
    params = NetworkParams(**{"max_nodes": 10, "min_edge_weight": 1, **params_kwargs})
    return build_org_network(abc_corpus, make_subset(abc_corpus.publications, "demo"), params)


def test_three_org_network_maps_to_items_and_links(abc_corpus):
    doc = to_vos_json(abc_network(abc_corpus), generated_at=STAMP)
    assert [it.id for it in doc.items] == [1, 2, 3]
    assert [it.label for it in doc.items] == ["Org A (A)", "Org B (B)", "Org C (C)"]
    assert [it.documents for it in doc.items] == [3, 2, 1]
    assert len(doc.links) == 3
    assert sorted(ln.strength for ln in doc.links) == [1, 1, 2]
    for ln in doc.links:
        assert 1 <= ln.source_id < ln.target_id <= 3


def test_empty_network_is_schema_valid():
    network = Network(
        kind=CONCEPT, name="empty", params=NetworkParams(), nodes=(), edges=(), subset_size=0
    )
    doc = to_vos_json(network, generated_at=STAMP)
    data = document_to_dict(doc)
    assert data["network"] == {"items": [], "links": []}
    assert validate_document_dict(data) == []


def test_label_carries_parenthesized_id_verbatim():
    orgs = [Organisation(id="grid.38142.3c", name="Harvard University")]
    pubs = [Publication(id="p1", research_orgs=("grid.38142.3c",))]
    corpus = build_corpus(pubs, orgs)
    network = build_org_network(
        corpus, make_subset(corpus.publications), NetworkParams(min_edge_weight=1)
    )
    doc = to_vos_json(network, generated_at=STAMP)
    assert doc.items[0].label == "Harvard University (grid.38142.3c)"


def test_round_trip_through_emitted_json(abc_corpus):
    doc = to_vos_json(abc_network(abc_corpus), generated_at=STAMP)
    parsed = document_from_dict(json.loads(dumps_document(doc)))
    assert parsed == doc


def test_round_trip_on_random_networks():
    rng = random.Random(5)
    for _ in range(25):
        corpus = random_corpus(rng, max_pubs=20)
        network = build_org_network(corpus, random_subset(rng, corpus), random_params(rng))
        doc = to_vos_json(network, generated_at=STAMP)
        assert document_from_dict(json.loads(dumps_document(doc))) == doc
        assert validate_document_dict(json.loads(dumps_document(doc))) == []


def test_validator_flags_broken_documents(abc_corpus):
    data = document_to_dict(to_vos_json(abc_network(abc_corpus), generated_at=STAMP))
    data["network"]["links"][0]["target_id"] = 99
    problems = validate_document_dict(data)
    assert any("missing item id" in p for p in problems)

    data = document_to_dict(to_vos_json(abc_network(abc_corpus), generated_at=STAMP))
    data["network"]["items"][0]["id"] = 7
    assert any("consecutive" in p for p in validate_document_dict(data))

    data = document_to_dict(to_vos_json(abc_network(abc_corpus), generated_at=STAMP))
    del data["bibnet_meta"]["params"]
    assert any(p.startswith("schema:") for p in validate_document_dict(data))


def test_slug_rule():
    assert slugify("30-day window!") == "30-day-window"
    assert slugify("Recent   COVID??Work") == "recent-covid-work"
    assert slugify("***") == "network"


def test_bundle_layout_and_manifest(abc_corpus, tmp_path):
    docs = [
        to_vos_json(abc_network(abc_corpus), generated_at=STAMP),
        to_vos_json(
            Network(
                kind=CONCEPT,
                name="all",
                params=NetworkParams(),
                nodes=(),
                edges=(),
                subset_size=0,
            ),
            generated_at=STAMP,
        ),
    ]
    manifest = write_bundle(docs, tmp_path, generated_at=STAMP)
    assert (tmp_path / "networks" / "demo__org.json").is_file()
    assert (tmp_path / "networks" / "all__concept.json").is_file()
    assert (tmp_path / "index.html").is_file()
    assert (tmp_path / "manifest.json").is_file()
    assert not (tmp_path / LOCK_FILE).exists()
    assert [e["file"] for e in manifest.networks] == [
        "networks/demo__org.json",
        "networks/all__concept.json",
    ]
    assert validate_bundle(tmp_path) == []
    index = (tmp_path / "index.html").read_text("utf-8")
    assert 'data-json="networks/demo__org.json"' in index


def test_bundle_slug_collisions_get_counters(abc_corpus, tmp_path):
    net = abc_network(abc_corpus)
    docs = []
    for name in ("My Query", "my query", "my_query"):
        renamed = Network(
            kind=net.kind,
            name=name,
            params=net.params,
            nodes=net.nodes,
            edges=net.edges,
            subset_size=net.subset_size,
        )
        docs.append(to_vos_json(renamed, generated_at=STAMP))
    manifest = write_bundle(docs, tmp_path, generated_at=STAMP)
    files = [e["file"] for e in manifest.networks]
    assert files == [
        "networks/my-query__org.json",
        "networks/my-query-2__org.json",
        "networks/my-query-3__org.json",
    ]
    assert len(manifest.collisions) == 2
    assert validate_bundle(tmp_path) == []


def test_rerun_is_byte_identical_modulo_timestamp(abc_corpus, tmp_path):
    def run(stamp, out):
        docs = [to_vos_json(abc_network(abc_corpus), generated_at=stamp)]
        write_bundle(docs, out, generated_at=stamp)

    run("2022-07-01T00:00:00+00:00", tmp_path / "one")
    run("2023-01-05T10:20:30+00:00", tmp_path / "two")

    for rel in ("networks/demo__org.json", "manifest.json"):
        first = json.loads((tmp_path / "one" / rel).read_text("utf-8"))
        second = json.loads((tmp_path / "two" / rel).read_text("utf-8"))
        strip_timestamps(first)
        strip_timestamps(second)
        assert first == second
    first_index = (tmp_path / "one" / "index.html").read_bytes()
    second_index = (tmp_path / "two" / "index.html").read_bytes()
    assert first_index == second_index


def strip_timestamps(data: dict) -> None:
    data.pop("generated_at", None)
    if "bibnet_meta" in data:
        data["bibnet_meta"].pop("generated_at", None)


def test_overwrite_is_atomic_replacement(abc_corpus, tmp_path):
    docs = [to_vos_json(abc_network(abc_corpus), generated_at=STAMP)]
    write_bundle(docs, tmp_path, generated_at=STAMP)
    first = (tmp_path / "networks" / "demo__org.json").read_text("utf-8")
    write_bundle(docs, tmp_path, generated_at=STAMP)
    assert (tmp_path / "networks" / "demo__org.json").read_text("utf-8") == first
    leftovers = [p for p in (tmp_path / "networks").iterdir() if p.suffix == ".tmp"]
    assert leftovers == []


def test_concurrent_writer_lock(abc_corpus, tmp_path):
    (tmp_path / LOCK_FILE).write_text("12345", encoding="utf-8")
    docs = [to_vos_json(abc_network(abc_corpus), generated_at=STAMP)]
    with pytest.raises(BundleLockError):
        write_bundle(docs, tmp_path, generated_at=STAMP)


def test_validate_bundle_reports_unlisted_and_missing(abc_corpus, tmp_path):
    docs = [to_vos_json(abc_network(abc_corpus), generated_at=STAMP)]
    write_bundle(docs, tmp_path, generated_at=STAMP)
    (tmp_path / "networks" / "stray__org.json").write_text("{}", encoding="utf-8")
    (tmp_path / "networks" / "demo__org.json").unlink()
    problems = validate_bundle(tmp_path)
    assert any("missing on disk" in p for p in problems)
    assert any("not listed in manifest" in p for p in problems)


def test_validate_bundle_without_manifest(tmp_path):
    assert validate_bundle(tmp_path) == [f"missing manifest.json in {tmp_path}"]
