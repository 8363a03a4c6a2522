#!/usr/bin/env python3
"""Regenerate the bundled demo corpus and query files under fixtures/.

Deterministic (fixed seed); rerunning must reproduce the checked-in files
byte for byte. The corpus is sized so the end-to-end tests stay fast:
200 publications, 28 resolvable organisations plus 2 unresolved ids,
heavy-tailed org assignment so the node cap and edge threshold both bite.
"""

from __future__ import annotations

import json
import random
from datetime import date, timedelta
from pathlib import Path

SEED = 20220701
N_PUBS = 200

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ORG_NAMES = [
    "Alpha University", "Beta Institute", "Gamma Labs", "Delta College",
    "Epsilon Centre", "Zeta Academy", "Eta Hospital", "Theta Foundation",
    "Iota University", "Kappa Institute", "Lambda Labs", "Mu College",
    "Nu Centre", "Xi Academy", "Omicron Hospital", "Pi Foundation",
    "Rho University", "Sigma Institute", "Tau Labs", "Upsilon College",
    "Phi Centre", "Chi Academy", "Psi Hospital", "Omega Foundation",
    "North Rivers University", "South Plains Institute", "East Harbour Labs",
    "West Valley College",
]
COUNTRIES = ["US", "GB", "DE", "FR", "NL", "CA", "AU", "JP"]

JOURNALS = ["Nature", "Science", "The Lancet", "PLOS ONE", "BMJ", "Cell", "medRxiv", "bioRxiv"]

CONCEPTS = [
    "covid-19", "sars-cov-2", "pandemic", "vaccination", "public health",
    "epidemiology", "immunology", "lockdown", "social distancing", "mental health",
    "intensive care", "mortality", "transmission", "variants", "antibodies",
    "clinical trial", "telemedicine", "long covid", "masks", "ventilation",
    "genomics", "serology", "contact tracing", "herd immunity", "booster",
    "misinformation", "policy", "economics", "education", "children",
    "healthcare workers", "risk factors", "comorbidity", "diagnostics",
    "wastewater", "modelling",
]

QUERIES = {
    "recent.nql": (
        "# publications added during the last month\n"
        "last_days(date_inserted, 30)\n"
    ),
    "articles-2021.nql": (
        "# journal articles from 2021 onwards\n"
        "year >= 2021 AND doc_type == \"article\"\n"
    ),
    "preprints.nql": (
        "# preprints, wherever they were posted\n"
        "doc_type == \"preprint\" OR journal_title IN (\"medRxiv\", \"bioRxiv\")\n"
    ),
}


def main() -> None:
    rng = random.Random(SEED)

    org_ids = [f"grid.{400000 + 137 * i}.{i % 16:x}{(i * 7) % 16:x}" for i in range(len(ORG_NAMES))]
    organisations = [
        {"id": oid, "name": name, "country_code": rng.choice(COUNTRIES)}
        for oid, name in zip(org_ids, ORG_NAMES)
    ]
    phantom_ids = ["grid.999001.zz", "grid.999002.zz"]

    # heavy-tailed org popularity so a small head dominates collaborations
    org_weights = [1.0 / (rank + 1) for rank in range(len(org_ids))]

    start = date(2022, 1, 1)
    publications = []
    for i in range(1, N_PUBS + 1):
        n_orgs = rng.choices([0, 1, 2, 3, 4, 5, 6], weights=[4, 16, 26, 26, 16, 8, 4])[0]
        orgs = rng.choices(org_ids, weights=org_weights, k=n_orgs)
        if n_orgs and rng.random() < 0.06:
            orgs.append(rng.choice(phantom_ids))
        if n_orgs >= 2 and rng.random() < 0.08:
            orgs.append(orgs[0])  # duplicate listing, as real exports contain

        n_concepts = rng.choices([0, 1, 2, 3, 4, 5, 6, 8], weights=[5, 10, 20, 25, 20, 10, 7, 3])[0]
        concepts = [
            {"concept": c, "relevance": round(rng.random(), 2)}
            for c in rng.sample(CONCEPTS, k=min(n_concepts, len(CONCEPTS)))
        ]

        doc_type = rng.choices(["article", "preprint", "other", None], weights=[60, 25, 10, 5])[0]
        journal = None
        if doc_type == "article":
            journal = rng.choice(JOURNALS[:6])
        elif doc_type == "preprint":
            journal = rng.choice(["medRxiv", "bioRxiv", None])

        record = {
            "id": f"pub.{i:04d}",
            "title": f"Study {i:04d}",
            "year": rng.choices([2019, 2020, 2021, 2022], weights=[5, 25, 35, 35])[0],
            "date_inserted": (start + timedelta(days=rng.randint(0, 180))).isoformat(),
            "journal_title": journal,
            "doc_type": doc_type,
            "research_orgs": orgs,
            "concepts": concepts,
        }
        publications.append({k: v for k, v in record.items() if v is not None})

    corpus_dir = FIXTURES / "corpus"
    queries_dir = FIXTURES / "queries"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    queries_dir.mkdir(parents=True, exist_ok=True)

    with (corpus_dir / "publications.jsonl").open("w", encoding="utf-8") as fh:
        for record in publications:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    with (corpus_dir / "organisations.jsonl").open("w", encoding="utf-8") as fh:
        for record in organisations:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    for name, text in QUERIES.items():
        (queries_dir / name).write_text(text, encoding="utf-8")

    print(f"wrote {len(publications)} publications, {len(organisations)} organisations, "
          f"{len(QUERIES)} queries under {FIXTURES}")


if __name__ == "__main__":
    main()
