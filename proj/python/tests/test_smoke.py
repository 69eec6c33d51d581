import itertools
import math
from pathlib import Path

import pytest

import econet

DATA = Path(__file__).resolve().parents[2] / "tests" / "data"


def brute_log_z(e, t):
    n, labels = len(e), len(e[0])
    total = []
    for path in itertools.product(range(labels), repeat=n):
        s = sum(e[i][y] for i, y in enumerate(path))
        s += sum(t[a][b] for a, b in zip(path, path[1:]))
        total.append(s)
    m = max(total)
    return m + math.log(sum(math.exp(s - m) for s in total)), max(total)


def test_crf_matches_enumeration():
    e = [[0.3, -1.2, 0.8], [1.1, 0.2, -0.4], [-0.7, 0.9, 0.1]]
    t = [[0.2, -0.3, 0.5], [0.0, 0.4, -0.6], [0.7, -0.2, 0.1]]
    log_z, best = brute_log_z(e, t)
    assert econet.log_partition(e, t) == pytest.approx(log_z, abs=1e-10)
    labels, score = econet.viterbi(e, t)
    assert score == pytest.approx(best, abs=1e-10)
    assert len(labels) == 3
    full = [[0, 1, 2]] * 3
    assert econet.fuzzy_nll(e, t, full) == pytest.approx(0.0, abs=1e-10)


def test_iob_mask_excludes_leading_inside():
    assert econet.iob_labels(["Color"]) == ["O", "B-Color", "I-Color"]
    e = [[0.0, 0.0, 5.0], [0.0, 0.0, 0.0]]
    t = [[0.0] * 3 for _ in range(3)]
    labels, _ = econet.viterbi(e, t, ["Color"])
    assert labels[0] != 2
    with pytest.raises(ValueError):
        econet.log_partition(e, t, ["Color", "Event"])


def test_store_round_trip_and_stats():
    store = econet.ConceptStore.load(str(DATA / "mini_store.jsonl"))
    stats = store.stats()
    assert stats["nodes"]["primitive_concepts"] == 4
    assert stats["edges_per_relation"]["item_ecommerce"] == 1
    assert store.audit() == []
    assert store.lookup_surface("dress") == ["p1"]
    text = store.dumps()
    assert econet.ConceptStore.loads(text).dumps() == text
    assert econet.ConceptStore.loads(text) == store


def test_store_errors_carry_types():
    with pytest.raises(econet.ParseError):
        econet.ConceptStore.loads("not json\n")
    with pytest.raises(econet.StoreError):
        econet.ConceptStore.loads('{"kind":"edge","relation":"isA_concept","src":"a","dst":"b"}\n')


def test_distant_supervision_labels_unambiguous_sentences():
    store = econet.ConceptStore.load(str(DATA / "mini_store.jsonl"))
    out = econet.distant_supervision([["red", "wedding", "dress"], ["blue", "thing"]], store)
    assert out == [(["red", "wedding", "dress"], ["B-Color", "B-Event", "B-Category"])]


def test_active_learning_with_a_python_oracle():
    bench = econet.hypernym_benchmark(dim=8, hypernyms=8, train_hyponyms=40, test_hyponyms=15, noise=0.5, seed=3)
    truth = bench.pool(negatives=3, seed=2)
    pool = sorted(truth)
    asked = []

    def oracle(ids):
        asked.extend(ids)
        return [truth[i] for i in ids]

    r = econet.run_hypernym_loop(bench, pool, oracle, strategy="UCS", k=15, patience=2, max_rounds=4, epochs=4)
    assert len(asked) == len(set(asked))
    assert [h["labeled"] for h in r["history"]] == [15 * (i + 1) for i in range(len(r["history"]))]
    assert r["labels"] == [truth[i] for i in r["labeled_ids"]]
    assert 0.0 <= r["best_metric"] <= 1.0

    with pytest.raises(econet.OracleError):
        econet.run_hypernym_loop(bench, pool, lambda ids: [1], k=15, max_rounds=1, epochs=1)
