"""HTTP service: endpoints, error envelopes, persistence and recovery."""

import json

import pytest
from fastapi.testclient import TestClient

from groupset.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(state_dir=tmp_path / "state")
    with TestClient(app) as c:
        yield c


def test_variants_endpoint_lists_deck_sizes(client):
    data = client.get("/variants").json()
    sizes = {v["id"]: v["deck_size"] for v in data["variants"]}
    assert sizes["classic-set"] == 81
    assert sizes["proset"] == 63
    assert sizes["evenquads"] == 64
    assert sizes["c53t"] == 125
    assert sizes["octa"] == 48
    assert sizes["a5set"] == 60


def test_deck_endpoint(client):
    data = client.get("/variants/proset/deck").json()
    assert len(data["cards"]) == 63
    assert data["cards"][0]["features"]["scheme"] == "socks6"
    assert client.get("/variants/nope/deck").status_code == 404


def test_create_session_deals_twelve(client):
    resp = client.post(
        "/sessions",
        json={"variant": "classic-set", "seed": 42, "players": ["ann"]},
    )
    assert resp.status_code == 201
    session = resp.json()["session"]
    assert len(session["table"]) == 12
    assert session["pile_count"] == 69
    assert session["players"] == [{"name": "ann", "score": 0}]
    assert all("card_id" in c and "features" in c for c in session["table"])


def test_create_session_unknown_variant(client):
    resp = client.post("/sessions", json={"variant": "zzz", "players": ["a"]})
    assert resp.status_code == 404
    assert resp.json()["error"]["code"] == "not-found"


def test_claim_flow_with_hint(client):
    created = client.post(
        "/sessions", json={"variant": "classic-set", "seed": 42, "players": ["ann"]}
    ).json()["session"]
    sid = created["session_id"]
    hint = client.get(f"/sessions/{sid}/hint").json()["hint"]
    assert hint is not None
    resp = client.post(
        f"/sessions/{sid}/claims", json={"player": "ann", "cards": hint}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["result"]["accepted"] and body["result"]["score"] == 1
    assert len(body["session"]["table"]) == 12


def test_claim_non_set_409_with_reason(client):
    created = client.post(
        "/sessions", json={"variant": "classic-set", "seed": 1, "players": ["ann"]}
    ).json()["session"]
    sid = created["session_id"]
    table = [c["card_id"] for c in created["table"]]
    hint = client.get(f"/sessions/{sid}/hint").json()["hint"]
    # find a non-set triple
    import itertools

    from groupset import rules, variants

    classic = variants.variant_by_id("classic-set")
    for triple in itertools.combinations(table, 3):
        elems = [variants.element_of_card(classic, c) for c in triple]
        if not rules.is_set(classic.rule, classic.group, elems):
            resp = client.post(
                f"/sessions/{sid}/claims", json={"player": "ann", "cards": list(triple)}
            )
            assert resp.status_code == 409
            err = resp.json()["error"]
            assert err["code"] == "rule-violation"
            assert err["detail"]["reason"] == "not-a-set"
            assert err["detail"]["reorder_hint"] is False
            return
    pytest.fail("no non-set triple found")


def test_claim_structural_errors_are_400(client):
    created = client.post(
        "/sessions", json={"variant": "classic-set", "seed": 1, "players": ["ann"]}
    ).json()["session"]
    sid = created["session_id"]
    resp = client.post(
        f"/sessions/{sid}/claims", json={"player": "bob", "cards": [0, 1, 2]}
    )
    assert resp.status_code == 400
    resp = client.post(
        f"/sessions/{sid}/claims", json={"player": "ann", "cards": [900, 901, 902]}
    )
    assert resp.status_code == 400


def test_deal_endpoint_and_conflicts(client):
    created = client.post(
        "/sessions",
        json={"variant": "classic-set", "seed": 42, "players": ["a"], "mode": "strict"},
    ).json()["session"]
    sid = created["session_id"]
    # seed 42's opening table has a set, so strict dealing must conflict
    resp = client.post(f"/sessions/{sid}/deal")
    assert resp.status_code == 409
    assert resp.json()["error"]["detail"]["reason"] == "set-on-table"

    free = client.post(
        "/sessions", json={"variant": "classic-set", "seed": 42, "players": ["a"]}
    ).json()["session"]
    resp = client.post(f"/sessions/{free['session_id']}/deal")
    assert resp.status_code == 200
    assert len(resp.json()["session"]["table"]) == 15


def test_probability_endpoint(client):
    resp = client.post(
        "/analysis/probability",
        json={"variant": "proset", "table_size": 7, "trials": 500, "seed": 1},
    )
    assert resp.status_code == 200
    assert resp.json()["estimate"] == 1.0


def test_cap_search_endpoint(client):
    resp = client.post(
        "/analysis/cap-search", json={"variant": "evenquads", "size": 9, "budget": 100000}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "witness-found" and body["verified"]


def test_probability_validation_400(client):
    resp = client.post(
        "/analysis/probability",
        json={"variant": "classic-set", "table_size": 500, "trials": 10, "seed": 0},
    )
    assert resp.status_code == 400


def test_unknown_session_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/deal").status_code == 404


def test_persistence_and_recovery(tmp_path):
    state = tmp_path / "state"
    app = create_app(state_dir=state)
    with TestClient(app) as client:
        created = client.post(
            "/sessions", json={"variant": "classic-set", "seed": 9, "players": ["p"]}
        ).json()["session"]
        sid = created["session_id"]
        hint = client.get(f"/sessions/{sid}/hint").json()["hint"]
        client.post(f"/sessions/{sid}/claims", json={"player": "p", "cards": hint})
        before = client.get(f"/sessions/{sid}").json()["session"]

    # simulate a restart: a fresh app over the same state directory
    app2 = create_app(state_dir=state)
    with TestClient(app2) as client2:
        after = client2.get(f"/sessions/{sid}").json()["session"]
        assert after == before
        # play continues seamlessly
        hint2 = client2.get(f"/sessions/{sid}/hint").json()["hint"]
        assert hint2 is not None
        resp = client2.post(
            f"/sessions/{sid}/claims", json={"player": "p", "cards": hint2}
        )
        assert resp.status_code == 200
        assert resp.json()["result"]["score"] == 2


def test_corrupt_log_quarantined(tmp_path, capsys):
    state = tmp_path / "state"
    state.mkdir(parents=True)
    (state / "bad.json").write_text("{not valid json")
    app = create_app(state_dir=state)
    with TestClient(app) as client:
        assert client.get("/variants").status_code == 200
    assert (state / "bad.json.corrupt").exists()
    assert not (state / "bad.json").exists()


def test_persisted_document_shape(tmp_path):
    state = tmp_path / "state"
    app = create_app(state_dir=state)
    with TestClient(app) as client:
        created = client.post(
            "/sessions", json={"variant": "proset", "seed": 3, "players": ["p"]}
        ).json()["session"]
        sid = created["session_id"]
    doc = json.loads((state / f"{sid}.json").read_text())
    assert set(doc) == {
        "session_id", "variant", "seed", "players", "mode",
        "table_size", "add_count", "event_log",
    }
    assert doc["variant"] == "proset"
    assert doc["event_log"][0]["kind"] == "dealt"


def test_facts_endpoint_small(monkeypatch, client):
    from groupset import analysis

    original = analysis.verify_paper_facts

    def quick_verify(**kwargs):
        return original(probability_trials=20_000, quad_table_trials=500)

    monkeypatch.setattr("groupset.service.analysis.verify_paper_facts", quick_verify)
    resp = client.get("/facts")
    assert resp.status_code == 200
    assert resp.json()["all_passed"] is True
