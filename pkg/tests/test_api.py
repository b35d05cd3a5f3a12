import json
import threading

import pytest
from fastapi.testclient import TestClient

from sola.api import ApiConfig, create_app
from sola.canonical import canonical_json
from sola.store import CommunityStore


@pytest.fixture()
def store():
    return CommunityStore()


@pytest.fixture()
def client(store):
    return TestClient(create_app(store))


def claim(client, name="someone"):
    response = client.post("/claim", json={"display_name": name})
    assert response.status_code == 201
    body = response.json()
    return body["person_id"], {"Authorization": f"Bearer {body['session_token']}"}


def make_community(client, headers, name="camp", **extra):
    response = client.post(
        "/communities", json={"name": name, "timezone": "UTC", **extra}, headers=headers
    )
    assert response.status_code == 201
    return response.json()


def make_venue(client, headers, community_id, name="hall", **extra):
    response = client.post(
        f"/communities/{community_id}/venues",
        json={"name": name, "shareable": False, **extra},
        headers=headers,
    )
    assert response.status_code == 201
    return response.json()


def event_payload(community_id, venue_id, start="2024-06-01T10:00:00Z",
                  end="2024-06-01T11:00:00Z", **extra):
    return {
        "community_id": community_id,
        "title": "tea ceremony",
        "start": start,
        "end": end,
        "venue_ref": venue_id,
        **extra,
    }


class TestIdentity:
    def test_claim_and_use(self, client):
        person_id, headers = claim(client)
        community = make_community(client, headers)
        assert community["name"] == "camp"

    def test_claim_requires_name(self, client):
        assert client.post("/claim", json={}).status_code == 422

    def test_missing_token_is_401(self, client):
        assert client.post("/communities", json={"name": "x"}).status_code == 401

    def test_garbage_token_is_401(self, client):
        response = client.post(
            "/communities", json={"name": "x"},
            headers={"Authorization": "Bearer nonsense"},
        )
        assert response.status_code == 401


class TestCanonicalResponses:
    def test_bodies_are_canonical_json(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        for path in (
            f"/schedule?community={community['id']}",
            f"/map?community={community['id']}",
            f"/feed?community={community['id']}",
        ):
            response = client.get(path, headers=headers)
            assert response.status_code == 200
            assert response.content == canonical_json(json.loads(response.content))


class TestEvents:
    def setup_path(self, client):
        self.person, self.headers = claim(client)
        self.community = make_community(client, self.headers)
        self.venue = make_venue(client, self.headers, self.community["id"])

    def test_create_and_conflict(self, client, store):
        self.setup_path(client)
        first = client.post(
            "/events", json=event_payload(self.community["id"], self.venue["id"]),
            headers=self.headers,
        )
        assert first.status_code == 201
        assert first.json()["advisory_conflicts"] == []

        before = store.to_snapshot()
        clash = client.post(
            "/events",
            json=event_payload(
                self.community["id"], self.venue["id"],
                start="2024-06-01T10:30:00Z", end="2024-06-01T11:30:00Z",
            ),
            headers=self.headers,
        )
        assert clash.status_code == 409
        conflicts = clash.json()["conflicts"]
        assert conflicts[0]["kind"] == "venue_overlap"
        # a refused write leaves the store byte-identical
        assert canonical_json(store.to_snapshot()) == canonical_json(before)

    def test_validation_failure_is_422_with_violations(self, client, store):
        self.setup_path(client)
        before = store.to_snapshot()
        response = client.post(
            "/events",
            json=event_payload(self.community["id"], self.venue["id"], title=""),
            headers=self.headers,
        )
        assert response.status_code == 422
        assert any("what" in v for v in response.json()["violations"])
        assert canonical_json(store.to_snapshot()) == canonical_json(before)

    def test_reschedule_and_stale_revision(self, client, store):
        self.setup_path(client)
        created = client.post(
            "/events", json=event_payload(self.community["id"], self.venue["id"]),
            headers=self.headers,
        ).json()["event"]

        moved = client.patch(
            f"/events/{created['id']}",
            json={
                "start": "2024-06-01T14:00:00Z", "end": "2024-06-01T15:00:00Z",
                "expected_revision": created["revision"],
            },
            headers=self.headers,
        )
        assert moved.status_code == 200
        assert moved.json()["event"]["state"] == "rescheduled"
        assert moved.json()["event"]["revision"] == created["revision"] + 1

        stale = client.patch(
            f"/events/{created['id']}",
            json={
                "start": "2024-06-01T16:00:00Z", "end": "2024-06-01T17:00:00Z",
                "expected_revision": created["revision"],
            },
            headers=self.headers,
        )
        assert stale.status_code == 409

    def test_reschedule_onto_conflict_is_409(self, client):
        self.setup_path(client)
        client.post(
            "/events", json=event_payload(self.community["id"], self.venue["id"]),
            headers=self.headers,
        )
        other = client.post(
            "/events",
            json=event_payload(
                self.community["id"], self.venue["id"],
                start="2024-06-01T12:00:00Z", end="2024-06-01T13:00:00Z",
            ),
            headers=self.headers,
        ).json()["event"]
        blocked = client.patch(
            f"/events/{other['id']}",
            json={"start": "2024-06-01T10:30:00Z", "end": "2024-06-01T11:30:00Z"},
            headers=self.headers,
        )
        assert blocked.status_code == 409
        assert blocked.json()["conflicts"][0]["kind"] == "venue_overlap"

    def test_cancel(self, client):
        self.setup_path(client)
        created = client.post(
            "/events", json=event_payload(self.community["id"], self.venue["id"]),
            headers=self.headers,
        ).json()["event"]
        cancelled = client.post(f"/events/{created['id']}/cancel", headers=self.headers)
        assert cancelled.status_code == 200
        assert cancelled.json()["state"] == "cancelled"

    def test_outsider_cannot_create(self, client):
        self.setup_path(client)
        _, outsider_headers = claim(client, "outsider")
        response = client.post(
            "/events", json=event_payload(self.community["id"], self.venue["id"]),
            headers=outsider_headers,
        )
        assert response.status_code == 403

    def test_unknown_event_404(self, client):
        self.setup_path(client)
        assert client.post("/events/event-missing/cancel", headers=self.headers).status_code == 404

    def test_concurrent_creates_commit_exactly_once(self, client, store):
        self.setup_path(client)
        outcomes = []
        barrier = threading.Barrier(8)

        def create(i):
            barrier.wait()
            response = client.post(
                "/events", json=event_payload(self.community["id"], self.venue["id"]),
                headers=self.headers,
            )
            outcomes.append(response.status_code)

        threads = [threading.Thread(target=create, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert outcomes.count(201) == 1
        assert outcomes.count(409) == 7


class TestParticipationFlow:
    def test_rsvp_checkin_round_trip(self, client):
        person, headers = claim(client, "host")
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        event = client.post(
            "/events",
            json=event_payload(
                community["id"], venue["id"],
                start="2030-06-01T10:00:00Z", end="2030-06-01T11:00:00Z",
                rsvp_mode="rsvp_tracked", checkin_enabled=True,
            ),
            headers=headers,
        ).json()["event"]

        _, guest_headers = claim(client, "guest")
        client.post(f"/communities/{community['id']}/join", json={}, headers=guest_headers)
        rsvp = client.post(
            f"/events/{event['id']}/rsvp", json={"target": "going"}, headers=guest_headers
        )
        assert rsvp.status_code == 200

        token = client.post(
            f"/events/{event['id']}/checkin-token", headers=guest_headers
        ).json()["token"]
        scan = client.post(
            f"/events/{event['id']}/checkin", json={"token": token}, headers=headers
        )
        assert scan.status_code == 200
        assert scan.json() == {"record": scan.json()["record"], "duplicate": False}
        again = client.post(
            f"/events/{event['id']}/checkin", json={"token": token}, headers=headers
        )
        assert again.json()["duplicate"] is True

        presence = client.get(f"/events/{event['id']}/presence", headers=headers)
        assert presence.json()["checked_in_count"] == 1

    def test_tampered_token_is_400(self, client):
        person, headers = claim(client, "host")
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        event = client.post(
            "/events",
            json=event_payload(
                community["id"], venue["id"],
                start="2030-06-01T10:00:00Z", end="2030-06-01T11:00:00Z",
                checkin_enabled=True,
            ),
            headers=headers,
        ).json()["event"]
        token = client.post(
            f"/events/{event['id']}/checkin-token", headers=headers
        ).json()["token"]
        bad = token[:-2] + ("AA" if not token.endswith("AA") else "BB")
        response = client.post(
            f"/events/{event['id']}/checkin", json={"token": bad}, headers=headers
        )
        assert response.status_code == 400

    def test_ticket_flow(self, client):
        person, headers = claim(client, "host")
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        event = client.post(
            "/events",
            json=event_payload(community["id"], venue["id"], rsvp_mode="ticketed"),
            headers=headers,
        ).json()["event"]
        ticket = client.post(
            f"/events/{event['id']}/tickets", json={"quantity": 1}, headers=headers
        )
        assert ticket.status_code == 201
        ticket_id = ticket.json()["id"]

        _, guest_headers = claim(client, "guest")
        client.post(f"/communities/{community['id']}/join", json={}, headers=guest_headers)
        gated = client.post(
            f"/events/{event['id']}/rsvp", json={"target": "going"}, headers=guest_headers
        )
        assert gated.status_code == 409  # no ticket claimed yet
        assert client.post(f"/tickets/{ticket_id}/claim", headers=guest_headers).status_code == 201
        assert client.post(
            f"/events/{event['id']}/rsvp", json={"target": "going"}, headers=guest_headers
        ).status_code == 200
        # quantity exhausted for the next person
        _, late_headers = claim(client, "late")
        client.post(f"/communities/{community['id']}/join", json={}, headers=late_headers)
        assert client.post(f"/tickets/{ticket_id}/claim", headers=late_headers).status_code == 409


class TestProjectionsAndFeed:
    def test_schedule_modes_and_filters(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        client.post(
            "/events",
            json=event_payload(community["id"], venue["id"], tags=["art"]),
            headers=headers,
        )
        client.post(
            "/events",
            json=event_payload(
                community["id"], venue["id"],
                start="2024-06-01T12:00:00Z", end="2024-06-01T13:00:00Z", tags=["zen"],
            ),
            headers=headers,
        )
        def count(view):
            return sum(len(events) for _, events in view["buckets"])

        listed = client.get(f"/schedule?community={community['id']}").json()
        assert count(listed) == 2
        filtered = client.get(f"/schedule?community={community['id']}&tags=art").json()
        assert count(filtered) == 1
        weekly = client.get(f"/schedule?community={community['id']}&mode=weekly").json()
        assert [label for label, _ in weekly["buckets"]] == ["2024-06-01"]
        assert count(weekly) == 2
        ranged = client.get(
            f"/schedule?community={community['id']}&mode=weekly"
            "&from=2024-05-27&to=2024-06-02"
        ).json()
        assert len(ranged["buckets"]) == 7  # empty days still render
        assert client.get("/schedule?community=community-missing").status_code == 404

    def test_feed_is_gapless_and_resumable(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        for hour in (8, 10, 12, 14):
            client.post(
                "/events",
                json=event_payload(
                    community["id"], venue["id"],
                    start=f"2024-06-01T{hour:02d}:00:00Z",
                    end=f"2024-06-01T{hour:02d}:30:00Z",
                ),
                headers=headers,
            )
        full = client.get(f"/feed?community={community['id']}").json()
        sequences = [entry["sequence"] for entry in full]
        assert sequences == list(range(1, len(full) + 1))
        resumed = client.get(f"/feed?community={community['id']}&since={sequences[1]}").json()
        assert [e["sequence"] for e in resumed] == sequences[2:]

    def test_stats_json_and_csv(self, client):
        _, headers = claim(client)
        community = make_community(client, headers, name="rowtest")
        venue = make_venue(client, headers, community["id"])
        client.post(
            "/events", json=event_payload(community["id"], venue["id"]), headers=headers
        )
        url = (
            f"/stats?community={community['id']}"
            "&from=2024-06-01T00:00:00Z&to=2024-06-08T00:00:00Z"
        )
        body = client.get(url).json()
        assert body["events_total"] == 1
        assert body["duration_days"] == 7
        csv = client.get(url + "&format=csv")
        assert csv.headers["content-type"].startswith("text/csv")
        lines = csv.text.strip().split("\n")
        assert lines[0].startswith("Comm.,")
        assert lines[1].startswith("rowtest,7,1,")

    def test_bridge_prompts_shape(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        client.post(
            "/events",
            json=event_payload(community["id"], venue["id"], tags=["art"]),
            headers=headers,
        )
        response = client.get(
            f"/bridge-prompts?community={community['id']}&at=2024-06-01T00:00:00Z"
        )
        assert response.status_code == 200
        body = response.json()
        assert all({"event", "score"} <= set(item) for item in body)

    def test_ical_endpoint(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        client.post(
            "/events", json=event_payload(community["id"], venue["id"]), headers=headers
        )
        response = client.get(f"/ical/{community['id']}.ics")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/calendar")
        assert "BEGIN:VCALENDAR" in response.text
        assert "BEGIN:VEVENT" in response.text


class TestPortabilityEndpoints:
    def test_export_import_fork_over_http(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        client.post(
            "/events", json=event_payload(community["id"], venue["id"]), headers=headers
        )
        exported = client.post(
            "/export", json={"community_id": community["id"]}, headers=headers
        )
        assert exported.status_code == 200
        data = exported.content
        assert data.startswith(b"SOLA-BUNDLE\n")

        imported = client.post("/import", content=data, headers=headers)
        assert imported.status_code == 201
        assert imported.json()["community"]["id"] != community["id"]

        forked = client.post("/fork?new_name=next-camp", content=data, headers=headers)
        assert forked.status_code == 201
        body = forked.json()
        assert body["name"] == "next-camp"
        assert body["forked_from"][0] is not None

    def test_corrupt_bundle_is_400(self, client, store):
        _, headers = claim(client)
        community = make_community(client, headers)
        exported = client.post(
            "/export", json={"community_id": community["id"]}, headers=headers
        ).content
        corrupted = exported[:-10] + b"0" * 10
        before = store.to_snapshot()
        response = client.post("/import", content=corrupted, headers=headers)
        assert response.status_code == 400
        assert canonical_json(store.to_snapshot()) == canonical_json(before)

    def test_export_denied_for_non_coordinator(self, client):
        _, headers = claim(client)
        community = make_community(client, headers)
        _, guest_headers = claim(client, "guest")
        client.post(f"/communities/{community['id']}/join", json={}, headers=guest_headers)
        response = client.post(
            "/export", json={"community_id": community["id"]}, headers=guest_headers
        )
        assert response.status_code == 403


class TestPersistence:
    def test_state_survives_restart(self, tmp_path):
        state = tmp_path / "state.json"
        store = CommunityStore(persistence_path=str(state))
        client = TestClient(create_app(store))
        _, headers = claim(client)
        community = make_community(client, headers)
        venue = make_venue(client, headers, community["id"])
        client.post(
            "/events", json=event_payload(community["id"], venue["id"]), headers=headers
        )

        reloaded = CommunityStore.load(str(state))
        assert canonical_json(reloaded.to_snapshot()) == canonical_json(store.to_snapshot())
        assert community["id"] in reloaded.communities
        assert len(reloaded.events_of(community["id"])) == 1


class TestConfig:
    def test_env_overrides(self, monkeypatch):
        monkeypatch.setenv("SOLA_HOST", "0.0.0.0")
        monkeypatch.setenv("SOLA_PORT", "9001")
        monkeypatch.setenv("SOLA_CORS", "https://a.example, https://b.example")
        config = ApiConfig.from_env()
        assert config.host == "0.0.0.0"
        assert config.port == 9001
        assert config.cors_origins == ["https://a.example", "https://b.example"]
