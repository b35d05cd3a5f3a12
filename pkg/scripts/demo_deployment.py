#!/usr/bin/env python3
"""End-to-end walkthrough on an in-memory store.

Builds a small pop-up deployment, exercises the main flows (join, event
creation with conflict detection, RSVP, QR check-in, stats, export, fork)
and prints what happens at each step. Useful as executable documentation.

Usage: python3 scripts/demo_deployment.py [--bundle-out demo.bundle]
"""

import argparse
from datetime import datetime, timedelta, timezone

from sola.model import Role, RsvpMode, TimeInterval, Venue, new_id
from sola.analytics import compute_deployment_stats, STATS_CSV_HEADER
from sola.participation import ParticipationState
from sola.portability import bundle_content_hash, export_bundle, fork_deployment
from sola.store import CommunityStore, SchedulingConflict


def ts(hour, minute=0, day=1):
    return datetime(2024, 6, day, hour, minute, tzinfo=timezone.utc)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bundle-out", default=None, help="write the exported bundle here")
    args = parser.parse_args()

    store = CommunityStore()
    ada = store.add_person("Ada")
    community = store.create_community("Riverside Pop-up", "UTC", ada.id)
    print(f"created community {community.name!r} ({community.id}), Ada is coordinator")

    hall = Venue(id=new_id("venue"), community_id=community.id, name="Main Hall", shareable=False)
    store.venues[hall.id] = hall

    bo = store.add_person("Bo")
    store.join_community(bo.id, community.id)
    print("Bo joined through open registration as participant")

    event, advisories = store.create_event(
        bo.id, community.id, "Intro to fermentation",
        TimeInterval(ts(10), ts(11, 30)), hall.id,
        rsvp_mode=RsvpMode.rsvp_tracked, checkin_enabled=True,
    )
    print(f"Bo self-organized {event.title!r} ({len(advisories)} advisories)")

    try:
        store.create_event(
            ada.id, community.id, "Competing workshop",
            TimeInterval(ts(10, 30), ts(12)), hall.id,
        )
    except SchedulingConflict as exc:
        print(f"double-booking refused: {exc.conflicts[0].kind.value}")

    store.set_rsvp(ada.id, event.id, ParticipationState.going)
    token = store.make_checkin_token(event.id, ada.id, now=ts(9, 55))
    record, duplicate = store.check_in(bo.id, token, now=ts(10, 5))
    print(f"Ada checked in (state={record.state.value}, duplicate={duplicate})")

    window = TimeInterval(ts(0), ts(0) + timedelta(days=7))
    stats = compute_deployment_stats(
        store.events_of(community.id), store.records_of(community.id), window
    )
    print(STATS_CSV_HEADER)
    print(stats.csv_row(community.name))

    bundle = export_bundle(store, community.id, ada.id)
    print(f"exported bundle: {len(bundle)} bytes, hash {bundle_content_hash(bundle)[:16]}…")
    if args.bundle_out:
        with open(args.bundle_out, "wb") as fh:
            fh.write(bundle)
        print(f"wrote {args.bundle_out}")

    fork = fork_deployment(store, bundle, "Riverside, next summer", store.add_person("Cam"))
    print(
        f"forked into {fork.name!r}: {len(store.events_of(fork.id))} events, "
        f"{sum(1 for v in store.venues.values() if v.community_id == fork.id)} venues inherited"
    )


if __name__ == "__main__":
    main()
