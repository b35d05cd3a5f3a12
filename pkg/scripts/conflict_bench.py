#!/usr/bin/env python3
"""Benchmark the conflict engine against growing deployments.

Generates N existing events over V venues, then times how long a batch of
draft checks takes. Prints one CSV row per configuration so results can be
plotted directly.

Usage: python3 scripts/conflict_bench.py [--drafts 1000] [--seed 7]
"""

import argparse
import random
import time
from datetime import datetime, timedelta, timezone

from sola.model import Event, TimeInterval, Venue, new_id
from sola.scheduling import check_event_conflicts


def build(rng, n_events, n_venues):
    venues = {}
    for i in range(n_venues):
        venue = Venue(
            id=new_id("venue"), community_id="c", name=f"v{i}",
            shareable=rng.random() < 0.4, capacity=rng.choice([None, 2, 5]),
        )
        venues[venue.id] = venue
    ids = list(venues)
    base = datetime(2024, 6, 1, tzinfo=timezone.utc)

    def event():
        start = base + timedelta(minutes=30 * rng.randrange(0, 2000))
        return Event(
            id=new_id("event"), community_id="c", title="x",
            interval=TimeInterval(start, start + timedelta(minutes=rng.choice([30, 60, 120]))),
            venue_ref=rng.choice(ids), host_id="h",
        )

    return venues, [event() for _ in range(n_events)], event


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--drafts", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    print("events,venues,drafts,total_s,per_draft_us")
    for n_events, n_venues in [(100, 5), (500, 20), (2000, 20), (5000, 50)]:
        rng = random.Random(args.seed)
        venues, existing, make_draft = build(rng, n_events, n_venues)
        drafts = [make_draft() for _ in range(args.drafts)]
        started = time.perf_counter()
        for draft in drafts:
            check_event_conflicts(draft, existing, venues, "UTC")
        elapsed = time.perf_counter() - started
        print(
            f"{n_events},{n_venues},{args.drafts},"
            f"{elapsed:.3f},{1e6 * elapsed / args.drafts:.1f}"
        )


if __name__ == "__main__":
    main()
