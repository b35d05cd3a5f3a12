"""Command line entry points: serve the API, or work with bundles offline."""

from __future__ import annotations

import json
import sys
from datetime import timedelta

import click

from . import analytics, portability
from .api import ApiConfig, create_app
from .canonical import parse_instant
from .model import TimeInterval, new_id, Person
from .store import CommunityStore


def _load_config(path: str | None) -> ApiConfig:
    cfg = ApiConfig()
    if path:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        cfg = ApiConfig(
            host=raw.get("host", cfg.host),
            port=raw.get("port", cfg.port),
            persistence_path=raw.get("persistence_path", cfg.persistence_path),
            session_ttl_seconds=raw.get("session_ttl_seconds", cfg.session_ttl_seconds),
            cors_origins=raw.get("cors_origins", []),
        )
    return ApiConfig.from_env(cfg)


def _load_store(state: str | None) -> CommunityStore:
    if state:
        try:
            return CommunityStore.load(state)
        except FileNotFoundError:
            return CommunityStore(persistence_path=state)
    return CommunityStore()


@click.group()
def main():
    """sola: coordination service for pop-up communities."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(config_path):
    """Run the HTTP API server."""
    import uvicorn

    cfg = _load_config(config_path)
    store = _load_store(cfg.persistence_path)
    app = create_app(store, cfg)
    uvicorn.run(app, host=cfg.host, port=cfg.port)


@main.command()
@click.option("--state", required=True, type=click.Path(exists=True))
@click.option("--community", "community_id", required=True)
@click.option("--actor", "actor_id", required=True, help="person id with export_data permission")
@click.option("--scope", type=click.Choice([s.value for s in portability.ExportScope]), default="full")
@click.option("-o", "--output", type=click.Path(), required=True)
def export(state, community_id, actor_id, scope, output):
    """Export a community from a state file into a bundle."""
    store = CommunityStore.load(state)
    data = portability.export_bundle(
        store, community_id, actor_id, portability.ExportScope(scope)
    )
    with open(output, "wb") as f:
        f.write(data)
    click.echo(f"wrote {len(data)} bytes, hash {portability.bundle_content_hash(data)}")


@main.command("import")
@click.argument("bundle", type=click.Path(exists=True))
@click.option("--state", required=True, type=click.Path())
def import_cmd(bundle, state):
    """Import a bundle into a state file (created if missing)."""
    store = _load_store(state)
    store.persistence_path = state
    with open(bundle, "rb") as f:
        data = f.read()
    community, id_map = portability.import_bundle(store, data)
    click.echo(f"imported community {community.id} ({len(id_map)} ids mapped)")


@main.command()
@click.argument("bundle", type=click.Path(exists=True))
@click.option("--name", required=True, help="name of the forked deployment")
@click.option("--forker-name", default="forker")
@click.option("--inherit-roles/--no-inherit-roles", default=True)
@click.option("--carry-archive/--no-carry-archive", default=False)
@click.option("-o", "--output", type=click.Path(), required=True, help="bundle file for the fork")
def fork(bundle, name, forker_name, inherit_roles, carry_archive, output):
    """Fork a bundle into a fresh deployment bundle."""
    store = CommunityStore()
    with open(bundle, "rb") as f:
        data = f.read()
    forker = Person(new_id("person"), forker_name)
    community = portability.fork_deployment(
        store, data, name, forker, inherit_roles=inherit_roles, carry_archive=carry_archive
    )
    forked = portability.export_bundle(store, community.id, forker.id)
    with open(output, "wb") as f:
        f.write(forked)
    click.echo(f"forked as {community.id}, forked_from hash {community.forked_from[1]}")


@main.command()
@click.argument("bundle", type=click.Path(exists=True))
@click.option("--window-from", "window_from", default=None, help="RFC 3339 instant")
@click.option("--window-to", "window_to", default=None, help="RFC 3339 instant")
def stats(bundle, window_from, window_to):
    """Print the deployment statistics CSV for a bundle."""
    store = CommunityStore()
    with open(bundle, "rb") as f:
        data = f.read()
    community, _ = portability.import_bundle(store, data)
    events = [e for e in store.events_of(community.id) if e.interval is not None]
    if not events and not (window_from and window_to):
        click.echo("bundle has no events and no window was given", err=True)
        sys.exit(1)
    if window_from and window_to:
        window = TimeInterval(parse_instant(window_from), parse_instant(window_to))
    else:
        start = min(e.interval.start for e in events)
        end = max(e.interval.end for e in events) + timedelta(seconds=1)
        window = TimeInterval(start, end)
    result = analytics.compute_deployment_stats(
        events, store.records_of(community.id), window
    )
    click.echo(analytics.STATS_CSV_HEADER)
    click.echo(result.csv_row(community.name))


if __name__ == "__main__":
    main()
