"""Command line front end: benchmarking, evaluation, diagnostics, export, serving.

``--config FILE`` loads JSON whose top-level keys are command names and whose
values become that command's option defaults, e.g.
``{"eval": {"games": 200, "seat0": "greedy"}}``. Explicit flags still win.
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .config import make_config
from .diagnostics import load_default_scenarios, read_scenarios
from .errors import YokaiError
from .harness import cross_play, evaluate_diagnostic, export_probing_dataset, run_matchup
from .observation import MemoryMode, ObsEncoding
from .records import write_records
from .symmetry import SymmetryMode

_VARIANTS = click.Choice(["3x3", "4x4"])
_MEMORY = click.Choice([m.value for m in MemoryMode])
_ENCODING = click.Choice([e.value for e in ObsEncoding])
_SYMMETRY = click.Choice([m.value for m in SymmetryMode])


def wraps_yokai_errors(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except YokaiError as exc:
            raise click.ClickException(str(exc)) from exc

    return inner


def game_options(fn):
    fn = click.option("--variant", type=_VARIANTS, default="3x3", show_default=True)(fn)
    fn = click.option("--players", type=click.IntRange(2, 4), default=2, show_default=True)(fn)
    return fn


@click.group()
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file of per-command option defaults.",
)
@click.pass_context
def main(ctx: click.Context, config_file: str | None) -> None:
    """Yokai learning environment tools."""
    if config_file:
        with open(config_file, encoding="utf-8") as fh:
            try:
                defaults = json.load(fh)
            except json.JSONDecodeError as exc:
                raise click.UsageError(f"--config is not valid JSON: {exc}")
        if not isinstance(defaults, dict):
            raise click.UsageError("--config must hold a JSON object keyed by command")
        ctx.default_map = defaults


@main.command()
@game_options
@click.option("--envs", "env_counts", type=int, multiple=True, default=(512, 1024, 2048), show_default=True)
@click.option("--steps", type=int, default=50, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--memory", type=_MEMORY, default="standard", show_default=True)
@click.option("--encoding", type=_ENCODING, default="graph", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kernels", is_flag=True, help="compare kernel backends instead of stepping")
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@wraps_yokai_errors
def bench(variant, players, env_counts, steps, workers, memory, encoding, seed, kernels, as_json):
    """Measure random-action stepping throughput across batch sizes."""
    from .vecenv import kernel_bench, throughput_bench

    if kernels:
        result = kernel_bench(make_config(variant, players), seed=seed)
        if as_json:
            click.echo(json.dumps(result, indent=1))
            return
        for name, row in result["backends"].items():
            click.echo(f"{name:>9}: {row['states_per_second']:>12.0f} states/s")
        if "speedup" in result:
            click.echo(f"compiled speedup over python: {result['speedup']:.1f}x")
        return

    report = throughput_bench(
        make_config(variant, players),
        env_counts=tuple(env_counts),
        steps=steps,
        seed=seed,
        memory=MemoryMode(memory),
        encoding=ObsEncoding(encoding),
        workers=workers,
    )
    click.echo(report.to_json() if as_json else report.render_text())


def _policy_specs(seat0, seat1, seat2, seat3, players):
    specs = [seat0, seat1, seat2, seat3][:players]
    if any(s is None for s in specs):
        raise click.UsageError(f"{players} players need --seat0 .. --seat{players - 1}")
    return specs


@main.command(name="eval")
@game_options
@click.option("--seat0", default="greedy", show_default=True, help="policy spec for seat 0")
@click.option("--seat1", default="greedy", show_default=True)
@click.option("--seat2", default=None)
@click.option("--seat3", default=None)
@click.option("--games", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--op", type=_SYMMETRY, default="none", show_default=True, help="symmetrize seats")
@click.option("--memory", type=_MEMORY, default="standard", show_default=True)
@click.option("--encoding", type=_ENCODING, default="graph", show_default=True)
@click.option("--records", "records_path", type=click.Path(dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
@wraps_yokai_errors
def eval_cmd(variant, players, seat0, seat1, seat2, seat3, games, seed, op, memory, encoding, records_path, as_json):
    """Play matchups and report success, return, and episode statistics."""
    from .agents import make_policy

    config = make_config(variant, players)
    specs = _policy_specs(seat0, seat1, seat2, seat3, players)
    policies = [make_policy(spec, config) for spec in specs]
    try:
        result = run_matchup(
            policies,
            config,
            episodes=games,
            seed=seed,
            memory=MemoryMode(memory),
            encoding=ObsEncoding(encoding),
            symmetry_mode=SymmetryMode(op),
        )
    finally:
        for p in policies:
            p.close()
    if records_path:
        write_records(result.records, records_path)
    if as_json:
        payload = result.to_dict()
        payload["seats"] = specs
        click.echo(json.dumps(payload, indent=1))
        return
    m = result.metrics
    click.echo(f"seats            {' vs '.join(specs)}")
    click.echo(f"episodes         {m.episodes} (aborted {m.aborted})")
    click.echo(f"success rate     {m.success_rate:.3f}")
    click.echo(f"solved early     {m.solved_early_exactly:.3f}")
    click.echo(f"mean return      {m.mean_return:.3f} ± {m.std_return:.3f}")
    click.echo(f"mean clusters    {m.mean_clusters:.3f}")
    click.echo(f"mean length      {m.mean_length:.1f}")
    if records_path:
        click.echo(f"records written  {records_path}")


@main.command()
@game_options
@click.option("--pool", default="random,greedy", show_default=True, help="comma-separated policy specs")
@click.option("--games", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--memory", type=_MEMORY, default="standard", show_default=True)
@click.option("--json", "as_json", is_flag=True)
@wraps_yokai_errors
def crossplay(variant, players, pool, games, seed, memory, as_json):
    """Success matrix over every ordered pairing from a policy pool."""
    names = [p.strip() for p in pool.split(",") if p.strip()]
    if len(names) < 1:
        raise click.UsageError("--pool needs at least one policy spec")
    result = cross_play(
        {name: name for name in names},
        make_config(variant, players),
        episodes=games,
        seed=seed,
        memory=MemoryMode(memory),
    )
    if as_json:
        click.echo(json.dumps(result.to_dict(), indent=1))
        return
    width = max(len(n) for n in result.names) + 2
    click.echo(" " * width + "".join(f"{n:>{width}}" for n in result.names))
    for i, row in enumerate(result.names):
        cells = "".join(f"{result.success_matrix[i, j]:>{width}.3f}" for j in range(len(result.names)))
        click.echo(f"{row:>{width}}" + cells)
    click.echo(f"self-play minus cross-play success gap: {result.gap:+.3f}")


@main.command()
@click.option("--policy", default="random", show_default=True, help="policy spec to probe")
@click.option("--fixtures", type=click.Path(exists=True, dir_okay=False), default=None,
              help="scenario file (defaults to the packaged set)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@wraps_yokai_errors
def diagnose(policy, fixtures, seed, as_json):
    """Rank a policy's probabilities on labelled single-decision scenarios."""
    from .agents import make_policy

    scenarios = read_scenarios(fixtures) if fixtures else load_default_scenarios()
    config = scenarios[0].config
    instance = make_policy(policy, config)
    try:
        report = evaluate_diagnostic(instance, scenarios, rng_seed=seed)
    finally:
        instance.close()
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=1))
        return
    click.echo(f"scenarios             {report.scenarios}")
    click.echo(f"mean legal actions    {report.mean_legal_actions:.1f}")
    for label, rank in sorted(report.mean_rank.items()):
        click.echo(f"mean rank [{label:<5}]    {rank:.2f}   (1 = most probable)")


@main.command()
@game_options
@click.option("--seat0", default="oracle", show_default=True)
@click.option("--seat1", default="oracle", show_default=True)
@click.option("--seat2", default=None)
@click.option("--seat3", default=None)
@click.option("--games", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--memory", type=_MEMORY, default="standard", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="episode JSONL path")
@click.option("--probing", type=click.Path(dir_okay=False), default=None,
              help="also derive a probing dataset to this path")
@wraps_yokai_errors
def export(variant, players, seat0, seat1, seat2, seat3, games, seed, memory, out, probing):
    """Play scripted games and export replay-verified episode records."""
    from .agents import make_policy

    config = make_config(variant, players)
    specs = _policy_specs(seat0, seat1, seat2, seat3, players)
    policies = [make_policy(spec, config) for spec in specs]
    try:
        result = run_matchup(
            policies, config, episodes=games, seed=seed, memory=MemoryMode(memory)
        )
    finally:
        for p in policies:
            p.close()
    count = write_records(result.records, out)
    click.echo(f"wrote {count} episode records to {out}")
    if probing:
        rows = export_probing_dataset(result.records, probing)
        click.echo(f"wrote {rows} probing rows to {probing}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@wraps_yokai_errors
def serve(host, port):
    """Run the live-play HTTP/WebSocket service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
