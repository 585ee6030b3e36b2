"""
``sweep``: total-accuracy statistics over a grid of (h1, h2, L) cells.
"""
import argparse

from loguru import logger as l

from regime_swk.models.experiment import ExperimentConfig, cell_key, run_sweep_async
from regime_swk.utils.artifacts import ArtifactStage, manifest
from regime_swk.utils.csv_io import sweep_csv

from .common import (
    add_data_arguments,
    add_run_arguments,
    config_echo,
    h2_list,
    int_list,
    load_directions,
    load_returns,
    projection_counts,
    resolve_runs,
)

SWEEP_FILE: str = 'sweep.csv'
MANIFEST_FILE: str = 'manifest.json'


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser('sweep', help="Accuracy statistics over a grid of window sizes, offsets and projections")
    add_data_arguments(parser)
    parser.add_argument('--h1-list', nargs='+', required=True, help="Window sizes, e.g. 20,30,35")
    parser.add_argument('--h2-list', nargs='+', required=True, help="Offsets, absolute or percentages, e.g. 20%%,30%%")
    parser.add_argument('--L-list', nargs='+', default=None, help="Projection counts, e.g. 2,4,9 (required for d ≥ 2)")
    add_run_arguments(parser)
    parser.set_defaults(handler=run)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        data=args.data,
        truth=args.truth,
        h1_list=int_list(args.h1_list),
        h2_rules=h2_list(args.h2_list),
        L_list=int_list(args.L_list) if args.L_list else [1],
        K=args.K,
        p=args.p,
        n_runs=resolve_runs(args),
        seed=args.seed,
        out=args.out,
        scheme=args.scheme,
        directions=args.directions,
    )


async def run(args: argparse.Namespace) -> None:
    config = build_config(args)
    returns, truth = load_returns(config)
    directions = load_directions(config)
    requested = int_list(args.L_list) if args.L_list else None
    config = config.model_copy(update={'L_list': projection_counts(requested, returns.dimension, directions)})
    cells = config.cells()
    l.info(f"Sweep over {len(cells)} cell(s) on {config.data} ({returns.length} returns, d={returns.dimension})")

    report = await run_sweep_async(config, returns, truth, directions)

    async with ArtifactStage(config.out) as stage:
        await stage.write_text(SWEEP_FILE, sweep_csv(report))
        await stage.write_json(MANIFEST_FILE, manifest(
            'sweep',
            config_echo(config),
            master_seed=config.seed,
            cells=[
                {
                    **cell.model_dump(mode='json'),
                    'seeds': [{'seed': seed, 'delta': delta} for seed, delta in report.seeds.get(cell_key(cell), [])],
                    'failed': sweep_cell.failed,
                    'error': sweep_cell.error,
                }
                for cell, sweep_cell in zip(cells, report.cells, strict=True)
            ],
        ))
