"""
``cluster``: multi-run sWk-means on one (h1, h2, L) configuration.

Writes the per-run diagnostics, the per-point labels of the selected run,
regime statistics, accuracy (when truth is given) and a manifest.
"""
import argparse

from loguru import logger as l

from regime_swk.models.experiment import ClusterReport, ExperimentConfig, run_cluster_async
from regime_swk.utils.artifacts import ArtifactStage, manifest
from regime_swk.utils.csv_io import diagnostics_csv, labels_csv

from .common import (
    add_data_arguments,
    add_run_arguments,
    config_echo,
    h2_list,
    load_directions,
    load_returns,
    projection_counts,
    resolve_runs,
)

DIAGNOSTICS_FILE: str = 'diagnostics.csv'
LABELS_FILE: str = 'labels.csv'
REGIME_STATS_FILE: str = 'regime_stats.json'
ACCURACY_FILE: str = 'accuracy.json'
MANIFEST_FILE: str = 'manifest.json'


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser('cluster', help="Cluster one configuration over many seeded runs")
    add_data_arguments(parser)
    parser.add_argument('--h1', type=int, required=True, help="Window size")
    parser.add_argument('--h2', type=str, required=True, help="Window offset, absolute (7) or percentage of h1 (20%%)")
    parser.add_argument('--L', type=int, default=None, help="Number of projections (required for d ≥ 2 unless custom directions give it)")
    add_run_arguments(parser)
    parser.add_argument('--track-accuracy', action='store_true', help="Record total accuracy after every iteration")
    parser.set_defaults(handler=run)


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        data=args.data,
        truth=args.truth,
        h1_list=[args.h1],
        h2_rules=h2_list([args.h2]),
        L_list=[args.L] if args.L is not None else [1],
        K=args.K,
        p=args.p,
        n_runs=resolve_runs(args),
        seed=args.seed,
        out=args.out,
        scheme=args.scheme,
        directions=args.directions,
        track_accuracy=args.track_accuracy,
    )


def accuracy_payload(report: ClusterReport) -> dict | None:
    if report.accuracy is None:
        return None
    payload = report.accuracy.model_dump(mode='json')
    trajectories = {
        outcome.run: [diag.accuracy for diag in outcome.result.diagnostics]
        for outcome in report.outcomes
        if any(diag.accuracy is not None for diag in outcome.result.diagnostics)
    }
    if trajectories:
        payload['trajectories'] = trajectories
    payload['per_run'] = {outcome.run: outcome.accuracy for outcome in report.outcomes}
    return payload


async def run(args: argparse.Namespace) -> None:
    config = build_config(args)
    returns, truth = load_returns(config)
    directions = load_directions(config)
    requested = [args.L] if args.L is not None else None
    config = config.model_copy(update={'L_list': projection_counts(requested, returns.dimension, directions)})
    l.info(f"Clustering {config.data}: {returns.length} returns, d={returns.dimension}")

    report = await run_cluster_async(config, returns, truth, directions)
    selected = report.selected

    async with ArtifactStage(config.out) as stage:
        await stage.write_text(DIAGNOSTICS_FILE, diagnostics_csv(report.outcomes))
        await stage.write_text(LABELS_FILE, labels_csv(selected.labeled))
        await stage.write_json(REGIME_STATS_FILE, report.stats.model_dump(mode='json'))
        if (accuracy := accuracy_payload(report)) is not None:
            await stage.write_json(ACCURACY_FILE, accuracy)
        await stage.write_json(MANIFEST_FILE, manifest(
            'cluster',
            config_echo(config),
            master_seed=config.seed,
            resolved={'h1': report.cell.h1, 'h2': report.cell.h2, 'L': report.cell.L, 'h2_rule': report.cell.h2_rule},
            runs=[
                {
                    'run': outcome.run,
                    'seed': outcome.seeds.seed,
                    'delta': outcome.seeds.delta,
                    'iterations': outcome.result.iterations,
                    'converged': outcome.result.converged,
                    'final_mean_centroid_centroid': outcome.result.final.mean_centroid_centroid,
                }
                for outcome in report.outcomes
            ],
            selected_run=selected.run,
        ))
