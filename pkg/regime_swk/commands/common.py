"""
Argument helpers and input loading shared by the sub-commands.
"""
import argparse
from pathlib import Path

import numpy as np
import orjson

from regime_swk import meta_config
from regime_swk.models.exceptions import ConfigError, DataError
from regime_swk.models.experiment import ExperimentConfig, H2Rule
from regime_swk.models.measures import ReturnSeries, log_returns
from regime_swk.models.wasserstein import ProjectionScheme
from regime_swk.utils.csv_io import align_truth, read_prices, read_truth


def int_list(values: list[str]) -> list[int]:
    """Accept ``20,30,35`` as well as ``20 30 35``."""
    items = [item for value in values for item in value.split(',') if item.strip()]
    try:
        return [int(item) for item in items]
    except ValueError as e:
        raise ConfigError(f"Expected integers, got {' '.join(values)!r}") from e


def h2_list(values: list[str]) -> list[H2Rule]:
    return [H2Rule.parse(item) for value in values for item in value.split(',') if item.strip()]


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', type=Path, required=True, help="Prices CSV (timestamp,c0,...)")
    parser.add_argument('--truth', type=Path, default=None, help="Truth CSV (timestamp,regime)")


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--K', type=int, default=2, help="Number of clusters")
    parser.add_argument('--p', type=int, default=1, choices=(1, 2), help="Wasserstein order")
    parser.add_argument('--runs', type=int, default=None, help=f"Runs per configuration (default {meta_config.DEFAULT_RUNS})")
    parser.add_argument(
        '--full-scale',
        action='store_true',
        help=f"Use {meta_config.FULL_SCALE_RUNS} runs per configuration unless --runs is given",
    )
    parser.add_argument('--seed', type=int, default=0, help="Master seed")
    parser.add_argument(
        '--scheme',
        type=ProjectionScheme,
        default=ProjectionScheme.GRID,
        choices=list(ProjectionScheme),
        help="Projection directions: fixed grid (d ≤ 3) or custom",
    )
    parser.add_argument('--directions', type=Path, default=None, help="JSON file with an L×d list of unit directions")
    parser.add_argument('--out', type=Path, required=True, help="Output directory")


def resolve_runs(args: argparse.Namespace) -> int:
    if args.runs is not None:
        return args.runs
    return meta_config.FULL_SCALE_RUNS if args.full_scale else meta_config.DEFAULT_RUNS


def load_returns(config: ExperimentConfig) -> tuple[ReturnSeries, np.ndarray | None]:
    """Standardized returns of the prices CSV and, when given, the truth of every return."""
    stream = read_prices(config.data)
    returns = log_returns(stream)
    if config.truth is None:
        return returns, None
    truth, timestamps = read_truth(config.truth)
    if truth.size and truth.min() < 0:
        raise DataError(f"{config.truth}: regime ids must be ≥ 0")
    return returns, align_truth(truth, timestamps, stream)


def load_directions(config: ExperimentConfig) -> np.ndarray | None:
    if config.directions is None:
        return None
    try:
        matrix = np.asarray(orjson.loads(config.directions.read_bytes()), dtype=np.float64)
    except (OSError, orjson.JSONDecodeError, ValueError, TypeError) as e:
        raise ConfigError(f"Cannot load directions from {config.directions}: {e}") from e
    if matrix.ndim != 2:
        raise ConfigError(f"{config.directions}: directions must be an L×d list of lists")
    return matrix


def config_echo(config: ExperimentConfig) -> dict:
    """The configuration as written into manifests; the output path is left out."""
    return config.model_dump(mode='json', exclude={'out'})


def projection_counts(requested: list[int] | None, dimension: int, directions: np.ndarray | None) -> list[int]:
    """
    Projection counts when ``--L``/``--L-list`` is omitted: the custom direction
    count, or a single projection for d=1. Multivariate data must name L, since
    one grid projection only sees the first coordinate.
    """
    if requested is not None:
        return requested
    if directions is not None:
        return [directions.shape[0]]
    if dimension == 1:
        return [1]
    raise ConfigError(f"d={dimension} data needs an explicit number of projections (--L / --L-list)")
