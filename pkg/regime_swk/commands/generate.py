"""
``generate``: write a synthetic scenario as prices and truth CSVs with a manifest.

Datasets shorter than the full 20 years are prefixes of the 20-year dataset
of the same seed, so a 1- or 2-year dataset shares its first years with it.
"""
import argparse
from pathlib import Path

import anyio.to_thread
from loguru import logger as l

from regime_swk.models.exceptions import ParameterError
from regime_swk.models.synthgen import DEFAULT_YEARS, Scenario, SyntheticDataset, gen_scenario
from regime_swk.utils.artifacts import ArtifactStage, manifest
from regime_swk.utils.csv_io import prices_csv, truth_csv

PRICES_FILE: str = 'prices.csv'
TRUTH_FILE: str = 'truth.csv'
MANIFEST_FILE: str = 'manifest.json'


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser('generate', help="Generate a synthetic dataset with known regimes")
    parser.add_argument('--scenario', type=Scenario, required=True, choices=list(Scenario), help="Scenario name")
    parser.add_argument('--seed', type=int, required=True, help="Generator seed")
    parser.add_argument(
        '--years',
        type=int,
        default=DEFAULT_YEARS,
        help=f"Length in years; below {DEFAULT_YEARS} the dataset is a prefix of the {DEFAULT_YEARS}-year one",
    )
    parser.add_argument('--out', type=Path, required=True, help="Output directory")
    parser.set_defaults(handler=run)


def build_dataset(scenario: Scenario | str, seed: int, years: int) -> SyntheticDataset:
    if years < 1:
        raise ParameterError(f"--years must be ≥ 1, got {years}")
    if years >= DEFAULT_YEARS:
        return gen_scenario(scenario, seed, years)
    return gen_scenario(scenario, seed, DEFAULT_YEARS).truncate(years)


async def run(args: argparse.Namespace) -> None:
    l.info(f"Generating scenario {args.scenario} (seed={args.seed}, years={args.years})")
    dataset = await anyio.to_thread.run_sync(build_dataset, args.scenario, args.seed, args.years)

    async with ArtifactStage(args.out) as stage:
        await stage.write_text(PRICES_FILE, prices_csv(dataset.prices))
        await stage.write_text(TRUTH_FILE, truth_csv(dataset.truth))
        await stage.write_json(MANIFEST_FILE, manifest(
            'generate',
            {'scenario': str(args.scenario), 'seed': args.seed, 'years': args.years},
            spec=dataset.spec.model_dump(mode='json'),
            periods=[period.model_dump(mode='json') for period in dataset.periods],
            prefix_of_years=DEFAULT_YEARS if args.years < DEFAULT_YEARS else None,
            n_points=dataset.prices.length,
        ))
