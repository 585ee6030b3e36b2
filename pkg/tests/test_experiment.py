import numpy as np
import pytest
from pydantic import ValidationError

import regime_swk.models.experiment as experiment
from regime_swk.models.exceptions import ConfigError, ContractError
from regime_swk.models.experiment import (
    ExperimentConfig,
    H2Rule,
    SweepCell,
    run_cluster_async,
    run_sweep_async,
)
from regime_swk.models.measures import log_returns
from regime_swk.models.wasserstein import ProjectionScheme


def _config(tmp_path, **overrides) -> ExperimentConfig:
    fields = {
        'data': tmp_path / 'prices.csv',
        'h1_list': [35],
        'h2_rules': [H2Rule.parse('20%')],
        'n_runs': 3,
        'seed': 17,
        'out': tmp_path / 'out',
    }
    return ExperimentConfig(**{**fields, **overrides})


@pytest.fixture(scope='module')
def one_year(dataset_1d_short):
    dataset = dataset_1d_short.truncate(1)
    return log_returns(dataset.prices), dataset.returns_truth


# --- H2Rule ---

@pytest.mark.parametrize(('text', 'h1', 'expected'), [
    ('20%', 35, 7),
    ('7', 35, 7),
    ('50%', 35, 18),
    ('1%', 35, 1),
    ('100%', 12, 12),
    (' 10% ', 10, 1),
])
def test_h2_rule_resolves(text, h1, expected):
    assert H2Rule.parse(text).resolve(h1) == expected


@pytest.mark.parametrize('text', ['abc', '0', '-5', '0%'])
def test_h2_rule_rejects_bad_text(text):
    with pytest.raises(ConfigError):
        H2Rule.parse(text)


def test_h2_rule_absolute_must_be_integer():
    with pytest.raises(ConfigError):
        H2Rule.parse('2.5')


def test_h2_rule_larger_than_window_is_config_error():
    with pytest.raises(ConfigError):
        H2Rule.parse('40').resolve(35)


def test_h2_rule_str():
    assert str(H2Rule.parse('20%')) == '20%'
    assert str(H2Rule.parse('7')) == '7'


# --- ExperimentConfig ---

def test_cells_are_h1_major_with_resolved_offsets(tmp_path):
    config = _config(
        tmp_path,
        h1_list=[10, 20],
        h2_rules=[H2Rule.parse('50%'), H2Rule.parse('2')],
        L_list=[1, 4],
    )
    cells = [(c.h1, c.h2, c.L) for c in config.cells()]
    assert cells == [
        (10, 5, 1), (10, 5, 4), (10, 2, 1), (10, 2, 4),
        (20, 10, 1), (20, 10, 4), (20, 2, 1), (20, 2, 4),
    ]
    assert config.cells()[0].h2_rule == '50%'


def test_custom_scheme_needs_directions(tmp_path):
    with pytest.raises(ConfigError):
        _config(tmp_path, scheme=ProjectionScheme.CUSTOM)


def test_tracking_accuracy_needs_truth(tmp_path):
    with pytest.raises(ConfigError):
        _config(tmp_path, track_accuracy=True)


def test_config_rejects_unknown_and_invalid_fields(tmp_path):
    with pytest.raises(ValidationError):
        _config(tmp_path, colour='red')
    with pytest.raises(ValidationError):
        _config(tmp_path, K=0)
    with pytest.raises(ValidationError):
        _config(tmp_path, h1_list=[])


def test_cluster_config_carries_master_seed(tmp_path):
    cfg = _config(tmp_path, K=3, p=2).cluster_config()
    assert (cfg.K, cfg.p, cfg.seed) == (3, 2, 17)


# --- SweepCell ---

def test_sweep_cell_orders_statistics():
    SweepCell(h1=35, h2=7, L=1, K=2, n_runs=3, ta_median=0.8, ta_max=0.9, ta_metric_selected=0.85)
    with pytest.raises(ValidationError):
        SweepCell(h1=35, h2=7, L=1, K=2, n_runs=3, ta_median=0.95, ta_max=0.9)


# --- runners ---

async def test_run_cluster_async_reports_selected_run(tmp_path, one_year):
    returns, truth = one_year
    report = await run_cluster_async(_config(tmp_path, truth=tmp_path / 'truth.csv'), returns, truth)
    assert len(report.outcomes) == 3
    assert report.cell.h2 == 7
    accuracy = report.accuracy
    assert accuracy is not None
    assert accuracy.selected_run == report.selected.run
    assert accuracy.median <= accuracy.maximum
    assert accuracy.selected <= accuracy.maximum
    assert set(accuracy.per_regime) == {0, 1}
    assert {s.regime for s in report.stats.regimes} <= {0, 1}


async def test_run_cluster_async_without_truth(tmp_path, one_year):
    returns, _ = one_year
    report = await run_cluster_async(_config(tmp_path, n_runs=1), returns)
    assert report.accuracy is None
    assert report.selected.run == 0


async def test_sweep_records_failing_cell_and_continues(tmp_path, one_year):
    returns, truth = one_year
    config = _config(tmp_path, h1_list=[35, 5000], h2_rules=[H2Rule.parse('20%')], n_runs=2)
    report = await run_sweep_async(config, returns, truth)
    assert [(c.h1, c.h2) for c in report.cells] == [(35, 7), (5000, 1000)]
    good, bad = report.cells
    assert not good.failed and good.n_runs == 2
    assert 0.0 <= good.ta_median <= good.ta_max <= 1.0
    assert bad.failed and bad.n_runs == 0 and bad.error
    assert report.failed == [bad]
    assert len(report.seeds['35/7/1']) == 2
    assert report.seeds['5000/1000/1'] == []
    assert report.cell(35, 7, 1) is good


async def test_sweep_is_reproducible(tmp_path, one_year):
    returns, truth = one_year
    config = _config(tmp_path, h1_list=[35], L_list=[1], n_runs=2)
    first = await run_sweep_async(config, returns, truth)
    second = await run_sweep_async(config, returns, truth)
    assert first == second


async def test_sweep_needs_truth(tmp_path, one_year):
    returns, _ = one_year
    with pytest.raises(ContractError):
        await run_sweep_async(_config(tmp_path), returns, None)


async def test_sweep_records_unexpected_cell_errors(tmp_path, one_year, monkeypatch):
    returns, truth = one_year
    original = experiment.multi_run_async

    async def flaky(stream, lift_cfg, *args, **kwargs):
        if lift_cfg.h1 == 20:
            raise np.linalg.LinAlgError("Singular matrix")
        return await original(stream, lift_cfg, *args, **kwargs)

    monkeypatch.setattr(experiment, 'multi_run_async', flaky)
    report = await run_sweep_async(_config(tmp_path, h1_list=[20, 35], n_runs=1), returns, truth)
    broken, good = report.cells
    assert broken.failed and broken.error == "LinAlgError: Singular matrix"
    assert not good.failed and good.n_runs == 1
