import dataclasses

import numpy as np
import pytest

from scrapfilter.synth_data import Heats, ScenarioConfig, build_dataset


def slice_dataset(ds, stop):
    """First ``stop`` heats of a dataset."""
    cut = lambda h: Heats(*(getattr(h, f.name)[:stop] for f in dataclasses.fields(Heats)))
    part = None if ds.partition is None else ds.partition[:stop]
    return dataclasses.replace(ds, heats=cut(ds.heats), truth=cut(ds.truth),
                               alpha=ds.alpha[:stop], partition=part)


@pytest.fixture(scope="session")
def cu_small():
    return build_dataset(ScenarioConfig(T=3000, seed=11, element="cu"))


@pytest.fixture(scope="session")
def cr_small():
    return build_dataset(ScenarioConfig(T=3000, seed=11, element="cr"))


@pytest.fixture(scope="session")
def cu_full():
    return build_dataset(ScenarioConfig(seed=21, element="cu"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
