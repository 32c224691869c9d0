import numpy as np
import pytest

from quadnet.catalog import Catalog, CoPurchaseEdge, Item
from quadnet.featurizer import hash_featurize
from quadnet.quadgen import generate, split_by_anchor
from quadnet.sample import SampleConfig, make_sample


@pytest.fixture
def tiny_catalog():
    items = [
        Item("A", "blue cotton top", "Tops"),
        Item("B", "red silk top", "Tops"),
        Item("C", "slim blue jeans", "Jeans"),
        Item("D", "black denim jeans", "Jeans"),
        Item("E", "leather belt", "Belts"),
        Item("F", "canvas belt", "Belts"),
    ]
    return Catalog(items)


@pytest.fixture
def tiny_edges():
    return [CoPurchaseEdge("A", "C"), CoPurchaseEdge("B", "E")]


@pytest.fixture(scope="session")
def small_sample():
    """8 categories x 10 items, quick to train on."""
    s = make_sample(SampleConfig(n_categories=8, items_per_category=10, edges_per_item=3, seed=1))
    catalog = Catalog(s.items)
    rng = np.random.default_rng(1)
    quads = generate(catalog, s.edges, rng)
    split = split_by_anchor(quads, 0.9, rng)
    store = hash_featurize(catalog, dim=64, seed=1)
    return catalog, split, store


# --- acceptance reporting -------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    n, text = mark.args
    detail = dict(item.user_properties).get("detail", "")
    prev = _CRITERIA.get(n)
    ok = rep.passed and (prev is None or prev[0])
    _CRITERIA[n] = (ok, text, detail or (prev[2] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, text, detail = _CRITERIA[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
