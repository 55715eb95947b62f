import random

import numpy as np
import pytest

from lukegraph.data import make_example


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_example():
    # sentences: "Ana met Bo." / "Bo and Cy left." / "Ana, Dee stayed."
    text = "Ana met Bo. Bo and Cy left. Ana, Dee stayed."
    return make_example(
        "small",
        text,
        [(0, 11), (12, 27), (28, 44)],
        [(0, 3), (8, 10), (12, 14), (19, 21), (28, 31), (33, 36)],
        "@placeholder was seen with Bo.",
        ["Cy"],
    )


NAMES = ["Ana", "Bo", "Cy", "Dee", "Eli", "Fay"]


def random_example(rnd: random.Random, ex_id: str = "rand", max_sentences: int = 4):
    """Sentences of random names (repeats allowed) joined by filler words."""
    text = ""
    sentences, mentions = [], []
    for _ in range(rnd.randint(1, max_sentences)):
        if text:
            text += " "
        start = len(text)
        for _ in range(rnd.randint(0, 3)):
            if rnd.random() < 0.5:
                text += "and "
            name = rnd.choice(NAMES)
            mentions.append((len(text), len(text) + len(name)))
            text += name + " "
        text += "went."
        sentences.append((start, len(text)))
    return make_example(ex_id, text, sentences, mentions, "@placeholder went home.", ["Ana"])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


_criteria: dict[int, list] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = dict(report.keywords).get("criterion")
    if marker is None:
        return
    number, title = report.user_properties[0][1] if report.user_properties else (None, None)
    if number is None:
        return
    _criteria.setdefault(number, [title, True])
    _criteria[number][1] &= report.passed


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}  {'PASS' if ok else 'FAIL'}  {title}")
