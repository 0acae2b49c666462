import math

import numpy as np
import pytest

from veingrow.geometry import Polygon


def star_polygon(rng, n_vertices=None, r_min=3.0, r_max=10.0, center=(12.0, 12.0)):
    """Random simple polygon: sorted random angles with random radii."""
    if n_vertices is None:
        n_vertices = int(rng.integers(5, 16))
    while True:
        t = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
        gaps = np.diff(np.concatenate([t, [t[0] + 2 * np.pi]]))
        # gaps below pi keep the centre in the kernel, so the ring is simple
        if gaps.min() > 0.05 and gaps.max() < 0.9 * np.pi:
            break
    r = rng.uniform(r_min, r_max, n_vertices)
    return Polygon(np.column_stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)]))


def convex_polygon(rng, n_points=12, lo=5.0, hi=60.0):
    from scipy.spatial import ConvexHull

    pts = rng.uniform(lo, hi, (n_points, 2))
    return Polygon(pts[ConvexHull(pts).vertices])


def annulus_sector(center=(20.0, 20.0), r_in=8.0, r_out=10.0, half_angle=math.radians(150), steps=40):
    """C-shaped polygon whose area centroid lies in the empty middle."""
    t = np.linspace(-half_angle, half_angle, steps)
    outer = np.column_stack([np.cos(t), np.sin(t)]) * r_out
    inner = (np.column_stack([np.cos(t), np.sin(t)]) * r_in)[::-1]
    return Polygon(np.vstack([outer, inner]) + center)


@pytest.fixture
def square():
    return Polygon([(0, 0), (4, 0), (4, 4), (0, 4)])


@pytest.fixture
def diamond():
    return Polygon([(2, 0), (4, 2), (2, 4), (0, 2)])


@pytest.fixture
def u_shape():
    # arms at x in [0, 3] and [7, 10], joined along y in [0, 3]
    return Polygon([(0, 0), (10, 0), (10, 10), (7, 10), (7, 3), (3, 3), (3, 10), (0, 10)])


@pytest.fixture
def crescent():
    return annulus_sector()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance verdicts ---------------------------------------------------

_VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _VERDICTS[mark.args[0]] = (mark.args[1], "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        title, verdict = _VERDICTS[number]
        terminalreporter.write_line(f"{verdict} criterion {number}: {title}")
