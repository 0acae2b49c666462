import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from veingrow import CentroidnessTargets, VeinMaskEncoder
from veingrow.codec import VeinTree
from veingrow.exceptions import DegenerateGeometry
from veingrow.estimator import check_polygon, check_polygons
from veingrow.geometry import Polygon
from veingrow.ingest import synthesize_shape, synthetic_corpus


@pytest.fixture(scope="module")
def shapes():
    return [synthesize_shape("circle"), synthesize_shape("notched_square")]


def test_check_polygon_accepts_arrays():
    p = check_polygon([[0, 0], [4, 0], [4, 4]])
    assert isinstance(p, Polygon) and len(p) == 3


def test_check_polygon_rejects_invalid():
    with pytest.raises(DegenerateGeometry):
        check_polygon([[0, 0], [4, 4], [4, 0], [0, 4]])


def test_check_polygons_rejects_single(square):
    with pytest.raises(ValueError):
        check_polygons(square)
    with pytest.raises(ValueError):
        check_polygons(np.zeros((4, 2)))


class TestEncoder:
    def test_params_and_clone(self):
        enc = VeinMaskEncoder(n_directions=12, depth=2)
        assert enc.get_params()["n_directions"] == 12
        twin = clone(enc)
        assert twin.get_params() == enc.get_params() and twin is not enc

    def test_not_fitted(self, shapes):
        with pytest.raises(NotFittedError):
            VeinMaskEncoder().transform(shapes)

    @pytest.mark.parametrize("params", [{"n_directions": 2}, {"depth": 0}, {"supersample": 3}, {"n_directions": 8.5}])
    def test_bad_params(self, params):
        with pytest.raises(ValueError):
            VeinMaskEncoder(**params).fit()

    def test_transform_and_inverse(self, shapes):
        enc = VeinMaskEncoder(n_directions=16, use_minor=False).fit(shapes)
        trees = enc.transform(shapes)
        assert all(isinstance(t, VeinTree) for t in trees)
        back = enc.inverse_transform(trees)
        assert len(back[0]) == 16

    def test_circle_score(self, shapes):
        enc = VeinMaskEncoder(n_directions=8, use_minor=False).fit()
        want = 8 * math.sin(2 * math.pi / 8) / (2 * math.pi)
        assert enc.score(shapes[:1]) == pytest.approx(want, abs=0.01)

    def test_minor_helps_on_notch(self, shapes):
        major = VeinMaskEncoder(use_minor=False).fit().score(shapes[1:])
        vein = VeinMaskEncoder(use_minor=True).fit().score(shapes[1:])
        assert vein > major

    def test_parallel_matches_serial(self):
        polys = [r.polygon for r in synthetic_corpus(6, seed=2)]
        a = VeinMaskEncoder(n_jobs=1).fit().cover_ratios(polys)
        b = VeinMaskEncoder(n_jobs=2).fit().cover_ratios(polys)
        assert np.array_equal(a, b)

    def test_set_params(self):
        enc = VeinMaskEncoder().set_params(n_directions=24)
        assert enc.fit().config_.n == 24


class TestTargets:
    @pytest.mark.parametrize("kind", ["centroidness", "fcos", "polarmask"])
    def test_kinds(self, square, kind):
        maps = CentroidnessTargets(kind=kind).fit().transform([square])
        v = maps[0].values
        assert v.shape == (6, 6)
        assert 0 <= v.min() and v.max() <= 1

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            CentroidnessTargets(kind="gaussian").fit()

    def test_clone(self):
        t = CentroidnessTargets(kind="fcos", margin=3)
        assert clone(t).get_params() == t.get_params()

    def test_fit_transform(self, square):
        out = CentroidnessTargets().fit_transform([square])
        assert out[0].values.max() == 1.0
