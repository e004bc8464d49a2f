import json
import math

import numpy as np
import pytest

from pi0cv.jsonio import dumps17


class TestDumps17:
    def test_roundtrips_nested_structures(self):
        payload = {
            "a": 0.1 + 0.2,
            "b": [1, 2.5, None, True, False],
            "c": {"nested": 1 / 3, "text": "x\"y"},
            "d": (4, 5),
        }
        loaded = json.loads(dumps17(payload))
        assert loaded["a"] == 0.1 + 0.2
        assert loaded["b"] == [1, 2.5, None, True, False]
        assert loaded["c"]["nested"] == 1 / 3
        assert loaded["c"]["text"] == 'x"y'
        assert loaded["d"] == [4, 5]

    def test_seventeen_digits_restore_doubles_exactly(self):
        rng = np.random.default_rng(0)
        for x in rng.random(200):
            assert json.loads(dumps17(float(x))) == x

    def test_numpy_scalars_and_arrays(self):
        out = json.loads(dumps17({"i": np.int64(3), "f": np.float64(0.25),
                                  "arr": np.array([1.5, 2.5]), "flag": np.bool_(True)}))
        assert out == {"i": 3, "f": 0.25, "arr": [1.5, 2.5], "flag": True}

    def test_non_finite_becomes_null(self):
        assert dumps17(float("nan")) == "null"
        assert dumps17(float("inf")) == "null"

    def test_rejects_unknown_types(self):
        with pytest.raises(TypeError):
            dumps17(object())

    def test_integers_stay_integers(self):
        assert dumps17({"k": 171700}) == '{"k": 171700}'

    def test_known_rendering(self):
        assert dumps17(3 / (5 * 0.7)) == format(3 / (5 * 0.7), ".17g")
        assert not math.isnan(json.loads(dumps17(1e-300)))
