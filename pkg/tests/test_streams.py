import numpy as np
import pytest

from aml5g.streams import as_rng, stream


def test_same_path_same_draws():
    assert np.array_equal(stream(3, "a", 1).random(5), stream(3, "a", 1).random(5))


def test_paths_are_distinct():
    draws = {tuple(stream(s, *k).random(3)) for s in (0, 1) for k in [(), ("a",), ("b",), ("a", 0), ("a", 1)]}
    assert len(draws) == 10


def test_negative_keys_rejected():
    with pytest.raises(ValueError):
        stream(-1)
    with pytest.raises(ValueError):
        stream(0, -2)
    with pytest.raises(TypeError):
        stream(0, 1.5)


def test_as_rng():
    g = np.random.default_rng(1)
    assert as_rng(g) is g
    assert as_rng(4).random() == np.random.default_rng(4).random()
    assert as_rng(None).random() == np.random.default_rng(0).random()
