import numpy as np

from potdep.rng import derive_seed, stream


def test_streams_are_keyed() -> None:
    a = stream(5, 1, 2).random(8)
    np.testing.assert_array_equal(a, stream(5, 1, 2).random(8))
    assert not np.array_equal(a, stream(5, 2, 1).random(8))
    assert not np.array_equal(a, stream(6, 1, 2).random(8))


def test_stream_ignores_draw_order() -> None:
    stream(0, 1).random(1000)
    late = stream(0, 2).random(4)
    np.testing.assert_array_equal(late, stream(0, 2).random(4))


def test_derive_seed() -> None:
    seed = derive_seed(3, 1)
    assert seed == derive_seed(3, 1)
    assert seed != derive_seed(3, 2)
    assert 0 <= seed < 2**63
