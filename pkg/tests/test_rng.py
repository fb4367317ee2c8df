from __future__ import annotations

import numpy as np

from frms.rng import keyed_normal, keyed_uniform, keyed_uint64, stream_id


def test_pure_function_of_seed_stream_key():
    keys = np.array([[0, 0], [1, 1], [-3, 7]])
    a = keyed_uint64([1, 2], keys, 5)
    b = keyed_uint64([1, 2], keys[::-1], 5)
    assert np.array_equal(a, b[:, ::-1])
    assert not np.array_equal(a[0], a[1])
    assert not np.array_equal(keyed_uint64([1], keys, 6), a[:1])


def test_uniform_and_normal_moments():
    keys = np.arange(200_000)[:, None]
    u = keyed_uniform([0], keys, stream_id("test/u"))[0]
    assert 0 < u.min() and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / len(u))
    z = keyed_normal([0], keys, stream_id("test/z"))[0]
    assert abs(z.mean()) < 4 / np.sqrt(len(z))
    assert abs(z.var() - 1) < 4 * np.sqrt(2 / len(z))


def test_stream_id_stable():
    assert stream_id("ma/innovation") == stream_id("ma/innovation")
    assert stream_id("a") != stream_id("b")
