import numpy as np
import pytest

from jumppath.rng import CounterRNG, normals_from_uniforms, philox4x32

# Known-answer vectors for Philox4x32-10 (Salmon et al. reference implementation).
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF, 0xFFFFFFFF), (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    (
        (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
        (0xA4093822, 0x299F31D0),
        (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
    ),
]


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_philox_known_answers(ctr, key, expected):
    out = philox4x32([np.uint64(c) for c in ctr], key)
    assert tuple(int(w) for w in out) == expected


def test_compiled_matches_reference():
    rng = CounterRNG(0xDEADBEEF12345678)
    reps = np.arange(50)
    steps = np.arange(50) * 7
    for tag, count in [(0, 1), (1, 4), (17, 5)]:
        a = rng.uniforms(reps, steps, tag, count)
        b = rng.uniforms_reference(reps, steps, tag, count)
        assert np.array_equal(a, b)


def test_open_unit_interval_and_moments():
    u = CounterRNG(1).uniforms(np.arange(20000), 3, 0, 5)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)


def test_streams_are_functions_of_the_counter():
    rng = CounterRNG(42)
    full = rng.uniforms(np.arange(10), 5, 0, 3)
    part = rng.uniforms(np.array([7, 3]), 5, 0, 3)
    assert np.array_equal(part, full[[7, 3]])
    assert not np.array_equal(CounterRNG(43).uniforms(np.arange(10), 5, 0, 3), full)
    assert not np.array_equal(rng.uniforms(np.arange(10), 6, 0, 3), full)


def test_seed_range():
    with pytest.raises(ValueError):
        CounterRNG(-1)
    with pytest.raises(ValueError):
        CounterRNG(2**64)


def test_generator_is_reproducible():
    a = CounterRNG(5).generator(3).random(4)
    b = CounterRNG(5).generator(3).random(4)
    c = CounterRNG(5).generator(4).random(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_box_muller_shape_and_moments():
    u = CounterRNG(9).uniforms(np.arange(50000), 0, 3, 4)
    z = normals_from_uniforms(u, 3)
    assert z.shape == (50000, 3)
    assert abs(z.mean()) < 0.02 and abs(z.std() - 1) < 0.02
