import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfuca.errors import ConfigError
from qfuca.geometry import (
    ArrayConfig,
    build_layout,
    element_position,
    flat_index,
    index_digits,
    layout_summary,
    merge_positions,
    positions,
    write_layout_csv,
)
from qfuca.presets import PRESETS


def cfg(counts, radii, **kw):
    return ArrayConfig(counts_tx=counts, radii_tx=radii, **kw)


def brute_position(counts, radii, digits, frame):
    """Independent loop over levels, outermost first, accumulating the frame rotation."""
    x = y = 0.0
    carried = 0.0
    N = len(counts)
    for pos, n in enumerate(range(N, 0, -1)):
        own = 2 * np.pi * digits[pos] / counts[n - 1]
        ang = own + carried if frame == "nested" else own
        if frame == "nested":
            carried = ang
        x += radii[n - 1] * np.cos(ang)
        y += radii[n - 1] * np.sin(ang)
    return np.array([x, y])


def test_single_ring_first_element():
    c = cfg((4,), (1.0,))
    np.testing.assert_allclose(element_position(c, (0,), "tx"), [1, 0, 0], atol=1e-15)


def test_zero_radii_rx_at_distance():
    c = cfg((3, 2), (0.0, 0.0), distance=100.0)
    for d in index_digits(c.counts_rx):
        np.testing.assert_array_equal(element_position(c, tuple(d), "rx"), [0, 0, 100])


def test_two_level_example_global_frame():
    c = cfg((2, 4), (3.0, 1.0), frame="global")
    np.testing.assert_allclose(element_position(c, (1, 1), "tx"), [-3, 1, 0], atol=1e-12)


def test_two_level_example_nested_frame():
    # the inner ring turns with its parent: inner azimuth pi + pi/2
    c = cfg((2, 4), (3.0, 1.0))
    np.testing.assert_allclose(element_position(c, (1, 1), "tx"), [0, -2, 0], atol=1e-12)


@pytest.mark.parametrize("frame", ["nested", "global"])
def test_positions_match_brute_sum(frame):
    counts, radii = (3, 4, 2), (0.3, 0.7, 1.9)
    c = cfg(counts, radii, frame=frame)
    P = positions(c, "tx")
    for i, d in enumerate(index_digits(counts)):
        np.testing.assert_allclose(P[i, :2], brute_position(counts, radii, d, frame), atol=1e-12)


def test_index_order_innermost_fastest():
    d = index_digits((3, 2))
    assert d.tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]
    assert flat_index((1, 2), (3, 2)) == 5
    with pytest.raises(IndexError):
        flat_index((2, 0), (3, 2))


def test_single_ring_layout():
    lay = build_layout(cfg((25,), (4.0,)))
    assert (lay.n_physical, lay.shared_count) == (25, 0)
    s = layout_summary(lay)
    assert (s.streams, s.physical, s.exceeds, s.radius) == (25, 25, False, 4.0)


def test_zero_tolerance_merges_only_duplicates():
    lay = build_layout(cfg((3, 3), (4.0, 4.0)), merge_tol=0.0)
    assert lay.shared_count == 0


def test_one_merged_pair_counts():
    pts = np.array([[0, 0, 0], [1, 0, 0], [1 + 1e-6, 0, 0], [5, 5, 0]], float)
    phys, mapping = merge_positions(pts, 1e-3)
    assert len(phys) == 3 and mapping.tolist() == [0, 1, 1, 2]


def pairwise_cluster_count(points, tol):
    """O(M^2) scan plus connected components; independent of the KD-tree path."""
    M = len(points)
    adj = np.linalg.norm(points[:, None] - points[None], axis=-1) <= tol
    seen = np.zeros(M, bool)
    count = 0
    for s in range(M):
        if seen[s]:
            continue
        count += 1
        stack = [s]
        while stack:
            i = stack.pop()
            if seen[i]:
                continue
            seen[i] = True
            stack.extend(np.flatnonzero(adj[i] & ~seen))
    return count


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_have_25_physical(name):
    c = PRESETS[name].config()
    lay = build_layout(c)
    assert lay.n_physical == 25
    assert lay.n_physical == pairwise_cluster_count(lay.positions, c.wavelength / 100)
    assert sum(c.radii_tx) == pytest.approx(4.0, abs=1e-12)


def test_four_level_preset_exceeds_physical():
    s = layout_summary(build_layout(PRESETS["4d-25"].config()))
    assert s.exceeds and s.streams == 256 and s.physical == 25


def test_layout_partition_and_multiplicity():
    lay = build_layout(PRESETS["3d-25"].config())
    assert lay.multiplicity().sum() == lay.n_logical
    np.testing.assert_allclose(
        lay.physical_elements[lay.logical_to_physical], lay.positions, atol=1e-3
    )


def test_dedup_idempotent():
    lay = build_layout(PRESETS["4d-25"].config())
    again, mapping = merge_positions(lay.physical_elements, PRESETS["4d-25"].config().wavelength / 100)
    np.testing.assert_array_equal(again, lay.physical_elements)
    assert mapping.tolist() == list(range(len(again)))


@pytest.mark.parametrize(
    "kw, field",
    [
        ({"counts_tx": (0,), "radii_tx": (1.0,)}, "counts_tx"),
        ({"counts_tx": (4,), "radii_tx": (-1.0,)}, "radii_tx"),
        ({"counts_tx": (4, 4), "radii_tx": (1.0,)}, "radii_tx"),
        ({"counts_tx": (4,), "radii_tx": (1.0,), "distance": 0.0}, "distance"),
        ({"counts_tx": (4,), "radii_tx": (1.0,), "carrier_freq": -1.0}, "carrier_freq"),
        ({"counts_tx": (4,), "radii_tx": (1.0,), "aggregate_radius": 2.0}, "radii_tx"),
        ({"counts_tx": (4,), "radii_tx": (1.0,), "counts_rx": (5,)}, "symmetric"),
        ({"counts_tx": (4,), "radii_tx": (1.0,), "frame": "polar"}, "frame"),
    ],
)
def test_config_validation_names_field(kw, field):
    with pytest.raises(ConfigError) as exc:
        ArrayConfig(**kw)
    assert exc.value.field == field


def test_asymmetric_allowed_when_not_symmetric():
    c = ArrayConfig((4,), (1.0,), counts_rx=(4,), radii_rx=(2.0,), symmetric=False)
    assert c.radius_rx == 2.0


def test_layout_csv(tmp_path):
    lay = build_layout(PRESETS["2d-5x5"].config())
    write_layout_csv(lay, tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "k2,k1,x_m,y_m,z_m,physical_id"
    assert len(lines) == 26


counts_st = st.lists(st.integers(1, 5), min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(counts_st, st.data())
def test_top_shift_is_rotation(counts, data):
    radii = data.draw(st.lists(st.floats(0, 3), min_size=len(counts), max_size=len(counts)))
    c = cfg(counts, radii)
    K = counts[-1]
    a = 2 * np.pi / K
    rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    for d in index_digits(counts):
        s = d.copy()
        s[0] = (s[0] + 1) % K
        p = element_position(c, tuple(d), "tx")[:2]
        q = element_position(c, tuple(s), "tx")[:2]
        np.testing.assert_allclose(rot @ p, q, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(counts_st, st.data())
def test_layout_invariants(counts, data):
    radii = data.draw(st.lists(st.floats(0, 3), min_size=len(counts), max_size=len(counts)))
    lay = build_layout(cfg(counts, radii))
    assert lay.n_logical == int(np.prod(counts))
    assert 1 <= lay.n_physical <= lay.n_logical
    assert lay.shared_count == lay.n_logical - lay.n_physical
    assert lay.logical_to_physical.min() == 0 and lay.logical_to_physical.max() == lay.n_physical - 1
