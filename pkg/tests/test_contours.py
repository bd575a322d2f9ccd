import itertools

import pytest

from dilutegas import (
    ContourCatalog,
    ContourSet,
    ContourShape,
    NotRealizable,
    confined_contours,
    contours_to_spins,
    edge,
    enumerate_contours,
    enumerate_contours_by_regions,
    is_contour,
    load_or_build_catalog,
    normalize,
    spins_to_contours,
)

UNIT = frozenset([edge((0, 0), (1, 0)), edge((0, 0), (0, 1)), edge((1, 0), (1, 1)), edge((0, 1), (1, 1))])


@pytest.fixture(scope="module")
def catalog12():
    return enumerate_contours(12)


def test_small_counts(catalog12):
    counts = catalog12.counts
    assert [counts[l] for l in range(1, 13)] == [0, 0, 0, 1, 0, 2, 0, 9, 0, 36, 0, 170]


def test_two_enumerators_agree(catalog12):
    other = enumerate_contours_by_regions(12)
    for l in range(4, 13):
        assert set(catalog12.by_length.get(l, [])) == set(other.by_length.get(l, []))


def test_every_catalog_shape_is_a_rooted_contour(catalog12):
    for s in catalog12.shapes():
        assert is_contour(s.edges)
        assert min(s.vertices) == (0, 0)


def test_shape_normalization_and_encoding():
    root, shape = normalize([((a[0] + 3, a[1] - 2), (b[0] + 3, b[1] - 2)) for a, b in UNIT])
    assert root == (3, -2) and shape.length == 4
    assert ContourShape.decode(shape.encode()) == shape
    assert shape.at(root) == frozenset(((a[0] + 3, a[1] - 2), (b[0] + 3, b[1] - 2)) for a, b in UNIT)


def test_catalog_cache(tmp_path):
    built = load_or_build_catalog(8, str(tmp_path))
    cached = load_or_build_catalog(8, str(tmp_path))
    assert built.counts == cached.counts
    assert ContourCatalog.from_json(built.to_json()).by_length == built.by_length


def test_all_plus_has_no_contours():
    assert spins_to_contours([[1] * 3 for _ in range(3)]).contours == ()
    assert contours_to_spins(ContourSet((), 3)) == [[1] * 3 for _ in range(3)]


def test_single_minus_spin():
    sigma = [[1, 1, 1], [1, -1, 1], [1, 1, 1]]
    cs = spins_to_contours(sigma)
    assert [len(c) for c in cs.contours] == [4]
    assert normalize(cs.contours[0]) == ((0, 0), ContourShape(UNIT))


def test_domino_of_minus_spins():
    sigma = [[-1, -1], [1, 1]]
    assert [len(c) for c in spins_to_contours(sigma).contours] == [6]


def test_round_trip_on_3x3():
    for bits in itertools.product((1, -1), repeat=9):
        sigma = [list(bits[i * 3:(i + 1) * 3]) for i in range(3)]
        assert contours_to_spins(spins_to_contours(sigma)) == sigma


def test_unrealizable_inputs():
    with pytest.raises(NotRealizable):
        contours_to_spins([frozenset([edge((0, 0), (1, 0))])], 3)
    with pytest.raises(NotRealizable):
        contours_to_spins([UNIT, UNIT], 3)
    far = frozenset((((a[0] + 5, a[1]), (b[0] + 5, b[1])) for a, b in UNIT))
    with pytest.raises(NotRealizable):
        contours_to_spins([far], 3)


def test_confined_contours_of_single_site():
    local = confined_contours(1)
    assert list(local) == [(-1, -1)]
    assert [s.length for s in local[(-1, -1)]] == [4]
