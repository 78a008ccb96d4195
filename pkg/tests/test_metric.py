import numpy as np
import pytest

from packdim import (
    EmptySetError,
    FiniteMetricSpace,
    PackdimError,
    product,
    read_matrix_csv,
    read_point_cloud,
    section,
    write_matrix_csv,
    write_point_cloud,
)


def line(*xs):
    return FiniteMetricSpace.from_points(list(xs))


class TestProduct:
    def test_unit_square_corners(self):
        p = product(line(0, 1), line(0, 1))
        assert p.n == 4
        assert p.dist(p.pair(0, 0), p.pair(1, 1)) == 1.0

    def test_singleton_factor_is_isometric(self):
        x = line(0.0, 0.7, 2.0)
        p = product(x, line(5.0))
        for i in range(3):
            for j in range(3):
                assert p.dist(p.pair(i, 0), p.pair(j, 0)) == x.dist(i, j)

    def test_max_formula(self):
        p = product(line(0, 1, 3), line(0, 2))
        # (1,0) vs (3,2): max(|1-3|, |0-2|) = 2
        assert p.dist(p.pair(1, 0), p.pair(2, 1)) == 2.0

    def test_matrix_agrees_with_dist(self):
        rng = np.random.default_rng(5)
        x = FiniteMetricSpace.from_points(rng.random((4, 2)))
        y = FiniteMetricSpace.from_points(rng.random((3, 1)))
        p = product(x, y)
        m = p.matrix()
        for a in range(p.n):
            for b in range(p.n):
                assert m[a, b] == pytest.approx(p.dist(a, b), abs=0)

    def test_associative_up_to_repairing(self):
        rng = np.random.default_rng(1)
        x, y, z = (FiniteMetricSpace.from_points(rng.random((3, 1)))
                   for _ in range(3))
        left = product(product(x, y), z)
        right = product(x, product(y, z))
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for i2 in range(3):
                        a1 = left.pair(left.left.pair(i, j), k)
                        b1 = left.pair(left.left.pair(i2, j), k)
                        a2 = right.pair(i, right.right.pair(j, k))
                        b2 = right.pair(i2, right.right.pair(j, k))
                        assert left.dist(a1, b1) == right.dist(a2, b2)


class TestSection:
    def test_full_product(self):
        p = product(line(0, 1), line(0, 2, 5))
        e = set(range(p.n))
        assert section(p, e, 0) == {0, 1, 2}

    def test_diagonal(self):
        p = product(line(0, 1), line(0, 1))
        e = {p.pair(0, 0), p.pair(1, 1)}
        assert section(p, e, 0) == {0}

    def test_enumerated(self):
        p = product(line(0, 1), line(0, 2))
        e = {p.pair(0, 0), p.pair(0, 1), p.pair(1, 0)}
        assert section(p, e, 0) == {0, 1}
        assert section(p, e, 1) == {0}


class TestDiam:
    def test_singleton(self):
        assert line(3.0).diam() == 0.0

    def test_three_points(self):
        assert line(0, 1, 2).diam() == 2.0

    def test_square_corners_max_metric(self):
        pts = [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert FiniteMetricSpace.from_points(pts).diam() == 1.0

    def test_empty_errors(self):
        with pytest.raises(EmptySetError):
            line(0, 1).diam([])

    def test_subset(self):
        assert line(0, 1, 5).diam([0, 1]) == 1.0


class TestValidation:
    def test_triangle_violation(self):
        m = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
        with pytest.raises(PackdimError):
            FiniteMetricSpace.from_matrix(m)

    def test_asymmetric(self):
        m = [[0, 1], [2, 0]]
        with pytest.raises(PackdimError):
            FiniteMetricSpace.from_matrix(m)

    def test_duplicate_points(self):
        with pytest.raises(PackdimError):
            line(1.0, 1.0)

    def test_large_space_sampled(self):
        rng = np.random.default_rng(0)
        FiniteMetricSpace.from_points(rng.random((200, 2)))  # no raise


class TestFileFormats:
    def test_point_cloud_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        space = FiniteMetricSpace.from_points(rng.random((7, 3)))
        path = tmp_path / "cloud.csv"
        write_point_cloud(path, space)
        back = read_point_cloud(path)
        assert back.n == 7
        assert np.array_equal(back.embedding, space.embedding)

    def test_matrix_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        space = FiniteMetricSpace.from_points(rng.random((6, 2)))
        path = tmp_path / "m.csv"
        write_matrix_csv(path, space)
        back = read_matrix_csv(path)
        assert back.n == 6
        assert np.array_equal(back.matrix(), space.matrix())

    def test_header_count(self, tmp_path):
        space = line(0, 1, 2)
        path = tmp_path / "m.csv"
        write_matrix_csv(path, space)
        assert path.read_text().splitlines()[0] == "n=3"
