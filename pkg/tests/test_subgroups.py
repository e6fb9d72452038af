import numpy as np
import pytest

from carnot.algebra import ConfigurationError, preset_group
from carnot.subgroups import (ComplementaryPair, coset_volume_check, is_normal,
                              is_subgroup, split, subspace_from_dict,
                              subspace_from_signature_reference,
                              subspace_from_vectors)


@pytest.fixture(scope="module")
def g():
    return preset_group("heisenberg1")


class TestSubspaces:
    def test_vertical_plane(self, g):
        V = subspace_from_vectors(g, [[0, 1, 0], [0, 0, 1]])
        assert V.signature == (1, 1)
        assert V.n == 2
        assert V.hausdorff_dimension() == 3
        assert V.contains([0.0, 2.0, -1.0])
        assert not V.contains([0.1, 2.0, -1.0])

    def test_mixed_layer_span_rejected(self, g):
        with pytest.raises(ConfigurationError, match="mixes layers"):
            subspace_from_vectors(g, [[1.0, 0.0, 1.0]])

    def test_reference_subspace(self, g):
        V = subspace_from_signature_reference(g, (1, 1))
        np.testing.assert_allclose(V.ambient_basis[:, 0], [1, 0, 0])
        np.testing.assert_allclose(V.ambient_basis[:, 1], [0, 0, 1])
        with pytest.raises(ConfigurationError, match="exceeds"):
            subspace_from_signature_reference(g, (3, 0))

    def test_embed_coords_roundtrip(self, g):
        V = subspace_from_vectors(g, [[0, 1, 0], [0, 0, 1]])
        c = np.array([[0.5, -2.0], [1.0, 0.0]])
        np.testing.assert_allclose(V.coords(V.embed(c)), c, atol=1e-14)

    def test_presets(self, g):
        assert subspace_from_dict(g, "center").signature == (0, 1)
        assert subspace_from_dict(g, "vertical_plane_x0").signature == (1, 1)
        assert subspace_from_dict(g, "horizontal_x_axis").signature == (1, 0)
        with pytest.raises(ConfigurationError, match="preset"):
            subspace_from_dict(g, "nope")


class TestSubgroupPredicates:
    def test_vertical_plane_is_normal_subgroup(self, g):
        W = subspace_from_vectors(g, [[0, 1, 0], [0, 0, 1]])
        assert is_subgroup(W)
        assert is_normal(W)

    def test_horizontal_plane_not_subgroup(self, g):
        V = subspace_from_vectors(g, [[1, 0, 0], [0, 1, 0]])
        assert not is_subgroup(V)

    def test_horizontal_line_subgroup_not_normal(self, g):
        V = subspace_from_vectors(g, [[1, 0, 0]])
        assert is_subgroup(V)
        assert not is_normal(V)

    def test_center_is_normal(self, g):
        Z = subspace_from_vectors(g, [[0, 0, 1]])
        assert is_subgroup(Z) and is_normal(Z)


class TestSplitting:
    def pair(self, g):
        W = subspace_from_vectors(g, [[0, 1, 0], [0, 0, 1]])
        V = subspace_from_vectors(g, [[1, 0, 0]])
        return ComplementaryPair(W=W, V=V)

    def test_split_closed_form(self, g):
        # x = (2,3,4) = v*w with v = (2,0,0), w = (0,3,1): t part 4 - 2*3/2
        pair = self.pair(g)
        v, w = split(pair, g.point(2.0, 3.0, 4.0))
        np.testing.assert_allclose(v, [2.0, 0.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(w, [0.0, 3.0, 1.0], atol=1e-14)

    def test_split_reassembles(self, g):
        pair = self.pair(g)
        rng = np.random.default_rng(2)
        for x in rng.uniform(-2, 2, size=(20, 3)):
            v, w = split(pair, x)
            assert pair.V.contains(v) and pair.W.contains(w)
            np.testing.assert_allclose(g.multiply(v, w), x, atol=1e-12)

    def test_invalid_pairs_rejected(self, g):
        W = subspace_from_vectors(g, [[0, 1, 0], [0, 0, 1]])
        with pytest.raises(ConfigurationError, match="intersect|equal q"):
            ComplementaryPair(W=W, V=subspace_from_vectors(g, [[0, 1, 0]]))
        # W = horizontal line is a subgroup but not normal
        Vbig = subspace_from_vectors(g, [[0, 1, 0], [0, 0, 1]])
        Wline = subspace_from_vectors(g, [[1, 0, 0]])
        with pytest.raises(ConfigurationError, match="normal"):
            ComplementaryPair(W=Wline, V=Vbig)

    def test_coset_volume_invariance(self, g):
        pair = self.pair(g)
        before, after = coset_volume_check(pair, g.point(0.7, -0.3, 0.2),
                                           [(-1.0, 1.0), (-0.5, 0.5)])
        assert before == pytest.approx(2.0)
        assert after == pytest.approx(before, rel=1e-6)
