import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arnsim import arnnet as N
from arnsim import dataio, resonance
from arnsim.arnnet import ArnConfig, L1Node, L2Node


def const_tile(v):
    return np.full(N.TILE_PIXELS, v)


def quant(a):
    return np.rint(np.asarray(a) * 255) / 255


images28 = st.lists(st.integers(0, 255), min_size=784, max_size=784).map(
    lambda v: np.asarray(v, dtype=float).reshape(28, 28) / 255)


@pytest.fixture(scope="module")
def small(mnist5k):
    sub = dataio.sample(mnist5k, dataio.SampleSpec(20, seed=3))
    return sub.normalized(), sub.labels


@pytest.fixture(scope="module")
def small_model(small):
    return N.train(*small, ArnConfig())


class TestTiling:
    def test_first_tile(self):
        img = np.arange(784, dtype=float).reshape(28, 28) / 784
        t = N.tile_image(img)
        assert t.shape == (16, 49)
        assert np.array_equal(t[0], img[:7, :7].ravel())
        assert np.array_equal(t[5], img[7:14, 7:14].ravel())
        assert np.array_equal(t[15], img[21:, 21:].ravel())

    def test_constant(self):
        t = N.tile_image(np.full((28, 28), 0.3))
        assert np.all(t == 0.3)

    @settings(max_examples=30)
    @given(images28)
    def test_untile_inverse(self, img):
        assert np.array_equal(N.untile(N.tile_image(img)), img)

    @settings(max_examples=30)
    @given(images28)
    def test_reverse_order_is_half_turn(self, img):
        t = N.tile_image(img)
        r = N.tile_image(np.rot90(img, 2))
        for j in range(16):
            assert np.array_equal(r[j], t[15 - j][::-1])

    def test_shape_error(self):
        with pytest.raises(ValueError):
            N.tile_image(np.zeros((28, 27)))


class TestLayerOne:
    def test_empty_is_miss(self):
        assert N.l1_match([], const_tile(0.2)) is None

    def test_peak_wins(self):
        nodes = [L1Node(1, tuple(const_tile(0.1)), 2.42, 0.9),
                 L1Node(2, tuple(const_tile(0.6)), 2.42, 0.9)]
        assert N.l1_match(nodes, const_tile(0.6)) == 2
        layer = N._as_layer(nodes)
        assert layer.outputs(const_tile(0.6))[1] == 1.0

    def test_tie_lowest_index(self):
        nodes = [L1Node(i, tuple(const_tile(0.4)), 2.42, 0.9) for i in (1, 2, 3)]
        assert N.l1_match(nodes, const_tile(0.45)) == 1

    def test_threshold_and_rho_override(self):
        nodes = [L1Node(1, tuple(const_tile(0.0)), 2.42, 0.9)]
        far = const_tile(0.6)
        assert N.l1_match(nodes, far) is None
        assert N.l1_match(nodes, far, rho=0.5) == 1
        assert N.l1_match(nodes, far, T=0.5) == 1

    def test_fast_path_matches_formula(self):
        rng = np.random.default_rng(0)
        layer = N.Layer1()
        res = quant(rng.random((30, 49)))
        for r in res:
            layer.add(r, 2.42, 0.9)
        assert layer.quantized
        for _ in range(20):
            tile = quant(rng.random(49))
            fast = layer.outputs(tile)
            ref = [N.node_output(r, tile, 2.42) for r in res]
            assert np.allclose(fast, ref, rtol=0, atol=1e-13)

    def test_unquantized_store(self):
        layer = N.Layer1()
        layer.add(const_tile(0.123456), 2.42, 0.9)
        assert not layer.quantized
        assert layer.outputs(const_tile(0.123456))[0] == 1.0

    def test_two_input_illustration(self):
        # six stored loci; the input {0.45, 0.29} resonates most strongly with
        # the node tuned to {0.56, 0.32}, the last one created
        loci = [(0.14, 0.34), (0.5, 0.78), (0.98, 0.67), (0.34, 0.54), (0.23, 0.57), (0.56, 0.32)]
        for rho in (2.42, 5.0, 10.0):
            out = [resonance.aggregate([0.45, 0.29], [resonance.ResonatorParams(rho, m) for m in n])
                   for n in loci]
            assert int(np.argmax(out)) == 5
            T = (sorted(out)[-2] + out[5]) / 2
            assert [i for i, o in enumerate(out) if o > T] == [5]


class TestAppendOnly:
    def test_outputs_unchanged(self):
        rng = np.random.default_rng(4)
        layer = N.Layer1()
        for _ in range(40):
            layer.add(quant(rng.random(49)), 2.42, 0.9)
        probes = quant(rng.random((200, 49)))
        before = np.stack([layer.outputs(p) for p in probes])
        for _ in range(5):
            layer.add(quant(rng.random(49)), 3.0, 0.8)
        after = np.stack([layer.outputs(p)[:40] for p in probes])
        assert np.array_equal(before, after)

    def test_mixed_store(self):
        # appending a node off the 1/255 grid must not disturb table-path nodes
        rng = np.random.default_rng(8)
        layer = N.Layer1()
        for _ in range(10):
            layer.add(quant(rng.random(49)), 2.42, 0.9)
        probe = quant(rng.random(49))
        before = layer.outputs(probe)
        layer.add(rng.random(49), 2.42, 0.9)
        assert not layer.quantized
        assert np.array_equal(layer.outputs(probe)[:10], before)

    def test_with_l1_node(self, small_model):
        new = N.with_l1_node(small_model, const_tile(0.5))
        assert new.n_l1 == small_model.n_l1 + 1
        assert small_model.n_l1 == new.n_l1 - 1
        t = const_tile(0.2)
        assert np.array_equal(new.l1_outputs(t)[:-1], small_model.l1_outputs(t))


class TestTraining:
    def test_label_range(self):
        with pytest.raises(ValueError):
            N.train(np.zeros((1, 28, 28)), [10])

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            N.train(np.zeros((2, 28, 28)), [1])
        with pytest.raises(ValueError):
            N.train(np.zeros((1, 27, 28)), [1])

    def test_same_image_twice(self, small):
        imgs, labels = small
        once = N.train(imgs[:1], labels[:1])
        twice = N.train(np.stack([imgs[0], imgs[0]]), [labels[0]] * 2)
        assert once.n_l1 == twice.n_l1
        assert once.n_l2 == twice.n_l2 == 1

    def test_indices_start_at_one(self, small_model):
        assert small_model.patterns.min() >= 1
        assert [n.index for n in small_model.layer1[:3]] == [1, 2, 3]

    def test_threshold_trend(self, small):
        imgs, labels = small
        counts = [N.train(imgs, labels, ArnConfig(T=T)).n_l1 for T in (0.85, 0.9, 0.95)]
        assert counts[0] < counts[1] < counts[2]

    def test_deterministic(self, small):
        assert N.train(*small) == N.train(*small)

    def test_online_variant(self, small):
        m = N.train(*small, ArnConfig(l2_patterns="online"))
        f = N.train(*small, ArnConfig())
        assert m.n_l1 == f.n_l1

    def test_perturbed_training_grows(self, small):
        imgs, labels = small
        base = N.train(imgs[:30], labels[:30])
        aug = N.train(imgs[:30], labels[:30], ArnConfig(perturb=N.STANDARD_PERTURB))
        assert aug.n_l1 >= base.n_l1


class TestClassify:
    def test_training_set_memorized(self, small, small_model):
        imgs, labels = small
        for img, y in zip(imgs, labels):
            v = N.classify(small_model, img)
            assert v.kind == N.SINGLE and v.label == y
            assert v.winners[0].output >= small_model.config.T2

    def test_replay(self, small, small_model):
        imgs, _ = small
        for img in imgs[::17]:
            v = N.classify(small_model, img)
            pattern, l2 = v.path
            r = N.replay(small_model, pattern)
            assert (r.kind, r.label, r.path) == (v.kind, v.label, v.path)
            assert all(1 <= k <= small_model.n_l2 for k in l2)

    def test_miss_maps_to_zero(self):
        l1 = [L1Node(1, tuple(const_tile(0.0)), 2.42, 0.9)]
        m = N.build_model(ArnConfig(), l1, [L2Node(1, (1,) * 16, 4, 2.42, 0.9)])
        img = np.zeros((28, 28))
        img[:7, :7] = 1.0
        pat = N.l1_pattern(m, img)
        assert pat[0] == N.MISS and np.all(pat[1:] == 1)
        v = N.classify(m, img)
        assert v.label == 4 and v.winners[0].output == 15 / 16

    def test_all_miss_is_none(self):
        l1 = [L1Node(1, tuple(const_tile(0.0)), 2.42, 0.9)]
        m = N.build_model(ArnConfig(), l1, [L2Node(1, (1,) * 16, 4, 2.42, 0.9)])
        assert N.classify(m, np.ones((28, 28))).kind == N.NONE

    def test_no_masking(self, small_model):
        # faint pixels change the node outputs; they are not zeroed out
        t0 = np.zeros(49)
        t1 = t0.copy()
        t1[:10] = 3 / 255
        assert not np.array_equal(small_model.l1_outputs(t0), small_model.l1_outputs(t1))

    def test_empty_model(self):
        m = N.build_model(ArnConfig(), [], [])
        with pytest.raises(ValueError):
            N.classify(m, np.zeros((28, 28)))

    def test_confusion_rows(self, small, small_model):
        imgs, labels = small
        res = N.confusion_matrix(small_model, imgs, labels)
        assert np.allclose(res.matrix.sum(axis=1), 20)
        assert np.array_equal(res.matrix, np.diag(np.full(10, 20.0)))
        assert res.accuracy == 1.0
        lines = res.to_csv().splitlines()
        assert lines[0].startswith("true,0,1") and lines[1].endswith(",20")


def tie_model():
    l1 = [L1Node(1, tuple(const_tile(0.5)), 2.42, 0.9),
          L1Node(2, tuple(const_tile(0.3)), 2.42, 0.9),
          L1Node(3, tuple(const_tile(0.8)), 2.42, 0.9)]
    l2 = [L2Node(1, (1,) * 8 + (3,) * 8, 5, 2.42, 0.9),
          L2Node(2, (1,) * 8 + (2,) * 8, 3, 2.42, 0.9)]
    return N.build_model(ArnConfig(), l1, l2)


class TestAmbiguity:
    def test_constructed_tie(self):
        m = tie_model()
        img = np.full((28, 28), 0.5)
        v = N.classify(m, img)
        assert v.kind == N.MULTIPLE and v.labels == (3, 5)
        tiles = N.tile_image(img)
        near = N.relaxed_output(m, 2, tiles, 0.05)
        far = N.relaxed_output(m, 1, tiles, 0.05)
        assert near > far
        r = N.resolve_ambiguity(m, v, "relax-rho", 0.05)
        assert r.kind == N.SINGLE and r.label == 3 and r.resolved
        assert N.classify(m, img, policy="relax-rho").label == 3

    def test_delta_zero_and_report(self):
        m = tie_model()
        v = N.classify(m, np.full((28, 28), 0.5))
        assert N.resolve_ambiguity(m, v, "relax-rho", 0.0) is v
        assert N.resolve_ambiguity(m, v, "report") is v

    def test_single_untouched(self, small, small_model):
        v = N.classify(small_model, small[0][0])
        assert N.resolve_ambiguity(small_model, v) is v

    def test_bad_policy(self):
        m = tie_model()
        v = N.classify(m, np.full((28, 28), 0.5))
        with pytest.raises(ValueError):
            N.resolve_ambiguity(m, v, "vote")

    def test_fractional_confusion(self):
        m = tie_model()
        res = N.confusion_matrix(m, [np.full((28, 28), 0.5)], [3])
        assert res.matrix[3, 3] == 0.5 and res.matrix[3, 5] == 0.5
        assert res.counts["multiple"] == 1


class TestModelChecks:
    def test_dangling_reference(self):
        l1 = [L1Node(1, tuple(const_tile(0.5)), 2.42, 0.9)]
        with pytest.raises(ValueError):
            N.build_model(ArnConfig(), l1, [L2Node(1, (2,) * 16, 0, 2.42, 0.9)])

    def test_order_and_label(self):
        l1 = [L1Node(2, tuple(const_tile(0.5)), 2.42, 0.9)]
        with pytest.raises(ValueError):
            N.build_model(ArnConfig(), l1, [])
        l1 = [L1Node(1, tuple(const_tile(0.5)), 2.42, 0.9)]
        with pytest.raises(ValueError):
            N.build_model(ArnConfig(), l1, [L2Node(1, (1,) * 16, 11, 2.42, 0.9)])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ArnConfig(rho=0)
        with pytest.raises(ValueError):
            ArnConfig(T=1.0)
        with pytest.raises(ValueError):
            ArnConfig(l2_patterns="lazy")


class TestPerturb:
    @settings(max_examples=20)
    @given(images28)
    def test_identity(self, img):
        assert np.array_equal(N.rotate_nn(img, 0), img)
        assert np.array_equal(N.translate(img, 0, 0), img)

    @settings(max_examples=20)
    @given(images28)
    def test_translate_inverse(self, img):
        back = N.translate(N.translate(img, 0, 1), 0, -1)
        assert np.array_equal(back[:, :27], img[:, :27])
        assert np.all(back[:, 27] == 0)
        back = N.translate(N.translate(img, 1, 0), -1, 0)
        assert np.array_equal(back[:27], img[:27])

    @settings(max_examples=10)
    @given(images28)
    def test_quarter_turn(self, img):
        assert np.array_equal(N.rotate_nn(img, 90), np.rot90(img))

    def test_small_rotation_moves_pixels(self):
        img = np.zeros((28, 28))
        img[2, 13] = 1.0
        out = N.rotate_nn(img, 10)
        assert out.sum() >= 1 and out[2, 13] == 0

    def test_spec_limits(self):
        with pytest.raises(ValueError):
            N.PerturbSpec(rotations=(20.0,))
        with pytest.raises(ValueError):
            N.PerturbSpec(translations=((2, 0),))

    def test_spec_text(self):
        s = N.STANDARD_PERTURB
        assert N.PerturbSpec.parse(s.describe()) == s
        assert N.PerturbSpec.parse("none") == N.PerturbSpec()
        assert len(N.perturb(np.zeros((28, 28)), s)) == s.count == 6


class TestRetune:
    def test_retune_keeps_structure(self, small, small_model):
        m = N.retune_layer1(small_model, small[0])
        assert m.n_l1 == small_model.n_l1
        rhos = np.array([n.rho for n in m.layer1])
        assert np.all((rhos >= 0.5) & (rhos <= 10))

    def test_coverage(self):
        c = N.coverage_of(L1Node(1, tuple(const_tile(0.5)), 2.42, 0.9))
        assert len(c) == 49 and c[0].center == pytest.approx(0.5)
