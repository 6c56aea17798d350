import random

import pytest
from hypothesis import given, strategies as st

from arnsim import approx, fxp, neuron as Nn, resonance
from arnsim.cli import ARN_DEMO_X, ARN_DEMO_XM, MLP_DEMO_W, MLP_DEMO_X
from arnsim.fxp import encode


def oracle_preactivation(xs, ws) -> int:
    """Sum of 16 products, each truncated to 12 fraction bits."""
    return sum((x.raw * w.raw) >> 12 for x, w in zip(xs, ws))


def demo_neuron(method="pwl", normalize=False):
    xms = [encode(v).value for v in ARN_DEMO_XM]
    return Nn.ArnNeuron16.uniform(xms, 2.42, 0.9, method, normalize)


class TestArnNode:
    def test_construction(self):
        with pytest.raises(ValueError):
            Nn.ArnNeuron16.uniform([0.1] * 15)
        params = [resonance.ResonatorParams(2.42, 0.1, k=1.0)] * 15
        params.append(resonance.ResonatorParams(2.42, 0.1, k=2.0))
        with pytest.raises(ValueError):
            Nn.ArnNeuron16(tuple(params))
        assert Nn.ArnNeuron16.uniform([0.0] * 16).gain == 0.25

    @pytest.mark.parametrize("method", ["pwl", "soi"])
    def test_peak(self, method):
        xm = [i / 20 for i in range(16)]
        n = Nn.ArnNeuron16.uniform([encode(v).value for v in xm], method=method)
        out = Nn.arn_forward(n, [encode(v) for v in xm])
        assert abs(out.y.raw - 0x1000) <= 2
        assert not out.overflow

    @pytest.mark.parametrize("method", ["pwl", "soi"])
    def test_demo_exact_rows(self, method):
        n = demo_neuron(method)
        xs = [encode(v) for v in ARN_DEMO_X]
        exact = Nn.arn_forward_exact(n, [x.value for x in xs])
        out = Nn.arn_forward(n, xs)
        assert exact == pytest.approx(3.8154, abs=2e-4)
        assert abs(out.y.value - exact) < 0.01
        assert out.total == out.y.raw
        assert out.total == sum(v.raw for v in out.resonator_outputs)

    def test_clock_accounting(self):
        n = demo_neuron(normalize=True)
        xs = [encode(v) for v in ARN_DEMO_X]
        out = Nn.arn_forward(n, xs)
        lut_clocks = []
        for x, p in zip(xs, n.params):
            d, _ = fxp.sub(fxp.Fx16(x.raw, True), encode(p.x_m, True))
            lut_clocks.append(approx.eval_fx(n.luts[p.rho], d).clocks)
        tree = fxp_tree_latency()
        unnorm = Nn.arn_forward(demo_neuron(), xs)
        assert unnorm.clocks == max(lut_clocks) + tree
        mul = fxp.serial_mul(unnorm.y, encode(n.gain)).clocks
        assert out.clocks == unnorm.clocks + mul

    @pytest.mark.parametrize("method", ["pwl", "soi"])
    def test_random_envelope(self, method):
        r = random.Random(5)
        for _ in range(100):
            xm = [r.random() for _ in range(16)]
            x = [min(max(m + r.uniform(-0.6, 0.6), 0.0), 1.5) for m in xm]
            n = Nn.ArnNeuron16.uniform(xm, method=method)
            xs = [encode(v) for v in x]
            out = Nn.arn_forward(n, xs)
            exact = Nn.arn_forward_exact(n, [v.value for v in xs])
            assert abs(out.y.value - exact) / exact <= 0.005

    def test_exact_path_is_aggregate(self):
        n = demo_neuron(normalize=True)
        assert Nn.arn_forward_exact(n, ARN_DEMO_X) == resonance.aggregate(
            list(ARN_DEMO_X), list(n.params))

    def test_monotone_rays_pwl(self):
        n = Nn.ArnNeuron16.uniform([0.5] * 16, normalize=False)
        base = encode(0.5).raw
        for i in (0, 7, 15):
            for sign in (1, -1):
                prev = None
                for q in range(0, 2 * 4096, 3):
                    xs = [encode(0.5)] * 16
                    xs[i] = fxp.ufx(base + sign * q) if base + sign * q >= 0 else fxp.ufx(0)
                    y = Nn.arn_forward(n, xs).y.raw
                    assert prev is None or y <= prev
                    prev = y

    def test_monotone_rays_soi_within_quantization(self):
        # SOI evaluates (a*x + b)*x + c with two truncated products; the
        # float LUT is monotone, the Fx16 path may step up by one LSB.
        n = Nn.ArnNeuron16.uniform([0.5] * 16, method="soi", normalize=False)
        base = encode(0.5).raw
        prev = None
        running_min = None
        for q in range(0, 2 * 4096):
            xs = [encode(0.5)] * 16
            xs[3] = fxp.ufx(base + q)
            y = Nn.arn_forward(n, xs).y.raw
            if prev is not None:
                assert y <= prev + 1
                assert y <= running_min + 1
            prev = y
            running_min = y if running_min is None else min(running_min, y)

    def test_input_count(self):
        with pytest.raises(ValueError):
            Nn.arn_forward(demo_neuron(), [encode(0.1)] * 3)


def fxp_tree_latency():
    return Nn._TREE.latency


class TestPerceptron:
    def test_demo_exact(self):
        pre, y = Nn.mlp_forward_exact(MLP_DEMO_W, MLP_DEMO_X)
        assert pre == pytest.approx(0.38151, abs=1e-4)
        assert y == pytest.approx(0.5942, abs=1e-3)

    @pytest.mark.parametrize("method", ["pwl", "soi"])
    def test_demo_fx(self, method):
        p = Nn.Perceptron16.from_floats(MLP_DEMO_W, method)
        xs = [encode(v) for v in MLP_DEMO_X]
        out = Nn.mlp_forward(p, xs)
        assert out.pre_activation.raw == oracle_preactivation(xs, p.weights)
        _, y = Nn.mlp_forward_exact(MLP_DEMO_W, MLP_DEMO_X)
        assert abs(out.y.value - y) < 0.04
        assert not out.overflow

    def test_zero_weights(self):
        p = Nn.Perceptron16.from_floats([0.0] * 16)
        out = Nn.mlp_forward(p, [encode(0.3)] * 16)
        assert out.pre_activation.raw == 0
        assert abs(out.y.raw - 0x0800) <= 1

    @given(st.lists(st.integers(0, 0x1FFF), min_size=16, max_size=16),
           st.lists(st.integers(0, 0x1FFF), min_size=16, max_size=16))
    def test_truncation_oracle(self, xr, wr):
        xs = [fxp.ufx(v) for v in xr]
        ws = [fxp.ufx(v) for v in wr]
        out = Nn.mlp_forward(Nn.Perceptron16(tuple(ws)), xs)
        expect = oracle_preactivation(xs, ws)
        assert out.pre_activation.raw == expect & 0xFFFF
        exact = sum(x.value * w.value for x, w in zip(xs, ws))
        if expect <= 0x7FFF:
            assert out.pre_activation.value <= exact
        else:
            assert out.overflow

    def test_rejects_signed(self):
        with pytest.raises(ValueError):
            Nn.Perceptron16(tuple([encode(0.1, True)] * 16))
        p = Nn.Perceptron16.from_floats([0.1] * 16)
        with pytest.raises(ValueError):
            Nn.mlp_forward(p, [encode(0.1, True)] * 16)


class TestThroughput:
    def test_reference_ratios(self):
        T = 17 * 1000
        assert Nn.throughput_compare(Nn.ThroughputScenario(32, 17, T)).serial_wins
        assert not Nn.throughput_compare(Nn.ThroughputScenario(12, 17, T)).serial_wins

    def test_boundary(self):
        t = Nn.throughput_compare(Nn.ThroughputScenario(17, 17, 17 * 500))
        assert t.serial_ops == t.parallel_ops
        assert not t.serial_wins

    @given(st.integers(1, 64), st.integers(1, 64))
    def test_lemma_large_T(self, ra, rt):
        T = ra * rt * 1000
        t = Nn.throughput_compare(Nn.ThroughputScenario(ra, rt, T))
        assert t.serial_wins == (ra > rt)

    def test_invalid(self):
        with pytest.raises(ValueError):
            Nn.ThroughputScenario(0, 1, 1)

    def test_table(self):
        rows = Nn.throughput_table([12, 20, 32], 17, [17, 170])
        assert rows[0] == (17, 17, 12, 20, 32)
        assert rows[1] == (170, 170, 120, 200, 320)
