"""Batch command-line front end.

Every command writes its reports under ``--out`` and prints a short summary.
The exit status is 0 on success, 1 when a built-in oracle check fails and 2
for usage or file errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import approx, arnnet, dataio, fxp, moadder, neuron
from .arnnet import ArnConfig, PerturbSpec

ARN_DEMO_X = (0.5, 0.2, 0.33, 0.78, 0.14, 0.26, 0.2, 0.56,
             0.34, 0.9, 0.59, 0.7, 0.5, 0.66, 0.94, 0.86)
ARN_DEMO_XM = (0.25, 0.15, 0.13, 0.5, 0.05, 0.21, 0.1, 0.43,
              0.2, 0.7, 0.4, 0.35, 0.23, 0.61, 0.82, 0.77)
MLP_DEMO_X = (0.09, 0.15, 0.12, 0.05, 0.009, 0.123, 0.087, 0.201,
             0.05, 0.15, 0.27, 0.02, 0.1, 0.07, 0.054, 0.18)
MLP_DEMO_W = (0.1, 0.01, 0.2, 0.5, 0.16, 0.21, 0.19, 0.09,
             0.25, 0.02, 0.12, 0.26, 0.36, 0.6, 0.29, 0.63)


class UsageError(Exception):
    pass


def _threshold(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"threshold must lie in (0, 1), got {v}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"size must be at least 1, got {v}")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"value must be positive, got {v}")
    return v


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(text, encoding="ascii")
    return p


# ------------------------------------------------------------------ train/test


def _load(args) -> dataio.Dataset:
    return dataio.load_dataset(args.data, args.labels)


def cmd_train(args) -> int:
    ds = _load(args)
    idx = dataio.sample_indices(ds, dataio.SampleSpec(args.train_size, args.seed, "train"))
    sub = ds.subset(idx)
    cfg = ArnConfig(rho=args.rho, T=args.threshold, rho2=args.rho2, T2=args.threshold2,
                    train_size=args.train_size, seed=args.seed, method=args.method,
                    perturb=PerturbSpec.parse(args.perturb), l2_patterns=args.l2_patterns)
    model = arnnet.train(sub.normalized(), sub.labels, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.save_model(model, out / "model.arn", exact_hex=args.hex)
    summary = (
        f"training size: {args.train_size}x10\n"
        f"rho: {args.rho:g}\nT: {args.threshold:g}\n"
        f"L1 nodes: {model.n_l1}\nL2 nodes: {model.n_l2}\n"
    )
    _write(out, "node_counts.txt", summary)
    print(f"L1 nodes: {model.n_l1}")
    print(f"L2 nodes: {model.n_l2}")
    return 0


def cmd_test(args) -> int:
    model = dataio.load_model(args.model)
    ds = _load(args)
    exclude: np.ndarray | tuple = ()
    if args.same_pool:
        c = model.config
        if c.train_size < 1:
            raise UsageError("--same-pool needs a model that records its training size")
        exclude = dataio.sample_indices(ds, dataio.SampleSpec(c.train_size, c.seed, "train"))
    idx = dataio.sample_indices(ds, dataio.SampleSpec(args.test_size, args.seed + 1, "test"),
                                exclude=exclude)
    sub = ds.subset(idx)
    res = arnnet.confusion_matrix(model, sub.normalized(), sub.labels, args.policy, args.delta)
    out = Path(args.out)
    _write(out, "confusion.csv", res.to_csv())
    n = res.n
    acc_text = (
        f"test size: {args.test_size}x10\n"
        f"policy: {args.policy}\n"
        f"accuracy: {100 * res.accuracy:.2f}%\n"
        f"correct: {res.counts.get('correct', 0)}\n"
        f"wrong: {res.counts.get('wrong', 0)} ({100 * res.counts.get('wrong', 0) / n:.2f}%)\n"
        f"multiple: {res.counts.get('multiple', 0)}\n"
        f"none: {res.counts.get('none', 0)}\n"
    )
    _write(out, "accuracy.txt", acc_text)
    rows = ["sample,true,kind,predicted,l2_nodes,l1_path"]
    for i, (v, y) in enumerate(zip(res.verdicts, sub.labels)):
        pred = " ".join(str(c) for c in v.labels)
        nodes = " ".join(str(w.node) for w in v.winners)
        path = " ".join(str(p) for p in v.pattern)
        rows.append(f"{int(idx[i])},{int(y)},{v.kind},{pred},{nodes},{path}")
    _write(out, "verdicts.csv", "\n".join(rows) + "\n")
    print(f"accuracy: {100 * res.accuracy:.2f}%")
    return 0


# ---------------------------------------------------------------- eval-approx


def cmd_eval_approx(args) -> int:
    curve = approx.curve_by_name(args.curve, args.rho)
    lut = approx.canonical_lut(curve, args.method, args.spacing)
    grid = approx.audit_grid(curve.x_max, args.step)
    rep = approx.audit_error(lut, curve, grid)
    out = Path(args.out)
    tag = f"{curve.name}_{args.method}_{args.spacing}"
    rows = ["x,exact,approx,error_pct,absolute"]
    for p in rep.points:
        rows.append(f"{p.x:.6f},{p.exact:.9f},{p.approx:.9f},{p.error:.6f},{int(p.absolute)}")
    _write(out, f"errors_{tag}.csv", "\n".join(rows) + "\n")
    _write(out, f"lut_{tag}.txt", approx.dump_lut(lut))
    fx_rows = ["x,y_theoretical,y_interpolated,y_number_format,error_i_pct,error_o_pct"]
    xs = [x for x in approx.tabulated_inputs() if x <= curve.x_max]
    for r in approx.fx_error_table(lut, xs):
        fx_rows.append(",".join(f"{v:.9f}" for v in r))
    _write(out, f"fx_{tag}.csv", "\n".join(fx_rows) + "\n")
    summary = (
        f"curve: {curve.ident}\nmethod: {args.method}\nspacing: {args.spacing}\n"
        f"segments: {len(lut.segments)}\n"
        f"max rel error {rep.max_rel_error:.4f}% at x={rep.argmax_x:.4f}\n"
    )
    _write(out, f"summary_{tag}.txt", summary)
    print(f"max rel error {rep.max_rel_error:.4f}%")
    return 0


# ---------------------------------------------------------------- verify-adder


def simulate_max_carry(N: int, b: int, M: int) -> int:
    """Add N copies of the all-(b-1) M-digit number column by column and
    return what is left above the M columns."""
    carry = 0
    for _ in range(M):
        total = N * (b - 1) + carry
        carry = total // b
    return carry


def first_transition(b: int, M: int, p: int, limit: int = 100000) -> int:
    """Scan N upward until the simulated carry needs p + 1 digits."""
    for N in range(max(2, b ** p), limit):
        if moadder.digits(simulate_max_carry(N, b, M), b) > p:
            return N
    raise RuntimeError("no transition found")


def cmd_verify_adder(args) -> int:
    out = Path(args.out)
    failures = []
    rows = ["base,N,M,predicted_bound,tight_bound,observed_max_carry,carry_columns,observed_columns"]
    for b in args.base:
        for M in range(1, args.max_m + 1):
            for N in range(2, args.max_n + 1):
                obs = simulate_max_carry(N, b, M)
                bound = moadder.carry_upper_bound(N)
                tight = moadder.tight_carry_bound(N, b ** M)
                if obs > bound or obs > tight:
                    failures.append(f"b={b} N={N} M={M}: carry {obs} exceeds bound")
                cols = moadder.carry_columns(N, b)
                ocols = moadder.digits(obs, b)
                if ocols > cols:
                    failures.append(f"b={b} N={N} M={M}: carry needs {ocols} columns")
                rows.append(f"{b},{N},{M},{bound},{tight},{obs},{cols},{ocols}")
    _write(out, "carry_bounds.csv", "\n".join(rows) + "\n")

    trows = ["base,M,p,transition_N,scanned_N"]
    for b in args.base:
        for M in range(1, args.max_m + 1):
            for p in range(1, 5):
                if b ** p > 4 * args.max_n and p > 1:
                    continue
                t = moadder.column_transition(b, M, p)
                s = first_transition(b, M, p)
                if t != s:
                    failures.append(f"b={b} M={M} p={p}: transition {t} vs scan {s}")
                trows.append(f"{b},{M},{p},{t},{s}")
    _write(out, "transitions.csv", "\n".join(trows) + "\n")

    checks = []
    if args.operands:
        vals = [int(v, 16) for v in args.operands]
        width = args.width or max(4, max(v.bit_length() for v in vals))
        tree = moadder.build_adder_tree(max(2, len(vals)), width)
        got = moadder.tree_add(tree, vals)
        ok = got == sum(vals)
        checks.append(f"operands {' '.join(args.operands)} -> {got:X} "
                      f"({'pass' if ok else 'FAIL'})")
        if not ok:
            failures.append("operand sum mismatch")
        print(f"sum: {got:X}")

    rng = np.random.default_rng(args.seed)
    tree = moadder.build_adder_tree(16, 16)
    bad = 0
    for _ in range(args.random_vectors):
        ops = [int(v) for v in rng.integers(0, 1 << 16, 16)]
        if moadder.tree_add(tree, ops) != sum(ops):
            bad += 1
    checks.append(f"16x16 tree vs integer sum on {args.random_vectors} vectors: "
                  f"{'pass' if bad == 0 else f'FAIL ({bad})'}")
    if bad:
        failures.append("tree mismatch")

    checks.append(f"violations: {len(failures)}")
    checks.extend(failures)
    _write(out, "adder_oracles.txt", "\n".join(checks) + "\n")
    print(f"violations: {len(failures)}")
    return 1 if failures else 0


# ------------------------------------------------------------ bench-throughput


def cmd_bench(args) -> int:
    times = list(range(args.t_step, args.t_max + 1, args.t_step))
    rows = neuron.throughput_table(args.ra, args.rt, times)
    head = "clocks,parallel_ops," + ",".join(f"serial_ops_RA{ra:g}" for ra in args.ra)
    lines = [head] + [",".join(str(v) for v in r) for r in rows]
    out = Path(args.out)
    _write(out, "throughput.csv", "\n".join(lines) + "\n")
    verdict = []
    for ra in args.ra:
        r = neuron.throughput_compare(neuron.ThroughputScenario(ra, args.rt, args.t_max))
        verdict.append(f"R_A={ra:g} R_T={args.rt:g}: serial_wins={str(r.serial_wins).lower()}")
    _write(out, "throughput_summary.txt", "\n".join(verdict) + "\n")
    print("\n".join(verdict))
    return 0


# ----------------------------------------------------------------- neuron-sim


def _hex_list(values, n: int, name: str) -> list[fxp.Fx16]:
    if len(values) != n:
        raise UsageError(f"{name} needs {n} hex values, got {len(values)}")
    return [fxp.from_hex(v) for v in values]


def cmd_neuron(args) -> int:
    out = Path(args.out)
    if args.kind == "arn":
        xs = _hex_list(args.x, 16, "--x") if args.x else [fxp.encode(v) for v in ARN_DEMO_X]
        xms = _hex_list(args.xm, 16, "--xm") if args.xm else [fxp.encode(v) for v in ARN_DEMO_XM]
        n = neuron.ArnNeuron16.uniform([v.value for v in xms], args.rho, 0.9,
                                       args.method, args.normalize)
        res = neuron.arn_forward(n, xs)
        exact = [neuron.resonance.resonate(x.value, p) for x, p in zip(xs, n.params)]
        lines = ["x,x_hex,x_m,x_m_hex,resonator_exact,resonator_fx,resonator_hex"]
        for x, m, e, r in zip(xs, xms, exact, res.resonator_outputs):
            lines.append(f"{x.value:.6f},{x.hex()},{m.value:.6f},{m.hex()},"
                         f"{e:.6f},{r.value:.6f},{r.hex()}")
        total_exact = neuron.arn_forward_exact(n, [x.value for x in xs])
        lines.append(f"node,,,,{total_exact:.6f},{res.y.value:.6f},{res.y.hex()}")
        _write(out, "neuron_arn.csv", "\n".join(lines) + "\n")
        print(f"node output {res.y.hex()} ({res.y.value:.4f}), exact {total_exact:.4f}, "
              f"clocks {res.clocks}, overflow {str(res.overflow).lower()}")
        return 0
    xs = _hex_list(args.x, 16, "--x") if args.x else [fxp.encode(v) for v in MLP_DEMO_X]
    ws = _hex_list(args.w, 16, "--w") if args.w else [fxp.encode(v) for v in MLP_DEMO_W]
    p = neuron.Perceptron16(tuple(ws), approx.canonical_lut(approx.SIGMOID, args.method))
    res = neuron.mlp_forward(p, xs)
    pre_exact, y_exact = neuron.mlp_forward_exact([w.value for w in ws], [x.value for x in xs])
    lines = ["x,x_hex,w,w_hex,product_hex"]
    for x, w, pr in zip(xs, ws, res.products):
        lines.append(f"{x.value:.6f},{x.hex()},{w.value:.6f},{w.hex()},{pr.hex()}")
    lines.append(f"sum,,,,{res.pre_activation.hex()}")
    lines.append(f"sum_exact,,,,{pre_exact:.6f}")
    lines.append(f"output,,,,{res.y.hex()}")
    lines.append(f"output_exact,,,,{y_exact:.6f}")
    _write(out, "neuron_mlp.csv", "\n".join(lines) + "\n")
    print(f"pre-activation {res.pre_activation.hex()} ({res.pre_activation.value:.5f}), "
          f"exact {pre_exact:.5f}")
    print(f"output {res.y.hex()} ({res.y.value:.4f}), exact {y_exact:.4f}, clocks {res.clocks}")
    return 0


# ----------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arnsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="report directory")
        p.add_argument("--seed", type=int, default=0)

    def data(p):
        p.add_argument("--data", required=True, help="CSV file, or IDX image file with --labels")
        p.add_argument("--labels", default=None, help="IDX label file")

    p = sub.add_parser("train", help="train a two-layer ARN classifier")
    common(p)
    data(p)
    p.add_argument("--rho", type=_positive, default=2.42)
    p.add_argument("--threshold", type=_threshold, default=0.9)
    p.add_argument("--rho2", type=_positive, default=2.42)
    p.add_argument("--threshold2", type=_threshold, default=0.9)
    p.add_argument("--train-size", type=_positive_int, default=50, help="samples per class")
    p.add_argument("--method", choices=("pwl", "soi"), default="pwl")
    p.add_argument("--perturb", default="none",
                   help="augmentation, e.g. 'rot=-5,5;shift=0:1,0:-1,1:0,-1:0'")
    p.add_argument("--l2-patterns", choices=("final", "online"), default="final")
    p.add_argument("--hex", action="store_true", help="write exact hex floats in the model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("test", help="evaluate a trained model")
    common(p)
    data(p)
    p.add_argument("--model", required=True)
    p.add_argument("--test-size", type=_positive_int, default=60, help="samples per class")
    p.add_argument("--policy", choices=("report", "relax-rho"), default="report")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--same-pool", action="store_true",
                   help="exclude the model's training draw from the test draw")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("eval-approx", help="audit a LUT approximation")
    common(p)
    p.add_argument("--curve", choices=("sigmoid", "tanh", "resonator"), default="sigmoid")
    p.add_argument("--method", choices=("pwl", "soi"), default="pwl")
    p.add_argument("--spacing", choices=("uniform-0.5", "uniform-0.25", "nonuniform"),
                   default="nonuniform")
    p.add_argument("--rho", type=_positive, default=2.42)
    p.add_argument("--step", type=_positive, default=0.025, help="audit grid step")
    p.set_defaults(func=cmd_eval_approx)

    p = sub.add_parser("verify-adder", help="check carry bounds and adder models")
    common(p)
    p.add_argument("--base", type=int, nargs="+", default=[2, 8, 10, 16])
    p.add_argument("--max-n", type=_positive_int, default=64)
    p.add_argument("--max-m", type=_positive_int, default=4)
    p.add_argument("--operands", nargs="+", help="hex operands to add")
    p.add_argument("--width", type=_positive_int, default=None)
    p.add_argument("--random-vectors", type=int, default=1000)
    p.set_defaults(func=cmd_verify_adder)

    p = sub.add_parser("bench-throughput", help="serial versus parallel multiplier throughput")
    common(p)
    p.add_argument("--ra", type=_positive, nargs="+", default=[12.0, 20.0, 32.0])
    p.add_argument("--rt", type=_positive, default=17.0)
    p.add_argument("--t-max", type=_positive_int, default=1700)
    p.add_argument("--t-step", type=_positive_int, default=100)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("neuron-sim", help="run a 16-input ARN node or perceptron")
    common(p)
    p.add_argument("--kind", choices=("arn", "mlp"), default="arn")
    p.add_argument("--x", nargs="+", help="16 hex inputs")
    p.add_argument("--xm", nargs="+", help="16 hex resonant inputs (arn)")
    p.add_argument("--w", nargs="+", help="16 hex weights (mlp)")
    p.add_argument("--rho", type=_positive, default=2.42)
    p.add_argument("--method", choices=("pwl", "soi"), default="pwl")
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=cmd_neuron)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        ap.error(str(e))
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
