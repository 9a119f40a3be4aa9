"""Command-line pipeline: ``generate`` measurements from a graph, ``learn``
a graph from measurements, ``eval`` a learned graph against the truth.

Commands compose through files only.  Every run writes a ``manifest.json``
recording the resolved parameters and seeds, so outputs are reproducible
bit-for-bit by re-running with the same arguments.  Exit codes: 0 success
(learning converged or exhausted its candidates), 2 learning stopped at the
iteration cap, 3 input or usage error.

Set ``RESLEARN_THREADS`` to pin the BLAS thread count before heavy work.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

EXIT_OK = 0
EXIT_MAX_ITERATIONS = 2
EXIT_INPUT_ERROR = 3


def _apply_thread_env():
    threads = os.environ.get("RESLEARN_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, threads)


class _Parser(argparse.ArgumentParser):
    # Usage errors are input errors (exit 3), not the learning-stopped code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    """Everything needed to reproduce a command's outputs byte-for-byte."""

    command: str
    version: str
    parameters: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    status: str | None = None
    duration_seconds: float = 0.0

    def write(self, path):
        _atomic_write_text(path, json.dumps(asdict(self), indent=2,
                                            sort_keys=True) + "\n")


def _tmp_name(path):
    # keep the extension so extension-sniffing writers behave identically
    root, ext = os.path.splitext(str(path))
    return f"{root}.tmp{os.getpid()}{ext}"


def _atomic_write_text(path, text):
    tmp = _tmp_name(path)
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_write(path, writer):
    tmp = _tmp_name(path)
    writer(tmp)
    os.replace(tmp, path)


def _build_parser():
    parser = _Parser(prog="reslearn",
                     description="Learn sparse resistor networks from "
                                 "voltage/current measurements.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    gen = sub.add_parser("generate",
                         help="generate measurement matrices from a graph")
    gen.add_argument("graph", help="ground-truth graph (.mtx)")
    gen.add_argument("--m", type=int, default=None,
                     help="number of random current measurements "
                          "(default 50; mutually exclusive with --jl-eps)")
    gen.add_argument("--jl-eps", type=float, default=None,
                     help="resistance-sketch distortion target; sets the "
                          "measurement count to ceil(24 ln N / eps^2)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise", type=float, default=0.0,
                     help="relative voltage noise level")
    gen.add_argument("--out", default=".", help="output directory")
    gen.add_argument("--csv", action="store_true",
                     help="write CSV instead of the binary matrix format")

    lrn = sub.add_parser("learn", help="learn a graph from measurements")
    lrn.add_argument("x", help="voltage matrix file (binary or CSV)")
    lrn.add_argument("y", nargs="?", default=None,
                     help="current matrix file (enables edge scaling)")
    lrn.add_argument("--k", type=int, default=5,
                     help="nearest-neighbor count for the candidate graph")
    lrn.add_argument("--r", type=int, default=5,
                     help="embedding mode count (r - 1 eigenpairs)")
    lrn.add_argument("--tol", type=float, default=1e-12,
                     help="maximum-sensitivity convergence tolerance")
    lrn.add_argument("--beta", type=float, default=1e-3,
                     help="edge sampling ratio per iteration")
    lrn.add_argument("--sigma2-inv", type=float, default=0.0,
                     help="prior inverse variance added to eigenvalues")
    lrn.add_argument("--subsample", type=float, default=None,
                     help="keep this fraction of node rows (reduced "
                          "learning; forbids a current file)")
    lrn.add_argument("--seed", type=int, default=0,
                     help="seed for --subsample row selection")
    lrn.add_argument("--max-iterations", type=int, default=None)
    lrn.add_argument("--trace-objective", action="store_true",
                     help="record the objective value every iteration")
    lrn.add_argument("--out", default=".", help="output directory")

    ev = sub.add_parser("eval",
                        help="compare a learned graph against the truth")
    ev.add_argument("truth", help="ground-truth graph (.mtx)")
    ev.add_argument("learned", help="learned graph (.mtx)")
    ev.add_argument("--pairs", type=int, default=1000,
                    help="node pairs sampled for the resistance scatter")
    ev.add_argument("--spectrum-k", type=int, default=10,
                    help="nontrivial eigenvalues to compare")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", default=".", help="output directory")
    return parser


def _cmd_generate(args):
    from . import __version__, io, measurements

    if args.m is not None and args.jl_eps is not None:
        raise ValueError("--m and --jl-eps are mutually exclusive")
    graph = io.read_graph_mtx(args.graph)
    started = time.perf_counter()
    if args.jl_eps is not None:
        mset = measurements.generate_jl_measurements(graph, args.jl_eps,
                                                     args.seed)
        X, Y = mset.X, mset.Y
        if args.noise > 0:
            X = measurements.add_noise(X, args.noise, args.seed + 1)
        m = mset.measurement_count
    else:
        m = args.m if args.m is not None else 50
        mset = measurements.generate_measurement_set(
            graph, m, args.seed, noise_level=args.noise)
        X, Y = mset.X, mset.Y

    os.makedirs(args.out, exist_ok=True)
    ext = "csv" if args.csv else "bin"
    write = io.write_matrix_csv if args.csv else io.write_matrix_binary
    x_path = os.path.join(args.out, f"X.{ext}")
    y_path = os.path.join(args.out, f"Y.{ext}")
    _atomic_write(x_path, lambda p: write(p, X))
    _atomic_write(y_path, lambda p: write(p, Y))
    manifest = RunManifest(
        command="generate", version=__version__,
        parameters={"m": m, "jl_eps": args.jl_eps, "seed": args.seed,
                    "noise": args.noise, "csv": bool(args.csv)},
        inputs={"graph": args.graph},
        outputs={"x": x_path, "y": y_path},
        status="ok", duration_seconds=time.perf_counter() - started)
    manifest.write(os.path.join(args.out, "manifest.json"))
    print(f"wrote {x_path} and {y_path} "
          f"({graph.node_count} nodes, {m} measurements)")
    return EXIT_OK


def _cmd_learn(args):
    from . import __version__, io, learner, measurements, metrics

    X = io.read_matrix(args.x)
    Y = io.read_matrix(args.y) if args.y else None
    kept = None
    if args.subsample is not None:
        if Y is not None:
            raise ValueError("reduced-network learning uses voltages only; "
                             "do not pass a current file with --subsample")
        X, kept = measurements.subsample_nodes(X, args.subsample, args.seed)

    config = learner.LearnConfig(
        k=args.k, r=args.r, tol=args.tol, beta_sample=args.beta,
        inverse_variance=args.sigma2_inv, max_iterations=args.max_iterations,
        record_objective=args.trace_objective)
    started = time.perf_counter()
    graph, trace = learner.learn(X, Y, config)
    duration = time.perf_counter() - started

    os.makedirs(args.out, exist_ok=True)
    graph_path = os.path.join(args.out, "learned.mtx")
    trace_path = os.path.join(args.out, "trace.csv")
    _atomic_write(graph_path, lambda p: io.write_graph_mtx(p, graph))
    _atomic_write(trace_path, lambda p: metrics.write_trace_csv(p, trace))
    manifest = RunManifest(
        command="learn", version=__version__,
        parameters={"k": args.k, "r": args.r, "tol": args.tol,
                    "beta": args.beta, "sigma2_inv": args.sigma2_inv,
                    "subsample": args.subsample, "seed": args.seed,
                    "max_iterations": args.max_iterations,
                    "trace_objective": bool(args.trace_objective),
                    "kept_nodes": None if kept is None else kept.tolist()},
        inputs={"x": args.x, "y": args.y},
        outputs={"graph": graph_path, "trace": trace_path},
        status=trace.status, duration_seconds=duration)
    manifest.write(os.path.join(args.out, "manifest.json"))
    last = trace.records[-1].s_max if trace.records else float("nan")
    print(f"{trace.status}: {graph.node_count} nodes, "
          f"{graph.edge_count} edges, {trace.iterations} iterations, "
          f"final s_max {last:.3e}")
    if trace.status == "max_iterations":
        return EXIT_MAX_ITERATIONS
    return EXIT_OK


def _cmd_eval(args):
    from . import __version__, io, metrics

    g_true = io.read_graph_mtx(args.truth)
    g_learned = io.read_graph_mtx(args.learned)
    if g_true.node_count != g_learned.node_count:
        raise ValueError(
            f"node counts differ: {g_true.node_count} vs "
            f"{g_learned.node_count}")
    started = time.perf_counter()
    lam_t, lam_l, _ = metrics.compare_spectra(g_true, g_learned,
                                              args.spectrum_k)
    pairs, r_t, r_l, corr = metrics.resistance_correlation(
        g_true, g_learned, args.pairs, args.seed)
    coords_true = metrics.layout_coordinates(g_true)
    coords_learned = metrics.layout_coordinates(g_learned)

    os.makedirs(args.out, exist_ok=True)
    paths = {
        "spectra": os.path.join(args.out, "spectra.csv"),
        "scatter": os.path.join(args.out, "resistance_scatter.csv"),
        "layout_true": os.path.join(args.out, "layout_true.csv"),
        "layout_learned": os.path.join(args.out, "layout_learned.csv"),
    }
    _atomic_write(paths["spectra"],
                  lambda p: metrics.write_spectra_csv(p, lam_t, lam_l))
    _atomic_write(paths["scatter"],
                  lambda p: metrics.write_resistance_scatter_csv(
                      p, pairs, r_t, r_l))
    _atomic_write(paths["layout_true"],
                  lambda p: metrics.write_layout_csv(p, coords_true))
    _atomic_write(paths["layout_learned"],
                  lambda p: metrics.write_layout_csv(p, coords_learned))
    manifest = RunManifest(
        command="eval", version=__version__,
        parameters={"pairs": args.pairs, "spectrum_k": args.spectrum_k,
                    "seed": args.seed,
                    "pearson_r": corr,
                    "edge_counts": [g_true.edge_count,
                                    g_learned.edge_count]},
        inputs={"truth": args.truth, "learned": args.learned},
        outputs=paths, status="ok",
        duration_seconds=time.perf_counter() - started)
    manifest.write(os.path.join(args.out, "manifest.json"))
    print(f"pearson_r {corr:.6f} over {len(pairs)} pairs; edges "
          f"{g_true.edge_count} true vs {g_learned.edge_count} learned")
    return EXIT_OK


_COMMANDS = {"generate": _cmd_generate, "learn": _cmd_learn,
             "eval": _cmd_eval}


def main(argv=None):
    _apply_thread_env()
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # input/data errors map to a scriptable code
        print(f"reslearn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
