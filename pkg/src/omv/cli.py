"""Command-line entry point: ``omv <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, pollard
from .bitmatrix import MatrixFormatError, format_number, naive_mv, read_matrix, read_vector, write_matrix, write_vector
from .dynamic import DynOmv, InvariantError
from .graphapps import read_graph
from .lapsolve import SolverState, effective_resistance, solve
from .static import mv, mv_coltree, mv_rowtree, preprocess
from .synthgen import FAMILIES, SynthSpec, generate

log = logging.getLogger("omv")


class CliError(Exception):
    pass


def _open_text(path: str):
    try:
        return open(path)
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc.strerror}") from None


def _load_matrix(path: str):
    with _open_text(path) as fh:
        return read_matrix(fh)


def _load_vector(path: str) -> np.ndarray:
    with _open_text(path) as fh:
        return read_vector(fh)


def _load_graph(path: str):
    with _open_text(path) as fh:
        return read_graph(fh)


def _first_line(path: str) -> str:
    with _open_text(path) as fh:
        for line in fh:
            if line.strip():
                return line.strip()
    return ""


# -- commands ---------------------------------------------------------------


def cmd_build(args) -> int:
    M = _load_matrix(args.matrix)
    S = preprocess(M)
    print(f"shape {M.rows} {M.cols}")
    print(f"row_weight {S.row_tree.weight}")
    print(f"col_weight {S.col_tree.weight}")
    print(f"preferred {S.preferred}")
    if args.out:
        with open(args.out, "w") as fh:
            S.col_tree.dump(fh)
            S.row_tree.dump(fh)
    return 0


def cmd_mv(args) -> int:
    v = _load_vector(args.vector)
    if _first_line(args.matrix).split()[:2] == ["%%OMV", "numeric"]:
        with _open_text(args.matrix) as fh:
            A = pollard.read_numeric(fh)
        if len(v) != A.shape[1]:
            raise CliError(f"vector has length {len(v)}, matrix has {A.shape[1]} columns")
        if args.algo == "naive":
            out = A @ v
        elif args.algo == "auto":
            out = pollard.mv(pollard.decompose(A, args.max_distinct), v)
        else:
            raise CliError(f"--algo {args.algo} applies to Boolean matrices only")
    else:
        M = _load_matrix(args.matrix)
        if args.algo == "naive":
            out = naive_mv(M, v)
        else:
            S = preprocess(M)
            fn = {"auto": mv, "row": mv_rowtree, "col": mv_coltree}[args.algo]
            out, stats = fn(S, v)
            log.info("algo=%s touched_nonzeros=%d dense_ops=%d", stats.algo, stats.touched_nonzeros, stats.dense_ops)
    write_vector(out, sys.stdout)
    return 0


def _parse_index_list(text: str, lineno: int) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise MatrixFormatError(lineno, f"bad index list {text!r}") from None


def _bits(indices: list[int], length: int, lineno: int) -> np.ndarray:
    bits = np.zeros(length, dtype=bool)
    for i in indices:
        if not 0 <= i < length:
            raise MatrixFormatError(lineno, f"index {i} outside 0..{length - 1}")
        bits[i] = True
    return bits


def cmd_replay(args) -> int:
    M = _load_matrix(args.matrix)
    D = DynOmv(M)
    shadow = M.to_dense() if args.audit else None
    # Shadow id lists map stable ids to current logical positions.
    row_ids = list(range(M.rows))
    col_ids = list(range(M.cols))
    trace_dir = Path(args.trace).parent
    mismatches = 0
    queries = 0
    with _open_text(args.trace) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            op, _, rest = line.partition(" ")
            op = op.upper()
            rest = rest.strip()
            try:
                if op in ("INSCOL", "INSROW"):
                    fmt, _, body = rest.partition(" ")
                    if fmt != "coo":
                        raise MatrixFormatError(lineno, f"expected 'coo' after {op}")
                    idx = _parse_index_list(body, lineno)
                    if op == "INSCOL":
                        bits = _bits(idx, D.shape[0], lineno)
                        col_ids.append(D.insert_col(bits))
                        if shadow is not None:
                            shadow = np.hstack([shadow, bits[:, None]])
                    else:
                        bits = _bits(idx, D.shape[1], lineno)
                        row_ids.append(D.insert_row(bits))
                        if shadow is not None:
                            shadow = np.vstack([shadow, bits[None, :]])
                elif op in ("DELCOL", "DELROW"):
                    try:
                        ident = int(rest)
                    except ValueError:
                        raise MatrixFormatError(lineno, f"bad id {rest!r}") from None
                    ids = col_ids if op == "DELCOL" else row_ids
                    if op == "DELCOL":
                        D.delete_col(ident)
                    else:
                        D.delete_row(ident)
                    k = ids.index(ident)
                    ids.pop(k)
                    if shadow is not None:
                        shadow = np.delete(shadow, k, axis=1 if op == "DELCOL" else 0)
                elif op == "QUERY":
                    path = Path(rest)
                    if not path.is_absolute():
                        path = trace_dir / path
                    v = _load_vector(str(path))
                    out = D.query(v)
                    queries += 1
                    print(" ".join(format_number(x) for x in out.tolist()))
                    if shadow is not None:
                        want = shadow.astype(v.dtype) @ v
                        if not np.array_equal(out, want):
                            mismatches += 1
                            print(f"omv: mismatch at line {lineno}", file=sys.stderr)
                else:
                    raise MatrixFormatError(lineno, f"unknown command {op!r}")
            except KeyError as exc:
                raise MatrixFormatError(lineno, str(exc.args[0])) from None
            except (ValueError, InvariantError) as exc:
                if isinstance(exc, MatrixFormatError):
                    raise
                raise MatrixFormatError(lineno, str(exc)) from None
            if shadow is not None:
                try:
                    D.check_invariants()
                except InvariantError as exc:
                    raise CliError(f"line {lineno}: invariant violated: {exc}") from None
    if args.audit:
        log.info("replayed %d queries, %d mismatches", queries, mismatches)
        if mismatches:
            print(f"omv: {mismatches} of {queries} queries disagree with the shadow matrix", file=sys.stderr)
            return 1
    return 0


def cmd_graph(args) -> int:
    G = _load_graph(args.graph)
    if args.task == "triangle":
        print(f"has_triangle {'true' if G.has_triangle() else 'false'}")
        print(f"triangles {G.triangle_count()}")
        print(f"trace {G.s}")
    elif args.task == "sssp":
        dmax = G.n - 1 if args.dmax is None else args.dmax
        dist = G.bounded_sssp(args.source, dmax)
        for d in dist.tolist():
            print("inf" if np.isinf(d) else int(d))
    elif args.task == "solve":
        if not args.vector:
            raise CliError("solve needs --vector")
        S = SolverState(G, seed=args.seed)
        write_vector(solve(S, _load_vector(args.vector), args.eps), sys.stdout)
    elif args.task == "resist":
        if not args.pair:
            raise CliError("resist needs --pair U V")
        S = SolverState(G, seed=args.seed)
        print(format_number(effective_resistance(S, args.pair[0], args.pair[1], args.eps)))
    return 0


def cmd_gen(args) -> int:
    spec = SynthSpec(args.family, args.n, args.m, args.corruption, args.seed)
    M = generate(spec)
    if args.out:
        with open(args.out, "w") as fh:
            write_matrix(M, fh, args.layout)
    else:
        write_matrix(M, sys.stdout, args.layout)
    return 0


def cmd_bench(args) -> int:
    sizes = bench.parse_sizes(args.sizes)
    if args.family == "grid":
        bad = [n for n in sizes if int(n**0.5) ** 2 != n]
        if bad:
            raise CliError(f"grid family needs square sizes, got {bad}")
    result = bench.report(args.family, sizes, args.reps, args.seed, args.corruption,
                          args.queries, fit=args.fit, want_linear=args.linearize)
    text = json.dumps(result, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.fit:
        print(f"slope {result['fit']['slope']}", file=sys.stderr)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omv", description="Boolean matrix-vector products via Hamming spanning trees.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="preprocess a matrix and report tree weights")
    b.add_argument("--matrix", required=True)
    b.add_argument("--out", help="write both tree dumps here")
    b.set_defaults(func=cmd_build)

    m = sub.add_parser("mv", help="multiply a matrix file by a vector file")
    m.add_argument("--matrix", required=True)
    m.add_argument("--vector", required=True)
    m.add_argument("--algo", choices=["auto", "row", "col", "naive"], default="auto")
    m.add_argument("--max-distinct", type=int, default=pollard.DEFAULT_MAX_DISTINCT,
                   help="cap on distinct values for numeric matrices")
    m.set_defaults(func=cmd_mv)

    r = sub.add_parser("replay", help="run an update/query trace against the dynamic engine")
    r.add_argument("--matrix", required=True)
    r.add_argument("--trace", required=True)
    r.add_argument("--audit", action="store_true", help="check every query against a shadow matrix")
    r.set_defaults(func=cmd_replay)

    g = sub.add_parser("graph", help="graph applications")
    g.add_argument("task", choices=["triangle", "sssp", "solve", "resist"])
    g.add_argument("--graph", required=True)
    g.add_argument("--source", type=int, default=0)
    g.add_argument("--dmax", type=int)
    g.add_argument("--vector")
    g.add_argument("--pair", type=int, nargs=2, metavar=("U", "V"))
    g.add_argument("--eps", type=float, default=1e-8)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_graph)

    gen = sub.add_parser("gen", help="generate a structured matrix")
    gen.add_argument("--family", choices=FAMILIES, required=True)
    gen.add_argument("--n", type=int, required=True, help="columns")
    gen.add_argument("--m", type=int, help="rows (default n)")
    gen.add_argument("--corruption", type=int, default=0, help="entries flipped per row")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--layout", choices=["dense", "coo"], default="dense")
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_gen)

    be = sub.add_parser("bench", help="sweep sizes and report tree weights and query work as JSON")
    be.add_argument("--family", choices=FAMILIES, required=True)
    be.add_argument("--sizes", default="64..1024", help="a..b (doubling) or a comma list")
    be.add_argument("--reps", type=int, default=5)
    be.add_argument("--queries", type=int, default=3)
    be.add_argument("--corruption", type=float, default=0.0,
                    help="c in floor(c * n^(1-1/d)) flips per row")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--fit", action="store_true", help="add the log-log slope of weight vs n")
    be.add_argument("--linearize", action="store_true", help="also record the linearized tree weight")
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, MatrixFormatError, pollard.TooManyValuesError) as exc:
        print(f"omv: error: {exc}", file=sys.stderr)
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"omv: error: {msg}", file=sys.stderr)
    except OSError as exc:
        print(f"omv: error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
