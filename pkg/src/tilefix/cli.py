"""Command-line entry point.

Exit codes:
    0  success
    1  a verification check failed
    2  usage error
    3  input error (unreadable or malformed input, infeasible parameters)
    4  unsat: no tiling, no admissible word, machine rejected
    5  budget exhausted (or the machine hit its step or space limit)

Global flags (--budget, --seed, --jobs, --manifest, --records) go after the
subcommand.  Outputs are whitespace-separated rows; --records prints one JSON
object per row instead.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from . import entropy, fixpoint, shifts1d, tm
from .core import InputError, TilingError, format_patch, format_tileset, read_patch, read_tileset
from .solver import BUDGET, SAT, SolveRequest, solve_patch, transfer_entropy_bounds

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_UNSAT, EXIT_BUDGET = range(6)
DEFAULT_SEED = 20240601

_INPUT_FILES = ("tileset", "fixed", "tau", "rho", "program", "word", "forbidden")


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and v != v:
        return None
    return v


class Output:
    def __init__(self, records=False):
        self.records = records
        self.lines = []

    def row(self, kind, **fields):
        if self.records:
            rec = {"kind": kind, **{k: _jsonable(v) for k, v in fields.items()}}
            self.lines.append(json.dumps(rec, default=str))
        else:
            self.lines.append(" ".join([kind] + [_fmt(v) for v in fields.values()]))

    def table(self, header, rows):
        if self.records:
            for r in rows:
                self.lines.append(json.dumps({h: _jsonable(v) for h, v in zip(header, r)}, default=str))
        else:
            self.lines.append(" ".join(header))
            self.lines.extend(" ".join(_fmt(v) for v in r) for r in rows)

    def block(self, kind, text):
        if self.records:
            self.lines.append(json.dumps({"kind": kind, "text": text}))
        else:
            self.lines.append(text.rstrip("\n"))

    @property
    def text(self):
        return "".join(line + "\n" for line in self.lines)


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _status_code(status):
    return {SAT: EXIT_OK, BUDGET: EXIT_BUDGET}.get(status, EXIT_UNSAT)


# ---------------------------------------------------------------- commands

def _layout_from(args):
    lay = fixpoint.layout(args.zoom, args.kbits, args.mzone, args.free_rows)
    if args.quasiperiodic:
        lay = fixpoint.quasiperiodic_upgrade(lay, args.patterns)
    return lay


def cmd_compile(args, out):
    program = fixpoint.read_program(args.program)
    lay = _layout_from(args)
    if isinstance(program, fixpoint.ProgramTemplate):
        reserve = args.level_width if args.level is not None else 0
        program = fixpoint.self_referential_program(program, len(lay.field_columns) - reserve)
    ts = fixpoint.compile(program, lay, args.level, args.level_width)
    with open(args.output, "w") as fh:
        fh.write(format_tileset(ts))
    report = fixpoint.audit(lay)
    out.row("program", text=program.text)
    out.row("tiles", n=len(ts), colours=ts.ncolors)
    out.row("audit", ok=report.ok, min_gap=report.min_gap)
    for p in report.problems:
        out.row("problem", text=p)
    return EXIT_OK if report.ok else EXIT_FAIL, {"tiles": len(ts), "output_sha256": _digest(args.output)}


def cmd_solve(args, out):
    ts = read_tileset(args.tileset)
    fixed = read_patch(args.fixed) if args.fixed else None
    req = SolveRequest(ts, args.width, args.height, fixed=fixed, mode=args.mode,
                       budget=args.budget, wrap=args.wrap)
    res = solve_patch(req, jobs=args.jobs)
    out.row("count", n=res.count, status=res.status)
    for p in res.patches:
        out.block("patch", format_patch(p))
    return _status_code(res.status), {"count": res.count, "status": res.status}


def cmd_verify_sim(args, out):
    tau = read_tileset(args.tau)
    lay = _layout_from(args) if args.kbits is not None else None
    if args.rho:
        rho = read_tileset(args.rho)
    elif args.program and lay is not None:
        program = fixpoint.read_program(args.program)
        if isinstance(program, fixpoint.ProgramTemplate):
            program = fixpoint.self_referential_program(program)
        rho = fixpoint.target_tileset(program, lay.k_bits)
    else:
        raise InputError("verify-sim needs --rho, or --program with the layout flags")
    rep = fixpoint.verify_simulation(tau, rho, args.zoom, budget=args.budget, lay=lay,
                                     pairs=args.pairs, seed=args.seed, jobs=args.jobs)
    out.row("constructive", result=rep.constructive, missing=len(rep.missing))
    out.row("soundness", result=rep.soundness, macro_tiles=rep.macro_tiles, unmapped=rep.unmapped)
    out.row("faithfulness", result=rep.faithfulness, pairs=rep.pairs_checked, mismatches=len(rep.mismatches))
    results = {rep.constructive, rep.soundness, rep.faithfulness}
    code = EXIT_FAIL if "fail" in results else EXIT_BUDGET if "unverified" in results else EXIT_OK
    return code, {"constructive": rep.constructive, "soundness": rep.soundness,
                  "faithfulness": rep.faithfulness}


def cmd_entropy(args, out):
    ts = read_tileset(args.tileset)
    b = transfer_entropy_bounds(ts, args.max_width, budget=args.budget)
    out.row("bracket", lower=b.lower, upper=b.upper, width=b.width)
    out.row("rigorous", lower=b.rigorous_lower, upper=b.rigorous_upper)
    return _status_code(b.status), {"lower": b.lower, "upper": b.upper, "width": b.width}


def _h_enum(text):
    kind, _, arg = text.partition(":")
    if kind == "file" and arg:
        return entropy.RERealEnumerator.from_file(arg)
    if kind == "const" and arg:
        return entropy.RERealEnumerator.constant(Fraction(arg))
    raise InputError(f"bad enumerator {text!r}; use file:PATH or const:P/Q")


def cmd_redblue(args, out):
    if args.toy:
        schedule = entropy.ConstantSchedule(args.toy)
    elif args.geometric:
        schedule = entropy.GeometricSchedule(*args.geometric)
    else:
        schedule = fixpoint.ZoomSchedule(args.C)
    show = (lambda v: v) if args.exact else float
    h = _h_enum(args.h_enum) if args.h_enum else None
    if args.beta_schedule == "auto":
        if h is None:
            raise InputError("--beta-schedule auto needs --h-enum")
        rows = entropy.beta_schedule(h, schedule, args.levels, args.alpha)
        table = [(r.k, show(r.nu_R), show(r.nu_B), r.beta, show(r.approx_h)) for r in rows]
    else:
        beta = int(args.beta_schedule)
        params = entropy.RedBlueParams(schedule, args.alpha, beta)
        traj = entropy.density_trajectory(params, args.levels)
        table = [(k, show(p.nu_R), show(p.nu_B), beta, show(h.approximation(k)) if h else None)
                 for k, p in enumerate(traj) if k >= 1]
    out.table(("k", "nu_R", "nu_B", "beta_k", "approx_h"), table)
    return EXIT_OK, {"levels": args.levels, "final_nu_R": _fmt(table[-1][1]) if table else None}


def cmd_embed_check(args, out):
    with open(args.word) as fh:
        word = "".join(fh.read().split())
    dl = shifts1d.DelegationLayout(fixpoint.ZoomSchedule(args.schedule))
    levels = list(range(1, args.levels + 1))
    code = EXIT_OK
    for k in levels:
        gaps = shifts1d.coverage_gaps(dl, k, 0, len(word))
        out.row("coverage", level=k, chunk=dl.chunk_len(k), uncovered=len(gaps))
        if gaps:
            code = EXIT_FAIL
    report = shifts1d.check_fields(dl, shifts1d.fieldsets_from_word(dl, word, levels), word)
    out.row("fields", ok=report.ok, violations=len(report.violations))
    for clause, where, keys in report.violations:
        out.row("violation", clause=clause, at=where, tiles=keys)
    if not report.ok:
        code = EXIT_FAIL
    return code, {"violations": len(report.violations)}


def cmd_lemma2(args, out):
    src = shifts1d.parse_source(args.seq)
    word = src.prefix(args.window)
    first = {}
    for p in range(len(word) - args.n + 1):
        first.setdefault(word[p:p + args.n], p)
    missing = 0
    for f, p in sorted(first.items()):
        t = shifts1d.lemma2_find(src, (p, args.n), args.q, args.horizon or args.window)
        missing += t is None
        out.row("factor", word=f, pos=p, shift=t)
    windows = (args.window // 4, args.window // 2, args.window)
    sat = shifts1d.lemma2_saturation(src, args.n, args.q, windows)
    out.row("bound", L=sat.bounds[args.window], saturated=sat.saturated)
    return (EXIT_OK if not missing else EXIT_UNSAT), {"bound": sat.bounds[args.window],
                                                      "saturated": sat.saturated}


def cmd_lemma3(args, out):
    src = shifts1d.parse_source(args.seq)
    xpart, _, ypart = args.v.partition(",")
    rep = shifts1d.lemma3_check(src, args.y, (xpart, ypart), args.window)
    out.row("lemma3", verdict=rep.verdict, gap=rep.gap, occurrences=rep.occurrences,
            lemma2_L=rep.lemma2_L, window=rep.window)
    return EXIT_OK, {"verdict": rep.verdict, "gap": rep.gap}


def cmd_canonical(args, out):
    with open(args.forbidden) as fh:
        words = fh.read().split()
    alphabet = args.alphabet or "".join(sorted(set("".join(words)))) or "0"
    fws = shifts1d.ForbiddenWordSource.finite(words, alphabet)
    try:
        cfg = shifts1d.canonical_config(fws, args.length, args.budget or 0)
    except shifts1d.ExtensionError as e:
        out.row("dead-end", reason=str(e))
        return EXIT_UNSAT, {"word": None}
    out.row("word", text=cfg.word)
    out.row("origin", x=cfg.origin[0], y=cfg.origin[1])
    return EXIT_OK, {"word": cfg.word}


def _machine(text):
    if text.startswith("corpus:"):
        name = text.split(":", 1)[1]
        machines = tm.corpus()
        machines["ro-check"] = tm.ro_copy_check()
        if name not in machines:
            raise InputError(f"no corpus machine {name!r}")
        return machines[name]
    return tm.read_machine(text)


def cmd_tm_run(args, out):
    m = _machine(args.machine)
    steps = args.max_steps if args.max_steps is not None else (args.budget or 1000)
    trace = tm.run_tm(m, args.input, args.ro, max_steps=steps, max_cells=args.max_cells)
    out.row(trace.outcome, steps=trace.steps)
    code = {"accept": EXIT_OK, "reject": EXIT_UNSAT}.get(trace.outcome, EXIT_BUDGET)
    return code, {"outcome": trace.outcome, "steps": trace.steps}


def cmd_tm_tiles(args, out):
    m = _machine(args.machine)
    dt = tm.diagram_tiles(m)
    with open(args.output, "w") as fh:
        fh.write(format_tileset(dt.tileset))
    out.row("tiles", n=len(dt.tileset), colours=dt.tileset.ncolors)
    return EXIT_OK, {"tiles": len(dt.tileset), "output_sha256": _digest(args.output)}


# ---------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, default=None, help="search node / step budget")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--manifest", default=None, help="write a JSON run manifest here")
    common.add_argument("--records", action="store_true", help="one JSON object per output row")

    parser = argparse.ArgumentParser(prog="tilefix", description="Wang tile compiler, solver and checks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    def layout_flags(p, required):
        p.add_argument("--kbits", type=int, required=required, default=None)
        p.add_argument("--mzone", type=int, required=required, default=None)
        p.add_argument("--free-rows", type=int, default=None)
        p.add_argument("--quasiperiodic", action="store_true")
        p.add_argument("--patterns", type=int, default=1, help="slots per computation-zone position")

    p = add("compile", cmd_compile, "compile a program into a tile set")
    p.add_argument("--program", required=True)
    p.add_argument("--zoom", type=int, required=True)
    layout_flags(p, True)
    p.add_argument("--level", type=int, default=None)
    p.add_argument("--level-width", type=int, default=4)
    p.add_argument("-o", "--output", required=True)

    p = add("solve", cmd_solve, "find, count or enumerate patches")
    p.add_argument("--tileset", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--mode", choices=("first", "count", "enumerate"), default="first")
    p.add_argument("--fixed", default=None, help="patch file with pre-assigned cells")
    p.add_argument("--wrap", action="store_true", help="solve on the torus")

    p = add("verify-sim", cmd_verify_sim, "check that macro-tiles of tau simulate rho")
    p.add_argument("--tau", required=True)
    p.add_argument("--rho", default=None, help="simulated tile set")
    p.add_argument("--program", default=None, help="derive --rho from the compiled program")
    p.add_argument("--zoom", type=int, required=True)
    p.add_argument("--pairs", type=int, default=4096)
    layout_flags(p, False)

    p = add("entropy", cmd_entropy, "entropy bracket from strip transfer matrices")
    p.add_argument("--tileset", required=True)
    p.add_argument("--max-width", type=int, required=True)

    p = add("redblue", cmd_redblue, "red/blue density recursion and beta scheduling")
    p.add_argument("--C", type=int, default=2)
    p.add_argument("--toy", type=int, default=None, help="constant zoom factor instead of 3^(C^k)")
    p.add_argument("--geometric", type=int, nargs=2, metavar=("BASE", "RATIO"), default=None)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--beta-schedule", default="1", help="'auto' or a constant beta")
    p.add_argument("--h-enum", default=None, help="file:PATH or const:P/Q")
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="print exact rationals")

    p = add("embed-check", cmd_embed_check, "letter delegation coverage and field consistency")
    p.add_argument("--schedule", type=int, default=2, help="C of the zoom schedule")
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--word", required=True)

    p = add("lemma2", cmd_lemma2, "recurrence shifts divisible by q")
    p.add_argument("--seq", required=True, help="thue-morse | periodic:W | explicit:W | file:F")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--window", type=int, default=1 << 16)
    p.add_argument("--horizon", type=int, default=None)

    p = add("lemma3", cmd_lemma3, "recurrence of a factor of x times a periodic word")
    p.add_argument("--seq", required=True)
    p.add_argument("--y", required=True, help="period word")
    p.add_argument("--v", required=True, help="XPART,YPART")
    p.add_argument("--window", type=int, default=1 << 16)

    p = add("canonical", cmd_canonical, "greedy canonical word of a one-dimensional shift")
    p.add_argument("--forbidden", required=True, help="file of forbidden words")
    p.add_argument("--alphabet", default=None)
    p.add_argument("--length", type=int, required=True)

    p = add("tm-run", cmd_tm_run, "run a Turing machine")
    p.add_argument("--machine", required=True, help="machine file or corpus:NAME")
    p.add_argument("--input", default="")
    p.add_argument("--ro", default=None, help="read-only layer")
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--max-cells", type=int, default=None)

    p = add("tm-tiles", cmd_tm_tiles, "space-time diagram tiles of a Turing machine")
    p.add_argument("--machine", required=True)
    p.add_argument("-o", "--output", required=True)
    return parser


def _manifest(args, code, summary, out):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("fn", "manifest")}
    inputs = {}
    for key in _INPUT_FILES:
        path = getattr(args, key, None)
        if path:
            inputs[path] = _digest(path)
    machine = getattr(args, "machine", None)
    if machine and not machine.startswith("corpus:"):
        inputs[machine] = _digest(machine)
    h_enum = getattr(args, "h_enum", None)
    if h_enum and h_enum.startswith("file:"):
        inputs[h_enum[5:]] = _digest(h_enum[5:])
    return {
        "subcommand": args.command,
        "params": {k: _jsonable(v) for k, v in params.items()},
        "inputs": inputs,
        "budget": args.budget,
        "seed": args.seed,
        "jobs": args.jobs,
        "outcome": {"exit_code": code, "output_sha256": hashlib.sha256(out.text.encode()).hexdigest(),
                    **{k: _jsonable(v) for k, v in summary.items()}},
    }


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    out = Output(args.records)
    try:
        code, summary = args.fn(args, out)
    except (TilingError, OSError, ValueError) as e:
        print(f"tilefix: error: {e}", file=sys.stderr)
        code, summary = EXIT_INPUT, {"error": str(e)}
    sys.stdout.write(out.text)
    sys.stdout.flush()
    if args.manifest:
        with open(args.manifest, "w") as fh:
            json.dump(_manifest(args, code, summary, out), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
