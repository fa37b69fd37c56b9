"""Command-line entry point.

Exit codes: 0 success, 1 validation/spec error (including bad flags),
2 cap reached under ``--require-finite`` (or a probe refused because its
base spec never stabilized), 3 I/O error.
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from .errors import NotFiniteError, ValidationError
from .exact import DEFAULT_CAP, ItmSpec, attractor_exact, format_rational
from .experiments import (
    RunManifest, SweepConfig, convergence_curve, embed_itm, finite_type_sweep,
    random_torus_spec, resolution_scaling, semicontinuity_probe, sha256, write_outputs,
)
from .grid import GridGeometry, PwtSpec, attractor_grid, iterate_grid
from .metrics import directed_hausdorff
from .render import (
    BLUE, RenderLayers, montage, orbit_panel, read_pgm, render_ppm, write_pgm, write_ppm,
)
from .torus import TorusSpec

EXIT_OK, EXIT_INVALID, EXIT_CAP, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _read_json(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc


def _load_grid_spec(path, h: float | None = None) -> PwtSpec:
    """Grid or torus JSON as a PwtSpec; exact 1-D specs are embedded at ``h``."""
    d = _read_json(path)
    if "mode" in d:
        return embed_itm(ItmSpec.from_dict(d), h if h is not None else 2.0**-10)
    return PwtSpec.from_dict(d)


def _parse_h(text: str) -> float:
    if "/" in text:
        a, b = text.split("/")
        return float(a) / float(b)
    return float(text)


def _parse_color(text: str) -> tuple[int, int, int]:
    text = text.lstrip("#")
    if len(text) != 6:
        raise ValidationError(f"colors are RRGGBB hex, got {text!r}")
    return tuple(int(text[k : k + 2], 16) for k in (0, 2, 4))


def _trace_csv(trace, header="n,cells") -> bytes:
    lines = [header] + [f"{n},{c}" for n, c in enumerate(trace)]
    return ("\n".join(lines) + "\n").encode()


# -- subcommands -------------------------------------------------------------

def cmd_itm_run(args) -> int:
    spec = ItmSpec.from_dict(_read_json(args.spec))
    res = attractor_exact(spec, args.cap or DEFAULT_CAP)
    print(res.describe())
    if args.out:
        result = {
            "status": res.status, "steps": res.steps,
            "attractor": [[format_rational(p.lo), format_rational(p.hi)] for p in res.attractor],
            "length_trace": [format_rational(x) for x in res.length_trace],
        }
        data = (json.dumps(result, indent=2) + "\n").encode()
        write_outputs(args.out, {"result.json": data},
                      RunManifest(config={"spec": spec.to_dict(), "cap": args.cap or DEFAULT_CAP}))
    return EXIT_CAP if args.require_finite and not res.is_finite else EXIT_OK


def _grid_outputs(spec: PwtSpec, res, cap) -> dict[str, bytes]:
    layers = RenderLayers().add(spec.omega_mask, (200, 200, 200)).add(res.attractor, (0, 0, 0))
    return {
        "attractor.pgm": write_pgm(res.attractor),
        "attractor.ppm": render_ppm(layers),
        "trace.csv": _trace_csv(res.area_trace),
    }


def cmd_grid_run(args) -> int:
    spec = _load_grid_spec(args.spec)
    cap = args.cap or DEFAULT_CAP
    res = attractor_grid(spec, cap)
    print(f"{res.status} N={res.steps} cells={res.attractor.count} of {spec.omega_mask.count}")
    if args.out:
        manifest = RunManifest(config={"spec": spec.to_dict(), "cap": cap},
                               residuals=[list(r) for r in spec.residuals])
        write_outputs(args.out, _grid_outputs(spec, res, cap), manifest)
    return EXIT_CAP if args.require_finite and not res.stabilized else EXIT_OK


def cmd_torus_run(args) -> int:
    if args.spec:
        spec = TorusSpec.from_dict(_read_json(args.spec))
    else:
        spec = random_torus_spec(np.random.default_rng(args.seed or 0), args.n)
    cap = args.cap or 5000
    res = attractor_grid(spec.pwt, cap)
    last = res.steps
    snaps = sorted({n for n in args.snapshots if 0 <= n <= last} | {last})
    # one extra step after stabilization shows the lost region has run dry
    orbit = iterate_grid(spec.pwt, last + 1 if res.stabilized else last)
    panels = []
    for n in snaps:
        prev = orbit[n - 1] if n > 0 else None
        layers = orbit_panel(orbit[n], prev, spec.region_mask if n == 0 else None)
        panels.append(layers.to_rgb())
    lost = [0] + [(orbit[n - 1] - orbit[n]).count for n in range(1, len(orbit))]
    trace = "n,cells,lost_cells\n" + "".join(
        f"{n},{K.count},{lo}\n" for n, (K, lo) in enumerate(zip(orbit, lost))
    )
    print(f"{res.status} N={res.steps} cells={res.attractor.count} snapshots={snaps}")
    if args.out:
        files = {
            "montage.ppm": write_ppm(montage(panels)),
            "attractor.ppm": render_ppm(RenderLayers().add(res.attractor, BLUE)),
            "attractor.pgm": write_pgm(res.attractor),
            "trace.csv": trace.encode(),
        }
        manifest = RunManifest(
            config={"spec": spec.to_dict(), "cap": cap, "seed": args.seed, "snapshots": snaps,
                    "spec_digest": sha256(json.dumps(spec.to_dict(), sort_keys=True).encode())},
            residuals=[list(r) for r in spec.pwt.residuals],
        )
        write_outputs(args.out, files, manifest)
    return EXIT_CAP if args.require_finite and not res.stabilized else EXIT_OK


def cmd_sweep(args) -> int:
    config = SweepConfig.from_dict(_read_json(args.config))
    if args.cap:
        config.cap = args.cap
    if args.seed is not None and config.samples is not None:
        config.seed = args.seed
    result = finite_type_sweep(config, workers=args.workers, timing=args.timing)
    print(f"samples={len(result.manifest.wall_ms)} stabilized_fraction={result.stabilized_fraction!r}")
    if args.out:
        write_outputs(args.out, {"sweep.csv": result.csv.encode()}, result.manifest)
    else:
        sys.stdout.write(result.csv)
    return EXIT_CAP if args.require_finite and result.stabilized_fraction < 1 else EXIT_OK


def cmd_probe(args) -> int:
    spec = _load_grid_spec(args.spec)
    report = semicontinuity_probe(spec, args.radius, args.samples, args.epsilon,
                                  seed=args.seed or 0, cap=args.cap or DEFAULT_CAP)
    print(f"unique={report.unique} invalid={report.invalid} cap_reached={report.cap_reached} "
          f"max_directed={report.max_directed!r} within_epsilon={report.within_epsilon}")
    if args.out:
        data = (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode()
        write_outputs(args.out, {"semicontinuity.json": data},
                      RunManifest(config={"spec": spec.to_dict(), "radius": args.radius,
                                          "samples": args.samples, "epsilon": args.epsilon,
                                          "seed": args.seed or 0}))
    return EXIT_OK


def cmd_curve(args) -> int:
    spec = _load_grid_spec(args.spec, args.h)
    curve = convergence_curve(spec, args.nmax, args.cap or DEFAULT_CAP)
    lines = ["n,directed_hausdorff"] + [f"{n},{d!r}" for n, d in curve.points]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if not curve.reference_stabilized:
        print("# reference is the last iterate at cap (not stabilized)")
    if args.out:
        write_outputs(args.out, {"curve.csv": text.encode()},
                      RunManifest(config={"spec": spec.to_dict(), "nmax": args.nmax}))
    return EXIT_CAP if args.require_finite and not curve.reference_stabilized else EXIT_OK


def cmd_scale(args) -> int:
    hs = [_parse_h(t) for t in args.resolutions.split(",")]
    spec = _load_grid_spec(args.spec, hs[0])
    report = resolution_scaling(spec, hs, args.cap or 2000)
    buf = io.StringIO()
    buf.write("h,nx,ny,status,steps,cells,area\n")
    for r in report.rows:
        buf.write(f"{r['h']!r},{r['nx']},{r['ny']},{r['status']},{r['steps']},{r['cells']},{r['area']!r}\n")
    buf.write(f"# {report.label}\n")
    sys.stdout.write(buf.getvalue())
    if args.out:
        write_outputs(args.out, {"scaling.csv": buf.getvalue().encode()},
                      RunManifest(config={"spec": spec.to_dict(), "resolutions": hs}))
    return EXIT_OK


def cmd_hausdorff(args) -> int:
    sets = []
    for path in (args.a, args.b):
        raw = read_pgm(Path(path).read_bytes())
        h = args.h if args.h else 1.0 / raw.geometry.nx
        sets.append(read_pgm(Path(path).read_bytes(), GridGeometry(raw.geometry.nx, raw.geometry.ny, h, wrap=args.wrap)))
    A, B = sets
    dab, dba = directed_hausdorff(A, B), directed_hausdorff(B, A)
    print(f"d_H={max(dab, dba)!r} d(A,B)={dab!r} d(B,A)={dba!r}")
    return EXIT_OK


def cmd_render(args) -> int:
    layers = RenderLayers(background=_parse_color(args.background))
    for spec in args.layer:
        path, _, color = spec.rpartition(":")
        if not path:
            raise ValidationError(f"--layer expects PATH:RRGGBB, got {spec!r}")
        layers.add(read_pgm(Path(path).read_bytes()), _parse_color(color))
    files = {"render.ppm": render_ppm(layers)}
    for k, (K, _) in enumerate(layers.layers):
        files[f"layer_{k}.pgm"] = write_pgm(K)
    write_outputs(args.out, files, RunManifest(config={"layers": args.layer, "background": args.background}))
    print(f"wrote {len(files)} files to {args.out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--spec", help="spec JSON file")
    common.add_argument("--cap", type=int, help="iteration cap")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--require-finite", action="store_true",
                        help="exit 2 when the cap is reached before stabilization")

    p = _Parser(prog="pwtrans", description="Piecewise translation maps and their attractors.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    itm = sub.add_parser("itm", help="exact 1-D engine").add_subparsers(dest="action", required=True, parser_class=_Parser)
    itm.add_parser("run", parents=[common]).set_defaults(func=cmd_itm_run)

    grid = sub.add_parser("grid", help="planar grid engine").add_subparsers(dest="action", required=True, parser_class=_Parser)
    grid.add_parser("run", parents=[common]).set_defaults(func=cmd_grid_run)

    torus = sub.add_parser("torus", help="double rotations on the torus").add_subparsers(dest="action", required=True, parser_class=_Parser)
    tr = torus.add_parser("run", parents=[common])
    tr.add_argument("--n", type=int, default=256, help="torus resolution for seeded random specs")
    tr.add_argument("--snapshots", type=lambda s: [int(x) for x in s.split(",")], default=[0, 1, 2, 3])
    tr.set_defaults(func=cmd_torus_run)

    sw = sub.add_parser("sweep", parents=[common], help="finite-type parameter sweep")
    sw.add_argument("--config", required=True)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--timing", action="store_true", help="write wall-clock ms into the CSV")
    sw.set_defaults(func=cmd_sweep)

    probe = sub.add_parser("probe", help="conjecture probes").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sc = probe.add_parser("semicontinuity", parents=[common])
    sc.add_argument("--radius", type=float, required=True)
    sc.add_argument("--samples", type=int, default=50)
    sc.add_argument("--epsilon", type=float, default=0.0)
    sc.set_defaults(func=cmd_probe)

    cv = sub.add_parser("curve", parents=[common], help="convergence curve to the attractor")
    cv.add_argument("--nmax", type=int)
    cv.add_argument("--h", type=_parse_h, help="cell size when embedding a 1-D spec")
    cv.set_defaults(func=cmd_curve)

    scl = sub.add_parser("scale", parents=[common], help="resolution scaling table")
    scl.add_argument("--resolutions", required=True, help="comma-separated cell sizes, e.g. 1/32,1/64")
    scl.set_defaults(func=cmd_scale)

    hd = sub.add_parser("hausdorff", parents=[common], help="distances between two PGM masks")
    hd.add_argument("a")
    hd.add_argument("b")
    hd.add_argument("--h", type=_parse_h, help="cell size (default 1/nx)")
    hd.add_argument("--wrap", choices=["none", "torus"], default="none")
    hd.set_defaults(func=cmd_hausdorff)

    rd = sub.add_parser("render", parents=[common], help="layer PGM masks into a PPM")
    rd.add_argument("--layer", action="append", required=True, help="PATH:RRGGBB, repeatable")
    rd.add_argument("--background", default="ffffff")
    rd.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    needs_spec = {cmd_itm_run, cmd_grid_run, cmd_probe, cmd_curve, cmd_scale}
    if args.func in needs_spec and not args.spec:
        print(f"pwtrans: error: --spec is required for '{args.command}'", file=sys.stderr)
        return EXIT_INVALID
    if args.func is cmd_render and not args.out:
        print("pwtrans: error: --out is required for 'render'", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except NotFiniteError as exc:
        print(f"pwtrans: refused: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValidationError as exc:
        print(f"pwtrans: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"pwtrans: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
