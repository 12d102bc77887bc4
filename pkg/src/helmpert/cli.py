"""Command-line front end.

Commands
--------
spectrum  perturbative levels for one boundary and boundary condition
oracle    collocation eigenvalues for the same boundary
compare   perturbative levels paired with reference levels, with % error
field     corrected wavefunction sampled on a polar grid, with nodal cells

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from helmpert.errors import InputError, NumericError, UnsupportedScopeError
from helmpert.geometry import (
    DEFAULT_NMAX,
    BoundarySpec,
    Ellipse,
    RawFourier,
    Supercircle,
    fourier_coeffs,
    parse_boundary,
)
from helmpert.oracle import CollocationConfig, exact_reference, rotational_order, scan_eigenvalues
from helmpert.perturb import (
    BC,
    ModeLabel,
    Parity,
    eval_psi,
    normalize,
    physical_point,
    psi1_coeffs,
    psi2_coeffs,
    spectrum,
)

SCHEMA = 1
TABLE_DIGITS = 6
GRID_DIGITS = 9

#: Fixed presets for the three-shape comparison table.
TABLE1_SHAPES = (
    ("supercircle", Supercircle(1.0, 3.0)),
    ("ellipse", Ellipse(1.0, 0.5)),
    ("square", Supercircle(1.0, 1.0)),
)
TABLE1_ROWS = 11

SPECTRUM_COLUMNS = ("l", "j", "parity", "bc", "E0", "E1", "E2", "total", "degenerate_unresolved", "e2_truncation")
ORACLE_COLUMNS = ("index", "k", "E", "dip", "parity", "sym_class", "converged", "shallow")
COMPARE_COLUMNS = ("shape", "bc", "row", "l", "j", "parity", "reference", "perturbative", "pct_error")
FIELD_COLUMNS = ("i", "j", "R", "alpha", "r", "theta", "psi", "nodal_cell")


@dataclass
class RunConfig:
    command: str
    boundary: BoundarySpec | None
    bc: BC
    l_max: int = 12
    j_max: int = 6
    order: int = 2
    n_max: int = DEFAULT_NMAX
    out: str | None = None
    fmt: str = "json"
    oracle: CollocationConfig | None = None
    extra: dict = field(default_factory=dict)


def _fmt(x, digits: int):
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(f"{float(x):.{digits}g}") + 0.0  # folds -0.0


def _table(rows: list[dict], columns, digits: int) -> list[dict]:
    return [{c: _fmt(row[c], digits) if not isinstance(row[c], str) else row[c] for c in columns} for row in rows]


def _render(payload: dict, columns, rows_key: str, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in payload[rows_key]:
        writer.writerow(["" if row[c] is None else row[c] for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _boundary_json(spec: BoundarySpec) -> dict:
    return spec.to_json()


def run_spectrum(cfg: RunConfig) -> dict:
    fb = fourier_coeffs(cfg.boundary, cfg.n_max)
    rows = []
    for e in spectrum(fb, cfg.bc, cfg.l_max, cfg.j_max, cfg.order):
        lab = e.label
        rows.append(
            {
                "l": lab.l,
                "j": lab.j,
                "parity": lab.parity.value,
                "bc": lab.bc.value,
                "E0": e.e0,
                "E1": e.e1,
                "E2": e.e2,
                "total": e.total,
                "degenerate_unresolved": e.degenerate_unresolved,
                "e2_truncation": e.e2_truncation,
            }
        )
    return {
        "schema": SCHEMA,
        "command": "spectrum",
        "boundary": _boundary_json(cfg.boundary),
        "bc": cfg.bc.value,
        "order": cfg.order,
        "r0": _fmt(fb.r0, TABLE_DIGITS),
        "rows": _table(rows, SPECTRUM_COLUMNS, TABLE_DIGITS),
    }


def run_oracle(cfg: RunConfig) -> dict:
    ocfg = cfg.oracle or CollocationConfig()
    rows = []
    for i, r in enumerate(scan_eigenvalues(cfg.boundary, cfg.bc, ocfg)):
        rows.append(
            {
                "index": i,
                "k": r.k,
                "E": r.E,
                "dip": r.dip,
                "parity": r.parity.value,
                "sym_class": r.sym_class,
                "converged": r.converged,
                "shallow": r.shallow,
            }
        )
    return {
        "schema": SCHEMA,
        "command": "oracle",
        "boundary": _boundary_json(cfg.boundary),
        "bc": cfg.bc.value,
        "rows": _table(rows, ORACLE_COLUMNS, TABLE_DIGITS),
    }


def _exact_shape(spec: BoundarySpec) -> str | None:
    if isinstance(spec, Supercircle) and spec.t == 1.0:
        return "tilted_square"
    if isinstance(spec, Supercircle) and spec.t == 2.0:
        return "circle"
    if isinstance(spec, Ellipse) and spec.eps == 0.0:
        return "circle"
    if isinstance(spec, RawFourier) and not any(spec.c):
        return "circle"
    return None


def _class_of(l: int, m: int) -> int:
    if m == 0:
        return l
    r = l % m
    return min(r, m - r)


def compare_rows(spec: BoundarySpec, bc: BC, rows: int, cfg: RunConfig, reference: str = "auto") -> list[dict]:
    """Pair the lowest ``rows`` reference levels with perturbative ones.

    With an oracle reference the pairing is by ascending order inside each
    (parity, symmetry class); with an exact reference, by global rank.
    """
    fb = fourier_coeffs(spec, cfg.n_max)
    pert = spectrum(fb, bc, cfg.l_max, cfg.j_max, cfg.order)
    if len(pert) < rows:
        raise NumericError(f"only {len(pert)} perturbative levels; raise --lmax/--jmax")
    exact = _exact_shape(spec)
    if reference == "auto":
        reference = "exact" if exact else "oracle"
    if reference == "exact" and exact is None:
        raise InputError("no exact reference for this boundary; use --reference oracle")

    pairs = []
    if reference == "exact":
        a = spec.a if hasattr(spec, "a") else spec.r0
        ref = exact_reference(exact, bc, rows, a)
        pairs = list(zip(ref, pert[:rows]))
    else:
        base = cfg.oracle or CollocationConfig()
        k_top = math.sqrt(pert[rows - 1].total) * 1.15
        ocfg = CollocationConfig(base.basis_order, base.boundary_points, base.k_min, k_top, base.scan_step, base.dip_threshold, base.k_tol)
        found = scan_eigenvalues(spec, bc, ocfg)
        m = rotational_order(spec)
        groups: dict = {}
        for e in pert:
            groups.setdefault((e.label.parity, _class_of(e.label.l, m)), []).append(e)
        refs: dict = {}
        for r in found:
            refs.setdefault((r.parity, r.sym_class), []).append(r.E)
        for key, es in refs.items():
            have = groups.get(key, [])
            if len(have) < len(es):
                _dump_mismatch(key, es, [e.total for e in have])
            pairs.extend(zip(sorted(es), have))
        pairs.sort(key=lambda p: p[0])
        if len(pairs) < rows:
            _dump_mismatch("all", [p[0] for p in pairs], [e.total for e in pert[:rows]])
        pairs = pairs[:rows]
        # a perturbative level well inside the range with no partner means a missed root
        cutoff = 0.9 * pairs[-1][0]
        used = {id(p[1]) for p in pairs}
        missing = [e for e in pert if e.total < cutoff and id(e) not in used]
        if missing:
            _dump_mismatch("unpaired", [p[0] for p in pairs], [e.total for e in missing])

    out = []
    for i, (ref, e) in enumerate(pairs, start=1):
        out.append(
            {
                "row": i,
                "l": e.label.l,
                "j": e.label.j,
                "parity": e.label.parity.value,
                "reference": ref,
                "perturbative": e.total,
                "pct_error": 100.0 * abs(ref - e.total) / ref,
            }
        )
    return out


def _dump_mismatch(key, ref, pert):
    raise NumericError(f"count mismatch in {key}: reference {list(np.round(ref, 6))} vs perturbative {list(np.round(pert, 6))}")


def run_compare(cfg: RunConfig) -> dict:
    rows_out = []
    if cfg.extra.get("table1"):
        cases = [(name, spec, bc) for name, spec in TABLE1_SHAPES for bc in (BC.DIRICHLET, BC.NEUMANN)]
        n_rows = TABLE1_ROWS
    else:
        cases = [(cfg.boundary.to_json()["shape"], cfg.boundary, cfg.bc)]
        n_rows = cfg.extra.get("rows", TABLE1_ROWS)
    for name, spec, bc in cases:
        for row in compare_rows(spec, bc, n_rows, cfg, cfg.extra.get("reference", "auto")):
            rows_out.append({"shape": name, "bc": bc.value, **row})
    payload = {"schema": SCHEMA, "command": "compare", "order": cfg.order}
    if not cfg.extra.get("table1"):
        payload["boundary"] = _boundary_json(cfg.boundary)
    payload["rows"] = _table(rows_out, COMPARE_COLUMNS, TABLE_DIGITS)
    return payload


def field_grid(spec: BoundarySpec, label: ModeLabel, order: int, n_r: int, n_a: int, n_max: int = DEFAULT_NMAX):
    """Sample the corrected mode on an ``n_r x n_a`` polar grid of the pulled-back disk.

    Returns ``(R, alpha, r, theta, psi, nodal)`` where ``nodal[i, j]`` marks a
    sign change or a zero among the corners of cell ``(i, j) .. (i+1, j+1)``.
    """
    if n_r < 2 or n_a < 3:
        raise InputError("grid needs at least 2 radial and 3 angular samples")
    if order == 2 and label.l != 0:
        raise UnsupportedScopeError("second order is only available for l = 0")
    fb = fourier_coeffs(spec, n_max)
    coeffs = psi1_coeffs(label, fb)
    if order == 2:
        coeffs = psi2_coeffs(label.j, label.bc, fb, coeffs)
    coeffs = normalize(label, coeffs, fb)
    R = fb.r0 * np.arange(n_r) / (n_r - 1)
    alpha = 2 * np.pi * np.arange(n_a) / n_a
    RR, AA = np.meshgrid(R, alpha, indexing="ij")
    psi = eval_psi(label, coeffs, fb, RR, AA, order)
    r, theta = physical_point(fb, RR, AA)

    tiny = 1e-12 * float(np.max(np.abs(psi)))
    sgn = np.where(np.abs(psi) <= tiny, 0, np.sign(psi))
    wrap = np.concatenate([sgn, sgn[:, :1]], axis=1)
    corners = np.stack([wrap[:-1, :-1], wrap[1:, :-1], wrap[:-1, 1:], wrap[1:, 1:]])
    # a zero corner means the nodal line passes through a grid node
    nodal = ((corners.max(axis=0) > 0) & (corners.min(axis=0) < 0)) | np.any(corners == 0, axis=0)
    return R, alpha, r, theta, psi, nodal


def run_field(cfg: RunConfig) -> dict:
    ex = cfg.extra
    label = ModeLabel(ex["l"], ex["j"], ex["parity"], cfg.bc)
    R, alpha, r, theta, psi, nodal = field_grid(cfg.boundary, label, cfg.order, ex["n_r"], ex["n_a"], cfg.n_max)
    samples = []
    for i in range(R.size):
        for j in range(alpha.size):
            samples.append(
                {
                    "i": i,
                    "j": j,
                    "R": R[i],
                    "alpha": alpha[j],
                    "r": r[i, j],
                    "theta": theta[i, j],
                    "psi": psi[i, j],
                    "nodal_cell": bool(i < nodal.shape[0] and nodal[i, j]),
                }
            )
    return {
        "schema": SCHEMA,
        "command": "field",
        "boundary": _boundary_json(cfg.boundary),
        "mode": {"l": label.l, "j": label.j, "parity": label.parity.value, "bc": label.bc.value},
        "order": cfg.order,
        "shape": [int(R.size), int(alpha.size)],
        "nodal_cells": [[int(i), int(j)] for i, j in zip(*np.nonzero(nodal))],
        "samples": _table(samples, FIELD_COLUMNS, GRID_DIGITS),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helmpert", description="Perturbative Helmholtz spectra of nearly circular domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--shape", choices=("supercircle", "ellipse", "circle"), help="built-in boundary family")
        p.add_argument("--t", type=float, help="supercircle exponent")
        p.add_argument("--a", type=float, default=1.0, help="size parameter")
        p.add_argument("--eps", type=float, help="ellipse eccentricity")
        p.add_argument("--fourier", metavar="FILE", help="JSON boundary file")
        p.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
        p.add_argument("--lmax", type=int, default=12)
        p.add_argument("--jmax", type=int, default=6)
        p.add_argument("--order", type=int, choices=(0, 1, 2), default=2)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    def oracle_opts(p):
        p.add_argument("--basis-order", type=int, default=40)
        p.add_argument("--kmin", type=float, default=0.5)
        p.add_argument("--kmax", type=float, default=12.0)
        p.add_argument("--step", type=float, default=0.005)
        p.add_argument("--dip-threshold", type=float, default=0.1)

    common(sub.add_parser("spectrum", help="perturbative spectrum"))
    p = sub.add_parser("oracle", help="collocation eigenvalues")
    common(p)
    oracle_opts(p)
    p = sub.add_parser("compare", help="perturbative vs reference energies")
    common(p)
    oracle_opts(p)
    p.add_argument("--rows", type=int, default=TABLE1_ROWS)
    p.add_argument("--reference", choices=("auto", "oracle", "exact"), default="auto")
    p.add_argument("--table1", action="store_true", help="three-shape preset, both boundary conditions")
    p = sub.add_parser("field", help="sample a corrected wavefunction")
    common(p)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--parity", choices=("cos", "sin"), default="cos")
    p.add_argument("--nr", type=int, default=41)
    p.add_argument("--na", type=int, default=72)
    # unset means the highest order the mode supports
    p.set_defaults(order=None)
    return parser


def _boundary_from_args(args) -> BoundarySpec | None:
    if args.fourier:
        try:
            with open(args.fourier, encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read {args.fourier}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.fourier}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
        return parse_boundary(obj)
    if args.shape is None:
        return None
    if args.shape == "supercircle":
        if args.t is None:
            raise InputError("--t is required for --shape supercircle")
        return Supercircle(args.a, args.t)
    if args.shape == "ellipse":
        if args.eps is None:
            raise InputError("--eps is required for --shape ellipse")
        return Ellipse(args.a, args.eps)
    return RawFourier(args.a, ())


def _n_max_from_env() -> int:
    raw = os.environ.get("HELMHOLTZ_NMAX")
    if raw is None:
        return DEFAULT_NMAX
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"HELMHOLTZ_NMAX must be an integer, got {raw!r}") from None
    if n < 1:
        raise InputError("HELMHOLTZ_NMAX must be >= 1")
    return n


def config_from_args(args) -> RunConfig:
    boundary = _boundary_from_args(args)
    if boundary is None and not getattr(args, "table1", False):
        raise InputError("give --shape or --fourier")
    cfg = RunConfig(
        command=args.command,
        boundary=boundary,
        bc=BC(args.bc),
        l_max=args.lmax,
        j_max=args.jmax,
        order=args.order,
        n_max=_n_max_from_env(),
        out=args.out,
        fmt=args.format,
    )
    if cfg.l_max < 0 or cfg.j_max < 1:
        raise InputError("need --lmax >= 0 and --jmax >= 1")
    if args.command in ("oracle", "compare"):
        cfg.oracle = CollocationConfig(
            basis_order=args.basis_order,
            k_min=args.kmin,
            k_max=args.kmax,
            scan_step=args.step,
            dip_threshold=args.dip_threshold,
        )
    if args.command == "compare":
        if args.rows < 1:
            raise InputError("--rows must be >= 1")
        cfg.extra = {"rows": args.rows, "reference": args.reference, "table1": args.table1}
    if args.command == "field":
        if cfg.order is None:
            cfg.order = 2 if args.l == 0 else 1
        cfg.extra = {"l": args.l, "j": args.j, "parity": args.parity, "n_r": args.nr, "n_a": args.na}
    return cfg


_RUNNERS = {
    "spectrum": (run_spectrum, SPECTRUM_COLUMNS, "rows"),
    "oracle": (run_oracle, ORACLE_COLUMNS, "rows"),
    "compare": (run_compare, COMPARE_COLUMNS, "rows"),
    "field": (run_field, FIELD_COLUMNS, "samples"),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        runner, columns, key = _RUNNERS[cfg.command]
        payload = runner(cfg)
        _emit(_render(payload, columns, key, cfg.fmt), cfg.out)
    except InputError as exc:
        print(f"helmpert: error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, UnsupportedScopeError) as exc:
        print(f"helmpert: numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
