"""Command-line driver.

    korncurl identities [--n N] [--seed S]
    korncurl korn   [--domain cube|lshape] [-k K | --sweep K1..K2] [--p P] [--region R | --no-bc]
    korncurl solve  {pcurlcurl,micromorphic,plasticity} [-k K] [-f F] [--vtk PATH]
    korncurl verify [--mode general|compatible|skew|lemma|necas] [-k K] [--samples N]
    korncurl mesh   [--domain ...] [-k K] --vtk PATH

Each run prints one JSON record per result to stdout; ``--out`` appends the
records to a JSON Lines file and ``--csv`` writes the summary table.
Exit codes: 0 success, 2 configuration error, 3 non-convergence,
4 verification violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .errors import KornCurlError, NoConvergence, UnknownRegion
from .export import append_jsonl, write_csv, write_fields_vtk, write_mesh_vtk
from .mesh import Region, build_box_mesh, build_lshape_mesh

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_VIOLATION = 0, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    domain: str = "cube"
    extent: tuple = (1.0, 1.0, 1.0)
    levels: tuple = (1,)
    p: float = 2.0
    region: str | None = "whole-boundary"
    tol: float = 1e-10
    seed: int = 0
    restarts: int = 10
    max_iters: int = 300
    samples: int = 500
    mode: str = "general"
    problem: str | None = None
    variant: str = "full-P"
    force: tuple = ()
    out: str | None = None
    csv: str | None = None
    vtk: str | None = None
    extras: dict = field(default_factory=dict)

    def echo(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "extras"}
        d["levels"] = list(self.levels)
        d["extent"] = list(self.extent)
        d["force"] = list(self.force)
        return d


# ------------------------------------------------------------------ parsing

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="korncurl", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def mesh_opts(p):
        p.add_argument("--domain", default="cube", help="cube or lshape")
        p.add_argument("-k", type=int, default=1, help="subdivisions per unit length")
        p.add_argument("--extent", type=float, nargs=3, default=(1.0, 1.0, 1.0), metavar=("LX", "LY", "LZ"))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="append JSON Lines records here")

    p = sub.add_parser("identities", help="pointwise tensor identity suite")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("korn", help="Korn constant estimation")
    mesh_opts(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--region", default="whole-boundary")
    p.add_argument("--no-bc", action="store_true", help="no boundary condition (kernel study)")
    p.add_argument("--sweep", help="refinement study over levels K1..K2")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--csv", help="write the summary table here")

    p = sub.add_parser("solve", help="model problems")
    p.add_argument("problem", help="pcurlcurl, micromorphic or plasticity")
    mesh_opts(p)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--variant", default="full-P", help="full-P or sym-P (pcurlcurl)")
    p.add_argument("-f", "--force", default=None,
                   help="load: one number scales the default load, three give a constant body force")
    p.add_argument("--region", default="whole-boundary", help="Dirichlet part of the boundary")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--vtk", help="write the solution as legacy VTK")

    p = sub.add_parser("verify", help="sampled inequality checks")
    mesh_opts(p)
    p.add_argument("--mode", default="general", help="general, compatible, skew, lemma or necas")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--region", default="whole-boundary")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)

    p = sub.add_parser("mesh", help="export a mesh with its boundary regions")
    mesh_opts(p)
    p.add_argument("--vtk", required=True)
    return ap


def _levels(args):
    sweep = getattr(args, "sweep", None)
    if sweep:
        try:
            lo, hi = (int(s) for s in sweep.split(".."))
        except ValueError:
            raise ConfigError(f"--sweep expects K1..K2, got {sweep!r}") from None
        if not 1 <= lo <= hi:
            raise ConfigError("--sweep needs 1 <= K1 <= K2")
        return tuple(range(lo, hi + 1))
    return (args.k,)


def _force(text, problem):
    if text is None:
        return (1.0,) if problem == "pcurlcurl" else (0.0, 0.0, 1.0)
    try:
        vals = tuple(float(s) for s in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"cannot parse force {text!r}") from None
    if problem == "pcurlcurl" and len(vals) != 1:
        raise ConfigError("pcurlcurl takes a single load scale")
    if problem != "pcurlcurl" and len(vals) not in (1, 3):
        raise ConfigError("body force needs one value (0 only) or three components")
    if len(vals) == 1 and problem != "pcurlcurl":
        if vals[0] != 0.0:
            raise ConfigError("a scalar body force must be 0; give three components otherwise")
        vals = (0.0, 0.0, 0.0)
    return vals


def build_config(argv) -> RunConfig:
    """Parse and validate; raises :class:`ConfigError` (argparse exits 2 itself)."""
    args = _parser().parse_args(argv)
    cfg = RunConfig(command=args.command, seed=args.seed, out=getattr(args, "out", None))
    if args.command == "identities":
        if args.n < 1:
            raise ConfigError("--n must be positive")
        cfg.samples = args.n
        return cfg

    cfg.domain = args.domain
    if cfg.domain not in ("cube", "lshape"):
        raise ConfigError(f"unknown domain {cfg.domain!r}")
    cfg.extent = tuple(args.extent)
    if any(e <= 0 for e in cfg.extent):
        raise ConfigError("extent must be positive")
    if cfg.domain == "lshape" and cfg.extent != (1.0, 1.0, 1.0):
        raise ConfigError("the L-shape is fixed to the unit box")
    cfg.levels = _levels(args)
    if min(cfg.levels) < 1:
        raise ConfigError("-k must be >= 1")
    if args.command == "mesh":
        cfg.vtk = args.vtk
        return cfg

    cfg.p = args.p
    if not (cfg.p > 1.0 and np.isfinite(cfg.p)):
        raise ConfigError(f"p must satisfy 1 < p < inf, got {cfg.p}")
    if getattr(args, "no_bc", False):
        cfg.region = None
    else:
        try:
            cfg.region = Region.parse(args.region).value
        except UnknownRegion as exc:
            raise ConfigError(str(exc)) from None

    if args.command == "korn":
        cfg.restarts, cfg.max_iters, cfg.tol = args.restarts, args.max_iters, args.tol
        cfg.csv = args.csv
        if cfg.restarts < 1 or cfg.max_iters < 1:
            raise ConfigError("--restarts and --max-iters must be positive")
        if cfg.region is None and cfg.p != 2:
            raise ConfigError("--no-bc is only meaningful at p = 2 (kernel study)")
    elif args.command == "solve":
        if args.problem not in ("pcurlcurl", "micromorphic", "plasticity"):
            raise ConfigError(f"unknown problem {args.problem!r}")
        cfg.problem, cfg.variant, cfg.vtk = args.problem, args.variant, args.vtk
        if cfg.variant not in ("full-P", "sym-P"):
            raise ConfigError(f"unknown variant {cfg.variant!r}")
        if cfg.problem == "pcurlcurl" and not cfg.p <= 2.0:
            raise ConfigError("pcurlcurl needs 1 < p <= 2")
        if cfg.problem == "pcurlcurl" and cfg.region != "whole-boundary":
            raise ConfigError("pcurlcurl uses the whole-boundary condition")
        if len(cfg.levels) != 1:
            raise ConfigError("solve runs on a single level")
        cfg.force = _force(args.force, cfg.problem)
        cfg.tol = args.tol if args.tol is not None else (1e-10 if cfg.problem == "pcurlcurl" else 1e-9)
    elif args.command == "verify":
        modes = ("general", "compatible", "skew", "lemma", "necas")
        if args.mode not in modes:
            raise ConfigError(f"--mode must be one of {modes}")
        cfg.mode, cfg.restarts = args.mode, args.restarts
        cfg.samples = args.samples or (500 if cfg.mode in modes[:3] else 200)
        if cfg.samples < 1:
            raise ConfigError("--samples must be positive")
        if cfg.region is None and cfg.mode in modes[:3]:
            raise ConfigError("sampled Korn checks need a boundary region")
    return cfg


def _thread_limit():
    raw = os.environ.get("KORN_CURL_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"KORN_CURL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("KORN_CURL_THREADS must be positive")
    return n


# ----------------------------------------------------------------- commands

def _mesh(cfg, k):
    if cfg.domain == "lshape":
        return build_lshape_mesh(k)
    return build_box_mesh(cfg.extent, k)


def cmd_identities(cfg):
    from .tensor3 import identity_suite
    res = identity_suite(cfg.samples, cfg.seed)
    for name, val in res.items():
        print(f"{name:20s} {val:.3e}", file=sys.stderr)
    ok = all(v < 1e-12 for v in res.values())
    return [dict(res, passed=ok)], EXIT_OK if ok else EXIT_VIOLATION


def cmd_korn(cfg):
    from .korn import korn_constant_p2, korn_ratio_maximize_p
    records = []
    for k in cfg.levels:
        mesh = _mesh(cfg, k)
        t0 = time.perf_counter()
        if cfg.p == 2:
            est = korn_constant_p2(mesh, cfg.region, tol=cfg.tol, seed=cfg.seed)
        else:
            est = korn_ratio_maximize_p(mesh, cfg.region, cfg.p, restarts=cfg.restarts,
                                        max_iters=cfg.max_iters, seed=cfg.seed)
        rec = est.to_record()
        rec["seconds"] = time.perf_counter() - t0
        rec["domain"] = cfg.domain
        records.append(rec)
    return records, EXIT_OK


def _pcurlcurl_load(scale):
    def F(x):
        v = np.stack([np.sin(np.pi * x[:, 1]), x[:, 2] * x[:, 0], np.cos(x[:, 0])], axis=1)
        return scale * (np.einsum("ni,j->nij", v, np.array([1.0, 0.5, -0.25])) + np.eye(3))
    return F


def cmd_solve(cfg):
    from . import solvers
    mesh = _mesh(cfg, cfg.levels[0])
    t0 = time.perf_counter()
    u = None
    if cfg.problem == "pcurlcurl":
        F = _pcurlcurl_load(cfg.force[0]) if cfg.force[0] != 0 else 0.0
        P, rep = solvers.solve_pcurlcurl(mesh, F, cfg.p, cfg.variant, cfg.tol)
    else:
        f = None if not any(cfg.force) else np.array(cfg.force)
        fn = solvers.solve_micromorphic if cfg.problem == "micromorphic" else solvers.solve_plasticity_static
        u, P, rep = fn(mesh, f, cfg.region, cfg.tol)
    rec = {"problem": cfg.problem, "k": cfg.levels[0], "p": cfg.p, "energy": rep.energy,
           "residual": rep.residual, "iterations": rep.iterations, "backtracks": rep.backtracks,
           "P_max": float(np.abs(P.values).max()),
           "seconds": time.perf_counter() - t0}
    if u is not None:
        rec["u_max"] = float(np.abs(u.values).max())
    rec.update({k: v for k, v in rep.extra.items() if np.isscalar(v)})
    cfg.extras["fields"] = (mesh, P, u)
    return [rec], EXIT_OK


def cmd_verify(cfg):
    from . import korn
    mesh = _mesh(cfg, cfg.levels[0])
    t0 = time.perf_counter()
    if cfg.mode == "lemma":
        r = korn.lemma_sample(mesh, cfg.samples, cfg.seed)
        ok = bool(np.all(np.isfinite(r)))
        rec = {"mode": "lemma", "max_ratio": float(r.max()), "samples": cfg.samples}
    elif cfg.mode == "necas":
        r = korn.necas_sample(mesh, cfg.samples, cfg.seed)
        ok = bool(np.all(np.isfinite(r)))
        rec = {"mode": "necas", "max_ratio": float(r.max()), "samples": cfg.samples}
    else:
        if cfg.p == 2:
            c = korn.korn_constant_p2(mesh, cfg.region, seed=cfg.seed).constant
        else:
            c = korn.korn_ratio_maximize_p(mesh, cfg.region, cfg.p, restarts=cfg.restarts,
                                           seed=cfg.seed).constant
        rep = korn.verify_inequality_sample(mesh, cfg.region, cfg.p, cfg.samples, c,
                                            mode=cfg.mode, seed=cfg.seed)
        # only the p = 2 bound is exact; for other p the constant is a lower bound
        ok = rep.violations == 0 or cfg.p != 2
        rec = {"mode": cfg.mode, "constant": c, "violations": rep.violations,
               "max_ratio": rep.max_ratio, "samples": cfg.samples,
               "histogram": rep.histogram[0].tolist()}
    rec.update(k=cfg.levels[0], p=cfg.p, region=cfg.region, seconds=time.perf_counter() - t0,
               passed=ok)
    return [rec], EXIT_OK if ok else EXIT_VIOLATION


def cmd_mesh(cfg):
    mesh = _mesh(cfg, cfg.levels[0])
    cfg.extras["mesh"] = mesh
    return [{"vertices": mesh.n_vertices, "edges": mesh.n_edges, "faces": mesh.n_faces,
             "cells": mesh.n_cells, "boundary_faces": len(mesh.boundary_faces),
             "volume": mesh.volume()}], EXIT_OK


COMMANDS = {"identities": cmd_identities, "korn": cmd_korn, "solve": cmd_solve,
            "verify": cmd_verify, "mesh": cmd_mesh}


def _write_outputs(cfg, records):
    if cfg.out:
        append_jsonl(cfg.out, records)
    if cfg.csv:
        write_csv(cfg.csv, records)
    if cfg.vtk and "fields" in cfg.extras:
        mesh, P, u = cfg.extras["fields"]
        write_fields_vtk(cfg.vtk, mesh, P, u)
    if cfg.vtk and "mesh" in cfg.extras:
        write_mesh_vtk(cfg.vtk, cfg.extras["mesh"])


def run(argv=None) -> int:
    try:
        cfg = build_config(argv)
        threads = _thread_limit()
    except ConfigError as exc:
        print(f"korncurl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:          # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        with threadpool_limits(limits=threads):
            records, status = COMMANDS[cfg.command](cfg)
    except NoConvergence as exc:
        print(f"korncurl: no convergence: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(f"korncurl: report: {exc.report!r}"[:2000], file=sys.stderr)
        return EXIT_NOCONV
    except KornCurlError as exc:
        print(f"korncurl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    config = cfg.echo()
    for rec in records:
        rec["config"] = config
        rec["version"] = __version__
        print(json.dumps(rec, default=float))
    _write_outputs(cfg, records)
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
