"""Command-line entry point.

    resinv ri       --matrix U.csv --eps 0.3 [--weights w.csv | --normalize] --out cert.json
    resinv kt       --matrix U.csv --lam 0.25 [--eta 0.5] [--delta 1] --out cert.json
    resinv drsym    (--points P.csv | --decomp X.csv --weights c.csv) --eps 0.5 --out cert.json
    resinv drnonsym (--points P.csv | --decomp X.csv --weights c.csv) --eps 0.5 --out cert.json
    resinv cube     (--points P.csv | --decomp X.csv --weights c.csv) [--eps E | --optimize-eps] [--d D] --out cert.json
    resinv mvee     --points P.csv [--tol 1e-7] --out result.json [--decomp-out X.csv --weights-out c.csv]
    resinv verify   --cert cert.json --matrix U.csv [--weights w.csv | --normalize]
    resinv gen      {gaussian,cross,simplex,polytope} ... --out M.csv

Point sets and decompositions are CSV matrices with one point per column.
Exit codes: 0 success, 2 invalid input, 3 verification failure, 1 numerical breakdown.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from resinv import __version__
from resinv.barrier import (
    DiagonalWeights,
    SelectionBreakdown,
    SelectionCertificate,
    kt_select,
    ri_select,
)
from resinv.certify import CertificateError, verify_kt, verify_ri
from resinv.factorize import cube_basis, dr_nonsymmetric, dr_symmetric, optimize_eps
from resinv.io import (
    dump_certificate,
    load_certificate,
    load_matrix,
    load_vector,
    save_matrix,
)
from resinv.john import (
    JohnDecomposition,
    PointSet,
    cross_polytope_decomposition,
    mvee,
    random_symmetric_polytope,
    simplex_decomposition,
    whiten_decomposition,
)

EXIT_OK, EXIT_BREAKDOWN, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    eps: float | None = None
    lam: float | None = None
    eta: float | None = None
    delta: float = 1.0
    seed: int | None = None
    out: str | None = None
    tol: float = 1e-7

    def validate(self, m=None):
        if self.eps is not None and not 0 < self.eps < 1:
            raise UsageError("eps must lie in (0,1)")
        if self.lam is not None:
            eta = self.lam if self.eta is None else self.eta
            if not 0 < self.lam <= eta < 1:
                raise UsageError("lam and eta must satisfy 0 < lam <= eta < 1")
            if m is not None and self.lam < 1 / m:
                raise UsageError(f"lam must be at least 1/m = {1 / m!r}")
        if not self.delta > 0:
            raise UsageError("delta must be positive")
        if not self.tol > 0:
            raise UsageError("tol must be positive")


def one_based(idx):
    return [int(j) + 1 for j in idx]


def selection_json(cert: SelectionCertificate, extra_params=None):
    trace = []
    for rec in cert.trace:
        rec = dict(rec)
        rec["chosen_index"] = rec["chosen_index"] + 1
        trace.append(rec)
    params = dict(cert.params)
    if extra_params:
        params.update(extra_params)
    return {
        "kind": cert.kind,
        "sigma": one_based(cert.sigma),
        "k": cert.target_size,
        "claimed_bound": cert.claimed_bound,
        "achieved": cert.achieved,
        "params": params,
        "trace": trace,
        "warnings": list(cert.warnings),
        "tool_version": __version__,
    }


def certificate_from_json(obj):
    """JSON certificate (1-based) -> dict with 0-based sigma, as the verifiers expect."""
    for key in ("kind", "sigma", "k", "claimed_bound", "achieved", "params"):
        if key not in obj:
            raise CertificateError(f"certificate is missing field '{key}'")
    out = dict(obj)
    try:
        out["sigma"] = [int(j) - 1 for j in obj["sigma"]]
    except (TypeError, ValueError):
        raise CertificateError("certificate sigma must be a list of integers") from None
    return out


def _weights(args, U):
    if getattr(args, "weights", None) and getattr(args, "normalize", False):
        raise UsageError("--weights and --normalize are mutually exclusive")
    if getattr(args, "weights", None):
        w = load_vector(args.weights)
        if w.shape[0] != U.shape[1]:
            raise UsageError(f"weights has {w.shape[0]} entries, matrix has {U.shape[1]} columns")
        return w, "file"
    if getattr(args, "normalize", False):
        return np.linalg.norm(U, axis=0), "column-norms"
    return np.ones(U.shape[1]), "identity"


def _decomposition(args, tol=1e-7):
    if args.points and args.decomp:
        raise UsageError("--points and --decomp are mutually exclusive")
    if args.points:
        ps = PointSet(load_matrix(args.points))
        return whiten_decomposition(mvee(ps, tol), ps), "mvee"
    if args.decomp:
        if not args.weights:
            raise UsageError("--decomp requires --weights")
        X = load_matrix(args.decomp)
        c = load_vector(args.weights)
        if c.shape[0] != X.shape[1]:
            raise UsageError(f"weights has {c.shape[0]} entries, decomposition has {X.shape[1]} points")
        return JohnDecomposition(points=X, weights=c), "file"
    raise UsageError("one of --points or --decomp is required")


def cmd_ri(cfg, args):
    cfg.validate()
    U = load_matrix(args.matrix)
    w, rule = _weights(args, U)
    cert = ri_select(U, DiagonalWeights(w), cfg.eps)
    print(f"restricted invertibility: |sigma| = {len(cert.sigma)}, "
          f"s_min = {cert.achieved:.6g} >= bound {cert.claimed_bound:.6g}")
    return selection_json(cert, {"weights": rule})


def cmd_kt(cfg, args):
    cfg.validate()
    U = load_matrix(args.matrix)
    cfg.validate(U.shape[1])
    cert = kt_select(U, cfg.lam, cfg.eta, delta=cfg.delta)
    print(f"norm-bounded selection: |sigma| = {len(cert.sigma)}, "
          f"||U_sigma|| = {cert.achieved:.6g} <= bound {cert.claimed_bound:.6g}")
    return selection_json(cert)


def cmd_drsym(cfg, args):
    cfg.validate()
    decomp, source = _decomposition(args, cfg.tol)
    res = dr_symmetric(decomp, cfg.eps)
    print(f"symmetric DR: k = {len(res.sigma)} (floor {res.size_floor}), lower constant {res.lower_constant:.6g}")
    out = selection_json(res.certificate, {"decomposition": source, "n": decomp.dim, **res.report})
    out.update(kind="dr-symmetric", k=res.size_floor, claimed_bound=res.epsilon, achieved=res.lower_constant)
    return out


def cmd_drnonsym(cfg, args):
    cfg.validate()
    decomp, source = _decomposition(args, cfg.tol)
    res = dr_nonsymmetric(decomp, cfg.eps)
    print(f"nonsymmetric DR: k = {len(res.sigma)}, rank P = {res.rank_P}, "
          f"lower constant {res.lower_constant:.6g} (chain {res.chain_constant:.6g}), "
          f"max group size - 1 = {res.upper_group_bound}")
    warnings = list(res.first_pass.warnings) + list(res.second_pass.warnings)
    if not res.report["size_meets_nominal"]:
        warnings.append(
            f"selected {len(res.sigma)} points, fewer than floor((1-eps)n) = {res.report['nominal_size']}"
        )
    return {
        "kind": "dr-nonsymmetric",
        "sigma": one_based(res.sigma),
        "k": len(res.sigma),
        "claimed_bound": res.chain_constant,
        "achieved": res.lower_constant,
        "params": {
            "eps": res.epsilon,
            "n": decomp.dim,
            "decomposition": source,
            "sigma1": one_based(res.sigma1),
            "groups": [one_based(g) for g in res.groups],
            "rank_P": res.rank_P,
            "upper_group_bound": res.upper_group_bound,
            "projection": res.projection,
            **res.report,
        },
        "trace": [],
        "warnings": warnings,
        "tool_version": __version__,
    }


def cmd_cube(cfg, args):
    cfg.validate()
    if args.optimize_eps and cfg.eps is not None:
        raise UsageError("--eps and --optimize-eps are mutually exclusive")
    if args.d is not None and args.d < 1:
        raise UsageError("d must be at least 1")
    decomp, source = _decomposition(args, cfg.tol)
    eps = optimize_eps(decomp.dim) if args.optimize_eps else cfg.eps
    res = cube_basis(decomp, eps, args.d)
    print(f"cube distance: certified d(X, l1^n) <= {res.distance_certificate:.6g} "
          f"(claimed {res.claimed_bound:.6g}), k = {res.k}")
    return {
        "kind": "cube-distance",
        "sigma": one_based(res.sigma),
        "k": res.k,
        "claimed_bound": res.claimed_bound,
        "achieved": res.distance_certificate,
        "params": {
            "eps": res.epsilon,
            "d": res.d,
            "n": decomp.dim,
            "decomposition": source,
            "c_low": res.c_low,
            "s_achieved": res.s_achieved,
            "two_ellipsoid_bound": res.two_ellipsoid_bound,
            "T": res.T,
        },
        "trace": [],
        "warnings": list(res.dr.certificate.warnings),
        "tool_version": __version__,
    }


def cmd_mvee(cfg, args):
    cfg.validate()
    ps = PointSet(load_matrix(args.points))
    res = mvee(ps, cfg.tol)
    levels = res.levels(ps)
    print(f"mvee: {res.iterations} iterations, gap {res.final_gap:.3e}, {len(res.contact_indices)} contact points")
    if args.decomp_out or args.weights_out:
        if not (args.decomp_out and args.weights_out):
            raise UsageError("--decomp-out and --weights-out go together")
        d = whiten_decomposition(res, ps)
        save_matrix(args.decomp_out, d.points)
        save_matrix(args.weights_out, d.weights[None, :])
    return {
        "kind": "mvee",
        "sigma": one_based(res.contact_indices),
        "k": len(res.contact_indices),
        "claimed_bound": 1 + cfg.tol,
        "achieved": float(levels.max()),
        "params": {
            "tol": cfg.tol,
            "shape": res.shape,
            "weights": res.weights,
            "iterations": res.iterations,
            "final_gap": res.final_gap,
        },
        "trace": [],
        "warnings": [],
        "tool_version": __version__,
    }


def cmd_verify(cfg, args):
    cert = certificate_from_json(load_certificate(args.cert))
    U = load_matrix(args.matrix)
    if cert["kind"] == "restricted-invertibility":
        rule = cert["params"].get("weights", "identity")
        if rule == "column-norms" and not args.weights:
            args.normalize = True
        elif rule == "file" and not args.weights:
            raise UsageError("certificate was produced with a weight file; pass --weights")
        w, _ = _weights(args, U)
        rep = verify_ri(U, w, cert)
    elif cert["kind"] == "norm-bound":
        rep = verify_kt(U, cert)
    else:
        raise UsageError(f"verify supports restricted-invertibility and norm-bound certificates, not '{cert['kind']}'")
    print(rep.table())
    print("VERIFIED" if rep.passed else "FAILED: " + ", ".join(rep.failed()))
    return rep.passed


def cmd_gen(cfg, args):
    rng = np.random.default_rng(cfg.seed)
    if args.body == "gaussian":
        M = rng.standard_normal((args.rows, args.cols))
    elif args.body == "polytope":
        M = random_symmetric_polytope(args.dim, args.npoints, rng)
    else:
        d = cross_polytope_decomposition(args.dim) if args.body == "cross" else simplex_decomposition(args.dim)
        M = d.points
        if args.weights_out:
            save_matrix(args.weights_out, d.weights[None, :])
    save_matrix(cfg.out, M)
    print(f"wrote {M.shape[0]}x{M.shape[1]} {args.body} matrix to {cfg.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="resinv", description="Barrier-potential column selection and certificates.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    ri = sub.add_parser("ri", help="restricted-invertibility selection")
    ri.add_argument("--matrix", required=True)
    ri.add_argument("--eps", type=float, required=True)
    ri.add_argument("--weights")
    ri.add_argument("--normalize", action="store_true", help="weight columns by their norms")
    ri.add_argument("--out", required=True)

    kt = sub.add_parser("kt", help="norm-bounded column selection")
    kt.add_argument("--matrix", required=True)
    kt.add_argument("--lam", type=float, required=True)
    kt.add_argument("--eta", type=float)
    kt.add_argument("--delta", type=float, default=1.0)
    kt.add_argument("--out", required=True)

    for name, hlp in (("drsym", "symmetric Dvoretzky-Rogers factorization"),
                      ("drnonsym", "nonsymmetric Dvoretzky-Rogers factorization"),
                      ("cube", "distance-to-the-cube basis")):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("--points")
        q.add_argument("--decomp")
        q.add_argument("--weights")
        q.add_argument("--eps", type=float, required=name != "cube")
        q.add_argument("--tol", type=float, default=1e-7)
        q.add_argument("--out", required=True)
        if name == "cube":
            q.add_argument("--d", type=float)
            q.add_argument("--optimize-eps", action="store_true")

    mv = sub.add_parser("mvee", help="minimum-volume enclosing ellipsoid of a symmetric point set")
    mv.add_argument("--points", required=True)
    mv.add_argument("--tol", type=float, default=1e-7)
    mv.add_argument("--out", required=True)
    mv.add_argument("--decomp-out")
    mv.add_argument("--weights-out")

    ve = sub.add_parser("verify", help="re-verify a ri/kt certificate")
    ve.add_argument("--cert", required=True)
    ve.add_argument("--matrix", required=True)
    ve.add_argument("--weights")
    ve.add_argument("--normalize", action="store_true")

    ge = sub.add_parser("gen", help="generate seeded test matrices and named bodies")
    ge.add_argument("body", choices=("gaussian", "cross", "simplex", "polytope"))
    ge.add_argument("--rows", type=int, default=8)
    ge.add_argument("--cols", type=int, default=32)
    ge.add_argument("--dim", type=int, default=4)
    ge.add_argument("--npoints", type=int, default=20)
    ge.add_argument("--seed", type=int, default=0)
    ge.add_argument("--weights-out")
    ge.add_argument("--out", required=True)
    return p


HANDLERS = {
    "ri": cmd_ri,
    "kt": cmd_kt,
    "drsym": cmd_drsym,
    "drnonsym": cmd_drnonsym,
    "cube": cmd_cube,
    "mvee": cmd_mvee,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    cfg = RunConfig(
        subcommand=args.subcommand,
        inputs={k: getattr(args, k) for k in ("matrix", "points", "decomp", "weights", "cert") if getattr(args, k, None)},
        eps=getattr(args, "eps", None),
        lam=getattr(args, "lam", None),
        eta=getattr(args, "eta", None),
        delta=getattr(args, "delta", 1.0),
        seed=getattr(args, "seed", None),
        out=getattr(args, "out", None),
        tol=getattr(args, "tol", 1e-7),
    )
    try:
        if cfg.subcommand == "verify":
            return EXIT_OK if cmd_verify(cfg, args) else EXIT_VERIFY
        if cfg.subcommand == "gen":
            cmd_gen(cfg, args)
            return EXIT_OK
        cert = HANDLERS[cfg.subcommand](cfg, args)
        dump_certificate(cfg.out, cert)
        return EXIT_OK
    except SelectionBreakdown as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except ValueError as exc:  # every input/validation error derives from ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
