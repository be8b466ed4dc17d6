"""Command line front end: mesh tooling and the canned experiments."""

from __future__ import annotations

import argparse
import os
import sys

from .assembly import assemble
from .harness import (
    StudyConfig,
    cells_for_target_h,
    run_test1,
    run_test2,
)
from .local import build_projectors, local_mass, local_stiffness
from .mesh import (
    MeshError,
    generate_grid_mesh,
    generate_voronoi_mesh,
    read_mesh,
    validate_mesh,
    write_mesh,
)
from .spectral import dump_eigenvalues_csv, generalized_eigendecomposition


def _parse_float(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def _parse_float_list(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "/" in part:
            num, den = part.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(part))
    if not out:
        raise argparse.ArgumentTypeError("expected a comma-separated number list")
    return tuple(out)


def _cmd_mesh_gen(args) -> int:
    if args.kind == "grid":
        mesh = generate_grid_mesh(args.n)
    else:
        mesh = generate_voronoi_mesh(args.n, seed=args.seed, lloyd_iters=args.lloyd)
    write_mesh(mesh, args.out)
    print(f"wrote {mesh.n_vertices} vertices, {mesh.n_cells} cells, h={mesh.h:.6g} to {args.out}")
    return 0


def _cmd_mesh_check(args) -> int:
    try:
        mesh = read_mesh(args.mesh)
        report = validate_mesh(mesh, gamma_min=args.gamma_min, c_min=args.c_min)
    except MeshError as exc:
        print(f"INVALID: {exc}")
        return 1
    print(
        f"h={report.h:.6g} h_mean={report.h_mean:.6g} "
        f"star_ratio_min={report.star_ratio.min():.4g} "
        f"gap_ratio_min={report.gap_ratio.min():.4g}"
    )
    if not report.passed:
        print(f"FAIL: cells below thresholds: {report.failing_cells()}")
        return 1
    print("PASS")
    return 0


def _cmd_study_test1(args) -> int:
    if args.h_list is not None:
        if args.family == "grid":
            refinements = tuple(max(1, round(1.0 / h)) for h in args.h_list)
        else:
            refinements = tuple(cells_for_target_h(h) for h in args.h_list)
    else:
        refinements = tuple(int(r) for r in args.refinements)
    config = StudyConfig(
        k=args.k,
        scheme=args.scheme,
        beta=args.beta,
        gamma=args.gamma,
        mass_mode=args.mass,
        mesh_family=args.family,
        refinements=refinements,
        tau_list=args.tau_list,
        seed=args.seed,
        lloyd_iters=args.lloyd,
        out_dir=args.out,
    )
    records = run_test1(config)
    for rec in records:
        print(
            f"h={rec.h_max:.4f} tau={rec.tau:.6g} "
            f"E1={rec.e1:.6e} E0={rec.e0:.6e} ({rec.seconds:.1f}s)"
        )
    if args.dump_matrices or args.dump_eigs:
        from .harness import build_mesh

        mesh = build_mesh(config, refinements[-1])
        system = assemble(mesh, config.k, config.mass_mode)
        os.makedirs(args.out, exist_ok=True)
        if args.dump_matrices:
            _dump_matrix(system.K, f"{args.out}/stiffness.txt")
            _dump_matrix(system.M, f"{args.out}/mass.txt")
        if args.dump_eigs:
            basis = generalized_eigendecomposition(system)
            dump_eigenvalues_csv(basis, f"{args.out}/eigenvalues.csv")
    print(f"artifacts in {args.out}")
    return 0


def _cmd_study_test2(args) -> int:
    grid_n = max(1, round(1.0 / args.h))
    results = run_test2(grid_n=grid_n, tau_list=args.tau_list, out_dir=args.out)
    for res in results:
        print(f"{res.scheme} tau={res.tau:.6g}: velocity TV = {res.velocity_tv:.6g}")
    print(f"artifacts in {args.out}")
    return 0


def _dump_matrix(matrix, path: str) -> None:
    coo = matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def _cmd_dump_elements(args) -> int:
    mesh = read_mesh(args.mesh)
    cells = [args.cell] if args.cell is not None else range(mesh.n_cells)
    with open(args.out, "w") if args.out else _stdout() as fh:
        for ci in cells:
            pack = build_projectors(mesh.cell_points(ci), args.k)
            fh.write(f"cell {ci} ndof {pack.dofs.n_dofs}\n")
            for name, mat in (
                ("D", pack.D),
                ("pi_nabla", pack.pi_nabla),
                ("pi_zero", pack.pi_zero),
                ("K", local_stiffness(pack)),
                ("M", local_mass(pack)),
            ):
                fh.write(f"{name} {mat.shape[0]} {mat.shape[1]}\n")
                for row in mat:
                    fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return 0


class _stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        return False


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vemwave",
        description="Virtual element wave solver on polygonal meshes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mesh_p = sub.add_parser("mesh", help="generate and check meshes")
    mesh_sub = mesh_p.add_subparsers(dest="mesh_command", required=True)

    gen = mesh_sub.add_parser("gen", help="write a mesh file")
    gen.add_argument("--kind", choices=("grid", "voronoi"), default="voronoi")
    gen.add_argument("--n", type=int, required=True, help="cells (voronoi) or cells per side (grid)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--lloyd", type=int, default=50)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_mesh_gen)

    check = mesh_sub.add_parser("check", help="validate a mesh file")
    check.add_argument("mesh")
    check.add_argument("--gamma-min", type=float, default=0.01)
    check.add_argument("--c-min", type=float, default=0.01)
    check.set_defaults(func=_cmd_mesh_check)

    study_p = sub.add_parser("study", help="run the canned experiments")
    study_sub = study_p.add_subparsers(dest="study_command", required=True)

    t1 = study_sub.add_parser("test1", help="manufactured-solution convergence study")
    t1.add_argument("--k", type=int, default=1, choices=(1, 2, 3))
    t1.add_argument("--scheme", choices=("newmark", "bathe"), default="newmark")
    t1.add_argument("--beta", type=float, default=0.25)
    t1.add_argument("--gamma", type=float, default=0.5)
    t1.add_argument("--mass", choices=("stabilized", "non_stabilized"), default="stabilized")
    t1.add_argument("--family", choices=("voronoi", "grid"), default="voronoi")
    t1.add_argument("--h-list", type=_parse_float_list, default=None,
                    help="target mesh sizes, e.g. 1/5,1/10,1/20,1/40")
    t1.add_argument("--refinements", type=int, nargs="+", default=(40, 160, 640, 2560))
    t1.add_argument("--tau-list", type=_parse_float_list, default=(1.0 / 160.0,))
    t1.add_argument("--seed", type=int, default=0)
    t1.add_argument("--lloyd", type=int, default=0)
    t1.add_argument("--dump-matrices", action="store_true")
    t1.add_argument("--dump-eigs", action="store_true")
    t1.add_argument("--out", required=True)
    t1.set_defaults(func=_cmd_study_test1)

    t2 = study_sub.add_parser("test2", help="corner impulse, Newmark vs Bathe")
    t2.add_argument("--h", type=_parse_float, default=1.0 / 50.0, help="grid spacing")
    t2.add_argument("--tau-list", type=_parse_float_list, default=(1.0 / 20.0,))
    t2.add_argument("--out", required=True)
    t2.set_defaults(func=_cmd_study_test2)

    dump = sub.add_parser("dump", help="per-element matrices for golden tests")
    dump.add_argument("--mesh", required=True)
    dump.add_argument("--k", type=int, default=1, choices=(1, 2, 3))
    dump.add_argument("--cell", type=int, default=None)
    dump.add_argument("--out", default=None)
    dump.set_defaults(func=_cmd_dump_elements)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
