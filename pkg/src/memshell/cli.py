"""Command-line driver: benchmark runs, convergence studies, mesh inspection.

Subcommands
-----------
run
    Build the case, assemble, constrain (cylinder), solve, recover stresses,
    write ``solution.vtk`` and ``report.txt``.
convergence
    Run a refinement ladder, write ``convergence.csv`` (h, error, rate) and
    ``report.txt``, print the fitted slope.
mesh-info
    Print mesh statistics for a generated or imported mesh.

Flags override values from an optional ``key = value`` config file. Defaults
are the benchmark values (E=100, nu=1/2, t=1e-2, F=1, p=1; cylinder r=1, L=4;
torus R=1, r=1/2). The resolution parameter ``n`` maps to
``(n_circ, n_axial) = (n, n)`` for the cylinder and ``(n_tor, n_pol) =
(2n, n)`` for the torus, keeping elements near-isotropic.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import assembly, geometry, mesh, postprocess, solver
from .element import quadrature_rule

__all__ = ["RunConfig", "run_case", "run_convergence", "main"]

DEFAULT_RESOLUTIONS = (16, 32, 64, 128)


@dataclasses.dataclass
class RunConfig:
    """Parameters of one benchmark or import run."""

    case: str = "cylinder"
    n: int = 32
    r: float | None = None  # cylinder radius / torus minor radius
    L: float = 4.0
    R: float = 1.0
    E: float = 100.0
    nu: float = 0.5
    t: float = 0.01
    mode: str = "plane_stress"
    F: float = 1.0
    p: float = 1.0
    variant: str = "interpolated"
    tol: float = 1e-10
    max_iter: int | None = None
    out: str = "out"
    mesh_path: str | None = None

    def resolved_r(self) -> float:
        if self.r is not None:
            return self.r
        return 1.0 if self.case == "cylinder" else 0.5


@dataclasses.dataclass
class CaseResult:
    """Everything produced by one solve of a configured case."""

    mesh: "mesh.SurfaceMesh"
    h: float
    displacement: np.ndarray
    field: "postprocess.StressField"
    error: float | None
    report: "solver.SolveReport"
    rotation_fraction: float | None


def _build_case(config: RunConfig, n: int):
    """Mesh, material, load, constrain flag, deflation flag, exact solution."""
    material = geometry.MaterialModel(config.E, config.nu, config.t, config.mode)
    if config.case == "cylinder":
        surf = geometry.Cylinder(config.resolved_r(), config.L)
        msh = mesh.build_cylinder_mesh(surf.r, surf.L, n, n)
        exact = geometry.cylinder_exact(config.F, material, surf)
        return msh, material, exact.load_at, True, False, exact
    if config.case == "torus":
        surf = geometry.Torus(config.R, config.resolved_r())
        msh = mesh.build_torus_mesh(surf.R, surf.r, 2 * n, n)
        exact = geometry.torus_exact(config.p, material, surf)
        return msh, material, exact.load_at, False, True, exact
    raise ValueError(f"unknown case {config.case!r} (expected cylinder, torus, import)")


def _rotation_fraction(msh, u: np.ndarray) -> float:
    """Fraction of the solution lying in the span of the linearized rotations."""
    x = msh.vertices - msh.vertices.mean(axis=0)
    basis = np.empty((3 * msh.n_vertices, 3))
    for k in range(3):
        axis = np.zeros(3)
        axis[k] = 1.0
        basis[:, k] = np.cross(axis, x).ravel()
    q, _ = np.linalg.qr(basis)
    un = np.linalg.norm(u)
    if un == 0:
        return 0.0
    return float(np.linalg.norm(q.T @ u) / un)


def solve_case(config: RunConfig, n: int | None = None) -> CaseResult:
    """Assemble, constrain, solve, and recover stresses for one resolution."""
    n = config.n if n is None else n
    quad = quadrature_rule(2)
    if config.case == "import":
        msh = mesh.import_mesh(config.mesh_path) if config.mesh_path else None
        if msh is None:
            raise ValueError("case 'import' requires a mesh file (--mesh)")
        material = geometry.MaterialModel(config.E, config.nu, config.t, config.mode)
        system = assembly.assemble(msh, material, None, quad, config.variant)
        system.rhs[:] = assembly.pressure_rhs(msh, config.p, quad, config.variant)
        constraints = []
        deflate = True
        exact = None
    else:
        msh, material, load_at, constrain, deflate, exact = _build_case(config, n)
        system = assembly.assemble(msh, material, load_at, quad, config.variant)
        constraints = assembly.cylinder_constraints(msh) if constrain else []
    if constraints:
        system = assembly.apply_constraints(system, constraints)
    u_sys, report = solver.solve(
        system,
        tol=config.tol,
        max_iter=config.max_iter,
        deflate_translations=deflate,
    )
    u = system.recover(u_sys)
    field = postprocess.recover_stress(msh, material, u, quad, config.variant)
    error = postprocess.stress_l2_error(field, exact) if exact is not None else None
    rot = _rotation_fraction(msh, u) if deflate else None
    return CaseResult(
        mesh=msh,
        h=mesh.mesh_size(msh),
        displacement=u,
        field=field,
        error=error,
        report=report,
        rotation_fraction=rot,
    )


def _report_lines(config: RunConfig, result: CaseResult, n: int) -> list[str]:
    lines = [
        f"case: {config.case}",
        f"variant: {config.variant}",
        f"resolution n: {n}",
        f"vertices: {result.mesh.n_vertices}",
        f"triangles: {result.mesh.n_triangles}",
        f"mesh size h: {result.h:.12e}",
        f"material: E={config.E} nu={config.nu} t={config.t} mode={config.mode}",
        f"load scale: {config.F if config.case == 'cylinder' else config.p}",
        f"solver iterations: {result.report.iterations}",
        f"solver relative residual: {result.report.relative_residual:.6e}",
        f"deflated kernel dimension: {result.report.deflated_dimension}",
    ]
    if result.rotation_fraction is not None:
        lines.append(f"rotation component of solution: {result.rotation_fraction:.6e}")
    if result.error is not None:
        lines.append(f"stress L2 error: {result.error:.12e}")
    return lines


def run_case(config: RunConfig) -> dict:
    """Execute one run; returns artifact paths and headline numbers."""
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    result = solve_case(config)
    vtk_path = outdir / "solution.vtk"
    postprocess.export_vtk(result.mesh, result.displacement, result.field, vtk_path)
    report_path = outdir / "report.txt"
    report_path.write_text("\n".join(_report_lines(config, result, config.n)) + "\n")
    return {
        "vtk": vtk_path,
        "report": report_path,
        "error": result.error,
        "solve_report": result.report,
    }


def run_convergence(config: RunConfig, resolutions=None) -> tuple[
        "postprocess.ConvergenceRecord", list[CaseResult]]:
    """Run a refinement ladder and fit the stress-error rate.

    The CSV table is flushed after each resolution, so a failing level leaves
    the completed rows on disk.
    """
    if config.case not in ("cylinder", "torus"):
        raise ValueError("convergence studies require case 'cylinder' or 'torus'")
    resolutions = list(resolutions) if resolutions is not None else list(DEFAULT_RESOLUTIONS)
    if len(resolutions) < 3:
        raise ValueError("need at least 3 resolutions for a rate fit")
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "convergence.csv"

    results: list[CaseResult] = []
    hs: list[float] = []
    errors: list[float] = []
    with open(csv_path, "w") as fh:
        fh.write("h,error,rate\n")
        for n in resolutions:
            result = solve_case(config, n)
            results.append(result)
            hs.append(result.h)
            errors.append(result.error)
            if len(hs) == 1:
                fh.write(f"{hs[-1]:.12e},{errors[-1]:.12e},\n")
            else:
                rate = np.log(errors[-2] / errors[-1]) / np.log(hs[-2] / hs[-1])
                fh.write(f"{hs[-1]:.12e},{errors[-1]:.12e},{rate:.6f}\n")
            fh.flush()

    record = postprocess.fit_convergence(list(zip(hs, errors)))
    report_path = outdir / "report.txt"
    lines = [
        f"case: {config.case}",
        f"variant: {config.variant}",
        f"resolutions: {' '.join(str(n) for n in resolutions)}",
        f"fitted slope: {record.slope:.6f}",
        f"fit residual: {record.fit_residual:.6e}",
    ]
    report_path.write_text("\n".join(lines) + "\n")
    return record, results


def _mesh_info_lines(msh) -> list[str]:
    lines = [
        f"vertices: {msh.n_vertices}",
        f"triangles: {msh.n_triangles}",
        f"edges: {len(msh.edges())}",
        f"euler characteristic: {msh.euler_characteristic()}",
        f"area: {msh.area():.12e}",
        f"mesh size h: {mesh.mesh_size(msh):.12e}",
        f"boundary components: {len(msh.boundary_components)}",
    ]
    for comp in msh.boundary_components:
        lines.append(f"  {comp.label}: {len(comp)} vertices")
    return lines


def _read_config_file(path: str) -> dict:
    """Parse a minimal ``key = value`` file (one pair per line, # comments)."""
    values: dict[str, object] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"invalid config line: {raw.strip()!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip().strip("\"'")
        for cast in (int, float):
            try:
                val = cast(val)
                break
            except ValueError:
                continue
        values[key] = val
    return values


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--case", choices=["cylinder", "torus", "import"])
    p.add_argument("--n", type=int, help="resolution parameter")
    p.add_argument("--variant", choices=["interpolated", "facet"])
    p.add_argument("--E", type=float, help="Young's modulus")
    p.add_argument("--nu", type=float, help="Poisson's ratio")
    p.add_argument("--t", type=float, help="thickness")
    p.add_argument("--mode", choices=["plane_stress", "plane_strain"])
    p.add_argument("--F", type=float, help="cylinder total-force scale")
    p.add_argument("--p", type=float, help="torus/import gauge pressure")
    p.add_argument("--r", type=float, help="cylinder radius / torus minor radius")
    p.add_argument("--L", type=float, help="cylinder length")
    p.add_argument("--R", type=float, help="torus major radius")
    p.add_argument("--tol", type=float, help="solver relative residual target")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--out", help="output directory")
    p.add_argument("--mesh", dest="mesh_path", help="mesh file for case 'import'")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
        valid = {f.name for f in dataclasses.fields(RunConfig)}
        for key, value in file_values.items():
            if key == "mesh":
                key = "mesh_path"
            if key not in valid:
                raise ValueError(f"unknown config key {key!r}")
            setattr(config, key, value)
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(config, f.name, value)
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="memshell",
        description="Membrane shell finite elements on triangulated surfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one case and export the solution")
    _add_common_flags(p_run)

    p_conv = sub.add_parser("convergence", help="refinement ladder and rate fit")
    _add_common_flags(p_conv)
    p_conv.add_argument("--resolutions", help="comma-separated ladder, default 16,32,64,128")

    p_info = sub.add_parser("mesh-info", help="print mesh statistics")
    _add_common_flags(p_info)

    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "run":
            artifacts = run_case(config)
            print(f"wrote {artifacts['vtk']}")
            print(f"wrote {artifacts['report']}")
            if artifacts["error"] is not None:
                print(f"stress L2 error: {artifacts['error']:.12e}")
            rep = artifacts["solve_report"]
            print(f"solver: {rep.iterations} iterations, "
                  f"relative residual {rep.relative_residual:.3e}")
            return 0
        if args.command == "convergence":
            resolutions = None
            if args.resolutions:
                resolutions = [int(s) for s in args.resolutions.split(",") if s.strip()]
            record, _ = run_convergence(config, resolutions)
            outdir = Path(config.out)
            for h, e in zip(record.h, record.error):
                print(f"h={h:.6e}  error={e:.6e}")
            print(f"fitted slope: {record.slope:.6f}")
            print(f"wrote {outdir / 'convergence.csv'}")
            print(f"wrote {outdir / 'report.txt'}")
            return 0
        if args.command == "mesh-info":
            if config.mesh_path:
                msh = mesh.import_mesh(config.mesh_path)
            elif config.case == "cylinder":
                msh = mesh.build_cylinder_mesh(config.resolved_r(), config.L, config.n, config.n)
            elif config.case == "torus":
                msh = mesh.build_torus_mesh(config.R, config.resolved_r(), 2 * config.n, config.n)
            else:
                raise ValueError("mesh-info requires --mesh or --case cylinder/torus")
            print("\n".join(_mesh_info_lines(msh)))
            return 0
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        module = type(exc).__module__
        origin = module.rsplit(".", 1)[-1] if module.startswith("memshell") else module
        print(f"memshell: error [{origin}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
