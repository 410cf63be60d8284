"""Jacobi-preconditioned conjugate gradients with rigid-translation deflation.

Closed-surface membrane systems are symmetric positive semidefinite with the
three global translations in the kernel (and, depending on geometry, further
low-energy modes). For a consistent right-hand side CG converges in the range
space; deflation projects the rhs and every iterate against the translations
so the returned solution carries no translation component. Negative curvature
(an indefinite matrix) aborts with the iteration index.
"""

import dataclasses
import math

import numpy as np

from .assembly import LinearSystem

__all__ = [
    "SolverError",
    "NegativeCurvatureError",
    "IterationLimitError",
    "SolveReport",
    "translation_basis",
    "solve",
]


class SolverError(RuntimeError):
    """Base class for solver failures."""


class NegativeCurvatureError(SolverError):
    """CG met a direction of non-positive curvature (matrix not PSD)."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class IterationLimitError(SolverError):
    """CG hit the iteration limit; carries the last iterate and its report."""

    def __init__(self, message: str, solution: np.ndarray, report: "SolveReport"):
        super().__init__(message)
        self.solution = solution
        self.report = report


@dataclasses.dataclass
class SolveReport:
    """Iteration count, final residual, and deflation bookkeeping.

    ``relative_residual`` is ``||K u - b|| / ||b||`` recomputed from scratch
    at exit, with ``b`` the (possibly deflated) right-hand side actually
    solved for.
    """

    iterations: int
    relative_residual: float
    deflated_dimension: int
    converged: bool


def translation_basis(system: LinearSystem) -> np.ndarray:
    """Orthonormal basis of the rigid translations restricted to free dofs.

    For a constrained system the global translations are expressed in the
    rotated nodal frames and the eliminated dofs zeroed; directions that the
    constraints remove entirely are dropped. Returns an (ndof, k) matrix with
    orthonormal columns, k <= 3.
    """
    ndof = system.ndof
    Z = np.zeros((ndof, 3))
    for c in range(3):
        Z[c::3, c] = 1.0
    if system.frame is not None:
        Z = system.frame.T @ Z
    if system.constrained is not None:
        Z[system.constrained] = 0.0
    q, rdiag = np.linalg.qr(Z)
    keep = np.abs(np.diag(rdiag)) > 1e-8 * math.sqrt(ndof)
    return q[:, keep]


def solve(system: LinearSystem, tol: float = 1e-10, max_iter: int | None = None,
          deflate_translations: bool = False, x0: np.ndarray | None = None,
          tikhonov: bool = False) -> tuple[np.ndarray, SolveReport]:
    """Solve ``K u = b`` by preconditioned conjugate gradients.

    Parameters
    ----------
    system : LinearSystem
        Symmetric positive (semi)definite system.
    tol : float
        Relative residual target.
    max_iter : int, optional
        Defaults to ``ceil(50 * sqrt(ndof))``.
    deflate_translations : bool
        Project the rhs and all iterates against the rigid translations
        (use for closed surfaces, where they span the kernel).
    x0 : array, optional
        Initial guess (default zero; any translation component is removed
        when deflating).
    tikhonov : bool
        Diagnostic fallback: adds ``1e-12 * max(diag)`` to the diagonal.
        Never needed for well-formed benchmark systems.

    Returns
    -------
    (u, SolveReport)

    Raises
    ------
    NegativeCurvatureError
        If a search direction has non-positive curvature.
    IterationLimitError
        If ``max_iter`` is reached before the tolerance (the exception
        carries the last iterate and its report).
    """
    A = system.matrix
    b = system.rhs.astype(float).copy()
    ndof = system.ndof
    if max_iter is None:
        max_iter = max(50, math.ceil(50.0 * math.sqrt(ndof)))

    shift = 0.0
    diag = A.diagonal()
    if tikhonov:
        shift = 1e-12 * float(diag.max())

    def matvec(v):
        out = A @ v
        if shift:
            out = out + shift * v
        return out

    Z = translation_basis(system) if deflate_translations else None
    kdim = 0 if Z is None else Z.shape[1]

    def deflate(v):
        if Z is not None:
            v -= Z @ (Z.T @ v)
        return v

    b = deflate(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(ndof), SolveReport(0, 0.0, kdim, True)

    d = diag + shift
    if np.any(d <= 0):
        raise SolverError("non-positive diagonal entry; system is not PSD")
    inv_diag = 1.0 / d

    x = np.zeros(ndof) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (ndof,):
        raise SolverError(f"initial guess has wrong shape {x.shape}")
    x = deflate(x)

    r = deflate(b - matvec(x))
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    converged = float(np.linalg.norm(r)) <= tol * bnorm

    while not converged and iterations < max_iter:
        iterations += 1
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise NegativeCurvatureError(
                f"non-positive curvature {pAp:.3e} at iteration {iterations}",
                iteration=iterations,
            )
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        x = deflate(x)
        r = deflate(r)
        if float(np.linalg.norm(r)) <= tol * bnorm:
            # guard against recurrence drift: recompute the true residual
            r = deflate(b - matvec(x))
            if float(np.linalg.norm(r)) <= tol * bnorm:
                converged = True
                break
            z = inv_diag * r
            p = z.copy()
            rz = float(r @ z)
            continue
        z = inv_diag * r
        rz_new = float(r @ z)
        beta = rz_new / rz
        p = z + beta * p
        rz = rz_new

    final = deflate(b - matvec(x))
    report = SolveReport(
        iterations=iterations,
        relative_residual=float(np.linalg.norm(final)) / bnorm,
        deflated_dimension=kdim,
        converged=converged,
    )
    if not converged:
        raise IterationLimitError(
            f"no convergence in {max_iter} iterations "
            f"(relative residual {report.relative_residual:.3e})",
            solution=x,
            report=report,
        )
    return x, report
