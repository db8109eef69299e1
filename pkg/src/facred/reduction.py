"""Facial reduction driver: face chains, certificates, verification, and the
decomposition of certificates into cone and tangent parts.

The driver repeatedly solves the reducing pair; every recorded step strictly
shrinks the face, and the run ends with a confirmation solve that also
produces a point whose slack lies in the relative interior of the final
face.  The number of reducing steps never exceeds
min(longest face chain - 1, dim of the joint nullspace of the data).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .faces import (FaceRep, face_contains, face_dual_membership, faces_equal,
                    in_tangent_space, intersect_with_hyperplane,
                    longest_chain_length, relative_interior_point)
from .linalg import nullspace_basis
from .model import ConicProgram, YElement, adjoint_apply, primal_slack
from .reducing import (AmbiguousOutcome, ReducingOutcome, SolverError,
                       reduced_program, solve_reducing_pair)
from .solver import SolverOptions


class ReductionError(RuntimeError):
    """The reduction run could not be completed; carries the partial chain."""

    def __init__(self, message, partial_chain=None):
        super().__init__(message)
        self.partial_chain = partial_chain


@dataclass
class ReductionCertificate:
    """Chain y_0 .. y_t (y_0 = 0) with faces F_0 .. F_t, per-step reducing
    flags, and a point whose slack is strictly inside the final face."""

    ys: list
    faces: list
    reducing_flags: list
    x_strict: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.ys) - 1

    @property
    def reducing_count(self) -> int:
        return sum(1 for flag in self.reducing_flags if flag)

    @property
    def minimal_face(self) -> FaceRep:
        return self.faces[-1]


@dataclass
class DecomposedChain:
    """Certificates split as y_i = u_i + v_i with u_i in the dual cone and
    v_i in the tangent space of the dual cone at u_0 + ... + u_{i-1}."""

    us: list
    vs: list

    def padded(self, length: int):
        """Extend with zero pairs up to ``length`` + 1 entries."""
        blocks = self.us[0].blocks
        us, vs = list(self.us), list(self.vs)
        while len(us) < length + 1:
            us.append(YElement.zeros(blocks))
            vs.append(YElement.zeros(blocks))
        return DecomposedChain(us, vs)


def compute_ell(p: ConicProgram, tol: float = None) -> int:
    """Bound on reducing iterations and on the depth of extended duals:
    min(longest face chain of the cone - 1, dim of the nullspace of the
    stacked constraint data and right-hand side)."""
    dim_l = len(nullspace_basis(list(p.a) + [p.b], tol))
    return min(longest_chain_length(p.blocks) - 1, dim_l)


def run_facial_reduction(p: ConicProgram, tol: float = None,
                         options: SolverOptions = None) -> ReductionCertificate:
    """Compute the minimal cone of a feasible program.

    Returns the full certificate chain; raises ReductionError (with the
    partial chain attached) when a reducing solve fails or the theoretical
    iteration bound is exceeded, and propagates AmbiguousOutcome when a
    reducing value falls between the decision rungs.
    """
    if tol is None:
        tol = config.DEFAULT_TOL
    if options is None:
        options = SolverOptions()
    rng = np.random.default_rng(options.seed)

    face = FaceRep.full_cone(p.blocks)
    ys = [YElement.zeros(p.blocks)]
    faces = [face]
    flags = []
    ell = compute_ell(p)

    def partial():
        return ReductionCertificate(ys, faces, flags, None)

    for _ in range(ell + 1):
        try:
            outcome = solve_reducing_pair(p, face, tol, options)
        except (AmbiguousOutcome, SolverError) as exc:
            if isinstance(exc, AmbiguousOutcome):
                exc.partial_chain = partial()
                raise
            raise ReductionError(str(exc), partial()) from exc
        if outcome.minimal:
            return ReductionCertificate(ys, faces, flags, outcome.x_strict)
        new_face = intersect_with_hyperplane(face, outcome.y)
        if faces_equal(new_face, face):
            # A certificate that cuts nothing is numerical dust; retry once
            # from a perturbed interior point before giving up.
            f_pert = _perturbed_interior_point(face, rng)
            outcome = solve_reducing_pair(p, face, tol, options,
                                          f_override=f_pert)
            if outcome.minimal:
                return ReductionCertificate(ys, faces, flags, outcome.x_strict)
            new_face = intersect_with_hyperplane(face, outcome.y)
            if faces_equal(new_face, face):
                raise AmbiguousOutcome(
                    "reducing certificates repeatedly failed to cut the face",
                    partial_chain=partial())
        ys.append(outcome.y)
        faces.append(new_face)
        flags.append(True)
        face = new_face

    raise ReductionError(
        f"exceeded the bound of {ell} reducing iterations", partial())


def _perturbed_interior_point(face: FaceRep, rng) -> YElement:
    base = relative_interior_point(face)
    parts = []
    for blk, rep, part in zip(face.blocks, face.reps, base.parts):
        if blk.kind == "orthant":
            jitter = np.ones(blk.size)
            sup = list(rep.support)
            if sup:
                jitter[sup] = 1.0 + 0.2 * rng.random(len(sup))
            parts.append(part * jitter)
        else:
            q = rep.basis
            r = q.shape[1]
            if r:
                w = rng.normal(size=(r, r))
                w = 0.05 * (w + w.T) / max(1.0, np.linalg.norm(w))
                parts.append(q @ (np.eye(r) + w) @ q.T)
            else:
                parts.append(part)
    return YElement(face.blocks, parts)


@dataclass
class CheckRecord:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, name, ok, detail=""):
        self.checks.append(CheckRecord(name, bool(ok), detail))

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def lines(self):
        return [f"{'pass' if c.ok else 'FAIL'}  {c.name}"
                + (f"  ({c.detail})" if c.detail else "")
                for c in self.checks]


def verify_certificate_chain(p: ConicProgram, cert: ReductionCertificate,
                             tol: float = None) -> VerificationReport:
    """Independently recheck a reduction certificate.

    Pure evaluation, no solves: nullspace membership of every certificate,
    membership in the running face dual, face recomputation, flag
    consistency, and the strict-slack condition for the final face.
    """
    if tol is None:
        tol = config.DEFAULT_TOL
    report = VerificationReport()
    report.add("chain starts at zero", cert.ys[0].norm() <= tol,
               f"|y_0| = {cert.ys[0].norm():.2e}")

    face = FaceRep.full_cone(p.blocks)
    if not faces_equal(cert.faces[0], face):
        report.add("face 0 is the full cone", False, cert.faces[0].describe())
        return report
    report.add("face 0 is the full cone", True)

    for i in range(1, len(cert.ys)):
        y = cert.ys[i]
        scale = 1.0 + y.norm()
        resid = np.concatenate([adjoint_apply(p, y), [p.b.inner(y)]])
        in_l = float(np.max(np.abs(resid), initial=0.0)) <= tol * scale
        report.add(f"y_{i} in the data nullspace", in_l,
                   f"residual {np.max(np.abs(resid), initial=0.0):.2e}")
        in_dual = face_dual_membership(face, y, tol)
        report.add(f"y_{i} in the dual of face {i - 1}", in_dual)
        if not (in_l and in_dual):
            return report
        try:
            new_face = intersect_with_hyperplane(face, y)
        except ValueError as exc:
            report.add(f"face {i} recomputation", False, str(exc))
            return report
        matches = faces_equal(cert.faces[i], new_face)
        report.add(f"face {i} matches the recomputed intersection", matches,
                   cert.faces[i].describe())
        strict = not faces_equal(new_face, face)
        flag = cert.reducing_flags[i - 1]
        report.add(f"step {i} flag consistent", flag == strict,
                   f"flagged {flag}, strict drop {strict}")
        face = new_face

    if cert.x_strict is None:
        report.add("strictly feasible point present", False)
        return report
    slack = primal_slack(p, cert.x_strict)
    inside = face_contains(face, slack, tol)
    margin = _interior_margin(face, slack)
    report.add("slack of x_strict lies in the final face", inside)
    report.add("slack of x_strict is strictly interior", margin > tol,
               f"margin {margin:.2e}")
    return report


def _interior_margin(face: FaceRep, y: YElement) -> float:
    """Smallest compressed coordinate of y relative to the face (interior
    margin; +inf for the zero face)."""
    margin = np.inf
    for blk, rep, part in zip(face.blocks, face.reps, y.parts):
        if blk.kind == "orthant":
            if rep.support:
                margin = min(margin, float(np.min(part[list(rep.support)])))
        else:
            q = rep.basis
            if q.shape[1]:
                margin = min(margin, float(
                    np.linalg.eigvalsh(q.T @ part @ q)[0]))
    return margin


def decompose_certificates(p: ConicProgram, cert: ReductionCertificate,
                           tol: float = 1e-8) -> DecomposedChain:
    """Split each chain certificate as y_i = u_i + v_i with u_i in the dual
    cone and v_i in the orthogonal complement of face i-1 (equivalently the
    tangent space of the dual cone at the running sum of the u_j)."""
    us = [YElement.zeros(p.blocks)]
    vs = [YElement.zeros(p.blocks)]
    for i in range(1, len(cert.ys)):
        y = cert.ys[i]
        face = cert.faces[i - 1]
        u_parts = []
        for blk, rep, part in zip(p.blocks, face.reps, y.parts):
            if blk.kind == "orthant":
                vec = np.zeros(blk.size)
                sup = list(rep.support)
                if sup:
                    vec[sup] = np.maximum(part[sup], 0.0)
                u_parts.append(vec)
            else:
                q = rep.basis
                mat = np.zeros((blk.size, blk.size))
                if q.shape[1]:
                    compressed = q.T @ part @ q
                    lam, w = np.linalg.eigh(0.5 * (compressed + compressed.T))
                    compressed = (w * np.maximum(lam, 0.0)) @ w.T
                    mat = q @ compressed @ q.T
                u_parts.append(mat)
        u = YElement(p.blocks, u_parts)
        v = y - u
        resid = min(u.min_eigenvalue(), 0.0)
        if abs(resid) > tol * (1.0 + y.norm()):
            raise ValueError(f"cone part of step {i} has eigenvalue {resid:.2e}")
        us.append(u)
        vs.append(v)
    _verify_tangency(p, us, vs, tol)
    return DecomposedChain(us, vs)


def _verify_tangency(p, us, vs, tol):
    running = YElement.zeros(p.blocks)
    for i in range(1, len(us)):
        for bi, blk in enumerate(p.blocks):
            vpart = vs[i].parts[bi]
            wpart = running.parts[bi]
            scale = 1.0 + float(np.max(np.abs(vpart), initial=0.0))
            if blk.kind == "orthant":
                dead = wpart <= config.RANK_TOL
                if np.max(np.abs(vpart[dead]), initial=0.0) > tol * scale:
                    raise ValueError(
                        f"tangent part of step {i} leaves the tangent space")
            else:
                if not in_tangent_space(wpart, vpart, tol):
                    raise ValueError(
                        f"tangent part of step {i} leaves the tangent space")
        running = running + us[i]


__all__ = [
    "AmbiguousOutcome", "DecomposedChain", "ReducingOutcome",
    "ReductionCertificate", "ReductionError", "VerificationReport",
    "compute_ell", "decompose_certificates", "reduced_program",
    "run_facial_reduction", "solve_reducing_pair", "verify_certificate_chain",
]
