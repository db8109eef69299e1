"""Face-restricted solves and the auxiliary reducing pair.

Restricting the constraint  b - Ax in F  to a face F splits into linear
equalities (the coordinates of b - Ax outside the span of F must vanish) and
a standard cone constraint in the face's compressed coordinates.  The
equalities are eliminated by parameterizing x over their solution set, so
the subsolver only ever sees orthant/PSD cones.

The reducing pair decides whether F already is the minimal cone of the
program (there is a slack in the relative interior of F) or produces a
certificate y in F* and the nullspace that cuts F down; both come out of one
interior-point solve of the bounded primal

    sup t   s.t.  b - Ax - t f in F,  t <= 1,

whose dual optimal solution at value 0 is exactly the certificate, after
undoing the compression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .faces import FaceRep, face_dual_membership, relative_interior_point
from .model import ConeBlock, ConicProgram, YElement
from .solver import SolverError, SolverOptions, SolveStatus, solve_conic_lp


class AmbiguousOutcome(RuntimeError):
    """The reducing program's optimum falls between the decision rungs."""

    def __init__(self, message, value=None, partial_chain=None):
        super().__init__(message)
        self.value = value
        self.partial_chain = partial_chain


@dataclass(frozen=True)
class ReducingOutcome:
    """Either a reducing certificate or the confirmation of minimality."""

    minimal: bool
    y: YElement = None           # certificate, normalized <f, y> = 1
    x_strict: np.ndarray = None  # point with slack in ri F
    value: float = 0.0           # optimal value of the reducing primal

    @classmethod
    def reduced(cls, y, value):
        return cls(False, y=y, value=value)

    @classmethod
    def minimal_reached(cls, x_strict, value):
        return cls(True, x_strict=np.asarray(x_strict, dtype=float), value=value)


def _rotation(face, blk, rep):
    """Orthogonal change of basis [face basis | complement] for a PSD block."""
    from .faces import _orthonormal_complement

    q = rep.basis
    comp = _orthonormal_complement(q, blk.size)
    return np.hstack([q, comp]), q.shape[1]


class FaceCoordinates:
    """Coordinates adapted to a face: compressed cone part plus the linear
    functionals that must vanish for membership in the face's span."""

    def __init__(self, p: ConicProgram, face: FaceRep):
        if p.blocks != face.blocks:
            raise ValueError("face structure differs from program")
        self.program = p
        self.face = face
        self.rotations = []   # per block: (V, r) for psd, support array for orthant
        kept = []
        for blk, rep in zip(p.blocks, face.reps):
            if blk.kind == "orthant":
                support = np.array(rep.support, dtype=int)
                self.rotations.append(support)
                if support.size:
                    kept.append(ConeBlock("orthant", support.size))
            else:
                v, r = _rotation(face, blk, rep)
                self.rotations.append((v, r))
                if r:
                    kept.append(ConeBlock("psd", r))
        self.blocks_hat = tuple(kept)

        # Equality rows: outside-of-span coordinates of b - Ax must vanish.
        rows, rhs, self._row_keys = [], [], []
        for bi, (blk, rot) in enumerate(zip(p.blocks, self.rotations)):
            if blk.kind == "orthant":
                outside = [i for i in range(blk.size) if i not in set(rot.tolist())]
                for i in outside:
                    rows.append([ai.parts[bi][i] for ai in p.a])
                    rhs.append(p.b.parts[bi][i])
                    self._row_keys.append((bi, i))
            else:
                v, r = rot
                rot_a = [v.T @ ai.parts[bi] @ v for ai in p.a]
                rot_b = v.T @ p.b.parts[bi] @ v
                for k in range(blk.size):
                    for l in range(max(k, r), blk.size):
                        if k < r and l < r:
                            continue
                        w = 1.0 if k == l else 2.0
                        rows.append([w * ra[k, l] for ra in rot_a])
                        rhs.append(w * rot_b[k, l])
                        self._row_keys.append((bi, k, l))
        self.eq_matrix = np.array(rows, dtype=float).reshape(len(rows), p.m)
        self.eq_rhs = np.array(rhs, dtype=float)

        if self.eq_matrix.shape[0]:
            sol, *_ = np.linalg.lstsq(self.eq_matrix, self.eq_rhs, rcond=None)
            resid = np.linalg.norm(self.eq_matrix @ sol - self.eq_rhs)
            if resid > 1e-7 * (1.0 + np.linalg.norm(self.eq_rhs)):
                raise SolverError(
                    "face does not admit the affine constraints: the span "
                    f"equations are inconsistent (residual {resid:.3e})")
            self.x_particular = sol
            u, s, vt = np.linalg.svd(self.eq_matrix)
            rank = int(np.sum(s > 1e-10 * (s[0] if s.size else 1.0)))
            self.null_basis = vt[rank:].T
        else:
            self.x_particular = np.zeros(p.m)
            self.null_basis = np.eye(p.m)

    def compress(self, y: YElement):
        """Per-kept-block compressed payloads of a constraint-space element."""
        parts = []
        for blk, rot, part in zip(self.program.blocks, self.rotations, y.parts):
            if blk.kind == "orthant":
                if rot.size:
                    parts.append(part[rot])
            else:
                v, r = rot
                if r:
                    q = v[:, :r]
                    parts.append(q.T @ part @ q)
        return parts

    def embed(self, parts) -> YElement:
        """Inverse of compress: place compressed payloads back, zero outside."""
        full, at = [], 0
        for blk, rot in zip(self.program.blocks, self.rotations):
            if blk.kind == "orthant":
                vec = np.zeros(blk.size)
                if rot.size:
                    vec[rot] = parts[at]
                    at += 1
                full.append(vec)
            else:
                v, r = rot
                mat = np.zeros((blk.size, blk.size))
                if r:
                    q = v[:, :r]
                    mat = q @ parts[at] @ q.T
                    at += 1
                full.append(mat)
        return YElement(self.program.blocks, full)

    def outside_element(self, coeffs) -> YElement:
        """Linear combination of the outside-coordinate unit elements; the
        piece of a dual certificate living in the face's orthocomplement."""
        parts = [np.array(blk.zero()) for blk in self.program.blocks]
        for coeff, key in zip(coeffs, self._row_keys):
            if len(key) == 2:
                bi, i = key
                parts[bi][i] += coeff
            else:
                bi, k, l = key
                v, _ = self.rotations[bi]
                unit = np.zeros((self.program.blocks[bi].size,) * 2)
                unit[k, l] = 1.0
                unit[l, k] = 1.0
                parts[bi] += v @ unit @ v.T * coeff
        return YElement(self.program.blocks, parts)


def polish_certificate(p: ConicProgram, face: FaceRep, f: YElement,
                       y0: YElement, x0: np.ndarray, max_steps: int = 12):
    """Gauss-Newton refinement of a reducing certificate.

    An interior-point certificate sits about sqrt(gap) away from an exact
    one, which is too coarse for the rank geometry downstream.  The exact
    certificates are cut out by smooth equations: orthogonality to the data,
    the normalization against the face's interior point, the bilinear
    complementarity  slack(x) . y = 0,  and the requirement that slack(x)
    stays in the face's span.  Gauss-Newton from the solver's point lands on
    a nearby exact solution; any exact solution cuts a valid face, so the
    residual norm is all that matters.
    """
    from .linalg import flatten_element, unflatten_element

    dim = p.ambient_dim
    m = p.m
    x = np.asarray(x0, dtype=float).copy()
    yvec = flatten_element(y0)
    flat_a = np.vstack([flatten_element(ai) for ai in p.a]) if m else \
        np.zeros((0, dim))
    flat_b = flatten_element(p.b)
    flat_f = flatten_element(f)
    span_rows, span_rhs = _span_equations(p, face)
    basis_elements = [unflatten_element(col, p.blocks) for col in np.eye(dim)]

    # Complementarity lives in the face's compressed coordinates: both the
    # slack and the certificate are psd there, so orthogonality of the
    # inner product forces the compressed matrix product to vanish.
    def compress_pair(bi, s_part, y_part):
        rep = face.reps[bi]
        blk = p.blocks[bi]
        if blk.kind == "orthant":
            sup = list(rep.support)
            return s_part[sup], y_part[sup]
        q = rep.basis
        return q.T @ s_part @ q, q.T @ y_part @ q

    def residual(x, yel):
        slack = p.b - p.apply(x)
        parts = [flat_a @ flatten_element(yel) if m else np.zeros(0),
                 np.array([flat_b @ flatten_element(yel)]),
                 np.array([flat_f @ flatten_element(yel) - 1.0])]
        for bi, blk in enumerate(p.blocks):
            s_c, y_c = compress_pair(bi, slack.parts[bi], yel.parts[bi])
            if blk.kind == "orthant":
                parts.append(s_c * y_c)
            else:
                parts.append((s_c @ y_c).reshape(-1))
        if span_rows.shape[0]:
            parts.append(span_rows @ x - span_rhs)
        return np.concatenate(parts), slack

    best = None
    for _ in range(max_steps):
        yel = unflatten_element(yvec, p.blocks)
        res, slack = residual(x, yel)
        norm = float(np.linalg.norm(res))
        if best is None or norm < best[0]:
            best = (norm, x.copy(), yvec.copy())
        if norm <= 1e-13 * (1.0 + float(np.linalg.norm(yvec))):
            break
        rows = []
        rows.append(np.hstack([np.zeros((m, m)), flat_a]))
        rows.append(np.hstack([np.zeros((1, m)), flat_b[None, :]]))
        rows.append(np.hstack([np.zeros((1, m)), flat_f[None, :]]))
        for bi, blk in enumerate(p.blocks):
            s_c, y_c = compress_pair(bi, slack.parts[bi], yel.parts[bi])
            if blk.kind == "orthant":
                d = len(s_c)
                jx = np.zeros((d, m))
                for i in range(m):
                    a_c, _ = compress_pair(bi, p.a[i].parts[bi],
                                           p.a[i].parts[bi])
                    jx[:, i] = -a_c * y_c
                jy = np.zeros((d, dim))
                for j, g in enumerate(basis_elements):
                    _, g_c = compress_pair(bi, g.parts[bi], g.parts[bi])
                    jy[:, j] = s_c * g_c
                rows.append(np.hstack([jx, jy]))
            else:
                r = s_c.shape[0]
                jx = np.zeros((r * r, m))
                for i in range(m):
                    a_c, _ = compress_pair(bi, p.a[i].parts[bi],
                                           p.a[i].parts[bi])
                    jx[:, i] = (-a_c @ y_c).reshape(-1)
                jy = np.zeros((r * r, dim))
                for j, g in enumerate(basis_elements):
                    g_c, _ = compress_pair(bi, g.parts[bi], g.parts[bi])
                    jy[:, j] = (s_c @ g_c).reshape(-1)
                rows.append(np.hstack([jx, jy]))
        if span_rows.shape[0]:
            rows.append(np.hstack([span_rows, np.zeros((span_rows.shape[0],
                                                        dim))]))
        jac = np.vstack(rows)
        # Truncate tiny singular values and cap the step: the certificate
        # family has flat directions along which a raw least-squares step
        # can run off to enormous but useless exact solutions.
        step, *_ = np.linalg.lstsq(jac, -res, rcond=1e-9)
        step_norm = float(np.linalg.norm(step))
        cap = 1.0 + 0.1 * float(np.linalg.norm(yvec))
        if step_norm > cap:
            step *= cap / step_norm
        x = x + step[:m]
        yvec = yvec + step[m:]

    _, x, yvec = best
    refined = unflatten_element(yvec, p.blocks)
    scale = f.inner(refined)
    if abs(scale) < 1e-8:
        raise SolverError("certificate polish collapsed the normalization")
    return (1.0 / scale) * refined, x, best[0]


def _span_equations(p: ConicProgram, face: FaceRep):
    """Rows of the linear system forcing b - Ax into the face's span."""
    rows, rhs = [], []
    for bi, (blk, rep) in enumerate(zip(p.blocks, face.reps)):
        if blk.kind == "orthant":
            outside = [i for i in range(blk.size) if i not in set(rep.support)]
            for i in outside:
                rows.append([ai.parts[bi][i] for ai in p.a])
                rhs.append(p.b.parts[bi][i])
        else:
            q = rep.basis
            r = q.shape[1]
            if r == blk.size:
                continue
            from .faces import _orthonormal_complement
            comp = _orthonormal_complement(q, blk.size)
            v = np.hstack([q, comp])
            rot_a = [v.T @ ai.parts[bi] @ v for ai in p.a]
            rot_b = v.T @ p.b.parts[bi] @ v
            for k in range(blk.size):
                for l in range(max(k, r), blk.size):
                    if k < r and l < r:
                        continue
                    w = 1.0 if k == l else 2.0
                    rows.append([w * ra[k, l] for ra in rot_a])
                    rhs.append(w * rot_b[k, l])
    return (np.array(rows, dtype=float).reshape(len(rows), p.m),
            np.array(rhs, dtype=float))


def reduced_program(p: ConicProgram, face: FaceRep) -> ConicProgram:
    """The program with its cone replaced by the face, in the face's
    compressed coordinates (span equalities dropped)."""
    coords = FaceCoordinates(p, face)
    if not coords.blocks_hat:
        raise ValueError("face is the zero cone; nothing to compress")
    a_hat = [YElement(coords.blocks_hat, coords.compress(ai)) for ai in p.a]
    b_hat = YElement(coords.blocks_hat, coords.compress(p.b))
    return ConicProgram(coords.blocks_hat, a_hat, b_hat, p.c,
                        name=(p.name + " reduced").strip())


def solve_restricted_to_face(p: ConicProgram, face: FaceRep,
                             options: SolverOptions = None):
    """Solve ``p`` with its cone replaced by ``face`` (value-preserving when
    the face contains the minimal cone).

    The span equalities are eliminated exactly and the compressed program is
    handed to the subsolver, so the returned point's slack lies in the face
    itself.  Returns a SolveResult whose ``x`` is in the original variable
    space and whose objective values are for the original program.
    """
    if options is None:
        options = SolverOptions()
    coords = FaceCoordinates(p, face)
    if not coords.blocks_hat:
        x = coords.x_particular
        obj = float(np.dot(p.c, x))
        from .solver import SolveResult
        return SolveResult(SolveStatus.OPTIMAL, x, YElement.zeros(p.blocks),
                           YElement.zeros(p.blocks), obj, obj,
                           {"primal": 0.0, "dual": 0.0, "gap": 0.0, "mu": 0.0},
                           0, [], "face is the zero cone")
    nn = coords.null_basis.shape[1]
    a_hat = [YElement(coords.blocks_hat,
                      coords.compress(p.apply(coords.null_basis[:, j])))
             for j in range(nn)]
    slack0 = p.b - p.apply(coords.x_particular)
    b_hat = YElement(coords.blocks_hat, coords.compress(slack0))
    c_hat = coords.null_basis.T @ p.c
    prog = ConicProgram(coords.blocks_hat, a_hat, b_hat, c_hat,
                        name=(p.name + " on-face").strip())
    res = solve_conic_lp(prog, options)
    x_full = coords.x_particular + coords.null_basis @ res.x
    shift = float(np.dot(p.c, coords.x_particular))
    res.x = x_full
    res.primal_obj += shift
    res.dual_obj += shift
    return res


def _reducing_primal(coords: FaceCoordinates, f: YElement):
    """sup t over the eliminated variables, slack in the compressed cone,
    with the bounding row t <= 1."""
    p = coords.program
    cap = ConeBlock("orthant", 1)
    blocks = coords.blocks_hat + (cap,)
    nn = coords.null_basis.shape[1]

    def lift(parts_hat, cap_val):
        return YElement(blocks, list(parts_hat) + [np.array([cap_val])])

    a_cols = []
    for j in range(nn):
        elem = p.apply(coords.null_basis[:, j])
        a_cols.append(lift(coords.compress(elem), 0.0))
    a_cols.append(lift(coords.compress(f), 1.0))
    slack0 = p.b - p.apply(coords.x_particular)
    b_hat = lift(coords.compress(slack0), 1.0)
    c = np.zeros(nn + 1)
    c[-1] = 1.0
    return ConicProgram(blocks, a_cols, b_hat, c, name="reducing")


def solve_reducing_pair(p: ConicProgram, face: FaceRep, tol: float = None,
                        options: SolverOptions = None,
                        f_override: YElement = None) -> ReducingOutcome:
    """Decide whether ``face`` is the minimal cone of ``p`` or produce a
    reducing certificate.

    The caller guarantees the minimal cone is contained in ``face``.  The
    bounded reducing primal has value 0 exactly when the face can be cut
    further; in that case the interior-point dual solution, decompressed
    and combined with multipliers for the span equalities, is the
    certificate y in F* with (A,b)* y = 0 and <f, y> = 1.

    Decision rungs: values below ``tol`` reduce, values above 100 * tol
    confirm minimality, anything between raises AmbiguousOutcome.
    """
    if tol is None:
        tol = config.DEFAULT_TOL
    if options is None:
        options = SolverOptions()
    coords = FaceCoordinates(p, face)
    f = f_override if f_override is not None else relative_interior_point(face)

    if not coords.blocks_hat:
        # The face is {0}: minimal iff b - Ax can vanish, which the span
        # equations already certified.
        return ReducingOutcome.minimal_reached(coords.x_particular, 1.0)

    prog = _reducing_primal(coords, f)
    res = solve_conic_lp(prog, options)
    score = max(res.residuals["primal"], res.residuals["dual"],
                res.residuals["gap"])
    if res.status not in (SolveStatus.OPTIMAL, SolveStatus.NUMERICAL_FAILURE) \
            or score > 1e-5:
        raise SolverError(
            f"reducing solve unusable: status {res.status.value}, "
            f"score {score:.2e}")
    t_star = res.primal_obj

    if t_star >= 100.0 * tol:
        s_star = res.x[:-1]
        x_strict = coords.x_particular + coords.null_basis @ s_star
        return ReducingOutcome.minimal_reached(x_strict, t_star)

    if t_star <= tol:
        y = _extract_certificate(coords, f, res)
        y = _purify_certificate(p, face, f, y)
        x_cand = coords.x_particular + coords.null_basis @ res.x[:-1]
        y, _, _ = polish_certificate(p, face, f, y, x_cand)
        _check_certificate(p, face, f, y, tol)
        return ReducingOutcome.reduced(y, t_star)

    raise AmbiguousOutcome(
        f"reducing value {t_star:.3e} lies between the decision rungs "
        f"({tol:.1e}, {100 * tol:.1e})", value=t_star)


def _extract_certificate(coords: FaceCoordinates, f: YElement, res) -> YElement:
    p = coords.program
    y_face = coords.embed(res.y.parts[:-1])
    target = np.array([ai.inner(y_face) for ai in p.a])
    if coords.eq_matrix.shape[0]:
        lam, *_ = np.linalg.lstsq(coords.eq_matrix.T, target, rcond=None)
        y = y_face - coords.outside_element(lam)
    else:
        y = y_face
    scale = f.inner(y)
    if abs(scale) < 1e-6:
        raise SolverError("degenerate certificate: normalization collapsed")
    return (1.0 / scale) * y


def _purify_certificate(p: ConicProgram, face: FaceRep, f: YElement,
                        y: YElement, rounds: int = 80) -> YElement:
    """Clean the interior-point dust off a reducing certificate.

    A certificate solves a degenerate program, so the raw solution sits
    roughly sqrt(gap) away from the true one, which is too coarse for the
    rank decisions downstream.  The exact constraints are known: y must lie
    in the nullspace of (A, b)* and its face-compressed part must be psd of
    low rank.  Alternating projection between the two contracts the dust;
    the loop stops once the combined violation reaches fine precision.
    """
    from .linalg import flatten_element, unflatten_element

    rows = np.vstack([flatten_element(ai) for ai in p.a]
                     + [flatten_element(p.b)])
    _, svals, vt = np.linalg.svd(rows, full_matrices=True)
    rank = int(np.sum(svals > 1e-12 * (svals[0] if svals.size else 1.0)))
    null_vt = vt[rank:]

    # Rank cutoff for the structure projection: the large eigenvalues of a
    # normalized certificate are O(1), the dust is near sqrt(solver gap).
    cutoff = 1e-4

    vec = flatten_element(y)
    for _ in range(rounds):
        vec = null_vt.T @ (null_vt @ vec)
        cur = unflatten_element(vec, p.blocks)
        parts = [np.array(part) for part in cur.parts]
        change = 0.0
        for bi, (blk, rep) in enumerate(zip(p.blocks, face.reps)):
            if blk.kind == "orthant":
                sup = list(rep.support)
                if not sup:
                    continue
                vals = parts[bi][sup]
                clipped = np.where(vals > cutoff * max(1.0, np.max(vals, initial=0.0)),
                                   vals, 0.0)
                change = max(change, float(np.max(np.abs(vals - clipped),
                                                  initial=0.0)))
                parts[bi][sup] = clipped
            else:
                q = rep.basis
                if q.shape[1] == 0:
                    continue
                compressed = q.T @ parts[bi] @ q
                lam, u = np.linalg.eigh(0.5 * (compressed + compressed.T))
                lam_clip = np.where(lam > cutoff * max(1.0, lam[-1] if lam.size else 1.0),
                                    lam, 0.0)
                fixed = (u * lam_clip) @ u.T
                change = max(change, float(np.max(np.abs(fixed - compressed),
                                                  initial=0.0)))
                parts[bi] = parts[bi] + q @ (fixed - compressed) @ q.T
        cur = YElement(p.blocks, parts)
        vec_new = flatten_element(cur)
        null_resid = float(np.linalg.norm(vec_new - null_vt.T @ (null_vt @ vec_new)))
        vec = vec_new
        if max(change, null_resid) <= 1e-13 * (1.0 + float(np.linalg.norm(vec))):
            break
    refined = unflatten_element(null_vt.T @ (null_vt @ vec), p.blocks)
    scale = f.inner(refined)
    if abs(scale) < 1e-6:
        raise SolverError("certificate cleanup collapsed the normalization")
    return (1.0 / scale) * refined


def _check_certificate(p: ConicProgram, face: FaceRep, f: YElement,
                       y: YElement, tol: float):
    lin_resid = float(np.max(np.abs(
        np.array([ai.inner(y) for ai in p.a] + [p.b.inner(y)])), initial=0.0))
    checks = [
        (lin_resid <= 1e2 * tol * (1.0 + y.norm()),
         f"certificate leaves the nullspace (residual {lin_resid:.2e})"),
        (face_dual_membership(face, y, tol),
         "certificate leaves the face dual"),
        (abs(f.inner(y) - 1.0) <= 1e-9, "certificate normalization drifted"),
    ]
    for ok, msg in checks:
        if not ok:
            raise AmbiguousOutcome("reducing certificate failed verification: "
                                   + msg)
