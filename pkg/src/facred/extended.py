"""Extended strong duals built from certificate chains.

For a program  sup <c, x> : b - Ax in K  over PSD blocks, the dual of the
minimal cone can be written as the projection of a conic linear system in
sequences (u_i, v_i), i = 0..L+1: the u_i live in the dual cone, the v_i in
the tangent space of the dual cone at a base point determined by earlier
u_j, and the combinations u_i + v_i are orthogonal to the problem data.
Substituting that projection into the ordinary dual yields a minimization
program whose value always equals the primal value and is attained - a
Ramana-type dual - at the price of L extra variable layers.

Four variants of the tangent encoding are built here.  Each inserts, per
PSD block and layer i >= 2, a bordered block

    [[ S_i, w_i ], [ w_i^T, D_i ]]  psd,   v_i = w_i + w_i^T,

with S_i the running sum u_0 + ... + u_{i-1} ("star") or just u_{i-1}
("simple", "primed", "ramana"), and D_i a free multiple beta_i of the
identity ("star", "simple") or the identity itself ("primed", "ramana").
The "ramana" variant additionally eliminates the v_i, writing every
occurrence as w_i + w_i^T.  Layer 1 carries only u_1: the tangent space at
zero is trivial, so v_1 = w_1 = 0 and they are not materialized.

The equality constraints are eliminated by parameterizing the variable
vector over their solution set, so the emitted program is a plain conic
program in sup-form that the subsolver (or any SDPA-reading solver, via
emit_sdpa) can handle; the parameterization is shifted to make the sup-form
objective carry no constant whenever possible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .faces import in_tangent_space
from .model import ConeBlock, ConicProgram, YElement, adjoint_apply
from .reduction import VerificationReport, compute_ell
from .solver import SolverError, SolverOptions, SolveStatus, solve_conic_lp

VARIANTS = ("star", "simple", "primed", "ramana")


def lift_to_psd(p: ConicProgram) -> ConicProgram:
    """Embed orthant blocks as diagonal PSD blocks (identity on pure-PSD
    programs); the explicit tangent encodings are PSD-specific."""
    if all(blk.kind == "psd" for blk in p.blocks):
        return p
    blocks = tuple(ConeBlock("psd", blk.size) for blk in p.blocks)

    def lift(y):
        parts = []
        for blk, part in zip(p.blocks, y.parts):
            parts.append(np.diag(part) if blk.kind == "orthant" else part)
        return YElement(blocks, parts)

    return ConicProgram(blocks, [lift(ai) for ai in p.a], lift(p.b), p.c,
                        name=(p.name + " lifted").strip())


@dataclass
class ExtendedDualPoint:
    """Candidate for the layered systems: sequences u_i, v_i (elements),
    per-block witness matrices w_i, and scalars beta_i, i = 0..L+1."""

    us: list
    vs: list
    ws: list     # ws[i]: list of per-block square matrices (zeros at i <= 1)
    betas: list  # betas[i]: float

    @property
    def depth(self) -> int:
        return len(self.us) - 2

    def final_dual_point(self) -> YElement:
        return self.us[-1] + self.vs[-1]


class _Layout:
    """Index bookkeeping for the stacked variable vector."""

    def __init__(self):
        self.slices = {}
        self.size = 0

    def add(self, key, length):
        self.slices[key] = slice(self.size, self.size + length)
        self.size += length

    def __contains__(self, key):
        return key in self.slices

    def __getitem__(self, key):
        return self.slices[key]


def _packed_len(n):
    return n * (n + 1) // 2


def _packed_pairs(n):
    return [(k, l) for k in range(n) for l in range(k, n)]


def _unpack(vec, n):
    mat = np.zeros((n, n))
    for idx, (k, l) in enumerate(_packed_pairs(n)):
        mat[k, l] = vec[idx]
        mat[l, k] = vec[idx]
    return mat


def _pack(mat):
    n = mat.shape[0]
    return np.array([mat[k, l] for k, l in _packed_pairs(n)])


def _packed_functional(g):
    """Coefficients so that coeff . packed(u) = <g, u> for symmetric g, u."""
    n = g.shape[0]
    return np.array([(1.0 if k == l else 2.0) * g[k, l]
                     for k, l in _packed_pairs(n)])


@dataclass
class ExtendedDualProgram:
    """An extended dual, encoded as a solvable sup-form conic program.

    The dual minimizes <b, u_{L+1} + v_{L+1}> over the layered system; after
    eliminating the equality constraints via ``z = z_particular +
    null_basis @ s`` the remaining cone constraints become the slack of
    ``program``.  The dual's value is ``offset - (sup value of program)``.
    """

    program: ConicProgram
    variant: str
    ell: int
    source: ConicProgram          # lifted problem the dual was built from
    layout: dict
    nz: int
    z_particular: np.ndarray
    null_basis: np.ndarray
    objective: np.ndarray         # q with <q, z> the dual objective
    offset: float

    def z_from_solution(self, s) -> np.ndarray:
        return self.z_particular + self.null_basis @ np.asarray(s, dtype=float)

    def value_of(self, res) -> float:
        return self.offset - res.primal_obj


def build_extended_dual(p: ConicProgram, variant: str = "star",
                        ell_override: int = None) -> ExtendedDualProgram:
    """Construct the chosen extended-dual variant of ``p``.

    Orthant blocks are lifted to diagonal PSD blocks first.  The layer count
    defaults to compute_ell of the lifted program; ell = 0 collapses to the
    ordinary dual.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if ell_override is not None and ell_override < 0:
        raise ValueError("layer count must be nonnegative")
    lifted = lift_to_psd(p)
    ell = compute_ell(lifted) if ell_override is None else int(ell_override)
    blocks = lifted.blocks
    sizes = [blk.size for blk in blocks]
    m = lifted.m
    has_v = variant != "ramana"
    has_beta = variant in ("star", "simple")

    layout = _Layout()
    for i in range(1, ell + 2):
        for bi, n in enumerate(sizes):
            layout.add(("u", i, bi), _packed_len(n))
        if i >= 2:
            for bi, n in enumerate(sizes):
                layout.add(("w", i, bi), n * n)
                if has_v:
                    layout.add(("v", i, bi), _packed_len(n))
            if has_beta:
                layout.add(("beta", i), 1)
    nz = layout.size

    # --- equality rows -----------------------------------------------------
    rows, rhs = [], []

    def data_row(i, g_funcs, target):
        """<g, u_i + v_i> = target, with v_i written through w_i when
        eliminated."""
        row = np.zeros(nz)
        for bi, g in enumerate(g_funcs):
            row[layout[("u", i, bi)]] += _packed_functional(g)
            if i >= 2:
                if has_v:
                    row[layout[("v", i, bi)]] += _packed_functional(g)
                else:
                    row[layout[("w", i, bi)]] += 2.0 * g.reshape(-1)
        rows.append(row)
        rhs.append(target)

    for i in range(1, ell + 1):
        for r in range(m):
            data_row(i, [part for part in lifted.a[r].parts], 0.0)
        data_row(i, [part for part in lifted.b.parts], 0.0)
    for r in range(m):
        data_row(ell + 1, [part for part in lifted.a[r].parts], lifted.c[r])

    if has_v:
        for i in range(2, ell + 2):
            for bi, n in enumerate(sizes):
                for idx, (k, l) in enumerate(_packed_pairs(n)):
                    row = np.zeros(nz)
                    row[layout[("v", i, bi)].start + idx] = 1.0
                    row[layout[("w", i, bi)].start + k * n + l] -= 1.0
                    row[layout[("w", i, bi)].start + l * n + k] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)

    eq = np.array(rows).reshape(len(rows), nz)
    eq_rhs = np.array(rhs)

    # --- cone outputs ------------------------------------------------------
    out_blocks = []
    phi_rows = []
    phi0_rows = []

    def add_output(size, fill):
        """fill(mat_rows, const) writes the linear map for one square output."""
        lin = np.zeros((size * size, nz))
        const = np.zeros(size * size)
        fill(lin, const, size)
        out_blocks.append(ConeBlock("psd", size))
        phi_rows.append(lin)
        phi0_rows.append(const)

    def put_packed(lin, size, row0, col0, key, n, sign=1.0):
        base = layout[key].start
        for idx, (k, l) in enumerate(_packed_pairs(n)):
            lin[(row0 + k) * size + (col0 + l), base + idx] += sign
            if k != l:
                lin[(row0 + l) * size + (col0 + k), base + idx] += sign

    for i in range(1, ell + 2):
        for bi, n in enumerate(sizes):
            def fill_u(lin, const, size, i=i, bi=bi, n=n):
                put_packed(lin, size, 0, 0, ("u", i, bi), n)
            add_output(n, fill_u)
    for i in range(2, ell + 2):
        for bi, n in enumerate(sizes):
            def fill_t(lin, const, size, i=i, bi=bi, n=n):
                uppers = range(1, i) if variant == "star" else [i - 1]
                for j in uppers:
                    put_packed(lin, size, 0, 0, ("u", j, bi), n)
                wbase = layout[("w", i, bi)].start
                for k in range(n):
                    for l in range(n):
                        lin[k * size + (n + l), wbase + k * n + l] += 1.0
                        lin[(n + l) * size + k, wbase + k * n + l] += 1.0
                if has_beta:
                    bidx = layout[("beta", i)].start
                    for k in range(n):
                        lin[(n + k) * size + (n + k), bidx] += 1.0
                else:
                    for k in range(n):
                        const[(n + k) * size + (n + k)] += 1.0
            add_output(2 * n, fill_t)

    phi = np.vstack(phi_rows)
    phi0 = np.concatenate(phi0_rows)

    # --- objective ----------------------------------------------------------
    q = np.zeros(nz)
    for bi, n in enumerate(sizes):
        coeffs = _packed_functional(lifted.b.parts[bi])
        q[layout[("u", ell + 1, bi)]] += coeffs
        if ell + 1 >= 2:
            if has_v:
                q[layout[("v", ell + 1, bi)]] += coeffs
            else:
                q[layout[("w", ell + 1, bi)]] += \
                    2.0 * np.asarray(lifted.b.parts[bi]).reshape(-1)

    # --- eliminate equalities ----------------------------------------------
    if eq.shape[0]:
        z_p, *_ = np.linalg.lstsq(eq, eq_rhs, rcond=None)
        resid = np.linalg.norm(eq @ z_p - eq_rhs)
        if resid > 1e-8 * (1.0 + np.linalg.norm(eq_rhs)):
            raise SolverError("extended dual equalities are inconsistent; "
                              "the ordinary dual is infeasible")
        _, svals, vt = np.linalg.svd(eq)
        rank = int(np.sum(svals > 1e-11 * (svals[0] if svals.size else 1.0)))
        null = vt[rank:].T
    else:
        z_p = np.zeros(nz)
        null = np.eye(nz)

    bn = null.T @ q
    offset = float(q @ z_p)
    if bn.size and np.linalg.norm(bn) > 1e-12:
        z_p = z_p - null @ (offset * bn / float(bn @ bn))
        offset = float(q @ z_p)

    slack0 = phi0 + phi @ z_p
    cols = phi @ null

    def as_parts(flat):
        parts, at = [], 0
        for blk in out_blocks:
            d = blk.size * blk.size
            parts.append(0.5 * (flat[at:at + d].reshape(blk.size, blk.size)
                                + flat[at:at + d].reshape(blk.size, blk.size).T))
            at += d
        return parts

    b_prog = YElement(out_blocks, as_parts(slack0))
    a_prog = [YElement(out_blocks, as_parts(-cols[:, j]))
              for j in range(null.shape[1])]
    prog = ConicProgram(tuple(out_blocks), a_prog, b_prog, -bn,
                        name=f"{p.name} extended-{variant}".strip())
    return ExtendedDualProgram(prog, variant, ell, lifted, dict(layout.slices),
                               nz, z_p, null, q, offset)


def extract_dual_solution(ext: ExtendedDualProgram, res):
    """Recover the layered point and the dual element u_{L+1} + v_{L+1} from
    a solve of the encoded program."""
    if len(res.x) != ext.null_basis.shape[1]:
        raise ValueError("solution does not match the program layout")
    z = ext.z_from_solution(res.x)
    blocks = ext.source.blocks
    sizes = [blk.size for blk in blocks]
    zeros = YElement.zeros(blocks)
    us, vs, ws, betas = [zeros], [zeros], [[np.zeros((n, n)) for n in sizes]], [0.0]
    has_v = ext.variant != "ramana"
    for i in range(1, ext.ell + 2):
        u_parts = [_unpack(z[ext.layout[("u", i, bi)]], n)
                   for bi, n in enumerate(sizes)]
        us.append(YElement(blocks, u_parts))
        if i >= 2:
            w_i = [z[ext.layout[("w", i, bi)]].reshape(n, n)
                   for bi, n in enumerate(sizes)]
            if has_v:
                v_parts = [_unpack(z[ext.layout[("v", i, bi)]], n)
                           for bi, n in enumerate(sizes)]
            else:
                v_parts = [w + w.T for w in w_i]
            beta = float(z[ext.layout[("beta", i)]][0]) \
                if ("beta", i) in ext.layout else 1.0
        else:
            w_i = [np.zeros((n, n)) for n in sizes]
            v_parts = [np.zeros((n, n)) for n in sizes]
            beta = 0.0
        vs.append(YElement(blocks, v_parts))
        ws.append(w_i)
        betas.append(beta)
    pt = ExtendedDualPoint(us, vs, ws, betas)
    return pt, pt.final_dual_point()


def check_extended_point(p: ConicProgram, pt: ExtendedDualPoint,
                         variant: str = "star",
                         tol: float = None) -> VerificationReport:
    """Verify a layered point against the chosen system.

    Checks the zero start, cone membership of every u_i, the data
    orthogonality of the inner layers, the adjoint equation of the final
    layer, tangent membership of every v_i (pattern test plus, when a
    witness is present, the bordered-block certificate), and reports the
    objective value and adjoint residual on the report object.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if tol is None:
        tol = config.DEFAULT_TOL
    lifted = lift_to_psd(p)
    report = VerificationReport()
    blocks = lifted.blocks
    if pt.us[0].blocks != blocks:
        raise ValueError("point structure differs from the (lifted) program")
    depth = len(pt.us) - 2

    report.add("layer 0 is zero",
               pt.us[0].norm() <= tol and pt.vs[0].norm() <= tol)
    for i in range(1, depth + 2):
        report.add(f"u_{i} in the dual cone",
                   pt.us[i].min_eigenvalue() >= -tol,
                   f"min eigenvalue {pt.us[i].min_eigenvalue():.2e}")
    for i in range(1, depth + 1):
        y = pt.us[i] + pt.vs[i]
        resid = float(np.max(np.abs(np.concatenate(
            [adjoint_apply(lifted, y), [lifted.b.inner(y)]])), initial=0.0))
        report.add(f"layer {i} orthogonal to the data",
                   resid <= tol * (1.0 + y.norm()), f"residual {resid:.2e}")
    y_final = pt.final_dual_point()
    adj_resid = float(np.max(np.abs(adjoint_apply(lifted, y_final) - lifted.c),
                             initial=0.0))
    report.add("final layer satisfies the adjoint equation",
               adj_resid <= tol * (1.0 + float(np.max(np.abs(lifted.c),
                                                      initial=0.0))),
               f"residual {adj_resid:.2e}")

    running = YElement.zeros(blocks)
    for i in range(1, depth + 2):
        base = running if variant == "star" else pt.us[i - 1]
        for bi, blk in enumerate(blocks):
            ok = in_tangent_space(base.parts[bi], pt.vs[i].parts[bi],
                                  max(tol, 1e-8))
            report.add(f"v_{i} tangent at block {bi + 1}", ok)
        if pt.ws[i] is not None and i >= 2:
            for bi, blk in enumerate(blocks):
                n = blk.size
                w = np.asarray(pt.ws[i][bi])
                recomposed = float(np.max(np.abs(
                    pt.vs[i].parts[bi] - w - w.T), initial=0.0))
                report.add(f"w_{i} recomposes v_{i} at block {bi + 1}",
                           recomposed <= 1e-10 * (1.0 + np.max(np.abs(w), initial=0.0)),
                           f"residual {recomposed:.2e}")
                lower = pt.betas[i] * np.eye(n) \
                    if variant in ("star", "simple") else np.eye(n)
                bordered = np.block([[base.parts[bi], w], [w.T, lower]])
                lam = float(np.linalg.eigvalsh(bordered)[0])
                report.add(f"bordered block {i}/{bi + 1} psd", lam >= -tol,
                           f"min eigenvalue {lam:.2e}")
        running = running + pt.us[i]

    report.objective = lifted.b.inner(y_final)
    report.adjoint_residual = adj_resid
    return report


def _decompose_on_face(lifted, face, y):
    """Split y in the dual of ``face`` as (cone part, complement part)."""
    u_parts = []
    for blk, rep, part in zip(lifted.blocks, face.reps, y.parts):
        q = rep.basis
        mat = np.zeros((blk.size, blk.size))
        if q.shape[1]:
            compressed = q.T @ part @ q
            lam, w = np.linalg.eigh(0.5 * (compressed + compressed.T))
            mat = q @ ((w * np.maximum(lam, 0.0)) @ w.T) @ q.T
        u_parts.append(mat)
    u = YElement(lifted.blocks, u_parts)
    return u, y - u


def _regularized_dual_solution(lifted, cert, options):
    """Optimal point of  inf <b, y> : A* y = c, y in (minimal cone)*  -
    attained because the face-restricted primal satisfies Slater's
    condition.  Reconstructed from the face-restricted solve's cone dual
    plus multipliers for the span equalities."""
    from .reducing import FaceCoordinates, solve_restricted_to_face

    face = cert.minimal_face
    res = solve_restricted_to_face(lifted, face, options)
    if res.status is not SolveStatus.OPTIMAL:
        raise SolverError("face-restricted solve did not reach optimality")
    coords = FaceCoordinates(lifted, face)
    y_face = coords.embed(res.y.parts)
    target = np.array([ai.inner(y_face) for ai in lifted.a]) - lifted.c
    if coords.eq_matrix.shape[0]:
        lam, *_ = np.linalg.lstsq(coords.eq_matrix.T, target, rcond=None)
        y_full = y_face - coords.outside_element(lam)
    else:
        y_full = y_face
    resid = float(np.max(np.abs(adjoint_apply(lifted, y_full) - lifted.c),
                         initial=0.0))
    if resid > 1e-6 * (1.0 + float(np.max(np.abs(lifted.c), initial=0.0))):
        raise SolverError(f"regularized dual reconstruction residual {resid:.2e}")
    return y_full, res.primal_obj


def _tangent_witness(base_parts, v_parts, blocks):
    """Per-block certificate (w, beta) for v in the tangent space at base."""
    from .faces import tangent_membership_schur

    ws, beta = [], 1.0
    for blk, base, v in zip(blocks, base_parts, v_parts):
        ok, wit = tangent_membership_schur(base, v, tol=1e-6)
        if not ok:
            raise SolverError("assembled layer leaves the tangent space")
        ws.append(wit[0])
        beta = max(beta, wit[1])
    return ws, beta


def assemble_optimal_point(p: ConicProgram, variant: str = "star",
                           ell: int = None,
                           options: SolverOptions = None) -> ExtendedDualPoint:
    """Construct an optimal point of the chosen extended dual from a facial
    reduction run of the source program.

    The reduction chain, decomposed into cone and complement parts, provides
    the inner layers; the final layer is the attained optimum of the dual
    regularized by the minimal cone.  The "simple" family takes cumulative
    sums of the chain, and the identity-block variants additionally rescale
    the layers so the fixed identity suffices as the bordered block's lower
    corner.  Requires ell at least the chain length.
    """
    from .reduction import decompose_certificates, run_facial_reduction

    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    options = options or SolverOptions()
    lifted = lift_to_psd(p)
    if ell is None:
        ell = compute_ell(lifted)
    cert = run_facial_reduction(lifted, options=options)
    if cert.steps > ell:
        raise SolverError(
            f"chain of length {cert.steps} does not fit in {ell} layers")
    dec = decompose_certificates(lifted, cert)
    y_final, _ = _regularized_dual_solution(lifted, cert, options)
    u_fin, v_fin = _decompose_on_face(lifted, cert.minimal_face, y_final)

    blocks = lifted.blocks
    zeros = YElement.zeros(blocks)
    if variant == "star":
        us = list(dec.us) + [zeros] * (ell - cert.steps) + [u_fin]
        vs = list(dec.vs) + [zeros] * (ell - cert.steps) + [v_fin]
    else:
        cum_u, cum_v = [zeros], [zeros]
        for i in range(1, cert.steps + 1):
            cum_u.append(cum_u[-1] + dec.us[i])
            cum_v.append(cum_v[-1] + dec.vs[i])
        while len(cum_u) < ell + 1:
            cum_u.append(cum_u[-1])
            cum_v.append(cum_v[-1])
        us = cum_u + [u_fin]
        vs = cum_v + [v_fin]

    # Witnesses per layer (the certificate for v_i at the variant's base).
    bases = []
    running = zeros
    for i in range(1, ell + 2):
        bases.append(running if variant == "star" else us[i - 1])
        running = running + us[i]
    wit_list, beta_list = [[np.zeros((blk.size, blk.size)) for blk in blocks]], [0.0]
    for i in range(1, ell + 2):
        if i == 1:
            wit_list.append([np.zeros((blk.size, blk.size)) for blk in blocks])
            beta_list.append(0.0)
            continue
        w_i, beta_i = _tangent_witness(bases[i - 1].parts, vs[i].parts, blocks)
        wit_list.append(w_i)
        beta_list.append(beta_i)

    if variant in ("primed", "ramana"):
        # Rescale layers backward so each bordered block closes with the
        # fixed identity: if [[u, w], [w^T, beta I]] is psd then so is
        # [[lam^2 beta u, lam w], [lam w^T, I]]; choosing lam_{i-1} =
        # lam_i^2 max(beta_i, 1) makes every layer's certificate exact.
        lam = [1.0] * (ell + 2)
        for i in range(ell + 1, 1, -1):
            lam[i - 1] = lam[i] ** 2 * max(beta_list[i], 1.0)
        for i in range(1, ell + 1):
            us[i] = lam[i] * us[i]
            vs[i] = lam[i] * vs[i]
        for i in range(2, ell + 2):
            wit_list[i] = [lam[i] * w for w in wit_list[i]]
            beta_list[i] = 1.0

    return ExtendedDualPoint(us, vs, wit_list, beta_list)


def point_to_vector(ext: ExtendedDualProgram, pt: ExtendedDualPoint) -> np.ndarray:
    """Stack a layered point into the builder's variable vector."""
    sizes = [blk.size for blk in ext.source.blocks]
    z = np.zeros(ext.nz)
    for i in range(1, ext.ell + 2):
        for bi, n in enumerate(sizes):
            z[ext.layout[("u", i, bi)]] = _pack(np.asarray(pt.us[i].parts[bi]))
            if i >= 2:
                z[ext.layout[("w", i, bi)]] = \
                    np.asarray(pt.ws[i][bi]).reshape(-1)
                if ("v", i, bi) in ext.layout:
                    z[ext.layout[("v", i, bi)]] = \
                        _pack(np.asarray(pt.vs[i].parts[bi]))
        if ("beta", i) in ext.layout:
            z[ext.layout[("beta", i)]] = pt.betas[i]
    return z


def solve_extended_dual(ext: ExtendedDualProgram,
                        options: SolverOptions = None,
                        regularize: bool = True):
    """Solve the encoded extended dual; returns (dual value, point, result).

    Extended duals are reliably degenerate: the bordered tangent blocks
    admit almost-feasible escape directions that drag a bare interior-point
    solve far below the true value.  The robust route assembles an optimal
    point from a facial reduction of the source program, restricts the
    encoded program to the face that point exposes (restriction to a face
    containing a maximizer preserves the optimal value), and solves the
    restricted program, which satisfies Slater's condition.  Set
    ``regularize=False`` to solve the raw encoding directly.
    """
    from .faces import minimal_face
    from .model import primal_slack
    from .reducing import solve_restricted_to_face

    options = options or SolverOptions()
    res = None
    assembled = None
    if regularize:
        try:
            assembled = assemble_optimal_point(ext.source, ext.variant,
                                               ext.ell, options)
            z0 = point_to_vector(ext, assembled)
            s0, *_ = np.linalg.lstsq(ext.null_basis, z0 - ext.z_particular,
                                     rcond=None)
            gap = float(np.linalg.norm(
                z0 - ext.z_particular - ext.null_basis @ s0))
            if gap > 1e-6 * (1.0 + float(np.linalg.norm(z0))):
                raise SolverError(f"assembled point misses the slice ({gap:.2e})")
            slack0 = primal_slack(ext.program, s0)
            face = minimal_face(slack0, ext.program.blocks, tol=1e-6)
            res = solve_restricted_to_face(ext.program, face, options)
            score = max(res.residuals["primal"], res.residuals["dual"],
                        res.residuals["gap"])
            if score > 1e-5:
                res = None
        except (SolverError, ValueError):
            assembled = None
            res = None
    if res is None:
        res = solve_conic_lp(ext.program, options)
    pt, _ = extract_dual_solution(ext, res)
    if assembled is not None:
        # The solve confirms the value; for the reported optimizer prefer
        # whichever point verifies more cleanly (the assembled one is exact
        # up to the reduction pipeline's accuracy).
        direct = check_extended_point(ext.source, pt, ext.variant)
        if not direct.ok:
            backup = check_extended_point(ext.source, assembled, ext.variant)
            if backup.ok:
                pt = assembled
    return ext.value_of(res), pt, res


def fmin_membership(p: ConicProgram, s: YElement, tol: float = None) -> bool:
    """Decide membership of ``s`` in the minimal cone of ``p`` without
    running facial reduction: s belongs to it exactly when s is squeezed
    between zero and a scaled feasible slack, which is a conic feasibility
    problem in the original variables plus one scale.

    Solved in a normalized form bounding the squeeze coefficient, so the
    optimal value separates members (1) from non-members (0) cleanly.
    """
    if tol is None:
        tol = config.DEFAULT_TOL
    if s.blocks != p.blocks:
        raise ValueError("point structure differs from program")
    if not s.in_cone(tol):
        return False
    extra = ConeBlock("orthant", 2)
    blocks = p.blocks + (extra,)

    def widen(y, tail):
        return YElement(blocks, list(y.parts) + [np.asarray(tail, dtype=float)])

    a_cols = [widen(ai, [0.0, 0.0]) for ai in p.a]
    a_cols.append(widen(-1.0 * p.b, [-1.0, 0.0]))   # alpha column
    a_cols.append(widen(s, [0.0, 1.0]))             # t column
    b_aug = widen(YElement.zeros(p.blocks), [0.0, 1.0])
    c = np.zeros(p.m + 2)
    c[-1] = 1.0
    prog = ConicProgram(blocks, a_cols, b_aug, c, name="membership")
    res = solve_conic_lp(prog, SolverOptions())
    score = max(res.residuals["primal"], res.residuals["dual"],
                res.residuals["gap"])
    if score > 1e-6 or 0.1 < res.primal_obj < 0.9:
        # The squeeze program has no interior when the original program has
        # none; regularize it with facial reduction and solve on its own
        # minimal cone, where Slater's condition holds.
        from .reducing import solve_restricted_to_face
        from .reduction import run_facial_reduction

        try:
            cert = run_facial_reduction(prog)
            res = solve_restricted_to_face(prog, cert.minimal_face)
            score = max(res.residuals["primal"], res.residuals["dual"],
                        res.residuals["gap"])
        except Exception:
            pass
    if res.status not in (SolveStatus.OPTIMAL, SolveStatus.NUMERICAL_FAILURE) \
            or score > 1e-4:
        raise SolverError(f"membership solve unusable: {res.status.value}")
    t_star = res.primal_obj
    if t_star >= 0.5:
        x_star, alpha = res.x[:p.m], res.x[p.m]
        witness = (alpha / t_star) * p.b - p.apply(x_star / t_star) - s
        if witness.min_eigenvalue() >= -1e2 * tol * (1.0 + s.norm()):
            return True
        raise SolverError("membership witness failed verification")
    if t_star <= 0.1:
        return False
    raise SolverError(f"membership value {t_star:.3e} is inconclusive")
