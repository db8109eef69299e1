"""Data model for conic linear programs over orthant and PSD blocks.

A program is

    sup  <c, x>
    s.t. b - sum_i x_i a_i  in  K,

where K is a product of nonnegative orthants and cones of symmetric positive
semidefinite matrices.  Elements of the constraint space (the a_i, b, slacks,
dual points) are :class:`YElement` values: one vector per orthant block, one
dense symmetric matrix per PSD block.

All types here are immutable after construction and safe to share across
threads; arithmetic returns new values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-12


class StructureMismatchError(ValueError):
    """Operands do not share the same block structure."""


class FeasibilityWarning(UserWarning):
    """A point handed to a feasibility-sensitive operation is infeasible."""


@dataclass(frozen=True)
class ConeBlock:
    """One factor of the cone: ``orthant`` of a given dimension or ``psd``
    matrices of a given order."""

    kind: str  # "orthant" | "psd"
    size: int

    def __post_init__(self):
        if self.kind not in ("orthant", "psd"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("block size must be >= 1")

    @property
    def ambient_dim(self) -> int:
        """Dimension of the block's ambient vector space."""
        if self.kind == "orthant":
            return self.size
        return self.size * (self.size + 1) // 2

    def identity(self) -> np.ndarray:
        """Canonical interior point: all-ones vector or identity matrix."""
        if self.kind == "orthant":
            return np.ones(self.size)
        return np.eye(self.size)

    def zero(self) -> np.ndarray:
        if self.kind == "orthant":
            return np.zeros(self.size)
        return np.zeros((self.size, self.size))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def _check_symmetric(mat: np.ndarray, tol: float, what: str) -> np.ndarray:
    asym = np.max(np.abs(mat - mat.T)) if mat.size else 0.0
    if asym > tol * (1.0 + np.max(np.abs(mat), initial=0.0)):
        raise ValueError(f"{what}: asymmetry {asym:.3e} beyond tolerance")
    return 0.5 * (mat + mat.T)


class YElement:
    """A point of the constraint space: per-block vectors / symmetric matrices.

    PSD payloads are symmetrized on ingest (input asymmetry beyond 1e-12
    relative is rejected).  Instances are read-only.
    """

    __slots__ = ("blocks", "parts")

    def __init__(self, blocks, parts, _symmetry_tol=SYMMETRY_TOL):
        blocks = tuple(blocks)
        if len(blocks) != len(parts):
            raise StructureMismatchError("one payload required per block")
        clean = []
        for blk, part in zip(blocks, parts):
            arr = np.asarray(part, dtype=float)
            if blk.kind == "orthant":
                if arr.shape != (blk.size,):
                    raise StructureMismatchError(
                        f"orthant payload shape {arr.shape}, expected ({blk.size},)")
            else:
                if arr.shape != (blk.size, blk.size):
                    raise StructureMismatchError(
                        f"psd payload shape {arr.shape}, expected "
                        f"({blk.size}, {blk.size})")
                arr = _check_symmetric(arr, _symmetry_tol, "psd payload")
            clean.append(_freeze(arr))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "parts", tuple(clean))

    def __setattr__(self, name, value):
        raise AttributeError("YElement is immutable")

    @classmethod
    def zeros(cls, blocks) -> "YElement":
        return cls(blocks, [blk.zero() for blk in blocks])

    @classmethod
    def identity(cls, blocks) -> "YElement":
        return cls(blocks, [blk.identity() for blk in blocks])

    def _require_same_structure(self, other: "YElement"):
        if self.blocks != other.blocks:
            raise StructureMismatchError("block structures differ")

    def __add__(self, other: "YElement") -> "YElement":
        self._require_same_structure(other)
        return YElement(self.blocks,
                        [a + b for a, b in zip(self.parts, other.parts)])

    def __sub__(self, other: "YElement") -> "YElement":
        self._require_same_structure(other)
        return YElement(self.blocks,
                        [a - b for a, b in zip(self.parts, other.parts)])

    def __mul__(self, scalar: float) -> "YElement":
        s = float(scalar)
        return YElement(self.blocks, [s * a for a in self.parts])

    __rmul__ = __mul__

    def __neg__(self) -> "YElement":
        return self * -1.0

    def inner(self, other: "YElement") -> float:
        """Sum of per-block Euclidean / trace inner products."""
        self._require_same_structure(other)
        return float(sum(np.sum(a * b) for a, b in zip(self.parts, other.parts)))

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(a * a) for a in self.parts)))

    def min_eigenvalue(self) -> float:
        """Smallest orthant entry / PSD eigenvalue across blocks (cone margin)."""
        worst = np.inf
        for blk, part in zip(self.blocks, self.parts):
            if blk.kind == "orthant":
                worst = min(worst, float(np.min(part)))
            else:
                worst = min(worst, float(np.linalg.eigvalsh(part)[0]))
        return worst

    def in_cone(self, tol: float = 0.0) -> bool:
        return self.min_eigenvalue() >= -tol

    def __repr__(self):
        desc = ", ".join(f"{b.kind}{b.size}" for b in self.blocks)
        return f"YElement[{desc}]"


@dataclass(frozen=True)
class ConicProgram:
    """sup <c, x> subject to b - sum_i x_i a_i in K.

    ``a`` holds one YElement per scalar variable; ``b`` shares their block
    structure; ``c`` is the objective vector.
    """

    blocks: tuple
    a: tuple
    b: YElement
    c: np.ndarray
    name: str = ""

    def __init__(self, blocks, a, b, c, name=""):
        blocks = tuple(blocks)
        a = tuple(a)
        for ai in a:
            if ai.blocks != blocks:
                raise StructureMismatchError("constraint element structure differs")
        if b.blocks != blocks:
            raise StructureMismatchError("right-hand side structure differs")
        c = _freeze(np.asarray(c, dtype=float).reshape(-1))
        if len(c) != len(a):
            raise ValueError("objective length must match variable count")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "name", name)

    @property
    def m(self) -> int:
        """Number of scalar variables."""
        return len(self.a)

    @property
    def ambient_dim(self) -> int:
        return sum(blk.ambient_dim for blk in self.blocks)

    def apply(self, x) -> YElement:
        """Evaluate the constraint map: sum_i x_i a_i."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if len(x) != self.m:
            raise ValueError(f"x has length {len(x)}, program has {self.m} variables")
        parts = [blk.zero() for blk in self.blocks]
        for xi, ai in zip(x, self.a):
            for k, part in enumerate(ai.parts):
                parts[k] = parts[k] + xi * part
        return YElement(self.blocks, parts)


def inner_product(y1: YElement, y2: YElement) -> float:
    """Inner product on the constraint space (trace product on PSD blocks)."""
    return y1.inner(y2)


def adjoint_apply(p: ConicProgram, y: YElement) -> np.ndarray:
    """Adjoint of the constraint map: the vector (<a_1, y>, ..., <a_m, y>)."""
    if y.blocks != p.blocks:
        raise StructureMismatchError("point structure differs from program")
    return np.array([ai.inner(y) for ai in p.a])


def primal_slack(p: ConicProgram, x) -> YElement:
    """Constraint slack b - sum_i x_i a_i at the point x."""
    return p.b - p.apply(x)


def weak_duality_gap(p: ConicProgram, x, y: YElement, tol: float = 1e-7) -> float:
    """Gap <b, y> - <c, x> between a primal and a dual candidate.

    For feasible inputs the gap is nonnegative up to tolerance.  Infeasible
    inputs are flagged with a :class:`FeasibilityWarning`; the gap is still
    returned.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    slack = primal_slack(p, x)
    if not slack.in_cone(tol):
        warnings.warn("primal point infeasible beyond tolerance", FeasibilityWarning)
    if not y.in_cone(tol):
        warnings.warn("dual point outside the cone beyond tolerance",
                      FeasibilityWarning)
    resid = adjoint_apply(p, y) - p.c
    if np.max(np.abs(resid), initial=0.0) > tol * (1.0 + float(np.max(np.abs(p.c), initial=0.0))):
        warnings.warn("dual point violates the adjoint equations beyond tolerance",
                      FeasibilityWarning)
    return p.b.inner(y) - float(np.dot(p.c, x))
