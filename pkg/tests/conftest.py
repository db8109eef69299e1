"""Shared fixtures: the two reference instances and seeded generators."""

import numpy as np
import pytest

from facred.model import ConeBlock, ConicProgram, YElement


def sym(mat):
    return 0.5 * (mat + mat.T)


@pytest.fixture
def example_lp():
    """Five-row linear system A x <= 0 whose minimal cone keeps only the
    first coordinate: rows 2..5 bind at every feasible point."""
    blocks = (ConeBlock("orthant", 5),)
    cols = [np.array([1.0, 0, 0, 0, 0]),
            np.array([0.0, -1, 1, 0, 0]),
            np.array([0.0, 1, 0, -1, 1])]
    a = [YElement(blocks, [col]) for col in cols]
    b = YElement(blocks, [np.zeros(5)])
    return ConicProgram(blocks, a, b, [0.0, 0.0, 0.0], name="lp5x3")


@pytest.fixture
def example_sdp():
    """Order-3 SDP, sup x1, whose feasible set is the origin: the slack is
    pinned to the (1,1) entry, the ordinary dual has an unattained zero
    minimum, and the minimal cone is the rank-1 face at e1."""
    blocks = (ConeBlock("psd", 3),)
    a1 = YElement(blocks, [np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 0]])])
    a2 = YElement(blocks, [np.array([[0.0, 0, 1], [0, 1, 0], [1, 0, 0]])])
    b = YElement(blocks, [np.diag([1.0, 0, 0])])
    return ConicProgram(blocks, [a1, a2], b, [1.0, 0.0], name="sdp3")


def paper_chain_long(blocks):
    """The two-step reducing chain for the LP fixture."""
    return [YElement(blocks, [np.array([0.0, 0, 0, 1, 1])]),
            YElement(blocks, [np.array([0.0, 1, 1, 0, -1])])]


def paper_chain_short(blocks):
    """The one-step reducing certificate for the LP fixture."""
    return [YElement(blocks, [np.array([0.0, 1, 1, 2, 1])])]


def sdp_chain(blocks):
    """The two-step reducing chain for the SDP fixture."""
    y1 = np.zeros((3, 3))
    y1[2, 2] = 1.0
    y2 = np.array([[0.0, 0, -1], [0, 2, 0], [-1, 0, 0]])
    return [YElement(blocks, [y1]), YElement(blocks, [y2])]


def random_strictly_feasible(seed, n=4, m=3):
    """Random SDP with interior points on both sides."""
    rng = np.random.default_rng(seed)
    blocks = (ConeBlock("psd", n),)
    a = [YElement(blocks, [sym(rng.normal(size=(n, n)))]) for _ in range(m)]
    xbar = rng.normal(size=m)
    root = rng.normal(size=(n, n))
    b = YElement(blocks, [sum(xbar[i] * a[i].parts[0] for i in range(m))
                          + root @ root.T + 0.1 * np.eye(n)])
    ybar = rng.normal(size=(n, n))
    ybar = ybar @ ybar.T + 0.1 * np.eye(n)
    c = np.array([a[i].inner(YElement(blocks, [ybar])) for i in range(m)])
    return ConicProgram(blocks, a, b, c, name=f"rand{seed}"), xbar


def random_degenerate(seed, n=4, m=3, kind="psd"):
    """Random program without a strictly feasible point: the data is made
    orthogonal to a boundary certificate y1 and the right-hand side places
    every slack inside the face cut out by y1.

    Returns (program, xbar) with xbar feasible.
    """
    rng = np.random.default_rng(seed)
    if kind == "orthant":
        blocks = (ConeBlock("orthant", n),)
        dead = rng.choice(n, size=max(1, n // 2), replace=False)
        y1 = np.zeros(n)
        y1[dead] = 1.0 + rng.random(len(dead))
        cols = []
        for _ in range(m):
            col = rng.normal(size=n)
            col -= (col @ y1) / (y1 @ y1) * y1
            cols.append(col)
        xbar = rng.normal(size=m)
        zbar = np.zeros(n)
        alive = [i for i in range(n) if i not in set(dead.tolist())]
        zbar[alive] = rng.random(len(alive)) + 0.5
        b = YElement(blocks, [sum(xbar[i] * cols[i] for i in range(m)) + zbar])
        a = [YElement(blocks, [col]) for col in cols]
    else:
        blocks = (ConeBlock("psd", n),)
        r = rng.integers(1, n)  # rank of the surviving face
        basis = np.linalg.qr(rng.normal(size=(n, n)))[0]
        qface, qdead = basis[:, :r], basis[:, r:]
        y1m = sym(qdead @ (np.eye(n - r) + np.diag(rng.random(n - r)))
                  @ qdead.T)
        mats = []
        for _ in range(m):
            mat = sym(rng.normal(size=(n, n)))
            mat -= np.sum(mat * y1m) / np.sum(y1m * y1m) * y1m
            mats.append(mat)
        xbar = rng.normal(size=m)
        core = rng.normal(size=(r, r))
        zbar = qface @ (core @ core.T + 0.2 * np.eye(r)) @ qface.T
        b = YElement(blocks, [sum(xbar[i] * mats[i] for i in range(m)) + zbar])
        a = [YElement(blocks, [mat]) for mat in mats]
    c = rng.normal(size=m)
    return ConicProgram(blocks, a, b, c, name=f"degen{seed}"), xbar
