import numpy as np
import pytest

from facred.model import (ConeBlock, ConicProgram, FeasibilityWarning,
                          StructureMismatchError, YElement, adjoint_apply,
                          inner_product, primal_slack, weak_duality_gap)

from conftest import sym


def test_inner_product_trace_on_psd_block():
    blocks = (ConeBlock("psd", 3),)
    d = YElement(blocks, [np.diag([1.0, 0, 0])])
    assert inner_product(d, d) == pytest.approx(1.0)


def test_inner_product_constraint_orthogonal_to_certificate(example_sdp):
    y1 = YElement(example_sdp.blocks, [np.diag([0.0, 0, 1])])
    assert inner_product(example_sdp.a[0], y1) == pytest.approx(0.0)


def test_inner_product_matches_entrywise_sum():
    rng = np.random.default_rng(7)
    blocks = (ConeBlock("psd", 3),)
    x = sym(rng.normal(size=(3, 3)))
    z = sym(rng.normal(size=(3, 3)))
    expected = sum(x[i, j] * z[i, j] for i in range(3) for j in range(3))
    got = inner_product(YElement(blocks, [x]), YElement(blocks, [z]))
    assert got == pytest.approx(expected, abs=1e-12)


def test_inner_product_structure_mismatch():
    a = YElement((ConeBlock("orthant", 2),), [np.ones(2)])
    b = YElement((ConeBlock("orthant", 3),), [np.ones(3)])
    with pytest.raises(StructureMismatchError):
        inner_product(a, b)


def test_adjoint_kills_second_certificate(example_sdp):
    y2 = YElement(example_sdp.blocks,
                  [np.array([[0.0, 0, -1], [0, 2, 0], [-1, 0, 0]])])
    np.testing.assert_allclose(adjoint_apply(example_sdp, y2), [0.0, 0.0],
                               atol=1e-14)


def test_adjoint_of_zero(example_sdp):
    zero = YElement.zeros(example_sdp.blocks)
    np.testing.assert_allclose(adjoint_apply(example_sdp, zero), [0.0, 0.0])


def test_adjoint_matches_dense_matricization():
    from facred.linalg import flatten_element

    rng = np.random.default_rng(11)
    p, _ = _random_program(rng)
    rows = np.vstack([flatten_element(ai) for ai in p.a])
    y = YElement(p.blocks, [sym(rng.normal(size=(4, 4))), rng.normal(size=3)])
    np.testing.assert_allclose(adjoint_apply(p, y), rows @ flatten_element(y),
                               atol=1e-12)


def _random_program(rng, m=3):
    blocks = (ConeBlock("psd", 4), ConeBlock("orthant", 3))
    a = [YElement(blocks, [sym(rng.normal(size=(4, 4))), rng.normal(size=3)])
         for _ in range(m)]
    b = YElement(blocks, [sym(rng.normal(size=(4, 4))), rng.normal(size=3)])
    return ConicProgram(blocks, a, b, rng.normal(size=m)), blocks


def test_adjoint_identity_random():
    rng = np.random.default_rng(3)
    p, blocks = _random_program(rng)
    for _ in range(20):
        x = rng.normal(size=p.m)
        y = YElement(blocks, [sym(rng.normal(size=(4, 4))),
                              rng.normal(size=3)])
        lhs = inner_product(p.apply(x), y)
        rhs = float(np.dot(x, adjoint_apply(p, y)))
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_primal_slack_lp_fixture(example_lp):
    slack = primal_slack(example_lp, [-1.0, 0.0, 0.0])
    np.testing.assert_allclose(slack.parts[0], [1, 0, 0, 0, 0], atol=1e-15)


def test_primal_slack_at_zero_is_rhs(example_sdp):
    slack = primal_slack(example_sdp, [0.0, 0.0])
    np.testing.assert_allclose(slack.parts[0], np.diag([1.0, 0, 0]))


def test_primal_slack_length_mismatch(example_sdp):
    with pytest.raises(ValueError):
        primal_slack(example_sdp, [1.0])


def test_primal_slack_is_affine(example_sdp):
    rng = np.random.default_rng(5)
    x1, x2 = rng.normal(size=2), rng.normal(size=2)
    for alpha in (0.0, 0.3, 1.0):
        mix = primal_slack(example_sdp, alpha * x1 + (1 - alpha) * x2)
        combo = alpha * primal_slack(example_sdp, x1) \
            + (1 - alpha) * primal_slack(example_sdp, x2)
        assert (mix - combo).norm() < 1e-12


def test_weak_duality_gap_is_dual_matrix_corner(example_sdp):
    # any feasible dual point has gap equal to its (1,1) entry
    y = np.array([[1.0, 0.5, -0.5], [0.5, 1.0, 0.0], [-0.5, 0.0, 10.0]])
    gap = weak_duality_gap(example_sdp, [0.0, 0.0],
                           YElement(example_sdp.blocks, [y]))
    assert gap == pytest.approx(y[0, 0])
    assert gap >= -1e-7


def test_weak_duality_gap_zero_case():
    blocks = (ConeBlock("orthant", 2),)
    a = [YElement(blocks, [np.array([1.0, 0.0])])]
    b = YElement(blocks, [np.array([1.0, 1.0])])
    p = ConicProgram(blocks, a, b, [0.0])
    gap = weak_duality_gap(p, [0.0], YElement.zeros(blocks))
    assert gap == 0.0


def test_weak_duality_gap_on_solved_lp():
    from facred.solver import SolverOptions, solve_conic_lp, standard_dual

    blocks = (ConeBlock("orthant", 3),)
    a = [YElement(blocks, [np.array([1.0, -1.0, 0.0])]),
         YElement(blocks, [np.array([0.0, 0.0, -1.0])])]
    b = YElement(blocks, [np.array([1.0, 0.0, 0.0])])
    p = ConicProgram(blocks, a, b, [1.0, 0.0])
    res = solve_conic_lp(p, SolverOptions())
    assert res.optimal
    gap = weak_duality_gap(p, res.x, res.y)
    assert -1e-7 <= gap <= 1e-8 + 2e-8


def test_weak_duality_flags_infeasible_input(example_sdp):
    bad = YElement(example_sdp.blocks, [-np.eye(3)])
    with pytest.warns(FeasibilityWarning):
        weak_duality_gap(example_sdp, [0.0, 0.0], bad)


def test_yelement_immutable():
    blocks = (ConeBlock("orthant", 2),)
    y = YElement(blocks, [np.ones(2)])
    with pytest.raises((ValueError, AttributeError)):
        y.parts[0][0] = 3.0


def test_psd_payload_symmetrized_and_checked():
    blocks = (ConeBlock("psd", 2),)
    near = np.array([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
    y = YElement(blocks, [near])
    assert y.parts[0][0, 1] == y.parts[0][1, 0]
    with pytest.raises(ValueError):
        YElement(blocks, [np.array([[1.0, 2.0], [0.5, 3.0]])])
