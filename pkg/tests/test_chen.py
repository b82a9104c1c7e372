import random
from fractions import Fraction

import pytest

from carnotlab.algebra import build_free_algebra, algebra_from_json
from carnotlab.chen import (
    GroupElement,
    TensorSeries,
    adjoint_flow,
    apply_matrix,
    chen_signature,
    dynkin_bch,
    endpoint,
    group_product,
    identity_element,
    lie_to_tensor,
    log_to_group,
    tensor_exp,
    tensor_to_lie,
    transport_covector,
)
from carnotlab.controls import PolyControl
from carnotlab.poly import peval

import oracles

F = Fraction


@pytest.fixture(scope="module")
def f23():
    return build_free_algebra(2, 3)


@pytest.fixture(scope="module")
def f33():
    return build_free_algebra(3, 3)


def rational_control(rng, rank, n_pieces=2, degree=1):
    pieces = []
    for _ in range(n_pieces):
        d = F(rng.randint(1, 3), rng.randint(1, 3))
        polys = [
            tuple(F(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(degree + 1))
            for _ in range(rank)
        ]
        pieces.append((d, polys))
    return PolyControl.from_pieces(rank, pieces)


def test_signature_single_letter_path():
    u = PolyControl.constant([F(1), F(0)])
    s = chen_signature(u, F(0), F(1), 3)
    assert s.coeff(()) == 1
    assert s.coeff((1,)) == 1
    assert s.coeff((1, 1)) == F(1, 2)
    assert s.coeff((1, 1, 1)) == F(1, 6)
    for word in [(2,), (1, 2), (2, 1), (1, 1, 2), (2, 2, 2)]:
        assert s.coeff(word) == 0


def test_signature_concatenation_order():
    u = PolyControl.constant([F(1), F(0)]).concat(PolyControl.constant([F(0), F(1)]))
    s = chen_signature(u, F(0), F(2), 2)
    assert s.coeff((1, 2)) == 1
    assert s.coeff((2, 1)) == 0
    assert s.coeff((1,)) == 1 and s.coeff((2,)) == 1


def test_chen_identity_and_simplex_oracle():
    rng = random.Random(5)
    u = rational_control(rng, 2, n_pieces=2, degree=1)
    T = u.duration
    mid = T / 2
    full = chen_signature(u, F(0), T, 3)
    left = chen_signature(u, F(0), mid, 3)
    right = chen_signature(u, mid, T, 3)
    assert (left @ right).levels == full.levels
    # independent ordered-simplex integration for a handful of words
    for word in [(1,), (2,), (1, 2), (2, 1), (1, 1, 2)]:
        assert full.coeff(word) == oracles.simplex_signature_coeff(u, word, F(0), T)


def test_shuffle_spot_check():
    rng = random.Random(9)
    u = rational_control(rng, 2, n_pieces=2, degree=1)
    s = chen_signature(u, F(0), u.duration, 2)
    assert s.coeff((1,)) * s.coeff((2,)) == s.coeff((1, 2)) + s.coeff((2, 1))


def test_log_straight_line(f23):
    u = PolyControl.constant([F(1), F(0)])
    g = endpoint(u, f23)
    assert g.coords == (1, 0, 0, 0, 0)


def test_log_two_segments_matches_dynkin_oracle(f23):
    u = PolyControl.constant([F(1), F(0)]).concat(PolyControl.constant([F(0), F(1)]))
    g = endpoint(u, f23)
    oracle = oracles.dynkin_bch_oracle(f23, f23.generator(1), f23.generator(2))
    assert g.coords == oracle.coords
    # displayed BCH coordinates
    assert g.vec.coord("1") == 1
    assert g.vec.coord("2") == 1
    assert g.vec.coord("12") == F(1, 2)
    assert g.vec.coord("112") == F(1, 12)
    # X_{212} = -X_{122} in the Lyndon basis
    assert g.vec.coord("(12)2") == F(1, 12)


def test_reversal_gives_group_inverse(f23):
    u = PolyControl.constant([F(2), F(-1)], duration=F(3, 2))
    g = endpoint(u, f23)
    h = endpoint(u.reversed_negated(), f23)
    assert (g * h).is_identity()
    assert h.coords == g.inverse().coords


def test_round_trip_reversal_any_control(f23):
    rng = random.Random(17)
    u = rational_control(rng, 2, n_pieces=2, degree=2)
    loop = u.concat(u.reversed_negated())
    assert endpoint(loop, f23).is_identity()


def test_group_axioms(f33):
    rng = random.Random(23)
    x1 = f33.generator(1)
    a, b = F(2, 3), F(5, 7)
    ga = GroupElement(a * x1)
    gb = GroupElement(b * x1)
    assert (ga * gb).coords == ((a + b),) + (F(0),) * (f33.dim - 1)
    for _ in range(10):
        v = f33.vector([F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(f33.dim)])
        g = GroupElement(v)
        assert (g * g.inverse()).is_identity()
        assert (identity_element(f33) * g).coords == g.coords
    for _ in range(5):
        g, h, k = (
            GroupElement(f33.vector([F(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(f33.dim)]))
            for _ in range(3)
        )
        assert ((g * h) * k).coords == (g * (h * k)).coords


def test_group_product_matches_concatenated_path_signature(f33):
    # product of endpoints == endpoint of concatenation (exact)
    rng = random.Random(31)
    u = rational_control(rng, 3, n_pieces=1, degree=1)
    v = rational_control(rng, 3, n_pieces=1, degree=1)
    lhs = group_product(endpoint(u, f33), endpoint(v, f33))
    rhs = endpoint(u.concat(v), f33)
    assert lhs.coords == rhs.coords


def test_dynkin_bch_agrees_with_tensor_route(f33):
    rng = random.Random(41)
    for _ in range(5):
        a = f33.vector([F(rng.randint(-2, 2), rng.randint(1, 2)) for _ in range(f33.dim)])
        b = f33.vector([F(rng.randint(-2, 2), rng.randint(1, 2)) for _ in range(f33.dim)])
        viatensor = tensor_to_lie(tensor_exp(lie_to_tensor(a)) @ tensor_exp(lie_to_tensor(b)), f33)
        assert dynkin_bch(a, b).coords == viatensor.coords


def test_quotient_group_product_is_homomorphic_image(f23):
    engel = algebra_from_json(
        {
            "rank": 2,
            "step": 3,
            "layers": [["1", "2"], ["12"], ["112"]],
            "structure": [
                {"i": "1", "j": "2", "out": {"12": "1"}},
                {"i": "1", "j": "12", "out": {"112": "1"}},
            ],
        }
    )
    rng = random.Random(43)
    for _ in range(5):
        u = rational_control(rng, 2, n_pieces=2, degree=1)
        g_free = endpoint(u, f23)
        g_q = endpoint(u, engel)
        # project free coordinates through the quotient map and compare
        proj = engel.zero()
        for c, w in zip(g_free.coords, f23.basis):
            proj = proj + c * engel.tree_vector(w.tree)
        assert proj.coords == g_q.coords


def test_zero_control_endpoint_identity(f23):
    u = PolyControl.constant([F(0), F(0)])
    assert endpoint(u, f23).is_identity()


def test_axes_sweep_closes(f33):
    sixth = F(1, 6)
    dirs = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    u = None
    for d in dirs:
        piece = PolyControl.constant([F(x) for x in d], duration=sixth)
        u = piece if u is None else u.concat(piece)
    assert endpoint(u, f33).is_identity()
    # oracle: product of the six exponential factors
    g = identity_element(f33)
    for d in dirs:
        g = g * GroupElement(sixth * f33.vector([F(x) for x in d] + [F(0)] * (f33.dim - 3)))
    assert g.is_identity()


def test_adjoint_constant_field(f23):
    u = PolyControl.constant([F(1), F(0)])
    for t in [F(0), F(1, 3), F(1)]:
        mat = adjoint_flow(u, t, f23)
        oracle = oracles.constant_ad_exponential(f23, [1, 0], t)
        assert mat == oracle
    m = adjoint_flow(u, F(1, 2), f23)
    v = apply_matrix(f23, m, f23.generator(2))
    assert v.coord("2") == 1
    assert v.coord("12") == F(1, 2)
    assert v.coord("112") == F(1, 8)
    assert v.coord("(12)2") == 0


def test_adjoint_identity_at_zero_and_top_layer(f33):
    rng = random.Random(51)
    u = rational_control(rng, 3, n_pieces=2, degree=1)
    m0 = adjoint_flow(u, F(0), f33)
    assert m0 == oracles.constant_ad_exponential(f33, [0, 0, 0], 0)
    mt = adjoint_flow(u, u.duration, f33)
    lo, hi = f33.layer_slice(3)
    for j in range(lo, hi):
        col = [mt[i][j] for i in range(f33.dim)]
        assert col == [F(1) if i == j else F(0) for i in range(f33.dim)]


def test_adjoint_is_bracket_homomorphism(f33):
    rng = random.Random(57)
    u = rational_control(rng, 3, n_pieces=2, degree=1)
    m = adjoint_flow(u, u.duration / 2, f33)
    from carnotlab.algebra import bracket

    for _ in range(3):
        a = f33.vector([F(rng.randint(-2, 2)) for _ in range(f33.dim)])
        b = f33.vector([F(rng.randint(-2, 2)) for _ in range(f33.dim)])
        lhs = apply_matrix(f33, m, bracket(a, b))
        rhs = bracket(apply_matrix(f33, m, a), apply_matrix(f33, m, b))
        assert lhs.coords == rhs.coords


def test_adjoint_cocycle_over_concatenation(f23):
    rng = random.Random(61)
    u = rational_control(rng, 2, n_pieces=1, degree=1)
    v = rational_control(rng, 2, n_pieces=1, degree=1)
    w = u.concat(v)
    from carnotlab.linalg import mat_mul

    m_split = mat_mul(adjoint_flow(u, u.duration, f23), adjoint_flow(v, v.duration, f23))
    m_whole = adjoint_flow(w, w.duration, f23)
    assert m_split == m_whole


def test_covector_transport_matches_adjoint(f33):
    rng = random.Random(67)
    u = rational_control(rng, 3, n_pieces=2, degree=1)
    lam = f33.dual_covector([F(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(f33.dim)])
    rows = transport_covector(lam, u)
    # mu(t) = lam . A(t): compare at piece-interior times
    t_acc = F(0)
    for (duration, rho), (dur2, _) in zip(rows, u.pieces):
        for frac in (F(1, 3), F(1)):
            tau = duration * frac
            mat = adjoint_flow(u, t_acc + tau, f33)
            expected = [
                sum(lam.coords[i] * mat[i][j] for i in range(f33.dim)) for j in range(f33.dim)
            ]
            got = [peval(p, tau) for p in rho]
            assert got == expected
        t_acc += duration


def test_non_grouplike_rejected(f23):
    s = TensorSeries.identity(2, 3)
    bad = TensorSeries(2, 3, ((F(2),),) + s.levels[1:])
    with pytest.raises(Exception):
        tensor_to_lie(bad, f23)
    with pytest.raises(Exception):
        log_to_group(bad, f23)
