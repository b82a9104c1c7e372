import random
from fractions import Fraction

import pytest

from carnotlab.algebra import build_free_algebra
from carnotlab.chen import adjoint_flow
from carnotlab.controls import PolyControl
from carnotlab.singularity import (
    SingularityError,
    annihilator,
    image_of_differential,
    kernel_residual,
    moment_matrix,
    pfaffian2,
    singularity_report,
)

import oracles

F = Fraction


@pytest.fixture(scope="module")
def f23():
    return build_free_algebra(2, 3)


@pytest.fixture(scope="module")
def f24():
    return build_free_algebra(2, 4)


@pytest.fixture(scope="module")
def f33():
    return build_free_algebra(3, 3)


def const2(a, b, duration=F(1)):
    return PolyControl.constant([F(a), F(b)], duration=duration)


def test_image_constant_control(f23):
    u = const2(1, 0)
    img = image_of_differential(u, f23)
    assert img.rank == 4
    assert img.codim == 1
    for text in ["1", "2", "12", "112"]:
        assert img.contains(f23.basis_vector(text).coords)
    assert not img.contains(f23.basis_vector("(12)2").coords)
    # oracle: rank of sampled exp(t ad X1) columns
    mats = [oracles.constant_ad_exponential(f23, [1, 0], t) for t in (F(0), F(1, 3), F(1, 2), F(1))]
    assert oracles.brute_span_rank(f23, mats) == 4


def test_image_two_nonparallel_pieces(f23):
    u = const2(1, 0, F(1, 2)).concat(const2(0, 1, F(1, 2)))
    img = image_of_differential(u, f23)
    assert img.rank == 5
    assert annihilator(img) == []


def test_g1_always_contained(f33):
    rng = random.Random(5)
    for _ in range(5):
        pieces = []
        for _ in range(2):
            pieces.append(
                (
                    F(rng.randint(1, 2), 2),
                    [
                        tuple(F(rng.randint(-2, 2)) for _ in range(2))
                        for _ in range(3)
                    ],
                )
            )
        u = PolyControl.from_pieces(3, pieces)
        img = image_of_differential(u, f33)
        for i in range(3):
            assert img.contains(f33.generator(i + 1).coords)


def test_annihilator_constant_control(f23):
    u = const2(1, 0)
    ann = annihilator(image_of_differential(u, f23))
    assert len(ann) == 1
    lam = ann[0]
    # spanned by the dual of X_{212} = -X_{(12)2}; normalized sign: first nonzero positive
    expected = {"(12)2": 1}
    nonzero = {f23.basis[k].text: c for k, c in enumerate(lam.coords) if c != 0}
    assert nonzero == expected
    assert lam.layer_is_zero(1)
    assert lam.layer_is_zero(2)  # Goh for rank 2


def test_moment_matrix_vanishes_on_certified_pair(f23):
    u = const2(1, 0)
    lam = annihilator(image_of_differential(u, f23))[0]
    mm = moment_matrix(u, lam)
    assert mm.is_identically_zero()
    assert kernel_residual(u, lam) == 0


def test_moment_matrix_value_r3s3_at_zero(f33):
    rng = random.Random(11)
    lam = f33.dual_covector([F(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(f33.dim)])
    u = PolyControl.constant([F(1), F(-1), F(2)])
    mm = moment_matrix(u, lam)
    m0 = mm.eval(F(0))
    for i in range(3):
        for j in range(3):
            word = f"{i + 1}{j + 1}"
            expected = lam.pair_word(word) if i != j else 0
            assert m0[i][j] == expected


def test_moment_matrix_skew_at_random_times(f33):
    rng = random.Random(13)
    lam = f33.dual_covector([F(rng.randint(-3, 3)) for _ in range(f33.dim)])
    u = PolyControl.constant([F(1), F(2), F(0)], F(1, 2)).concat(
        PolyControl.constant([F(0), F(-1), F(1)], F(1, 2))
    )
    mm = moment_matrix(u, lam)
    for t in (F(0), F(1, 4), F(1, 2), F(3, 4), F(1)):
        m = mm.eval(t)
        for i in range(3):
            for j in range(3):
                assert m[i][j] == -m[j][i]


def test_moment_matrix_r2s4_formula(f24):
    # M_u(lam,t)_12 = lam_{w(t)12} + int_0^t lam_{w u 12}
    rng = random.Random(17)
    lam = f24.dual_covector([F(rng.randint(-2, 2), rng.randint(1, 2)) for _ in range(f24.dim)])
    lam_coords = list(lam.coords)
    # zero out g1*, g2* so the displayed formula applies verbatim
    for k in range(3):
        lam_coords[k] = F(0)
    lam = f24.dual_covector(lam_coords)
    u = PolyControl.from_pieces(2, [(F(1), [(F(1), F(2)), (F(-1), F(1))])])
    mm = moment_matrix(u, lam)
    w = u.primitive()
    for t in (F(1, 3), F(2, 3), F(1)):
        wt = w(t)
        direct = sum(wt[i] * lam.pair_word(f"{i + 1}12") for i in range(2))
        # quadrature of lam_{w(tau) u(tau) 1 2} dtau via symbolic polynomials
        from carnotlab.poly import peval, pint, pmul, padd

        dur, polys = u.pieces[0]
        wpolys = w.pieces[0][1]
        inner = ()
        for i in range(2):
            for j in range(2):
                coef = lam.pair_word(f"{i + 1}{j + 1}12")
                if coef:
                    inner = padd(inner, tuple(c * coef for c in pmul(wpolys[i], polys[j])))
        integral = peval(pint(inner), t)
        assert mm.eval(t)[0][1] == direct + integral


def test_pfaffian2():
    assert pfaffian2([[0, 3], [-3, 0]]) == 3
    assert pfaffian2([[0, 0], [0, 0]]) == 0
    with pytest.raises(SingularityError):
        pfaffian2([[1, 2], [-2, 0]])


def test_kernel_residual_positive_for_nonsingular(f23):
    u = const2(1, 0, F(1, 2)).concat(const2(0, 1, F(1, 2)))
    lam = f23.covector_from_words({"112": F(1)})
    res = kernel_residual(u, lam)
    assert isinstance(res, float) and res > 1e-3


def test_kernel_residual_scaling(f23):
    u = const2(1, 0, F(1, 2)).concat(const2(0, 1, F(1, 2)))
    lam = f23.covector_from_words({"112": F(1), "(12)2": F(-2)})
    r1 = kernel_residual(u, lam, grid=33)
    r3 = kernel_residual(u, 3 * lam, grid=33)
    assert abs(r3 - 3 * r1) < 1e-12 * max(1.0, r3)


def test_report_equivalences_random_batch(f23, f24):
    rng = random.Random(23)
    for alg in (f23, f24):
        for trial in range(12):
            if trial % 2 == 0:
                # generic two-piece: almost surely nonsingular
                pieces = [
                    (F(1, 2), [(F(rng.randint(-3, 3)),), (F(rng.randint(-3, 3)),)]),
                    (F(1, 2), [(F(rng.randint(-3, 3)),), (F(rng.randint(-3, 3)),)]),
                ]
            else:
                # both pieces parallel: singular by construction
                a, b = rng.randint(-3, 3), rng.randint(-3, 3)
                if (a, b) == (0, 0):
                    a = 1
                s = F(rng.randint(1, 3))
                pieces = [
                    (F(1, 2), [(F(a),), (F(b),)]),
                    (F(1, 2), [(s * a,), (s * b,)]),
                ]
            u = PolyControl.from_pieces(2, pieces)
            rep = singularity_report(u, alg)
            ann = rep.annihilator
            assert (rep.codim >= 1) == (len(ann) > 0)
            for lam in ann:
                assert kernel_residual(u, lam) == 0
            if rep.codim >= 1 and alg.rank == 2:
                assert rep.goh is True


def test_saturation_under_extra_samples(f24):
    rng = random.Random(29)
    u = PolyControl.from_pieces(
        2, [(F(1), [(F(1), F(1)), (F(2),)])]
    )
    img = image_of_differential(u, f24)
    rows = [list(r) for r in img.basis_rows]
    from carnotlab.chen import apply_matrix

    for _ in range(20):
        t = F(rng.randint(0, 12), 12)
        mat = adjoint_flow(u, t, f24)
        y = f24.generator(rng.randint(1, 2))
        vec = apply_matrix(f24, mat, y)
        assert img.contains(vec.coords)


def test_reparametrization_invariance(f23):
    rng = random.Random(31)
    u = PolyControl.from_pieces(
        2, [(F(1, 2), [(F(1), F(-1)), (F(2),)]), (F(1, 2), [(F(0),), (F(1), F(1))])]
    )
    img = image_of_differential(u, f23)
    # piecewise-linear increasing phi: [0, 1/3] -> [0, 3/4], [1/3, 1] -> [3/4, 1]
    left = u.clip(F(0), F(3, 4)).scale_time(F(1, 3) / F(3, 4))
    right = u.clip(F(3, 4), F(1)).scale_time(F(2, 3) / F(1, 4))
    v = left.concat(right)
    assert v.duration == 1
    img2 = image_of_differential(v, f23)
    assert img.rank == img2.rank
    for row in img2.basis_rows:
        assert img.contains(row)


def test_singularity_report_json(f23):
    u = const2(1, 0)
    rep = singularity_report(u, f23, control_id="const-x1")
    blob = rep.to_json()
    assert blob["rank"] == 4 and blob["codim"] == 1 and blob["singular"] is True
    assert blob["goh"] is True
    assert blob["annihilator"] == [{"(12)2": "1"}]
    assert blob["mode"] == "exact"
