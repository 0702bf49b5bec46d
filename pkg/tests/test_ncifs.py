import cmath
import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nonautojulia.errors import (BranchIndexOutOfRange, BudgetExceeded, DomainViolation,
                                 PreconditionError)
from nonautojulia.ncifs import (ETA, Word, apply_word, branch_apply, branch_deriv_sup,
                                branch_derivative, branch_images, circle, count_words, cylinder,
                                eta_epsilon, iter_limit_points, limit_points, radius_bound,
                                sampled_deriv_sup, verify_system, word_of_index,
                                write_limit_points_csv)
from nonautojulia.seqcore import ParamSpec, checkpoint, survival_test, window_apply


def test_first_branches_quartic():
    spec = ParamSpec.explicit([(5, 1)])
    assert cmath.isclose(branch_apply(spec, 1, 0, 1), 1 + 1j, rel_tol=1e-12)
    assert cmath.isclose(branch_apply(spec, 1, 1, 1), -1 + 1j, rel_tol=1e-12)


def test_branch_errors(const5):
    with pytest.raises(DomainViolation):
        branch_apply(const5, 1, 0, 4)
    with pytest.raises(BranchIndexOutOfRange):
        branch_apply(const5, 1, 8, 0)
    with pytest.raises(DomainViolation):
        branch_images(const5, 1, np.array([0, 5j]))


def test_branch_images_are_distinct_preimages(const5):
    imgs = branch_images(const5, 1, np.array([1.5 - 0.5j]))
    assert imgs.shape == (8, 1)
    np.testing.assert_allclose(imgs[:, 0] ** 8 + 5, 1.5 - 0.5j, atol=1e-12)
    assert len(np.unique(np.round(imgs, 9))) == 8


def test_deriv_sup_closed_form(const5):
    assert branch_deriv_sup(const5, 1) == pytest.approx(oracles.CONST5_DERIV_SUP, rel=1e-14)
    assert ETA == pytest.approx(oracles.ETA, rel=1e-15)


def test_derivative_attained_at_closest_point(const5):
    w = np.array([2.0 + 0j])
    assert branch_derivative(const5, 1, w)[0] == pytest.approx(branch_deriv_sup(const5, 1))


def test_radius_bound_decays(hdmax):
    assert radius_bound(hdmax, 0) == 4.0
    for k in range(1, 8):
        assert radius_bound(hdmax, k) <= 4 * ETA ** k


def test_word_numbering_is_a_bijection(hdmax):
    k = 2
    words = {word_of_index(hdmax, k, i).letters for i in range(count_words(hdmax, k))}
    assert len(words) == count_words(hdmax, k) == 2 ** 7
    assert word_of_index(hdmax, k, 1).letters == (0, 1)
    assert str(Word((3, 0, 7))) == "3-0-7"
    assert Word.from_json(Word((1, 2)).to_json()) == Word((1, 2))


def test_word_check(hdmax):
    with pytest.raises(BranchIndexOutOfRange):
        Word((8,)).check(hdmax)
    Word((7, 15)).check(hdmax)


def test_limit_points_follow_word_order(const5):
    pts = limit_points(const5, 2)
    for i in (0, 5, 17, 63):
        cyl = cylinder(const5, word_of_index(const5, 2, i))
        assert cmath.isclose(pts[i], cyl.center, abs_tol=1e-13)
    parts = list(iter_limit_points(const5, 2))
    assert [j for j, _ in parts] == list(range(8))


def test_limit_point_budget(hdmax):
    with pytest.raises(BudgetExceeded):
        limit_points(hdmax, 4, budget=1000)
    assert len(limit_points(hdmax, 0)) == 1


def test_cylinders_nest(const5):
    inner = cylinder(const5, Word((2, 5, 1)), anchor=0j)
    outer = cylinder(const5, Word((2, 5)), anchor=0j)
    assert abs(inner.center - outer.center) <= outer.radius_bound


def test_anchor_zero_centers_survive(const5):
    pts = limit_points(const5, 3, anchor=0j)
    assert all(survival_test(const5, complex(z), 3) for z in pts[::37])


def test_eta_epsilon():
    assert eta_epsilon(0.5) == pytest.approx(0.25 * 1.5 ** -0.75)
    for bad in (0, -0.1, 1.5):
        with pytest.raises(PreconditionError):
            eta_epsilon(bad)


def test_sampled_sup_close_to_closed_form(hdmax):
    pts = circle(0, 2.0, 4096)
    assert sampled_deriv_sup(hdmax, 2, 3, pts) == pytest.approx(branch_deriv_sup(hdmax, 2), rel=1e-6)


def test_verify_small_horizon(const5):
    check = verify_system(const5, 2, samples=1024, mesh=1024)
    assert check.all_ok
    assert set(check.details["distortion"]) == {"1", "2"}


def test_verify_flags_weak_contraction():
    # |c| = 3 is inadmissible: sup |phi'| = 1/4 exceeds eta
    check = verify_system(ParamSpec.explicit([(3, 1)]), 1, samples=1024, mesh=1024)
    assert not check.contraction_ok and not check.all_ok


def test_limit_points_csv(tmp_path, const5):
    path = tmp_path / "pts.csv"
    n = write_limit_points_csv(path, const5, 1)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["word", "re", "im", "radius_bound"] and len(rows) == n + 1 == 9


admissible = st.tuples(st.floats(4.05, 60.0), st.floats(0, 2 * math.pi),
                       st.integers(2, 5)).map(lambda t: (cmath.rect(t[0], t[1]), t[2]))


@settings(max_examples=80, deadline=None)
@given(admissible, st.floats(0, 1.99), st.floats(0, 2 * math.pi), st.data())
def test_branch_round_trip(pair, r, t, data):
    spec = ParamSpec.explicit([pair])
    j = data.draw(st.integers(0, spec.degree(1) - 1))
    w = cmath.rect(r, t)
    z = branch_apply(spec, 1, j, w)
    assert abs(z) <= 2.0
    assert abs(window_apply(spec, 1, z) - w) <= 1e-10 * max(1, abs(w))


@settings(max_examples=30, deadline=None)
@given(st.lists(admissible, min_size=1, max_size=3), st.data())
def test_word_images_stay_in_disc(pairs, data):
    spec = ParamSpec.explicit(pairs)
    letters = tuple(data.draw(st.integers(0, spec.degree(i) - 1)) for i in range(1, len(pairs) + 1))
    z = apply_word(spec, Word(letters), circle(0, 2.0, 64))
    assert np.all(np.abs(z) <= 2.0)


def test_words_have_checkpoint_count(hdmax):
    assert count_words(hdmax, 3) == 2 ** checkpoint(hdmax, 3)
