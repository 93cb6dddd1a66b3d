from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from groupoid_lab.errors import ChainError, InvalidInput
from groupoid_lab.invariant_measure import pi_obstruction
from groupoid_lab.odometer import (F2_CHAIN_IMAGES, QuotientLevel, UniformLevelMeasure, act, build_chain,
                                   cyclic_chain, cyclic_level, dyadic_chain, free_chain, intersection_index,
                                   is_compatible, kernel, make_point, regular_level, stabilizer_level,
                                   uniform_invariance_check)
from strategies import F2, Z, f2_elements, z_elements

CHAIN = free_chain()
DYADIC = dyadic_chain(4)


def perm_of(images, g):
    """Oracle: the permutation a word induces, composed straight from the generator images."""
    size = len(images[0])
    p = list(range(size))
    for letter in g.value:  # p := p o letter, so the word acts right-to-left
        im = images[abs(letter) - 1]
        if letter < 0:
            inv = [0] * size
            for i, x in enumerate(im):
                inv[x] = i
            im = inv
        p = [p[im[i]] for i in range(size)]
    return p


def test_dyadic_examples():
    assert DYADIC.orders == [2, 4, 8, 16]
    assert DYADIC.connecting[0] == (0, 1, 0, 1)
    x = make_point(DYADIC, 0).truncate(2)
    assert act(DYADIC, Z.element(1), x).cosets == (1, 1)
    assert act(DYADIC, Z.element(0), x) == x
    H = stabilizer_level(DYADIC, x, 0)
    assert H.contains(Z.element(2)) and not H.contains(Z.element(1))
    assert H.index == 2
    assert act(DYADIC, Z.element(-1), make_point(DYADIC, 0)).cosets == (1, 3, 7, 15)


def test_free_chain_orders_and_quotients():
    assert CHAIN.orders == [2, 6, 24, 48]
    # level 2 really is S3: six distinct permutations, non-abelian
    perms = {tuple(perm_of(F2_CHAIN_IMAGES[1], g)) for g in _ball_words(4)}
    assert len(perms) == 6
    a, b = F2.parse("a"), F2.parse("b")
    assert perm_of(F2_CHAIN_IMAGES[1], a * b) != perm_of(F2_CHAIN_IMAGES[1], b * a)


def _ball_words(r):
    from groupoid_lab.group_words import ball
    return sorted(ball(F2, r), key=lambda g: g.sort_key())


@pytest.mark.parametrize("level", range(4))
def test_kernel_matches_image_oracle(level):
    K = kernel(CHAIN, level)
    for g in _ball_words(4):
        trivial = perm_of(F2_CHAIN_IMAGES[level], g) == list(range(len(F2_CHAIN_IMAGES[level][0])))
        assert K.contains(g) == trivial
    for w in K.generators:
        assert all(x == i for i, x in enumerate(perm_of(F2_CHAIN_IMAGES[level], CHAIN.word(w))))


@pytest.mark.parametrize("level", range(4))
def test_stabilizer_equals_kernel_everywhere(level):
    for top in range(CHAIN.orders[-1]):
        x = make_point(CHAIN, top)
        assert is_compatible(CHAIN, x)
        assert stabilizer_level(CHAIN, x, level) == kernel(CHAIN, level)
    for top in range(DYADIC.orders[-1]):
        assert stabilizer_level(DYADIC, make_point(DYADIC, top), level) == kernel(DYADIC, level)


def test_kernels_decrease_and_intersections():
    for level in range(3):
        assert kernel(CHAIN, level + 1).issubset(kernel(CHAIN, level))
        assert not kernel(CHAIN, level).issubset(kernel(CHAIN, level + 1))
    idx = [intersection_index(CHAIN, N) for N in range(1, 5)]
    assert idx == CHAIN.orders
    assert [intersection_index(DYADIC, N) for N in range(1, 5)] == [2, 4, 8, 16]


@given(f2_elements(), f2_elements(), st.integers(0, 47))
def test_action_laws_f2(g, h, top):
    x = make_point(CHAIN, top)
    assert act(CHAIN, g * h, x) == act(CHAIN, g, act(CHAIN, h, x))
    y = act(CHAIN, g, x)
    assert is_compatible(CHAIN, y)
    for L in range(1, 4):
        assert act(CHAIN, g, x.truncate(L)) == y.truncate(L)
    assert act(CHAIN, F2.identity(), x) == x


@given(z_elements(100), z_elements(100), st.integers(0, 15))
def test_action_laws_z(g, h, top):
    x = make_point(DYADIC, top)
    assert act(DYADIC, g * h, x) == act(DYADIC, g, act(DYADIC, h, x))
    # carry semantics: the top coordinate is addition modulo 16
    assert act(DYADIC, g, x).cosets[-1] == (top + g.value) % 16
    assert is_compatible(DYADIC, act(DYADIC, g, x))


def test_rejections_carry_witnesses():
    with pytest.raises(ChainError) as info:
        build_chain(F2, [regular_level(((1, 0), (0, 1))), regular_level(F2_CHAIN_IMAGES[1])])
    w = F2.parse(info.value.witness)
    lower = perm_of(((1, 0), (0, 1)), w)
    upper = perm_of(F2_CHAIN_IMAGES[1], w)
    # the witness dies in the upper quotient but not in the lower one
    assert upper == [0, 1, 2] and lower != [0, 1]
    with pytest.raises(ChainError) as info:
        cyclic_chain([4, 6])
    assert int(info.value.witness) % 6 == 0 and int(info.value.witness) % 4 != 0
    with pytest.raises(ChainError):
        cyclic_chain([4, 8, 8])
    with pytest.raises(ChainError) as info:
        build_chain(F2, [QuotientLevel(((0, 2, 1), (2, 1, 0)), 3)])
    w = F2.parse(info.value.witness)
    assert perm_of(((0, 2, 1), (2, 1, 0)), w)[0] != 0  # conjugate of a stabilizer element moves 0
    with pytest.raises(ChainError):
        build_chain(F2, [QuotientLevel(((0, 1), (0, 1)), 2)])  # not transitive
    with pytest.raises(ChainError):
        build_chain(F2, [QuotientLevel(((0, 0), (1, 0)), 2)])  # not a permutation
    with pytest.raises(InvalidInput):
        cyclic_level(121)


def test_uniform_invariance_and_fault_injection():
    for chain in (CHAIN, DYADIC):
        for level in range(4):
            cert = uniform_invariance_check(chain, level)
            assert cert.verdict == "pass"
            assert cert.values["point_mass"] == Fraction(1, chain.orders[level])
    lv = CHAIN.levels[1]
    broken = replace(lv, perms=(lv.perms[0][:-1] + (lv.perms[0][0],), lv.perms[1]))
    bad_chain = replace(CHAIN, levels=(CHAIN.levels[0], broken) + CHAIN.levels[2:])
    cert = uniform_invariance_check(bad_chain, 1)
    assert cert.verdict == "fail" and cert.values["violation_count"] == 2
    with pytest.raises(ChainError):
        build_chain(F2, bad_chain.levels)


def test_level_measures_give_obstructions():
    for chain in (CHAIN, DYADIC):
        for level in range(4):
            mu = UniformLevelMeasure(chain, level)
            cert = pi_obstruction(mu, range(chain.orders[level]), {0})
            assert cert.verdict == "pass"
            assert cert.values["measure_V"] == Fraction(1, chain.orders[level])
