from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tilefix.core import ConfigurationError, InputError
from tilefix.entropy import (
    BLUE, RED, ConstantSchedule, GeometricSchedule, RedBlueParams, RERealEnumerator,
    beta_schedule, boundary_bound, density_recursion, density_trajectory, doubled_entropy,
    doubled_pattern_entropy, expand_colors, predicted_level, slot_fraction,
)
from tilefix.fixpoint import ZoomSchedule, layout, quasiperiodic_upgrade


def toy(n, alpha=1, beta=1):
    return RedBlueParams(ConstantSchedule(n), alpha, beta)


def test_first_levels_at_n3():
    p = toy(3)
    one = density_recursion(p, 1)
    assert (one.nu_R, one.nu_B) == (Fraction(8, 9), Fraction(1, 9))
    assert density_recursion(p, 2).nu_R == Fraction(65, 81)


def test_closed_form_at_n3():
    p = toy(3)
    for k, pair in enumerate(density_trajectory(p, 8)):
        assert pair.nu_R == Fraction(1, 2) + Fraction(7, 9) ** k / 2


@pytest.mark.parametrize("n", [3, 5])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_recursion_equals_expansion(n, k):
    p = toy(n)
    pair = density_recursion(p, k)
    cells = n ** (2 * k)
    assert Fraction(int(expand_colors(p, k, RED).sum()), cells) == pair.nu_R
    assert Fraction(int(expand_colors(p, k, BLUE).sum()), cells) == pair.nu_B


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 7), st.integers(1, 2), st.integers(1, 2), st.integers(1, 3))
def test_recursion_equals_expansion_asymmetric(n, a, b, k):
    if a + b >= n or n ** k > 400:
        return
    p = toy(n, a, b)
    pair = density_recursion(p, k)
    red = expand_colors(p, k, RED)
    assert Fraction(int(red.sum()), red.size) == pair.nu_R


def test_symmetric_corners_conserve():
    for n in (3, 5, 9):
        for k in range(1, 5):
            pair = density_recursion(toy(n, 2 if n > 4 else 1, 2 if n > 4 else 1), k)
            assert pair.nu_R + pair.nu_B == 1


def test_blue_map_is_dual_of_red():
    p = toy(3)
    for k in (1, 2):
        red, blue = expand_colors(p, k, RED), expand_colors(p, k, BLUE)
        assert np.array_equal(blue, 1 - np.rot90(red, 2))


def test_corner_validation():
    with pytest.raises(ConfigurationError):
        density_recursion(toy(3, 0, 1), 1)
    with pytest.raises(ConfigurationError):
        density_recursion(toy(3, 1, 2), 1)
    with pytest.raises(InputError):
        density_recursion(toy(3), -1)


def test_slots_mix_towards_half():
    lay = quasiperiodic_upgrade(layout(140, 0, 6, free_rows=124))
    s = slot_fraction(lay)
    assert s == Fraction(16 * 25, 140 * 140)
    plain = density_recursion(RedBlueParams(ConstantSchedule(140), 1, 1), 3)
    slotted = density_recursion(RedBlueParams(ConstantSchedule(140), 1, 1, s), 3)
    assert abs(slotted.nu_R - Fraction(1, 2)) < abs(plain.nu_R - Fraction(1, 2))


def test_beta_schedule_constant_half():
    rows = beta_schedule(RERealEnumerator.constant(Fraction(1, 2)), GeometricSchedule(10, 2), 40)
    sched = GeometricSchedule(10, 2)
    assert all(1 <= r.beta <= max(1, sched.N(r.k) // 10) for r in rows)
    dist = [abs(r.nu_R - Fraction(1, 2)) for r in rows]
    assert all(b <= a for a, b in zip(dist, dist[1:]))
    assert all(r.nu_R >= Fraction(1, 2) for r in rows)


def test_beta_schedule_chases_stream():
    h = RERealEnumerator.from_list(["1", "3/4", "5/8", "9/16"])
    rows = beta_schedule(h, GeometricSchedule(10, 2), 70)
    nu = [r.nu_R for r in rows]
    assert all(b <= a for a, b in zip(nu, nu[1:]))
    assert all(r.nu_R >= r.approx_h for r in rows)
    assert nu[-1] - Fraction(9, 16) < Fraction(1, 50)


def test_beta_schedule_h_zero_pushes_beta_up():
    sched = GeometricSchedule(10, 2)
    rows = beta_schedule(RERealEnumerator.constant(0), sched, 8)
    assert all(r.beta == max(1, sched.N(r.k) // 10) for r in rows)
    nu = [r.nu_R for r in rows]
    assert all(b < a for a, b in zip(nu, nu[1:]))


def test_beta_schedule_needs_growth():
    with pytest.raises(ConfigurationError):
        beta_schedule(RERealEnumerator.constant(Fraction(1, 2)), ConstantSchedule(20), 3)


def test_predicted_level_matches_schedule():
    sched = GeometricSchedule(10, 2)
    k = predicted_level(Fraction(1, 2), sched, Fraction(1, 100), 100)
    assert k is not None
    rows = beta_schedule(RERealEnumerator.constant(Fraction(1, 2)), sched, k)
    assert rows[-1].nu_R - Fraction(1, 2) < Fraction(1, 100)


def test_true_schedule_recursion_runs_exactly():
    pair = density_recursion(RedBlueParams(ZoomSchedule(2), 1, 1), 4)
    assert isinstance(pair.nu_R, Fraction) and 0 < pair.nu_B < pair.nu_R < 1


def test_doubled_entropy():
    assert doubled_entropy(0) == 0
    assert doubled_entropy(1) == 1
    assert doubled_entropy(Fraction(1, 2)) == Fraction(1, 2)
    with pytest.raises(InputError):
        doubled_entropy(2)


def test_doubled_pattern_count_at_level_two():
    p = toy(3)
    both = np.hstack([expand_colors(p, 2, RED), expand_colors(p, 2, BLUE)])
    assert Fraction(int(both.sum()), both.size) == Fraction(1, 2)
    assert abs(doubled_pattern_entropy(both) - 0.5) < 0.05
    red = expand_colors(p, 2, RED)
    assert doubled_pattern_entropy(red) == pytest.approx(65 / 81)


def test_boundary_bound_decreases():
    for p in (toy(3), toy(5), RedBlueParams(ZoomSchedule(2), 1, 1)):
        b = [boundary_bound(p, k) for k in range(1, 4)]
        assert all(y < x for x, y in zip(b, b[1:]))
