import math

import numpy as np
import pytest

from multiree.bounds import corollary_bounds
from multiree.mregs import mregs_decompose, predicted_e3_average_form
from multiree.states import QuantumState, haar_random_pure, make_named_state, partial_trace, von_neumann_entropy

W_E3 = 2 * math.log2(3) - 2


def test_ghz_is_pure_ghz(fast_cfg):
    dec = mregs_decompose(make_named_state("ghz"), fast_cfg)
    assert abs(dec.g - 1) < 1e-6
    assert max(dec.s_ab, dec.s_ac, dec.s_bc) < 1e-6
    assert dec.residual < 1e-6 and abs(dec.predicted_e3 - 1) < 1e-6
    assert dec.approximation == "single-copy"


def test_epr_times_zero_is_one_singlet(fast_cfg):
    dec = mregs_decompose(make_named_state("epr", (2, 2, 2)), fast_cfg)
    assert abs(dec.s_ab - 1) < 1e-6 and dec.s_ac < 1e-6 and dec.s_bc < 1e-6
    assert abs(dec.g) < 1e-6 and dec.residual < 1e-6
    assert abs(dec.predicted_e3 - 1) < 1e-6


def test_w_row(fast_cfg):
    dec = mregs_decompose(make_named_state("w"), fast_cfg)
    # symmetric state: the three estimates of g coincide
    assert dec.residual < 1e-6
    assert abs(dec.predicted_e3 - W_E3) < 5e-3
    assert dec.to_dict()["approximation"] == "single-copy"


def test_entropy_equations_reproduced(fast_cfg):
    psi = haar_random_pure((2, 2, 2), 77)
    dec = mregs_decompose(psi, fast_cfg)
    s = [von_neumann_entropy(partial_trace(psi, {x})) for x in range(3)]
    assert abs(dec.g_from_a + dec.s_ab + dec.s_ac - s[0]) < 1e-12
    assert abs(dec.g_from_b + dec.s_ab + dec.s_bc - s[1]) < 1e-12
    assert abs(dec.g_from_c + dec.s_ac + dec.s_bc - s[2]) < 1e-12
    assert dec.residual >= 0


def test_average_form_agrees(fast_cfg):
    for psi in (make_named_state("w"), haar_random_pure((2, 2, 2), 3), haar_random_pure((2, 2, 2), 4)):
        dec = mregs_decompose(psi, fast_cfg)
        avg = predicted_e3_average_form(psi, fast_cfg)
        assert abs(avg - dec.predicted_e3) <= dec.residual + 1e-9
        assert abs(avg - corollary_bounds(psi, fast_cfg)[0]) < 1e-9


def test_pair_values_nonnegative(fast_cfg):
    for seed in range(3):
        dec = mregs_decompose(haar_random_pure((2, 2, 2), 40 + seed), fast_cfg)
        assert min(dec.s_ab, dec.s_ac, dec.s_bc) >= 0


def test_mixed_input_rejected(fast_cfg):
    with pytest.raises(ValueError):
        mregs_decompose(QuantumState((2, 2, 2), np.eye(8) / 8), fast_cfg)
    with pytest.raises(ValueError):
        mregs_decompose(make_named_state("epr"), fast_cfg)
