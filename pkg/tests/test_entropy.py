from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import spectra
from qcorr.entropy import (
    LINEAR, VON_NEUMANN, EntropyFunctional, Spectrum, binary_entropy, eval_entropy,
    majorizes, tsallis_to_renyi,
)
from qcorr.errors import DomainError, NormalizationError

FUNCTIONALS = [VON_NEUMANN, LINEAR, EntropyFunctional.tsallis(0.5),
               EntropyFunctional.tsallis(3.0), EntropyFunctional.renyi(2.0),
               EntropyFunctional.renyi(0.5)]


def test_pure_spectrum_has_zero_entropy():
    assert eval_entropy([1, 0, 0, 0]) == 0.0


def test_maximally_mixed_pair_is_two_bits():
    assert eval_entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-15)


def test_linear_entropy_of_mixed_qubit():
    assert eval_entropy([0.5, 0.5], LINEAR) == pytest.approx(1.0, abs=1e-15)


def test_renyi_two_of_biased_bit():
    # -log2(0.9**2 + 0.1**2), evaluated in 30-digit arithmetic
    assert eval_entropy([0.9, 0.1], EntropyFunctional.renyi(2)) == pytest.approx(
        0.286304185156641, abs=1e-14)


def test_linear_on_maximally_mixed_pair_is_three_halves():
    assert eval_entropy([0.25] * 4, LINEAR) == pytest.approx(1.5, abs=1e-15)


def test_spectrum_clamps_tiny_negatives():
    s = Spectrum([1.0 + 5e-13, -5e-13])
    assert s.probs.min() == 0.0


@pytest.mark.parametrize("bad", [[0.5, 0.6], [1.1, -0.1], [np.nan, 1.0], []])
def test_spectrum_rejects_invalid(bad):
    with pytest.raises(NormalizationError):
        Spectrum(bad)


@pytest.mark.parametrize("q", [0.0, -1.0, math.inf])
def test_nonpositive_q_rejected(q):
    with pytest.raises(DomainError):
        EntropyFunctional.tsallis(q)


def test_spectrum_keeps_caller_order():
    assert list(Spectrum([0.1, 0.9]).probs) == [0.1, 0.9]


@pytest.mark.parametrize("a,b,expected", [
    ([1, 0], [0.5, 0.5], True),
    ([0.5, 0.5], [0.5, 0.5], True),
    ([0.6, 0.2, 0.2], [0.5, 0.3, 0.2], True),
    ([0.5, 0.5], [1, 0], False),
    ([1.0], [0.5, 0.25, 0.25], True),
])
def test_majorizes(a, b, expected):
    assert majorizes(a, b) is expected


@pytest.mark.parametrize("sq,q,expected", [(0.0, 2.0, 0.0), (0.0, 0.5, 0.0),
                                           (1.0, 2.0, 1.0), (1.5, 2.0, 2.0)])
def test_tsallis_to_renyi_values(sq, q, expected):
    assert tsallis_to_renyi(sq, q) == pytest.approx(expected, abs=1e-14)


def test_tsallis_to_renyi_rejects_bad_argument():
    with pytest.raises(DomainError):
        tsallis_to_renyi(2.0, 2.0)
    with pytest.raises(DomainError):
        tsallis_to_renyi(0.5, 1.0)


def test_q_near_one_uses_von_neumann_branch():
    f = EntropyFunctional.tsallis(1 + 1e-8)
    assert f.is_von_neumann
    p = [0.7, 0.2, 0.1]
    assert eval_entropy(p, f) == eval_entropy(p, VON_NEUMANN)


def test_binary_entropy_endpoints():
    assert np.allclose(binary_entropy([0.0, 0.5, 1.0]), [0.0, 1.0, 0.0])


@given(spectra(), spectra(), st.floats(0.01, 0.99))
def test_concavity(a, b, t):
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    for f in FUNCTIONALS:
        if not f.is_trace_form:
            continue
        mix = eval_entropy(t * a + (1 - t) * b, f)
        assert mix >= t * eval_entropy(a, f) + (1 - t) * eval_entropy(b, f) - 1e-12


@given(spectra(), st.floats(0.0, 1.0))
def test_schur_concavity(a, t):
    # mixing towards uniform yields a majorized spectrum
    b = t * a + (1 - t) * np.full(a.size, 1.0 / a.size)
    assert majorizes(a, b)
    for f in FUNCTIONALS:
        assert eval_entropy(b, f) >= eval_entropy(a, f) - 1e-12


@given(spectra())
def test_tsallis_tends_to_von_neumann(p):
    vn = eval_entropy(p)
    for q in (1 - 1e-4, 1 + 1e-4):
        assert abs(eval_entropy(p, EntropyFunctional.tsallis(q)) - vn) < 1e-3


@given(spectra(), st.sampled_from([0.3, 0.5, 2.0, 3.0, 7.5]))
def test_tsallis_to_renyi_matches_direct(p, q):
    sq = eval_entropy(p, EntropyFunctional.tsallis(q))
    assert tsallis_to_renyi(sq, q) == pytest.approx(
        eval_entropy(p, EntropyFunctional.renyi(q)), abs=1e-12)


@given(spectra())
def test_entropies_nonnegative(p):
    for f in FUNCTIONALS:
        assert eval_entropy(p, f) >= 0.0


@given(spectra())
def test_majorization_reflexive(p):
    assert majorizes(p, p)
