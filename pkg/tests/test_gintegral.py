import math

import numpy as np
import pytest

from hopfsmp.gintegral import G_difference, Scale, classify_G, compute_G
from hopfsmp.profiles import FlatOnInterval, InverseLogPower, InverseLogSquare, Laplacian, Power


def test_invlogsq_value():
    # G(xi) = -1 / (2 ln(xi^2/N)) for g = 1/ln^2
    expected = -1.0 / (2.0 * math.log(0.01 / 2))
    assert expected == pytest.approx(0.09437, abs=1e-5)
    for method in ("closed", "quadrature"):
        assert compute_G(InverseLogSquare(), 0.1, "invn", 2, method).value == pytest.approx(expected, rel=1e-10)


def test_scale_one_matches_rescaled_xi():
    prof = InverseLogSquare()
    N = 3
    a = compute_G(prof, 0.05, Scale.ONE, N).value
    b = compute_G(prof, 0.05 * math.sqrt(N), Scale.INVN, N).value
    assert a == pytest.approx(b, rel=1e-12)


def test_even_and_zero():
    prof = InverseLogPower(3.0)
    assert compute_G(prof, -0.02).value == compute_G(prof, 0.02).value
    assert compute_G(prof, 0.0).value == 0.0


def test_monotone_in_xi():
    prof = Power(1.0)
    xi = np.linspace(0.01, 0.9, 30)
    vals = [compute_G(prof, x).value for x in xi]
    assert np.all(np.diff(vals) > 0)


def test_power_closed_form():
    # g = t: G = (xi^2/N)/2
    assert compute_G(Power(1.0), 0.5, "invn", 2, "quadrature").value == pytest.approx(0.0625, rel=1e-10)


def test_classification():
    assert classify_G(Laplacian()) == "Divergent"
    assert classify_G(InverseLogPower(1.0)) == "Divergent"
    assert classify_G(InverseLogPower(1.0), method="quadrature") == "Divergent"
    assert classify_G(InverseLogSquare()) == "Finite"
    assert classify_G(FlatOnInterval(2.0)) == "Finite"
    assert classify_G(Power(1.0), method="quadrature") == "Finite"


def test_divergent_value_is_inf_and_difference_finite():
    b = compute_G(Laplacian(), 0.3, "one", 2)
    assert b.divergent and b.to_json()["value"] is None
    # Laplacian: G(xi1) - G(xi0) = ln(xi1/xi0)
    assert G_difference(Laplacian(), 0.4, 0.1) == pytest.approx(math.log(4.0), rel=1e-12)


def test_bad_method():
    with pytest.raises(ValueError):
        compute_G(Laplacian(), 0.1, method="simpson")
