import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrition import ConcessionProfile, GameParams, OutOfRange, Priors, validate
from attrition.core import cdf_at, path_from_profile, posterior_at


def test_lam_ag_values():
    assert GameParams(1.0, 0.7).lam_ag == 0.75
    assert GameParams(2.0, 0.7).lam_ag == 1.5
    assert GameParams(1.0, 1 - 1e-9).lam_ag < 1e-8


def test_validate_accepts_uneven_pies():
    validate(GameParams(1.0, 0.7, 2.0, 1.0), Priors(0.6, 0.1, 0.2))


@pytest.mark.parametrize("params,priors,field", [
    (GameParams(1.0, 0.5), None, "alpha"),
    (GameParams(1.0, 1.0), None, "alpha"),
    (GameParams(0.0, 0.7), None, "r"),
    (GameParams(float("inf"), 0.7), None, "r"),
    (GameParams(1.0, 0.7, -1.0), None, "pi_ac"),
    (GameParams(1.0, 0.7), Priors(1.0, 0.1, 0.2), "z_a"),
    (GameParams(1.0, 0.7), Priors(0.5, 0.0, 0.2), "z_b"),
])
def test_validate_rejects(params, priors, field):
    with pytest.raises(OutOfRange) as exc:
        validate(params, priors)
    assert exc.value.field == field


def test_cdf_half_life():
    prof = ConcessionProfile.from_rates(0.0, [0.0, math.log(2) / 0.75], [0.75])
    assert cdf_at(prof, math.log(2) / 0.75) == pytest.approx(0.5, abs=1e-15)


def test_cdf_right_continuous_at_zero():
    prof = ConcessionProfile.from_rates(0.3943, [0.0, 1.0], [0.75])
    assert cdf_at(prof, 0.0) == pytest.approx(0.3943)
    assert cdf_at(prof, -1.0) == 0.0


def test_posterior_reaches_alignment():
    # prior 0.2 jumping to 0.330 and then growing at rate 0.75 reaches 0.6 at 0.796
    atom = 1 - 0.2 / 0.330
    prof = ConcessionProfile.from_rates(atom, [0.0, 5.0], [0.75])
    path = path_from_profile(0.2, prof)
    assert posterior_at(path, 0.0) == pytest.approx(0.330)
    assert posterior_at(path, 0.796) == pytest.approx(0.6, abs=1e-3)  # both inputs rounded to 3 places


def test_posterior_without_atom():
    prof = ConcessionProfile.from_rates(0.0, [0.0, 1.0], [0.75])
    assert posterior_at(path_from_profile(0.5, prof), 0.0) == 0.5
    fast = ConcessionProfile.from_rates(0.0, [0.0, 2.0], [2.25])
    assert posterior_at(path_from_profile(0.1, fast), 0.7153) == pytest.approx(0.5, abs=1e-4)


rates = st.lists(st.floats(0.01, 5.0), min_size=1, max_size=5)


@settings(max_examples=200, deadline=None)
@given(atom=st.floats(0.0, 0.9), rs=rates, data=st.data())
def test_profile_properties(atom, rs, data):
    widths = data.draw(st.lists(st.floats(0.01, 2.0), min_size=len(rs), max_size=len(rs)))
    breaks = np.concatenate([[0.0], np.cumsum(widths)]).tolist()
    prof = ConcessionProfile.from_rates(atom, breaks, rs)
    ts = np.linspace(0.0, breaks[-1], 50)
    F = np.array([prof.cdf(t) for t in ts])
    assert np.all(np.diff(F) >= -1e-15)
    assert F[0] == pytest.approx(atom)
    assert np.allclose(prof.survival_array(ts), 1 - F, rtol=1e-12, atol=1e-15)
    # inverse of the integrated hazard
    x = np.array([prof.cum_hazard(t) for t in ts])
    assert np.allclose(prof.inverse_cum_hazard(x), ts, atol=1e-9)
