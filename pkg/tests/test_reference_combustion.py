import numpy as np
import pytest

from irrpinn.errors import BracketError
from irrpinn.problems.combustion import CombustionParams, derived_fields
from irrpinn.reference.combustion_shooting import shoot_combustion

# frozen once from this implementation at n_grid=1000 (cross-checked by
# grid doubling: shift 0.23% < 0.5%)
GOLDEN_S_L = 0.26893311


@pytest.fixture(scope="module")
def shot():
    return shoot_combustion(CombustionParams(), n_grid=1000)


def test_golden_eigenvalue(shot):
    assert shot.s_L_star == pytest.approx(GOLDEN_S_L, rel=1e-3)


def test_bracket_width_halves_to_convergence(shot):
    # [0.05, 5.0] halved to < 1e-6 takes ceil(log2(4.95e6)) = 23 steps
    assert shot.bisections <= 25
    assert shot.bracket_width < 1e-6


def test_temperature_monotone_non_decreasing(shot):
    assert np.all(np.diff(shot.T) >= -1e-9)


def test_march_reaches_near_complete_burn(shot):
    p = CombustionParams()
    assert shot.T[-1] > 0.9 * p.T_ad
    assert shot.Y_F[-1] < 0.01


def test_grid_doubling_shift(shot):
    fine = shoot_combustion(CombustionParams(), n_grid=2000)
    assert abs(fine.s_L_star - shot.s_L_star) / shot.s_L_star < 0.005


def test_bracket_classification_directions():
    # below the eigenvalue an igniting march rolls over (flashback); above
    # it the temperature runs away (blow-off).  At very low speeds the
    # flame structure outgrows the domain and the march survives whole.
    from irrpinn.reference.combustion_shooting import _march

    p = CombustionParams()
    assert _march(p, 0.20, 1000)[0] == "flashback"
    assert _march(p, 5.0, 1000)[0] == "blowoff"
    assert _march(p, 0.05, 1000)[0] == "ok"  # too slow to ignite in-domain


def test_bracket_error_when_endpoints_match():
    # both endpoints above the eigenvalue: every march blows off
    with pytest.raises(BracketError):
        shoot_combustion(CombustionParams(), n_grid=500, bracket=(2.0, 5.0))


def test_derived_profiles_consistency(shot):
    p = CombustionParams()
    d = derived_fields(p, shot.T, shot.s_L_star)
    # mass flux rho * u is conserved along the flame at the eigenvalue
    flux = shot.rho * shot.u
    np.testing.assert_allclose(flux, p.rho_in * shot.s_L_star, rtol=1e-9)
    # density decreases monotonically downstream (hot gas expands)
    assert np.all(np.diff(shot.rho) <= 1e-12)
