import jax.numpy as jnp
import numpy as np
import pytest

from irrpinn.autodiff import DerivativeBundle
from irrpinn.problems import build_problem
from irrpinn.problems.combustion import (
    CombustionParams,
    combustion_residual_and_derived,
    derived_fields,
    make_domain as make_comb_domain,
    residual_fn as comb_residual_fn,
)
from irrpinn.problems.corrosion import (
    CorrosionParams,
    h_interp,
    h_prime,
    g_prime,
    initial_fields,
    make_domain as make_corr_domain,
    residual_fns as corr_residual_fns,
)
from irrpinn.problems.fisher import FisherParams, make_domain as make_fisher_domain, residual_fn
from irrpinn.problems.fracture import (
    FractureParams,
    crack_profile,
    elastic_slope_analytic,
    u_top,
)
from irrpinn.problems.ice import IceParams, make_domain as make_ice_domain
from irrpinn.problems.ice import residual_fn as ice_residual_fn


def const_bundle(values, n_slots, n=4):
    """Bundle for a constant field: all derivatives zero."""
    values = np.atleast_1d(values)
    u = np.tile(values, (n, 1))
    z = np.zeros((n, len(values), n_slots))
    return DerivativeBundle(u=jnp.asarray(u), du=jnp.asarray(z), d2u=jnp.asarray(z))


# --- traveling wave ----------------------------------------------------------


def test_fisher_equilibria():
    params = FisherParams()
    domain = make_fisher_domain(params)
    fn = residual_fn(params, domain)
    pts = jnp.zeros((4, 2))
    for value in (0.0, 1.0):
        res = fn({"main": const_bundle(value, 2)}, pts, {})
        np.testing.assert_allclose(np.asarray(res), 0.0, atol=1e-12)


def test_fisher_chain_rule_against_manufactured():
    # u(x, t) = sin(k x) * exp(-a t) in physical units; residual known exactly
    params = FisherParams()
    domain = make_fisher_domain(params)
    fn = residual_fn(params, domain)
    k, a = 0.3, 0.2
    rng = np.random.default_rng(0)
    pts_phys = rng.uniform([-20, 0], [20, 20], size=(16, 2))
    x, t = pts_phys[:, 0], pts_phys[:, 1]
    u = np.sin(k * x) * np.exp(-a * t)
    u_t = -a * u
    u_xx = -(k**2) * u
    expected = u_t - params.D * u_xx - params.r * u * (1 - params.alpha * u)

    pts_norm = domain.normalize(pts_phys)
    sf = domain.scale_factors()
    # bundle stores derivatives w.r.t. normalized coords
    du = np.stack([k * np.cos(k * x) * np.exp(-a * t) / sf[0], u_t / sf[1]], axis=-1)
    d2u = np.stack([u_xx / sf[0] ** 2, a**2 * u / sf[1] ** 2], axis=-1)
    bundle = DerivativeBundle(
        u=jnp.asarray(u[:, None]), du=jnp.asarray(du[:, None, :]), d2u=jnp.asarray(d2u[:, None, :])
    )
    res = fn({"main": bundle}, jnp.asarray(pts_norm), {})
    np.testing.assert_allclose(np.asarray(res), expected, rtol=1e-10, atol=1e-10)


def test_fisher_residual_small_on_fd_reference():
    # interpolated reference solution should nearly solve the PDE
    from irrpinn.reference.fisher_fd import fd_fisher

    sol = fd_fisher(nx=2001, dt=0.005, store_every=4)
    x = sol.axis("x")
    t = sol.axis("t")
    u = sol.fields["u"]
    # centered differences on interior nodes at a mid-time index
    it = len(t) // 2
    dt = t[1] - t[0]
    dx = x[1] - x[0]
    u_t = (u[it + 1, 1:-1] - u[it - 1, 1:-1]) / (2 * dt)
    u_xx = (u[it, 2:] - 2 * u[it, 1:-1] + u[it, :-2]) / dx**2
    params = FisherParams()
    res = u_t - params.D * u_xx - params.r * u[it, 1:-1] * (1 - u[it, 1:-1])
    # truncation estimate O(dt + dx^2): backward Euler error dominates
    assert np.sqrt(np.mean(res**2)) < 0.05


# --- combustion --------------------------------------------------------------


def test_combustion_derived_at_inlet():
    p = CombustionParams()
    d = derived_fields(p, np.asarray(p.T_in), 0.4)
    assert d["Y_F"] == pytest.approx(p.Y_F_in)
    # u equals s_L at the inlet: the smaller root of the quadratic
    c3 = 0.4 + p.R_g * p.T_in / 0.4
    u_expected = (c3 - np.sqrt(c3**2 - 4 * p.R_g * p.T_in)) / 2
    assert d["u"] == pytest.approx(u_expected, rel=1e-12)
    assert d["u"] == pytest.approx(0.4, rel=1e-6)


def test_combustion_rho_in_ideal_gas():
    p = CombustionParams()
    assert p.rho_in == pytest.approx(101325 * 0.02897 / (8.314 * 298), rel=1e-12)
    assert p.rho_in == pytest.approx(1.1846, rel=1e-3)


def test_combustion_burnt_plateau_residual_zero():
    # dT/dx = 0, d2T/dx2 = 0, Y_F = 0 -> omega = 0 -> residual = 0
    p = CombustionParams()
    domain = make_comb_domain(p)
    fn = comb_residual_fn(p, domain)
    that_burnt = 1.0  # normalized temperature at complete burn
    bundle = const_bundle(that_burnt, 1)
    res = fn({"main": bundle}, jnp.zeros((4, 1)), {"s_L": jnp.asarray(0.3)})
    np.testing.assert_allclose(np.asarray(res), 0.0, atol=1e-12)


def test_combustion_public_op_and_discriminant():
    from irrpinn.errors import DiscriminantError

    p = CombustionParams()
    res, derived = combustion_residual_and_derived(
        p, T=350.0, dT_dx=1e5, d2T_dx2=1e8, s_L=0.3
    )
    assert np.isfinite(res)
    assert derived["Y_F"] < p.Y_F_in
    with pytest.raises(DiscriminantError):
        # huge temperature at tiny s_L makes the quadratic complex
        combustion_residual_and_derived(p, T=1.0e9, dT_dx=0.0, d2T_dx2=0.0, s_L=5.0)


# --- ice ----------------------------------------------------------------------


def test_ice_equilibrium_and_melted_states():
    p = IceParams()
    domain = make_ice_domain(p)
    fn = ice_residual_fn(p, domain)
    pts = jnp.zeros((4, 4))
    res_solid = fn({"main": const_bundle(1.0, 4)}, pts, {})
    np.testing.assert_allclose(np.asarray(res_solid), 0.0, atol=1e-12)
    # phi = 0: F'(0) = 0, sqrt(2F(0)) = 1/sqrt(2) -> residual = lambda/(sqrt2 ell)
    res_mid = fn({"main": const_bundle(0.0, 4)}, pts, {})
    np.testing.assert_allclose(
        np.asarray(res_mid), p.lambda_melt / (np.sqrt(2) * p.ell), rtol=1e-12
    )


def test_ice_initial_profile_center_value():
    p = IceParams()
    from irrpinn.problems.ice import initial_profile

    # tanh(35 / (sqrt2 * 2.25)) at the sphere center
    assert initial_profile(p, 0.0) == pytest.approx(1.0, abs=1e-9)


def test_ice_analytic_radius_values():
    from irrpinn.reference.ice_analytic import analytic_ice, melting_radius

    p = IceParams()
    assert melting_radius(p, 0.0) == 35.0
    assert melting_radius(p, 2.0) == 25.0
    r, phi = analytic_ice(p, 2.0, rho=np.array([25.0]))
    assert phi[0] == pytest.approx(0.0, abs=1e-14)


# --- corrosion -----------------------------------------------------------------


def test_corrosion_stable_states():
    p = CorrosionParams()
    domain = make_corr_domain(p)
    ch_fn, ac_fn = corr_residual_fns(p, domain)
    pts = jnp.zeros((4, 3))
    for c, phi in [(p.c_Le, 0.0), (p.c_Se, 1.0)]:
        ctx = {"main": const_bundle([c, phi], 3)}
        np.testing.assert_allclose(np.asarray(ch_fn(ctx, pts, {})), 0.0, atol=1e-12)
        np.testing.assert_allclose(np.asarray(ac_fn(ctx, pts, {})), 0.0, atol=1e-12)


def test_corrosion_interpolants():
    assert h_interp(0.0) == 0.0 and h_interp(1.0) == 1.0
    assert h_prime(0.0) == 0.0 and h_prime(1.0) == 0.0
    assert g_prime(0.0) == 0.0 and g_prime(1.0) == 0.0
    phi = np.linspace(0, 1, 11)
    h_fd = (h_interp(phi + 1e-6) - h_interp(phi - 1e-6)) / 2e-6
    np.testing.assert_allclose(h_prime(phi), h_fd, atol=1e-6)


def test_corrosion_initial_fields_geometry():
    p = CorrosionParams()
    c0, phi0 = initial_fields(p, np.array([0.0, 0.0, 40.0]), np.array([0.0, 30.0, 0.0]))
    assert phi0[0] < 0.1  # pit center is electrolyte
    assert phi0[1] > 0.99 and c0[1] > 0.99  # deep metal
    assert phi0[2] > 0.99


# --- fracture -------------------------------------------------------------------


def test_fracture_lame_consistency():
    p = FractureParams()
    lam = p.E * p.nu / ((1 + p.nu) * (1 - 2 * p.nu))
    mu = p.E / (2 * (1 + p.nu))
    assert abs(lam - p.lame_lambda) / lam < 1e-3
    assert abs(mu - p.mu) / mu < 1e-3
    with pytest.raises(ValueError):
        FractureParams(lame_lambda=1.0)


def test_fracture_load_protocol_endpoint():
    p = FractureParams()
    assert u_top(p, 0.0) == 0.0
    assert u_top(p, 1.0) == pytest.approx(p.u_r, rel=1e-14)


def test_fracture_crack_profile():
    p = FractureParams()
    assert crack_profile(p, -0.25, 0.0) == pytest.approx(1.0)
    assert crack_profile(p, 0.25, 0.0) == 0.0
    assert crack_profile(p, -0.25, 5 * p.ell) == pytest.approx(np.exp(-5.0))


def test_fracture_zero_state_residuals():
    # u = 0, phi = 0: equilibrium residuals 0, r_tilde = 0, KKT = 0
    import jax

    prob = build_problem("fracture")
    eq_term = [t for t in prob.terms if t.name == "g_eq"][0]
    kkt_term = [t for t in prob.terms if t.name == "g_kkt"][0]
    n = 5
    zeros_u = DerivativeBundle(
        u=jnp.zeros((n, 2)), du=jnp.zeros((n, 2, 4)), d2u=jnp.zeros((n, 2, 4))
    )
    zeros_phi = DerivativeBundle(
        u=jnp.zeros((n, 1)), du=jnp.zeros((n, 1, 3)), d2u=jnp.zeros((n, 1, 3))
    )
    ctx = {"u": zeros_u, "phi": zeros_phi}
    pts = jnp.zeros((n, 3))
    np.testing.assert_allclose(np.asarray(eq_term.fn(ctx, pts, {})), 0.0)
    np.testing.assert_allclose(np.asarray(kkt_term.fn(ctx, pts, {})), 0.0)


def test_fracture_uniform_strain_equilibrium_and_driving_force():
    # uniform eps_yy = e, phi = 0: divergence of a constant stress is zero
    # and r_tilde = -2 (0.5 lam + mu) e^2 * ell/Gc at phi = 0
    prob = build_problem("fracture")
    p = prob.params
    eq_term = [t for t in prob.terms if t.name == "g_eq"][0]
    kkt_term = [t for t in prob.terms if t.name == "g_kkt"][0]
    s = 2.0 / p.H
    e = 0.01
    n = 3
    du_u = np.zeros((n, 2, 4))
    du_u[:, 1, 1] = e / s  # d(u_y)/dY in normalized coords
    bu = DerivativeBundle(u=jnp.zeros((n, 2)), du=jnp.asarray(du_u), d2u=jnp.zeros((n, 2, 4)))
    bphi = DerivativeBundle(u=jnp.zeros((n, 1)), du=jnp.zeros((n, 1, 3)), d2u=jnp.zeros((n, 1, 3)))
    ctx = {"u": bu, "phi": bphi}
    pts = jnp.zeros((n, 3))
    np.testing.assert_allclose(np.asarray(eq_term.fn(ctx, pts, {})), 0.0, atol=1e-15)

    psi0 = (0.5 * p.lame_lambda + p.mu) * e**2
    expected_r = -2.0 * psi0 * p.ell / p.G_c  # g'(0) = -2, no gradient terms
    kkt = np.asarray(kkt_term.fn(ctx, pts, {}))
    # phi = 0 and dphi/dt = 0: stationary branch penalizes only negative force
    np.testing.assert_allclose(kkt, -expected_r, rtol=1e-12)


def test_fracture_elastic_slope_value():
    p = FractureParams()
    assert elastic_slope_analytic(p) == pytest.approx(p.E / (1 - p.nu**2))


# --- builder -------------------------------------------------------------------


def test_build_problem_registry():
    for name in ("traveling_wave", "combustion", "ice", "corrosion", "fracture"):
        prob = build_problem(name)
        assert prob.name == name
        assert prob.training.epochs > 0
    with pytest.raises(KeyError):
        build_problem("nope")


def test_build_problem_parameter_spot_checks():
    assert build_problem("traveling_wave").params.D == 1.0
    ice = build_problem("ice")
    from irrpinn.reference.ice_analytic import melting_radius

    assert melting_radius(ice.params, 2.0) == 25.0
    assert build_problem("fracture").params.G_c == 2.7


def test_fracture_force_extraction_uniform_state():
    # with the raw displacement network forced to zero, the ansatz gives a
    # laterally-clamped uniform strain eps_yy = u_top(t)/H and phi = 0
    # (zeroed phi head pre-sigmoid gives 0.5 -> drive weights to -inf);
    # easier: compare against the same g(phi) factor evaluated on the
    # actual phi field, using a fresh (tiny) phi net trained nowhere.
    import jax.numpy as jnp
    from irrpinn.networks import build_network
    from irrpinn.problems.fracture import reaction_force, u_top

    prob = build_problem("fracture")
    p = prob.params
    params = {
        "net:u": jnp.zeros(build_network(prob.nets["u"]).n_params),
        "net:phi": build_network(prob.nets["phi"]).init_params(0),
    }
    # drive the phi head's output bias strongly negative: sigmoid -> ~0
    net_phi = build_network(prob.nets["phi"])
    _, _, a, b = [e for e in net_phi.layout.entries if e[0] == "b_out"][0]
    params["net:phi"] = params["net:phi"].at[a:b].set(-40.0)

    times = np.array([0.2, 0.5, 1.0])
    F = reaction_force(prob, params, times)
    expected = (p.lame_lambda + 2 * p.mu) * u_top(p, times) / p.H * p.H
    np.testing.assert_allclose(F, expected, rtol=1e-9)


def test_fracture_force_linear_in_displacement():
    # doubling the prescribed displacement doubles the uniform-state force
    import jax.numpy as jnp
    from irrpinn.networks import build_network
    from irrpinn.problems.fracture import reaction_force

    prob = build_problem("fracture")
    net_phi = build_network(prob.nets["phi"])
    params = {
        "net:u": jnp.zeros(build_network(prob.nets["u"]).n_params),
        "net:phi": net_phi.init_params(0),
    }
    _, _, a, b = [e for e in net_phi.layout.entries if e[0] == "b_out"][0]
    params["net:phi"] = params["net:phi"].at[a:b].set(-40.0)
    F = reaction_force(prob, params, np.array([0.1, 0.2]))
    from irrpinn.problems.fracture import u_top

    p = prob.params
    ratio = u_top(p, 0.2) / u_top(p, 0.1)
    assert F[1] / F[0] == pytest.approx(ratio, rel=1e-6)
