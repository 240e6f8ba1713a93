"""Acceptance battery: one test per shipped guarantee, one verdict line each.

Every test aggregates its sub-checks, prints a single
``[criterion NN] PASS|FAIL label: detail`` line (run with -s or -rA to see
the passing lines), and asserts the contract tolerance.  Tolerances here
are the promised bounds, not the remeasured slack; per-operation margins
live in the module suites.

Random probes respect the discretization contract: smooth Gaussian-bump
mixtures in the chart, numerically supported well inside the truncation
radius, where the ring quadrature resolves the kernels.
"""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from conftest import (
    AMPLITUDE,
    DELTA,
    SEED,
    apply_L_general,
    random_divfree,
    random_oneform,
    random_scalar,
)
from hypflow import (
    AdmissibilityError,
    DecayConstants,
    KernelTable,
    OneForm,
    PolarGrid,
    ScalarField,
    SolverConfig,
    apply_L_semigroup_divfree,
    apply_scalar_semigroup,
    beta_function,
    covariant_gradient,
    duhamel,
    exterior_derivative,
    fit_exponential_rate,
    fixed_point_residual,
    geodesic_distance,
    kernel_h2,
    kernel_h3,
    linear_trajectory,
    lp_norm,
    make_datum,
    measure_decay,
    picard_solve,
    project,
    singular_time_integral,
    small_time_weighted_values,
    tmdcy2_branch,
    verify_dispersive,
    verify_space_time_membership,
)


def _verdict(num, label, ok, detail):
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {label}: {detail}"
    print(line)
    return line


def _gap(a, b):
    d = OneForm(a.grid, a.comp_rho - b.comp_rho, a.comp_theta - b.comp_theta)
    return lp_norm(d, 2)


def test_criterion_01_heat_kernel_laws(desk_grid, rng):
    # Mass of the 3-d kernel against an independent radial quadrature.
    h3_err = 0.0
    for t in (0.5, 1.0):
        mass, _ = quad(
            lambda r: kernel_h3(t, np.asarray([r]))[0]
            * 4.0 * np.pi * np.sinh(r) ** 2,
            0.0, 40.0, limit=200)
        h3_err = max(h3_err, abs(mass - 1.0))

    # Grid mass on the 2-d grid, two readings: quadrature mass of a
    # backend-evolved nonnegative bump, and kernel row sums at sources
    # where the angular rule resolves the kernel width.
    bump = ScalarField(desk_grid, np.exp(-desk_grid.rho_mesh ** 2))
    m0 = desk_grid.integrate(bump.values)
    grid_mass = max(
        desk_grid.integrate(apply_scalar_semigroup(bump, t).values) / m0
        for t in (0.2, 0.5, 1.0, 2.0))
    table = KernelTable.build(0.5, 2, 2.0 * desk_grid.rho_max)
    for i, r in enumerate(desk_grid.rho_nodes):
        if np.sinh(r) * desk_grid.dtheta > 0.5:
            break
        d = geodesic_distance((r, 0.0),
                              (desk_grid.rho_mesh, desk_grid.theta_mesh))
        row = float(np.sum(table(d.ravel()).reshape(d.shape)
                           * desk_grid.quad_weights))
        grid_mass = max(grid_mass, row)

    # Composition e^{0.4}e^{0.6} = e^{1.0} on kernel identities; the
    # composed kernel narrows like 1/sinh(rho) in the angle, so this
    # runs on a grid with the angle resolved out to mid radii.
    comp_grid = PolarGrid(8.0, 48, 256, 2)
    def radial(fn):
        return ScalarField(comp_grid, np.repeat(
            fn(comp_grid.rho_nodes)[:, None], comp_grid.n_theta, axis=1))
    start = radial(lambda r: kernel_h2(0.6, r))
    target = radial(lambda r: kernel_h2(1.0, r))
    evolved = apply_scalar_semigroup(start, 0.4)
    comp_err = (np.sqrt(comp_grid.integrate(
        (evolved.values - target.values) ** 2))
        / np.sqrt(comp_grid.integrate(target.values ** 2)))

    # Markov property on 20 random fields with range [0, 1].
    lo, hi = np.inf, -np.inf
    for _ in range(20):
        f = random_scalar(desk_grid, rng)
        vals = np.abs(f.values)
        vals /= vals.max()
        for t in (0.1, 1.0):
            out = apply_scalar_semigroup(ScalarField(desk_grid, vals), t)
            lo = min(lo, float(out.values.min()))
            hi = max(hi, float(out.values.max()))

    ok = (h3_err < 1e-6 and grid_mass <= 1.0 + 1e-3
          and comp_err < 1e-3 and lo >= 0.0 and hi <= 1.0 + 1e-9)
    line = _verdict(
        1, "heat-kernel laws", ok,
        f"h3 mass err {h3_err:.1e}, grid mass {grid_mass:.7f}, "
        f"composition {comp_err:.1e}, Markov range [{lo:.1e}, {hi:.6f}]")
    assert ok, line


def test_criterion_02_projection_suite(desk_grid, rng):
    idem = ann = fix = comm = 0.0
    for i in range(50):
        w = random_oneform(desk_grid, rng)
        pw = project(w)
        idem = max(idem, _gap(project(pw), pw) / lp_norm(pw, 2))
        g = exterior_derivative(random_scalar(desk_grid, rng))
        ann = max(ann, lp_norm(project(g), 2) / lp_norm(g, 2))
        u = random_divfree(desk_grid, rng)
        fix = max(fix, _gap(project(u), u) / lp_norm(u, 2))
        if i < 25:
            t = 0.2 if i % 2 == 0 else 1.0
            lhs = project(apply_L_general(w, t))
            rhs = apply_L_semigroup_divfree(project(w), t)
            comm = max(comm, _gap(lhs, rhs) / lp_norm(w, 2))
    ok = idem < 1e-4 and ann < 1e-2 and fix < 1e-5 and comm < 1e-3
    line = _verdict(
        2, "projection suite (50 fields)", ok,
        f"idempotence {idem:.1e}, annihilation {ann:.1e}, "
        f"fixes divfree {fix:.1e}, commutation {comm:.1e}")
    assert ok, line


def test_criterion_03_pointwise_domination(desk_grid, rng):
    excess = -np.inf
    for _ in range(20):
        u = random_divfree(desk_grid, rng)
        mag = ScalarField(desk_grid, u.pointwise_norm())
        for t in (0.2, 1.0):
            lhs = np.exp(t) * apply_L_semigroup_divfree(u, t).pointwise_norm()
            rhs = apply_scalar_semigroup(mag, t).values
            excess = max(excess, float(np.max(lhs - rhs)))
    ok = excess <= 1e-6
    line = _verdict(
        3, "pointwise domination (20 fields, t in {0.2, 1})", ok,
        f"worst excess {excess:.1e}")
    assert ok, line


def test_criterion_04_constant_algebra():
    # Every admissible rate on the lattice is positive.
    evaluations, worst_rate = 0, np.inf
    ps = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0)
    for n in (2, 3):
        c = DecayConstants(n)
        for delta in np.linspace(0.1, 0.9, 9):
            for fn in (c.beta, c.beta_prime):
                worst_rate = min(worst_rate, fn(delta))
                evaluations += 1
            for x in ps:
                for fn in (lambda: c.beta_dprime(x, delta),
                           lambda: c.beta_star(x, delta),
                           lambda: c.beta_dstar(x, delta)):
                    try:
                        worst_rate = min(worst_rate, fn())
                        evaluations += 1
                    except AdmissibilityError:
                        pass
        for p in ps:
            worst_rate = min(worst_rate, c.beta2(p))
            evaluations += 1
            for q in ps:
                if q < p:
                    continue
                worst_rate = min(worst_rate, c.beta1(p, q), c.beta3(p, q))
                evaluations += 2
                for dd in (0.3, 0.5, 0.7):
                    for dp in (0.6, 0.8):
                        for ds in (0.3, 0.5):
                            try:
                                worst_rate = min(
                                    worst_rate,
                                    c.beta_tilde(p, q, dd, dp, ds))
                                evaluations += 1
                            except AdmissibilityError:
                                pass

    # Beta quadrature against the Gamma closed form.
    beta_err = 0.0
    for x in (0.25, 0.5, 1.0, 1.7, 3.0, 5.5):
        for y in (0.25, 0.5, 1.0, 1.7, 3.0, 5.5):
            ref = gamma_fn(x) * gamma_fn(y) / gamma_fn(x + y)
            beta_err = max(beta_err, abs(beta_function(x, y) - ref) / ref)

    # Substitution quadrature against the singular-integral closed form.
    sing_err = 0.0
    for t in (0.25, 1.0, 4.0):
        for d in (0.2, 0.5, 0.8):
            ref = t ** (-0.5 * (1.0 - d)) * beta_function(d, 0.5 * (1.0 - d))
            sing_err = max(
                sing_err, abs(singular_time_integral(t, d) - ref) / ref)

    ok = (evaluations > 600 and worst_rate > 0.0
          and beta_err < 1e-8 and sing_err < 1e-6)
    line = _verdict(
        4, "constant algebra", ok,
        f"{evaluations} admissible rates, min {worst_rate:.4f}; "
        f"Beta-Gamma err {beta_err:.1e}, singular-integral err {sing_err:.1e}")
    assert ok, line


def test_criterion_05_picard_machinery(solver_grid, solved):
    traj, logs = solved
    chat = traj.metadata["contraction"]
    M = [rec.M_k for rec in logs]
    small = M[0] < 1.0 / (4.0 * chat)
    capped = max(M) < 1.0 / (2.0 * chat)
    residuals = [rec.residual for rec in logs]
    bound = 2.0 * chat * max(M) + 0.1
    ratios = [b / a for a, b in zip(residuals[1:-1], residuals[2:])]
    geometric = all(r <= bound for r in ratios)
    fp = fixed_point_residual(traj)

    K = {}
    for eps in (0.05, 0.1):
        tr, _ = picard_solve(make_datum(solver_grid, eps, 2), 4.0,
                             SolverConfig(n_lattice=16))
        K[eps] = max(lp_norm(duhamel(tr, t, check=False), 2)
                     for t in tr.times[1:])
    scaling = K[0.1] / K[0.05]

    ok = (small and capped and geometric and fp < 1e-6
          and 3.5 <= scaling <= 4.5)
    line = _verdict(
        5, "Picard machinery", ok,
        f"M0 {M[0]:.3f} < {1.0 / (4.0 * chat):.1f}, max Mk {max(M):.3f}, "
        f"ratio max {max(ratios):.4f} <= {bound:.4f}, "
        f"fixed-point residual {fp:.1e}, K(2e)/K(e) {scaling:.4f}")
    assert ok, line


def test_criterion_06_linear_decay_rates(datum):
    lin = linear_trajectory(datum, 5.0, n_lattice=24)
    mask = (lin.times >= 1.0) & (lin.times <= 5.0)
    rate = -fit_exponential_rate(lin.times[mask],
                                 np.asarray(lin.norms[2.0])[mask])
    reports = [verify_dispersive(datum, p, q)
               for p, q in ((2.0, 2.0), (2.0, 4.0), (2.0, 8.0))]
    stable = all(rep.verdict == "pass" for rep in reports)
    ok = rate >= 2.20 and stable
    line = _verdict(
        6, "linear decay rates", ok,
        f"fitted L2 rate {rate:.4f} >= 2.20; dispersive "
        + ", ".join(f"(2,{int(rep.parameters['q'])}) {rep.verdict}"
                    for rep in reports))
    assert ok, line


def test_criterion_07_nonlinear_decay(solved, constants, horizon):
    traj, _ = solved
    end_ratio = traj.norms[2.0][-1] / traj.norms[2.0][0]
    target = constants.beta_prime(DELTA)
    report = measure_decay(traj, 2.0, 0.0, target)
    rate = -report.measured["fitted_rate"]
    ok = (end_ratio < 0.01 and report.verdict == "pass"
          and rate >= target - 0.05)
    line = _verdict(
        7, "nonlinear decay", ok,
        f"|u({horizon:.2f})| / |a| = {end_ratio:.1e} < 0.01, "
        f"fitted rate {rate:.4f} >= {target - 0.05:.4f}")
    assert ok, line


def test_criterion_08_weighted_boundedness(solved, solved_fine, constants):
    details, ok = [], True
    for q, delta_grad in ((4.0, 0.6), (8.0, 0.85)):
        beta_q = constants.beta(2.0 / q)
        beta_g = constants.beta_dprime(q, delta_grad)
        sups, gsups = [], []
        for traj, _ in (solved, solved_fine):
            tt = traj.times[1:]
            vals = np.asarray(traj.norms[q])[1:]
            sups.append(float(np.max(
                tt ** (0.5 - 1.0 / q) * np.exp(beta_q * tt) * vals)))
            gvals = np.array([lp_norm(covariant_gradient(traj.state_at(t)), q)
                              for t in tt])
            gsups.append(float(np.max(
                tt ** (1.0 - 1.0 / q) * np.exp(beta_g * tt) * gvals)))
        stab = max(sups) / min(sups)
        gstab = max(gsups) / min(gsups)
        small = small_time_weighted_values(solved_fine[0], q, k=3)
        vanishing = bool(np.all(np.diff(small) > 0.0))
        ok = ok and all(np.isfinite(sups + gsups)) and stab < 2.0 \
            and gstab < 2.0 and vanishing
        details.append(
            f"q={q:g}: sup {sups[0]:.4f} (stab {stab:.3f}), "
            f"grad sup {gsups[0]:.4f} (stab {gstab:.3f}), "
            f"small-t {np.array2string(small, precision=4)}")
    line = _verdict(8, "weighted boundedness and small-t vanishing", ok,
                        "; ".join(details))
    assert ok, line


def test_criterion_09_space_time_membership(solved):
    traj, _ = solved
    reports = [verify_space_time_membership(traj, r, q)
               for r, q in ((4.0, 4.0), (2.0, 8.0),
                            (1.0, 2.0), (2.0, 2.0), (6.0, 2.0))]
    ok = all(rep.verdict == "pass" for rep in reports)
    line = _verdict(
        9, "space-time membership", ok,
        ", ".join(f"(r={rep.parameters['r']:g}, q={rep.parameters['q']:g}) "
                  f"{rep.verdict}" for rep in reports))
    assert ok, line


def test_criterion_10_ladder_branch_logic():
    rng = np.random.default_rng(SEED)
    passed, seen = 0, set()
    for _ in range(100):
        n = int(rng.choice([2, 3]))
        p = float(1.01 + rng.uniform(0.0, 5.0))
        q = float(p * (1.0 + rng.uniform(0.0, 7.0)))
        branch = tmdcy2_branch(n, p, q, gradient=bool(rng.integers(2)))
        seen.add(branch["branch"])
        good = (branch["branch"] in {"td3", "td4", "td5", "td6"}
                and branch["t_power"] >= 0.0)
        if branch.get("p_prime") is not None:
            pp = branch["p_prime"]
            good = good and p < pp < n and pp <= q
        passed += bool(good)
    ok = passed == 100 and seen == {"td3", "td4", "td5", "td6"}
    line = _verdict(
        10, "decay-ladder branch logic", ok,
        f"{passed}/100 probes, branches seen {sorted(seen)}")
    assert ok, line


@pytest.fixture(autouse=True)
def _always_print(capsys):
    """Re-emit the verdict line outside capture so every run shows it."""
    yield
    out = capsys.readouterr().out
    for line in out.splitlines():
        if line.startswith("[criterion"):
            with capsys.disabled():
                print(line)
