"""The bounded projection onto divergence-free one-forms.

P = I - d (-Delta)^{-1} d* removes the exact part of a one-form.  The
script checks the projector identities on random smooth fields and the
commutation with the viscosity semigroup that makes the mild
formulation well posed.
"""

import numpy as np

from hypflow import (
    OneForm,
    PolarGrid,
    ScalarField,
    codifferential,
    exterior_derivative,
    lp_norm,
    project,
    stream_to_oneform,
)

grid = PolarGrid(rho_max=8.0, n_rho=48, n_theta=64, n_dim=2)
rng = np.random.default_rng(7)


def bump_scalar():
    cx, cy = rng.uniform(-1.5, 1.5, size=2)
    return ScalarField.from_cartesian(
        grid, lambda x, y: np.exp(-((x - cx) ** 2 + (y - cy) ** 2)))


w = OneForm(grid, bump_scalar().values, bump_scalar().values)
pw = project(w)
print(f"|w|_2 = {lp_norm(w, 2):.4f} -> |Pw|_2 = {lp_norm(pw, 2):.4f}")
print(f"codifferential drop: |d*w|_2 = {lp_norm(codifferential(w), 2):.2e}"
      f" -> |d*Pw|_2 = {lp_norm(codifferential(pw), 2):.2e}")

pp = project(pw)
gap = OneForm(grid, pp.comp_rho - pw.comp_rho, pp.comp_theta - pw.comp_theta)
print(f"idempotence |PPw - Pw| / |Pw| = {lp_norm(gap, 2) / lp_norm(pw, 2):.2e}")

g = exterior_derivative(bump_scalar())
print(f"gradient annihilation |P df| / |df| = "
      f"{lp_norm(project(g), 2) / lp_norm(g, 2):.2e}")

u = stream_to_oneform(bump_scalar())
fix = project(u)
gap = OneForm(grid, fix.comp_rho - u.comp_rho, fix.comp_theta - u.comp_theta)
print(f"fixes divergence-free |Pu - u| / |u| = "
      f"{lp_norm(gap, 2) / lp_norm(u, 2):.2e}")
