"""Independent checks of the closed-form fields used as manufactured
solutions for the catalog's vorticity/label systems and the compressible
2D system. Prints residuals (all must be 0)."""
import sympy as sp

x, y, z, t = sp.symbols('x y z t')
r2 = x**2 + y**2

# Differential rotation with angular speed r^2 (inviscid, divergence free).
ux, uy, uz = -r2 * y, r2 * x, sp.Integer(0)
w = [sp.diff(uz, y) - sp.diff(uy, z), sp.diff(ux, z) - sp.diff(uz, x), sp.diff(uy, x) - sp.diff(ux, y)]
print('vorticity', [sp.simplify(c) for c in w])
P = r2**3 / 6
u2 = ux**2 + uy**2 + uz**2
uxw = [uy * w[2] - uz * w[1], uz * w[0] - ux * w[2], ux * w[1] - uy * w[0]]
for i, c in enumerate((x, y, z)):
    print('momentum', i, sp.simplify(sp.diff([ux, uy, uz][i], t) - uxw[i] + sp.diff(P + u2 / 2, c)))
th = r2 * t
x0 = x * sp.cos(th) + y * sp.sin(th)
y0 = -x * sp.sin(th) + y * sp.cos(th)
z0 = z
for q in (x0, y0, z0):
    print('label transport', sp.simplify(sp.diff(q, t) + ux * sp.diff(q, x) + uy * sp.diff(q, y) + uz * sp.diff(q, z)))
J = sp.Matrix([[sp.diff(q, c) for c in (x, y, z)] for q in (x0, y0, z0)])
print('label jacobian det', sp.simplify(J.det()))
w0 = [0, 0, 4 * (x0**2 + y0**2)]
print('frozen vorticity', sp.simplify(w[2] - w0[2]))

# Compressible solid-body rotation with density 1 + r^2 and cyclostrophic pressure.
ux, uy = -y, x
rho = 1 + r2
P = 1 + r2 / 2 + r2**2 / 4
w = sp.diff(uy, x) - sp.diff(ux, y)
print('mom x', sp.simplify(sp.diff(ux, t) + ux * sp.diff(ux, x) + uy * sp.diff(ux, y) + sp.diff(P, x) / rho))
print('mom y', sp.simplify(sp.diff(uy, t) + ux * sp.diff(uy, x) + uy * sp.diff(uy, y) + sp.diff(P, y) / rho))
print('mass', sp.simplify(sp.diff(rho, t) + ux * sp.diff(rho, x) + uy * sp.diff(rho, y) + rho * (sp.diff(ux, x) + sp.diff(uy, y))))
print('baroclinic', sp.simplify(sp.diff(rho, y) * sp.diff(P, x) - sp.diff(rho, x) * sp.diff(P, y)))
print('omega', w)
