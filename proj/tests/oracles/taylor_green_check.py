"""Independent check that the 2D Taylor-Green vortex solves the 3D
incompressible Navier-Stokes momentum and continuity equations, and that the
derived vorticity relations hold on it. Run with python3; prints residuals."""
import sympy as sp

x, y, z, t, nu = sp.symbols('x y z t nu')
F = sp.exp(-2 * nu * t)
ux = sp.sin(x) * sp.cos(y) * F
uy = -sp.cos(x) * sp.sin(y) * F
uz = sp.Integer(0)
P = (sp.cos(2 * x) + sp.cos(2 * y)) / 4 * F**2

def lap(f):
    return sp.diff(f, x, 2) + sp.diff(f, y, 2) + sp.diff(f, z, 2)

def adv(f):
    return ux * sp.diff(f, x) + uy * sp.diff(f, y) + uz * sp.diff(f, z)

mom = [sp.diff(u, t) + adv(u) + sp.diff(P, c) - nu * lap(u)
       for u, c in ((ux, x), (uy, y), (uz, z))]
cont = sp.diff(ux, x) + sp.diff(uy, y) + sp.diff(uz, z)
for r in mom + [cont]:
    print('base residual:', sp.simplify(r))

wz = sp.diff(uy, x) - sp.diff(ux, y)
print('vorticity:', sp.simplify(wz))
beta = sp.diff(wz, x) / sp.diff(wz, y)
alpha = (sp.diff(wz, t) - nu * lap(wz) - sp.diff(uz, z) * wz + uz * sp.diff(wz, z)
         + sp.diff(uz, x) * sp.diff(uy, z) - sp.diff(uz, y) * sp.diff(ux, z)) / sp.diff(wz, y)
print('uy closure residual:', sp.simplify(uy + beta * ux + alpha))
den = 1 + beta**2
A = (beta * sp.diff(beta, y) + sp.diff(beta, x)) / den
B = (sp.diff(alpha, x) + beta * sp.diff(alpha, y) + wz - beta * sp.diff(uz, z)) / den
C = (beta * sp.diff(beta, x) - sp.diff(beta, y)) / den
D = (beta * sp.diff(alpha, x) - sp.diff(alpha, y) + beta * wz + sp.diff(uz, z)) / den
print('ux_y relation:', sp.simplify(sp.diff(ux, y) + A * ux + B))
print('ux_x relation:', sp.simplify(sp.diff(ux, x) + C * ux + D))
uxf = (sp.diff(B, x) - sp.diff(D, y) + C * B - A * D) / (sp.diff(C, y) - sp.diff(A, x))
pt = {x: 0.7, y: 1.9, t: 0.3, nu: 0.01}
print('closed-form ux at sample point:', sp.N(uxf.subs(pt)), 'exact', sp.N(ux.subs(pt)))
