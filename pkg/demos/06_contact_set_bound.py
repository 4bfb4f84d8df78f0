# The contact-set lower bound on a sampled ball
# ==============================================
#
# For a function whose center value sits at least epsilon below its boundary
# values, the points carrying global lower supporting planes of slope below
# epsilon/2 sweep out, under the gradient map, the full ball of radius
# epsilon/2.  Integrating det(D^2 v) over that contact set therefore cannot
# fall below (unit-ball volume / 2^m) * epsilon^m.  For a radial quadratic
# the bound is an identity, which makes it a sharp test of the quadrature.

import numpy as np

import conesolve as cs

grid = cs.BallGrid(2, 64)

quad = cs.BallFunction.from_callable(grid, lambda x, y: 0.4 * (x**2 + y**2))
rep = cs.abp_check(quad, epsilon=0.4)
derived = 0.04 * np.pi
print("radial quadratic 0.4|x|^2, epsilon = 0.4:")
print(f"  contact fraction of the ball: {rep.contact_volume_fraction:.4f} "
      f"(exact 1/16 = {1 / 16:.4f})")
print(f"  integral of det(D^2 v): {rep.integral_det:.6f}")
print(f"  closed form 0.04*pi:    {derived:.6f} "
      f"(off by {abs(rep.integral_det - derived) / derived:.2%})")
print(f"  lower bound c0*eps^2:   {rep.lower_bound:.6f}  -> passed: {rep.passed}")

print()
print("random wells (center, curvature, ripple all randomized):")
rng = np.random.default_rng(3)
done = 0
while done < 8:
    a = rng.uniform(0.5, 1.5)
    b = rng.uniform(-0.2, 0.2, 2)
    amp = rng.uniform(0.0, 0.05)

    def fn(x, y, a=a, b=b, amp=amp):
        return a * ((x - b[0])**2 + (y - b[1])**2) + amp * np.sin(np.pi * x)

    v = cs.BallFunction.from_callable(grid, fn)
    room = float(v.boundary_values.min() - v.center_value())
    if room <= 0.1:
        continue
    eps = min(0.45, 0.9 * room)
    r = cs.abp_check(v, eps)
    print(f"  a={a:.2f} center=({b[0]:+.2f},{b[1]:+.2f}) eps={eps:.3f}: "
          f"integral/bound = {r.integral_det / r.lower_bound:.4f} "
          f"passed={r.passed}")
    done += 1
