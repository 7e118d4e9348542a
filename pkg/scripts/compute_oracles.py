"""Regenerate the frozen reference constants used in the test suite.

Everything here is computed with mpmath at 30 digits, independently of
the package code: the kernel by direct quadrature of its integral
representation (cross-checked against m r K_1(m r)), layer and Green
values by integrating that closed form, the box integral by nested
quadrature, and the weighted ball mass from the polar closed form.

Run from the repository root:

    python scripts/compute_oracles.py
"""

from mpmath import besselk, exp, inf, mp, mpf, pi, quad

mp.dps = 30


def kernel_direct(r, m):
    """(1/2) int_0^inf exp(-m^2 r^2 / (2 s) - s / 2) ds."""
    r, m = mpf(r), mpf(m)
    if r == 0:
        return mpf(1)
    a = (m * r) ** 2 / 2
    return quad(lambda s: exp(-a / s - s / 2) / 2, [0, m * r, inf])


def kernel_bessel(r, m):
    z = mpf(r) * mpf(m)
    return z * besselk(1, z)


def layer_cov(r, m, c_lo, c_hi):
    """int_{c_lo}^{c_hi} k(s r) / s ds."""
    return quad(lambda s: kernel_bessel(s * mpf(r), m) / s, [c_lo, c_hi])


def green(r, m, upper):
    return quad(lambda s: kernel_bessel(s * mpf(r), m) / s, [1, upper])


def singular_box(delta, half):
    """int over [-half, half]^2 of |y|^-delta dy, by symmetry."""
    d, h = mpf(delta), mpf(half)
    inner = lambda x: quad(lambda y: (x * x + y * y) ** (-d / 2), [0, h])
    return 4 * quad(inner, [0, h])


def weighted_ball(center_r, radius):
    """int over B(c, R) of |x|^2 dx = pi R^2 (|c|^2 + R^2 / 2)."""
    c, R = mpf(center_r), mpf(radius)
    return pi * R ** 2 * (c ** 2 + R ** 2 / 2)


def show(label, value, target_file):
    print(f"{label} = {mp.nstr(value, 20)}    [{target_file}]")


def main():
    # the quadrature and Bessel routes must agree before the closed
    # form is trusted for the derived integrals
    worst = mpf(0)
    for r, m in [(0.5, 1.0), (1.0, 1.0), (10.0, 2.0), (0.1, 1.0)]:
        worst = max(worst, abs(kernel_direct(r, m) - kernel_bessel(r, m)))
    print(f"# kernel quadrature vs Bessel closed form: max diff {mp.nstr(worst, 3)}")

    show("KM_RHALF_M1", kernel_direct(0.5, 1.0), "tests/test_covariance.py")
    show("KM_R1_M1", kernel_direct(1.0, 1.0), "tests/test_covariance.py")
    show("KM_R10_M2", kernel_direct(10.0, 2.0), "tests/test_covariance.py")
    show("LAYER2_RHALF_M1", layer_cov(0.5, 1.0, 1, 2),
         "tests/test_covariance.py")
    show("GREEN_R01_M1_U1E4", green(0.1, 1.0, 10 ** 4),
         "tests/test_covariance.py")
    show("GREEN_R5_M2_U1E4", green(5.0, 2.0, 10 ** 4),
         "tests/test_covariance.py")
    show("SINGULAR_BOX_INTEGRAL", singular_box(0.5, 0.5),
         "tests/test_potential.py")
    show("WEIGHTED_BALL_MASS", weighted_ball(1.0, 0.5),
         "tests/test_chaos.py")


if __name__ == "__main__":
    main()
