"""Independent reference values computed with mpmath (extended precision)."""

import mpmath as mp


def ml_series(z, a, b=1.0):
    """E_{a,b}(z) by its power series in extended precision.

    The working precision grows with |z|^(1/a) so that the alternating series
    keeps ~20 significant digits after cancellation.
    """
    z = mp.mpf(z)
    a = mp.mpf(a)
    b = mp.mpf(b)
    with mp.workdps(30 + int(abs(float(z)) ** (1.0 / float(a)) * 0.45)):
        total = mp.mpf(0)
        k = 0
        while True:
            term = z ** k * mp.rgamma(a * k + b)
            total += term
            if k > 10 and abs(term) < mp.mpf(10) ** (-25) * max(abs(total), mp.mpf(10) ** -300):
                break
            k += 1
        return float(total)


def mainardi_density(alpha, t, x):
    """1D subdiffusion kernel 0.5 t^(-alpha/2) M_{alpha/2}(|x| t^(-alpha/2)) via the Wright series."""
    with mp.workdps(40):
        nu = mp.mpf(alpha) / 2
        y = mp.mpf(abs(x)) * mp.mpf(t) ** (-nu)
        total = mp.mpf(0)
        for k in range(400):
            total += (-y) ** k * mp.rgamma(1 - nu - nu * k) / mp.factorial(k)
        return float(0.5 * mp.mpf(t) ** (-nu) * total)


def rl_integral_quad(func, alpha, t):
    """(1/Gamma(alpha)) int_0^t (t-s)^(alpha-1) f(s) ds by tanh-sinh quadrature."""
    with mp.workdps(30):
        val = mp.quad(lambda s: (t - s) ** (alpha - 1) * func(s), [0, t])
        return float(val / mp.gamma(alpha))
