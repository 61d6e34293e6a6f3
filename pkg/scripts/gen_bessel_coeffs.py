"""Regenerate the frozen Chebyshev tables used by ``specfun`` for z >= 2.

Fits g(y) = e^{+-z} sqrt(z) F(z) with y = 4/z - 1 on [-1, 1] for
F in {K0, K1, I0} using mpmath at 50 digits.  Prints a Python literal.
"""
import mpmath as mp

mp.mp.dps = 50
NPTS = 80
CUT = mp.mpf("1e-19")


def scaled(name, z):
    if name == "k0":
        return mp.exp(z) * mp.sqrt(z) * mp.besselk(0, z)
    if name == "k1":
        return mp.exp(z) * mp.sqrt(z) * mp.besselk(1, z)
    if name == "i0":
        return mp.exp(-z) * mp.sqrt(z) * mp.besseli(0, z)
    raise ValueError(name)


def g_of_y(name, y):
    # y = 1 maps to z = 2; y -> -1 maps to z -> inf (limit handled below)
    if y <= -1:
        return {"k0": mp.sqrt(mp.pi / 2), "k1": mp.sqrt(mp.pi / 2),
                "i0": 1 / mp.sqrt(2 * mp.pi)}[name]
    z = 4 / (y + 1)
    return scaled(name, z)


def cheb_coeffs(name):
    n = NPTS
    nodes = [mp.cos(mp.pi * (k + mp.mpf(1) / 2) / n) for k in range(n)]
    vals = [g_of_y(name, y) for y in nodes]
    coeffs = []
    for j in range(n):
        s = mp.fsum(vals[k] * mp.cos(mp.pi * j * (k + mp.mpf(1) / 2) / n) for k in range(n))
        coeffs.append(2 * s / n)
    coeffs[0] /= 2
    last = max(j for j, c in enumerate(coeffs) if abs(c) > CUT)
    return coeffs[: last + 1]


if __name__ == "__main__":
    for name in ("k0", "k1", "i0"):
        cs = cheb_coeffs(name)
        print(f"_CHEB_{name.upper()} = (")
        for c in cs:
            print(f"    {mp.nstr(c, 20, min_fixed=0, max_fixed=0)},")
        print(")")
