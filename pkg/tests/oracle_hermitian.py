"""Independent finite-difference oracle for the Kahler moment density.

Works entirely in the complex-Hermitian formalism with high-precision
arithmetic, treating (z, w = conj z) as independent analytic variables:

    G_{jk}   = d^2 Phi / dz_j dw_k
    Ric_{jk} = - d^2 log det G / dz_j dw_k
    Scal     = G^{kj} Ric_{jk}
    Delta f  = G^{kj} d^2 f / dz_j dw_k
    density  = 1/2 Delta Scal  (+ curvature-square part, constant for the
               Fubini-Study background away from the deformation)

All derivatives are 4th-order central finite differences at 40 digits, so
nothing is shared with the jet pipeline.  Run as a script to regenerate the
frozen values used in tests/test_moment.py.
"""

import mpmath as mp

mp.mp.dps = 40

RADIUS = 0.55
POWER = 12
AMPLITUDE = mp.mpf("0.04")
CENTER = [mp.mpc("0.3", "0.15"), mp.mpc("0.2", "-0.25")]
# spectral normalisation of the bump, copied from the library scan (the
# oracle only needs the same deformation, not the same code path)
SCALE = None  # filled by main() from kahlermu at generation time


def phi(z1, w1, z2, w2, scale):
    fs = mp.log(1 + z1 * w1 + z2 * w2) / 4
    s = ((z1 - CENTER[0]) * (w1 - mp.conj(CENTER[0]))
         + (z2 - CENTER[1]) * (w2 - mp.conj(CENTER[1]))) / (RADIUS ** 2)
    u = 1 - s
    return fs + AMPLITUDE * scale * u ** POWER


_STENCIL = [(-2, mp.mpf(1) / 12), (-1, mp.mpf(-8) / 12),
            (1, mp.mpf(8) / 12), (2, mp.mpf(-1) / 12)]


def d1(f, args, slot, h):
    total = mp.mpc(0)
    for k, c in _STENCIL:
        shifted = list(args)
        shifted[slot] = shifted[slot] + k * h
        total += c * f(*shifted)
    return total / h


def d2_mixed(f, args, slot_a, slot_b, h):
    return d1(lambda *a: d1(f, list(a), slot_b, h), args, slot_a, h)


def hermitian_blocks(f, args, h):
    """[d^2 f / dz_j dw_k] for j, k in {1, 2}; slots are (z1, w1, z2, w2)."""
    zs = (0, 2)
    ws = (1, 3)
    return [[d2_mixed(f, args, zs[j], ws[k], h) for k in range(2)] for j in range(2)]


def moment_density_oracle(point, scale, h=mp.mpf("1e-6")):
    """(Scal, DeltaScal, half_DeltaScal) at a real chart point (x1,y1,x2,y2)."""
    z1 = mp.mpc(point[0], point[1])
    z2 = mp.mpc(point[2], point[3])
    args = [z1, mp.conj(z1), z2, mp.conj(z2)]
    f = lambda *a: phi(*a, scale)

    def detG(*a):
        G = hermitian_blocks(f, list(a), h)
        return G[0][0] * G[1][1] - G[0][1] * G[1][0]

    def scal(*a):
        G = hermitian_blocks(f, list(a), h)
        logdet = lambda *b: mp.log(detG(*b))
        R = hermitian_blocks(logdet, list(a), h * 4)
        det = G[0][0] * G[1][1] - G[0][1] * G[1][0]
        Ginv = [[G[1][1] / det, -G[0][1] / det], [-G[1][0] / det, G[0][0] / det]]
        return -sum(Ginv[k][j] * R[j][k] for j in range(2) for k in range(2))

    s0 = scal(*args)
    G = hermitian_blocks(f, args, h)
    det = G[0][0] * G[1][1] - G[0][1] * G[1][0]
    Ginv = [[G[1][1] / det, -G[0][1] / det], [-G[1][0] / det, G[0][0] / det]]
    hess = hermitian_blocks(scal, args, h * 16)
    delta = sum(Ginv[k][j] * hess[j][k] for j in range(2) for k in range(2))
    return s0, delta


def main():
    import numpy as np
    from kahlermu.charts import normalized_potential_bump
    from kahlermu.jets import Jet, jet_space

    b = normalized_potential_bump(2, [0.3, 0.15, 0.2, -0.25], RADIUS, power=POWER)
    space = jet_space(4, 0)
    xs = [Jet.constant(space, c) for c in (0.3, 0.15, 0.2, -0.25)]
    scale = mp.mpf(repr(float(b(xs).value())))
    print("scale =", scale)
    points = [(0.35, 0.1, 0.15, -0.2), (0.2, 0.2, 0.3, -0.3), (0.45, 0.12, 0.18, -0.22)]
    for p in points:
        s, ds = moment_density_oracle(p, scale)
        print(f"{p}: Scal = {mp.nstr(s.real, 20)}  DeltaScal = {mp.nstr(ds.real, 20)}"
              f"  (im {mp.nstr(abs(s.imag), 3)}/{mp.nstr(abs(ds.imag), 3)})")


if __name__ == "__main__":
    main()
