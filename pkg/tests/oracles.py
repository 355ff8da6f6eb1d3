"""Independent reference implementations used only by the tests.

Nothing here calls into ``ambienc``: harmonics come from associated Legendre
functions and factorials, radial functions from ``scipy.special``.
"""

import math

import numpy as np
from scipy import special


def sph_harm_explicit(n, m, theta, phi):
    """Orthonormal complex harmonic with Condon-Shortley phase, from ``lpmv``."""
    if m < 0:
        return (-1) ** (-m) * np.conj(sph_harm_explicit(n, -m, theta, phi))
    norm = math.sqrt((2 * n + 1) / (4 * math.pi) * math.factorial(n - m) / math.factorial(n + m))
    return norm * special.lpmv(m, n, np.cos(theta)) * np.exp(1j * m * np.asarray(phi))


def rigid_b(n, kr, ka):
    """Rigid-sphere modal weight, ``exp(-i w t)`` convention, arrival-direction phase."""
    j = special.spherical_jn(n, kr)
    h = j + 1j * special.spherical_yn(n, kr)
    jd = special.spherical_jn(n, ka, derivative=True)
    hd = jd + 1j * special.spherical_yn(n, ka, derivative=True)
    return 4 * np.pi * (-1j) ** n * (j - jd / hd * h)


def rigid_b_surface(n, ka):
    """Same weight at ``r = a`` via the Wronskian form ``4 pi (-i)^n i / ((ka)^2 h_n'(ka))``."""
    hd = special.spherical_jn(n, ka, derivative=True) + 1j * special.spherical_yn(n, ka, derivative=True)
    return 4 * np.pi * (-1j) ** n * 1j / (ka**2 * hd)


def steering_oracle(mic_xyz, a, src_xyz, k, order=60):
    """Pressure at each microphone for unit plane waves arriving from ``src_xyz``.

    Legendre series summed to a high fixed ``order``; shape ``(M, Q)``.
    """
    mic_xyz = np.atleast_2d(mic_xyz)
    r = np.linalg.norm(mic_xyz, axis=1)
    cosg = np.clip((mic_xyz / r[:, None]) @ np.atleast_2d(src_xyz).T, -1, 1)
    out = np.zeros(cosg.shape, dtype=complex)
    for n in range(order + 1):
        if a > 0:
            b = np.array([rigid_b(n, k * ri, k * a) for ri in r])
        else:
            b = 4 * np.pi * (-1j) ** n * special.spherical_jn(n, k * r)
        out += (2 * n + 1) / (4 * np.pi) * b[:, None] * special.eval_legendre(n, cosg)
    return out


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
