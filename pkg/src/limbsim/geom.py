"""Quaternion and rigid-body geometry helpers.

Scalar-style functions are numba-compilable and shared between the physics
kernels and plain Python callers; the vectorized helpers at the bottom are
numpy-only and used by sensing / spawning code.

Quaternions are stored (w, x, y, z) with unit norm.
"""
from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    def maybe_njit(fn):
        return njit(cache=True)(fn)

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    def maybe_njit(fn):
        return fn

    NUMBA_AVAILABLE = False


@maybe_njit
def quat_mul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]
    return out


@maybe_njit
def quat_conj(q):
    out = np.empty(4)
    out[0] = q[0]
    out[1] = -q[1]
    out[2] = -q[2]
    out[3] = -q[3]
    return out


@maybe_njit
def quat_normalize(q):
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    out = np.empty(4)
    if n == 0.0:
        out[0] = 1.0
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
        return out
    inv = 1.0 / n
    out[0] = q[0] * inv
    out[1] = q[1] * inv
    out[2] = q[2] * inv
    out[3] = q[3] * inv
    return out


@maybe_njit
def quat_rotate(q, v):
    """Rotate vector v by unit quaternion q (body -> world)."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    # t = 2 * (q_vec x v)
    tx = 2.0 * (y * v[2] - z * v[1])
    ty = 2.0 * (z * v[0] - x * v[2])
    tz = 2.0 * (x * v[1] - y * v[0])
    out = np.empty(3)
    out[0] = v[0] + w * tx + (y * tz - z * ty)
    out[1] = v[1] + w * ty + (z * tx - x * tz)
    out[2] = v[2] + w * tz + (x * ty - y * tx)
    return out


@maybe_njit
def quat_from_axis_angle(axis, angle):
    n = math.sqrt(axis[0] ** 2 + axis[1] ** 2 + axis[2] ** 2)
    out = np.empty(4)
    if n < 1e-15:
        out[0] = 1.0
        out[1] = 0.0
        out[2] = 0.0
        out[3] = 0.0
        return out
    half = 0.5 * angle
    s = math.sin(half) / n
    out[0] = math.cos(half)
    out[1] = axis[0] * s
    out[2] = axis[1] * s
    out[3] = axis[2] * s
    return out


@maybe_njit
def quat_integrate(q, omega, dt):
    """Exact exponential-map rotation update by world angular velocity omega."""
    wx, wy, wz = omega[0], omega[1], omega[2]
    mag = math.sqrt(wx * wx + wy * wy + wz * wz)
    if mag * dt < 1e-12:
        return quat_normalize(q)
    axis = np.empty(3)
    axis[0] = wx / mag
    axis[1] = wy / mag
    axis[2] = wz / mag
    dq = quat_from_axis_angle(axis, mag * dt)
    return quat_normalize(quat_mul(dq, q))


@maybe_njit
def quat_angvel(q_prev, q_new, dt):
    """World angular velocity recovering quat_integrate exactly (log map)."""
    dq = quat_mul(q_new, quat_conj(q_prev))
    w = dq[0]
    vx, vy, vz = dq[1], dq[2], dq[3]
    if w < 0.0:
        w = -w
        vx = -vx
        vy = -vy
        vz = -vz
    vn = math.sqrt(vx * vx + vy * vy + vz * vz)
    out = np.empty(3)
    if vn < 1e-15:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
        return out
    angle = 2.0 * math.atan2(vn, w)
    scale = angle / (vn * dt)
    out[0] = vx * scale
    out[1] = vy * scale
    out[2] = vz * scale
    return out


@maybe_njit
def quat_to_matrix(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    m = np.empty((3, 3))
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


@maybe_njit
def inv_inertia_world(q, inv_inertia_body):
    """World-frame inverse inertia R diag(1/I) R^T for principal body inertia."""
    r = quat_to_matrix(q)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += r[i, k] * inv_inertia_body[k] * r[j, k]
            out[i, j] = s
    return out


def capsule_inertia(mass: float, length: float, radius: float) -> np.ndarray:
    """Principal inertia of a solid capsule, axis along body z."""
    v_cyl = math.pi * radius * radius * length
    v_sph = 4.0 / 3.0 * math.pi * radius ** 3
    m_cyl = mass * v_cyl / (v_cyl + v_sph)
    m_sph = mass - m_cyl
    i_axial = 0.5 * m_cyl * radius ** 2 + 0.4 * m_sph * radius ** 2
    # hemispheres: own-COM transverse inertia plus parallel-axis offset
    d = 0.5 * length + 0.375 * radius
    i_hemi_com = (83.0 / 320.0) * radius ** 2
    i_trans = (
        m_cyl * (length ** 2 / 12.0 + radius ** 2 / 4.0)
        + m_sph * (i_hemi_com + d * d)
    )
    return np.array([i_trans, i_trans, i_axial])


def random_unit_quat(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation (Shoemake's method)."""
    u1, u2, u3 = rng.random(3)
    a = math.sqrt(1.0 - u1)
    b = math.sqrt(u1)
    return np.array(
        [
            a * math.sin(2.0 * math.pi * u2),
            a * math.cos(2.0 * math.pi * u2),
            b * math.sin(2.0 * math.pi * u3),
            b * math.cos(2.0 * math.pi * u3),
        ]
    )


def rotate_many(quats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Rotate vecs[i] by quats[i]; shapes (N,4) and (N,3) or (3,)."""
    w = quats[:, :1]
    qv = quats[:, 1:]
    if vecs.ndim == 1:
        vecs = np.broadcast_to(vecs, (quats.shape[0], 3))
    t = 2.0 * np.cross(qv, vecs)
    return vecs + w * t + np.cross(qv, t)
