"""SO(3) and so(3) primitives.

All functions broadcast over leading axes: a tangent vector has shape
``(..., 3)`` and a rotation has shape ``(..., 3, 3)``.
"""

from __future__ import annotations

import numpy as np

from rotsync.exceptions import DegenerateProjectionError

_SMALL_ANGLE = 1e-4
_NEAR_PI = 1e-6
# below this |sin(theta)| the skew part no longer carries a usable axis sign
_SIGN_EPS = 5e-10


def hat(omega):
    """Map a 3-vector to its cross-product (skew-symmetric) matrix."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape[:-1] + (3, 3))
    w1, w2, w3 = omega[..., 0], omega[..., 1], omega[..., 2]
    out[..., 0, 1] = -w3
    out[..., 0, 2] = w2
    out[..., 1, 0] = w3
    out[..., 1, 2] = -w1
    out[..., 2, 0] = -w2
    out[..., 2, 1] = w1
    return out


def vee(omega_hat):
    """Inverse of :func:`hat`; reads the three independent entries."""
    m = np.asarray(omega_hat, dtype=float)
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


def exp_map(omega):
    """Rodrigues' formula, with a Taylor expansion for small angles.

    Args:
        omega: tangent vector(s), shape ``(..., 3)``.

    Returns:
        Rotation matrices of shape ``(..., 3, 3)``.
    """
    omega = np.asarray(omega, dtype=float)
    theta = np.linalg.norm(omega, axis=-1)
    small = theta < _SMALL_ANGLE
    th = np.where(small, 1.0, theta)
    th2 = theta * theta
    a = np.where(small, 1.0 - th2 / 6.0 + th2 * th2 / 120.0, np.sin(th) / th)
    b = np.where(small, 0.5 - th2 / 24.0 + th2 * th2 / 720.0, (1.0 - np.cos(th)) / (th * th))
    K = hat(omega)
    K2 = K @ K
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * K2


def rotation_angle(R):
    """Rotation angle in ``[0, pi]``.

    Uses ``atan2`` of the skew and trace parts, which stays accurate near
    both 0 and pi where ``arccos`` of the trace does not.
    """
    R = np.asarray(R, dtype=float)
    s = 0.5 * np.linalg.norm(vee(R - np.swapaxes(R, -1, -2)), axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    return np.arctan2(s, c)


def _canonical_sign(axis):
    # first component that is not (numerically) zero is made positive
    nz = np.abs(axis) > 1e-12
    first = np.argmax(nz, axis=-1)
    lead = np.take_along_axis(axis, first[..., None], axis=-1)[..., 0]
    return np.where(lead < 0, -1.0, 1.0)


def log_map(R):
    """Principal logarithm of rotation(s), returned as tangent vector(s).

    The result satisfies ``norm(omega) <= pi``. Near ``theta = 0`` the factor
    ``theta / (2 sin theta)`` is replaced by its series. Within ``1e-6`` of
    pi the axis is read off the symmetric part; its sign follows the skew
    part when that is still informative, otherwise the first nonzero axis
    component is made positive.
    """
    R = np.asarray(R, dtype=float)
    batch = R.shape[:-2]
    R = R.reshape((-1, 3, 3))
    theta = rotation_angle(R)
    skew = vee(R - np.swapaxes(R, -1, -2))

    out = np.empty((R.shape[0], 3))
    small = theta < _SMALL_ANGLE
    near_pi = theta > np.pi - _NEAR_PI
    mid = ~(small | near_pi)

    if np.any(small):
        t2 = theta[small] ** 2
        out[small] = (0.5 + t2 / 12.0)[:, None] * skew[small]
    if np.any(mid):
        t = theta[mid]
        out[mid] = (t / (2.0 * np.sin(t)))[:, None] * skew[mid]
    if np.any(near_pi):
        Rp = R[near_pi]
        t = theta[near_pi]
        c = np.cos(t)
        sym = 0.5 * (Rp + np.swapaxes(Rp, -1, -2))
        # sym = c I + (1 - c) a a^T
        aat = (sym - c[:, None, None] * np.eye(3)) / (1.0 - c)[:, None, None]
        col = np.argmax(np.diagonal(aat, axis1=-2, axis2=-1), axis=-1)
        axis = np.take_along_axis(aat, col[:, None, None], axis=-1)[..., 0]
        axis /= np.linalg.norm(axis, axis=-1, keepdims=True)
        proj = np.einsum("ij,ij->i", axis, skew[near_pi])
        sign = np.where(np.abs(proj) > _SIGN_EPS, np.sign(proj), _canonical_sign(axis))
        out[near_pi] = (sign * t)[:, None] * axis
    return out.reshape(batch + (3,))


def geodesic_distance(R1, R2):
    """Normalized geodesic distance ``||log(R1 R2^T)||_F / (sqrt(2) pi)``.

    Equals the rotation angle of ``R1 R2^T`` divided by pi, so it lies in
    ``[0, 1]``.
    """
    R1 = np.asarray(R1, dtype=float)
    R2 = np.asarray(R2, dtype=float)
    return rotation_angle(R1 @ np.swapaxes(R2, -1, -2)) / np.pi


def project_to_so3(A):
    """Nearest rotation in Frobenius norm, via SVD.

    Raises:
        DegenerateProjectionError: if the second singular value of some
            input is below ``1e-12``, where the projection is not unique.
    """
    A = np.asarray(A, dtype=float)
    U, S, Vt = np.linalg.svd(A)
    if np.any(S[..., 1] < 1e-12):
        raise DegenerateProjectionError("matrix has rank < 2; projection onto SO(3) is ambiguous")
    d = np.sign(np.linalg.det(U @ Vt))
    d = np.where(d == 0, 1.0, d)
    U = U.copy()
    U[..., :, 2] *= d[..., None]
    return U @ Vt


def quat_to_matrix(q):
    """Unit quaternion ``(w, x, y, z)`` to rotation matrix."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1 - 2 * (y * y + z * z)
    out[..., 0, 1] = 2 * (x * y - w * z)
    out[..., 0, 2] = 2 * (x * z + w * y)
    out[..., 1, 0] = 2 * (x * y + w * z)
    out[..., 1, 1] = 1 - 2 * (x * x + z * z)
    out[..., 1, 2] = 2 * (y * z - w * x)
    out[..., 2, 0] = 2 * (x * z - w * y)
    out[..., 2, 1] = 2 * (y * z + w * x)
    out[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def sample_haar(rng, size=None):
    """Draw Haar-uniform rotation(s) from normalized Gaussian quaternions.

    Args:
        rng: a ``numpy.random.Generator``.
        size: ``None`` for a single ``(3, 3)`` rotation, or an int / shape
            for a batch.
    """
    shape = () if size is None else tuple(np.atleast_1d(size))
    q = rng.standard_normal(shape + (4,))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    return quat_to_matrix(q)


def is_rotation(R, tol=1e-9):
    """True where ``R`` is orthonormal with determinant +1 within ``tol``."""
    R = np.asarray(R, dtype=float)
    err = np.linalg.norm(np.swapaxes(R, -1, -2) @ R - np.eye(3), axis=(-2, -1))
    return (err <= tol) & (np.abs(np.linalg.det(R) - 1.0) <= tol)
