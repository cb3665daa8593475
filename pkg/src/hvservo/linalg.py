"""Dense linear algebra and rotation helpers shared by the controllers."""

import numpy as np

# Relative singular-value cutoff: values below SV_CUTOFF * sigma_max are zeroed.
SV_CUTOFF = 1e-10


def pseudo_inverse(m):
    """Moore-Penrose pseudo-inverse via SVD with a relative cutoff."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite entries")
    return np.linalg.pinv(m, rcond=SV_CUTOFF)


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def hat(w):
    """Skew-symmetric matrix of a 3-vector."""
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m):
    """Inverse of hat for skew-symmetric m."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rotation_exp(w):
    """Rodrigues formula: rotation matrix for an axis-angle 3-vector."""
    w = np.asarray(w, dtype=float)
    t = float(np.linalg.norm(w))
    m = hat(w)
    if t < 1e-8:
        return np.eye(3) + m + 0.5 * (m @ m)
    return np.eye(3) + (np.sin(t) / t) * m + ((1.0 - np.cos(t)) / t**2) * (m @ m)


def rotation_log(r):
    """Axis-angle 3-vector of a rotation matrix, angle in [0, pi].

    At angle pi the axis sign is ambiguous; a consistent one is chosen.
    """
    r = np.asarray(r, dtype=float)
    c = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
    w = vee(r - r.T) / 2.0  # sin(theta) * axis
    s = float(np.linalg.norm(w))
    theta = float(np.arctan2(s, c))
    if s > 1e-7:
        return w * (theta / s)
    if c > 0.0:
        # theta ~ 0: w already equals theta*axis to O(theta^3)
        return w * (1.0 + theta * theta / 6.0)
    # theta ~ pi: recover the axis from the diagonal of (r + I)/2
    d = np.clip((np.diag(r) + 1.0) / 2.0, 0.0, None)
    k = int(np.argmax(d))
    axis = np.empty(3)
    axis[k] = np.sqrt(d[k])
    for j in range(3):
        if j != k:
            axis[j] = (r[k, j] + r[j, k]) / (4.0 * axis[k])
    axis /= np.linalg.norm(axis)
    return axis * theta


def is_rotation(r, tol=1e-10):
    """True when r is orthonormal with determinant +1 within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.isfinite(r).all():
        return False
    return (
        np.abs(r.T @ r - np.eye(3)).max() <= tol
        and abs(np.linalg.det(r) - 1.0) <= tol
    )
