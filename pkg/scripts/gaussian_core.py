"""
Single-mode Gaussian state algebra in shot-noise units
Covariance matrices for the squeezed-vacuum port and the maps acting on them
"""
import math
from dataclasses import dataclass, replace

import numpy as np

SYMMETRY_TOL = 1e-12
PHYSICAL_TOL = 1e-9
# det(cov) round-off per unit of |a*d| + |b*c|
DET_ROUNDOFF = 64.0 * np.finfo(float).eps

# Symplectic form for one mode
OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _det(cov):
    return float(cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0])


def physical_tolerance(cov):
    """Slack on det(cov) >= 1 that absorbs round-off for strongly squeezed states"""
    cov = np.asarray(cov, dtype=float)
    scale = abs(cov[0, 0] * cov[1, 1]) + abs(cov[0, 1] * cov[1, 0])
    return max(PHYSICAL_TOL, DET_ROUNDOFF * scale)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """
    Zero-mean single-mode Gaussian state

    cov is the 2x2 quadrature covariance matrix with vacuum = identity.
    """
    cov: np.ndarray

    def __post_init__(self):
        cov = np.array(self.cov, dtype=float)
        if cov.shape != (2, 2):
            raise ValueError(f"Covariance must be 2x2, got shape {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise ValueError("Covariance has non-finite entries")
        if abs(cov[0, 1] - cov[1, 0]) > SYMMETRY_TOL:
            raise ValueError(f"Covariance not symmetric: {cov[0, 1]} vs {cov[1, 0]}")
        cov[1, 0] = cov[0, 1]
        if cov[0, 0] <= 0 or cov[1, 1] <= 0:
            raise ValueError("Covariance is not positive definite")
        det = _det(cov)
        if det < 1.0 - physical_tolerance(cov):
            raise ValueError(f"Unphysical state: det(cov) = {det:.6g} < 1")
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)

    @property
    def det(self):
        return _det(self.cov)

    @property
    def purity(self):
        return 1.0 / math.sqrt(max(self.det, 1.0))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.cov)


@dataclass(frozen=True)
class InteractionResult:
    """Output of one pass through the vapor cell"""
    r: float
    theta0: float
    n_add: float
    eta_med: float

    def __post_init__(self):
        if not (self.r >= 0):
            raise ValueError(f"Squeeze parameter must be >= 0, got {self.r}")
        if not (self.n_add >= 0):
            raise ValueError(f"Added noise must be >= 0, got {self.n_add}")
        if not (0 < self.eta_med <= 1):
            raise ValueError(f"Medium transmission must be in (0, 1], got {self.eta_med}")
        object.__setattr__(self, "theta0", float(self.theta0) % math.pi)

    def scaled(self, r_gain=1.0, n_gain=1.0):
        return replace(self, r=self.r * r_gain, n_add=self.n_add * n_gain)

    def to_dict(self):
        return {
            "r": self.r,
            "theta0_rad": self.theta0,
            "n_add": self.n_add,
            "eta_med": self.eta_med,
        }


def vacuum():
    """Shot-noise reference state"""
    return GaussianState(np.eye(2))


def rotation_matrix(phi):
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def squeeze_symplectic(r, theta0):
    """
    Symplectic matrix squeezing the quadrature at angle theta0 by e^{-r}

    Args:
        r: squeeze parameter (>= 0)
        theta0: squeezed-quadrature angle in radians

    Returns:
        np.ndarray: 2x2 symplectic matrix
    """
    R = rotation_matrix(theta0)
    return R @ np.diag([math.exp(-r), math.exp(r)]) @ R.T


def squeezed_vacuum(r, theta0=0.0):
    """
    Pure squeezed vacuum in closed form

    cov = R(theta0) diag(e^{-2r}, e^{2r}) R(theta0)^T written out entry by entry
    so the diagonal never cancels.

    Args:
        r: squeeze parameter (>= 0)
        theta0: squeezed-quadrature angle in radians

    Returns:
        GaussianState
    """
    if r < 0:
        raise ValueError(f"Squeeze parameter must be >= 0, got {r}")
    c, s = math.cos(theta0), math.sin(theta0)
    lo, hi = math.exp(-2.0 * r), math.exp(2.0 * r)
    off = (lo - hi) * c * s
    cov = np.array([[lo * c * c + hi * s * s, off], [off, lo * s * s + hi * c * c]])
    return GaussianState(cov)


def is_symplectic(S, tol=SYMMETRY_TOL):
    S = np.asarray(S, dtype=float)
    return bool(np.max(np.abs(S @ OMEGA @ S.T - OMEGA)) <= tol)


def _congruence(state, S):
    cov = S @ state.cov @ S.T
    return GaussianState(0.5 * (cov + cov.T))


def rotate(state, phi):
    return _congruence(state, rotation_matrix(phi))


def apply_squeeze(state, r, theta0=0.0):
    if r < 0:
        raise ValueError(f"Squeeze parameter must be >= 0, got {r}")
    if r == 0:
        return state
    return _congruence(state, squeeze_symplectic(r, theta0))


def apply_loss(state, eta):
    """Beam-splitter loss: mixes in vacuum with weight 1 - eta"""
    if not (0.0 <= eta <= 1.0):
        raise ValueError(f"Transmission must be in [0, 1], got {eta}")
    return GaussianState(eta * state.cov + (1.0 - eta) * np.eye(2))


def add_thermal(state, n_add):
    if n_add < 0:
        raise ValueError(f"Added thermal quanta must be >= 0, got {n_add}")
    return GaussianState(state.cov + 2.0 * n_add * np.eye(2))


def quadrature_variance(state, theta):
    u = np.array([math.cos(theta), math.sin(theta)])
    return float(u @ state.cov @ u)


def variance_db(v):
    if not (v > 0):
        raise ValueError(f"Variance must be > 0 to express in dB, got {v}")
    return 10.0 * math.log10(v)


def db_to_variance(db):
    return 10.0 ** (db / 10.0)


def remove_loss(v, eta):
    """
    Undo a beam-splitter loss on a measured variance

    Args:
        v: variance measured after the loss (shot-noise units)
        eta: transmission of the loss, 0 < eta <= 1

    Returns:
        float: variance before the loss
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"Transmission must be in (0, 1], got {eta}")
    return (v - (1.0 - eta)) / eta


def infer_squeeze_and_noise(v_min, v_max):
    """
    Squeeze parameter and added noise of a symmetric-noise squeezed state

    Solves v_min = e^{-2r} + 2n, v_max = e^{2r} + 2n.

    Args:
        v_min: squeezed-quadrature variance
        v_max: anti-squeezed-quadrature variance

    Returns:
        tuple: (r, n_add)
    """
    if not (0 < v_min <= v_max):
        raise ValueError(f"Need 0 < v_min <= v_max, got v_min={v_min}, v_max={v_max}")
    r = 0.5 * math.asinh(0.5 * (v_max - v_min))
    n_add = 0.5 * (v_min - math.exp(-2.0 * r))
    if n_add < -PHYSICAL_TOL:
        raise ValueError(f"Pair ({v_min}, {v_max}) violates the uncertainty bound")
    return r, max(n_add, 0.0)


def output_state(result):
    """Vacuum through squeezing, added noise and medium loss"""
    state = squeezed_vacuum(result.r, result.theta0)
    state = add_thermal(state, result.n_add)
    return apply_loss(state, result.eta_med)
