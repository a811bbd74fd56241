"""Neural field dynamics discretized by nodal collocation.

The field alpha_i(t) = u(t, x_i) evolves by

    alpha' = -alpha + W f(alpha) + g(t)            (plain)
    alpha' = -alpha + W (q * f(alpha)) + g(t),
    q'     = (1 - q - beta q f(alpha)) / tau       (with synaptic depression)

where W_ij = w(x_i, x_j) mu_j folds the quadrature weights mu into the
connectivity kernel.  Manufactured problems with closed-form forcing are
provided for convergence testing on the periodic square and the torus.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IntegrationError
from .geometry.metrics import periodic_distance
from .geometry.surfaces import TORUS_R, TORUS_r, torus_unmap

log = logging.getLogger(__name__)

KERNEL_MATRIX_NODE_CAP = 16384


# ---------------------------------------------------------------------------
# firing rates

@dataclass(frozen=True)
class SigmoidFiring:
    """f(u) = 1 / (1 + exp(-gain (u - threshold))), strictly increasing."""

    gain: float = 5.0
    threshold: float = 0.5

    def __call__(self, u):
        return 1.0 / (1.0 + np.exp(-self.gain * (np.asarray(u, dtype=np.float64) - self.threshold)))

    def inverse(self, y):
        y = np.asarray(y, dtype=np.float64)
        if np.any(y <= 0.0) or np.any(y >= 1.0):
            raise ConfigError("sigmoid inverse needs values strictly inside (0, 1)")
        return self.threshold + np.log(y / (1.0 - y)) / self.gain


def smooth_spline_build(lo: float = 0.06, hi: float = 0.54) -> np.ndarray:
    """Degree-9 Hermite step: p(lo)=0, p(hi)=1, p'..p'''' zero at both ends.

    Returns ascending coefficients in u.  Construction: the canonical
    quintic-through-nonic smoothstep q(s) = 126 s^5 - 420 s^6 + 540 s^7
    - 315 s^8 + 70 s^9 composed with s = (u - lo)/(hi - lo).
    """
    if not lo < hi:
        raise ConfigError("spline interval needs lo < hi")
    q = np.array([0, 0, 0, 0, 0, 126, -420, 540, -315, 70], dtype=np.float64)
    width = hi - lo
    # compose with the affine map via repeated synthetic evaluation
    s = np.polynomial.Polynomial([-lo / width, 1.0 / width])
    p = np.polynomial.Polynomial(q)(s)
    coef = np.zeros(10)
    coef[: len(p.coef)] = p.coef
    return coef


@dataclass(frozen=True)
class SplineFiring:
    """C^4 polynomial ramp from 0 to 1 across [lo, hi]."""

    lo: float = 0.06
    hi: float = 0.54
    coef: tuple = None

    def __post_init__(self):
        if self.coef is None:
            object.__setattr__(self, "coef", tuple(smooth_spline_build(self.lo, self.hi)))

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        mid = np.polynomial.polynomial.polyval(u, np.asarray(self.coef))
        return np.where(u < self.lo, 0.0, np.where(u >= self.hi, 1.0, mid))


def firing_eval(firing, u):
    return firing(u)


def firing_inverse(firing, y):
    if not isinstance(firing, SigmoidFiring):
        raise ConfigError("only the sigmoid firing rate has a closed-form inverse")
    return firing.inverse(y)


# ---------------------------------------------------------------------------
# kernels

def gaussian_profile(d, sigma: float):
    """Normalized planar Gaussian of distance: exp(-d^2/(2 s^2)) / (2 pi s^2)."""
    d = np.asarray(d, dtype=np.float64)
    return np.exp(-0.5 * (d / sigma) ** 2) / (2.0 * np.pi * sigma**2)


def image_sum_gaussian(x, centers, sigma: float, period: float = 2.0 * np.pi,
                       radius: int = 2):
    """Periodic Gaussian as a truncated lattice image sum, (len(x), len(centers)).

    Exact convolution algebra (Gaussian * Gaussian stays Gaussian) makes this
    the right form for manufactured forcings; truncation error < 1e-15 for
    sigma <= 1.1 and period 2 pi at radius 2.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    shifts = np.arange(-radius, radius + 1) * period
    out = np.zeros((len(x), len(centers)))
    diff = x[:, None, :] - centers[None, :, :]
    for sx in shifts:
        for sy in shifts:
            d2 = (diff[..., 0] + sx) ** 2 + (diff[..., 1] + sy) ** 2
            out += np.exp(-0.5 * d2 / sigma**2)
    return out / (2.0 * np.pi * sigma**2)


@dataclass(frozen=True)
class KernelSpec:
    """Distance kernel w(x, y) with a pluggable metric.

    variant: "gaussian" (amplitude, sigma), "difference_of_gaussians"
    (amp_e, sigma_e, amp_i, sigma_i), or "constant" (amplitude; useful as
    a row-sum probe since the matrix rows then integrate to the domain
    measure); metric: "euclidean", "periodic" (period), "geodesic"
    (precomputed matrix), or "image_sum_periodic" (period, image radius;
    Gaussian variants only).
    """

    variant: str = "gaussian"
    sigma: float = 0.05
    amplitude: float = 1.0
    amp_e: float = 5.0
    sigma_e: float = 0.05
    amp_i: float = 5.0
    sigma_i: float = 0.1
    metric: str = "euclidean"
    period: float = 2.0 * np.pi
    image_radius: int = 2

    def __post_init__(self):
        if self.variant not in ("gaussian", "difference_of_gaussians", "constant"):
            raise ConfigError(f"unknown kernel variant {self.variant!r}")
        if self.metric not in ("euclidean", "periodic", "geodesic", "image_sum_periodic"):
            raise ConfigError(f"unknown kernel metric {self.metric!r}")
        if self.variant == "constant" and self.metric == "image_sum_periodic":
            raise ConfigError("image-sum metric needs a Gaussian kernel variant")

    def peak(self) -> float:
        """w(x, x)."""
        if self.variant == "gaussian":
            return self.amplitude / (2.0 * np.pi * self.sigma**2)
        if self.variant == "constant":
            return self.amplitude
        return (self.amp_e / (2.0 * np.pi * self.sigma_e**2)
                - self.amp_i / (2.0 * np.pi * self.sigma_i**2))

    def profile(self, d):
        if self.variant == "gaussian":
            return self.amplitude * gaussian_profile(d, self.sigma)
        if self.variant == "constant":
            return np.full_like(np.asarray(d, dtype=np.float64), self.amplitude)
        return (self.amp_e * gaussian_profile(d, self.sigma_e)
                - self.amp_i * gaussian_profile(d, self.sigma_i))

    def evaluate(self, x, y, geodesic=None):
        """Kernel values w(x_i, y_j) as an (len(x), len(y)) table."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        if self.metric == "geodesic":
            if geodesic is None:
                raise ConfigError("geodesic metric needs a precomputed distance matrix")
            return self.profile(geodesic)
        if self.metric == "image_sum_periodic":
            if self.variant == "gaussian":
                return self.amplitude * image_sum_gaussian(
                    x, y, self.sigma, self.period, self.image_radius
                )
            return (self.amp_e * image_sum_gaussian(x, y, self.sigma_e, self.period, self.image_radius)
                    - self.amp_i * image_sum_gaussian(x, y, self.sigma_i, self.period, self.image_radius))
        if self.metric == "periodic":
            diff = periodic_distance(x[:, None, :], y[None, :, :], self.period)
            return self.profile(diff)
        diff = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=2)
        return self.profile(diff)


def kernel_matrix(nodes: np.ndarray, rule, kernel: KernelSpec, geodesic=None,
                  node_cap: int = KERNEL_MATRIX_NODE_CAP) -> np.ndarray:
    """Dense W with W_ij = w(x_i, x_j) mu_j."""
    nodes = np.asarray(nodes, dtype=np.float64)
    n = len(nodes)
    if n > node_cap:
        raise ConfigError(
            f"{n} nodes would need a {n}x{n} dense kernel matrix; "
            f"the cap is {node_cap} (lower n or raise node_cap)"
        )
    if len(rule.weights) != n:
        raise ConfigError("quadrature rule does not match the node set")
    return kernel.evaluate(nodes, nodes, geodesic=geodesic) * rule.weights[None, :]


# ---------------------------------------------------------------------------
# model + right-hand side

@dataclass(frozen=True)
class Depression:
    """Synaptic efficacy dynamics tau q' = 1 - q - beta q f(u)."""

    tau: float = 20.0
    beta: float = 5.0


@dataclass
class SimState:
    t: float
    alpha: np.ndarray
    q: np.ndarray = None

    def copy(self):
        return SimState(self.t, self.alpha.copy(), None if self.q is None else self.q.copy())


@dataclass
class NeuralFieldModel:
    """Everything rhs() needs: connectivity, firing rate, forcing, depression."""

    w_matrix: np.ndarray
    firing: object
    forcing: object = None  # callable t -> (n,) values, or None
    depression: Depression = None

    @property
    def n(self) -> int:
        return len(self.w_matrix)

    def rhs(self, state: SimState):
        rate = self.firing(state.alpha)
        if self.depression is not None:
            if state.q is None:
                raise ConfigError("depression enabled but state carries no q")
            drive = self.w_matrix @ (state.q * rate)
            dq = (1.0 - state.q - self.depression.beta * state.q * rate) / self.depression.tau
        else:
            drive = self.w_matrix @ rate
            dq = None
        dalpha = -state.alpha + drive
        if self.forcing is not None:
            dalpha = dalpha + self.forcing(state.t)
        return dalpha, dq


def rhs(model: NeuralFieldModel, state: SimState):
    return model.rhs(state)


def _pack(state: SimState):
    if state.q is None:
        return state.alpha.copy()
    return np.concatenate([state.alpha, state.q])


def _unpack(t, y, n, has_q):
    if has_q:
        return SimState(t, y[:n], y[n:])
    return SimState(t, y)


AB5_COEFFS = np.array([1901.0, -2774.0, 2616.0, -1274.0, 251.0]) / 720.0


def integrate(model: NeuralFieldModel, initial: SimState, t_end: float, dt: float,
              stride: int = 1, callback=None):
    """Fixed-step integration to t_end; 5-step Adams–Bashforth after an RK4 start.

    Emits a list of SimState snapshots every ``stride`` steps (always
    including the initial and final states).  Non-finite values abort via
    IntegrationError carrying the failing step.
    """
    if dt <= 0.0:
        raise ConfigError("time step must be positive")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ConfigError(f"dt {dt} does not divide t_end {t_end} within rounding")
    has_q = initial.q is not None
    if (model.depression is not None) != has_q:
        raise ConfigError("depression flag and presence of q in the state disagree")
    n = model.n
    if len(initial.alpha) != n:
        raise ConfigError("initial state length does not match the model")

    def f(t, y):
        da, dq = model.rhs(_unpack(t, y, n, has_q))
        return da.copy() if dq is None else np.concatenate([da, dq])

    y = _pack(initial)
    t = float(initial.t)
    traj = [initial.copy()]
    if callback is not None:
        callback(traj[-1])
    history = [f(t, y)]

    def check(step, vec):
        if not np.all(np.isfinite(vec)):
            raise IntegrationError(step, t, "non-finite state")

    for step in range(1, n_steps + 1):
        if len(history) < 5:
            # classical four-stage single-step start
            k1 = history[-1]
            k2 = f(t + dt / 2.0, y + dt / 2.0 * k1)
            k3 = f(t + dt / 2.0, y + dt / 2.0 * k2)
            k4 = f(t + dt, y + dt * k3)
            y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            y = y + dt * (
                AB5_COEFFS[0] * history[-1] + AB5_COEFFS[1] * history[-2]
                + AB5_COEFFS[2] * history[-3] + AB5_COEFFS[3] * history[-4]
                + AB5_COEFFS[4] * history[-5]
            )
        t = initial.t + step * dt
        check(step, y)
        history.append(f(t, y))
        if len(history) > 5:
            history.pop(0)
        if step % stride == 0 or step == n_steps:
            traj.append(_unpack(t, y, n, has_q))
            if callback is not None:
                callback(traj[-1])
    return traj


# ---------------------------------------------------------------------------
# manufactured problems (periodic square and torus)

SIGMA_U_DEFAULT = 1.1
SIGMA_W_DEFAULT = 1.0 / 40.0


def _orbit(t):
    return np.array([math.cos(t), math.sin(t)]) / 5.0


def _orbit_rate(t):
    return np.array([-math.sin(t), math.cos(t)]) / 5.0


@dataclass(frozen=True)
class ManufacturedSpec:
    """Closed-form traveling-bump problem on the periodic square.

    The exact field is u = f^{-1}(G_u + 1/10) with G_u an image-sum
    periodic Gaussian orbiting the origin; because f(u) is then exactly
    G_u + 1/10 and Gaussians convolve in closed form, the nonlocal term is
    G_c + 1/10 with combined width sqrt(sigma_w^2 + sigma_u^2), and the
    forcing F = du/dt + u - (G_c + 1/10) is exact.
    """

    sigma_u: float = SIGMA_U_DEFAULT
    sigma_w: float = SIGMA_W_DEFAULT
    period: float = 2.0 * np.pi
    image_radius: int = 2
    firing: SigmoidFiring = SigmoidFiring(5.0, 0.5)

    @property
    def sigma_combined(self) -> float:
        return math.hypot(self.sigma_u, self.sigma_w)

    def gauss_u(self, t, pts):
        return image_sum_gaussian(
            pts, _orbit(t)[None], self.sigma_u, self.period, self.image_radius
        )[:, 0]

    def exact(self, t, pts):
        return self.firing.inverse(self.gauss_u(t, pts) + 0.1)

    def exact_dt(self, t, pts):
        pts = np.atleast_2d(pts)
        shifts = np.arange(-self.image_radius, self.image_radius + 1) * self.period
        xdot = _orbit_rate(t)
        g = np.zeros(len(pts))
        gdot = np.zeros(len(pts))
        diff = pts - _orbit(t)
        s2 = self.sigma_u**2
        for sx in shifts:
            for sy in shifts:
                z0 = diff[:, 0] + sx
                z1 = diff[:, 1] + sy
                n = np.exp(-0.5 * (z0**2 + z1**2) / s2) / (2.0 * np.pi * s2)
                g += n
                gdot += n * (z0 * xdot[0] + z1 * xdot[1]) / s2
        y = g + 0.1
        return gdot / (self.firing.gain * y * (1.0 - y))

    def forcing(self, t, pts):
        pts = np.atleast_2d(pts)
        conv = image_sum_gaussian(
            pts, _orbit(t)[None], self.sigma_combined, self.period, self.image_radius
        )[:, 0] + 0.1
        return self.exact_dt(t, pts) + self.exact(t, pts) - conv

    def kernel(self) -> KernelSpec:
        return KernelSpec(
            variant="gaussian", sigma=self.sigma_w, metric="image_sum_periodic",
            period=self.period, image_radius=self.image_radius,
        )


def manufactured_forcing_flat(t, nodes, spec: ManufacturedSpec = None):
    """Forcing F(t, x) making the traveling bump an exact solution (flat)."""
    spec = spec or ManufacturedSpec()
    return spec.forcing(t, nodes)


def manufactured_forcing_torus(t, nodes_xyz, spec: ManufacturedSpec = None,
                               R: float = TORUS_R, r: float = TORUS_r):
    """Torus counterpart; identical in angle coordinates.

    With kernel w(x, y) = G_w(psi x, psi y) / (R + r cos theta_y), the
    surface Jacobian cancels and the angle-space problem is exactly the
    flat periodic one.
    """
    spec = spec or ManufacturedSpec()
    phi, theta = torus_unmap(nodes_xyz, R, r)
    return spec.forcing(t, np.column_stack([phi, theta]))


def manufactured_flat_model(nodes, rule, spec: ManufacturedSpec = None) -> NeuralFieldModel:
    spec = spec or ManufacturedSpec()
    w = kernel_matrix(nodes, rule, spec.kernel())
    return NeuralFieldModel(
        w_matrix=w, firing=spec.firing,
        forcing=lambda t: spec.forcing(t, nodes),
    )


def manufactured_torus_model(nodes_xyz, rule, spec: ManufacturedSpec = None,
                             R: float = TORUS_R, r: float = TORUS_r) -> NeuralFieldModel:
    spec = spec or ManufacturedSpec()
    phi, theta = torus_unmap(nodes_xyz, R, r)
    angles = np.column_stack([phi, theta])
    gw = image_sum_gaussian(angles, angles, spec.sigma_w, spec.period, spec.image_radius)
    w = gw / (R + r * np.cos(theta))[None, :] * rule.weights[None, :]
    if len(rule.weights) != len(angles):
        raise ConfigError("quadrature rule does not match the node set")
    return NeuralFieldModel(
        w_matrix=w, firing=spec.firing,
        forcing=lambda t: spec.forcing(t, angles),
    )
