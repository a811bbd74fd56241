"""Exception types shared across the package."""


class NfrbfError(Exception):
    """Base class for all package-specific failures."""


class GeometryError(NfrbfError):
    """Degenerate or inconsistent geometry (collinear nodes, open meshes, ...)."""


class SingularSystemError(NfrbfError):
    """A local interpolation/quadrature system is singular or near-singular."""

    def __init__(self, element_id, cond_est, message=None):
        self.element_id = element_id
        self.cond_est = cond_est
        if message is None:
            message = (
                f"saddle system for element {element_id} is numerically singular "
                f"(condition estimate {cond_est:.3e})"
            )
        super().__init__(message)


class QuadratureError(NfrbfError):
    """Quadrature construction failed (non-positive Jacobian, bad element, ...)."""


class ConfigError(NfrbfError):
    """Invalid configuration or incompatible parameter combination."""


class IntegrationError(NfrbfError):
    """Time stepping produced a non-finite state."""

    def __init__(self, step, t, message="non-finite state"):
        self.step = step
        self.t = t
        super().__init__(f"{message} at step {step} (t = {t:.6g})")
