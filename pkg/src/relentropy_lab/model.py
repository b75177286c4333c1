"""System models: constitutive functions, derivatives, and the viscous gas instance.

A :class:`Model1D` packages the maps A, F, B, eta, q, G of a 1D system

    d/dt A(u) + d/dx F(u) = eps * d/dx ( B(u) du/dx ) [+ P(u)]

together with their first and second derivatives.  All evaluators are batched:
a state array has shape ``(..., n)`` and outputs carry matching leading axes.

The concrete instance is the Lagrangean viscous heat-conducting gas with
unknowns (specific volume, velocity, temperature), built from a free-energy
based :class:`GasModel` via :func:`embed_gas_as_general`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Array = np.ndarray

_EPS3 = float(np.finfo(float).eps) ** (1.0 / 3.0)  # optimal central-difference scale


class ParameterError(ValueError):
    """Invalid model parameter (nonpositive gas constant, heat capacity, ...)."""


class StateDomainError(ValueError):
    """A state violates its domain constraints (u > 0, theta > 0)."""


def as_state(components) -> Array:
    """Validate and return a finite float state vector."""
    u = np.asarray(components, dtype=float)
    if not np.all(np.isfinite(u)):
        raise StateDomainError(f"state has non-finite entries: {u}")
    return u


@dataclass(frozen=True)
class GasState:
    """Pointwise gas unknowns: specific volume, velocity, temperature."""

    u: float
    v: float
    theta: float

    def __post_init__(self):
        if not (np.isfinite(self.u) and np.isfinite(self.v) and np.isfinite(self.theta)):
            raise StateDomainError("gas state has non-finite entries")
        if self.u <= 0.0:
            raise StateDomainError(f"specific volume must be positive, got {self.u}")
        if self.theta <= 0.0:
            raise StateDomainError(f"temperature must be positive, got {self.theta}")

    def as_array(self) -> Array:
        return np.array([self.u, self.v, self.theta])


# ---------------------------------------------------------------------------
# finite differences


def numeric_jacobian(f: Callable[[Array], Array], u: Array, h: float | None = None) -> Array:
    """Central-difference Jacobian of a vector map, J[i, j] = dF_i/du_j.

    The step is ``h * max(1, |u_j|)`` per component; the default h balances
    truncation against round-off for C^3 maps.
    """
    u = np.asarray(u, dtype=float)
    base = _EPS3 if h is None else float(h)
    steps = base * np.maximum(1.0, np.abs(u))
    cols = []
    for j in range(u.size):
        e = np.zeros_like(u)
        e[j] = steps[j]
        cols.append((np.asarray(f(u + e), dtype=float) - np.asarray(f(u - e), dtype=float)) / (2.0 * steps[j]))
    return np.stack(cols, axis=-1)


def numeric_hessian_scalar(f: Callable[[Array], float], u: Array, h: float | None = None) -> Array:
    """Central-difference Hessian of a scalar map (symmetrized)."""
    u = np.asarray(u, dtype=float)
    base = (float(np.finfo(float).eps) ** 0.25) if h is None else float(h)
    steps = base * np.maximum(1.0, np.abs(u))
    n = u.size
    H = np.empty((n, n))
    f0 = float(f(u))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = steps[i]
        H[i, i] = (float(f(u + ei)) - 2.0 * f0 + float(f(u - ei))) / steps[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = steps[j]
            mixed = (
                float(f(u + ei + ej))
                - float(f(u + ei - ej))
                - float(f(u - ei + ej))
                + float(f(u - ei - ej))
            ) / (4.0 * steps[i] * steps[j])
            H[i, j] = H[j, i] = mixed
    return H


def numeric_hessian_vector(f: Callable[[Array], Array], u: Array, h: float | None = None) -> Array:
    """Componentwise Hessians of a vector map, T[k, i, j] = d^2 F_k / du_i du_j."""
    u = np.asarray(u, dtype=float)
    n = u.size
    m = np.asarray(f(u), dtype=float).size
    T = np.empty((m, n, n))
    for k in range(m):
        T[k] = numeric_hessian_scalar(lambda x, k=k: float(np.asarray(f(x), dtype=float)[k]), u, h)
    return T


# ---------------------------------------------------------------------------
# transport coefficient laws


@dataclass(frozen=True)
class TransportLaw:
    """State-dependent transport coefficient c(u, theta) with analytic partials."""

    value: Callable[[Array, Array], Array]
    d_u: Callable[[Array, Array], Array]
    d_theta: Callable[[Array, Array], Array]
    label: str = "custom"

    def __call__(self, u, theta):
        return self.value(u, theta)


def constant_law(c: float) -> TransportLaw:
    return TransportLaw(
        value=lambda u, theta: np.broadcast_to(np.float64(c), np.shape(u)).copy() if np.shape(u) else np.float64(c),
        d_u=lambda u, theta: np.zeros_like(np.asarray(u, dtype=float)),
        d_theta=lambda u, theta: np.zeros_like(np.asarray(u, dtype=float)),
        label=f"constant({c!r})",
    )


def theta_scaled_law(k0: float) -> TransportLaw:
    """Coefficient proportional to temperature, c = k0 * theta."""
    return TransportLaw(
        value=lambda u, theta: k0 * np.asarray(theta, dtype=float),
        d_u=lambda u, theta: np.zeros_like(np.asarray(u, dtype=float)),
        d_theta=lambda u, theta: np.full_like(np.asarray(theta, dtype=float), k0),
        label=f"theta_scaled({k0!r})",
    )


def zero_field(x, t):
    return np.zeros_like(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# gas constitutive model


@dataclass(frozen=True)
class GasModel:
    """Constitutive theory generated by a free energy psi(u, theta).

    The stress, entropy and internal energy follow from psi:

        sigma = psi_u,   eta = -psi_theta,   e = psi + theta * eta,

    which makes the Maxwell relations (sigma_theta = -eta_u, e_theta =
    theta * eta_theta, e_u = sigma - theta * sigma_theta) hold identically.
    Partial derivatives of psi up to third order may be supplied analytically;
    missing ones fall back to central differences and the instance records
    which path is active in ``derivative_path``.
    """

    psi: Callable[[Array, Array], Array]
    R: float = 1.0
    c_v: float = 1.0
    psi_u: Optional[Callable] = None
    psi_theta: Optional[Callable] = None
    psi_uu: Optional[Callable] = None
    psi_utheta: Optional[Callable] = None
    psi_thetatheta: Optional[Callable] = None
    psi_uuu: Optional[Callable] = None
    psi_uutheta: Optional[Callable] = None
    psi_uthetatheta: Optional[Callable] = None
    psi_thetathetatheta: Optional[Callable] = None
    mu: TransportLaw = field(default_factory=lambda: constant_law(1.0))
    kappa: TransportLaw = field(default_factory=lambda: constant_law(1.0))
    body_force: Callable = zero_field
    heat_supply: Callable = zero_field
    theta_from_internal_energy: Optional[Callable[[Array, Array], Array]] = None

    @property
    def derivative_path(self) -> str:
        analytic = all(
            getattr(self, name) is not None
            for name in (
                "psi_u",
                "psi_theta",
                "psi_uu",
                "psi_utheta",
                "psi_thetatheta",
                "psi_uuu",
                "psi_uutheta",
                "psi_uthetatheta",
                "psi_thetathetatheta",
            )
        )
        return "analytic" if analytic else "finite-difference"

    # -- psi partials with finite-difference fallback ------------------------

    def _d(self, name: str, u, theta):
        fn = getattr(self, "psi_" + name)
        if fn is not None:
            return np.asarray(fn(u, theta), dtype=float)
        return self._fd(name, u, theta)

    def _fd(self, name: str, u, theta):
        u = np.asarray(u, dtype=float)
        theta = np.asarray(theta, dtype=float)
        hu = _EPS3 * np.maximum(1.0, np.abs(u))
        ht = _EPS3 * np.maximum(1.0, np.abs(theta))
        p = self.psi
        if name == "u":
            return (p(u + hu, theta) - p(u - hu, theta)) / (2 * hu)
        if name == "theta":
            return (p(u, theta + ht) - p(u, theta - ht)) / (2 * ht)
        if name == "uu":
            return (p(u + hu, theta) - 2 * p(u, theta) + p(u - hu, theta)) / hu**2
        if name == "thetatheta":
            return (p(u, theta + ht) - 2 * p(u, theta) + p(u, theta - ht)) / ht**2
        if name == "utheta":
            return (
                p(u + hu, theta + ht) - p(u + hu, theta - ht) - p(u - hu, theta + ht) + p(u - hu, theta - ht)
            ) / (4 * hu * ht)
        # third order: difference the second-order stencils
        h2u = hu * 8.0
        h2t = ht * 8.0
        if name == "uuu":
            return (self._fd("uu", u + h2u, theta) - self._fd("uu", u - h2u, theta)) / (2 * h2u)
        if name == "uutheta":
            return (self._fd("uu", u, theta + h2t) - self._fd("uu", u, theta - h2t)) / (2 * h2t)
        if name == "uthetatheta":
            return (self._fd("thetatheta", u + h2u, theta) - self._fd("thetatheta", u - h2u, theta)) / (2 * h2u)
        if name == "thetathetatheta":
            return (self._fd("thetatheta", u, theta + h2t) - self._fd("thetatheta", u, theta - h2t)) / (2 * h2t)
        raise KeyError(name)

    # -- constitutive maps ----------------------------------------------------

    def sigma(self, u, theta):
        return self._d("u", u, theta)

    def eta(self, u, theta):
        return -self._d("theta", u, theta)

    def e(self, u, theta):
        return np.asarray(self.psi(u, theta), dtype=float) + np.asarray(theta, dtype=float) * self.eta(u, theta)

    def sigma_u(self, u, theta):
        return self._d("uu", u, theta)

    def sigma_theta(self, u, theta):
        return self._d("utheta", u, theta)

    def eta_u(self, u, theta):
        return -self._d("utheta", u, theta)

    def eta_theta(self, u, theta):
        return -self._d("thetatheta", u, theta)

    def e_u(self, u, theta):
        return self.sigma(u, theta) - np.asarray(theta, dtype=float) * self.sigma_theta(u, theta)

    def e_theta(self, u, theta):
        return np.asarray(theta, dtype=float) * self.eta_theta(u, theta)

    def sigma_uu(self, u, theta):
        return self._d("uuu", u, theta)

    def sigma_utheta(self, u, theta):
        return self._d("uutheta", u, theta)

    def sigma_thetatheta(self, u, theta):
        return self._d("uthetatheta", u, theta)

    def eta_uu(self, u, theta):
        return -self._d("uutheta", u, theta)

    def eta_utheta(self, u, theta):
        return -self._d("uthetatheta", u, theta)

    def eta_thetatheta(self, u, theta):
        return -self._d("thetathetatheta", u, theta)

    def e_uu(self, u, theta):
        # d/du (sigma - theta*sigma_theta)
        return self.sigma_u(u, theta) - np.asarray(theta, dtype=float) * self.sigma_utheta(u, theta)

    def e_utheta(self, u, theta):
        return -np.asarray(theta, dtype=float) * self.sigma_thetatheta(u, theta)

    def e_thetatheta(self, u, theta):
        theta = np.asarray(theta, dtype=float)
        return self.eta_theta(u, theta) + theta * self.eta_thetatheta(u, theta)

    def maxwell_residuals(self, u, theta) -> dict[str, Array]:
        """Residuals of the three compatibility relations between sigma, eta, e."""
        theta = np.asarray(theta, dtype=float)
        return {
            "sigma_theta+eta_u": self.sigma_theta(u, theta) + self.eta_u(u, theta),
            "e_theta-theta*eta_theta": self.e_theta(u, theta) - theta * self.eta_theta(u, theta),
            "e_u-sigma+theta*sigma_theta": self.e_u(u, theta)
            - self.sigma(u, theta)
            + theta * self.sigma_theta(u, theta),
        }


def ideal_gas_model(
    R: float,
    c_v: float,
    mu: TransportLaw | None = None,
    kappa: TransportLaw | None = None,
    body_force: Callable = zero_field,
    heat_supply: Callable = zero_field,
) -> GasModel:
    """Ideal gas with psi = -R theta ln u - c_v theta ln theta + c_v theta.

    The affine +c_v*theta term is a gauge choice that makes e = c_v * theta
    exactly; it has no effect on stress, entropy differences, or dynamics.
    Closed forms: sigma = -R theta / u, eta = R ln u + c_v ln theta.
    """
    if R <= 0:
        raise ParameterError(f"gas constant must be positive, got {R}")
    if c_v <= 0:
        raise ParameterError(f"specific heat must be positive, got {c_v}")

    def psi(u, theta):
        u = np.asarray(u, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return -R * theta * np.log(u) - c_v * theta * np.log(theta) + c_v * theta

    zeros = lambda u, theta: np.zeros(np.broadcast_shapes(np.shape(u), np.shape(theta)))
    return GasModel(
        psi=psi,
        R=R,
        c_v=c_v,
        psi_u=lambda u, theta: -R * np.asarray(theta, dtype=float) / np.asarray(u, dtype=float),
        psi_theta=lambda u, theta: -R * np.log(np.asarray(u, dtype=float))
        - c_v * np.log(np.asarray(theta, dtype=float)),
        psi_uu=lambda u, theta: R * np.asarray(theta, dtype=float) / np.asarray(u, dtype=float) ** 2,
        psi_utheta=lambda u, theta: -R / np.asarray(u, dtype=float) + zeros(u, theta),
        psi_thetatheta=lambda u, theta: -c_v / np.asarray(theta, dtype=float) + zeros(u, theta),
        psi_uuu=lambda u, theta: -2.0 * R * np.asarray(theta, dtype=float) / np.asarray(u, dtype=float) ** 3,
        psi_uutheta=lambda u, theta: R / np.asarray(u, dtype=float) ** 2 + zeros(u, theta),
        psi_uthetatheta=lambda u, theta: zeros(u, theta),
        psi_thetathetatheta=lambda u, theta: c_v / np.asarray(theta, dtype=float) ** 2 + zeros(u, theta),
        mu=mu if mu is not None else constant_law(1.0),
        kappa=kappa if kappa is not None else constant_law(1.0),
        body_force=body_force,
        heat_supply=heat_supply,
        theta_from_internal_energy=lambda u, e_int: np.asarray(e_int, dtype=float) / c_v,
    )


# ---------------------------------------------------------------------------
# general 1D system model


def _always_admissible(states: Array) -> Array:
    return np.ones(np.shape(states)[:-1], dtype=bool)


@dataclass(frozen=True)
class Model1D:
    """Batched evaluators for a 1D hyperbolic-parabolic system of size n.

    Derivative layout: ``jac_X[..., i, j] = dX_i/du_j`` and
    ``hess_X[..., k, i, j] = d^2 X_k / du_i du_j``.
    """

    n: int
    A: Callable[[Array], Array]
    F: Callable[[Array], Array]
    B: Callable[[Array], Array]
    G: Callable[[Array], Array]
    eta: Callable[[Array], Array]
    q: Callable[[Array], Array]
    jac_A: Callable[[Array], Array]
    jac_F: Callable[[Array], Array]
    jac_G: Callable[[Array], Array]
    hess_A: Callable[[Array], Array]
    hess_G: Callable[[Array], Array]
    hess_eta: Callable[[Array], Array]
    source: Optional[Callable[[Array], Array]] = None
    invert_A: Optional[Callable[[Array], Array]] = None
    admissible: Callable[[Array], Array] = _always_admissible
    derivative_path: str = "analytic"
    gas: Optional[GasModel] = None
    labels: tuple = ()
    # optional closed forms for the CFL quantities; generic eig/svd otherwise
    wave_speed_bound: Optional[Callable[[Array], Array]] = None
    parabolic_bound: Optional[Callable[[Array], Array]] = None

    def with_source(self, P: Callable[[Array], Array]) -> "Model1D":
        return dataclasses.replace(self, source=P)

    def convexity_matrix(self, states: Array) -> Array:
        """Symmetric matrix hess(eta) - sum_k G_k hess(A_k); positive definite
        exactly when the entropy is convex in the conserved variables."""
        He = self.hess_eta(states)
        Ha = self.hess_A(states)
        Gv = self.G(states)
        M = He - np.einsum("...k,...kij->...ij", Gv, Ha)
        return 0.5 * (M + np.swapaxes(M, -1, -2))

    def recover_states(self, w: Array, newton_steps: int = 25, tol: float = 1e-12) -> Array:
        """Invert the conserved-variable map A per point (closed form if available)."""
        if self.invert_A is not None:
            return self.invert_A(w)
        # damped Newton on A(u) = w, batched over leading axes
        u = np.array(w, dtype=float)
        for _ in range(newton_steps):
            r = self.A(u) - w
            if float(np.max(np.abs(r))) < tol:
                return u
            step = np.linalg.solve(self.jac_A(u), r[..., None])[..., 0]
            rn0 = np.linalg.norm(r, axis=-1)
            lam = np.ones(rn0.shape)
            for _damp in range(8):
                trial = u - lam[..., None] * step
                rn1 = np.linalg.norm(self.A(trial) - w, axis=-1)
                bad = rn1 > rn0
                if not np.any(bad):
                    break
                lam = np.where(bad, 0.5 * lam, lam)
            u = u - lam[..., None] * step
        r = self.A(u) - w
        if float(np.max(np.abs(r))) >= max(tol, 1e-9):
            raise RecoveryError("state recovery did not converge within the iteration budget")
        return u


class RecoveryError(RuntimeError):
    """Newton inversion of the conserved-variable map failed."""


def embed_gas_as_general(gas: GasModel) -> Model1D:
    """Cast the gas system into the general 1D form.

    State U = (u, v, theta); conserved variables A = (u, v, v^2/2 + e);
    flux F = -(v, sigma, v sigma); multiplier G = (sigma/theta, v/theta,
    -1/theta).  The mathematical entropy is minus the thermodynamic one and
    its flux vanishes identically in the material frame.
    """

    def split(U):
        U = np.asarray(U, dtype=float)
        return U[..., 0], U[..., 1], U[..., 2]

    def A(U):
        u, v, th = split(U)
        return np.stack([u, v, 0.5 * v**2 + gas.e(u, th)], axis=-1)

    def F(U):
        u, v, th = split(U)
        s = gas.sigma(u, th)
        return np.stack([-v, -s, -v * s], axis=-1)

    def G(U):
        u, v, th = split(U)
        return np.stack([gas.sigma(u, th) / th, v / th, -1.0 / th], axis=-1)

    def eta_hat(U):
        u, v, th = split(U)
        return -gas.eta(u, th)

    def q_hat(U):
        u, _, _ = split(U)
        return np.zeros(np.shape(u))

    def B(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        m = np.asarray(gas.mu(u, th), dtype=float) + z
        k = np.asarray(gas.kappa(u, th), dtype=float) + z
        row0 = np.stack([z, z, z], axis=-1)
        row1 = np.stack([z, m, z], axis=-1)
        row2 = np.stack([z, m * v, k], axis=-1)
        return np.stack([row0, row1, row2], axis=-2)

    def jac_A(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        o = np.ones(np.shape(u))
        eu = gas.e_u(u, th) + z
        et = gas.e_theta(u, th) + z
        return np.stack(
            [
                np.stack([o, z, z], axis=-1),
                np.stack([z, o, z], axis=-1),
                np.stack([eu, v, et], axis=-1),
            ],
            axis=-2,
        )

    def jac_F(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        o = np.ones(np.shape(u))
        s = gas.sigma(u, th) + z
        su = gas.sigma_u(u, th) + z
        st = gas.sigma_theta(u, th) + z
        return -np.stack(
            [
                np.stack([z, o, z], axis=-1),
                np.stack([su, z, st], axis=-1),
                np.stack([v * su, s, v * st], axis=-1),
            ],
            axis=-2,
        )

    def jac_G(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        s = gas.sigma(u, th) + z
        su = gas.sigma_u(u, th) + z
        st = gas.sigma_theta(u, th) + z
        return np.stack(
            [
                np.stack([su / th, z, st / th - s / th**2], axis=-1),
                np.stack([z, 1.0 / th, -v / th**2], axis=-1),
                np.stack([z, z, 1.0 / th**2], axis=-1),
            ],
            axis=-2,
        )

    def hess_A(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        euu = gas.e_uu(u, th) + z
        eut = gas.e_utheta(u, th) + z
        ett = gas.e_thetatheta(u, th) + z
        o = np.ones(np.shape(u))
        zero_mat = np.stack([np.stack([z, z, z], axis=-1)] * 3, axis=-2)
        h3 = np.stack(
            [
                np.stack([euu, z, eut], axis=-1),
                np.stack([z, o, z], axis=-1),
                np.stack([eut, z, ett], axis=-1),
            ],
            axis=-2,
        )
        return np.stack([zero_mat, zero_mat, h3], axis=-3)

    def hess_G(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        s = gas.sigma(u, th) + z
        su = gas.sigma_u(u, th) + z
        st = gas.sigma_theta(u, th) + z
        suu = gas.sigma_uu(u, th) + z
        sut = gas.sigma_utheta(u, th) + z
        stt = gas.sigma_thetatheta(u, th) + z
        g1_ut = sut / th - su / th**2
        h1 = np.stack(
            [
                np.stack([suu / th, z, g1_ut], axis=-1),
                np.stack([z, z, z], axis=-1),
                np.stack([g1_ut, z, stt / th - 2 * st / th**2 + 2 * s / th**3], axis=-1),
            ],
            axis=-2,
        )
        h2 = np.stack(
            [
                np.stack([z, z, z], axis=-1),
                np.stack([z, z, -1.0 / th**2], axis=-1),
                np.stack([z, -1.0 / th**2, 2 * v / th**3], axis=-1),
            ],
            axis=-2,
        )
        h3 = np.stack(
            [
                np.stack([z, z, z], axis=-1),
                np.stack([z, z, z], axis=-1),
                np.stack([z, z, -2.0 / th**3], axis=-1),
            ],
            axis=-2,
        )
        return np.stack([h1, h2, h3], axis=-3)

    def hess_eta_hat(U):
        u, v, th = split(U)
        z = np.zeros(np.shape(u))
        euu = gas.eta_uu(u, th) + z
        eut = gas.eta_utheta(u, th) + z
        ett = gas.eta_thetatheta(u, th) + z
        return -np.stack(
            [
                np.stack([euu, z, eut], axis=-1),
                np.stack([z, z, z], axis=-1),
                np.stack([eut, z, ett], axis=-1),
            ],
            axis=-2,
        )

    invert = None
    if gas.theta_from_internal_energy is not None:

        def invert(w):
            w = np.asarray(w, dtype=float)
            u = w[..., 0]
            v = w[..., 1]
            e_int = w[..., 2] - 0.5 * v**2
            th = gas.theta_from_internal_energy(u, e_int)
            return np.stack([u, v, th], axis=-1)

    def admissible(U):
        u, _, th = split(np.asarray(U, dtype=float))
        return (u > 0.0) & (th > 0.0)

    def wave_speed(U):
        # adiabatic sound speed: the nonzero eigenvalues of (grad A)^{-1} grad F
        # are +-sqrt(sigma_u + sigma_theta^2 / eta_theta)
        u, v, th = split(U)
        lam2 = gas.sigma_u(u, th) + gas.sigma_theta(u, th) ** 2 / gas.eta_theta(u, th)
        return np.sqrt(np.maximum(lam2, 0.0))

    def parabolic_scale(U):
        # (grad A)^{-1} B reduces to diag(0, mu, kappa/e_theta) exactly
        u, v, th = split(U)
        mu = np.asarray(gas.mu(u, th), dtype=float)
        kap = np.asarray(gas.kappa(u, th), dtype=float)
        return np.maximum(mu, kap / gas.e_theta(u, th))

    return Model1D(
        n=3,
        A=A,
        F=F,
        B=B,
        G=G,
        eta=eta_hat,
        q=q_hat,
        jac_A=jac_A,
        jac_F=jac_F,
        jac_G=jac_G,
        hess_A=hess_A,
        hess_G=hess_G,
        hess_eta=hess_eta_hat,
        invert_A=invert,
        admissible=admissible,
        derivative_path=gas.derivative_path,
        gas=gas,
        labels=("u", "v", "theta"),
        wave_speed_bound=wave_speed,
        parabolic_bound=parabolic_scale,
    )


def model_from_maps(
    n: int,
    A: Callable,
    F: Callable,
    B: Callable,
    G: Callable,
    eta: Callable,
    q: Callable,
    source: Optional[Callable] = None,
    invert_A: Optional[Callable] = None,
    labels: tuple = (),
) -> Model1D:
    """Build a Model1D from bare maps, deriving all Jacobians and Hessians
    by central differences (per-point; batched inputs are looped)."""

    def batched(op, out_builder):
        def run(U):
            U = np.asarray(U, dtype=float)
            if U.ndim == 1:
                return out_builder(U)
            flat = U.reshape(-1, n)
            outs = np.stack([out_builder(x) for x in flat], axis=0)
            return outs.reshape(U.shape[:-1] + outs.shape[1:])

        return run

    jac_A = batched("jac_A", lambda x: numeric_jacobian(A, x))
    jac_F = batched("jac_F", lambda x: numeric_jacobian(F, x))
    jac_G = batched("jac_G", lambda x: numeric_jacobian(G, x))
    hess_A = batched("hess_A", lambda x: numeric_hessian_vector(A, x))
    hess_G = batched("hess_G", lambda x: numeric_hessian_vector(G, x))
    hess_eta = batched("hess_eta", lambda x: numeric_hessian_scalar(lambda y: float(eta(y)), x))

    return Model1D(
        n=n,
        A=A,
        F=F,
        B=B,
        G=G,
        eta=eta,
        q=q,
        jac_A=jac_A,
        jac_F=jac_F,
        jac_G=jac_G,
        hess_A=hess_A,
        hess_G=hess_G,
        hess_eta=hess_eta,
        source=source,
        invert_A=invert_A,
        derivative_path="finite-difference",
        labels=labels or tuple(f"u{i+1}" for i in range(n)),
    )
