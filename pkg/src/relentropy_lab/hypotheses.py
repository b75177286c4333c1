"""Structural checks on a model: invertibility, entropy-pair compatibility,
convexity, dissipativity, and growth scans.

Each check samples a deterministic (seeded) set of states and directions,
reduces with order-independent min/max, and returns an entry carrying the
extremal value, a concrete witness, and the tolerance it was judged against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from relentropy_lab.model import Model1D

Array = np.ndarray


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic sampling recipe: a box (or explicit states), a seeded
    count, directions per state, and radii for growth scans."""

    seed: int = 0
    box: Optional[tuple] = None  # ((lo, hi), ...) per component
    states: Optional[Array] = None
    count: int = 200
    directions_per_state: int = 16
    radii: tuple = ()

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if self.radii and not all(b > a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly increasing")

    def draw_states(self, model: Model1D) -> Array:
        if self.states is not None:
            return np.asarray(self.states, dtype=float)
        if self.box is None:
            raise ValueError("plan needs either explicit states or a box")
        lo = np.array([b[0] for b in self.box], dtype=float)
        hi = np.array([b[1] for b in self.box], dtype=float)
        rng = np.random.default_rng(self.seed)
        pts = lo + (hi - lo) * rng.random((self.count, model.n))
        keep = model.admissible(pts)
        return pts[keep]

    def draw_directions(self, n: int) -> Array:
        """Unit directions: all coordinate axes (so degenerate kernels are hit
        deterministically) plus seeded Gaussian fill-ins."""
        rng = np.random.default_rng(self.seed + 1)
        extra = max(0, self.directions_per_state - 2 * n)
        g = rng.normal(size=(extra, n))
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        axes = np.concatenate([np.eye(n), -np.eye(n)], axis=0)
        return np.concatenate([axes, g], axis=0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    extremal_value: float
    tolerance: float
    witness_state: Optional[Array] = None
    witness_direction: Optional[Array] = None
    status: str = ""  # "", or "inconclusive"
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"


@dataclass
class HypothesisReport:
    entries: list
    model_info: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries if e.status != "inconclusive")

    def entry(self, name: str) -> CheckResult:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_flat_dict(self) -> dict:
        out = dict(self.model_info)
        for e in self.entries:
            out[f"{e.name}.pass"] = bool(e.passed)
            out[f"{e.name}.status"] = e.status
            out[f"{e.name}.extremal_value"] = float(e.extremal_value)
            out[f"{e.name}.tolerance"] = float(e.tolerance)
            if e.witness_state is not None:
                out[f"{e.name}.witness_state"] = [float(v) for v in np.atleast_1d(e.witness_state)]
            if e.witness_direction is not None:
                out[f"{e.name}.witness_direction"] = [
                    float(v) for v in np.atleast_1d(e.witness_direction)
                ]
            for k, v in e.details.items():
                if isinstance(v, (int, float, np.floating, np.integer, bool, np.bool_)):
                    out[f"{e.name}.{k}"] = v.item() if hasattr(v, "item") else v
        return out


def default_tolerance(model: Model1D) -> float:
    # analytic derivative chains are exact; finite differences carry O(h^2) noise
    return 1e-8 if model.derivative_path == "analytic" else 1e-5


def check_h1(model: Model1D, plan: SamplePlan, tol: Optional[float] = None) -> CheckResult:
    """Invertibility of the conserved-variable map: the Jacobian must stay
    uniformly nonsingular over the sampled states."""
    tol = default_tolerance(model) if tol is None else tol
    states = plan.draw_states(model)
    try:
        JA = model.jac_A(states)
        dets = np.abs(np.linalg.det(JA))
        svals = np.linalg.svd(JA, compute_uv=False)[..., -1]
    except Exception as exc:  # evaluation failure is a recorded failure
        return CheckResult("h1", False, float("nan"), tol, details={"error": str(exc)})
    i = int(np.argmin(svals))
    return CheckResult(
        "h1",
        passed=bool(svals[i] > tol),
        extremal_value=float(svals[i]),
        tolerance=tol,
        witness_state=states[i],
        details={"min_abs_det": float(np.min(dets)), "min_singular_value": float(svals[i]),
                 "n_states": len(states)},
    )


def check_entropy_pair(model: Model1D, plan: SamplePlan, tol: Optional[float] = None) -> CheckResult:
    """Compatibility of the multiplier: grad(G)^T grad(A) and grad(G)^T grad(F)
    must be symmetric, which is exactly the existence of the entropy pair."""
    tol = default_tolerance(model) if tol is None else tol
    states = plan.draw_states(model)
    JG = model.jac_G(states)
    MA = np.einsum("...ki,...kj->...ij", JG, model.jac_A(states))
    MF = np.einsum("...ki,...kj->...ij", JG, model.jac_F(states))
    asym_A = np.max(np.abs(MA - np.swapaxes(MA, -1, -2)), axis=(-1, -2))
    asym_F = np.max(np.abs(MF - np.swapaxes(MF, -1, -2)), axis=(-1, -2))
    worst = np.maximum(asym_A, asym_F)
    i = int(np.argmax(worst))
    return CheckResult(
        "entropy_pair",
        passed=bool(worst[i] < tol),
        extremal_value=float(worst[i]),
        tolerance=tol,
        witness_state=states[i],
        details={"max_asym_A": float(np.max(asym_A)), "max_asym_F": float(np.max(asym_F)),
                 "n_states": len(states)},
    )


def check_h3(
    model: Model1D, plan: SamplePlan, tol: Optional[float] = None, diag_tol: Optional[float] = None
) -> CheckResult:
    """Positive definiteness of hess(eta) - G . hess(A).

    For gas-backed models the matrix must additionally match the closed form
    diag(psi_uu/theta, 1/theta, eta_theta/theta)."""
    tol = default_tolerance(model) if tol is None else tol
    diag_tol = tol if diag_tol is None else diag_tol
    states = plan.draw_states(model)
    try:
        S = model.convexity_matrix(states)
        eigs = np.linalg.eigvalsh(S)
    except np.linalg.LinAlgError as exc:
        return CheckResult("h3", False, float("nan"), tol, details={"error": str(exc)})
    mins = eigs[..., 0]
    i = int(np.argmin(mins))
    details = {"min_eigenvalue": float(mins[i]), "n_states": len(states)}
    passed = bool(mins[i] > 0.0)
    if model.gas is not None:
        gas = model.gas
        u, th = states[..., 0], states[..., 2]
        diag = np.zeros_like(S)
        diag[..., 0, 0] = gas.sigma_u(u, th) / th  # psi_uu / theta
        diag[..., 1, 1] = 1.0 / th
        diag[..., 2, 2] = gas.eta_theta(u, th) / th
        mismatch = float(np.max(np.abs(S - diag)))
        details["diag_form_mismatch"] = mismatch
        details["min_psi_uu"] = float(np.min(gas.sigma_u(u, th)))
        details["min_eta_theta"] = float(np.min(gas.eta_theta(u, th)))
        passed = passed and mismatch < diag_tol
    return CheckResult(
        "h3",
        passed=passed,
        extremal_value=float(mins[i]),
        tolerance=tol,
        witness_state=states[i],
        details=details,
    )


def check_h4(
    model: Model1D,
    plan: SamplePlan,
    tol: float = 1e-12,
    zero_mode_tol: float = 1e-10,
) -> CheckResult:
    """Entropy dissipation of the viscosity matrix: the symmetrized
    grad(G)^T B must be positive semidefinite.  Records the eigen-range
    (nu_min, N_max), the kernel dimension, and the strict variant."""
    states = plan.draw_states(model)
    M = np.einsum("...ki,...kj->...ij", model.jac_G(states), model.B(states))
    Ms = 0.5 * (M + np.swapaxes(M, -1, -2))
    eigs = np.linalg.eigvalsh(Ms)
    nu_min = float(np.min(eigs[..., 0]))
    N_max = float(np.max(eigs[..., -1]))
    zero_counts = np.sum(np.abs(eigs) <= zero_mode_tol, axis=-1)
    i = int(np.argmin(eigs[..., 0]))
    dirs = plan.draw_directions(model.n)
    quad = np.einsum("di,...ij,dj->...d", dirs, Ms, dirs)
    return CheckResult(
        "h4",
        passed=bool(nu_min >= -tol),
        extremal_value=nu_min,
        tolerance=tol,
        witness_state=states[i],
        witness_direction=None,
        details={
            "nu_min": nu_min,
            "N_max": N_max,
            "quad_min": float(np.min(quad)),
            "quad_max": float(np.max(quad)),
            "zero_modes": int(np.max(zero_counts)),
            "zero_modes_uniform": bool(np.all(zero_counts == zero_counts.flat[0])),
            "h4s_pass": bool(nu_min > tol),
            "n_states": len(states),
        },
    )


def check_h5(
    model: Model1D, plan: SamplePlan, tol: float = 1e-12, degenerate_tol: float = 1e-14
) -> CheckResult:
    """Alternative dissipative structure: the entropy quadratic form must
    dominate |B xi|^2 with a positive constant over sampled gradients.

    Samples with B xi = 0 carry no information; if all are degenerate the
    check is inconclusive rather than a pass or fail."""
    states = plan.draw_states(model)
    dirs = plan.draw_directions(model.n)
    M = np.einsum("...ki,...kj->...ij", model.jac_G(states), model.B(states))
    num = np.einsum("di,sij,dj->sd", dirs, M, dirs)
    Bxi = np.einsum("sij,dj->sdi", model.B(states), dirs)
    den = np.sum(Bxi**2, axis=-1)
    valid = den > degenerate_tol
    if not np.any(valid):
        return CheckResult(
            "h5",
            passed=False,
            extremal_value=float("nan"),
            tolerance=tol,
            status="inconclusive",
            details={"reason": "all sampled gradients annihilated by B", "n_states": len(states)},
        )
    ratio = np.where(valid, num / np.where(valid, den, 1.0), np.inf)
    s, d = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
    mu_best = float(ratio[s, d])
    return CheckResult(
        "h5",
        passed=bool(mu_best > tol),
        extremal_value=mu_best,
        tolerance=tol,
        witness_state=states[s],
        witness_direction=dirs[d],
        details={"mu_best": mu_best, "n_valid": int(np.sum(valid)), "n_states": len(states)},
    )


def check_hd(model: Model1D, plan: SamplePlan, tol: float = 1e-12) -> CheckResult:
    """Weak dissipativity of the production term across sampled state pairs."""
    if model.source is None:
        raise ValueError("model has no production term")
    states = plan.draw_states(model)
    rng = np.random.default_rng(plan.seed + 2)
    idx = rng.integers(0, len(states), size=(len(states), 2))
    u, ub = states[idx[:, 0]], states[idx[:, 1]]
    val = np.einsum(
        "...i,...i->...", model.G(u) - model.G(ub), model.source(u) - model.source(ub)
    )
    i = int(np.argmax(val))
    return CheckResult(
        "hd",
        passed=bool(val[i] <= tol),
        extremal_value=float(val[i]),
        tolerance=tol,
        witness_state=u[i],
        witness_direction=ub[i],  # second state of the worst pair
        details={"n_pairs": len(val)},
    )


def check_maxwell(model: Model1D, plan: SamplePlan, tol: Optional[float] = None) -> CheckResult:
    """Compatibility relations of the gas constitutive maps over the sample."""
    if model.gas is None:
        raise ValueError("maxwell check applies to gas-backed models")
    tol = (1e-10 if model.derivative_path == "analytic" else 1e-5) if tol is None else tol
    states = plan.draw_states(model)
    res = model.gas.maxwell_residuals(states[..., 0], states[..., 2])
    worst_name, worst = max(((k, float(np.max(np.abs(v)))) for k, v in res.items()), key=lambda kv: kv[1])
    return CheckResult(
        "maxwell",
        passed=bool(worst < tol),
        extremal_value=worst,
        tolerance=tol,
        details={"worst_relation": worst_name, "n_states": len(states)},
    )


@dataclass
class GrowthRow:
    radius: float
    eta_over_power: float
    F_over_eta: float
    A_over_eta: float
    G_over_eta: float
    P_over_eta: float
    flagged: bool


@dataclass
class GrowthTable:
    rows: list
    p: float
    decay_verdicts: dict

    @property
    def all_decay(self) -> bool:
        return all(self.decay_verdicts.values())


def growth_scan(
    model: Model1D, radii: Iterable[float], plan: SamplePlan, p: float = 2.0, n_directions: int = 64
) -> GrowthTable:
    """Sup of constitutive-function ratios on spheres of increasing radius.

    Monotone decay of the |F|/eta, |A|/eta, |G|/eta (and |P|/eta) columns over
    the schedule is the numerical proxy for vanishing relative growth; it is
    reported as a verdict, never asserted as a limit.
    """
    radii = list(radii)
    if not all(b > a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    rng = np.random.default_rng(plan.seed + 3)
    dirs = rng.normal(size=(n_directions, model.n))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)

    rows = []
    for r in radii:
        pts = r * dirs
        pts = pts[model.admissible(pts)]
        if len(pts) == 0:
            rows.append(GrowthRow(r, np.inf, np.inf, np.inf, np.inf, np.inf, True))
            continue
        eta = model.eta(pts)
        flagged = bool(np.any(eta <= 0.0))
        safe_eta = np.where(eta > 0.0, eta, np.nan)
        normF = np.linalg.norm(model.F(pts), axis=-1)
        normA = np.linalg.norm(model.A(pts), axis=-1)
        normG = np.linalg.norm(model.G(pts), axis=-1)

        def sup(arr):
            vals = arr / safe_eta
            if np.any(np.isnan(vals)):
                return float("inf")
            return float(np.max(vals))

        P_ratio = 0.0
        if model.source is not None:
            P_ratio = sup(np.linalg.norm(model.source(pts), axis=-1))
        rows.append(
            GrowthRow(
                radius=r,
                eta_over_power=float(np.max(eta / (np.linalg.norm(pts, axis=-1) ** p + 1.0))),
                F_over_eta=sup(normF),
                A_over_eta=sup(normA),
                G_over_eta=sup(normG),
                P_over_eta=P_ratio,
                flagged=flagged,
            )
        )

    def decays(col):
        vals = [getattr(row, col) for row in rows]
        return all(np.isfinite(v) for v in vals) and all(b < a for a, b in zip(vals, vals[1:]))

    verdicts = {c: decays(c) for c in ("F_over_eta", "A_over_eta", "G_over_eta")}
    if model.source is not None:
        verdicts["P_over_eta"] = decays("P_over_eta")
    return GrowthTable(rows=rows, p=p, decay_verdicts=verdicts)


def run_all_checks(
    model: Model1D, plan: SamplePlan, tol: Optional[float] = None, include: Optional[list] = None
) -> HypothesisReport:
    """Run every applicable check and assemble the report."""
    entries = []
    names = include or ["h1", "entropy_pair", "h3", "h4", "h5"] + (
        ["hd"] if model.source is not None else []
    ) + (["maxwell"] if model.gas is not None else [])
    for name in names:
        if name == "h1":
            entries.append(check_h1(model, plan, tol))
        elif name == "entropy_pair":
            entries.append(check_entropy_pair(model, plan, tol))
        elif name == "h3":
            entries.append(check_h3(model, plan, tol))
        elif name == "h4":
            entries.append(check_h4(model, plan))
        elif name == "h4s":
            e = check_h4(model, plan)
            entries.append(
                CheckResult(
                    "h4s",
                    passed=bool(e.details["h4s_pass"]),
                    extremal_value=e.extremal_value,
                    tolerance=e.tolerance,
                    witness_state=e.witness_state,
                    details={"nu_min": e.details["nu_min"], "N_max": e.details["N_max"]},
                )
            )
        elif name == "h5":
            entries.append(check_h5(model, plan))
        elif name == "hd":
            entries.append(check_hd(model, plan))
        elif name == "maxwell":
            entries.append(check_maxwell(model, plan))
        else:
            raise KeyError(f"unknown check {name!r}")
    info = {
        "derivative_path": model.derivative_path,
        "n": model.n,
        "seed": plan.seed,
    }
    return HypothesisReport(entries=entries, model_info=info)
