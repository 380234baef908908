"""Implicit stage solvers and the fixed-step simulation loop.

Sign convention throughout: flows are f = -xdot, so stage updates read
x_i = x0 - h sum_j a_ij f_j.

Linear models with constant structure are advanced by one direct solve of the
stage system (the matrix is factored once per run); everything else goes
through Newton iteration on the stacked stage states with a finite-difference
Jacobian.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import collocation as coll
from .errors import ConfigurationError, SolverDivergenceError
from .models import PORTLEVEL, STAGEWISE, PartitionedPHModel, zero_input


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 50
    method: str = "auto"  # auto | direct-linear | newton

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigurationError("need tol > 0 and max_iter >= 1")
        if self.method not in ("auto", "direct-linear", "newton"):
            raise ConfigurationError(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class StageSolution:
    """Discrete flows, efforts, inputs and states of one sampling interval."""

    t0: float
    h: float
    x0: np.ndarray
    stage_x: np.ndarray  # (s, n)
    f: np.ndarray        # (s, n)
    e: np.ndarray        # (s, n)
    u: np.ndarray        # (s, m)
    y: np.ndarray        # (s, m) discrete output, rows G_i' (M e)_i
    x_end: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    partitioned: bool = False


@dataclass
class Trajectory:
    scheme_label: str
    model_name: str
    h: float
    times: np.ndarray
    states: np.ndarray               # (N+1, n)
    dh_tilde: np.ndarray             # (N,)
    dh_bar: np.ndarray               # (N,)
    supplied: np.ndarray             # (N,) h (y^k)' u^k
    stage_solutions: list = field(default_factory=list)


def _input_samples(input_signal, feedback, t0, h, c, m):
    """Stage samples of the exogenous signal (u, or v under feedback)."""
    if m == 0:
        return np.zeros((len(c), 0))
    sig = feedback.v if feedback is not None else input_signal
    if sig is None:
        sig = zero_input(m)
    return np.array([sig(t0 + ci * h) for ci in c]).reshape(len(c), m)


class _LinearStepper:
    """Direct stage solve for linear models with constant J and G."""

    def __init__(self, model, scheme, input_signal, h, feedback, cfg):
        self.model = model
        self.scheme = scheme
        self.input_signal = input_signal
        self.h = h
        self.feedback = feedback
        n, s = model.n, scheme.s
        self.n, self.s = n, s
        probe = np.zeros(n)
        self.Jc = model.J(probe)
        self.Gc = model.G(probe)
        self.Q = model.Q
        A, M = scheme.A, scheme.M
        drift = self.Jc @ self.Q
        mat = np.eye(s * n) - h * np.kron(A, drift)
        r = 0.0 if feedback is None else feedback.r
        if r > 0.0:
            GGQ = self.Gc @ self.Gc.T @ self.Q
            T = A if feedback.mode == STAGEWISE else A @ M
            mat += h * r * np.kron(T, GGQ)
            K = np.eye(s) if feedback.mode == STAGEWISE else M
            self.K = np.kron(K, self.Gc.T @ self.Q)
        else:
            self.K = None
        self.r = r
        self.mat_inv = np.linalg.inv(mat)
        self.AkG = h * np.kron(A, self.Gc)

    def H(self, x):
        return self.model.H(x)

    def step(self, x0, t0) -> StageSolution:
        s, n, h = self.s, self.n, self.h
        w = _input_samples(self.input_signal, self.feedback, t0, h,
                           self.scheme.c, self.model.m)
        rhs = np.tile(x0, s) + self.AkG @ w.ravel()
        X = self.mat_inv @ rhs
        stage_x = X.reshape(s, n)
        e = stage_x @ self.Q.T
        u = w if self.K is None else w - self.r * (self.K @ X).reshape(s, -1)
        f = -(e @ self.Jc.T + u @ self.Gc.T)
        x_end = x0 - h * (self.scheme.b @ f)
        y = (self.scheme.M @ e) @ self.Gc
        return StageSolution(t0=t0, h=h, x0=np.asarray(x0, dtype=float),
                             stage_x=stage_x, f=f, e=e, u=u, y=y, x_end=x_end)


class _NewtonStepper:
    """Newton iteration on the stacked stage states, FD Jacobian."""

    def __init__(self, model, scheme, input_signal, h, feedback, cfg):
        self.model = model
        self.scheme = scheme
        self.input_signal = input_signal
        self.h = h
        self.feedback = feedback
        self.cfg = cfg
        self.n, self.s, self.m = model.n, scheme.s, model.m

    def H(self, x):
        return self.model.H(x)

    def _stage_efu(self, stage_x, w):
        model, s, m = self.model, self.s, self.m
        e = np.array([model.gradH(x) for x in stage_x])
        Gs = [model.G(x) for x in stage_x]
        if self.feedback is not None and self.feedback.r > 0.0 and m > 0:
            r = self.feedback.r
            if self.feedback.mode == STAGEWISE:
                u = w - r * np.array([Gs[i].T @ e[i] for i in range(s)])
            else:
                Me = self.scheme.M @ e
                u = w - r * np.array([Gs[i].T @ Me[i] for i in range(s)])
        else:
            u = w
        f = np.empty_like(e)
        for i in range(s):
            f[i] = -(self.model.J(stage_x[i]) @ e[i])
            if m > 0:
                f[i] -= Gs[i] @ u[i]
        return e, u, f

    def _residual(self, X, x0, w):
        stage_x = X.reshape(self.s, self.n)
        _, _, f = self._stage_efu(stage_x, w)
        R = stage_x - x0[None, :] + self.h * (self.scheme.A @ f)
        return R.ravel()

    def step(self, x0, t0) -> StageSolution:
        s, n, h = self.s, self.n, self.h
        x0 = np.asarray(x0, dtype=float)
        w = _input_samples(self.input_signal, self.feedback, t0, h,
                           self.scheme.c, self.m)
        X = np.tile(x0, s)
        tol = self.cfg.tol
        fd_step = np.sqrt(np.finfo(float).eps) * (1.0 + np.linalg.norm(x0))
        res = np.inf
        lu = None
        for it in range(1, self.cfg.max_iter + 1):
            R = self._residual(X, x0, w)
            prev, res = res, float(np.max(np.abs(R)))
            if res <= tol:
                break
            # modified Newton: keep the factored Jacobian while the residual
            # contracts, rebuild when progress stalls
            if lu is None or res > 0.5 * prev:
                Jac = np.empty((s * n, s * n))
                for k in range(s * n):
                    Xp = X.copy()
                    Xp[k] += fd_step
                    Jac[:, k] = (self._residual(Xp, x0, w) - R) / fd_step
                lu = np.linalg.inv(Jac)
            X = X - lu @ R
        else:
            raise SolverDivergenceError(
                f"stage equations did not converge below {tol} "
                f"in {self.cfg.max_iter} iterations", residual=res)
        stage_x = X.reshape(s, n)
        e, u, f = self._stage_efu(stage_x, w)
        x_end = x0 - h * (self.scheme.b @ f)
        Me = self.scheme.M @ e
        y = np.array([self.model.G(stage_x[i]).T @ Me[i] for i in range(s)])
        return StageSolution(t0=t0, h=h, x0=x0, stage_x=stage_x, f=f, e=e,
                             u=u, y=y.reshape(s, self.m), x_end=x_end,
                             iterations=it, residual=res)


class _PartitionedStepper:
    """Direct stage solve for the Lobatto IIIA/IIIB pair on a linear
    partitioned mechanical system; states stacked as x = (q, p)."""

    def __init__(self, pmodel, scheme, input_signal, h, feedback, cfg):
        if scheme.kind != coll.LOBATTO:
            raise ConfigurationError("partitioned models require a Lobatto pair")
        self.pmodel = pmodel
        self.scheme = scheme
        self.input_signal = input_signal
        self.h = h
        self.feedback = feedback
        n, s = pmodel.n, scheme.s
        self.n, self.s = n, s
        Q, P, G = pmodel.Q, pmodel.P, pmodel.G
        A, Ah, M = scheme.A, scheme.A_hat, scheme.M
        Isn = np.eye(s * n)
        r = 0.0 if feedback is None else feedback.r
        lower_right = Isn.copy()
        if r > 0.0:
            GGP = G @ G.T @ P
            T = Ah if feedback.mode == STAGEWISE else Ah @ M
            lower_right += h * r * np.kron(T, GGP)
            K = np.eye(s) if feedback.mode == STAGEWISE else M
            self.K = np.kron(K, G.T @ P)
        else:
            self.K = None
        self.r = r
        big = np.block([[Isn, -h * np.kron(A, P)],
                        [h * np.kron(Ah, Q), lower_right]])
        self.big_inv = np.linalg.inv(big)
        self.AhkG = h * np.kron(Ah, G)

    def H(self, x):
        n = self.n
        return self.pmodel.H(x[:n], x[n:])

    def step(self, x0, t0) -> StageSolution:
        s, n, h = self.s, self.n, self.h
        pm = self.pmodel
        x0 = np.asarray(x0, dtype=float)
        q0, p0 = x0[:n], x0[n:]
        w = _input_samples(self.input_signal, self.feedback, t0, h,
                           self.scheme.c, pm.m)
        rhs = np.concatenate([np.tile(q0, s),
                              np.tile(p0, s) + self.AhkG @ w.ravel()])
        Z = self.big_inv @ rhs
        q_st = Z[:s * n].reshape(s, n)
        p_st = Z[s * n:].reshape(s, n)
        e_q = q_st @ pm.Q.T
        e_p = p_st @ pm.P.T
        if self.K is None:
            u = w
        else:
            u = w - self.r * (self.K @ Z[s * n:]).reshape(s, -1)
        f_q = -e_p
        f_p = e_q - u @ pm.G.T
        b = self.scheme.b
        q_end = q0 - h * (b @ f_q)
        p_end = p0 - h * (b @ f_p)
        y = (self.scheme.M @ e_p) @ pm.G
        return StageSolution(
            t0=t0, h=h, x0=x0,
            stage_x=np.hstack([q_st, p_st]),
            f=np.hstack([f_q, f_p]),
            e=np.hstack([e_q, e_p]),
            u=u, y=y,
            x_end=np.concatenate([q_end, p_end]),
            partitioned=True)


def _make_stepper(model, scheme, input_signal, h, feedback, cfg):
    if isinstance(model, PartitionedPHModel):
        return _PartitionedStepper(model, scheme, input_signal, h, feedback, cfg)
    if cfg.method == "direct-linear" and not (model.linear and model.constant_structure):
        raise ConfigurationError("direct-linear solve needs a linear constant-structure model")
    if cfg.method != "newton" and model.linear and model.constant_structure:
        return _LinearStepper(model, scheme, input_signal, h, feedback, cfg)
    return _NewtonStepper(model, scheme, input_signal, h, feedback, cfg)


def solve_stages(model, scheme, x0, input_signal, t0, h,
                 cfg: SolverConfig | None = None, feedback=None) -> StageSolution:
    """Solve the implicit stage equations of one sampling interval."""
    if h <= 0:
        raise ConfigurationError("step size h must be positive")
    cfg = cfg or SolverConfig()
    stepper = _make_stepper(model, scheme, input_signal, h, feedback, cfg)
    return stepper.step(np.asarray(x0, dtype=float), t0)


def solve_stages_partitioned(pmodel, scheme, q0, p0, input_signal, t0, h,
                             cfg: SolverConfig | None = None,
                             feedback=None) -> StageSolution:
    """Partitioned variant: IIIA tableau on the q-stages, IIIB on the p-stages."""
    x0 = np.concatenate([np.atleast_1d(np.asarray(q0, dtype=float)),
                         np.atleast_1d(np.asarray(p0, dtype=float))])
    return solve_stages(pmodel, scheme, x0, input_signal, t0, h, cfg, feedback)


def step(model, scheme, x0, input_signal, t0, h,
         cfg: SolverConfig | None = None, feedback=None):
    """One integration step; returns (x_end, StageSolution)."""
    sol = solve_stages(model, scheme, x0, input_signal, t0, h, cfg, feedback)
    return sol.x_end, sol


def dense_eval(sol: StageSolution, scheme, tau: float) -> np.ndarray:
    """Collocation polynomial x(t0 + tau h) = x0 - h sum_j f_j int_0^tau l_j."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    weights = coll.lagrange_integral_weights(scheme.c, tau)
    return sol.x0 - sol.h * (weights @ sol.f)


def simulate(model, scheme, x0, input_signal, h, t_end,
             feedback=None, cfg: SolverConfig | None = None,
             retain_stages: bool = False) -> Trajectory:
    """Run N = t_end / h fixed steps, chaining intervals and recording the
    per-step energy triple (dH_tilde, dH_bar, supplied)."""
    if h <= 0:
        raise ConfigurationError("step size h must be positive")
    n_float = t_end / h
    N = int(round(n_float))
    if N < 1 or abs(n_float - N) > 1e-9 * max(1.0, N):
        raise ConfigurationError(f"t_end/h = {n_float} is not an integer step count")
    cfg = cfg or SolverConfig()
    stepper = _make_stepper(model, scheme, input_signal, h, feedback, cfg)
    x = np.asarray(x0, dtype=float)
    dim = x.size
    states = np.empty((N + 1, dim))
    states[0] = x
    dh_tilde = np.empty(N)
    dh_bar = np.empty(N)
    supplied = np.empty(N)
    retained = []
    M = scheme.M
    for k in range(N):
        t0 = k * h
        try:
            sol = stepper.step(x, t0)
        except SolverDivergenceError as err:
            err.step_index = k
            raise
        dh_tilde[k] = -h * float(np.sum((M @ sol.f) * sol.e))
        dh_bar[k] = stepper.H(sol.x_end) - stepper.H(x)
        supplied[k] = h * float(np.sum(sol.y * sol.u))
        if retain_stages:
            retained.append(sol)
        x = sol.x_end
        states[k + 1] = x
    return Trajectory(scheme_label=scheme.label,
                      model_name=getattr(model, "name", ""),
                      h=h, times=np.arange(N + 1) * h, states=states,
                      dh_tilde=dh_tilde, dh_bar=dh_bar, supplied=supplied,
                      stage_solutions=retained)
