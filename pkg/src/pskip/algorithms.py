"""Gossip optimization with probabilistic communication skipping.

The primal-dual update (one shared coin per iteration):

    Zhat = X - alpha * G - Y
    theta = 1:  X+ = Wa Zhat,  Y+ = Y + beta * (Zhat - X+)   (communicate)
    theta = 0:  X+ = Zhat,     Y+ = Y                         (skip)

plus the algebraically equivalent square-root form driven by auxiliary
iterates U (requires beta = p and Y0 = 0), and local-DSGD as the
client-drift baseline. Family-specific hot loops are dispatched through
:mod:`pskip.kernels`; anything else runs the generic per-step oracle path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from pskip import kernels
from pskip import reference as refmod
from pskip.problems import LogisticProblem, QuadraticProblem
from pskip.topology import AugmentedMixing, MixingMatrix, augment

__all__ = [
    "HyperParams",
    "CoinSequence",
    "AlgorithmState",
    "RunTrace",
    "DivergenceError",
    "ContractViolation",
    "proxskip_step",
    "proxskip_run",
    "proxskip_run_dual_form",
    "local_dsgd_run",
    "count_comms_to_accuracy",
    "kkt_residuals",
    "theorem1_chi",
    "theorem1_stepsize",
    "BASELINES",
]

# child-stream tags under a run's master seed
COIN_STREAM = 1
NOISE_STREAM = 2

_CHUNK = 4096

METRIC_NAMES = ("rel_error", "grad_norm_sq", "consensus_err", "fgap", "dist_sq")


class DivergenceError(RuntimeError):
    """A non-finite iterate appeared; carries the iteration index."""

    def __init__(self, t: int):
        super().__init__(f"non-finite iterate at t={t}")
        self.t = t


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class HyperParams:
    """Stepsizes, communication probability, averaging strength, budget."""

    alpha: float
    beta: float
    p: float
    chi: float = 1.0
    T: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not (0 < self.p <= 1):
            raise ValueError(f"p must lie in (0,1], got {self.p}")
        if self.chi < 1:
            raise ValueError(f"chi must be >= 1, got {self.chi}")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")

    @classmethod
    def lemma1(cls, alpha: float, p: float, T: int, seed: int = 0) -> "HyperParams":
        """beta = p, chi = 1 (requires alpha <= 1/L to contract)."""
        return cls(alpha=alpha, beta=p, p=p, chi=1.0, T=T, seed=seed)

    @classmethod
    def theorem1(cls, alpha: float, p: float, lambda2: float, T: int,
                 seed: int = 0) -> "HyperParams":
        """beta = 1 with the inflated averaging parameter chi."""
        return cls(alpha=alpha, beta=1.0, p=p,
                   chi=theorem1_chi(p, lambda2), T=T, seed=seed)

    def with_seed(self, seed: int) -> "HyperParams":
        return replace(self, seed=seed)


def theorem1_chi(p: float, lambda2: float) -> float:
    return max(1.0, 288.0 * (1.0 - p) / (1.0 - lambda2))


def theorem1_stepsize(L: float, lambda2: float, lambdaN: float,
                      chi: float) -> float:
    """Largest stepsize admitted by the beta=1 convergence condition."""
    gap = 1.0 - lambda2
    c1 = 1.0 / (2 * L)
    c2 = gap / (32 * np.sqrt(3.0) * chi * L)
    c3 = np.sqrt((1.0 + lambdaN) * gap / (2 * chi)) / (2 * L)
    c4 = (gap**3 / (12 * chi**3)) ** 0.25 / (4 * L)
    return float(min(c1, c2, c3, c4))


@dataclass(frozen=True)
class CoinSequence:
    """The shared communication coins theta_0..theta_{T-1}.

    One global coin per iteration, flipped ahead of the run and derived
    deterministically from (seed, stream id). The underlying uniforms are
    drawn independently of p, so sequences at different p are monotonically
    coupled: lowering p can only turn 1s into 0s.
    """

    bits: np.ndarray
    p: float

    @classmethod
    def generate(cls, T: int, p: float, seed: int) -> "CoinSequence":
        if not (0 < p <= 1):
            raise ValueError(f"p must lie in (0,1], got {p}")
        rng = np.random.default_rng(np.random.SeedSequence([seed, COIN_STREAM]))
        bits = (rng.random(T) < p).astype(np.uint8)
        return cls(bits=bits, p=p)

    def __len__(self) -> int:
        return int(self.bits.shape[0])


@dataclass
class AlgorithmState:
    """Stacked iterates, control variates, and counters."""

    X: np.ndarray
    Y: np.ndarray
    t: int = 0
    comms: int = 0

    @classmethod
    def initial(cls, n: int, d: int, x0: np.ndarray) -> "AlgorithmState":
        X = np.tile(np.asarray(x0, dtype=np.float64), (n, 1))
        return cls(X=X, Y=np.zeros((n, d)), t=0, comms=0)


@dataclass
class RunTrace:
    """Per-iteration metric records plus whole-run step diagnostics.

    Row 0 is the initial state; row k > 0 is the state after trace.t[k]
    iterations. ``max_mean_iter_violation`` and ``max_ysum_violation`` are
    maxima over every executed step of ||xbar+ - (xbar - alpha*gbar)|| and
    of the column sums of Y.
    """

    t: np.ndarray
    comms: np.ndarray
    rel_error: np.ndarray
    grad_norm_sq: np.ndarray
    consensus_err: np.ndarray
    fgap: np.ndarray
    dist_sq: np.ndarray
    absolute_mode: bool
    max_mean_iter_violation: float
    max_ysum_violation: float
    algorithm: str
    seed: int
    final_X: np.ndarray | None = None
    final_Y: np.ndarray | None = None
    final_U: np.ndarray | None = None
    iterates: np.ndarray | None = field(default=None, repr=False)

    def metric(self, name: str) -> np.ndarray:
        if name not in METRIC_NAMES:
            raise KeyError(f"unknown metric {name!r}; have {METRIC_NAMES}")
        return getattr(self, name)

    def __len__(self) -> int:
        return int(self.t.shape[0])


def _noise_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, NOISE_STREAM]))


def _as_x0(problem, x0) -> np.ndarray:
    if x0 is None:
        return np.zeros(problem.d)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 0:
        return np.full(problem.d, float(x0))
    if x0.shape != (problem.d,):
        raise ValueError(f"x0 must be scalar or shape ({problem.d},)")
    return x0.copy()


def _record_steps(T: int, stride: int) -> np.ndarray:
    """Global step indices (1-based) whose post-state gets a trace row."""
    if T == 0:
        return np.zeros(0, dtype=np.int64)
    if stride <= 1:
        return np.arange(1, T + 1, dtype=np.int64)
    ts = np.arange(stride, T + 1, stride, dtype=np.int64)
    if ts.size == 0 or ts[-1] != T:
        ts = np.append(ts, T)
    return ts


def _metrics_row_generic(problem, X, ref, metrics, row):
    xbar = X.mean(axis=0)
    rel, _abs = refmod.relative_error(xbar, ref)
    g = problem.full_grad(xbar)
    metrics[row, 0] = rel
    metrics[row, 1] = float(g @ g)
    metrics[row, 2] = float(np.sum((X - xbar) ** 2)) / X.shape[0]
    metrics[row, 3] = problem.full_value(xbar) - ref.fstar
    metrics[row, 4] = float(np.sum((xbar - ref.xstar) ** 2))


def _make_trace(algorithm, seed, rec_ts, metrics, comms_arr, absolute_mode,
                viol_mean, viol_ysum, X, Y=None, U=None, iterates=None):
    return RunTrace(
        t=np.concatenate(([0], rec_ts)),
        comms=comms_arr,
        rel_error=metrics[:, 0].copy(),
        grad_norm_sq=metrics[:, 1].copy(),
        consensus_err=metrics[:, 2].copy(),
        fgap=metrics[:, 3].copy(),
        dist_sq=metrics[:, 4].copy(),
        absolute_mode=absolute_mode,
        max_mean_iter_violation=viol_mean,
        max_ysum_violation=viol_ysum,
        algorithm=algorithm,
        seed=seed,
        final_X=X,
        final_Y=Y,
        final_U=U,
        iterates=iterates,
    )


def proxskip_step(state: AlgorithmState, problem, w_aug: AugmentedMixing,
                  hp: HyperParams, theta: int,
                  rng: np.random.Generator | None = None,
                  noise: np.ndarray | None = None) -> AlgorithmState:
    """One update of the skipping iteration (generic oracle path).

    The stochastic gradients are either exact gradients plus a supplied
    ``noise`` block of shape (n, d), or drawn per node from ``rng`` through
    the problem's own oracle. Raises :class:`DivergenceError` if the new
    iterate is non-finite.
    """
    X, Y = state.X, state.Y
    n = X.shape[0]
    if noise is not None:
        G = np.empty_like(X)
        for i in range(n):
            G[i] = problem.grad_i(i, X[i]) + noise[i]
    else:
        if rng is None:
            rng = np.random.default_rng()
        G = np.empty_like(X)
        for i in range(n):
            G[i] = problem.stochastic_grad_i(i, X[i], rng)
    Z = X - hp.alpha * G - Y
    if theta:
        Xn = w_aug.Wa @ Z
        Yn = Y + hp.beta * (Z - Xn)
        comms = state.comms + 1
    else:
        Xn = Z
        Yn = Y
        comms = state.comms
    if not np.all(np.isfinite(Xn)):
        raise DivergenceError(state.t)
    return AlgorithmState(X=Xn, Y=Yn, t=state.t + 1, comms=comms)


def _run_generic(problem, w_aug, hp, x0, ref, record_stride, keep_iterates,
                 algorithm_name="proxskip"):
    n, d = problem.n, problem.d
    state = AlgorithmState.initial(n, d, x0)
    coins = CoinSequence.generate(hp.T, hp.p, hp.seed)
    rng = _noise_rng(hp.seed)
    sig = np.sqrt(getattr(problem, "sigma2", 0.0))

    rec_ts = _record_steps(hp.T, record_stride)
    R = rec_ts.shape[0]
    metrics = np.zeros((R + 1, 5))
    comms_arr = np.zeros(R + 1, dtype=np.int64)
    _metrics_row_generic(problem, state.X, ref, metrics, 0)
    iterates = np.zeros((R + 1, n, d)) if keep_iterates else None
    if keep_iterates:
        iterates[0] = state.X

    viol_mean = 0.0
    viol_ysum = 0.0
    row = 1
    t0 = 0
    while t0 < hp.T:
        k = min(_CHUNK, hp.T - t0)
        noise = rng.standard_normal((k, n, d)) * sig if sig > 0 else np.zeros((k, n, d))
        for j in range(k):
            xbar_old = state.X.mean(axis=0)
            state, G = _step_with_grads(state, problem, w_aug, hp,
                                        int(coins.bits[t0 + j]), noise[j])
            viol_mean = max(viol_mean, float(np.linalg.norm(
                state.X.mean(axis=0) - (xbar_old - hp.alpha * G.mean(axis=0)))))
            viol_ysum = max(viol_ysum, float(np.max(np.abs(state.Y.sum(axis=0)))))
            if row <= R and rec_ts[row - 1] == t0 + j + 1:
                _metrics_row_generic(problem, state.X, ref, metrics, row)
                comms_arr[row] = state.comms
                if keep_iterates:
                    iterates[row] = state.X
                row += 1
        t0 += k

    absolute_mode = ref.xstar_norm == 0.0
    return _make_trace(algorithm_name, hp.seed, rec_ts, metrics, comms_arr,
                       absolute_mode, viol_mean, viol_ysum,
                       state.X, state.Y, iterates=iterates)


def _step_with_grads(state, problem, w_aug, hp, theta, noise):
    """proxskip_step body that also returns the drawn gradients."""
    X, Y = state.X, state.Y
    G = np.empty_like(X)
    for i in range(X.shape[0]):
        G[i] = problem.grad_i(i, X[i]) + noise[i]
    Z = X - hp.alpha * G - Y
    if theta:
        Xn = w_aug.Wa @ Z
        Yn = Y + hp.beta * (Z - Xn)
        comms = state.comms + 1
    else:
        Xn = Z
        Yn = Y
        comms = state.comms
    if not np.all(np.isfinite(Xn)):
        raise DivergenceError(state.t)
    return AlgorithmState(X=Xn, Y=Yn, t=state.t + 1, comms=comms), G


def _quad_arrays(problem: QuadraticProblem):
    h = problem.scales**2
    C = problem.scales[:, None] * problem.b
    hbar = float(np.mean(h))
    q = C.mean(axis=0)
    b2term = 0.5 * float(np.mean(np.sum(problem.b**2, axis=1)))
    return h, C, hbar, q, b2term


def _logit_arrays(problem: LogisticProblem):
    A = np.ascontiguousarray(np.vstack(problem.features))
    yv = np.concatenate(problem.labels).astype(np.float64)
    sizes = [len(v) for v in problem.labels]
    ptr = np.zeros(len(sizes) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(sizes)
    reg_kind = 0 if problem.regularizer[0] == "l2" else 1
    reg_c = float(problem.regularizer[1]) if reg_kind == 0 else 0.0
    return A, yv, ptr, reg_kind, reg_c


def _run_kernel(problem, w_aug, hp, x0, ref, record_stride, backend,
                algorithm, K=1):
    """Chunked kernel driver for both families and both algorithms."""
    ker = kernels.get_kernels(backend)
    n, d = problem.n, problem.d
    X = np.tile(x0, (n, 1))
    Y = np.zeros((n, d))
    T = hp.T
    coins = CoinSequence.generate(T, hp.p, hp.seed).bits
    rng = _noise_rng(hp.seed)
    sig = np.sqrt(problem.sigma2)

    rec_ts = _record_steps(T, record_stride)
    R = rec_ts.shape[0]
    metrics = np.zeros((R + 1, 5))
    comms_arr = np.zeros(R + 1, dtype=np.int64)

    xstar = ref.xstar
    xstar_norm = ref.xstar_norm
    fstar = ref.fstar

    quad = isinstance(problem, QuadraticProblem)
    if quad:
        h, C, hbar, q, b2term = _quad_arrays(problem)
        ker.quad_metrics_row(X, X.mean(axis=0), hbar, q, b2term, xstar,
                             xstar_norm, fstar, metrics, 0)
    else:
        A, yv, ptr, reg_kind, reg_c = _logit_arrays(problem)
        ker.logit_metrics_row(X, X.mean(axis=0), A, yv, ptr, reg_kind,
                              reg_c, xstar, xstar_norm, fstar, metrics, 0)

    Wmat = w_aug.Wa if algorithm == "proxskip" else w_aug.mixing.W
    viol_mean = 0.0
    viol_ysum = 0.0
    comms = 0
    t0 = 0
    while t0 < T:
        k = min(_CHUNK, T - t0)
        noise = rng.standard_normal((k, n, d)) * sig if sig > 0 else np.zeros((k, n, d))
        lo = np.searchsorted(rec_ts, t0 + 1)
        hi = np.searchsorted(rec_ts, t0 + k, side="right")
        rec_rows = np.full(k, -1, dtype=np.int64)
        for r in range(lo, hi):
            rec_rows[rec_ts[r] - t0 - 1] = r + 1  # +1: row 0 is initial state

        if algorithm == "proxskip":
            if quad:
                div, comms, vm, vy = ker.proxskip_quad_chunk(
                    X, Y, h, C, hbar, q, b2term, Wmat, hp.alpha, hp.beta,
                    coins[t0:t0 + k], noise, rec_rows, xstar, xstar_norm,
                    fstar, metrics, comms_arr, comms)
            else:
                div, comms, vm, vy = ker.proxskip_logit_chunk(
                    X, Y, A, yv, ptr, reg_kind, reg_c, Wmat, hp.alpha,
                    hp.beta, coins[t0:t0 + k], noise, rec_rows, xstar,
                    xstar_norm, fstar, metrics, comms_arr, comms)
        else:
            if quad:
                div, comms, vm, vy = ker.dsgd_quad_chunk(
                    X, h, C, hbar, q, b2term, Wmat, hp.alpha, K, t0,
                    noise, rec_rows, xstar, xstar_norm, fstar,
                    metrics, comms_arr, comms)
            else:
                div, comms, vm, vy = ker.dsgd_logit_chunk(
                    X, A, yv, ptr, reg_kind, reg_c, Wmat, hp.alpha, K, t0,
                    noise, rec_rows, xstar, xstar_norm, fstar,
                    metrics, comms_arr, comms)
        viol_mean = max(viol_mean, vm)
        viol_ysum = max(viol_ysum, vy)
        if div >= 0:
            raise DivergenceError(t0 + int(div))
        t0 += k

    absolute_mode = xstar_norm == 0.0
    return _make_trace(algorithm, hp.seed, rec_ts, metrics, comms_arr,
                       absolute_mode, viol_mean, viol_ysum, X,
                       Y if algorithm == "proxskip" else None)


def proxskip_run(problem, w: MixingMatrix, hp: HyperParams, x0=None, *,
                 ref=None, backend=None, record_stride: int = 1,
                 keep_iterates: bool = False) -> RunTrace:
    """Run T iterations from a common start x0 with Y0 = 0.

    All nodes share the coin sequence and consume per-node noise from one
    child stream of hp.seed, so equal seeds give bitwise-identical traces.
    ``backend`` may be "numba", "numpy", "generic" (per-step oracle path),
    or None for the configured default.
    """
    if ref is None:
        ref = refmod.solve(problem)
    x0 = _as_x0(problem, x0)
    w_aug = augment(w, hp.chi)
    if keep_iterates or backend == "generic" or not isinstance(
            problem, (QuadraticProblem, LogisticProblem)):
        return _run_generic(problem, w_aug, hp, x0, ref, record_stride,
                            keep_iterates)
    return _run_kernel(problem, w_aug, hp, x0, ref, record_stride, backend,
                       "proxskip")


def proxskip_run_dual_form(problem, w: MixingMatrix, hp: HyperParams,
                           x0=None, *, ref=None, record_stride: int = 1,
                           keep_iterates: bool = False) -> RunTrace:
    """Square-root-form run: identical X sequence to :func:`proxskip_run`.

    Requires beta = p (the equivalence premise with Y0 = 0); consumes the
    same coin and noise streams, so matched seeds reproduce the primal
    iterates up to floating-point roundoff.
    """
    if hp.beta != hp.p:
        raise ContractViolation(
            f"dual form requires beta == p, got beta={hp.beta}, p={hp.p}")
    if ref is None:
        ref = refmod.solve(problem)
    x0 = _as_x0(problem, x0)
    w_aug = augment(w, hp.chi)
    Wb = w_aug.Wb
    n, d = problem.n, problem.d
    X = np.tile(x0, (n, 1))
    U = np.zeros((n, d))
    coins = CoinSequence.generate(hp.T, hp.p, hp.seed)
    rng = _noise_rng(hp.seed)
    sig = np.sqrt(getattr(problem, "sigma2", 0.0))

    rec_ts = _record_steps(hp.T, record_stride)
    R = rec_ts.shape[0]
    metrics = np.zeros((R + 1, 5))
    comms_arr = np.zeros(R + 1, dtype=np.int64)
    _metrics_row_generic(problem, X, ref, metrics, 0)
    iterates = np.zeros((R + 1, n, d)) if keep_iterates else None
    if keep_iterates:
        iterates[0] = X

    viol_mean = 0.0
    comms = 0
    row = 1
    t0 = 0
    scale = hp.beta / (2.0 * hp.chi * hp.alpha)
    while t0 < hp.T:
        k = min(_CHUNK, hp.T - t0)
        noise = rng.standard_normal((k, n, d)) * sig if sig > 0 else np.zeros((k, n, d))
        for j in range(k):
            G = np.empty_like(X)
            for i in range(n):
                G[i] = problem.grad_i(i, X[i]) + noise[j, i]
            Z = X - hp.alpha * G - hp.alpha * (Wb @ U)
            theta = int(coins.bits[t0 + j])
            if theta:
                dU = scale * (Wb @ Z)
                U = U + dU
                Xn = Z - (hp.alpha / hp.beta) * (Wb @ dU)
                comms += 1
            else:
                Xn = Z
            if not np.all(np.isfinite(Xn)):
                raise DivergenceError(t0 + j)
            viol_mean = max(viol_mean, float(np.linalg.norm(
                Xn.mean(axis=0) - (X.mean(axis=0) - hp.alpha * G.mean(axis=0)))))
            X = Xn
            if row <= R and rec_ts[row - 1] == t0 + j + 1:
                _metrics_row_generic(problem, X, ref, metrics, row)
                comms_arr[row] = comms
                if keep_iterates:
                    iterates[row] = X
                row += 1
        t0 += k

    return _make_trace("proxskip_dual", hp.seed, rec_ts, metrics, comms_arr,
                       ref.xstar_norm == 0.0, viol_mean, 0.0, X,
                       U=U, iterates=iterates)


def local_dsgd_run(problem, w: MixingMatrix, alpha: float, K: int,
                   T_rounds: int, seed: int, x0=None, *, ref=None,
                   backend=None, record_stride: int = 1) -> RunTrace:
    """Local SGD baseline: K local steps, then one gossip X <- W X.

    Metrics are recorded per inner iteration (K * T_rounds of them), so
    traces align with the skipping method at matched iteration counts.
    """
    if K < 1:
        raise ValueError(f"need K >= 1, got {K}")
    if ref is None:
        ref = refmod.solve(problem)
    x0 = _as_x0(problem, x0)
    T = K * T_rounds
    # beta/p/chi are irrelevant to the baseline; reuse HyperParams for the
    # seed/T plumbing only.
    hp = HyperParams(alpha=alpha, beta=1.0, p=1.0, chi=1.0, T=T, seed=seed)
    if isinstance(problem, (QuadraticProblem, LogisticProblem)):
        w_aug = augment(w, 1.0)
        return _run_kernel(problem, w_aug, hp, x0, ref, record_stride,
                           backend, "local_dsgd", K=K)
    # generic fallback
    n, d = problem.n, problem.d
    X = np.tile(x0, (n, 1))
    rng = _noise_rng(seed)
    sig = np.sqrt(getattr(problem, "sigma2", 0.0))
    rec_ts = _record_steps(T, record_stride)
    R = rec_ts.shape[0]
    metrics = np.zeros((R + 1, 5))
    comms_arr = np.zeros(R + 1, dtype=np.int64)
    _metrics_row_generic(problem, X, ref, metrics, 0)
    viol_mean = 0.0
    comms = 0
    row = 1
    for t in range(T):
        noise = rng.standard_normal((1, n, d))[0] * sig if sig > 0 else np.zeros((n, d))
        G = np.empty_like(X)
        for i in range(n):
            G[i] = problem.grad_i(i, X[i]) + noise[i]
        Xn = X - alpha * G
        if (t + 1) % K == 0:
            Xn = w.W @ Xn
            comms += 1
        if not np.all(np.isfinite(Xn)):
            raise DivergenceError(t)
        viol_mean = max(viol_mean, float(np.linalg.norm(
            Xn.mean(axis=0) - (X.mean(axis=0) - alpha * G.mean(axis=0)))))
        X = Xn
        if row <= R and rec_ts[row - 1] == t + 1:
            _metrics_row_generic(problem, X, ref, metrics, row)
            comms_arr[row] = comms
            row += 1
    return _make_trace("local_dsgd", seed, rec_ts, metrics, comms_arr,
                       ref.xstar_norm == 0.0, viol_mean, 0.0, X)


def count_comms_to_accuracy(trace: RunTrace, eps: float,
                            metric: str = "rel_error"):
    """First communication-round count at which the metric is <= eps.

    Returns None if the threshold is never reached.
    """
    vals = trace.metric(metric)
    hits = np.nonzero(vals <= eps)[0]
    if hits.size == 0:
        return None
    return int(trace.comms[hits[0]])


def kkt_residuals(problem, w_aug: AugmentedMixing, X: np.ndarray,
                  U: np.ndarray) -> tuple[float, float]:
    """Residuals of the fixed-point conditions of the square-root form:
    ||grad F(X) + Wb U||_F (stationarity) and ||Wb X||_F (consensus)."""
    G = np.vstack([problem.grad_i(i, X[i]) for i in range(problem.n)])
    r1 = float(np.linalg.norm(G + w_aug.Wb @ U))
    r2 = float(np.linalg.norm(w_aug.Wb @ X))
    return r1, r2


# Baseline registry: anything with the local_dsgd_run calling convention can
# plug in here (state/trace contract identical); only local-DSGD ships.
BASELINES = {"local_dsgd": local_dsgd_run}
