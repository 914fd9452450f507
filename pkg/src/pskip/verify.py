"""Randomized invariant suite behind ``pskip verify``.

Each property draws fresh instances from a seeded generator and checks one
contract: matrix structure, the algebraic step identities, the two-form
equivalence, fixed points, counters, and the oracle cross-checks. The seed
changes the sample, never the verdict (short of an actual bug).
"""

from __future__ import annotations

import io

import numpy as np

from pskip import reference as refmod
from pskip.algorithms import (
    AlgorithmState,
    CoinSequence,
    HyperParams,
    proxskip_run,
    proxskip_run_dual_form,
    proxskip_step,
)
from pskip.problems import (
    heterogeneity_at,
    make_quadratic,
    make_logistic,
    parse_libsvm,
    partition,
    serialize_libsvm,
    synthetic_blobs,
)
from pskip.topology import (
    augment,
    block_spectral_radii,
    gamma_bound,
    metropolis,
    random_connected,
    ring,
)

__all__ = ["run_all", "PROPERTIES"]


def _random_mixing(rng, n_range=(5, 50)):
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    iota = float(rng.uniform(0.1, 1.0))
    lo = 2.0 * (n - 1) / (n * (n - 1))  # smallest feasible ratio
    iota = max(iota, min(1.0, lo * 1.05))
    return metropolis(random_connected(n, iota, int(rng.integers(2**31))))


def check_mixing_invariants(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    for _ in range(100):
        w = _random_mixing(rng)
        try:
            w.validate()
        except AssertionError as exc:
            return False, f"n={w.n}: {exc}"
    return True, "100 random topologies"


def check_gap_monotonicity(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    n = 20
    medians = []
    for iota in (0.2, 0.5, 0.9):
        l2s = [metropolis(random_connected(n, iota, int(rng.integers(2**31)))).lambda2
               for _ in range(15)]
        medians.append(float(np.median(l2s)))
    ok = medians[0] > medians[1] > medians[2]
    return ok, f"median lambda2 at iota 0.2/0.5/0.9: " \
               f"{medians[0]:.3f}/{medians[1]:.3f}/{medians[2]:.3f}"


def check_permutation_equivariance(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    for _ in range(10):
        g = random_connected(8, 0.5, int(rng.integers(2**31)))
        perm = rng.permutation(8)
        relabeled = type(g)(n=8, edges=frozenset(
            tuple(sorted((int(perm[i]), int(perm[j])))) for (i, j) in g.edges))
        W = metropolis(g).W
        Wp = metropolis(relabeled).W
        P = np.eye(8)[perm]  # P[k, perm[k]] = 1
        if np.max(np.abs(P.T @ W @ P - Wp)) > 0:
            return False, "relabeling changed the weights"
    return True, "10 random relabelings"


def check_augmented_identity(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        w = _random_mixing(rng, n_range=(5, 30))
        chi = float(rng.uniform(1.0, 50.0))
        aug = augment(w, chi)
        n = w.n
        eye = np.eye(n)
        e1 = np.max(np.abs(aug.Wa - (eye - (eye - w.W) / (2 * chi))))
        e2 = np.linalg.norm(aug.Wb @ aug.Wb - (eye - w.W))
        e3 = np.max(np.abs((eye - aug.Wa) - aug.Wb @ aug.Wb / (2 * chi)))
        evs = np.linalg.eigvalsh(aug.Wa)
        if evs[0] < -1e-12:
            return False, f"Wa not PSD (min eig {evs[0]:.2e})"
        worst = max(worst, e1, e2, e3)
        if e1 > 1e-14 or e2 > 1e-10 or e3 > 1e-10:
            return False, f"identity error {max(e1, e2, e3):.2e}"
    return True, f"worst residual {worst:.2e}"


def check_gamma_blocks(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        w = _random_mixing(rng, n_range=(5, 30))
        chi = float(rng.uniform(1.0, 20.0))
        radii, predicted = block_spectral_radii(w, chi)
        worst = max(worst, float(np.max(np.abs(radii - predicted))))
        g = gamma_bound(w, chi)
        if abs(g - predicted[0]) > 1e-12:
            return False, "gamma != sqrt(nu_2)"
    ok = worst < 1e-8
    return ok, f"worst block-radius mismatch {worst:.2e}"


def _random_run(rng, backend=None):
    n = int(rng.integers(4, 12))
    d = int(rng.integers(2, 8))
    problem = make_quadratic(n, d, float(rng.uniform(0, 10)),
                             float(rng.uniform(0, 1)), int(rng.integers(2**31)))
    w = metropolis(random_connected(n, float(rng.uniform(0.4, 1.0)),
                                    int(rng.integers(2**31))))
    p = float(rng.uniform(0.1, 1.0))
    hp = HyperParams(alpha=float(rng.uniform(0.05, 0.9)), beta=p, p=p,
                     chi=float(rng.uniform(1.0, 4.0)), T=150,
                     seed=int(rng.integers(2**31)))
    return proxskip_run(problem, w, hp, backend=backend)


def check_mean_iterate_identity(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(12):
        tr = _random_run(rng)
        worst = max(worst, tr.max_mean_iter_violation)
    return worst <= 1e-12, f"max ||xbar+ - (xbar - a*gbar)|| = {worst:.2e}"


def check_null_sum(seed: int) -> tuple:
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(12):
        tr = _random_run(rng)
        worst = max(worst, tr.max_ysum_violation)
    return worst <= 1e-10, f"max |1'Y| = {worst:.2e}"


def check_equivalence(seed: int, y0_scale: float = 0.0) -> tuple:
    """Primal vs square-root form over 200 matched steps (beta = p).

    y0_scale != 0 deliberately breaks the Y0 = 0 premise in the primal run
    (the negative control used by the CLI tests).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(8):
        n = int(rng.integers(4, 10))
        d = int(rng.integers(2, 6))
        problem = make_quadratic(n, d, float(rng.uniform(0, 5)),
                                 float(rng.uniform(0, 1)),
                                 int(rng.integers(2**31)))
        w = metropolis(random_connected(n, float(rng.uniform(0.4, 1.0)),
                                        int(rng.integers(2**31))))
        p = float(rng.uniform(0.2, 1.0))
        hp = HyperParams(alpha=float(rng.uniform(0.05, 0.5)), beta=p, p=p,
                         chi=float(rng.uniform(1.0, 3.0)), T=200,
                         seed=int(rng.integers(2**31)))
        if y0_scale == 0.0:
            ta = proxskip_run(problem, w, hp, backend="generic",
                              keep_iterates=True)
        else:
            ta = _run_with_y0(problem, w, hp, y0_scale)
        tb = proxskip_run_dual_form(problem, w, hp, keep_iterates=True)
        diff = float(np.max(np.linalg.norm(ta.iterates - tb.iterates,
                                           axis=(1, 2))))
        worst = max(worst, diff)
    return worst < 1e-9, f"max_t ||X_primal - X_dual||_F = {worst:.2e}"


def _run_with_y0(problem, w, hp, y0_scale):
    """Primal run with a deliberately non-zero Y0 (fault injection)."""
    from pskip.algorithms import _record_steps, _make_trace  # noqa: PLC0415

    waug = augment(w, hp.chi)
    n, d = problem.n, problem.d
    state = AlgorithmState.initial(n, d, np.zeros(d))
    y0 = np.zeros((n, d))
    y0[0] = y0_scale
    y0[1] = -y0_scale  # keep column sums zero; the premise broken is Y0=0
    state.Y = y0
    coins = CoinSequence.generate(hp.T, hp.p, hp.seed)
    rng = np.random.default_rng(np.random.SeedSequence([hp.seed, 2]))
    sig = np.sqrt(problem.sigma2)
    iterates = np.zeros((hp.T + 1, n, d))
    iterates[0] = state.X
    for t in range(hp.T):
        noise = rng.standard_normal((n, d)) * sig if sig > 0 else np.zeros((n, d))
        state = proxskip_step(state, problem, waug, hp,
                              int(coins.bits[t]), noise=noise)
        iterates[t + 1] = state.X

    class _T:  # minimal stand-in carrying just the iterates
        pass

    out = _T()
    out.iterates = iterates
    return out


def check_fixed_point(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(6):
        n = int(rng.integers(4, 10))
        d = int(rng.integers(2, 6))
        problem = make_quadratic(n, d, float(rng.uniform(0.5, 5)), 0.0,
                                 int(rng.integers(2**31)))
        w = metropolis(ring(n) if n >= 3 else ring(3))
        p = float(rng.uniform(0.3, 1.0))
        hp = HyperParams(alpha=float(rng.uniform(0.1, 0.9)), beta=p, p=p,
                         chi=1.0, T=50, seed=int(rng.integers(2**31)))
        waug = augment(w, hp.chi)
        xstar = problem.xstar()
        X = np.tile(xstar, (n, 1))
        G = np.vstack([problem.grad_i(i, xstar) for i in range(n)])
        Y = -hp.alpha * G
        Y -= Y.mean(axis=0)  # null column sums (already zero for this family)
        state = AlgorithmState(X=X.copy(), Y=Y.copy())
        coins = CoinSequence.generate(hp.T, hp.p, hp.seed)
        for t in range(hp.T):
            state = proxskip_step(state, problem, waug, hp,
                                  int(coins.bits[t]),
                                  noise=np.zeros((n, d)))
        worst = max(worst,
                    float(np.max(np.abs(state.X - X))),
                    float(np.max(np.abs(state.Y - Y))))
    return worst <= 1e-10, f"max drift from the fixed point {worst:.2e}"


def check_heterogeneity_independence(seed: int) -> tuple:
    w = metropolis(ring(10))
    finals = []
    for vs2 in (0.0, 1.0, 10.0, 100.0):
        problem = make_quadratic(10, 5, vs2, 0.0, seed=seed % 1000)
        hp = HyperParams(alpha=1.0, beta=0.5, p=0.5, chi=1.0, T=4000,
                         seed=seed)
        tr = proxskip_run(problem, w, hp)
        finals.append(tr.rel_error[-1])
    ok = all(f <= 1e-8 for f in finals)
    return ok, "final rel err per varsigma2: " + \
        "/".join(f"{f:.1e}" for f in finals)


def check_comm_counter(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    for _ in range(8):
        p = float(rng.uniform(0.05, 0.95))
        T = 4000
        problem = make_quadratic(5, 3, 1.0, 0.0, int(rng.integers(2**31)))
        w = metropolis(ring(5))
        hp = HyperParams(alpha=0.5, beta=p, p=p, chi=1.0, T=T,
                         seed=int(rng.integers(2**31)))
        tr = proxskip_run(problem, w, hp)
        rate = tr.comms[-1] / T
        band = 3.0 * np.sqrt(p * (1 - p) / T)
        coins = CoinSequence.generate(T, p, hp.seed)
        if int(tr.comms[-1]) != int(coins.bits.sum()):
            return False, "comms != number of heads"
        if abs(rate - p) > band:
            return False, f"comms/T = {rate:.4f} outside p +- {band:.4f}"
    return True, "counter matches coins; rate within 3 sigma"


def check_cross_oracle(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        problem = make_quadratic(int(rng.integers(2, 12)),
                                 int(rng.integers(1, 8)),
                                 float(rng.uniform(0, 5)), 0.0,
                                 int(rng.integers(2**31)))
        closed = refmod.solve_quadratic(problem)
        descent = refmod.solve_descent(problem, tol=1e-12)
        worst = max(worst, float(np.linalg.norm(closed.xstar - descent.xstar)))
    return worst <= 1e-10, f"closed form vs descent: {worst:.2e}"


def check_finite_difference(seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    h = 1e-5
    problems = [make_quadratic(6, 4, 2.0, 0.0, seed)]
    ds = synthetic_blobs(120, 6, seed)
    idxs = partition(ds, 3, seed)
    dense = ds.to_dense()
    shards = [(dense[ix], ds.labels[ix].astype(np.float64)) for ix in idxs]
    problems.append(make_logistic(shards, ("l2", 1.0), 0.0))
    problems.append(make_logistic(shards, ("nonconvex",), 0.0))
    worst = 0.0
    for problem in problems:
        for _ in range(20):
            i = int(rng.integers(problem.n))
            x = rng.normal(size=problem.d)
            g = problem.grad_i(i, x)
            for k in range(problem.d):
                e = np.zeros(problem.d)
                e[k] = h
                fd = (problem.value_i(i, x + e) - problem.value_i(i, x - e)) / (2 * h)
                worst = max(worst, abs(fd - g[k]))
    return worst <= 1e-5, f"worst central-difference error {worst:.2e}"


def check_parser_roundtrip(seed: int) -> tuple:
    ds = synthetic_blobs(60, 5, seed)
    text = serialize_libsvm(ds)
    back = parse_libsvm(text)
    if back.d != ds.d or not np.array_equal(back.labels, ds.labels):
        return False, "labels or dimension changed"
    for (i1, v1), (i2, v2) in zip(ds.rows, back.rows):
        if not (np.array_equal(i1, i2) and np.array_equal(v1, v2)):
            return False, "row mismatch"
    return True, f"{len(ds)} rows exact"


def check_heterogeneity_monotone(seed: int) -> tuple:
    values = []
    for vs2 in (0.0, 1.0, 10.0, 100.0):
        problem = make_quadratic(10, 6, vs2, 0.0, seed=seed % 1000)
        ref = refmod.solve_quadratic(problem)
        values.append(heterogeneity_at(problem, ref.xstar))
    ok = all(a < b for a, b in zip(values, values[1:]))
    return ok, "spread at varsigma2 0/1/10/100: " + \
        "/".join(f"{v:.2e}" for v in values)


PROPERTIES = [
    ("mixing-matrix-invariants", check_mixing_invariants),
    ("spectral-gap-monotonicity", check_gap_monotonicity),
    ("metropolis-permutation-equivariance", check_permutation_equivariance),
    ("augmented-identity", check_augmented_identity),
    ("gamma-block-spectral-radius", check_gamma_blocks),
    ("mean-iterate-identity", check_mean_iterate_identity),
    ("control-variate-null-sum", check_null_sum),
    ("primal-dual-equivalence", check_equivalence),
    ("fixed-point-stationarity", check_fixed_point),
    ("heterogeneity-independence", check_heterogeneity_independence),
    ("heterogeneity-monotonicity", check_heterogeneity_monotone),
    ("comm-counter-binomial", check_comm_counter),
    ("quadratic-cross-oracle", check_cross_oracle),
    ("finite-difference-gradients", check_finite_difference),
    ("libsvm-round-trip", check_parser_roundtrip),
]


def run_all(seed: int = 0, out=None, inject_fault: str = "") -> bool:
    """Run every property, print a pass/fail table, return overall verdict.

    ``inject_fault='equivalence-y0'`` deliberately violates the Y0 = 0
    premise of the two-form equivalence (negative control).
    """
    if out is None:
        out = io.StringIO()
        echo = True
    else:
        echo = False
    all_ok = True
    width = max(len(name) for name, _ in PROPERTIES)
    for name, fn in PROPERTIES:
        if name == "primal-dual-equivalence" and inject_fault == "equivalence-y0":
            ok, detail = check_equivalence(seed, y0_scale=1.0)
        else:
            ok, detail = fn(seed)
        all_ok &= ok
        out.write(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}\n")
    if echo:
        print(out.getvalue(), end="")
    return all_ok
