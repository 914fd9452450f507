import numpy as np
import pytest

from conftest import logistic_from
from pskip.problems import make_quadratic, synthetic_blobs
from pskip.reference import (
    NonConvergenceError,
    ReferenceSolution,
    relative_error,
    solve,
    solve_descent,
    solve_quadratic,
)


class TestClosedForm:
    def test_zero_data(self):
        p = make_quadratic(5, 3, 0.0, 0.0, seed=0)
        ref = solve_quadratic(p)
        assert np.all(ref.xstar == 0.0)
        assert ref.fstar == 0.0

    def test_hand_example(self):
        p = make_quadratic(2, 1, 1.0, 0.0, seed=0)
        p.b = np.array([[1.0], [1.0]])
        assert solve_quadratic(p).xstar[0] == pytest.approx(1.2, abs=1e-15)

    def test_agreement_with_descent(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            p = make_quadratic(int(rng.integers(2, 12)),
                               int(rng.integers(1, 8)),
                               float(rng.uniform(0, 5)), 0.0,
                               int(rng.integers(2**31)))
            closed = solve_quadratic(p)
            descent = solve_descent(p, tol=1e-12)
            assert np.linalg.norm(closed.xstar - descent.xstar) <= 1e-10


class TestDescent:
    def test_monotone_in_f(self):
        p = make_quadratic(6, 4, 2.0, 0.0, seed=1)
        history = []
        solve_descent(p, tol=1e-10, callback=lambda x, f: history.append(f))
        eps = np.finfo(float).eps
        for prev, cur in zip(history, history[1:]):
            assert cur <= prev + 8 * eps * abs(prev)

    def test_logistic_descends_below_log2(self, fixture_dataset):
        p = logistic_from(fixture_dataset, 5, ("l2", 1.0), 0.0)
        ref = solve_descent(p, tol=1e-9)
        assert ref.grad_norm <= 1e-9
        assert ref.fstar < np.log(2)

    def test_max_iters_exceeded(self):
        p = make_quadratic(4, 3, 1.0, 0.0, seed=2)
        with pytest.raises(NonConvergenceError) as err:
            solve_descent(p, tol=0.0, max_iters=1)
        assert err.value.grad_norm > 0

    def test_restarts_agree(self, fixture_dataset):
        p = logistic_from(fixture_dataset, 4, ("l2", 1.0), 0.0)
        tol = 1e-10
        rng = np.random.default_rng(0)
        sols = [solve_descent(p, tol=tol, x0=rng.normal(size=p.d)).xstar
                for _ in range(5)]
        base = solve_descent(p, tol=tol).xstar
        for x in sols:
            assert np.linalg.norm(x - base) <= 10 * tol / p.mu

    def test_nonconvex_records_gradient_target(self, fixture_dataset):
        p = logistic_from(fixture_dataset, 4, ("nonconvex",), 0.0)
        ref = solve_descent(p, tol=1e-11)
        assert ref.method == "gradient-descent"
        assert ref.grad_norm <= 1e-11


class TestRelativeError:
    def _ref(self, xstar):
        x = np.asarray(xstar, dtype=float)
        return ReferenceSolution(xstar=x, fstar=0.0, grad_norm=0.0,
                                 method="closed-form", tol=0.0)

    def test_zero_at_solution(self):
        ref = self._ref([1.0, 2.0])
        err, absmode = relative_error(np.array([1.0, 2.0]), ref)
        assert err == 0.0 and not absmode

    def test_doubling_gives_one(self):
        ref = self._ref([1.0, 2.0])
        err, _ = relative_error(np.array([2.0, 4.0]), ref)
        assert err == pytest.approx(1.0, abs=1e-15)

    def test_absolute_fallback(self):
        ref = self._ref([0.0, 0.0])
        err, absmode = relative_error(np.array([3.0, 4.0]), ref)
        assert absmode and err == pytest.approx(5.0, abs=1e-15)


class TestCacheAndSerialization:
    def test_json_roundtrip(self):
        ref = ReferenceSolution(xstar=np.array([1.5, -2.25]), fstar=0.125,
                                grad_norm=1e-13, method="gradient-descent",
                                tol=1e-12)
        back = ReferenceSolution.from_json(ref.to_json())
        assert np.array_equal(back.xstar, ref.xstar)
        assert back.fstar == ref.fstar
        assert back.method == ref.method

    def test_disk_cache_hit(self, tmp_path):
        p = make_quadratic(6, 4, 1.0, 0.0, seed=8)
        a = solve(p, cache_dir=str(tmp_path))
        files = list(tmp_path.glob("ref_*.json"))
        assert len(files) == 1
        b = solve(p, cache_dir=str(tmp_path))
        assert np.array_equal(a.xstar, b.xstar)

    def test_cache_keyed_by_problem(self, tmp_path):
        solve(make_quadratic(6, 4, 1.0, 0.0, seed=8), cache_dir=str(tmp_path))
        solve(make_quadratic(6, 4, 2.0, 0.0, seed=8), cache_dir=str(tmp_path))
        assert len(list(tmp_path.glob("ref_*.json"))) == 2
