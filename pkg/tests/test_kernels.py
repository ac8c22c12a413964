import numpy as np
import pytest

from latbudget import _pykernels, kernels

cy = kernels.compiled()
needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")

COMBOS = [(a1, a2, lt) for a1 in (0, 1) for a2 in (0, 1, 2) for lt in (0, 1)]


def test_env_switch_names_backend():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
class TestBackendsAgree:
    def test_em(self):
        rng = np.random.default_rng(3)
        n = rng.integers(0, 30, size=(6, 5)).astype(float)
        n[:, 0] += 1
        A = rng.dirichlet(np.ones(3), size=6)
        B = rng.dirichlet(np.ones(5), size=3).T
        a = _pykernels.em_fit(n, A, B, 200, 1e-12)
        b = cy.em_fit(n, A, B, 200, 1e-12)
        for x, y in zip(a[:4], b[:4]):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)
        assert a[4] == b[4]

    @pytest.mark.parametrize("a1,a2,lt", COMBOS)
    def test_gradients(self, a1, a2, lt):
        rng = np.random.default_rng(a1 * 10 + a2 * 3 + lt)
        X = rng.normal(size=(7, 4))
        Y = rng.dirichlet(np.ones(3), size=7)
        params = [rng.normal(size=s) for s in ((4, 5), (5,), (5, 3), (3,))]
        ga = _pykernels.batch_gradients(X, Y, *params, a1, a2, lt)
        gb = cy.batch_gradients(X, Y, *params, a1, a2, lt)
        for x, y in zip(ga, gb):
            np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-13)

    @pytest.mark.parametrize("a1,a2,lt", COMBOS)
    def test_sgd_epoch(self, a1, a2, lt):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(70, 4))
        Y = rng.dirichlet(np.ones(3), size=70)
        p0 = [rng.normal(scale=0.3, size=s) for s in ((4, 5), (5,), (5, 3), (3,))]
        pa = [p.copy() for p in p0]
        pb = [p.copy() for p in p0]
        _pykernels.sgd_epoch(X, Y, *pa, a1, a2, lt, 0.05, 16)
        cy.sgd_epoch(X, Y, *pb, a1, a2, lt, 0.05, 16)
        for x, y in zip(pa, pb):
            np.testing.assert_allclose(x, y, rtol=1e-9, atol=1e-12)
