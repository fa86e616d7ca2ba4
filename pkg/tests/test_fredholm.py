import numpy as np
import pytest

from asepkpz.fredholm import ConvergenceError, KernelSpec, fredholm_det, fredholm_det_adaptive

from oracles import airy_kernel


def test_zero_lambda():
    v, err = fredholm_det(KernelSpec("airy", s=0.0), 0.0)
    assert v == 1.0 and err == 0.0


@pytest.mark.parametrize("lam", [0.3, 0.9, -2.0, 0.5 + 0.5j])
def test_rank_one(lam):
    k = KernelSpec("custom", func=lambda x, y: np.ones(np.broadcast(x, y).shape), lo=0.0, hi=1.0)
    v, err = fredholm_det(k, lam)
    assert abs(v - (1 - lam)) <= 1e-12


def test_airy_right_tail():
    v, _ = fredholm_det(KernelSpec("airy", s=8.0), 1.0)
    assert abs(v - 1.0) <= 1e-8


def test_airy_kernel_matches_scipy_oracle():
    k = KernelSpec("airy")
    x = np.linspace(-3, 4, 9)
    assert np.allclose(k.matrix(x), airy_kernel(x[:, None], x[None, :]), atol=1e-12)


def test_adaptive_converges_and_reports():
    v, err, n = fredholm_det_adaptive(KernelSpec("airy", s=-2.0), 1.0, tol=1e-12)
    assert err < 1e-12 and n <= 512
    assert abs(v - 0.4132241425051226) <= 1e-10


def test_nonconvergence_raises():
    k = KernelSpec("custom", func=lambda x, y: 1.0 / (np.abs(x - y) + 1e-3), lo=0.0, hi=1.0)
    with pytest.raises(ConvergenceError) as exc:
        fredholm_det_adaptive(k, 0.01, tol=1e-14, cap=64)
    assert len(exc.value.values) == 2


def test_kernel_validation():
    with pytest.raises(ValueError):
        KernelSpec("nope")
    with pytest.raises(ValueError):
        KernelSpec("gaussian-hat", p=0.4)
    with pytest.raises(ValueError):
        fredholm_det(KernelSpec("airy"), 1.0, nodes=4)
