"""Finite-difference checks of the analytic gradients.

Errors are reported per coordinate, relative to the infinity norm of the
gradient being checked (floored at ``SCALE_FLOOR``), so that coordinates or
gradients that happen to be near zero do not turn central-difference roundoff
into spurious failures.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import HyperbolicPolar, exp_origin
from .learner import LinearLearner, MlpLearner
from .loss import pebu_grad_hp, pebu_grad_y, pebu_loss, penalty

STEP = 1e-5
SCALE_FLOOR = 1e-3


@dataclass(frozen=True)
class SuiteResult:
    name: str
    cases: int
    worst: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.worst < self.tolerance)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<16} cases={self.cases:<5d} worst_rel_err={self.worst:.3e} tol={self.tolerance:.0e} {status}"


def relative_error(analytic, numeric):
    analytic = np.atleast_1d(np.asarray(analytic, dtype=np.float64))
    numeric = np.atleast_1d(np.asarray(numeric, dtype=np.float64))
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), SCALE_FLOOR)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def central_difference(f, x, step=STEP):
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        orig = x.flat[i]
        x.flat[i] = orig + step
        up = f(x)
        x.flat[i] = orig - step
        down = f(x)
        x.flat[i] = orig
        grad.flat[i] = (up - down) / (2.0 * step)
    return grad


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def sample_tangent_pairs(rng, d, count):
    """Pairs ``(y, p)`` with ``|y|`` log-uniform on [0.01, 10].

    A third of the directions are generic, a third within 0.01-0.1 rad of ``p``
    and a third within the same range of ``-p``.
    """
    pairs = []
    for i in range(count):
        p = _unit(rng, d)
        norm = float(np.exp(rng.uniform(np.log(0.01), np.log(10.0))))
        kind = i % 3
        if kind == 0 or d == 1:
            direction = _unit(rng, d)
        else:
            sign = 1.0 if kind == 1 else -1.0
            offset = 10.0 ** rng.uniform(-2.0, -1.0)
            tangent = rng.standard_normal(d)
            tangent -= (tangent @ p) * p
            tangent /= np.linalg.norm(tangent)
            direction = np.cos(offset) * sign * p + np.sin(offset) * tangent
        pairs.append((norm * direction, p))
    return pairs


def check_grad_y(seed=0, count=100, dims=(1, 2, 3, 8), grad=pebu_grad_y, tolerance=1e-6):
    rng = np.random.default_rng(seed)
    worst, cases = 0.0, 0
    for d in dims:
        for y, p in sample_tangent_pairs(rng, d, count):
            numeric = central_difference(lambda v: float(pebu_loss(exp_origin(v), p)), y)
            worst = max(worst, relative_error(grad(y, p), numeric))
            cases += 1
    return SuiteResult("pebu_grad_y", cases, worst, tolerance)


def check_grad_hp(seed=0, count=100, dims=(1, 2, 3, 8), grad=pebu_grad_hp, tolerance=1e-6):
    """Radial derivative against the loss, and direction gradient against the ambient HP formula."""
    rng = np.random.default_rng(seed)
    worst_r, worst_u, cases = 0.0, 0.0, 0
    for d in dims:
        for _ in range(count):
            p = _unit(rng, d)
            u = _unit(rng, d)
            r = float(rng.uniform(0.01, 20.0))
            d_r, d_u = grad(HyperbolicPolar(np.float64(r), u), p)
            numeric_r = central_difference(lambda v: float(pebu_loss(HyperbolicPolar(v[0], u), p)), [r])
            worst_r = max(worst_r, relative_error(d_r, numeric_r))
            if r <= 10.0 and 1.0 - np.tanh(r) * (u @ p) >= 1e-2:
                # The ambient gradient differentiates log(cosh r - sinh r u.p) with u off the sphere.
                ambient = lambda v: float(np.log(np.cosh(r) - np.sinh(r) * (v @ p)) + penalty(r))
                worst_u = max(worst_u, relative_error(d_u, central_difference(ambient, u)))
            cases += 1
    return [
        SuiteResult("pebu_grad_hp.r", cases, worst_r, tolerance),
        SuiteResult("pebu_grad_hp.u", cases, worst_u, tolerance),
    ]


def _composed_loss(learner, x, p):
    return float(pebu_loss(exp_origin(learner.forward(x)), p))


def check_backward(seed=0, count=20, tolerance=1e-5):
    """Learner backward pass, chained with ``pebu_grad_y``, against finite differences."""
    rng = np.random.default_rng(seed)
    results = []
    for name, sizes in (("backward.linear", [4, 3]), ("backward.mlp", [4, 6, 5, 3])):
        worst = 0.0
        for case in range(count):
            if len(sizes) == 2:
                learner = LinearLearner.initialize(*sizes, seed=int(rng.integers(2**31)))
            else:
                learner = MlpLearner.initialize(sizes, seed=int(rng.integers(2**31)))
            for b in learner.biases:
                b[:] = rng.uniform(-0.3, 0.3, size=b.shape)
            x = rng.standard_normal(sizes[0])
            p = _unit(rng, sizes[-1])
            upstream = pebu_grad_y(learner.forward(x), p)
            w_grads, b_grads = learner.backward(x, upstream)
            for param, analytic in zip(learner.parameters(), w_grads + b_grads):
                def f(values, param=param):
                    saved = param.copy()
                    param[...] = values
                    try:
                        return _composed_loss(learner, x, p)
                    finally:
                        param[...] = saved
                worst = max(worst, relative_error(analytic, central_difference(f, param)))
        results.append(SuiteResult(name, count, worst, tolerance))
    return results


def run_all(seed=0, count=100, dims=(1, 2, 3, 8), grad_y=pebu_grad_y):
    return [check_grad_y(seed, count, dims, grad=grad_y), *check_grad_hp(seed, count, dims), *check_backward(seed)]
