import numpy as np
import pytest

from irpam.core import ProblemInterface, power_weight_rule, soft_threshold


def scalar_problem(p_coef=1.0, x_target=0.0, a=1.0, b_sign=1, c=0.0,
                   lam=1.0, q=1.0):
    """Two-variable instance: f(x) = (p/2)(x - m)^2, h(t) = lam t^q, g = |.|,
    constraint a*x + s*y = c with s = +/-1.  The x-solve is the exact scalar
    quadratic minimizer, so the engine's exactness assumption holds."""
    c_vec = np.array([float(c)])

    def f_eval(x):
        return 0.5 * p_coef * float((x[0] - x_target) ** 2)

    def x_solver(y, gamma):
        num = p_coef * x_target + gamma * a * (c - b_sign * float(y[0]))
        return np.array([num / (p_coef + gamma * a * a)])

    return ProblemInterface(
        f_eval=f_eval,
        x_solver=x_solver,
        g_eval=np.abs,
        prox_g=soft_threshold,
        h_eval=lambda t: lam * t**q,
        weight_rule=power_weight_rule(lam, q),
        apply_A=lambda x: a * np.asarray(x, dtype=float),
        apply_B=lambda y: b_sign * np.asarray(y, dtype=float),
        apply_Bt=lambda y: b_sign * np.asarray(y, dtype=float),
        c=c_vec,
        f_lower=0.0,
        h_lower=0.0,
        b_sign=b_sign,
        nu=p_coef + a * a,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
