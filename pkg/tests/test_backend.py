"""Backend selection and compiled/fallback agreement."""

import numpy as np
import pytest

from orlspi import backend, config, loop

compiled_missing = True
try:
    backend.get_stepper("compiled")
    compiled_missing = False
except Exception:
    pass

needs_compiled = pytest.mark.skipif(compiled_missing, reason="compiled stepper not built")


def short_run(stepper_name, kind="EB", seed=1, horizon=250, algorithm="pi"):
    exp = config.from_dict(
        {
            "name": "backend",
            "preset": "paper_5_1" if algorithm == "pi" else "paper_5_2",
            "schedule": {"kind": kind},
            "horizon": horizon,
            "seeds": [seed],
        }
    )
    cfg = exp.orls_config(seed)
    if algorithm == "pg":
        return loop.orls_pg_run(cfg, exp.schedule(seed), stepper_name=stepper_name)
    return loop.orls_pi_run(cfg, exp.schedule(seed), stepper_name=stepper_name)


def test_python_stepper_always_available():
    stepper = backend.get_stepper("python")
    assert stepper.COMPILED is False


def test_active_backend_is_named():
    assert backend.active_name() in ("compiled", "python")


@needs_compiled
def test_compiled_flag():
    assert backend.get_stepper("compiled").COMPILED is True


@needs_compiled
@pytest.mark.parametrize("kind", ["EB", "PB2", "PB1"])
def test_backends_agree_policy_iteration(kind):
    tr_c = short_run("compiled", kind=kind)
    tr_p = short_run("python", kind=kind)
    assert np.max(np.abs(tr_c.err_p - tr_p.err_p)) <= 1e-9
    assert np.max(np.abs(tr_c.err_theta - tr_p.err_theta)) <= 1e-9
    assert np.max(np.abs(tr_c.p_hat - tr_p.p_hat)) <= 1e-9
    assert np.max(np.abs(tr_c.theta_hat - tr_p.theta_hat)) <= 1e-9
    assert np.max(np.abs(tr_c.lambda_min_h - tr_p.lambda_min_h)) <= 1e-8
    np.testing.assert_array_equal(tr_c.breakdown, tr_p.breakdown)


@needs_compiled
def test_backends_agree_policy_gradient():
    tr_c = short_run("compiled", algorithm="pg")
    tr_p = short_run("python", algorithm="pg")
    assert np.max(np.abs(tr_c.err_p - tr_p.err_p)) <= 1e-9
    assert np.max(np.abs(tr_c.k_hat - tr_p.k_hat)) <= 1e-9


def test_unknown_backend_rejected():
    with pytest.raises(Exception):
        backend.get_stepper("fortran")
