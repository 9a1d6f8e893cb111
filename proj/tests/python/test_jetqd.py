import math

import numpy as np
import pytest

import jetqd


def test_gaussian_riccati():
    psi = jetqd.AnalyticState.free_gaussian(jetqd.Physics(), [1.0], [0.0], [0.0])
    out = jetqd.trajectory(psi, [0.5], truncation=2, t_final=2.0, record_dt=0.1)
    t = out["t"]
    assert out["q"].shape == (len(t), 1)
    pxx = out["p"]["xx"]
    assert np.max(np.abs(pxx - 1j / (1 + 1j * t))) < 1e-8


def test_coherent_state_centre_motion():
    psi = jetqd.AnalyticState.coherent(jetqd.Physics(), [1.0], [1.0 + 0j])
    out = jetqd.trajectory(psi, [0.0], truncation=2, t_final=2 * math.pi, record_dt=math.pi)
    assert out["q"][-1, 0] == pytest.approx(0.0, abs=1e-6)


def test_oracle_closure_and_bad_closure():
    psi = jetqd.AnalyticState.free_gaussian(jetqd.Physics(), [1.0], [0.3], [0.0])
    out = jetqd.trajectory(psi, [0.2], truncation=3, t_final=1.0, closure="oracle")
    assert out["steps"] > 0
    with pytest.raises(ValueError):
        jetqd.trajectory(psi, [0.2], closure="other")


def test_ensemble_equivariance():
    psi = jetqd.AnalyticState.free_gaussian(jetqd.Physics(), [1.0], [0.5], [0.0])
    out = jetqd.ensemble(psi, 4000, 2.0, seed=5)
    assert out["final"].shape == (4000, 1)
    assert out["equivariance"]["pass"]
    assert not out["excluded"].any()


def test_double_slit_visibility():
    plain = jetqd.double_slit(detectors=False, count=4000)
    watched = jetqd.double_slit(detectors=True, count=4000)
    assert plain["visibility"] > 0.5
    assert watched["visibility"] < 0.1
    assert 3900 < sum(plain["counts"]) <= 4000


def test_spin():
    sp = jetqd.Spinor.from_euler(0.3, 1.1, 0.7)
    assert sp.norm() == pytest.approx(1.0)
    out = jetqd.precess(sp, [0.0, 0.0, 1.0], 1.0)
    u_end = out["uv"][-1, 0]
    assert abs(u_end - sp.u * np.exp(0.5j)) < 1e-11
    assert jetqd.spin_check(turns=1.0, dt=1e-3)["pass"]


def test_criteria_catalog():
    ids = [c[0] for c in jetqd.criteria()]
    assert ids == list(range(1, 14))
    r = jetqd.run_criterion(1)
    assert r["pass"] and r["id"] == 1
