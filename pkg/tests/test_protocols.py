import numpy as np
import pytest
from scipy import stats

from starqnt.core import UsageError
from starqnt.dists import Basis, Circuit
from starqnt.protocols import (
    Protocol,
    ProtocolSpec,
    Step,
    execute_protocol,
    feasible_m,
    plan_protocol,
)
from starqnt.sampling import child_seed

from conftest import THETA_STAR

T3 = (THETA_STAR,) * 3


def test_plans():
    spec = plan_protocol(Protocol.IE_2STEP, 3, 6)
    assert spec.steps == (Step(Circuit.IE, Basis.Z, 0, 3), Step(Circuit.IE, Basis.X, 0, 3))
    spec = plan_protocol(Protocol.RI_NSTEP, 3, 6)
    assert [(s.root, s.m) for s in spec.steps] == [(0, 2), (1, 2), (2, 2)]
    spec = plan_protocol(Protocol.RIM_2STEP, 4, 10)
    assert [(s.circuit, s.m) for s in spec.steps] == [(Circuit.RI, 5), (Circuit.M, 5)]
    assert plan_protocol(Protocol.BF_1STEP, 3, 7).m_total == 7


def test_divisibility_guard():
    with pytest.raises(UsageError, match="multiple of 3"):
        plan_protocol(Protocol.RI_NSTEP, 3, 7)
    with pytest.raises(UsageError, match="multiple of 2"):
        plan_protocol(Protocol.BF_2STEP, 3, 5)
    assert feasible_m(Protocol.RI_NSTEP, 4, 38) == 36


@pytest.mark.parametrize("protocol", list(Protocol))
def test_plug_in_exact(protocol, rng):
    report = execute_protocol(plan_protocol(protocol, 3, 6), T3, exact=True)
    np.testing.assert_allclose(report.values, T3, atol=1e-12)
    assert report.invalid_count == 0
    # generic parameters away from 1/2, larger star
    theta = rng.uniform(0.6, 0.95, 5)
    report = execute_protocol(plan_protocol(protocol, 5, 10), theta, exact=True)
    np.testing.assert_allclose(report.values, theta, atol=1e-12)


@pytest.mark.parametrize("protocol", list(Protocol))
def test_noiseless_network(protocol):
    for seed in range(5):
        report = execute_protocol(plan_protocol(protocol, 3, 6), (1, 1, 1), seed)
        np.testing.assert_array_equal(report.values, [1, 1, 1])


@pytest.mark.parametrize("protocol", list(Protocol))
def test_deterministic_given_seed(protocol):
    spec = plan_protocol(protocol, 3, 60)
    a, b = execute_protocol(spec, T3, 99), execute_protocol(spec, T3, 99)
    assert a == b


def test_bf_one_step_singular_root():
    # theta0_hat trips the guard only when exactly half of the m phase bits are 1
    m, trials = 600, 3000
    spec = plan_protocol(Protocol.BF_1STEP, 3, m)
    invalid = [execute_protocol(spec, (0.5, THETA_STAR, THETA_STAR), s).invalid_count for s in range(trials)]
    flagged = np.mean([k > 0 for k in invalid])
    assert set(invalid) <= {0, 2}
    p = stats.binom.pmf(m // 2, m, 0.5)
    assert abs(flagged - p) < 4 * np.sqrt(p * (1 - p) / trials)


def test_all_invalid_root_estimate_is_flagged():
    spec = ProtocolSpec(Protocol.RIM_2STEP, 3, (Step(Circuit.RI, Basis.EIGEN, 0, 3), Step(Circuit.M, Basis.EIGEN, 0, 3)))
    report = execute_protocol(spec, (0.58, 0.5, 0.5), exact=True)
    assert not report.theta_hat[0].valid
    assert report.theta_hat[1].valid


def test_report_error_norm():
    report = execute_protocol(plan_protocol(Protocol.IE_1STEP, 3, 12), T3, 5)
    assert report.err_l2 == pytest.approx(np.linalg.norm(report.values - np.array(T3)))
    d = report.to_dict()
    assert d["protocol"] == "IE_1STEP" and len(d["theta_hat"]) == 3


def test_permutation_equivariance_plug_in(rng):
    theta = rng.uniform(0.6, 0.9, 3)
    swapped = theta[[0, 2, 1]]
    for p in Protocol:
        a = execute_protocol(plan_protocol(p, 3, 6), theta, exact=True).values
        b = execute_protocol(plan_protocol(p, 3, 6), swapped, exact=True).values
        np.testing.assert_allclose(b, a[[0, 2, 1]], atol=1e-12)


def test_permutation_equivariance_statistical():
    theta = np.array([0.7, 0.6, 0.9])
    swapped = theta[[0, 2, 1]]
    spec = plan_protocol(Protocol.IE_1STEP, 3, 300)
    a = np.array([execute_protocol(spec, theta, s).values for s in range(400)])
    b = np.array([execute_protocol(spec, swapped, s + 10_000).values for s in range(400)])
    for j, k in ((1, 2), (2, 1), (0, 0)):
        assert stats.ks_2samp(a[:, j], b[:, k]).pvalue > 1e-3


@pytest.mark.parametrize("protocol", list(Protocol))
def test_mean_converges_toward_truth(protocol):
    means = []
    for m in (96, 9600):
        spec = plan_protocol(protocol, 3, m)
        est = np.array([execute_protocol(spec, T3, child_seed(1, protocol.index, t, m)).values for t in range(200)])
        means.append(np.abs(est.mean(axis=0) - THETA_STAR).max())
    assert means[1] < 0.02


@pytest.mark.parametrize("protocol", list(Protocol))
def test_error_decreases_with_m(protocol):
    errs = []
    for m in (96, 192, 384, 768, 1536):
        spec = plan_protocol(protocol, 3, m)
        errs.append(np.mean([execute_protocol(spec, T3, child_seed(2, protocol.index, t, m)).err_l2 for t in range(150)]))
    assert all(b < a * 1.05 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < errs[0] / 2.5
