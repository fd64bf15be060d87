"""Smoke test for the glmcs Python extension.

Build and install first, e.g.

    pip install --no-build-isolation maturin
    (cd crates/python && maturin build --release -o dist)
    pip install crates/python/dist/glmcs-*.whl
"""

import json
import math
import random

import glmcs_py as g


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * (1.0 + abs(b))


def scenario(**kw):
    base = {"family": "gaussian", "dim": 1, "theta_star": {"kind": "sphere", "norm": 1.0},
            "covariates": {"kind": "iid_gaussian", "scale": 1.0}, "horizon": 20, "delta": 0.05,
            "replications": 10, "seed": 3}
    base.update(kw)
    return json.dumps(base)


def main():
    rng = random.Random(0)
    theta = [0.4, -0.3]

    log = g.ObservationLog("gaussian", 2)
    for _ in range(100):
        x = [rng.uniform(-1, 1), rng.uniform(-1, 1)]
        log.push(x, theta[0] * x[0] + theta[1] * x[1] + rng.gauss(0, 1))
    assert len(log) == 100 and log.dim == 2

    # family primitives
    assert close(g.d_psi("gaussian", 1.0, 3.0), 0.5)
    assert g.truncate(5.0, 2.0) == 2.0
    p = sum(math.exp(-g.negloglik("logistic", [1.0], y, [0.7])) for y in (0.0, 1.0))
    assert close(p, 1.0, 1e-12)
    try:
        g.ObservationLog("logistic", 1).push([1.0], 0.5)
        raise AssertionError("non-binary label accepted")
    except ValueError:
        pass

    # estimators
    ridge = g.ridge_mle(log, 1.0)
    assert all(math.isfinite(v) for v in ridge)
    con = g.constrained_mle(log, 0.1)
    gram_rows = log.gram()
    assert len(gram_rows) == 2

    # information gain: exact closed form never exceeds the logdet bound
    exact, bound, rank_bound = g.info_gain(log, 1.0, 0.5)
    assert exact is not None and exact <= bound + 1e-9 and bound <= rank_bound + 1e-9

    # confidence sets
    analytic = g.analytic_set(log, 1.0, 0.05)
    assert analytic.contains(analytic.anchor())
    assert analytic.width() > 0
    trans = g.transductive_set(log, 0.1, 0.05)
    assert trans.contains(con)
    json.loads(trans.describe())

    fc = g.Forecaster("gaussian", 2, prior="gaussian", scale=1.0, lambda_=0.5)
    regret = fc.regret(log, theta)
    ewa = g.ewa_algorithmic_set(fc, log, 3.0, 0.05, regret)
    assert ewa.type_name and ewa.beta > 0
    assert ewa.contains(theta)
    det = g.det_algorithmic_set(log, 1.0, 3.0, 0.05, theta)
    assert det.beta > 0

    # eta = 1 shifted mixture loss equals the plain one at learning rate 1
    f1 = g.Forecaster("logistic", 1, lambda_=1.0, grid=(6.0, 301))
    f1.update([0.5], 1.0)
    assert close(f1.mix_loss([1.0], 0.0), f1.shifted_mix_loss([1.0], 0.0, [0.2], 1.0), 1e-10)
    assert f1.rounds == 1

    sw = g.sparse_width(100, 10, 1, 0.25, 1.0, 1.0, 1.0, 0.05)
    expected = 4 * math.log(20 * math.e * math.sqrt(13.5)) + 4 * math.log(40 * math.sqrt(math.e))
    assert close(sw, expected, 1e-12)

    # harness round trip through JSON configs
    cfg = scenario(sets=[{"type": "analytic", "gamma": 1.0}])
    a = g.simulate(cfg)
    assert a == g.simulate(cfg)
    assert a.splitlines()[0] == "rep,checkpoint,set_type,mode,covered,beta,width_metric,extra_json"
    csv, violations = g.regret(scenario(forecaster={"prior": "gaussian", "gamma": 1.0, "lambda": 0.5}))
    assert violations == 0
    _, ok = g.validate_martingale(scenario(replications=50, forecaster={"prior": "point_mass"}))
    assert ok
    try:
        g.simulate('{"family": "poisson"}')
        raise AssertionError("bad config accepted")
    except ValueError:
        pass

    print("smoke test passed")


if __name__ == "__main__":
    main()
