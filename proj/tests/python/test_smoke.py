"""End-to-end smoke tests for the scope_opt module.

The heavy verification lives in the C++ test binaries; these only prove the
python surface is wired to the same engine: parsing, running, diagnostics,
and the wire format.
"""

import json
import math

import pytest

import scope_opt


def test_parse_svmlight_text():
    ds = scope_opt.parse_svmlight("+1 1:0.5 3:-2\n-1 2:1.25\n")
    assert len(ds) == 2
    assert ds.dim == 3
    assert ds.labels() == [1, -1]


def test_parse_error_carries_line():
    with pytest.raises(scope_opt.DatasetParseError):
        scope_opt.parse_svmlight("+1 1:0.5\n-1 2:oops\n")


def test_objective_at_zero_is_ln2():
    ds = scope_opt.make_synthetic_lr(64, 6, 3)
    value = scope_opt.objective("logistic_l2", [0.0] * 6, ds, 0.0)
    assert value == pytest.approx(math.log(2.0), rel=1e-15)


def test_smoothness_bound_on_normalized_rows():
    ds = scope_opt.make_synthetic_lr(50, 4, 9)
    L, mu = scope_opt.smoothness_bound("logistic_l2", ds, 0.01)
    assert L == pytest.approx(0.26)
    assert mu == 0.01


def test_toy_run_converges_with_large_c():
    cfg = {"data": "toy_table1", "eta": 1e-5, "c": 10, "bigm": 4000, "bigt": 100}
    res = scope_opt.run_experiment(json.dumps(cfg))
    assert res["verdict"] == "converged"
    assert res["summary"] == "verdict=converged rounds=100 msgs=800"
    assert res["messages"] == 800
    assert abs(res["w"][0] - 1001.0 / 101.0) < 1e-3
    assert len(res["rounds"]) == 101
    assert res["rounds"][0]["objective"] == 5000.5


def test_toy_run_diverges_without_proximal_term():
    cfg = {"data": "toy_table1", "eta": 0.1, "c": 0, "bigm": 4000, "bigt": 50}
    res = scope_opt.run_experiment(json.dumps(cfg))
    assert res["verdict"] == "diverged"
    assert res["exit_code"] == 2


def test_unknown_config_key_rejected():
    with pytest.raises(scope_opt.ConfigError):
        scope_opt.run_experiment(json.dumps({"data": "toy_table1", "etaa": 0.1}))


def test_theory_constants_hand_example():
    tc = scope_opt.theory_constants(L=1.0, mu=0.1, eta=0.06, c=0.95, M=57)
    assert tc.valid
    assert tc.alpha == pytest.approx(0.931, abs=1e-15)
    assert tc.beta == pytest.approx(0.0678, abs=1e-15)
    assert tc.m_min_last == 57
    assert tc.m_min_avg == 834
    assert scope_opt.check_step_size(eta=0.06, L=1.0, mu=0.1, c=0.95)


def test_fixed_point_factor_on_the_toy():
    prob = scope_opt.toy_quadratic_problem()
    assert prob.local_curvatures == [2.0, 200.0]
    assert prob.wstar == pytest.approx(1001.0 / 101.0, abs=0)
    assert scope_opt.fixed_point_factor(prob, 0.0) == pytest.approx(-24.5025, abs=1e-12)
    assert abs(scope_opt.fixed_point_factor(prob, 30.0)) < 1.0


def test_solve_optimum_is_a_local_minimum():
    ds, loss, wstar = scope_opt.make_toy_table1()
    assert wstar == 1001.0 / 101.0
    lr = scope_opt.make_synthetic_lr(80, 5, 21)
    w = scope_opt.solve_optimum(lr, "logistic_l2", 0.01, grad_tol=1e-12)
    best = scope_opt.objective("logistic_l2", w, lr, 0.01)
    for j in range(5):
        for eps in (1e-4, -1e-4):
            nudged = list(w)
            nudged[j] += eps
            assert scope_opt.objective("logistic_l2", nudged, lr, 0.01) >= best


def test_message_round_trip_is_exact():
    msg = {"type": "params", "round": 3, "vec": [0.0, -0.0, 1e308, 5e-324, 1.0 / 3.0]}
    frame = scope_opt.encode_message(msg)
    assert frame[4:6] == b"\x5c\x0e"  # magic after the length prefix
    back = scope_opt.decode_message(frame)
    assert back["type"] == "params"
    assert back["round"] == 3
    assert back["vec"] == msg["vec"]
    assert [math.copysign(1.0, x) for x in back["vec"][:2]] == [1.0, -1.0]


def test_decode_rejects_bad_magic():
    frame = bytearray(scope_opt.encode_message({"type": "shutdown"}))
    frame[4] = 0xAA
    with pytest.raises(scope_opt.ProtocolError):
        scope_opt.decode_message(bytes(frame))
