"""Smoke test for the compiled extension.

    pip install maturin && maturin develop --release -m crates/python/Cargo.toml
    python python/smoke_test.py
"""

import json
import math

import hybrid_alloc as ha


def main():
    w = ha.action_to_weights([2.0, 1.0, 0.5, -1.0], k=2, tau=0.01)
    assert abs(sum(w) - 1.0) < 1e-12
    assert w[2] == 0.0 and w[3] == 0.0
    assert abs(w[0] - 0.7310585786300049) < 1e-12

    adv, targets = ha.compute_gae([1.0], [0.5], 0.0, gamma=0.99, lam=0.95)
    assert abs(adv[0] - 0.5) < 1e-12 and abs(targets[0] - 1.0) < 1e-12

    m = ha.compute_metrics([0.1, -0.05])
    assert abs(m.ann_return - 1.3) < 1e-12
    assert abs(m.sharpe - 1.699673171197595) < 1e-9
    assert ha.compute_metrics([0.01] * 5).sharpe is None

    equity, dd = ha.equity_curve([0.1, -0.2, 0.05])
    assert abs(equity[2] - 0.924) < 1e-12 and abs(min(dd) + 0.2) < 1e-12

    returns = ha.synthetic_market([0.01, -0.01], 0.01, 60, seed=1)
    env = ha.PortfolioEnv(returns, window=4, top_k=2)
    state = env.reset()
    assert len(state) == env.state_len == 4 * 2 + 2 + 2
    total, done = 0.0, False
    while not done:
        state, reward, done, weights = env.step([1.0, 0.0])
        total += reward
    assert math.isclose(total, env.cumulative_reward, abs_tol=1e-12)

    cfg = json.dumps({"n_steps": 64, "minibatch_size": 32, "n_epochs": 2, "total_timesteps": 256, "hidden": [8, 8]})
    policy = ha.train_allocator(returns, window=4, top_k=2, config=cfg)
    assert len(policy.act(env.reset())) == 2
    assert len(policy.curve) == 4

    preds, val = ha.train_forecaster(
        [math.sin(0.3 * t) for t in range(120)],
        config=json.dumps({"lookback": 6, "hidden": 4, "max_epochs": 3}),
    )
    assert len(preds) == 114 and len(val) >= 1

    print("python smoke test passed")


if __name__ == "__main__":
    main()
