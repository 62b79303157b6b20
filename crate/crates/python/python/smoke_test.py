"""Quick end-to-end check of the pyosa extension."""

import math

import pyosa

toy = pyosa.Environment([(4.0, 0.3), (1.0, 0.9)], 1.0)
assert toy.max_tp_channel == 1
assert math.isclose(toy.threshold_h(), 8.4)

sol = toy.solve(5)
assert sol["path"] == [1, 2] and sol["milestones_bits"] == [5, 1]
assert math.isclose(sol["value_s"], 40 / 9)
assert math.isclose(toy.evaluate_path(5, [1, 2]), sol["value_s"])
assert toy.static_optimal(5)[0] == 2

mean, se = toy.simulate("dynamic-opt", 5, 100_000, seed=1)
assert abs(mean - 40 / 9) < 4 * se, (mean, se)

steep = pyosa.Environment.scenario("steep")
static_up, dyn_lo, dyn_up = steep.ratio_bounds(300_000)
assert 0 < dyn_lo <= dyn_up <= 1 and static_up < 1

assert pyosa.kl_bernoulli(0.5, 0.5) == 0.0
assert pyosa.kl_index(0.0, 0, 1.0) == 1.0

run = pyosa.learn(toy, [5, 9, 13, 2, 7, 11], "dynamic-opt", seed=3)
assert len(run["regret_cum_s"]) == 6 and sum(run["senses"]) > 0

try:
    pyosa.Environment([(1.0, 0.5), (1.0, 0.5)], 1.0)
except ValueError:
    pass
else:
    raise AssertionError("tied throughputs should be rejected")

print(f"pyosa {pyosa.__version__} smoke test passed")
