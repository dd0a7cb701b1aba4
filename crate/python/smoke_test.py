"""Smoke test for the decl_py extension module.

Build it first with `maturin develop -m crates/python/Cargo.toml` (or
`pip install ./crates/python`), then run `python python/smoke_test.py`.
"""

import json

import decl_py


def main():
    space = decl_py.OutputSpace(4, linear=[([1, 1, 1, 1], "<=", 2)], clauses=[[(0, False), (1, False)]])
    feasible = space.enumerate()
    assert len(feasible) == space.count()
    assert all(space.is_feasible(y) for y in feasible)
    assert not space.is_feasible([1, 1, 1, 1])
    assert decl_py.OutputSpace.from_json(space.to_json()).count() == space.count()

    model = decl_py.ScoringModel.singleton(4, 3)
    w = [0.1 * (i % 5) - 0.2 for i in range(model.dim)]
    x = [[1.0, 0.5, -0.5]] * 4
    y, value = decl_py.map_exact(model, w, x, space)
    assert space.is_feasible(y)
    assert abs(model.score(w, x, y) - value) < 1e-9

    gold = feasible[0]
    full = decl_py.Decomposition.full(4)
    pair = decl_py.Decomposition.decl_k(4, 2)
    assert len(full.neighborhood(space, gold)) == len(feasible)
    assert gold in pair.neighborhood(space, gold)

    aug, aug_value = decl_py.map_loss_augmented(model, w, x, gold, space)
    dec, dec_value = decl_py.map_decomposed(model, w, x, gold, full, space)
    assert aug == dec and abs(aug_value - dec_value) < 1e-12

    data = decl_py.gen_synthetic(
        json.dumps({"n": 6, "d": 4, "constraints": 2, "min_feasible": 10, "train_sizes": [30],
                    "test_size": 20, "validation_size": 10}),
        seed=3,
    )
    xs, ys = data.train
    report = decl_py.train(data.model, xs, ys, data.space, algo="decl-2", epochs=20, seed=1)
    assert len(report.objective) == 20
    decl_value = decl_py.decl_objective(data.model, report.weights, xs, ys,
                                        decl_py.Decomposition.decl_k(6, 2), data.space)
    global_value = decl_py.global_objective(data.model, report.weights, xs, ys, data.space)
    assert 0.0 <= decl_value <= global_value + 1e-9

    txs, tys = data.test
    metrics = decl_py.evaluate(data.model, report.predictor, txs, tys, data.space)
    assert metrics["infeasible_rate"] == 0.0
    assert 0.0 <= metrics["per_bit_error"] <= 1.0

    verdict = decl_py.exactness_probe(data.model, xs, ys, data.space, decl_py.Decomposition.full(6), probes=5)
    assert not verdict.is_counterexample
    assert decl_py.is_subadditive("hamming", data.space)

    try:
        decl_py.OutputSpace(0)
    except ValueError:
        pass
    else:
        raise AssertionError("empty space accepted")

    print("smoke test passed:", json.dumps(metrics))


if __name__ == "__main__":
    main()
