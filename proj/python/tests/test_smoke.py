import math

import numpy as np
import pytest

import matchpyramid as mp


def test_tokenize_and_stem():
    assert mp.tokenize("The (Running) CATS", stemming=True) == ["the", "run", "cat"]
    assert mp.tokenize("The Running", stemming=False, stopwords=["the"]) == ["running"]
    assert mp.porter_stem("relational") == "relat"


def test_similarities():
    a, b = [0.6, -0.8], [1.2, -1.6]
    assert mp.similarity("indicator", "w", "w", a, a) == 1.0
    assert mp.similarity("indicator", "w", "v", a, a) == 0.0
    assert mp.similarity("cosine", "w", "v", a, b) == pytest.approx(1.0)
    assert mp.similarity("dot", "w", "v", a, b) > mp.similarity("dot", "w", "w", a, a)
    assert mp.similarity("gaussian", "w", "v", a, b, sigma=2.0) == pytest.approx(math.exp(-1.0 / 4.0))
    with pytest.raises(mp.ConfigError):
        mp.similarity("euclid", "w", "v", a, b)


def test_pooling():
    assert mp.pool_boundaries(10, 3) == [0, 3, 6, 10]
    maps = np.arange(12, dtype=float).reshape(1, 3, 4)
    pooled, argmax = mp.dynamic_max_pool(maps, 1, 2)
    assert pooled.shape == (1, 1, 2)
    assert pooled[0, 0].tolist() == [9.0, 11.0]
    assert argmax == [(2, 1), (2, 3)]


def test_model_roundtrip(tmp_path):
    cfg = mp.PyramidConfig()
    cfg.feature_maps = 2
    cfg.hidden_units = 4
    cfg.pool_rows = 2
    cfg.pool_cols = 3
    model = mp.Model.initialize(cfg, 7)
    matrix = np.random.default_rng(0).uniform(-1, 1, size=(3, 8))
    s = model.score_matrix(matrix)
    assert math.isfinite(s)
    path = str(tmp_path / "m.mp")
    model.save(path)
    loaded = mp.Model.load(path)
    assert loaded == model
    assert loaded.score_matrix(matrix) == s
    assert sum(p.size for p in loaded.parameters().values()) == loaded.num_parameters
    assert model.feature_maps(matrix).shape == (2, 3, 8)
    report = mp.grad_check(model, matrix, np.zeros((3, 8)))
    assert report["passed"]
    with pytest.raises(mp.ShapeError):
        model.score_matrix(np.zeros(4))


def test_index_and_metrics(tmp_path):
    docs = [("d1", "the cat sat on the mat"), ("d2", "the dog sat"), ("d3", "cat cat dog"),
            ("d4", "a bird in the hand"), ("d5", "dog eat dog world")]
    index = mp.Index(docs, stemming=False)
    assert index.num_docs == 5
    assert index.bm25("cat dog", "d3") == pytest.approx(1.9192875306797519, abs=1e-10)
    assert index.ql("cat dog", "d3") == pytest.approx(-3.5975388034649405, abs=1e-10)
    ranking = index.rank("cat dog", top_k=2)
    assert [d for d, _ in ranking] == ["d3", "d5"]
    path = str(tmp_path / "index.mp")
    index.save(path)
    assert mp.Index.load(path).bm25("cat dog", "d3") == index.bm25("cat dog", "d3")

    assert mp.average_precision(["r1", "n", "r2"], {"r1": 1, "r2": 1}) == pytest.approx(5 / 6)
    assert mp.ndcg_at_k(["n", "r"], {"r": 1}) == pytest.approx(1 / math.log2(3))
    result = mp.evaluate({"q": ranking}, {"q": {"d3": 1, "d1": 1}})
    assert result["map"] == pytest.approx(0.5)
    assert result["per_query"]["q"]["retrieved"] == 2


def test_cli_shim():
    code, out, err = mp.run_cli(["--version"])
    assert code == 0 and "0.1.0" in out
    code, out, err = mp.run_cli(["config", "--set", "train.bogus=1"])
    assert code == 1
    assert err.startswith("matchpyramid: error: ")
