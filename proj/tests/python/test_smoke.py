import math

import pytest

import tawrmac


def test_metrics_hand_example():
    scores = [0.9, 0.8, 0.7, 0.1]
    labels = [1, 0, 1, 0]
    assert tawrmac.average_precision(scores, labels) == pytest.approx(5 / 6)
    assert tawrmac.auc_roc(scores, labels) == pytest.approx(0.75)
    rho, _ = tawrmac.spearman([1, 2, 3, 4], [10, 20, 30, 40])
    assert rho == pytest.approx(1.0)


def test_synthetic_stream_and_split():
    events = tawrmac.synthetic_stream(events=500, seed=1)
    assert len(events) == 500
    ts = [t for _, _, t in events]
    assert ts == sorted(ts)
    split = tawrmac.chrono_split(events)
    assert split["train"][0] == 0
    assert split["train"][1] == split["val"][0]
    assert split["val"][1] == split["test"][0]
    assert split["test"][1] == 500


def test_sample_walks_chain():
    events = [(2, 1, 1.0), (1, 0, 2.0)]
    lines = tawrmac.sample_walks(events, root=0, t=3.0, M=2, w=3, pr=1.0, seed=4)
    assert len(lines) == 2
    for line in lines:
        assert line.startswith("0 3 [")
        assert line.endswith("-")


def test_validate_config():
    cfg = tawrmac.default_config()
    assert tawrmac.validate_config(cfg) == cfg
    with pytest.raises(ValueError):
        tawrmac.validate_config({"learning_rate": 0.1})
    with pytest.raises(ValueError):
        tawrmac.validate_config({"M": 0})


def test_gradcheck():
    for name, err, scalars in tawrmac.gradcheck(0):
        assert err <= 1e-4, name
        assert scalars > 0


def test_tiny_run():
    cfg = {
        "dataset": "synthetic",
        "synthetic_events": 300,
        "epochs": 1,
        "batch_size": 100,
        "d_m": 4,
        "d_phi1": 2,
        "d_phi2": 2,
        "d_v": 2,
        "d_w": 4,
        "d_ce": 2,
        "k": 2,
        "M": 2,
        "r": 2,
        "threads": 1,
    }
    rows, summary = tawrmac.run(cfg)
    assert rows
    assert {r["nss"] for r in rows} <= {"random", "historical", "inductive"}
    for r in rows:
        assert 0.0 <= r["ap"] <= 1.0
        assert math.isfinite(r["auc"])
    assert isinstance(summary, dict)
