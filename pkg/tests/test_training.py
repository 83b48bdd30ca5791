import math

import numpy as np
import pytest

from vmprompt.classifier import LinearClassifier
from vmprompt.errors import DomainError, TrainingDiverged
from vmprompt.framediff import diff_maps
from vmprompt.pn import PnHyper, PnParams, slope, slope_bounds
from vmprompt.synthetic import Dataset, SyntheticConfig, generate_synthetic, split_dataset
from vmprompt.training import REPORT_HEADER, TrainConfig, evaluate, lambda_sweep, train

SMALL = dict(height=16, width=16, frames=5, square_size=4, clips_per_class=4, jitter=1)
FAST = dict(epochs=8, batch_size=4)


class TestSynthetic:
    def test_deterministic(self):
        a = generate_synthetic(SyntheticConfig(noise=0.1, camera=1, seed=3, **SMALL))
        b = generate_synthetic(SyntheticConfig(noise=0.1, camera=1, seed=3, **SMALL))
        assert a.frames.tobytes() == b.frames.tobytes()
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_balanced_and_bounded(self):
        ds = generate_synthetic(SyntheticConfig(classes=8, noise=0.2, **{**SMALL, "frames": 3}))
        assert np.all(np.bincount(ds.labels) == SMALL["clips_per_class"])
        assert ds.frames.min() >= 0 and ds.frames.max() <= 1
        assert ds.frames.shape == (32, 16, 16, 3, 3)

    def test_static_noiseless_diffs_only_on_edges(self):
        cfg = SyntheticConfig(jitter=0, seed=1, **{k: v for k, v in SMALL.items() if k != "jitter"})
        ds = generate_synthetic(cfg)
        s, start = cfg.square_size, (cfg.height - cfg.square_size) // 2
        clip, label = ds.frames[0], ds.labels[0]
        assert label == 0  # moves right by one pixel per frame
        d = diff_maps(clip[..., :2])[..., 0]
        expected = np.zeros_like(d, dtype=bool)
        expected[start:start + s, start] = True       # trailing edge
        expected[start:start + s, start + s] = True   # leading edge
        np.testing.assert_array_equal(d != 0, expected)
        assert np.all(d[start:start + s, start + s] > 0)
        assert np.all(d[start:start + s, start] < 0)

    def test_camera_motion_moves_every_background_pixel(self):
        cfg = SyntheticConfig(camera=2, seed=5, **SMALL)
        ds = generate_synthetic(cfg)
        clip = ds.frames[0]
        square = np.all(clip == 1.0, axis=2)  # square pixels per frame
        background = ~(square[..., 0] | square[..., 1])
        d = diff_maps(clip[..., :2])[..., 0]
        assert np.all(d[background] != 0)

    def test_square_too_large(self):
        with pytest.raises(DomainError):
            generate_synthetic(SyntheticConfig(height=8, width=8, square_size=9))

    def test_path_leaves_frame(self):
        with pytest.raises(DomainError):
            generate_synthetic(SyntheticConfig(speed=3))

    @pytest.mark.parametrize("bad", [dict(frames=2), dict(classes=1), dict(noise=1.5), dict(camera=-1)])
    def test_invalid_config(self, bad):
        with pytest.raises(DomainError):
            SyntheticConfig(**bad)

    def test_split_is_stratified(self):
        ds = generate_synthetic(SyntheticConfig(**SMALL))
        tr, va = split_dataset(ds, 0.25, seed=0)
        assert len(tr) + len(va) == len(ds)
        assert np.all(np.bincount(va.labels) == 1)


@pytest.fixture(scope="module")
def small():
    return generate_synthetic(SyntheticConfig(seed=2, noise=0.02, camera=1, **SMALL))


class TestTrain:
    def test_zero_epochs_is_initial_state(self, small):
        cfg = TrainConfig(epochs=0, seed=11, pool_grid=2)
        report = train(small, cfg)
        assert len(report.records) == 1
        m0, n0 = np.random.default_rng(11).normal(1e-5, 1.0, size=2)
        assert report.records[0].a == slope(PnParams(m0, n0))
        assert report.params == PnParams(m0, n0)
        assert report.records[0].task_loss == pytest.approx(math.log(4))

    def test_report_invariants_and_descent(self, small):
        report = train(small, TrainConfig(pool_grid=2, **FAST), val=small)
        low, high = slope_bounds(PnHyper())
        assert [r.epoch for r in report.records] == list(range(9))
        for r in report.records:
            assert low <= r.a <= high and abs(r.b) < 0.6
            assert all(math.isfinite(x) for x in (r.task_loss, r.variation, r.total_loss))
            assert r.total_loss == pytest.approx(r.task_loss)  # lambda = 0
        assert report.final.total_loss <= report.records[1].total_loss

    def test_deterministic_csv(self, small):
        cfg = TrainConfig(lam=0.5, pool_grid=2, **FAST)
        first = train(small, cfg).to_csv()
        assert first == train(small, cfg).to_csv()
        assert first.splitlines()[0] == ",".join(REPORT_HEADER)

    def test_regularization_lowers_variation(self, small):
        plain = train(small, TrainConfig(pool_grid=2, **FAST))
        smooth = train(small, TrainConfig(pool_grid=2, lam=10.0, **FAST))
        assert smooth.final.variation < plain.final.variation

    def test_raw_pipeline_keeps_prompt_params(self, small):
        report = train(small, TrainConfig(pool_grid=2, use_prompts=False, **FAST))
        assert len({(r.a, r.b) for r in report.records}) == 1
        assert all(r.variation == 0 for r in report.records)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_is_reported(self, small):
        with pytest.raises(TrainingDiverged) as info:
            train(small, TrainConfig(pool_grid=2, epochs=2, head_lr=1e306))
        assert {"m", "n", "weights", "bias", "epoch"} <= set(info.value.state)

    @pytest.mark.parametrize("bad", [dict(lr=0), dict(momentum=1.0), dict(lam=11.0), dict(lam=-1.0)])
    def test_invalid_config(self, bad):
        with pytest.raises(DomainError):
            TrainConfig(**bad)

    def test_static_camera_defaults_learn_the_task(self):
        report = train(generate_synthetic(SyntheticConfig()), TrainConfig())
        assert report.final.train_acc >= 0.95


class TestEvaluate:
    def test_zero_classifier_predicts_class_zero(self, small):
        acc = evaluate(PnParams(), LinearClassifier.zeros(4, 2), small)
        assert acc == pytest.approx(np.mean(small.labels == 0))

    def test_single_correct_clip(self, small):
        clf = LinearClassifier.zeros(4, 2)
        clf.bias[int(small.labels[3])] = 1.0
        assert evaluate(PnParams(), clf, small.subset([3])) == 1.0

    def test_empty(self):
        empty = Dataset(np.zeros((0, 4, 4, 3, 3)), np.zeros(0, dtype=int))
        with pytest.raises(DomainError):
            evaluate(PnParams(), LinearClassifier.zeros(4), empty)


class TestSweep:
    def test_single_lambda_matches_train(self, small):
        cfg = TrainConfig(pool_grid=2, **FAST)
        sweep = lambda_sweep(small, cfg, [0])
        assert sweep.reports[0].to_csv() == train(small, cfg).to_csv()

    def test_variation_non_increasing(self, small):
        sweep = lambda_sweep(small, TrainConfig(pool_grid=2, **FAST), [0, 0.5, 2.5, 5])
        v = [row[3] for row in sweep.summary_rows()]
        for lo, hi in zip(v, v[1:]):
            assert hi <= lo * (1 + 1e-9)
        a = [row[1] for row in sweep.summary_rows()]
        assert a[-1] <= a[0]
        assert sweep.to_csv().splitlines()[0] == "lambda,a,b,variation,train_acc,val_acc"
        assert len(sweep.to_csv().splitlines()) == 5

    def test_empty_lambdas(self, small):
        with pytest.raises(DomainError):
            lambda_sweep(small, TrainConfig(), [])
