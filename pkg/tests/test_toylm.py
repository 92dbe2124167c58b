import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from errors import ConfigurationError
from keying import Xoshiro256StarStar
from samplers import TokenSequence, generate
from schemes import SamplerParams, Scheme
from toylm import ONE_HOT, PRESETS, ToyModel, _log_gamma_variate, entropy_of_completion, next_distribution, row_entropy

contexts = st.lists(st.integers(0, 63), min_size=0, max_size=6)


@given(context=contexts)
def test_rows_are_distributions(context):
    p = ToyModel(order=2, vocab_size=64, alpha=0.3, seed=5).probabilities(context)
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    assert (p >= 0).all()


def test_rows_are_reproducible():
    a = ToyModel(order=1, vocab_size=32, alpha=0.5, seed=9)
    b = ToyModel(order=1, vocab_size=32, alpha=0.5, seed=9)
    c = ToyModel(order=1, vocab_size=32, alpha=0.5, seed=10)
    assert np.array_equal(a.log_probs([4]), b.log_probs([4]))
    assert not np.array_equal(a.log_probs([4]), c.log_probs([4]))
    assert not np.array_equal(a.log_probs([4]), a.log_probs([5]))


def test_rows_are_read_only(toy):
    with pytest.raises(ValueError):
        toy.log_probs([1])[0] = 0.0


def test_order_zero_ignores_context():
    model = ToyModel(order=0, vocab_size=16, alpha=0.5, seed=1)
    assert np.array_equal(model.log_probs([]), model.log_probs([1, 2, 3]))


def test_only_last_k_tokens_matter():
    model = ToyModel(order=2, vocab_size=16, alpha=0.5, seed=1)
    assert np.array_equal(model.log_probs([9, 1, 2]), model.log_probs([4, 1, 2]))
    assert np.array_equal(model.log_probs([2]), model.log_probs([0, 2]))


def test_huge_concentration_is_near_uniform():
    p = ToyModel(order=1, vocab_size=64, alpha=1e6, seed=2).probabilities([3])
    assert p.max() - p.min() < 1e-2


def test_entropy_grows_with_concentration():
    means = []
    for alpha in (0.01, 0.1, 1.0, 10.0):
        model = ToyModel(order=1, vocab_size=64, alpha=alpha, seed=3)
        means.append(np.mean([row_entropy(model, [c]) for c in range(64)]))
    assert means == sorted(means)
    assert len(set(means)) == 4


def test_presets_order_entropy():
    base = ToyModel(order=1, vocab_size=64, seed=4)
    low, medium, high = (
        np.mean([row_entropy(base.with_alpha(PRESETS[name]), [c]) for c in range(64)])
        for name in ("low", "medium", "high")
    )
    assert low < medium < high <= math.log(64)


def test_log_gamma_variates_follow_gamma_law():
    for alpha in (0.3, 2.5):
        rng = Xoshiro256StarStar.from_seed(17)
        draws = np.exp([_log_gamma_variate(rng, alpha) for _ in range(5000)])
        assert stats.kstest(draws, stats.gamma(alpha).cdf).pvalue > 1e-3


def test_one_hot_rows():
    model = ToyModel(order=1, vocab_size=16, seed=1, one_hot=True)
    p = model.probabilities([5])
    assert p.max() == 1.0 and (p > 0).sum() == 1
    assert row_entropy(model, [5]) == 0.0


def test_next_distribution_wraps_log_probs(toy):
    lv = next_distribution(toy, [1, 2])
    assert lv.vocab_size == toy.vocab_size
    assert np.array_equal(lv.logits, toy.log_probs([2]))


# ---------- строка модели ----------
@pytest.mark.parametrize(
    "text,alpha,vocab,order",
    [("toy:medium:64:1", 0.5, 64, 1), ("toy:low:32:2", 0.05, 32, 2), ("toy:0.1:128:0", 0.1, 128, 0)],
)
def test_model_from_spec(text, alpha, vocab, order):
    model = ToyModel.from_spec(text, seed=1)
    assert (model.alpha, model.vocab_size, model.order, model.seed) == (alpha, vocab, order, 1)


def test_model_spec_roundtrip():
    model = ToyModel.from_spec("toy:high:16:2", seed=3)
    assert ToyModel.from_spec(str(model), seed=3) == model
    assert ToyModel.from_spec(f"toy:{ONE_HOT}:16", seed=3).one_hot


@pytest.mark.parametrize("text", ["toy", "llm:medium", "toy:warm", "toy:medium:x", "toy:0.5:1", "toy:-1"])
def test_model_spec_errors(text):
    with pytest.raises(ConfigurationError):
        ToyModel.from_spec(text)


# ---------- энтропия продолжения ----------
def test_completion_entropy_of_deterministic_rows(key):
    model = ToyModel(order=1, vocab_size=16, seed=1, one_hot=True)
    seq = generate(model, SamplerParams(scheme=Scheme.EXPONENTIAL), key, TokenSequence((), 16), 20)
    assert entropy_of_completion(model, seq) == 0.0


def test_completion_entropy_of_fair_coin(make_uniform):
    seq = TokenSequence((0, 1, 1, 0), 2)
    assert entropy_of_completion(make_uniform(2), seq) == pytest.approx(2 * math.log(2))


def test_completion_entropy_is_nonnegative(toy, key):
    seq = generate(toy, SamplerParams(scheme=Scheme.EXPONENTIAL), key, TokenSequence((2,), toy.vocab_size, 1), 64)
    assert entropy_of_completion(toy, seq) >= 0.0
    assert entropy_of_completion(toy, seq, positions=[]) == 0.0
