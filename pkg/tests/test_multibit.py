from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from detectors import score_exponential, score_greenlist
from errors import ConfigurationError, DomainError
from keying import MasterKey, SecretVector
from multibit import (
    MessageSpace,
    generate_multibit,
    global_pvalue,
    identify,
    identify_from_scores,
    score_all_messages,
    shifted_vector,
)
from samplers import TokenSequence, generate
from schemes import SamplerParams, Scheme

EXP = SamplerParams(scheme=Scheme.EXPONENTIAL, h=1)
GREEN = SamplerParams(scheme=Scheme.GREENLIST, h=1, gamma=0.25, delta=2.0)


# ---------- сдвиг ----------
def test_shifted_vector_examples():
    r0 = SecretVector(np.array([0.1, 0.2, 0.3, 0.4]))
    assert shifted_vector(r0, 0).entries.tolist() == [0.1, 0.2, 0.3, 0.4]
    assert shifted_vector(r0, 1).entries.tolist() == [0.2, 0.3, 0.4, 0.1]
    with pytest.raises(DomainError):
        shifted_vector(r0, 4)


@given(values=st.lists(st.floats(0.01, 0.99), min_size=2, max_size=12), data=st.data())
def test_shift_group_law(values, data):
    r0 = SecretVector(np.array(values))
    m = data.draw(st.integers(1, r0.d - 1))
    back = shifted_vector(shifted_vector(r0, m), r0.d - m)
    assert np.array_equal(back.entries, r0.entries)


def test_message_space():
    assert MessageSpace(16, 64).d == 64
    assert MessageSpace(300, 64).d == 300
    with pytest.raises(ConfigurationError):
        MessageSpace(0, 64)
    with pytest.raises(DomainError):
        MessageSpace(4, 8).check(4)


# ---------- скоры всех сообщений ----------
@pytest.mark.parametrize("vocab,d", [(4, 4), (16, 64), (16, 300), (64, 64)])
@pytest.mark.parametrize("params", [EXP, GREEN], ids=["exponential", "greenlist"])
def test_cyclic_scores_equal_shifted_key_detection(vocab, d, params, random_sequence, key):
    seq = random_sequence(33, vocab, seed=vocab + d)
    scores, scored, total = score_all_messages(seq, key, params, d)
    assert scores.shape == (d,)
    assert total == 32
    score_fn = score_exponential if params.scheme is Scheme.EXPONENTIAL else score_greenlist
    for m in range(d):
        naive, naive_scored = score_fn(seq, key, params, shift=m, dim=d)
        assert naive_scored == scored
        assert scores[m] == pytest.approx(naive, rel=1e-12, abs=1e-12)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), key_id=st.integers(0, 10_000), h=st.integers(0, 3))
def test_cyclic_scores_random_instances(seed, key_id, h):
    rng = np.random.default_rng(seed)
    seq = TokenSequence(tuple(int(t) for t in rng.integers(0, 6, size=20)), 6)
    key = MasterKey.from_int(key_id)
    params = SamplerParams(scheme=Scheme.EXPONENTIAL, h=h)
    scores, scored, _ = score_all_messages(seq, key, params, 8)
    for m in range(8):
        naive, _ = score_exponential(seq, key, params, shift=m, dim=8)
        assert scores[m] == pytest.approx(naive, rel=1e-12, abs=1e-12)


def test_repeated_tuple_contributes_once(key):
    seq = TokenSequence((2,) * 12, 8)
    scores, scored, total = score_all_messages(seq, key, EXP, 8)
    assert (scored, total) == (1, 11)


def test_score_all_messages_rejects_small_dimension(key):
    with pytest.raises(ConfigurationError):
        score_all_messages(TokenSequence((1, 2, 3), 8), key, EXP, 4)
    with pytest.raises(ConfigurationError):
        score_all_messages(TokenSequence((1, 2, 3), 8), key, SamplerParams(scheme=Scheme.VANILLA))


# ---------- генерация ----------
def test_message_zero_equals_plain_generation(toy, key):
    prompt = TokenSequence((), toy.vocab_size)
    plain = generate(toy, EXP, key, prompt, 48, dim=toy.vocab_size)
    assert generate_multibit(toy, EXP, key, prompt, 48, 0, 16) == plain


def test_messages_change_the_text(toy, key):
    prompt = TokenSequence((), toy.vocab_size)
    texts = {generate_multibit(toy, EXP, key, prompt, 48, m, 16).tokens for m in range(4)}
    assert len(texts) == 4


def test_more_messages_than_tokens(make_uniform, key):
    model = make_uniform(16)
    seq = generate_multibit(model, GREEN, key, TokenSequence((), 16), 32, 50, 64)
    assert len(seq) == 32
    assert all(0 <= t < 16 for t in seq.tokens)


def test_generate_multibit_errors(toy, key):
    prompt = TokenSequence((), toy.vocab_size)
    with pytest.raises(DomainError):
        generate_multibit(toy, EXP, key, prompt, 8, 16, 16)
    with pytest.raises(ConfigurationError):
        generate_multibit(toy, SamplerParams(scheme=Scheme.VANILLA), key, prompt, 8, 0, 16)
    with pytest.raises(ConfigurationError):
        generate_multibit(toy, EXP, key, prompt, 8, 0, 16, dim=32)


# ---------- идентификация ----------
def test_global_pvalue_single_message():
    assert global_pvalue(0.37, 1) == pytest.approx(0.37, rel=1e-14)
    assert global_pvalue(1.0, 10) == 1.0


def test_global_pvalue_matches_high_precision():
    getcontext().prec = 60
    exact = Decimal(1) - (Decimal(1) - Decimal("1e-9")) ** 1000
    assert global_pvalue(1e-9, 1000) == pytest.approx(float(exact), rel=1e-12)


def test_identify_single_message_equals_detection(toy, key):
    seq = generate(toy, EXP, key, TokenSequence((), toy.vocab_size), 64)
    report = identify(seq, key, EXP, 1, 1e-3)
    assert report.num_messages == 1
    assert report.best_message == 0
    assert report.global_pvalue == pytest.approx(report.per_message_pvalues[0], rel=1e-12)


def test_identify_ties_go_to_lowest_index():
    params = EXP
    scores = np.array([0.0, 5000.0, 6000.0, 6000.0])
    report = identify_from_scores(scores, 100, 100, params, 4, 1e-3)
    assert report.per_message_pvalues[1] == report.per_message_pvalues[2] == 0.0
    assert report.best_message == 1
    lower = identify_from_scores(np.array([0.0, 300.0, 300.0, 10.0]), 100, 100, params, 4, 1e-3)
    assert lower.per_message_pvalues[1] == lower.per_message_pvalues[2] > 0.0
    assert lower.best_message == 1
    flat = identify_from_scores(np.full(4, 100.0), 100, 100, params, 4, 1e-3)
    assert flat.best_message == 0


def test_identify_from_scores_validation():
    with pytest.raises(ConfigurationError):
        identify_from_scores(np.zeros(4), 10, 10, EXP, 5, 1e-3)
    with pytest.raises(ConfigurationError):
        identify_from_scores(np.zeros(4), 10, 10, EXP, 4, 1e-3, test="np")


@pytest.mark.parametrize(
    "params",
    [SamplerParams(scheme=Scheme.EXPONENTIAL, h=3), SamplerParams(scheme=Scheme.GREENLIST, delta=4.0, h=3)],
    ids=["exp", "green"],
)
def test_identify_recovers_message(toy, key, params):
    rng = np.random.default_rng(11)
    hits, texts = 0, set()
    for i in range(20):
        prompt = TokenSequence(tuple(int(t) for t in rng.integers(0, toy.vocab_size, 3)), toy.vocab_size, 3)
        seq = generate_multibit(toy, params, key, prompt, 256, 7, 16, seed=i)
        texts.add(seq.tokens)
        report = identify(seq, key, params, 16, 1e-3)
        assert report.scored_tokens > 200
        hits += report.best_message == 7 and report.flagged
    assert len(texts) == 20
    assert hits >= 18


def test_order_one_model_with_unit_window_cycles(toy, key):
    prompt = TokenSequence((5,), toy.vocab_size, 1)
    seq = generate_multibit(toy, EXP, key, prompt, 256, 7, 16, seed=0)
    # следующий токен однозначно задан предыдущим, пар (окно, токен) не больше |V|
    assert identify(seq, key, EXP, 16, 1e-3).scored_tokens <= toy.vocab_size


def test_global_pvalue_is_uniform_under_h0(key, random_sequence):
    pvals = [identify(random_sequence(64, 64, seed=i), key, EXP, 10, 0.01).global_pvalue for i in range(400)]
    assert stats.kstest(pvals, "uniform").pvalue > 1e-3
