from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leakagesim.config import ConfigError, TopicMixture
from leakagesim.textgen import (
    BigramLanguageModel,
    DegenerateDistributionError,
    Document,
    Topic,
    TopicId,
    assign_topic,
    generate_document,
    generate_paragraph,
    make_topics,
    select_prompt,
    shifted_distribution,
    tokenize,
)


def _topic(keyword_ids=(), log_shift=4.0, prompts=("a b",), tid=TopicId.TREAT_POS):
    return Topic(tid, tuple(prompts), tuple(f"k{i}" for i in keyword_ids), tuple(keyword_ids), log_shift)


def _keyword_count(paragraph, keywords):
    return sum(tok in keywords for tok in paragraph.tokens)


def test_tokenize_lowercases_and_strips_punctuation():
    assert tokenize("The IMF, in [COUNTRY]'s view.") == ["the", "imf", "in", "country", "'s", "view"]


def test_bigram_model_rows_are_distributions(lm):
    assert 1000 <= len(lm.vocabulary) <= 2000
    for context in ([], ["the"], ["imf", "loan"], ["not-a-word"]):
        p = lm.next_token_distribution(context)
        assert p.shape == (len(lm.vocabulary),)
        assert np.all(p > 0)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_bigram_model_add_one_estimate():
    lm = BigramLanguageModel(["a b", "a b", "a c"])
    # vocabulary (a, b, c); after "a": counts b=2, c=1 -> (0+1, 2+1, 1+1) / (3 + 3)
    assert lm.next_token_distribution(["a"]) == pytest.approx([1 / 6, 3 / 6, 2 / 6])
    # cross-sentence bigram b->a happens twice, c has no successor
    assert lm.next_token_distribution(["c"]) == pytest.approx([1 / 3] * 3)


def test_configured_keywords_are_in_model_vocabulary(config, lm, topics):
    index = lm.index()
    for topic in topics.values():
        assert all(kw in index for kw in topic.keywords)
        assert [index[kw] for kw in topic.keywords] == list(topic.keyword_ids)
    assert topics[TopicId.GENERAL].log_shift == 0.0
    assert topics[TopicId.TREAT_POS].log_shift == 4.0


def test_unknown_keyword_is_a_config_error(config, lm):
    spec = config.topics["TreatPos"]
    bad = replace(config, topics={**config.topics, "TreatPos": replace(spec, keywords=("zzzunknown",) * 8)})
    with pytest.raises(ConfigError, match="zzzunknown"):
        make_topics(bad, lm)


def test_assign_topic_degenerate_mixture():
    rng = np.random.default_rng(0)
    assert {assign_topic(1, 0, (1.0, 0.0, 0.0), rng) for _ in range(200)} == {TopicId.CONF_POS}
    assert {assign_topic(0, 1, (1.0, 0.0, 0.0), rng) for _ in range(200)} == {TopicId.CONF_NEG}


def test_assign_topic_frequencies():
    rng = np.random.default_rng(42)
    counts = Counter(assign_topic(0, 1, TopicMixture(), rng) for _ in range(20_000))
    assert 0.18 <= counts[TopicId.TREAT_POS] / 20_000 <= 0.22
    assert 0.18 <= counts[TopicId.CONF_NEG] / 20_000 <= 0.22
    assert 0.57 <= counts[TopicId.GENERAL] / 20_000 <= 0.63
    assert counts[TopicId.TREAT_NEG] == 0 and counts[TopicId.CONF_POS] == 0


def test_assign_topic_rejects_bad_mixture():
    with pytest.raises(ConfigError):
        assign_topic(0, 0, (0.5, 0.6, 0.2), np.random.default_rng(0))


def test_prompt_without_placeholder_is_unchanged():
    topic = _topic(prompts=("Plain words only",))
    assert select_prompt(topic, ("Chile",), np.random.default_rng(0)) == (0, ["plain", "words", "only"])


def test_prompt_placeholder_substitution():
    topic = _topic(prompts=("Loans to [COUNTRY] rose",))
    _, tokens = select_prompt(topic, ("Sri Lanka",), np.random.default_rng(0))
    assert tokens == ["loans", "to", "sri", "lanka", "rose"]
    with pytest.raises(ConfigError):
        select_prompt(topic, (), np.random.default_rng(0))


def test_prompt_choice_is_uniform(topics):
    rng = np.random.default_rng(42)
    topic = topics[TopicId.TREAT_POS]
    counts = Counter(select_prompt(topic, ("Chile",), rng)[0] for _ in range(4000))
    assert sorted(counts) == [0, 1, 2, 3]
    assert all(0.22 <= c / 4000 <= 0.28 for c in counts.values())


def test_shift_worked_example():
    out = shifted_distribution(np.array([0.5, 0.5]), _topic(keyword_ids=(1,)))
    e4 = np.exp(4.0)
    assert out == pytest.approx([0.5 / (0.5 + 0.5 * e4), 0.5 * e4 / (0.5 + 0.5 * e4)], abs=1e-15)
    assert out == pytest.approx([0.01799, 0.98201], abs=1e-5)


def test_zero_shift_is_identity():
    base = np.array([0.2, 0.3, 0.5])
    assert np.array_equal(shifted_distribution(base, _topic(keyword_ids=(1,), log_shift=0.0)), base)


def test_zero_probability_keyword_stays_zero():
    out = shifted_distribution(np.array([0.0, 1.0]), _topic(keyword_ids=(0,)))
    assert out[0] == 0.0 and out[1] == 1.0


def test_all_zero_distribution_is_degenerate():
    with pytest.raises(DegenerateDistributionError):
        shifted_distribution(np.zeros(3), _topic(keyword_ids=(0,)))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12).filter(lambda v: sum(v) > 1e-3),
    st.data(),
    st.floats(0.01, 8.0),
)
def test_shift_validity_and_monotonicity(weights, data, log_shift):
    base = np.array(weights) / np.sum(weights)
    ids = data.draw(st.lists(st.integers(0, len(base) - 1), min_size=1, max_size=len(base), unique=True))
    out = shifted_distribution(base, _topic(keyword_ids=tuple(ids), log_shift=log_shift))
    assert np.all(out >= 0)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)
    before, after = base[ids].sum(), out[ids].sum()
    if before > 0 and 1 - before > 1e-9:
        assert after > before


def test_zero_length_paragraph_is_prompt(lm, topics):
    p = generate_paragraph(lm, topics[TopicId.TREAT_POS], ["the", "imf"], 0, np.random.default_rng(0))
    assert p.tokens == ("the", "imf")


def test_paragraph_determinism_and_length(lm, topics):
    topic = topics[TopicId.CONF_NEG]
    a = generate_paragraph(lm, topic, ["relations"], 40, np.random.default_rng(3))
    b = generate_paragraph(lm, topic, ["relations"], 40, np.random.default_rng(3), cache={})
    assert a == b
    assert len(a.tokens) == 41 and a.topic is TopicId.CONF_NEG


def test_keyword_shift_is_noticeable(lm, topics):
    rng = np.random.default_rng(42)
    treat, general = topics[TopicId.TREAT_POS], topics[TopicId.GENERAL]
    keywords = set(treat.keywords)
    cache: dict = {}
    n_treat = n_general = 0
    for _ in range(1000):
        _, prompt = select_prompt(treat, ("Chile",), rng)
        n_treat += _keyword_count(generate_paragraph(lm, treat, prompt, 40, rng, cache=cache), keywords) - sum(
            tok in keywords for tok in prompt)
        _, prompt = select_prompt(general, ("Chile",), rng)
        n_general += _keyword_count(generate_paragraph(lm, general, prompt, 40, rng, cache=cache), keywords)
    assert n_treat >= 3 * max(n_general, 1)


def test_document_structure(config, lm, topics):
    rng = np.random.default_rng(1)
    doc = generate_document(lm, 1, 0, replace(config, k=1), rng, topics=topics)
    assert len(doc) == 1
    doc = generate_document(lm, 1, 0, config, rng, topics=topics)
    assert len(doc) == config.k
    assert all(isinstance(tid, TopicId) for tid in doc.topics)
    assert not {TopicId.TREAT_POS, TopicId.CONF_NEG} & set(doc.topics)


def test_oracle_label_matches_sampling_topic(lm, topics):
    """Regenerating a paragraph under its stored topic reproduces it."""
    rng = np.random.default_rng(11)
    for tid in TopicId:
        state = rng.bit_generator.state
        prompt_id, prompt = select_prompt(topics[tid], ("Chile",), rng)
        p = generate_paragraph(lm, topics[tid], prompt, 20, rng, prompt_id=prompt_id)
        rng.bit_generator.state = state
        prompt_id2, prompt2 = select_prompt(topics[p.topic], ("Chile",), rng)
        again = generate_paragraph(lm, topics[p.topic], prompt2, 20, rng, prompt_id=prompt_id2)
        assert p.topic is tid and again == p


def test_document_depends_on_treatment_given_u(config, lm, topics):
    """Held-out TreatPos keyword counts separate t=1 from t=0 documents (u fixed)."""
    rng = np.random.default_rng(42)
    keywords = set(topics[TopicId.TREAT_POS].keywords)
    cache: dict = {}

    def score(t):
        doc = generate_document(lm, 1, t, config, rng, topics=topics, cache=cache)
        return sum(_keyword_count(p, keywords) for p in doc.paragraphs)

    s1 = np.array([score(1) for _ in range(150)], dtype=float)
    s0 = np.array([score(0) for _ in range(150)], dtype=float)
    # AUC as the Mann-Whitney probability, ties counted half
    auc = np.mean((s1[:, None] > s0[None, :]) + 0.5 * (s1[:, None] == s0[None, :]))
    assert auc > 0.9


def test_empty_document_properties():
    doc = Document()
    assert len(doc) == 0 and doc.n_tokens == 0 and doc.topics == []


def test_topic_roles():
    assert TopicId.TREAT_NEG.role == "treatment"
    assert TopicId.CONF_POS.role == "confounder"
    assert TopicId.GENERAL.role == "general"
