import math

import pytest

import xtopics as xt


@pytest.fixture(scope="module")
def synth():
    spec = xt.SynthSpec()
    spec.docs_per_collection = [30, 30]
    spec.tokens_per_doc = 20
    spec.vocab_size = 60
    spec.k_common = 3
    spec.k_per_collection = [4, 4]
    corpus, vocab, truth, sigma = xt.generate(spec, 11)
    return corpus, vocab, truth, sigma


def test_generate_shapes(synth):
    corpus, vocab, truth, sigma = synth
    assert corpus.num_collections == 2
    assert corpus.num_docs == 60
    assert corpus.num_tokens == 1200
    assert len(vocab) == 60
    assert truth.k_common == 3
    assert len(sigma) == 3
    assert all(0.0 <= s <= 1.0 for s in sigma)


def test_clda_train_and_eval(synth):
    corpus, vocab, truth, _ = synth
    train, heldout = xt.holdout_split(corpus, 0.2, 7)

    cfg = xt.CldaConfig()
    cfg.k_common = 3
    cfg.k_per_collection = [3, 4]
    cfg.sweeps = 10
    cfg.seed = 5
    cfg.eval_interval = 0
    st = xt.CldaState.init(train, len(vocab), cfg)
    result = xt.train_clda(st, heldout)
    assert result.sweeps_run == 10
    assert st.sweeps_done == 10
    st.check_invariants()

    model = st.snapshot()
    assert model.kind == "clda"
    report = xt.left_to_right_perplexity(model, heldout, particles=5, seed=3)
    assert 1.0 < report.perplexity < len(vocab) * 2
    assert report.tokens > 0

    sigma = st.estimate_sigma()
    common, non_common = xt.distinguishability(sigma, 2)
    assert 0.0 <= common <= 1.0
    assert non_common is not None

    total = sum(model.phi_shared[0])
    assert math.isclose(total, 1.0, rel_tol=1e-9)


def test_chdp_train(synth):
    corpus, vocab, _, _ = synth
    cfg = xt.ChdpConfig()
    cfg.init_common = 3
    cfg.init_spec = [1, 1]
    cfg.sweeps = 8
    cfg.seed = 5
    cfg.eval_interval = 0
    st = xt.ChdpState.init(corpus, len(vocab), cfg)
    result = xt.train_chdp(st, None)
    assert result.sweeps_run == 8
    assert st.live_topics >= 1
    assert st.alpha0 > 0.0
    st.check_invariants()
    assert st.snapshot().kind == "chdp"


def test_checkpoint_roundtrip(tmp_path, synth):
    corpus, vocab, _, _ = synth
    cfg = xt.CldaConfig()
    cfg.k_common = 3
    cfg.k_per_collection = [3, 4]
    cfg.seed = 9
    st = xt.CldaState.init(corpus, len(vocab), cfg)
    st.vocab_hash = vocab.hash
    for _ in range(3):
        st.sweep()

    path = str(tmp_path / "ck.bin")
    xt.save_checkpoint(st, path)
    info = xt.read_checkpoint_info(path)
    assert info.kind == "clda"
    assert info.sweeps_done == 3
    assert info.vocab_hash == vocab.hash

    back = xt.load_clda_checkpoint(path, corpus)
    assert back.sweeps_done == 3
    back.check_invariants()
    back.sweep()
    assert back.sweeps_done == 4

    with pytest.raises(xt.DataError):
        xt.load_chdp_checkpoint(path, corpus)


def test_coherence_index(synth):
    corpus, vocab, _, _ = synth
    index = xt.CooccurrenceIndex.build(corpus, len(vocab))
    assert index.num_docs == 60
    words = [w for w in range(len(vocab)) if index.doc_freq(w) > 0][:4]
    value = xt.coherence(words, index)
    assert isinstance(value, float)
    mc = xt.mutual_coherence(words[:2], words[2:], index)
    assert isinstance(mc, float)


def test_usage_errors(synth):
    corpus, vocab, truth, _ = synth
    with pytest.raises(xt.UsageError):
        xt.left_to_right_perplexity(truth, corpus, particles=0, seed=1)
    with pytest.raises(xt.UsageError):
        xt.distinguishability([0.5], 2)
