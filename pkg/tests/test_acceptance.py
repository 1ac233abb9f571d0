"""Acceptance suite: one test per shipping criterion, each printing a
single pass/fail verdict line (re-echoed in the terminal summary).

Criteria, in test order:
 1. finite-difference gradient fidelity across model variants
 2. tied shared-weight gradient equals the sum over untied per-layer copies
 3. fresh init is bitwise-equivalent to the delay-disabled baseline
 4. parameter counts match the published configurations exactly
 5. measured receptive field equals the analytic bound; causality holds
 6. bounded-lookahead streaming matches full inference
 7. delayed-recall task: memory model learns it, no-delay control cannot
 8. future-recall task: bidirectional model learns it, causal control cannot
 9. learning-rate ramp values and degradation-triggered halving
10. end-to-end training runs are deterministic
11. archive and checkpoint round-trips are value-exact
"""

import numpy as np

import conftest
from reference_model import ref_backward, ref_forward

from rmnlab.cli import main as cli_main
from rmnlab.data import (
    Corpus,
    Utterance,
    gen_delayed_recall,
    gen_future_recall,
    mean_var_normalize,
    read_archive,
    write_archive,
)
from rmnlab.model import (
    Model,
    RMNConfig,
    backward,
    check_gradients,
    forward,
    init_params,
    load_checkpoint,
    model_input,
    param_count,
    param_count_lstmp,
    probe_receptive_field,
    randomize_params,
    receptive_field,
    save_checkpoint,
    streaming_forward,
)
from rmnlab.trainer import TrainConfig, fit, lr_for_epoch


def _verdict(num: int, label: str, check) -> None:
    line = f"criterion {num:02d} {label}: "
    try:
        check()
    except BaseException:
        conftest.acceptance_lines.append(line + "FAIL")
        print(line + "FAIL")
        raise
    conftest.acceptance_lines.append(line + "PASS")
    print(line + "PASS")


def tiny_config(**kw) -> RMNConfig:
    base = dict(input_dim=6, wide_dim=8, memory_dim=5, num_memory_layers=3,
                num_classes=4, direction="uni", shared_weight_form="diagonal",
                residual_interval=2, delay_enabled=True)
    base.update(kw)
    return RMNConfig(**base)


def probe_batch(config: RMNConfig, t_frames: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, (t_frames, config.input_dim))
    labels = rng.integers(0, config.num_classes, t_frames)
    return x, labels


def rel_err(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-12)
    return float(np.max(np.abs(a - b) / denom))


# --- 1: gradient fidelity ---------------------------------------------------------


def test_criterion_01_gradient_fidelity():
    # spans direction x shared form x residual on/off
    variants = [
        dict(direction="uni", shared_weight_form="diagonal", residual_interval=2),
        dict(direction="uni", shared_weight_form="full", residual_interval=None),
        dict(direction="bi", shared_weight_form="diagonal", residual_interval=None),
        dict(direction="bi", shared_weight_form="full", residual_interval=2),
        dict(direction="uni", shared_weight_form="diagonal", residual_interval=None),
        dict(direction="bi", shared_weight_form="diagonal", residual_interval=3),
    ]

    def check():
        for seed, kw in enumerate(variants):
            config = tiny_config(**kw)
            params = init_params(config, seed)
            randomize_params(params, seed + 50)
            x, labels = probe_batch(config, 7, seed + 100)
            err = check_gradients(params, config, x, labels)
            assert err < 1e-4, f"{kw}: max relative error {err:.3e}"

    _verdict(1, "gradient fidelity", check)


# --- 2: shared-weight gradient decomposition ---------------------------------------


def test_criterion_02_shared_weight_decomposition():
    def check():
        for seed, kw in enumerate([
            dict(direction="uni", shared_weight_form="diagonal"),
            dict(direction="bi", shared_weight_form="full"),
        ]):
            config = tiny_config(**kw)
            params = init_params(config, seed)
            randomize_params(params, seed + 9)
            x, labels = probe_batch(config, 9, seed + 19)

            cache, _ = forward(params, config, x)
            backward(params, config, cache, labels)
            store, _ = ref_forward(params, config, x)
            _, ref_grads = ref_backward(params, config, store, labels)

            untied_past = np.sum(ref_grads["shared_past"], axis=0)
            assert rel_err(params.shared_past.grad, untied_past) < 1e-10
            if config.direction == "bi":
                untied_future = np.sum(ref_grads["shared_future"], axis=0)
                assert rel_err(params.shared_future.grad, untied_future) < 1e-10

    _verdict(2, "shared-weight gradient decomposition", check)


# --- 3: zero-init equivalence -------------------------------------------------------


def test_criterion_03_zero_init_equivalence():
    def check():
        config = tiny_config()
        baseline_cfg = tiny_config(delay_enabled=False)
        x, labels = probe_batch(config, 8, 7)

        params = init_params(config, 3)       # training init: shared transforms zero
        base = init_params(baseline_cfg, 3)

        cache, logits = forward(params, config, x)
        bcache, blogits = forward(base, baseline_cfg, x)
        assert np.array_equal(logits, blogits)

        backward(params, config, cache, labels)
        backward(base, baseline_cfg, bcache, labels)
        for p, bp in zip(params.parameters(), base.parameters()):
            if p.name.startswith("shared"):
                continue
            assert p.name == bp.name
            assert rel_err(p.grad, bp.grad) < 1e-12, p.name

    _verdict(3, "zero-init delay-disabled equivalence", check)


# --- 4: parameter counts -------------------------------------------------------------


def test_criterion_04_parameter_counts():
    def big(input_dim, direction):
        return RMNConfig(input_dim=input_dim, wide_dim=1024, memory_dim=512,
                         num_memory_layers=18, num_classes=4006,
                         direction=direction, shared_weight_form="diagonal",
                         residual_interval=3, delay_enabled=True)

    def check():
        assert param_count(big(440, "uni")) == 10_336_166
        assert param_count(big(40, "bi")) == 9_927_078
        assert param_count(big(540, "uni")) == 10_438_566
        assert param_count(big(140, "bi")) == 10_029_478

        lstmp = param_count_lstmp(3, 1024, 512, 40, 4006)
        assert lstmp == 14_289_830
        reduction = 100.0 * (lstmp - param_count(big(440, "uni"))) / lstmp
        assert 28.9 - 3.0 <= reduction <= 28.9 + 3.0, f"reduction {reduction:.1f}%"

    _verdict(4, "parameter counts", check)


# --- 5: receptive field ----------------------------------------------------------------


def test_criterion_05_receptive_field():
    def probe(config, t_frames, seed=5):
        params = init_params(config, seed)
        randomize_params(params, seed)  # zero shared transforms carry no signal
        return probe_receptive_field(params, config, t_frames, seed)

    def check():
        # widths comfortably above the relu die-off scale so the extremal
        # delay path cannot be gated shut by an unlucky draw
        for layers in (1, 2, 3, 5):
            config = tiny_config(num_memory_layers=layers, memory_dim=10, wide_dim=12)
            span = layers * (layers + 1) // 2
            assert probe(config, 2 * span + 8) == (span, 0)

        spliced = tiny_config(num_memory_layers=2, memory_dim=10, wide_dim=12,
                              splice_left=2, splice_right=1, input_dim=6 * 4)
        assert receptive_field(spliced) == (3 + 2, 1)
        assert probe(spliced, 24) == (5, 1)

        # causality: a future perturbation must not move any earlier logit
        config = tiny_config(num_memory_layers=3)
        params = init_params(config, 11)
        randomize_params(params, 11)
        x, _ = probe_batch(config, 20, 13)
        _, logits = forward(params, config, x)
        bumped = x.copy()
        bumped[12] += 1.0
        _, logits2 = forward(params, config, bumped)
        assert np.array_equal(logits[:12], logits2[:12])
        assert not np.array_equal(logits[12:], logits2[12:])

    _verdict(5, "receptive field bound and causality", check)


# --- 6: streaming equivalence -------------------------------------------------------------


def test_criterion_06_streaming_equivalence():
    def check():
        config = tiny_config(direction="bi", num_memory_layers=3, memory_dim=6)
        params = init_params(config, 17)
        randomize_params(params, 17)
        x, _ = probe_batch(config, 50, 23)
        _, full = forward(params, config, x)
        lookahead = receptive_field(config)[1]
        for chunk in (1, 7, 64):
            streamed = streaming_forward(params, config, x, chunk, lookahead)
            diff = float(np.max(np.abs(streamed - full)))
            assert diff <= 1e-9, f"chunk {chunk}: max logit diff {diff:.3e}"

    _verdict(6, "streaming equivalence", check)


# --- 7 and 8: behavioral recall tasks --------------------------------------------------------

RECALL_CLASSES = 10
RECALL_DELAY = 6
RECALL_FRAMES = 100


def recall_model_config(direction, splice_left, splice_right, delay_enabled=True):
    width = splice_left + 1 + splice_right
    return RMNConfig(input_dim=RECALL_CLASSES * width, wide_dim=64, memory_dim=32,
                     num_memory_layers=8, num_classes=RECALL_CLASSES + 1,
                     direction=direction, shared_weight_form="diagonal",
                     residual_interval=1, delay_enabled=delay_enabled,
                     splice_left=splice_left, splice_right=splice_right)


def recall_train_config(lr, max_epochs=30):
    # flat rate: ramp never finishes inside the budget, so no halving applies
    return TrainConfig(schedule="ramp_then_halve", base_lr=lr, peak_lr=lr,
                       ramp_epochs=40, halve_factor=0.5, momentum=0.9, l2=1e-5,
                       max_utts_per_batch=5, truncation_chunk=None,
                       max_epochs=max_epochs, seed=0)


def masked_fer(config, params, corpus) -> float:
    """Error rate over frames whose label is a real class, not the null."""
    wrong = total = 0
    for utt in corpus.utterances:
        _, logits = forward(params, config, model_input(config, utt.features))
        pred = logits.argmax(axis=1)
        keep = utt.labels != RECALL_CLASSES
        wrong += int((pred[keep] != utt.labels[keep]).sum())
        total += int(keep.sum())
    return wrong / total


def train_recall(config, train, valid, lr, stop_below=None, max_epochs=30) -> float:
    model = Model(config=config, params=init_params(config, 0))

    def early_stop(stats, m):
        return (stop_below is not None
                and masked_fer(config, m.params, valid) <= stop_below)

    fit(model, train, valid, recall_train_config(lr, max_epochs), on_epoch=early_stop)
    return masked_fer(config, model.params, valid)


def test_criterion_07_delayed_recall():
    train = mean_var_normalize(
        gen_delayed_recall(RECALL_CLASSES, RECALL_DELAY, RECALL_FRAMES, 2000, seed=100))
    valid = mean_var_normalize(
        gen_delayed_recall(RECALL_CLASSES, RECALL_DELAY, RECALL_FRAMES, 200, seed=200))

    def check():
        # the 5-frame left splice keeps the recall target out of the
        # no-delay receptive field while letting the taps bridge the gap
        memory = train_recall(recall_model_config("uni", 5, 0), train, valid,
                              lr=0.05, stop_below=0.04)
        control = train_recall(recall_model_config("uni", 5, 0, delay_enabled=False),
                               train, valid, lr=0.05, max_epochs=10)
        assert memory <= 0.05, f"memory model masked FER {memory:.3f}"
        assert control >= 0.80, f"no-delay control masked FER {control:.3f}"

    _verdict(7, "delayed-recall behavior", check)


def test_criterion_08_future_recall():
    train = mean_var_normalize(
        gen_future_recall(RECALL_CLASSES, RECALL_DELAY, RECALL_FRAMES, 2000, seed=300))
    valid = mean_var_normalize(
        gen_future_recall(RECALL_CLASSES, RECALL_DELAY, RECALL_FRAMES, 200, seed=400))

    def check():
        # the bidirectional taps double the gradient energy; 0.05 diverges here
        bi = train_recall(recall_model_config("bi", 0, 5), train, valid,
                          lr=0.03, stop_below=0.04)
        causal = train_recall(recall_model_config("uni", 0, 5), train, valid,
                              lr=0.03, max_epochs=10)
        assert bi <= 0.05, f"bidirectional masked FER {bi:.3f}"
        assert causal >= 0.80, f"causal control masked FER {causal:.3f}"

    _verdict(8, "future-recall behavior", check)


# --- 9: learning-rate schedule ------------------------------------------------------------------


def test_criterion_09_lr_schedule():
    def check():
        config = TrainConfig()  # base 0.2, peak 1.0, ramp 4, halve 0.5
        history = [2.0, 1.8, 1.6, 1.5]
        ramp = [lr_for_epoch(config, e, history[: e - 1]) for e in range(1, 6)]
        assert ramp == [0.2, 0.4, 0.6000000000000001, 0.8, 1.0]

        # one degradation after the ramp: exactly one halving, then it holds
        degrading = [2.0, 1.5, 1.2, 1.0, 0.9, 0.95, 0.85]
        assert lr_for_epoch(config, 6, degrading[:5]) == 1.0
        assert lr_for_epoch(config, 7, degrading[:6]) == 0.5
        assert lr_for_epoch(config, 8, degrading[:7]) == 0.5

    _verdict(9, "learning-rate schedule", check)


# --- 10: training determinism ----------------------------------------------------------------------


def test_criterion_10_training_determinism(tmp_path):
    def check():
        train_arc = tmp_path / "train.arc"
        valid_arc = tmp_path / "valid.arc"
        write_archive(gen_delayed_recall(3, 1, 12, 8, seed=31), train_arc)
        write_archive(gen_delayed_recall(3, 1, 12, 4, seed=32), valid_arc)

        metrics = []
        for tag in ("a", "b"):
            out_dir = tmp_path / f"run_{tag}"
            cfg = tmp_path / f"exp_{tag}.cfg"
            cfg.write_text(
                f"train_archive = {train_arc}\nvalid_archive = {valid_arc}\n"
                f"out_dir = {out_dir}\nnum_memory_layers = 2\nwide_dim = 8\n"
                "memory_dim = 4\nmax_epochs = 3\nseed = 5\n"
            )
            assert cli_main(["train", str(cfg)]) == 0
            rows = (out_dir / "metrics.csv").read_text().strip().split("\n")
            metrics.append([",".join(r.split(",")[:-1]) for r in rows])

        assert metrics[0] == metrics[1]
        first = load_checkpoint(tmp_path / "run_a" / "final.ckpt")
        second = load_checkpoint(tmp_path / "run_b" / "final.ckpt")
        assert first.config == second.config
        for p, q in zip(first.params.parameters(), second.params.parameters()):
            assert np.array_equal(p.value, q.value), p.name

    _verdict(10, "training determinism", check)


# --- 11: round-trips ------------------------------------------------------------------------------------


def test_criterion_11_round_trips(tmp_path):
    def check():
        rng = np.random.default_rng(41)
        utts = []
        for i in range(5):
            frames = int(rng.integers(1, 9))
            feats = rng.normal(0.0, 10.0 ** rng.integers(-6, 7), (frames, 3))
            labels = rng.integers(0, 4, frames) if i % 2 == 0 else None
            utts.append(Utterance(id=f"utt{i}", features=feats, labels=labels))
        corpus = Corpus(utterances=utts, feature_dim=3, num_classes=4)

        arc = tmp_path / "round.arc"
        write_archive(corpus, arc)
        loaded = read_archive(arc)
        assert len(loaded) == len(corpus)
        for orig, back in zip(corpus.utterances, loaded.utterances):
            assert back.id == orig.id
            assert np.array_equal(back.features, orig.features)
            if orig.labels is None:
                assert back.labels is None
            else:
                assert np.array_equal(back.labels, orig.labels)

        for seed, kw in enumerate([
            dict(direction="uni", shared_weight_form="diagonal"),
            dict(direction="bi", shared_weight_form="full", residual_interval=None),
        ]):
            config = tiny_config(**kw)
            params = init_params(config, seed)
            randomize_params(params, seed + 61)
            path = tmp_path / f"round{seed}.ckpt"
            save_checkpoint(Model(config=config, params=params), path)
            restored = load_checkpoint(path)
            assert restored.config == config
            for p, q in zip(params.parameters(), restored.params.parameters()):
                assert np.array_equal(p.value, q.value), p.name

    _verdict(11, "round-trip exactness", check)
