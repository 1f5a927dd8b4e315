"""Configuration, metrics, datasets and the six experiment pipelines."""

import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phylab.channel import UlaConfig, steering_vector
from phylab.experiments import (
    CSV_COLUMNS,
    EXPERIMENTS,
    ConfigError,
    DatasetUnsupported,
    ExperimentConfig,
    ExperimentName,
    Metric,
    MetricValue,
    SweepResult,
    compute_metric,
    config_hash,
    generate_dataset,
    load_config,
    parse_config_text,
    read_dataset,
    rng_for,
    run_experiment,
    schema_description,
    write_dataset,
)
from phylab.experiments.autoencoder import hamming_analytic_bler, hamming_hard_bler
from phylab.experiments.datasets import partition_lattice
from phylab.experiments.doa import angle_lattice, cell_centers, cell_index, dnn_estimate_deg, train_doa_dnn
from phylab.experiments.gain import GainFrames, ls_gains, mrc_detect
from phylab.experiments.noma import analytic_sum_rate
from phylab.experiments.results import format_float

MINIMAL = """
[experiment]
name = doa_estimation
master_seed = 3
snr_grid_db = [0, 10, 20]
"""


def tiny(name, **overrides):
    """Seconds-scale configuration of ``name`` for pipeline tests."""
    base = {
        ExperimentName.OFDM_RECEIVER: dict(
            channel__num_subcarriers=16, channel__cp_length=4, channel__num_taps=4, channel__reduced_pilot_spacing=4,
            channel__dnn_subcarriers=4, network__hidden_sizes=(32,), train__num_iterations=200,
        ),
        ExperimentName.NOMA_DETECTION: dict(network__hidden_sizes=(32,), train__num_iterations=200),
        ExperimentName.AUTOENCODER_74: dict(train__num_iterations=300),
        ExperimentName.DOA_ESTIMATION: dict(
            channel__num_antennas=8, channel__max_angle_deg=20.0, channel__sample_step_deg=0.5,
            channel__cell_step_deg=2.0, channel__train_size=600, channel__val_size=100, channel__test_size=100,
            channel__music_grid_step_deg=0.5, network__hidden_sizes=(32,), train__num_iterations=300,
        ),
        ExperimentName.GAIN_ESTIMATION: dict(
            channel__num_antennas=8, channel__train_size=300, channel__val_size=50, channel__music_grid_step_deg=0.5,
            network__hidden_sizes=(16,), train__num_iterations=200,
        ),
        ExperimentName.MMWAVE_PRECODING: dict(
            channel__train_samples=100, channel__hybrid_iters=5, network__hidden_sizes=(16,),
            train__num_iterations=50,
        ),
    }[ExperimentName(name)]
    base.update(trials_per_point=40, snr_grid_db=(0.0, 10.0))
    base.update(overrides)
    return ExperimentConfig.default(name, **base)


class TestConfig:
    def test_minimal_file_gets_defaults(self):
        cfg = parse_config_text(MINIMAL)
        assert cfg.name is ExperimentName.DOA_ESTIMATION
        assert cfg.snr_grid_db == (0.0, 10.0, 20.0)
        assert cfg.channel.num_antennas == 16
        assert cfg.network.hidden_sizes == (256, 256)

    @pytest.mark.parametrize("key", ["name", "master_seed", "snr_grid_db"])
    def test_missing_required_key_is_named(self, key):
        text = "\n".join(line for line in MINIMAL.splitlines() if not line.startswith(key))
        with pytest.raises(ConfigError, match=f"experiment.{key}") as info:
            parse_config_text(text)
        assert info.value.key == f"experiment.{key}"

    @pytest.mark.parametrize(
        "extra,key",
        [
            ("[channel]\nnum_antenas = 8\n", "channel.num_antenas"),
            ("[channel]\nnum_antennas = 8.5\n", "channel.num_antennas"),
            ("[train]\nlearning_rate = fast\n", "train.learning_rate"),
            ("[extras]\nfoo = 1\n", "extras"),
            ("[network]\nhidden_sizes = [64, true]\n", "network.hidden_sizes"),
        ],
    )
    def test_schema_violations(self, extra, key):
        with pytest.raises(ConfigError) as info:
            parse_config_text(MINIMAL + extra)
        assert info.value.key == key

    @pytest.mark.parametrize("grid", ["[]", "[0, 10, 10]", "[5, 0]"])
    def test_grid_must_increase(self, grid):
        with pytest.raises(ConfigError, match="snr_grid_db"):
            parse_config_text(MINIMAL.replace("[0, 10, 20]", grid))

    def test_trials_must_be_positive(self):
        with pytest.raises(ConfigError, match="trials_per_point"):
            parse_config_text(MINIMAL + "trials_per_point = 0\n")

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            parse_config_text(MINIMAL.replace("doa_estimation", "radar"))

    def test_overrides(self):
        cfg = parse_config_text(
            MINIMAL, ["snr_grid_db=[0,5]", "channel.num_antennas=8", "num_iterations=10", "hidden_sizes=64"]
        )
        assert cfg.snr_grid_db == (0.0, 5.0)
        assert cfg.channel.num_antennas == 8
        assert cfg.train.num_iterations == 10
        assert cfg.network.hidden_sizes == (64,)

    @pytest.mark.parametrize("item", ["bogus=1", "no_equals_sign"])
    def test_bad_overrides(self, item):
        with pytest.raises(ConfigError):
            parse_config_text(MINIMAL, [item])

    def test_comments_and_whitespace_do_not_change_hash(self):
        noisy = "# comment\n" + MINIMAL.replace("= 3", "=   3   ; seed") + "\n\n"
        assert config_hash(parse_config_text(noisy)) == config_hash(parse_config_text(MINIMAL))

    def test_explicit_default_does_not_change_hash(self):
        a = parse_config_text(MINIMAL)
        b = parse_config_text(MINIMAL + "[channel]\nnum_antennas = 16\n")
        assert config_hash(a) == config_hash(b)

    def test_hash_tracks_content(self):
        a = parse_config_text(MINIMAL)
        b = parse_config_text(MINIMAL, ["master_seed=4"])
        assert config_hash(a) != config_hash(b)
        assert len(config_hash(a)) == 16

    def test_schema_lists_every_section(self):
        text = schema_description()
        for name in ExperimentName:
            assert f"[channel] for {name.value}" in text
        assert "[train]" in text and "snr_grid_db: list[float] (required)" in text

    @pytest.mark.parametrize("name", list(ExperimentName))
    def test_every_default_builds(self, name):
        assert ExperimentConfig.default(name).name is name


class TestMetrics:
    def test_identical_is_zero(self):
        bits = np.random.default_rng(0).integers(0, 2, (10, 8))
        assert compute_metric("BER", bits, bits).value == 0

    def test_all_wrong_is_one(self):
        assert compute_metric("BER", np.zeros(16), np.ones(16)).value == 1

    def test_mse_deg2(self):
        mv = compute_metric("MSE_deg2", [0.0, 10.0], [1.0, 7.0])
        assert mv.value == pytest.approx(5.0) and mv.trials == 2

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.0, 1.0), blocks=st.integers(1, 40), width=st.integers(1, 9))
    def test_bler_at_least_ber(self, seed, p, blocks, width):
        rng = np.random.default_rng(seed)
        truth = rng.integers(0, 2, (blocks, width))
        est = truth ^ (rng.random((blocks, width)) < p)
        assert compute_metric("BLER", truth, est).value >= compute_metric("BER", truth, est).value

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            compute_metric("BER", np.zeros(3), np.zeros(4))

    def test_stderr_of_bernoulli(self):
        rng = np.random.default_rng(1)
        mv = compute_metric("BLER", rng.integers(0, 2, 10_000), np.zeros(10_000, int))
        assert mv.stderr == pytest.approx(math.sqrt(0.25 / 10_000), rel=0.02)


class TestSeedingAndCsv:
    def test_streams_are_reproducible_and_distinct(self):
        a = rng_for(5, "x", 1).random(4)
        np.testing.assert_array_equal(a, rng_for(5, "x", 1).random(4))
        assert not np.allclose(a, rng_for(5, "x", 2).random(4))
        assert not np.allclose(a, rng_for(6, "x", 1).random(4))

    @pytest.mark.parametrize(
        "x,text", [(0.1, "0.1"), (1 / 3, "0.333333333"), (123456789.0, "123456789"), (1e-12, "1e-12"), (7, "7")]
    )
    def test_nine_significant_digits(self, x, text):
        assert format_float(x) == text

    def test_csv_layout(self):
        r = SweepResult("demo", 3, "abc")
        r.add("m", 5.0, Metric.BER, MetricValue(0.123456789123, 0.01, 100))
        lines = r.to_csv().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "demo,m,5,BER,0.123456789,0.01,100,3,abc"
        assert lines[2] == "" and "\r" not in r.to_csv()

    def test_duplicate_rows_rejected(self):
        r = SweepResult("demo", 3, "abc")
        r.add("m", 5.0, Metric.BER, MetricValue(0.1, 0.0, 1))
        r.add("m", 5.0, Metric.BER, MetricValue(0.2, 0.0, 1))
        with pytest.raises(ValueError, match="duplicate"):
            r.to_csv()


class TestDatasets:
    @settings(max_examples=50, deadline=None)
    @given(points=st.integers(3, 300), a=st.integers(1, 1000), b=st.integers(0, 1000), c=st.integers(1, 1000))
    def test_partition_is_disjoint_cover(self, points, a, b, c):
        groups = partition_lattice(points, {"train": a, "validation": b, "test": c}, np.random.default_rng(points))
        joined = np.concatenate(list(groups.values()))
        assert np.array_equal(np.sort(joined), np.arange(points))
        assert all(g.size >= 1 for g in groups.values())

    def test_partition_too_few_points(self):
        with pytest.raises(ValueError, match="cannot serve"):
            partition_lattice(2, {"train": 5, "validation": 5, "test": 5}, np.random.default_rng(0))

    def test_doa_split_sizes_and_disjoint_angles(self):
        cfg = tiny("doa_estimation")
        ds = generate_dataset(cfg)
        assert ds.split_counts == {"train": 600, "validation": 100, "test": 100}
        angle_sets = [set(ds.labels[idx, 0].tolist()) for idx in ds.splits.values()]
        assert not (angle_sets[0] & angle_sets[1] or angle_sets[0] & angle_sets[2] or angle_sets[1] & angle_sets[2])
        assert set().union(*angle_sets) <= set(angle_lattice(cfg.channel).tolist())

    def test_round_trip_is_bit_exact(self, tmp_path):
        ds = generate_dataset(tiny("gain_estimation"))
        back = read_dataset(write_dataset(ds, tmp_path / "g.phyds"))
        assert back.features.tobytes() == ds.features.tobytes()
        assert back.labels.tobytes() == ds.labels.tobytes()
        assert back.header() == ds.header()

    def test_regeneration_is_identical(self, tmp_path):
        cfg = tiny("mmwave_precoding")
        a = write_dataset(generate_dataset(cfg), tmp_path / "a.phyds").read_bytes()
        b = write_dataset(generate_dataset(cfg), tmp_path / "b.phyds").read_bytes()
        assert a == b

    @pytest.mark.parametrize("damage", ["magic", "truncate", "version"])
    def test_rejects_damaged_files(self, tmp_path, damage):
        path = write_dataset(generate_dataset(tiny("gain_estimation")), tmp_path / "g.phyds")
        data = path.read_bytes()
        if damage == "magic":
            data = b"X" + data[1:]
        elif damage == "truncate":
            data = data[:-8]
        else:
            data = data.replace(b"PHYLAB-DATASET 1", b"PHYLAB-DATASET 9", 1)
        path.write_bytes(data)
        with pytest.raises(ValueError):
            read_dataset(path)

    @pytest.mark.parametrize("name", ["ofdm_receiver", "noma_detection", "autoencoder_74"])
    def test_online_experiments_have_no_dataset(self, name):
        with pytest.raises(DatasetUnsupported):
            generate_dataset(ExperimentConfig.default(name))


class TestRegistry:
    def test_stable_order(self):
        assert [n.value for n in EXPERIMENTS] == [e.value for e in ExperimentName]

    def test_wrong_runner_rejected(self):
        with pytest.raises(ValueError, match="not a DOA config"):
            EXPERIMENTS[ExperimentName.DOA_ESTIMATION].runner(tiny("gain_estimation"))


EXPECTED_METHODS = {
    "ofdm_receiver": {f"{m}_{s}" for m in ("ls_zf", "perfect_zf", "dnn") for s in ("full_pilots", "reduced_pilots", "no_cp")},
    "noma_detection": {
        "sic_perfect_u1", "sic_perfect_u2", "sum_rate_perfect", "sum_rate_analytic",
        *(f"{m}_csi{q}dB{u}" for m in ("sic_ls", "dnn") for q in (0, 10) for u in ("_u1", "_u2")),
        "sum_rate_ls_csi0dB", "sum_rate_ls_csi10dB",
    },
    "autoencoder_74": {"autoencoder", "hamming_hard", "hamming_analytic"},
    "doa_estimation": {"dnn", "music"},
    "gain_estimation": {"ls", "dnn", "perfect"},
    "mmwave_precoding": {"svd_digital", "gmd_digital", "svd_hybrid", "gmd_hybrid", "dnn_hybrid"},
}


@pytest.fixture(scope="module")
def tiny_runs():
    return {name: run_experiment(tiny(name)) for name in EXPECTED_METHODS}


class TestPipelines:
    @pytest.mark.parametrize("name", list(EXPECTED_METHODS))
    def test_methods_and_rows(self, tiny_runs, name):
        res = tiny_runs[name].result
        assert set(res.methods()) == EXPECTED_METHODS[name]
        for method in res.methods():
            for metric in {r.metric for r in res.rows if r.method == method}:
                snr, value, se = res.curve(method, metric)
                assert list(snr) == [0.0, 10.0]
                assert np.all(np.isfinite(value)) and np.all(se >= 0)

    @pytest.mark.parametrize("name", list(EXPECTED_METHODS))
    def test_models_are_returned(self, tiny_runs, name):
        assert len(tiny_runs[name].models) >= 1

    @pytest.mark.parametrize("name", list(EXPECTED_METHODS))
    def test_csv_is_reproducible(self, tiny_runs, name):
        assert run_experiment(tiny(name)).result.to_csv() == tiny_runs[name].result.to_csv()

    def test_seed_changes_results(self, tiny_runs):
        other = run_experiment(tiny("doa_estimation", master_seed=2)).result.to_csv()
        assert other != tiny_runs["doa_estimation"].result.to_csv()


class TestOfdm:
    def test_noiseless_full_pilots_have_no_errors(self):
        cfg = tiny("ofdm_receiver", snr_grid_db=(300.0,), channel__include_dnn=False,
                   channel__scenarios=("full_pilots",))
        res = run_experiment(cfg).result
        assert res.curve("ls_zf_full_pilots", "BER")[1][0] == 0
        assert res.curve("perfect_zf_full_pilots", "BER")[1][0] == 0

    def test_removing_cp_hurts_ls(self):
        cfg = tiny("ofdm_receiver", snr_grid_db=(40.0,), channel__include_dnn=False, trials_per_point=300)
        res = run_experiment(cfg).result
        assert res.curve("ls_zf_no_cp", "BER")[1][0] > res.curve("ls_zf_full_pilots", "BER")[1][0]

    def test_flat_channel_matches_closed_form(self):
        cfg = tiny("ofdm_receiver", snr_grid_db=(0.0, 4.0, 8.0), channel__include_dnn=False, channel__fading="none",
                   channel__scenarios=("full_pilots",), channel__dnn_subcarriers=16, trials_per_point=2000)
        res = run_experiment(cfg).result
        snr, ber, _ = res.curve("perfect_zf_full_pilots", "BER")
        theory = 0.5 * np.vectorize(math.erfc)(np.sqrt(10 ** (snr / 10) / 2))
        np.testing.assert_allclose(ber, theory, rtol=0.1)


class TestNoma:
    def test_noiseless_perfect_csi_is_exact(self):
        cfg = tiny("noma_detection", snr_grid_db=(300.0,), channel__include_dnn=False)
        res = run_experiment(cfg).result
        assert res.curve("sic_perfect_u1", "BER")[1][0] == 0
        assert res.curve("sic_perfect_u2", "BER")[1][0] == 0

    def test_sum_rate_matches_analytic(self):
        cfg = tiny("noma_detection", snr_grid_db=(0.0, 10.0, 20.0), channel__include_dnn=False,
                   trials_per_point=4000)
        res = run_experiment(cfg).result
        _, rate, se = res.curve("sum_rate_perfect", "rate_bps_hz")
        _, exact, _ = res.curve("sum_rate_analytic", "rate_bps_hz")
        assert np.all(np.abs(rate - exact) <= 3 * se)
        np.testing.assert_allclose(exact, analytic_sum_rate([0.0, 10.0, 20.0]))

    def test_better_csi_is_not_worse(self):
        cfg = tiny("noma_detection", snr_grid_db=(10.0,), channel__include_dnn=False, trials_per_point=1000)
        res = run_experiment(cfg).result
        lo = res.curve("sum_rate_ls_csi0dB", "rate_bps_hz")[1][0]
        hi = res.curve("sum_rate_ls_csi10dB", "rate_bps_hz")[1][0]
        assert lo <= hi <= res.curve("sum_rate_perfect", "rate_bps_hz")[1][0]


class TestAutoencoder:
    def test_noiseless_decoding_is_perfect(self, tiny_runs):
        net = tiny_runs["autoencoder_74"].models["autoencoder"]
        assert np.array_equal(np.argmax(net.predict(np.eye(16)), axis=1), np.arange(16))

    @pytest.mark.parametrize("ebn0", [2.0, 4.0, 6.0])
    def test_hamming_simulation_matches_formula(self, ebn0):
        mv = hamming_hard_bler(ebn0, 200_000, np.random.default_rng(int(ebn0)))
        assert abs(mv.value - hamming_analytic_bler(ebn0)) <= 4 * mv.stderr


class TestDoa:
    def test_cells_tile_the_range(self):
        c = cell_centers(2.0, 20.0)
        assert c[0] == -19.0 and c[-1] == 19.0 and c.size == 20
        np.testing.assert_array_equal(cell_index(c, 2.0, 20.0), np.arange(20))
        assert cell_index(20.0, 2.0, 20.0) == 19

    def test_memorized_angles_are_not_worse(self):
        cfg = tiny("doa_estimation", channel__train_snr_db=(30.0, 30.0), train__num_iterations=800)
        ds = generate_dataset(cfg)
        net = train_doa_dnn(cfg, ds)
        p = cfg.channel
        errs = {}
        for split in ("train", "test"):
            theta = ds.labels[ds.splits[split], 0]
            y = np.stack([steering_vector(math.radians(t), UlaConfig(p.num_antennas)) for t in theta])
            est = dnn_estimate_deg(net, y, p)
            truth = cell_centers(p.cell_step_deg, p.max_angle_deg)[cell_index(theta, p.cell_step_deg, p.max_angle_deg)]
            errs[split] = np.mean(est != truth)
        assert errs["train"] <= errs["test"]
        assert errs["train"] <= 0.05

    def test_music_beats_quantization_floor(self, tiny_runs):
        cfg = tiny("doa_estimation", snr_grid_db=(20.0,), channel__include_dnn=False, trials_per_point=200,
                   channel__music_grid_step_deg=0.1, channel__music_snapshots=16)
        mse = run_experiment(cfg).result.curve("music", "MSE_deg2")[1][0]
        assert mse <= 0.1**2 / 3 + 0.01


class TestGain:
    def _single_path(self, theta, g, n=8):
        ula = UlaConfig(n)
        a = steering_vector(theta, ula)
        bits = np.ones((1, 4, 2), dtype=np.int8)
        y_data = np.repeat((g * a)[:, None], 4, axis=1)[None] * (1 + 1j) / math.sqrt(2)
        return GainFrames(np.array([[theta]]), np.array([g]), (g * a)[None, :, None].repeat(3, axis=2), y_data, bits)

    def test_ls_gain_is_exact_with_perfect_angle(self):
        p = tiny("gain_estimation").channel
        fr = self._single_path(0.3, 0.7 - 0.2j)
        g_hat = ls_gains(fr, np.array([[0.3]]), p)
        a = steering_vector(0.3, UlaConfig(8))
        assert g_hat[0, 0] == pytest.approx(np.vdot(a, fr.y_pilot[0, :, 0]) / 8)
        assert g_hat[0, 0] == pytest.approx(0.7 - 0.2j)

    def test_exact_channel_gives_perfect_detection(self):
        from phylab.classical import qpsk

        fr = self._single_path(-0.4, 1.3 + 0.5j)
        h = (1.3 + 0.5j) * steering_vector(-0.4, UlaConfig(8))
        np.testing.assert_array_equal(mrc_detect(h[None], fr.y_data, qpsk()), fr.bits)

    def test_nmse_decreases_with_snr(self):
        cfg = tiny("gain_estimation", snr_grid_db=(0.0, 10.0, 20.0), channel__include_dnn=False,
                   trials_per_point=300)
        _, nmse, _ = run_experiment(cfg).result.curve("ls", "NMSE")
        assert nmse[0] > nmse[1] > nmse[2]


class TestMmwave:
    def test_single_stream_svd_equals_gmd(self):
        cfg = tiny("mmwave_precoding", channel__num_streams=1, channel__include_dnn=False, trials_per_point=200,
                   snr_grid_db=(-10.0, -5.0))
        res = run_experiment(cfg).result
        _, svd, se = res.curve("svd_digital", "BER")
        _, gmd, se2 = res.curve("gmd_digital", "BER")
        assert np.all(np.abs(svd - gmd) <= 3 * np.hypot(se, se2) + 1e-12)

    def test_hybrid_not_better_than_digital(self, tiny_runs):
        res = tiny_runs["mmwave_precoding"].result
        for base in ("svd", "gmd"):
            _, dig, se_d = res.curve(f"{base}_digital", "BER")
            _, hyb, se_h = res.curve(f"{base}_hybrid", "BER")
            assert np.all(hyb >= dig - 3 * np.hypot(se_d, se_h))


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.cfg")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.name.value == path.stem
