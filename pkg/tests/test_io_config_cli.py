import json
import struct

import numpy as np
import pytest

from wavecomposite import io
from wavecomposite.cli import main
from wavecomposite.config import DEFAULTS, load_config, parse_modes
from wavecomposite.errors import DataError, UsageError

SMALL = """
grid.xmin = -60
grid.xmax = 60
grid.ncells = 512
time.T = 2
time.checkpoints = 1, 2
ansatz.times = 1, 2
rarefaction.times = 1, 2
periodic.n = 32
periodic.T = 10
periodic.sample_dt = 0.05
riemann.n = 41
"""


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=20), rng.normal(size=20) * 1e-300
    io.write_csv(tmp_path / "t.csv", ["a", "b"], [a, b])
    header, cols = io.read_csv(tmp_path / "t.csv")
    assert header == ["a", "b"]
    assert np.array_equal(cols["a"], a) and np.array_equal(cols["b"], b)


def test_csv_errors(tmp_path):
    with pytest.raises(DataError):
        io.write_csv(tmp_path / "x.csv", ["a"], [np.ones(2), np.ones(2)])
    with pytest.raises(DataError):
        io.write_csv(tmp_path / "x.csv", ["a", "b"], [np.ones(2), np.ones(3)])
    with pytest.raises(FileNotFoundError):
        io.read_csv(tmp_path / "missing.csv")


def test_json_handles_special_values(tmp_path):
    io.write_json(tmp_path / "r.json", {"a": np.float64(np.nan), "b": np.inf, "c": np.arange(3), "d": np.bool_(True)})
    d = io.read_json(tmp_path / "r.json")
    assert d == {"a": "nan", "b": "inf", "c": [0, 1, 2], "d": True}


def test_snapshot_round_trip_and_layout(tmp_path):
    cols = np.vstack([np.linspace(0, 1, 5)] * 7)
    io.write_snapshot(tmp_path / "s.bin", 2.5, -1.0, 1.0, cols)
    raw = (tmp_path / "s.bin").read_bytes()
    assert raw[:16] == io.SNAPSHOT_MAGIC and len(io.SNAPSHOT_MAGIC) == 16
    assert struct.unpack_from("<I", raw, 16)[0] == io.SNAPSHOT_VERSION
    snap = io.read_snapshot(tmp_path / "s.bin")
    assert snap.t == 2.5 and (snap.x_min, snap.x_max) == (-1.0, 1.0)
    assert np.array_equal(snap.columns, cols) and np.array_equal(snap.column("theta"), cols[3])


@pytest.mark.parametrize("damage", ["magic", "truncate", "version"])
def test_snapshot_corruption_detected(tmp_path, damage):
    io.write_snapshot(tmp_path / "s.bin", 0.0, 0.0, 1.0, np.zeros((2, 3)))
    raw = bytearray((tmp_path / "s.bin").read_bytes())
    if damage == "magic":
        raw[0] ^= 0xFF
    elif damage == "truncate":
        raw = raw[:-8]
    else:
        raw[16] = 99
    (tmp_path / "s.bin").write_bytes(bytes(raw))
    with pytest.raises(DataError):
        io.read_snapshot(tmp_path / "s.bin")


def test_atomic_write_leaves_no_partial_file(tmp_path):
    with pytest.raises(RuntimeError):
        with io.atomic_open(tmp_path / "f.txt") as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_config_defaults_and_overrides():
    cfg = load_config(text="delta = 0.05\n# comment\ngrid.ncells = 1024  # trailing\n")
    assert cfg.get_float("delta") == 0.05 and cfg.get_int("grid.ncells") == 1024
    assert cfg.get_float("gas.gamma") == pytest.approx(5 / 3)
    assert cfg.right is None
    assert cfg.perturbation.eps1 == pytest.approx(1e-2, rel=1e-12)
    assert cfg.digest() != load_config().digest()
    assert load_config(text=cfg.to_text()).digest() == cfg.digest()


@pytest.mark.parametrize("text", ["bogus = 1", "delta = 1\ndelta = 2", "no equals sign", "right.v = 1"])
def test_config_errors(text):
    with pytest.raises(UsageError):
        cfg = load_config(text=text)
        cfg.right


def test_config_type_errors():
    cfg = load_config(text="grid.ncells = 10.5\ntime.T = abc\noutput.csv_snapshots = maybe")
    for getter, key in ((cfg.get_int, "grid.ncells"), (cfg.get_float, "time.T"),
                        (cfg.get_bool, "output.csv_snapshots")):
        with pytest.raises(UsageError):
            getter(key)


def test_parse_modes():
    assert parse_modes("1:0.5:0, 3:0:-1") == ((1, 0.5, 0.0), (3, 0.0, -1.0))
    assert parse_modes("") == ()
    with pytest.raises(UsageError):
        parse_modes("1:2")


def test_default_keys_documented():
    for key in ("gas.R", "left.theta", "grid.ncells", "time.cfl", "weights.sigma", "output.dir"):
        assert key in DEFAULTS


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL)
    return p


@pytest.mark.parametrize("sub,files", [
    ("riemann", ["riemann.csv", "pattern.json"]),
    ("profile-contact", ["contact_profile.csv", "contact_profile.json"]),
    ("profile-rarefaction", ["rarefaction_t1.csv", "rarefaction_norms.csv"]),
    ("periodic", ["periodic_minus.csv", "periodic_plus.csv", "periodic.json"]),
])
def test_cli_subcommands(small_config, tmp_path, sub, files):
    out = tmp_path / sub
    assert main([sub, "--config", str(small_config), "--out", str(out)]) == 0
    for f in files:
        assert (out / f).exists()


def test_cli_riemann_csv_header(small_config, tmp_path):
    main(["riemann", "--config", str(small_config), "--out", str(tmp_path)])
    header, cols = io.read_csv(tmp_path / "riemann.csv")
    assert header == ["xi", "v", "u", "theta"] and cols["xi"].size == 41


def test_cli_missing_config(tmp_path):
    assert main(["riemann", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]) == 2


def test_cli_simulate_and_verify(small_config, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(small_config), "--out", str(out)]) == 0
    header, _ = io.read_csv(out / "norms.csv")
    assert header[:3] == ["t", "Linf_diff_ansatz", "Linf_diff_riemann"]
    snap = io.read_snapshot(out / "snapshot_t0002.000.bin")
    assert snap.columns.shape == (7, 512)
    code = main(["verify", "--config", str(small_config), "--out", str(out)])
    rep = json.loads((out / "report.json").read_text())
    # 512 cells cannot resolve the contact layer, so the resolution verdict fails
    assert code == 1 and not rep["verdicts"]["resolution"]["pass"]
    assert rep["verdicts"]["conservation"]["pass"] and rep["verdicts"]["initial_identity_exact"]["pass"]
    first = (out / "report.json").read_text()
    main(["verify", "--config", str(small_config), "--out", str(out)])
    assert (out / "report.json").read_text() == first


def test_cli_trivial_run_passes(tmp_path):
    cfg = tmp_path / "flat.cfg"
    cfg.write_text(SMALL + "delta = 0\npert.eps1 = 0\n")
    out = tmp_path / "flat"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 0


def test_cli_verify_missing_run(tmp_path):
    assert main(["verify", "--out", str(tmp_path / "empty")]) == 2
