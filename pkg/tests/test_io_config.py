import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_min.config import RunConfig, apply_overrides, parse_config
from hartree_min.io import (
    GS_HEADER,
    ContainerError,
    cache_path,
    format_record,
    get_ground_state,
    load_ground_state,
    parse_record,
    read_container,
    save_ground_state,
    write_container,
    write_csv,
)


def test_container_roundtrip(tmp_path):
    a = np.random.default_rng(0).normal(size=(16, 16, 16))
    write_container(tmp_path / "x.bin", "TEST-1", {"n": 16, "note": "hi"}, [a, 2 * a])
    meta, fields = read_container(tmp_path / "x.bin", "TEST-1")
    assert meta["note"] == "hi" and meta["fields"] == "2"
    np.testing.assert_array_equal(fields[1], 2 * a)


def test_container_wrong_header(tmp_path):
    write_container(tmp_path / "x.bin", "TEST-1", {"n": 16}, [np.zeros((16, 16, 16))])
    with pytest.raises(ContainerError):
        read_container(tmp_path / "x.bin", "TEST-2")


def test_container_truncated(tmp_path):
    p = tmp_path / "x.bin"
    write_container(p, "TEST-1", {"n": 16}, [np.zeros((16, 16, 16))])
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ContainerError):
        read_container(p, "TEST-1")


def test_ground_state_roundtrip(gs48, tmp_path):
    p = tmp_path / "gs.bin"
    save_ground_state(gs48, p)
    back = load_ground_state(p)
    assert back.a_star == gs48.a_star
    assert back.q.grid == gs48.q.grid
    np.testing.assert_array_equal(back.q.values, gs48.q.values)


def test_cache_hit(gs48, cache_root):
    path = cache_path(48, 32.0)
    assert path.parent == cache_root and path.exists()
    assert get_ground_state(48, 32.0).a_star == gs48.a_star
    assert read_container(path, GS_HEADER)[0]["a_star"] == repr(gs48.a_star)


def test_record_roundtrip():
    text = format_record({"a": 1.5, "b": None, "c": True, "d": "x y"})
    header, items = parse_record(text)
    assert header == "HARTREE-RECORD-1"
    assert items == {"a": "1.5", "b": "none", "c": "true", "d": "x y"}
    with pytest.raises(ContainerError):
        parse_record("H\nno separator here")


def test_csv():
    buf = io.StringIO()
    write_csv(buf, ["x", "y"], [[1.0, None], [2, "e"]])
    assert buf.getvalue() == "x,y\n1.0,none\n2,e\n"


def test_config_echo_reparses():
    cfg = RunConfig(a1=0.3, x1=(-3.0, 0.5, 0.0), eta=True, v1="power")
    assert parse_config(cfg.to_text()) == cfg


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(-1.0, 2.0), st.integers(16, 128), st.booleans())
def test_config_roundtrip_property(a1, beta, n, eta):
    cfg = RunConfig(a1=a1, beta=beta, n=n, eta=eta)
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize("text", ["bogus = 1", "a1 = x", "eta = maybe", "x1 = 1 2", "jobs = 0",
                                  "beta_unit = furlongs"])
def test_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_config_comments_and_overrides():
    cfg = parse_config("# comment\na1 = 0.2  # trailing\n")
    assert cfg.a1 == 0.2
    cfg = apply_overrides(cfg, {"a1": None, "a2": 0.7, "n": "64"})
    assert cfg.a1 == 0.2 and cfg.a2 == 0.7 and cfg.n == 64
    with pytest.raises(ValueError):
        apply_overrides(cfg, {"nope": 1})
