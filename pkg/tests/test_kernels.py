from array import array

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hisepq import _kernels, _pykernels
from hisepq._kernels import available_backends

BACKENDS = available_backends()
needs_both = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


def test_selected_backend_is_known():
    assert _kernels.BACKEND in BACKENDS
    assert _kernels.EMPTY == _pykernels.EMPTY


def test_scan_heads_reports_due_and_missed():
    heads = array("q", [5, 7, _pykernels.EMPTY, 7, 3])
    for k in BACKENDS.values():
        assert k.scan_heads(heads, 7) == ([1, 3], 0)
        assert k.scan_heads(heads, 2) == ([], -1)
        assert k.min_head(heads) == 3


def test_scatter_mask_statuses():
    for k in BACKENDS.values():
        codes = bytearray(10)
        assert k.scatter_mask(codes, (0b101).to_bytes(1, "little"), 4, 3) == 0
        assert list(codes) == [0, 0, 0, 0, 3, 0, 3, 0, 0, 0]
        assert k.scatter_mask(codes, b"\x01", 4, 1) == 2
        assert k.scatter_mask(codes, b"\x80", 4, 1) == 1
        assert list(codes) == [0, 0, 0, 0, 3, 0, 3, 0, 0, 0]


def test_sorter_update_replaces_last_slot():
    for k in BACKENDS.values():
        counts = array("q", [9, 7, 5, 3, 4])
        sorter = array("q", [0, 1, 2, 3])
        assert k.sorter_update(sorter, 4, counts, 4) == 4
        assert list(sorter) == [0, 1, 2, 4]


@needs_both
@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 40), max_size=64), st.integers(0, 40))
def test_scan_parity(heads, clock):
    a = array("q", heads)
    assert BACKENDS["cython"].scan_heads(a, clock) == _pykernels.scan_heads(a, clock)
    assert BACKENDS["cython"].min_head(a) == _pykernels.min_head(a)


@needs_both
@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=24), st.binary(max_size=14), st.integers(0, 100), st.integers(1, 3))
def test_mask_and_merge_parity(codes, mask, base, code):
    py, cy = bytearray(codes), bytearray(codes)
    assert BACKENDS["cython"].scatter_mask(cy, mask, base, code) == _pykernels.scatter_mask(py, mask, base, code)
    assert py == cy
    src = bytearray(b % 4 for b in mask[: len(codes)].ljust(len(codes), b"\0"))
    assert BACKENDS["cython"].merge_codes(cy, src) == _pykernels.merge_codes(py, src)
    assert py == cy


@needs_both
@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 9), max_size=120), st.integers(0, 8))
def test_sorter_parity(stream, m):
    states = {}
    counts = array("q", bytes(8 * 10))
    sorters = {name: array("q", bytes(8 * m)) for name in ("py", "cy")}
    sizes = {"py": 0, "cy": 0}
    for s in stream:
        entry = states.setdefault(s, len(states))
        counts[entry] += 1
        sizes["py"] = _pykernels.sorter_update(sorters["py"], sizes["py"], counts, entry)
        sizes["cy"] = BACKENDS["cython"].sorter_update(sorters["cy"], sizes["cy"], counts, entry)
        assert sizes["py"] == sizes["cy"]
        assert sorters["py"] == sorters["cy"]
